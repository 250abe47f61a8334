//! Certificates against the word oracle, and the overlap bound on random pairs.

use freecert::certifier::{analyze_pair, certify, three_points_check, CertifyParams, Criterion, ExponentClaim};
use freecert::oracle::{freeness_to_depth, OracleVerdict};
use freecert::rational::int;
use freecert::{build_model, ModelSpec, Point, Word};
use proptest::prelude::*;

fn reduced_word(max_len: usize) -> impl Strategy<Value = Word> {
    prop::collection::vec(prop::sample::select(vec![1, -1, 2, -2]), 1..=max_len)
        .prop_map(|v| Word(v).free_reduce())
        .prop_filter("non-trivial", |w| !w.is_empty())
}

fn commute(a: &Word, b: &Word) -> bool {
    a.concat(b).concat(&a.formal_inverse()).concat(&b.formal_inverse()).free_reduce().is_empty()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn nielsen_claims_hold_at_covered_exponents(a in reduced_word(3), b in reduced_word(3), dn in 0i64..3, dm in 0i64..3) {
        prop_assume!(!commute(&a, &b));
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let mut p = CertifyParams::new(Criterion::Nielsen);
        p.oracle_depth = 4;
        let cert = certify(&m, &a, &b, &p).unwrap();
        let ExponentClaim::AtLeast { n_min, m_min } = cert.exponents else { panic!("claim form") };
        let r = freeness_to_depth(&m, &m.power(&a, n_min + dn), &m.power(&b, m_min + dm), 4).unwrap();
        prop_assert_eq!(r.verdict, OracleVerdict::FreeToDepth);
    }

    #[test]
    fn overlap_respects_bound(a in reduced_word(4), b in reduced_word(4)) {
        prop_assume!(!commute(&a, &b));
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let an = analyze_pair(&m, &a, &b, &CertifyParams::new(Criterion::Nielsen), false).unwrap();
        let c = &an.constants;
        let tr = an.profile_a.tr_upper().max(an.profile_b.tr_upper());
        let bound = int(4 * (c.p * c.k20 * c.l20) as i128) * tr + int(100 * an.delta as i128);
        prop_assert!(int(an.d() as i128) < bound);
    }

    #[test]
    fn commuting_pairs_never_certified(a in reduced_word(2), k in 1i64..4, crit in prop::sample::select(Criterion::ALL.to_vec())) {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let b = m.power(&a, k);
        prop_assert!(certify(&m, &a, &b, &CertifyParams::new(crit)).is_err());
    }

    #[test]
    fn three_points_bound_follows_condition(steps in prop::collection::vec(reduced_word(6), 2..7), eps in 1i128..4) {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let mut cur = Word::empty();
        let mut pts = vec![m.origin()];
        for s in &steps {
            cur = m.canon(&cur.concat(s));
            pts.push(Point::Word(cur.clone()));
        }
        let rep = three_points_check(&m, &pts, int(eps), 0).unwrap();
        if rep.holds {
            prop_assert!(rep.progress_violation.is_none());
            prop_assert!(rep.progress_lhs >= rep.progress_rhs);
        }
    }
}

#[test]
fn doubled_model_certificates_pass_oracle() {
    let m = build_model(&ModelSpec::free_times_z2(2)).unwrap();
    for (a, b) in [(vec![1], vec![2]), (vec![1, 3], vec![2, 2])] {
        let cert = certify(&m, &Word(a.clone()), &Word(b.clone()), &CertifyParams::new(Criterion::Nielsen)).unwrap();
        let (n, k) = cert.exponents.representative();
        let r = freeness_to_depth(&m, &m.power(&Word(a), n), &m.power(&Word(b), k), 5).unwrap();
        assert_eq!(r.verdict, OracleVerdict::FreeToDepth);
    }
}
