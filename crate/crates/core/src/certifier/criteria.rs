//! The freeness criteria. Each one refuses with the first failed check.

use super::certificate::*;
use super::chain::build_witness_chain;
use super::constants::*;
use super::{refuse, CertifyError, CertifyResult, PairAnalysis, RefusalReason};
use crate::error::Error;
use crate::isometry::{axis_invariants_hold, AxisMode, Independence, TranslationLength};
use crate::model::ActionModel;
use crate::oracle::{embedding_fit, enumerate_reduced_words, freeness_to_depth, OracleVerdict};
use crate::rational::{self, ceil_int, int, least_multiple, Rational};
use crate::word::Word;

/// Oracle depth used before any sharp-experimental certificate.
pub const SHARP_ORACLE_DEPTH: u32 = 8;
/// Witness chains are built for every case-(I) word up to this length.
const WITNESS_WORD_LENGTH: u32 = 3;

#[derive(Default)]
struct Checks {
    items: Vec<(Check, RefusalReason)>,
}

impl Checks {
    fn push(&mut self, reason: RefusalReason, name: &str, lhs: Rational, rel: &str, rhs: Rational) -> bool {
        let c = Check::new(name, lhs, rel, rhs);
        let holds = c.holds;
        self.items.push((c, reason));
        holds
    }

    fn list(&self) -> Vec<Check> {
        self.items.iter().map(|(c, _)| c.clone()).collect()
    }

    fn first_failure(&self) -> Option<RefusalReason> {
        self.items.iter().find(|(c, _)| !c.holds).map(|(_, r)| r.clone())
    }

    fn settle(&self, crit: Criterion) -> CertifyResult<()> {
        match self.first_failure() {
            Some(r) => refuse(crit, r, self.list()),
            None => Ok(()),
        }
    }
}

fn r(n: u64) -> Rational {
    int(n as i128)
}

fn d1(delta: u64) -> Rational {
    r(100 * (delta + 1))
}

fn preflight(an: &PairAnalysis, crit: Criterion, independence_first: bool) -> CertifyResult<()> {
    for p in [&an.profile_a, &an.profile_b] {
        if p.hyperbolic != crate::isometry::Verdict::Yes {
            return refuse(crit, RefusalReason::NotHyperbolic { element: format!("{}", p.element) }, vec![]);
        }
    }
    let dep = match an.independence {
        Independence::Dependent { p, q } => Some(RefusalReason::Dependent { p, q }),
        Independence::IndependentToBound { .. } => None,
    };
    let unbounded = an.overlap.as_ref().is_some_and(|o| o.unbounded_in_window);
    match (independence_first, dep, unbounded) {
        (true, Some(d), _) => refuse(crit, d, vec![]),
        (_, _, true) => refuse(crit, RefusalReason::OverlapUnbounded, vec![]),
        (_, Some(d), _) => refuse(crit, d, vec![]),
        _ => Ok(()),
    }
}

fn record(model: &ActionModel, w: &Word) -> ElementRecord {
    ElementRecord { text: model.render(w), word: w.clone() }
}

fn skeleton(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams, crit: Criterion, epsilon: Rational, claim: ExponentClaim) -> Certificate {
    let delta_prov = if an.delta_exact { Provenance::PaperFormula } else { Provenance::BruteForced };
    let mut constants = ConstantsBlock::with_base(&an.constants, delta_prov);
    if let Some(ov) = &an.overlap {
        constants.d = Some(ConstantValue::int(ov.d as i128, Provenance::BruteForced));
    }
    Certificate {
        schema_version: SCHEMA_VERSION,
        model: model.spec().clone(),
        criterion: crit,
        elements: Elements { a: record(model, &an.a), b: record(model, &an.b) },
        swapped: false,
        epsilon_mode: params.epsilon_mode,
        epsilon,
        exponents: claim,
        composite: None,
        branch: None,
        constants,
        checks: Vec::new(),
        caveats: an.caveats.clone(),
        predicted_embedding: None,
        base_point: an.base.as_ref().map(|b| b.0.clone()),
        overlap_radius: an.c,
        oracle: None,
        witness: None,
        notes: Vec::new(),
        params: params.clone(),
    }
}

/// `L' = min(tr(a^n), tr(b^m))/λ`, `λ = (ε/100 - δ)^-1 · max(tr(a^n), tr(b^m))`.
fn nielsen_embedding(n: i64, m: i64, ta: &TranslationLength, tb: &TranslationLength, eps: Rational, delta: u64) -> Rational {
    let lo = (int(n as i128) * ta.lower).min(int(m as i128) * tb.lower);
    let hi = (int(n as i128) * ta.upper).max(int(m as i128) * tb.upper);
    let lambda = hi / (eps / int(100) - r(delta));
    lo / lambda
}

/// Ratio `1/L` for `L = Q·λ_0/500`, `λ_0 = (E/100 - δ)^-1 · 2 tr(f^n)`.
fn prop7_embedding(n: i64, q: i128, e: Rational, tf: &TranslationLength, delta: u64) -> Rational {
    let lambda0 = int(2) * int(n as i128) * tf.upper / (e / int(100) - r(delta));
    let l = int(q) * lambda0 / int(500);
    l.recip()
}

fn oracle_error(e: Error) -> CertifyError {
    CertifyError::Model(e)
}

/// Runs the oracle on the claim's representatives and the embedding fit
/// at the base point; a relation or a failed bound refuses.
fn back_check(model: &ActionModel, an: &PairAnalysis, mut cert: Certificate, depth: u32) -> CertifyResult<Certificate> {
    if depth == 0 {
        return Ok(cert);
    }
    let mut reps = vec![cert.exponents.representative()];
    if let Some(c) = &cert.composite {
        reps.push(c.representative());
    }
    for (k, &(n, m)) in reps.iter().enumerate() {
        let an_ = model.power(&an.a, n);
        let bm = model.power(&an.b, m);
        let rep = freeness_to_depth(model, &an_, &bm, depth).map_err(oracle_error)?;
        if rep.verdict == OracleVerdict::RelationFound {
            let word = rep.relation.map(|w| w.render(&['x', 'y'])).unwrap_or_default();
            return refuse(cert.criterion, RefusalReason::OracleRelation { word }, cert.checks.clone());
        }
        if k == 0 {
            let mut summary = OracleSummary {
                depth,
                exponents: (n, m),
                verdict: rep.verdict,
                words_checked: rep.words_checked,
                min_displacement_ratio: None,
            };
            if let (Some(pred), Some(x)) = (cert.predicted_embedding, &cert.base_point) {
                let fit = embedding_fit(model, &an_, &bm, x, depth, Some(pred)).map_err(oracle_error)?;
                summary.min_displacement_ratio = fit.min_displacement_ratio;
                if fit.predicted_holds != Some(true) {
                    return refuse(cert.criterion, RefusalReason::EmbeddingBound, cert.checks.clone());
                }
            }
            cert.oracle = Some(summary);
        }
    }
    Ok(cert)
}

fn period_checks(checks: &mut Checks, an: &PairAnalysis) {
    let p = r(an.constants.p);
    checks.push(RefusalReason::PeriodBound, "P·tr_lower(a) >= 1", p * an.profile_a.tr_lower(), ">=", int(1));
    checks.push(RefusalReason::PeriodBound, "P·tr_lower(b) >= 1", p * an.profile_b.tr_lower(), ">=", int(1));
}

/// Exponents from the Nielsen inequality `n·tr(a) >= D + ε`.
pub fn nielsen_certify(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams) -> CertifyResult<Certificate> {
    let crit = Criterion::Nielsen;
    preflight(an, crit, false)?;
    let delta = an.delta;
    let sharp = params.epsilon_mode == EpsilonMode::SharpExperimental;
    let eps = if sharp {
        params.epsilon.ok_or_else(|| Error::Precondition("sharp-experimental mode needs an epsilon".into()))?
    } else {
        d1(delta)
    };
    let mut checks = Checks::default();
    checks.push(RefusalReason::EpsilonTooSmall, "epsilon > 100·delta", eps, ">", r(100 * delta));
    checks.settle(crit)?;
    let (ta, tb) = (&an.profile_a.translation, &an.profile_b.translation);
    let target = r(an.d()) + eps;
    let (n, m) = match params.exponents {
        Some((n, m)) if n >= 1 && m >= 1 => (n, m),
        Some(_) => return Err(Error::Precondition("exponents must be positive".into()).into()),
        None => (least_multiple(&ta.lower, &target) as i64, least_multiple(&tb.lower, &target) as i64),
    };
    let depth = if sharp { params.oracle_depth.max(SHARP_ORACLE_DEPTH) } else { params.oracle_depth };
    if sharp {
        // oracle first: sharp constants are never trusted on their own
        let rep = freeness_to_depth(model, &model.power(&an.a, n), &model.power(&an.b, m), depth)?;
        if let Some(w) = rep.relation {
            return refuse(crit, RefusalReason::OracleRelation { word: w.render(&['x', 'y']) }, checks.list());
        }
    }
    checks.push(RefusalReason::NielsenInequality, "n·tr_lower(a) >= D + epsilon", int(n as i128) * ta.lower, ">=", target);
    checks.push(RefusalReason::NielsenInequality, "m·tr_lower(b) >= D + epsilon", int(m as i128) * tb.lower, ">=", target);
    checks.settle(crit)?;
    let claim = match params.exponents {
        Some(_) => ExponentClaim::Exactly { n, m },
        None => ExponentClaim::AtLeast { n_min: n, m_min: m },
    };
    let mut cert = skeleton(model, an, params, crit, eps, claim);
    cert.checks = checks.list();
    cert.predicted_embedding = Some(nielsen_embedding(n, m, ta, tb, eps, delta));
    back_check(model, an, cert, depth)
}

/// Comparable translation lengths: `tr(a)/q <= tr(b) <= tr(a)`.
pub fn prop6_certify(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams) -> CertifyResult<Certificate> {
    let crit = Criterion::Prop6;
    preflight(an, crit, false)?;
    let (ta, tb) = (&an.profile_a.translation, &an.profile_b.translation);
    let q_prov = if params.q.is_some() { Provenance::ConfigOverride } else { Provenance::PaperFormula };
    let q = params.q.unwrap_or_else(|| (ta.upper / tb.lower).max(int(1)));
    let c = &an.constants;
    let mut checks = Checks::default();
    checks.push(RefusalReason::RatioPrecondition, "q >= 1", q, ">=", int(1));
    checks.push(RefusalReason::RatioPrecondition, "tr_upper(b) <= tr_lower(a)", tb.upper, "<=", ta.lower);
    checks.push(RefusalReason::RatioPrecondition, "tr_upper(a)/q <= tr_lower(b)", ta.upper / q, "<=", tb.lower);
    period_checks(&mut checks, an);
    checks.push(RefusalReason::OverlapBound, "D < 4PKL·tr_upper(a) + 100δ", r(an.d()), "<", overlap_bound(c, ta, false));
    let n6v = n6(c);
    let m6 = ceil_int(&(q * int(n6v)));
    let target = r(an.d()) + d1(an.delta);
    checks.push(RefusalReason::NielsenInequality, "N6·tr_lower(a) >= D + 100(δ+1)", int(n6v) * ta.lower, ">=", target);
    checks.push(RefusalReason::NielsenInequality, "ceil(q·N6)·tr_lower(b) >= D + 100(δ+1)", int(m6) * tb.lower, ">=", target);
    checks.settle(crit)?;
    let mut cert = skeleton(model, an, params, crit, d1(an.delta), ExponentClaim::AtLeast { n_min: n6v as i64, m_min: m6 as i64 });
    cert.checks = checks.list();
    cert.constants.n6 = Some(ConstantValue::int(n6v, Provenance::PaperFormula));
    cert.constants.q = Some(ConstantValue::new(q, q_prov));
    cert.predicted_embedding = Some(nielsen_embedding(n6v as i64, m6 as i64, ta, tb, d1(an.delta), an.delta));
    back_check(model, an, cert, params.oracle_depth)
}

fn case_one_words() -> Vec<Word> {
    enumerate_reduced_words(2, WITNESS_WORD_LENGTH)
        .expect("valid enumeration")
        .into_iter()
        .filter(|w| w.letters()[0].abs() == 1)
        .collect()
}

fn witness_summary(model: &ActionModel, an: &PairAnalysis, n: i64, e: Rational, q: i128) -> CertifyResult<WitnessSummary> {
    let (x, y) = an.base.clone().ok_or_else(|| Error::Precondition("no base points".into()))?;
    let fnn = model.power(&an.a, n);
    let words = case_one_words();
    let mut failures = Vec::new();
    for w in &words {
        let ch = build_witness_chain(model, w, &fnn, &an.b, &x, &y, e, q as i64, an.delta)?;
        for f in ch.failures {
            failures.push(format!("{}: {f}", w.render(&['x', 'y'])));
        }
    }
    Ok(WitnessSummary { words: words.len(), all_hold: failures.is_empty(), failures })
}

/// Small `tr(g)` against `tr(f)`: `<g, f^n>` free for `n >= N_7`.
pub fn prop7_certify(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams) -> CertifyResult<Certificate> {
    let crit = Criterion::Prop7;
    preflight(an, crit, false)?;
    let (tf, tg) = (&an.profile_a.translation, &an.profile_b.translation);
    let c = &an.constants;
    let d = an.d();
    let mut checks = Checks::default();
    checks.push(RefusalReason::Condition1Failed, "tr_upper(g) <= tr_lower(f)", tg.upper, "<=", tf.lower);
    checks.push(RefusalReason::Condition2Failed, "D <= 2·tr_lower(f)", r(d), "<=", int(2) * tf.lower);
    checks.settle(crit)?;
    let nums = match prop7_numbers(d, c, tf, tg) {
        Ok(n) => n,
        Err(Prop7Failure::QIntervalEmpty { low, high }) => {
            checks.push(RefusalReason::QIntervalEmpty, "Q interval non-empty", low, "<=", high);
            return refuse(crit, RefusalReason::QIntervalEmpty, checks.list());
        }
        Err(_) => unreachable!("conditions checked above"),
    };
    period_checks(&mut checks, an);
    let n7 = nums.n7;
    checks.push(RefusalReason::NielsenInequality, "N7·tr_lower(f) >= 1000E", int(n7) * tf.lower, ">=", int(1000) * nums.e);
    checks.push(RefusalReason::QIntervalEmpty, "Q >= N7·tr_upper(f)/(100·tr_lower(g))", int(nums.q), ">=", nums.q_low);
    checks.push(RefusalReason::QIntervalEmpty, "Q <= N7·tr_lower(f)/(50·tr_upper(g))", int(nums.q), "<=", nums.q_high);
    checks.settle(crit)?;
    let mut cert = skeleton(model, an, params, crit, d1(an.delta), ExponentClaim::FirstAtLeast { n_min: n7 as i64 });
    cert.checks = checks.list();
    cert.constants.e = Some(ConstantValue::new(nums.e, Provenance::PaperFormula));
    cert.constants.n7 = Some(ConstantValue::int(n7, Provenance::PaperFormula));
    cert.constants.big_q = Some(ConstantValue::int(nums.q, Provenance::PaperFormula));
    cert.notes.push(format!(
        "Q interval [{}, {}], chosen Q = {}",
        rational::render(&nums.q_low),
        rational::render(&nums.q_high),
        nums.q
    ));
    let ratio = prop7_embedding(n7 as i64, nums.q, nums.e, tf, an.delta);
    cert.notes.push(format!("embedding: L·|w(x) - x| >= |w| with L = {}", rational::render(&ratio.recip())));
    cert.predicted_embedding = Some(ratio);
    cert.witness = Some(witness_summary(model, an, n7 as i64, nums.e, nums.q)?);
    back_check(model, an, cert, params.oracle_depth)
}

/// Per-pair threshold with no comparison of `tr(f)` and `tr(g)`.
pub fn prop8_certify(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams) -> CertifyResult<Certificate> {
    let crit = Criterion::Prop8;
    preflight(an, crit, false)?;
    let (ta, tb) = (&an.profile_a.translation, &an.profile_b.translation);
    let c = &an.constants;
    let d = an.d();
    let mut checks = Checks::default();
    period_checks(&mut checks, an);
    let (e_ab, n_ab) = prop8_threshold(d, c, ta, tb);
    let (e_ba, n_ba) = prop8_threshold(d, c, tb, ta);
    for (label, e, n, tf, tg) in [("f=a", e_ab, n_ab, ta, tb), ("f=b", e_ba, n_ba, tb, ta)] {
        checks.push(RefusalReason::NielsenInequality, &format!("{label}: N·tr_lower(f) >= 1000E"), int(n) * tf.lower, ">=", int(1000) * e);
        checks.push(RefusalReason::QIntervalEmpty, &format!("{label}: 100·tr_upper(g) <= N·tr_lower(f)"), int(100) * tg.upper, "<=", int(n) * tf.lower);
    }
    checks.settle(crit)?;
    let n = n_ab.max(n_ba);
    let mut cert = skeleton(model, an, params, crit, d1(an.delta), ExponentClaim::FirstAtLeast { n_min: n_ab as i64 });
    cert.composite = Some(ExponentClaim::SumAtLeast { sum_min: 2 * n as i64 });
    cert.checks = checks.list();
    cert.constants.e = Some(ConstantValue::new(e_ab, Provenance::PaperFormula));
    cert.constants.n = Some(ConstantValue::int(n_ab, Provenance::PaperFormula));
    cert.notes.push(format!("one-sided thresholds: N(a,b) = {n_ab}, N(b,a) = {n_ba}; composite uses N = {n}"));
    match choose_q(n_ab, ta, tb) {
        Ok((q, _, _)) => {
            cert.constants.big_q = Some(ConstantValue::int(q, Provenance::PaperFormula));
            cert.predicted_embedding = Some(prop7_embedding(n_ab as i64, q, e_ab, ta, an.delta));
        }
        Err(_) => cert.notes.push("no integer Q fits the conservative interval; embedding bound not predicted".into()),
    }
    back_check(model, an, cert, params.oracle_depth)
}

fn theorem_core(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams, quasi: bool) -> CertifyResult<Certificate> {
    let crit = if quasi { Criterion::Theorem14Mode } else { Criterion::Theorem9 };
    preflight(an, crit, true)?;
    for axis in [&an.axis_a, &an.axis_b].into_iter().flatten() {
        let mode_ok = quasi || axis.mode == AxisMode::GeodesicAxis;
        if !mode_ok || !axis_invariants_hold(axis, an.delta) {
            return refuse(crit, RefusalReason::AxisMode { element: format!("{}", axis.element) }, vec![]);
        }
    }
    let (pa, pb) = (&an.profile_a.translation, &an.profile_b.translation);
    let swapped = if pb.upper <= pa.lower {
        false
    } else if pa.upper <= pb.lower {
        true
    } else {
        let checks = vec![Check::new("tr_upper(b) <= tr_lower(a)", pb.upper, "<=", pa.lower)];
        return refuse(crit, RefusalReason::RatioPrecondition, checks);
    };
    let (ta, tb) = if swapped { (pb, pa) } else { (pa, pb) };
    let c = &an.constants;
    let delta = an.delta;
    let d = an.d();
    let n6v = n6(c);
    let n7v = n7_closed(c);
    let m = m_const(c);
    let mut checks = Checks::default();
    period_checks(&mut checks, an);
    let l5 = if quasi { "D < 4PKL·tr_upper(a) + 100δ + 10000δ" } else { "D < 4PKL·tr_upper(a) + 100δ" };
    checks.push(RefusalReason::OverlapBound, l5, r(d), "<", overlap_bound(c, ta, quasi));
    checks.settle(crit)?;
    let target = r(d) + d1(delta);
    let mut notes = vec![N7_DERIVATION.to_string()];
    let mut e_used = None;
    let mut q_used = None;
    let (branch, predicted) = if tb.lower * int(m) > int(n6v) * ta.upper {
        let q = int(m) / int(n6v);
        checks.push(RefusalReason::NoBranch, "tr_lower(b)·M > N6·tr_upper(a)", tb.lower * int(m), ">", int(n6v) * ta.upper);
        checks.push(RefusalReason::RatioPrecondition, "tr_upper(a)/q <= tr_lower(b)", ta.upper / q, "<=", tb.lower);
        checks.push(RefusalReason::NielsenInequality, "N6·tr_lower(a) >= D + 100(δ+1)", int(n6v) * ta.lower, ">=", target);
        checks.push(RefusalReason::NielsenInequality, "M·tr_lower(b) >= D + 100(δ+1)", int(m) * tb.lower, ">=", target);
        q_used = Some(q);
        ("step-1: prop6 with q = M/N6", nielsen_embedding(m as i64, m as i64, ta, tb, d1(delta), delta))
    } else if int(m) * tb.lower > target {
        checks.push(RefusalReason::NielsenInequality, "M·tr_lower(b) > D + 100(δ+1)", int(m) * tb.lower, ">", target);
        checks.push(RefusalReason::NielsenInequality, "M·tr_lower(a) > D + 100(δ+1)", int(m) * ta.lower, ">", target);
        ("step-2: nielsen", nielsen_embedding(m as i64, m as i64, ta, tb, d1(delta), delta))
    } else if r(d) <= int(2) * ta.lower {
        let e = e_const(d, c, ta);
        checks.push(RefusalReason::Condition2Failed, "D <= 2·tr_lower(a)", r(d), "<=", int(2) * ta.lower);
        checks.push(RefusalReason::NielsenInequality, "M·tr_lower(a) >= 1000E", int(m) * ta.lower, ">=", int(1000) * e);
        checks.push(RefusalReason::QIntervalEmpty, "100·tr_upper(b) <= M·tr_lower(a)", int(100) * tb.upper, "<=", int(m) * ta.lower);
        let per_pair = least_multiple(&ta.lower, &(int(1000) * e));
        notes.push(format!("per-pair N7 = {per_pair}, uniform N7 = {n7v}"));
        e_used = Some(e);
        let q = choose_q(m, ta, tb).map_err(|_| {
            CertifyError::Refused(Box::new(super::Refusal { criterion: crit, reason: RefusalReason::QIntervalEmpty, checks: checks.list() }))
        })?;
        q_used = None;
        let ratio = prop7_embedding(m as i64, q.0, e, ta, delta);
        notes.push(format!("Q = {}", q.0));
        ("step-3: prop7", ratio)
    } else {
        checks.push(RefusalReason::NoBranch, "D <= 2·tr_lower(a)", r(d), "<=", int(2) * ta.lower);
        return refuse(crit, RefusalReason::NoBranch, checks.list());
    };
    checks.settle(crit)?;
    let mut cert = skeleton(model, an, params, crit, d1(delta), ExponentClaim::AtLeast { n_min: m as i64, m_min: m as i64 });
    cert.swapped = swapped;
    cert.branch = Some(branch.to_string());
    cert.checks = checks.list();
    cert.constants.n6 = Some(ConstantValue::int(n6v, Provenance::PaperFormula));
    cert.constants.n7 = Some(ConstantValue::int(n7v, Provenance::PaperFormula));
    cert.constants.m = Some(ConstantValue::int(m, Provenance::PaperFormula));
    if let Some(q) = q_used {
        cert.constants.q = Some(ConstantValue::new(q, Provenance::PaperFormula));
    }
    if let Some(e) = e_used {
        cert.constants.e = Some(ConstantValue::new(e, Provenance::PaperFormula));
    }
    cert.notes = notes;
    cert.predicted_embedding = Some(predicted);
    back_check(model, an, cert, params.oracle_depth)
}

/// Uniform bound `M` on both exponents, replaying the three-step case analysis.
pub fn theorem9_certify(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams) -> CertifyResult<Certificate> {
    theorem_core(model, an, params, false)
}

/// As [`theorem9_certify`] with `1000δ` overlaps and quasi-geodesic axes allowed.
pub fn theorem14_mode(model: &ActionModel, an: &PairAnalysis, params: &CertifyParams) -> CertifyResult<Certificate> {
    theorem_core(model, an, params, true)
}
