//! Closed-form constants. Every function here is a plain formula over
//! exact rationals so the numbers can be checked by hand.

use serde::{Deserialize, Serialize};

use crate::acyl::{acyl_constants, constant_p};
use crate::error::Result;
use crate::hyperbolicity::Region;
use crate::isometry::TranslationLength;
use crate::model::ActionModel;
use crate::rational::{ceil_int, int, least_multiple, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PaperFormula,
    BruteForced,
    ConfigOverride,
}

/// Hyperbolicity and acylindricity inputs shared by every criterion.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BaseConstants {
    pub delta: u64,
    #[serde(rename = "P")]
    pub p: u64,
    #[serde(rename = "K20")]
    pub k20: u64,
    #[serde(rename = "L20")]
    pub l20: u64,
    #[serde(rename = "K200")]
    pub k200: u64,
    #[serde(rename = "L200")]
    pub l200: u64,
    pub provenance: Provenance,
    /// The group ball covered the whole group.
    #[serde(default)]
    pub acyl_exhaustive: bool,
}

impl BaseConstants {
    /// `δ = 0`, `P = K(0) = L(0) = 1`.
    pub fn tree() -> Self {
        BaseConstants {
            delta: 0,
            p: 1,
            k20: 1,
            l20: 1,
            k200: 1,
            l200: 1,
            provenance: Provenance::PaperFormula,
            acyl_exhaustive: true,
        }
    }

    /// `P·K·L` with `K = K(20δ)`, `L = L(20δ)`.
    pub fn pkl(&self) -> i128 {
        (self.p * self.k20 * self.l20) as i128
    }
}

/// Brute-forces `K, L` at `20δ` and `200δ`, then `P`.
pub fn brute_force_constants(
    model: &ActionModel,
    delta: u64,
    region: &Region,
    group_ball_radius: u64,
) -> Result<BaseConstants> {
    let (e20, c20) = acyl_constants(model, 20 * delta, region, group_ball_radius)?;
    let (e200, c200) = acyl_constants(model, 200 * delta, region, group_ball_radius)?;
    let p = constant_p(delta, e200.k_hat)?;
    Ok(BaseConstants {
        delta,
        p: p.p,
        k20: e20.k_hat.max(1),
        l20: e20.l_hat.max(1),
        k200: e200.k_hat.max(1),
        l200: e200.l_hat.max(1),
        provenance: Provenance::BruteForced,
        acyl_exhaustive: c20 && c200,
    })
}

fn d1(c: &BaseConstants) -> i128 {
    c.delta as i128 + 1
}

/// `N_6 = 4PKL + 200(δ+1)P`.
pub fn n6(c: &BaseConstants) -> i128 {
    4 * c.pkl() + 200 * d1(c) * c.p as i128
}

/// `E = D + 100(δ+1) + 10PKL·tr(f)`, with the upper end of `tr(f)`.
pub fn e_const(d: u64, c: &BaseConstants, tr_f: &TranslationLength) -> Rational {
    int(d as i128) + int(100 * d1(c)) + int(10 * c.pkl()) * tr_f.upper
}

/// Uniform `N_7 = 1000(2 + 100(δ+1)P + 10PKL)`: from `D <= 2 tr(f)` and
/// `tr(f) >= 1/P`, `E <= (2 + 100(δ+1)P + 10PKL) tr(f)`.
pub fn n7_closed(c: &BaseConstants) -> i128 {
    1000 * (2 + 100 * d1(c) * c.p as i128 + 10 * c.pkl())
}

pub const N7_DERIVATION: &str = "N7 = 1000(2 + 100(delta+1)P + 10PKL): D <= 2tr(f) and tr(f) >= 1/P give \
     E <= (2 + 100(delta+1)P + 10PKL)tr(f), so n >= N7 forces tr(f^n) >= 1000E";

/// `M = 10KLP·N_6 + 2000(δ+1)P + N_7`.
pub fn m_const(c: &BaseConstants) -> i128 {
    10 * c.pkl() * n6(c) + 2000 * d1(c) * c.p as i128 + n7_closed(c)
}

/// Overlap bound `4PKL·tr(a) + 100δ` (plus `10000δ` in the quasi-geodesic setting).
pub fn overlap_bound(c: &BaseConstants, tr_a: &TranslationLength, quasi: bool) -> Rational {
    let extra = if quasi { 10_000 } else { 0 };
    int(4 * c.pkl()) * tr_a.upper + int(100 * c.delta as i128 + extra * c.delta as i128)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prop7Numbers {
    pub e: Rational,
    pub n7: i128,
    pub q: i128,
    /// Q must lie in `[q_low, q_high]`.
    pub q_low: Rational,
    pub q_high: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Prop7Failure {
    Condition1 { tr_g_upper: Rational, tr_f_lower: Rational },
    Condition2 { d: u64, bound: Rational },
    QIntervalEmpty { low: Rational, high: Rational },
}

/// Picks `Q` in `[tr(f^n)/(100 tr(g)), tr(f^n)/(50 tr(g))]`, using the
/// conservative end of each interval.
pub fn choose_q(n: i128, tr_f: &TranslationLength, tr_g: &TranslationLength) -> std::result::Result<(i128, Rational, Rational), Prop7Failure> {
    let low = int(n) * tr_f.upper / (int(100) * tr_g.lower);
    let high = int(n) * tr_f.lower / (int(50) * tr_g.upper);
    let q = ceil_int(&low).max(1);
    if int(q) > high {
        return Err(Prop7Failure::QIntervalEmpty { low, high });
    }
    Ok((q, low, high))
}

pub fn prop7_numbers(
    d: u64,
    c: &BaseConstants,
    tr_f: &TranslationLength,
    tr_g: &TranslationLength,
) -> std::result::Result<Prop7Numbers, Prop7Failure> {
    if tr_g.upper > tr_f.lower {
        return Err(Prop7Failure::Condition1 { tr_g_upper: tr_g.upper, tr_f_lower: tr_f.lower });
    }
    let bound = int(2) * tr_f.lower;
    if int(d as i128) > bound {
        return Err(Prop7Failure::Condition2 { d, bound });
    }
    let e = e_const(d, c, tr_f);
    let n7 = least_multiple(&tr_f.lower, &(int(1000) * e));
    let (q, q_low, q_high) = choose_q(n7, tr_f, tr_g)?;
    Ok(Prop7Numbers { e, n7, q, q_low, q_high })
}

/// Least `n` with `n·tr(f) >= 1000E` and `tr(g) <= n·tr(f)/100`.
pub fn prop8_threshold(d: u64, c: &BaseConstants, tr_f: &TranslationLength, tr_g: &TranslationLength) -> (Rational, i128) {
    let e = e_const(d, c, tr_f);
    let first = least_multiple(&tr_f.lower, &(int(1000) * e));
    let second = least_multiple(&tr_f.lower, &(int(100) * tr_g.upper));
    (e, first.max(second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::ratio;

    fn tr(n: i128) -> TranslationLength {
        TranslationLength::exact(int(n))
    }

    #[test]
    fn tree_constants_plug_in() {
        let c = BaseConstants::tree();
        assert_eq!(n6(&c), 204);
        assert_eq!(e_const(0, &c, &tr(1)), int(110));
        assert_eq!(n7_closed(&c), 112_000);
        assert_eq!(m_const(&c), 116_040);
        assert_eq!(ceil_int(&(int(3) * int(n6(&c)))), 612);
    }

    #[test]
    fn prop7_examples() {
        let c = BaseConstants::tree();
        let p = prop7_numbers(0, &c, &tr(1), &tr(1)).unwrap();
        assert_eq!((p.e, p.n7), (int(110), 110_000));
        assert_eq!(p.q, 1100);
        let p = prop7_numbers(1, &c, &tr(2), &tr(1)).unwrap();
        assert_eq!((p.e, p.n7), (int(121), 60_500));
        assert!(matches!(prop7_numbers(3, &c, &tr(1), &tr(1)), Err(Prop7Failure::Condition2 { .. })));
        assert!(matches!(prop7_numbers(0, &c, &tr(1), &tr(2)), Err(Prop7Failure::Condition1 { .. })));
    }

    #[test]
    fn q_interval() {
        let (q, low, high) = choose_q(110_000, &tr(1), &tr(1)).unwrap();
        assert_eq!((q, low, high), (1100, int(1100), int(2200)));
        // an interval too loose to contain an integer
        let wide = TranslationLength { lower: ratio(1, 2), upper: int(1), exact: false };
        assert!(choose_q(1, &tr(1), &wide).is_err());
    }

    #[test]
    fn prop8_examples() {
        let c = BaseConstants::tree();
        assert_eq!(prop8_threshold(0, &c, &tr(1), &tr(1)).1, 110_000);
        assert_eq!(prop8_threshold(0, &c, &tr(1), &tr(10)).1, 110_000);
        let (e, n) = prop8_threshold(0, &c, &tr(2), &tr(300));
        assert_eq!((e, n), (int(120), 60_000));
        // the tr(g) side dominates once tr(g) is large
        assert_eq!(prop8_threshold(0, &c, &tr(1), &tr(5000)).1, 500_000);
    }

    #[test]
    fn overlap_bound_values() {
        let c = BaseConstants::tree();
        assert_eq!(overlap_bound(&c, &tr(3), false), int(12));
        let c1 = BaseConstants { delta: 1, ..BaseConstants::tree() };
        assert_eq!(overlap_bound(&c1, &tr(3), false), int(112));
        assert_eq!(overlap_bound(&c1, &tr(3), true), int(10_112));
    }
}
