//! The three points condition and the linear-progress bound it implies.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionModel, Point};
use crate::rational::{self, int, Rational};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThreePointsReport {
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub delta: u64,
    pub holds: bool,
    /// 1-based index `i` of the first triple `(p_i, p_{i+1}, p_{i+2})` failing the triple condition.
    pub first_violation: Option<usize>,
    /// λ for the whole sequence.
    #[serde(with = "rational::serde_str")]
    pub lambda: Rational,
    /// Both sides of the progress bound at the last point; absent when a triple fails.
    #[serde(default, with = "rational::serde_opt_str")]
    pub progress_lhs: Option<Rational>,
    #[serde(default, with = "rational::serde_opt_str")]
    pub progress_rhs: Option<Rational>,
    /// 1-based index `i >= 3` where the progress bound fails, if any.
    pub progress_violation: Option<usize>,
}

/// Checks the triple condition on every consecutive triple and, if it holds,
/// the progress bound at every `i >= 3` with `λ_i = (ε/100 - δ)^-1 · max_{j<i} |p_j - p_{j+1}|`.
///
/// `dist(i, j)` is the distance between the `i`-th and `j`-th points
/// (0-based) of a sequence of `n` points.
pub fn three_points_with<F>(n: usize, mut dist: F, epsilon: Rational, delta: u64) -> Result<ThreePointsReport>
where
    F: FnMut(usize, usize) -> Result<u64>,
{
    let slack = epsilon / int(100) - int(delta as i128);
    if slack <= Rational::zero() {
        return Err(Error::Precondition(format!(
            "epsilon {} must exceed 100·delta = {}",
            rational::render(&epsilon),
            100 * delta
        )));
    }
    if n < 3 {
        return Err(Error::Precondition("three points check needs at least 3 points".into()));
    }
    let gaps: Vec<u64> = (0..n - 1).map(|j| dist(j, j + 1)).collect::<Result<_>>()?;
    let max_gap = gaps.iter().copied().max().unwrap_or(0);
    let lambda = int(max_gap as i128) / slack;
    let mut first_violation = None;
    for i in 0..n - 2 {
        let lhs = int(dist(i, i + 2)? as i128);
        let rhs = int(gaps[i].max(gaps[i + 1]) as i128) + epsilon;
        if lhs < rhs {
            first_violation = Some(i + 1);
            break;
        }
    }
    let mut report = ThreePointsReport {
        epsilon,
        delta,
        holds: false,
        first_violation,
        lambda,
        progress_lhs: None,
        progress_rhs: None,
        progress_violation: None,
    };
    if first_violation.is_some() {
        return Ok(report);
    }
    let mut run_max = gaps[0].max(gaps[1]);
    let mut run_sum = gaps[0] + gaps[1];
    for i in 2..n {
        if i > 2 {
            run_max = run_max.max(gaps[i - 1]);
            run_sum += gaps[i - 1];
        }
        let lambda_i = int(run_max as i128) / slack;
        let lhs = lambda_i * int(dist(0, i)? as i128);
        let rhs = int(run_sum as i128);
        if lhs < rhs && report.progress_violation.is_none() {
            report.progress_violation = Some(i + 1);
        }
        if i == n - 1 {
            report.progress_lhs = Some(lhs);
            report.progress_rhs = Some(rhs);
        }
    }
    report.holds = report.progress_violation.is_none();
    Ok(report)
}

pub fn three_points_check(model: &ActionModel, points: &[Point], epsilon: Rational, delta: u64) -> Result<ThreePointsReport> {
    for p in points {
        model.validate_point(p)?;
    }
    three_points_with(points.len(), |i, j| model.distance_unchecked(&points[i], &points[j]), epsilon, delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelSpec};
    use crate::word::Word;

    fn line(spacing: usize, count: usize) -> Vec<Point> {
        (0..count).map(|k| Point::Word(Word(vec![1; k * spacing]))).collect()
    }

    #[test]
    fn collinear_tree_points_hold() {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let r = three_points_check(&m, &line(10, 6), int(5), 0).unwrap();
        assert!(r.holds);
        assert_eq!(r.first_violation, None);
        assert!(r.progress_lhs.unwrap() >= r.progress_rhs.unwrap());
    }

    #[test]
    fn backtrack_fails_at_first_triple() {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let p = m.origin();
        let q = Point::Word(Word::from([1, 2]));
        let r = three_points_check(&m, &[p.clone(), q, p], int(1), 0).unwrap();
        assert!(!r.holds);
        assert_eq!(r.first_violation, Some(1));
        assert_eq!(r.progress_lhs, None);
    }

    #[test]
    fn four_points_spaced_200() {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        let r = three_points_check(&m, &line(200, 4), int(100), 0).unwrap();
        assert_eq!(r.lambda, int(200));
        assert_eq!(r.progress_lhs, Some(int(200 * 600)));
        assert_eq!(r.progress_rhs, Some(int(600)));
        assert!(r.holds);
    }

    #[test]
    fn rejects_small_epsilon_and_short_input() {
        let m = build_model(&ModelSpec::free_group(2)).unwrap();
        assert!(three_points_check(&m, &line(10, 4), int(100), 1).is_err());
        assert!(three_points_check(&m, &line(10, 2), int(5), 0).is_err());
    }

    #[test]
    fn lambda_uses_prefix_maximum() {
        // gaps 10, 10, 1000: the bound at i=3 uses λ_3 = 10/slack, not the global one
        let d = |i: usize, j: usize| -> Result<u64> {
            let pos = [0i64, 10, 20, 1020];
            Ok((pos[i] - pos[j]).unsigned_abs())
        };
        let r = three_points_with(4, d, int(5), 0).unwrap();
        assert!(r.holds);
        assert_eq!(r.lambda, int(1000) / (int(5) / int(100)));
    }
}
