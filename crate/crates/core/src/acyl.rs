//! Empirical acylindricity constants K(R), L(R) and the power P.

use std::collections::{BTreeMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hyperbolicity::Region;
use crate::isometry::translation_length;
use crate::model::{ActionModel, Point};
use crate::rational::int;
use crate::word::Word;

/// Group elements reachable by words of length at most `radius`, one
/// shortlex-least representative per element.
#[derive(Clone, Debug)]
pub struct GroupBall {
    pub elements: Vec<Word>,
    /// The ball is the whole (finite) group.
    pub complete: bool,
}

pub fn group_ball(model: &ActionModel, radius: u64) -> Result<GroupBall> {
    if radius == 0 {
        return Err(Error::Precondition("group ball radius must be >= 1".into()));
    }
    if model.is_cayley() {
        let elements = model
            .ball(&model.origin(), radius)?
            .into_iter()
            .map(|p| p.word().cloned().expect("Cayley point"))
            .collect();
        return Ok(GroupBall { elements, complete: false });
    }
    let points = model.all_points().expect("finite model");
    let image = |w: &Word| -> Vec<Point> {
        points.iter().map(|p| model.apply(w, p).expect("valid point")).collect()
    };
    let mut seen: HashSet<Vec<Point>> = HashSet::from([image(&Word::empty())]);
    let mut elements = vec![Word::empty()];
    let mut frontier = vec![Word::empty()];
    let letters: Vec<i32> = (1..=model.generator_count() as i32).flat_map(|g| [g, -g]).collect();
    let mut complete = false;
    for _ in 0..radius {
        let mut next = Vec::new();
        for w in &frontier {
            for &l in &letters {
                let v = model.canon(&w.concat(&Word::letter(l)));
                if seen.insert(image(&v)) {
                    next.push(v);
                }
            }
        }
        if next.is_empty() {
            complete = true;
            break;
        }
        elements.extend(next.iter().cloned());
        frontier = next;
    }
    if !complete {
        // one more layer decides whether the group is exhausted
        complete = frontier.iter().all(|w| {
            letters.iter().all(|&l| seen.contains(&image(&model.canon(&w.concat(&Word::letter(l))))))
        });
    }
    Ok(GroupBall { elements, complete })
}

/// Number of group-ball elements moving both `x` and `y` by at most `r`.
pub fn pair_count(model: &ActionModel, r: u64, x: &Point, y: &Point, ball: &GroupBall) -> Result<u64> {
    let mut count = 0;
    for g in &ball.elements {
        if model.displacement(g, x)? <= r && model.displacement(g, y)? <= r {
            count += 1;
        }
    }
    Ok(count)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcylEntry {
    #[serde(rename = "K_hat")]
    pub k_hat: u64,
    #[serde(rename = "L_hat")]
    pub l_hat: u64,
    /// `count[s-1]` = max count over pairs at separation `>= s`.
    pub counts: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AcylProfile {
    pub entries: BTreeMap<u64, AcylEntry>,
    pub region: Region,
    pub exhaustive: bool,
    pub group_ball_radius: u64,
}

const PLATEAU: usize = 3;

/// Smallest separation starting a run of `PLATEAU` equal counts; runs cut
/// short by the largest separation in the region also count.
fn plateau_start(counts: &[u64]) -> usize {
    (0..counts.len())
        .find(|&i| {
            let end = (i + PLATEAU).min(counts.len());
            counts[i..end].iter().all(|&c| c == counts[i])
        })
        .unwrap_or(0)
}

/// Brute-force `(K_hat, L_hat)` for displacement radius `r`.
pub fn acyl_constants(
    model: &ActionModel,
    r: u64,
    region: &Region,
    group_ball_radius: u64,
) -> Result<(AcylEntry, bool)> {
    let ball = group_ball(model, group_ball_radius)?;
    let entry = acyl_entry(model, r, &region.points(model)?, &ball)?;
    Ok((entry, ball.complete))
}

fn acyl_entry(model: &ActionModel, r: u64, points: &[Point], ball: &GroupBall) -> Result<AcylEntry> {
    // movers[g] = region indices displaced by at most r
    let movers: Vec<Vec<bool>> = ball
        .elements
        .par_iter()
        .map(|g| {
            points
                .iter()
                .map(|p| model.displacement(g, p).map(|d| d <= r))
                .collect::<Result<Vec<bool>>>()
        })
        .collect::<Result<_>>()?;
    let n = points.len();
    let per_sep: Vec<(u64, u64)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<Vec<(u64, u64)>> {
            let mut out = Vec::new();
            for j in i + 1..n {
                let sep = model.distance_unchecked(&points[i], &points[j])?;
                let c = movers.iter().filter(|m| m[i] && m[j]).count() as u64;
                out.push((sep, c));
            }
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    let max_sep = per_sep.iter().map(|p| p.0).max().unwrap_or(0) as usize;
    let mut counts = vec![0u64; max_sep];
    for (sep, c) in per_sep {
        let s = sep as usize;
        if s >= 1 {
            counts[s - 1] = counts[s - 1].max(c);
        }
    }
    for s in (0..max_sep.saturating_sub(1)).rev() {
        counts[s] = counts[s].max(counts[s + 1]);
    }
    if counts.is_empty() {
        return Ok(AcylEntry { k_hat: 0, l_hat: 1, counts });
    }
    let i = plateau_start(&counts);
    Ok(AcylEntry { k_hat: counts[i], l_hat: i as u64 + 1, counts })
}

pub fn acyl_profile(
    model: &ActionModel,
    radii: &[u64],
    region: &Region,
    group_ball_radius: u64,
) -> Result<AcylProfile> {
    let ball = group_ball(model, group_ball_radius)?;
    let points = region.points(model)?;
    let mut entries = BTreeMap::new();
    for &r in radii {
        entries.insert(r, acyl_entry(model, r, &points, &ball)?);
    }
    Ok(AcylProfile {
        entries,
        region: region.clone(),
        exhaustive: ball.complete,
        group_ball_radius,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PProvenance {
    TreeCase,
    Formula,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantP {
    #[serde(rename = "P")]
    pub p: u64,
    pub provenance: PProvenance,
}

/// `P = 1` on trees, otherwise `max(1, ceil(K(200δ) / (90δ)))`.
pub fn constant_p(delta: u64, k200: u64) -> Result<ConstantP> {
    if delta == 0 {
        return Ok(ConstantP { p: 1, provenance: PProvenance::TreeCase });
    }
    if k200 == 0 {
        return Err(Error::Precondition("K(200δ) must be >= 1 when δ > 0".into()));
    }
    Ok(ConstantP { p: k200.div_ceil(90 * delta).max(1), provenance: PProvenance::Formula })
}

/// `tr_lower(g^P) >= 1`.
pub fn power_translates(model: &ActionModel, g: &Word, p: u64) -> Result<bool> {
    let gp = model.power(g, p as i64);
    Ok(translation_length(model, &gp, 8)?.lower >= int(1))
}
