//! Thin-triangle constant of a finite region, quantified over every choice
//! of geodesics between the triangle's vertices.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionModel, GeodesicPath, Point};

pub const DEFAULT_TRIPLE_BUDGET: u64 = 200_000;
pub const DEFAULT_GEODESIC_CAP: usize = 64;

/// A ball, or the whole graph when `radius` is `None` (finite models only).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub center: Point,
    pub radius: Option<u64>,
}

impl Region {
    pub fn ball(center: Point, radius: u64) -> Self {
        Region { center, radius: Some(radius) }
    }

    pub fn whole(model: &ActionModel) -> Self {
        Region { center: model.origin(), radius: None }
    }

    pub fn points(&self, model: &ActionModel) -> Result<Vec<Point>> {
        match self.radius {
            Some(r) => model.ball(&self.center, r),
            None => model.all_points().ok_or_else(|| {
                Error::Precondition("an infinite model needs a ball radius".into())
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaOptions {
    pub triple_budget: u64,
    pub geodesic_cap: usize,
    pub seed: u64,
}

impl Default for DeltaOptions {
    fn default() -> Self {
        DeltaOptions {
            triple_budget: DEFAULT_TRIPLE_BUDGET,
            geodesic_cap: DEFAULT_GEODESIC_CAP,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HyperbolicityReport {
    pub delta: u64,
    pub region: Region,
    pub exhaustive: bool,
    pub triple_count: u64,
    /// Some vertex pair had more geodesics than the per-pair cap.
    pub geodesics_truncated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness_triangle: Option<[Point; 3]>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Geodesics {
    pub paths: Vec<GeodesicPath>,
    pub truncated: bool,
}

/// All geodesics from `x` to `y` in DFS order over the neighbor order, so
/// the first one is [`ActionModel::geodesic`]. At most `cap` are returned.
pub fn all_geodesics(model: &ActionModel, x: &Point, y: &Point, cap: usize) -> Result<Geodesics> {
    if cap == 0 {
        return Err(Error::Precondition("geodesic cap must be >= 1".into()));
    }
    let d = model.distance(x, y)?;
    let mut paths = Vec::new();
    let mut stack = vec![x.clone()];
    let mut truncated = false;
    dfs_geodesics(model, y, d, &mut stack, &mut paths, cap, &mut truncated)?;
    Ok(Geodesics { paths, truncated })
}

fn dfs_geodesics(
    model: &ActionModel,
    target: &Point,
    remaining: u64,
    stack: &mut Vec<Point>,
    out: &mut Vec<GeodesicPath>,
    cap: usize,
    truncated: &mut bool,
) -> Result<()> {
    if remaining == 0 {
        if out.len() == cap {
            *truncated = true;
        } else {
            out.push(GeodesicPath { points: stack.clone() });
        }
        return Ok(());
    }
    let cur = stack.last().expect("non-empty").clone();
    for n in model.neighbors_unchecked(&cur) {
        if *truncated {
            return Ok(());
        }
        if model.distance_unchecked(&n, target)? == remaining - 1 {
            stack.push(n);
            dfs_geodesics(model, target, remaining - 1, stack, out, cap, truncated)?;
            stack.pop();
        }
    }
    Ok(())
}

fn dist_to_path(model: &ActionModel, p: &Point, path: &GeodesicPath) -> Result<u64> {
    let mut best = u64::MAX;
    for q in &path.points {
        best = best.min(model.distance_unchecked(p, q)?);
        if best == 0 {
            break;
        }
    }
    Ok(best)
}

/// For every point on a side, the largest distance to any geodesic of the
/// other pair. Worst case over choices factorises:
/// `max_{α,β,γ} max_{p∈α} min(d(p,β), d(p,γ)) = max_p min(max_β d(p,β), max_γ d(p,γ))`.
fn side_deviation(
    model: &ActionModel,
    side: &Geodesics,
    other1: &Geodesics,
    other2: &Geodesics,
) -> Result<(u64, Option<Point>)> {
    let mut best = (0u64, None);
    let mut seen = std::collections::HashSet::new();
    let dedup = side.paths.len() > 1;
    for path in &side.paths {
        for p in &path.points {
            if dedup && !seen.insert(p) {
                continue;
            }
            let mut m1 = 0;
            for g in &other1.paths {
                m1 = m1.max(dist_to_path(model, p, g)?);
            }
            let mut m2 = 0;
            for g in &other2.paths {
                m2 = m2.max(dist_to_path(model, p, g)?);
            }
            let dev = m1.min(m2);
            if dev > best.0 {
                best = (dev, Some(p.clone()));
            }
        }
    }
    Ok(best)
}

/// Least δ making the triangle on `x, y, z` slim for every geodesic choice.
pub fn triangle_delta(
    model: &ActionModel,
    x: &Point,
    y: &Point,
    z: &Point,
    cap: usize,
) -> Result<(u64, bool)> {
    let xy = all_geodesics(model, x, y, cap)?;
    let yz = all_geodesics(model, y, z, cap)?;
    let xz = all_geodesics(model, x, z, cap)?;
    let truncated = xy.truncated || yz.truncated || xz.truncated;
    let a = side_deviation(model, &xy, &yz, &xz)?.0;
    let b = side_deviation(model, &yz, &xy, &xz)?.0;
    let c = side_deviation(model, &xz, &xy, &yz)?.0;
    Ok((a.max(b).max(c), truncated))
}

fn triple_count(n: u64) -> u64 {
    // unordered triples with repetition, i <= j <= k
    n * (n + 1) * (n + 2) / 6
}

fn enumerate_triples(n: usize) -> Vec<[usize; 3]> {
    let mut out = Vec::with_capacity(triple_count(n as u64) as usize);
    for i in 0..n {
        for j in i..n {
            for k in j..n {
                out.push([i, j, k]);
            }
        }
    }
    out
}

pub fn compute_delta(
    model: &ActionModel,
    region: &Region,
    options: &DeltaOptions,
) -> Result<HyperbolicityReport> {
    let points = region.points(model)?;
    let n = points.len();
    let total = triple_count(n as u64);
    let exhaustive = total <= options.triple_budget;
    let triples = if exhaustive {
        enumerate_triples(n)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
        (0..options.triple_budget)
            .map(|_| {
                let mut t = [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)];
                t.sort_unstable();
                t
            })
            .collect()
    };
    let results: Vec<(u64, bool)> = triples
        .par_iter()
        .map(|t| triangle_delta(model, &points[t[0]], &points[t[1]], &points[t[2]], options.geodesic_cap))
        .collect::<Result<_>>()?;
    let mut delta = 0;
    let mut witness = None;
    let mut truncated = false;
    for (t, (d, tr)) in triples.iter().zip(&results) {
        truncated |= *tr;
        if *d > delta {
            delta = *d;
            witness = Some(t);
        }
    }
    Ok(HyperbolicityReport {
        delta,
        region: region.clone(),
        exhaustive: exhaustive && !truncated,
        triple_count: triples.len() as u64,
        geodesics_truncated: truncated,
        witness_triangle: witness
            .map(|t| [points[t[0]].clone(), points[t[1]].clone(), points[t[2]].clone()]),
    })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlimCheck {
    pub holds: bool,
    pub max_deviation: u64,
    pub witness: Option<Point>,
}

fn is_geodesic_path(model: &ActionModel, path: &GeodesicPath) -> Result<bool> {
    if path.points.is_empty() {
        return Ok(false);
    }
    for w in path.points.windows(2) {
        if model.distance(&w[0], &w[1])? != 1 {
            return Ok(false);
        }
    }
    Ok(model.distance(path.first(), path.last())? == path.length())
}

/// Checks one triangle of geodesic sides. Sides may be given in either
/// orientation; they must close up.
pub fn check_slim(model: &ActionModel, sides: &[GeodesicPath; 3], delta: u64) -> Result<SlimCheck> {
    for s in sides {
        if !is_geodesic_path(model, s)? {
            return Err(Error::NotATriangle);
        }
    }
    let ends = |p: &GeodesicPath| [p.first().clone(), p.last().clone()];
    let [a0, a1] = ends(&sides[0]);
    let closes = |b: &GeodesicPath, c: &GeodesicPath| {
        let [b0, b1] = ends(b);
        let [c0, c1] = ends(c);
        for (bs, be) in [(&b0, &b1), (&b1, &b0)] {
            for (cs, ce) in [(&c0, &c1), (&c1, &c0)] {
                if *bs == a1 && be == cs && *ce == a0 {
                    return true;
                }
            }
        }
        false
    };
    if !closes(&sides[1], &sides[2]) && !closes(&sides[2], &sides[1]) {
        return Err(Error::NotATriangle);
    }
    let mut best = (0u64, None);
    for i in 0..3 {
        let others = [&sides[(i + 1) % 3], &sides[(i + 2) % 3]];
        for p in &sides[i].points {
            let d = dist_to_path(model, p, others[0])?.min(dist_to_path(model, p, others[1])?);
            if d > best.0 {
                best = (d, Some(p.clone()));
            }
        }
    }
    Ok(SlimCheck { holds: best.0 <= delta, max_deviation: best.0, witness: best.1 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, ModelSpec};
    use crate::word::Word;
    use proptest::prelude::*;

    fn v(i: usize) -> Point {
        Point::Vertex(i)
    }

    fn path(p: &[usize]) -> GeodesicPath {
        GeodesicPath { points: p.iter().map(|&i| v(i)).collect() }
    }

    #[test]
    fn geodesic_counts() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let x = Point::Word(Word::from([1, 2]));
        let y = Point::Word(Word::from([-2, -1, 2]));
        assert_eq!(all_geodesics(&f2, &x, &y, 64).unwrap().paths.len(), 1);
        let c4 = build_model(&ModelSpec::cycle(4)).unwrap();
        assert_eq!(all_geodesics(&c4, &v(0), &v(2), 64).unwrap().paths.len(), 2);
        let c6 = build_model(&ModelSpec::cycle(6)).unwrap();
        let g = all_geodesics(&c6, &v(0), &v(3), 64).unwrap();
        assert_eq!(g.paths.len(), 2);
        assert!(g.paths.iter().all(|p| p.length() == 3));
        assert_eq!(g.paths[0], c6.geodesic(&v(0), &v(3)).unwrap());
        let one = all_geodesics(&c6, &v(0), &v(3), 1).unwrap();
        assert!(one.truncated);
    }

    #[test]
    fn delta_examples() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let r = compute_delta(&f2, &Region::ball(f2.origin(), 2), &DeltaOptions::default()).unwrap();
        assert_eq!(r.delta, 0);
        assert!(r.exhaustive);
        let c4 = build_model(&ModelSpec::cycle(4)).unwrap();
        let r = compute_delta(&c4, &Region::whole(&c4), &DeltaOptions::default()).unwrap();
        assert_eq!(r.delta, 1);
        assert!(r.exhaustive);
        let single = build_model(&ModelSpec::explicit(vec![vec![]], vec![])).unwrap();
        let r = compute_delta(&single, &Region::whole(&single), &DeltaOptions::default()).unwrap();
        assert_eq!((r.delta, r.triple_count), (0, 1));
    }

    #[test]
    fn sampled_report_is_flagged() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let opts = DeltaOptions { triple_budget: 500, ..Default::default() };
        let r = compute_delta(&f2, &Region::ball(f2.origin(), 4), &opts).unwrap();
        assert!(!r.exhaustive);
        assert_eq!(r.triple_count, 500);
        assert_eq!(r.delta, 0);
    }

    #[test]
    fn slim_examples() {
        let c4 = build_model(&ModelSpec::cycle(4)).unwrap();
        let t = [path(&[0, 1]), path(&[1, 2]), path(&[2, 3, 0])];
        let s = check_slim(&c4, &t, 0).unwrap();
        assert!(!s.holds);
        assert_eq!(s.witness, Some(v(3)));
        assert!(check_slim(&c4, &t, 1).unwrap().holds);
        let degenerate = [path(&[2]), path(&[2]), path(&[2])];
        assert!(check_slim(&c4, &degenerate, 0).unwrap().holds);
        let broken = [path(&[0, 1]), path(&[1, 2]), path(&[3, 0])];
        assert_eq!(check_slim(&c4, &broken, 1), Err(Error::NotATriangle));
    }

    #[test]
    fn tree_triangles_are_zero_slim() {
        let f2 = build_model(&ModelSpec::free_group(2)).unwrap();
        let pts = f2.ball(&f2.origin(), 2).unwrap();
        for x in pts.iter().step_by(3) {
            for y in pts.iter().step_by(5) {
                let o = f2.origin();
                let t = [
                    f2.geodesic(&o, x).unwrap(),
                    f2.geodesic(x, y).unwrap(),
                    f2.geodesic(y, &o).unwrap(),
                ];
                assert!(check_slim(&f2, &t, 0).unwrap().holds);
            }
        }
    }

    #[test]
    fn exhaustive_delta_bounds_every_triangle() {
        let c6 = build_model(&ModelSpec::cycle(6)).unwrap();
        let r = compute_delta(&c6, &Region::whole(&c6), &DeltaOptions::default()).unwrap();
        assert!(r.exhaustive);
        for i in 0..6 {
            for j in 0..6 {
                for k in 0..6 {
                    for a in all_geodesics(&c6, &v(i), &v(j), 64).unwrap().paths {
                        for b in all_geodesics(&c6, &v(j), &v(k), 64).unwrap().paths {
                            for c in all_geodesics(&c6, &v(k), &v(i), 64).unwrap().paths {
                                let s = check_slim(&c6, &[a.clone(), b.clone(), c], r.delta).unwrap();
                                assert!(s.holds);
                            }
                        }
                    }
                }
            }
        }
        // minimality: some triangle needs the full delta
        let (d, _) = triangle_delta(
            &c6,
            &r.witness_triangle.as_ref().unwrap()[0],
            &r.witness_triangle.as_ref().unwrap()[1],
            &r.witness_triangle.as_ref().unwrap()[2],
            64,
        )
        .unwrap();
        assert_eq!(d, r.delta);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn delta_monotone_in_radius(r in 0u64..3) {
            let m = build_model(&ModelSpec::free_times_z2(1)).unwrap();
            let small = compute_delta(&m, &Region::ball(m.origin(), r), &DeltaOptions::default()).unwrap();
            let big = compute_delta(&m, &Region::ball(m.origin(), r + 1), &DeltaOptions::default()).unwrap();
            prop_assert!(small.exhaustive && big.exhaustive);
            prop_assert!(small.delta <= big.delta);
        }

        #[test]
        fn trees_have_delta_zero(rank in 1u32..4, r in 0u64..3) {
            let m = build_model(&ModelSpec::free_group(rank)).unwrap();
            let opts = DeltaOptions { triple_budget: 3000, ..Default::default() };
            let rep = compute_delta(&m, &Region::ball(m.origin(), r), &opts).unwrap();
            prop_assert_eq!(rep.delta, 0);
        }

        #[test]
        fn cycle_delta_matches_closed_form(n in 3u64..11) {
            // on C_n the worst point is the far side of a bigon/triangle:
            // an independent brute force over geodesic choices
            let m = build_model(&ModelSpec::cycle(n)).unwrap();
            let rep = compute_delta(&m, &Region::whole(&m), &DeltaOptions::default()).unwrap();
            let mut worst = 0;
            let d = |a: u64, b: u64| { let t = a.abs_diff(b); t.min(n - t) };
            // sides as vertex sets of arcs
            let arcs = |a: u64, b: u64| -> Vec<Vec<u64>> {
                let len = d(a, b);
                let fwd: Vec<u64> = (0..=len).map(|i| (a + i) % n).collect();
                let bwd: Vec<u64> = (0..=len).map(|i| (a + n - i) % n).collect();
                let mut out = Vec::new();
                if *fwd.last().unwrap() == b { out.push(fwd); }
                if *bwd.last().unwrap() == b && !out.contains(&bwd) { out.push(bwd); }
                out
            };
            let dist_set = |p: u64, s: &Vec<u64>| s.iter().map(|&q| d(p, q)).min().unwrap();
            for x in 0..n { for y in 0..n { for z in 0..n {
                for a in arcs(x, y) { for b in arcs(y, z) { for c in arcs(z, x) {
                    for p in &a { worst = worst.max(dist_set(*p, &b).min(dist_set(*p, &c))); }
                    for p in &b { worst = worst.max(dist_set(*p, &a).min(dist_set(*p, &c))); }
                    for p in &c { worst = worst.max(dist_set(*p, &a).min(dist_set(*p, &b))); }
                }}}
            }}}
            prop_assert_eq!(rep.delta, worst);
        }
    }
}
