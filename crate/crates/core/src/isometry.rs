//! Single-isometry profiles (translation length, hyperbolicity verdict,
//! axis) and the c-overlap of two axes.

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ActionModel, GeodesicPath, Point};
use crate::rational::{self, int, Rational};
use crate::word::Word;

pub const DEFAULT_POWER_CAP: u64 = 128;
pub const DEFAULT_SEARCH_RADIUS: u64 = 8;
/// Radius of the base-point sample used by the generic bounds.
const SAMPLE_RADIUS: u64 = 2;
/// Paths up to this many points get the all-pairs sub-path check.
const FULL_SUBPATH_CHECK: usize = 48;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranslationLength {
    #[serde(with = "rational::serde_str")]
    pub lower: Rational,
    #[serde(with = "rational::serde_str")]
    pub upper: Rational,
    pub exact: bool,
}

impl TranslationLength {
    pub fn exact(r: Rational) -> Self {
        TranslationLength { lower: r, upper: r, exact: true }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Yes,
    No,
    Unknown,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AxisMode {
    GeodesicAxis,
    QuasiGeodesicAxis,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuasiParams {
    #[serde(rename = "K", with = "rational::serde_str")]
    pub k: Rational,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    /// Largest distance from a sub-path point to the geodesic between the
    /// sub-path's endpoints.
    pub subpath_deviation: u64,
    pub quasi_axis_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisData {
    pub element: Word,
    pub path: Vec<Point>,
    pub mode: AxisMode,
    pub invariance_defect: u64,
    pub quasi_params: Option<QuasiParams>,
    /// Number of g-steps on each side of the base point.
    pub window: u64,
    pub base_point: Point,
    /// `d(p*, g p*)`, the number of edges per g-step.
    pub step: u64,
}

impl AxisData {
    /// Orbit index range `[-window, window]` mapped to path indices.
    fn index_range(&self, window: u64) -> (usize, usize) {
        let off = ((self.window - window) * self.step) as usize;
        (off, self.path.len() - 1 - off)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsometryProfile {
    pub element: Word,
    pub translation: TranslationLength,
    pub hyperbolic: Verdict,
    pub criterion1_power: Option<u64>,
    pub finite_order: Option<u64>,
    pub axis: Option<AxisData>,
}

impl IsometryProfile {
    pub fn tr_lower(&self) -> Rational {
        self.translation.lower
    }

    pub fn tr_upper(&self) -> Rational {
        self.translation.upper
    }
}

fn sample_points(model: &ActionModel) -> Result<Vec<Point>> {
    match model.all_points() {
        Some(p) => Ok(p),
        None => model.ball(&model.origin(), SAMPLE_RADIUS.min(model.cap())),
    }
}

/// Subadditivity bounds from orbit distances at a sample of base points:
/// `upper = min d(x, g^n x)/n`, `lower = max (d(x, g^2n x) - d(x, g^n x))/n`.
pub fn translation_bounds(model: &ActionModel, g: &Word, depth: u64) -> Result<TranslationLength> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be >= 1".into()));
    }
    let points = sample_points(model)?;
    let mut upper: Option<Rational> = None;
    let mut lower = int(0);
    for n in 1..=depth {
        let gn = model.power(g, n as i64);
        let g2n = model.compose(&gn, &gn);
        for x in &points {
            let d1 = model.displacement(&gn, x)? as i128;
            let d2 = model.displacement(&g2n, x)? as i128;
            let u = Rational::new(d1, n as i128);
            upper = Some(upper.map_or(u, |v| v.min(u)));
            lower = lower.max(Rational::new(d2 - d1, n as i128));
        }
    }
    let upper = upper.expect("sample is non-empty");
    Ok(TranslationLength { lower: lower.min(upper), upper, exact: false })
}

/// Translation length; exact where the model has a closed form.
pub fn translation_length(model: &ActionModel, g: &Word, depth: u64) -> Result<TranslationLength> {
    match model.exact_translation_length(g) {
        Some(t) => {
            if depth == 0 {
                return Err(Error::Precondition("depth must be >= 1".into()));
            }
            Ok(TranslationLength::exact(t))
        }
        None => translation_bounds(model, g, depth),
    }
}

/// Least `n <= cap` with `g^n = 1`.
pub fn finite_order(model: &ActionModel, g: &Word, cap: u64) -> Option<u64> {
    let mut acc = Word::empty();
    for n in 1..=cap {
        acc = model.compose(&acc, g);
        if model.is_identity(&acc) {
            return Some(n);
        }
    }
    None
}

/// Least `n <= power_cap` such that `g^n` satisfies
/// `|p - g^n p| <= |g^n p - g^-n p| - 100(δ+1)` at a sampled point.
pub fn criterion1_power(model: &ActionModel, g: &Word, delta: u64, power_cap: u64) -> Result<Option<u64>> {
    let points = sample_points(model)?;
    let slack = 100 * (delta + 1);
    let mut gn = Word::empty();
    let ginv = model.inverse(g);
    let mut gmn = Word::empty();
    for n in 1..=power_cap {
        gn = model.compose(&gn, g);
        gmn = model.compose(&gmn, &ginv);
        for p in &points {
            let a = model.apply(&gn, p)?;
            let b = model.apply(&gmn, p)?;
            let lhs = model.distance_unchecked(p, &a)?;
            let rhs = model.distance_unchecked(&a, &b)?;
            if lhs + slack <= rhs {
                return Ok(Some(n));
            }
        }
    }
    Ok(None)
}

pub fn classify(model: &ActionModel, g: &Word, delta: u64, power_cap: u64) -> Result<IsometryProfile> {
    if power_cap == 0 {
        return Err(Error::Precondition("power cap must be >= 1".into()));
    }
    let g = model.canon(g);
    let translation = translation_length(model, &g, power_cap.min(16))?;
    let mut profile = IsometryProfile {
        element: g.clone(),
        translation,
        hyperbolic: Verdict::Unknown,
        criterion1_power: None,
        finite_order: None,
        axis: None,
    };
    if let Some(k) = finite_order(model, &g, power_cap) {
        profile.finite_order = Some(k);
        profile.hyperbolic = Verdict::No;
        return Ok(profile);
    }
    let fixes_a_point = sample_points(model)?
        .iter()
        .any(|p| model.displacement(&g, p).ok() == Some(0));
    if fixes_a_point {
        profile.hyperbolic = Verdict::No;
        return Ok(profile);
    }
    profile.criterion1_power = criterion1_power(model, &g, delta, power_cap)?;
    if profile.criterion1_power.is_some() || profile.translation.lower > int(0) {
        profile.hyperbolic = Verdict::Yes;
    }
    Ok(profile)
}

/// Minimal-displacement point in a ball around the origin, least in the
/// canonical point order among ties.
pub fn min_displacement_point(model: &ActionModel, g: &Word, radius: u64) -> Result<(Point, u64)> {
    let candidates = match model.all_points() {
        Some(p) => p,
        None => model.ball(&model.origin(), radius)?,
    };
    let mut best: Option<(u64, Point)> = None;
    for p in candidates {
        let d = model.displacement(g, &p)?;
        if best.as_ref().is_none_or(|(bd, bp)| d < *bd || (d == *bd && p < *bp)) {
            best = Some((d, p));
        }
    }
    let (d, p) = best.expect("ball contains its center");
    Ok((p, d))
}

fn dist_to_points(model: &ActionModel, p: &Point, set: &[Point]) -> Result<u64> {
    let mut best = u64::MAX;
    for q in set {
        best = best.min(model.distance_unchecked(p, q)?);
        if best == 0 {
            break;
        }
    }
    Ok(best)
}

fn path_is_geodesic(model: &ActionModel, path: &[Point]) -> Result<bool> {
    Ok(model.distance_unchecked(&path[0], path.last().unwrap())? == (path.len() - 1) as u64)
}

/// The g-invariant broken path `... g^-1[p*, g p*] ∪ [p*, g p*] ∪ g[p*, g p*] ...`
/// through the minimal-displacement point p*, with `window` g-steps on
/// each side.
pub fn quasi_axis(model: &ActionModel, g: &Word, window: u64, delta: u64) -> Result<AxisData> {
    quasi_axis_with(model, g, window, delta, DEFAULT_SEARCH_RADIUS)
}

pub fn quasi_axis_with(
    model: &ActionModel,
    g: &Word,
    window: u64,
    delta: u64,
    search_radius: u64,
) -> Result<AxisData> {
    if window == 0 {
        return Err(Error::Precondition("axis window must be >= 1".into()));
    }
    let g = model.canon(g);
    let profile = classify(model, &g, delta, DEFAULT_POWER_CAP)?;
    if profile.hyperbolic != Verdict::Yes {
        return Err(Error::NotHyperbolic(model.render(&g)));
    }
    let (p_star, step) = min_displacement_point(model, &g, search_radius)?;
    let gp = model.apply(&g, &p_star)?;
    let segment = model.geodesic(&p_star, &gp)?;
    let w = window as i64;
    let mut path: Vec<Point> = Vec::with_capacity((2 * w as usize) * step as usize + 1);
    for k in -w..w {
        let gk = model.power(&g, k);
        let skip = usize::from(k > -w);
        for p in &segment.points[skip..] {
            path.push(model.apply(&gk, p)?);
        }
    }
    let geodesic = path_is_geodesic(model, &path)?;
    let invariance_defect = invariance_defect(model, &g, &path, step as usize)?;
    let quasi_params = if geodesic {
        None
    } else {
        Some(fit_quasi_params(model, &path, step, &profile.translation, delta, window, invariance_defect)?)
    };
    Ok(AxisData {
        element: g,
        path,
        mode: if geodesic { AxisMode::GeodesicAxis } else { AxisMode::QuasiGeodesicAxis },
        invariance_defect,
        quasi_params,
        window,
        base_point: p_star,
        step,
    })
}

/// Hausdorff-style distance between `path` and `g(path)`, ignoring the
/// one g-step at each end where the two naturally differ.
fn invariance_defect(model: &ActionModel, g: &Word, path: &[Point], step: usize) -> Result<u64> {
    let image: Vec<Point> = path.iter().map(|p| model.apply(g, p)).collect::<Result<_>>()?;
    let n = path.len();
    let mut defect = 0;
    for q in image.iter().take(n.saturating_sub(step)) {
        defect = defect.max(dist_to_points(model, q, path)?);
    }
    for p in path.iter().skip(step) {
        defect = defect.max(dist_to_points(model, p, &image)?);
    }
    Ok(defect)
}

fn fit_quasi_params(
    model: &ActionModel,
    path: &[Point],
    step: u64,
    tr: &TranslationLength,
    delta: u64,
    window: u64,
    defect: u64,
) -> Result<QuasiParams> {
    let k = (tr.lower / int(step as i128)).min(int(1));
    let n = path.len();
    let mut epsilon = int(0);
    for i in 0..n {
        for j in i + 1..n {
            let d = model.distance_unchecked(&path[i], &path[j])? as i128;
            epsilon = epsilon.max(k * int((j - i) as i128) - int(d));
        }
    }
    let endpoints: Vec<usize> = if n <= FULL_SUBPATH_CHECK {
        (0..n).collect()
    } else {
        (0..=2 * window as usize).map(|i| i * step as usize).collect()
    };
    let mut subpath_deviation = 0;
    for (a, &i) in endpoints.iter().enumerate() {
        for &j in &endpoints[a + 1..] {
            let geo = model.geodesic(&path[i], &path[j])?;
            for p in &path[i..=j] {
                subpath_deviation = subpath_deviation.max(dist_to_points(model, p, &geo.points)?);
            }
        }
    }
    Ok(QuasiParams {
        k,
        epsilon,
        subpath_deviation,
        quasi_axis_ok: subpath_deviation <= 10 * delta && defect <= 30 * delta && !k.is_zero(),
    })
}

/// Whether the axis satisfies its mode's invariants: geodesic axes have
/// defect at most 2δ; quasi axes satisfy the sub-path and defect bounds.
pub fn axis_invariants_hold(axis: &AxisData, delta: u64) -> bool {
    match (&axis.mode, &axis.quasi_params) {
        (AxisMode::GeodesicAxis, _) => axis.invariance_defect <= 2 * delta,
        (AxisMode::QuasiGeodesicAxis, Some(q)) => q.quasi_axis_ok && axis.invariance_defect <= 30 * delta,
        _ => false,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapReport {
    #[serde(rename = "D")]
    pub d: u64,
    pub unbounded_in_window: bool,
    pub c: u64,
    pub window: u64,
    pub witness_segment: Option<GeodesicPath>,
    pub boundary_touching: bool,
    /// Overlap points on each axis, by path index within the window.
    #[serde(skip)]
    pub set_a: Vec<usize>,
    #[serde(skip)]
    pub set_b: Vec<usize>,
}

/// Window (in g-steps) large enough that an overlap of diameter up to
/// `2c + 40` edges fits strictly inside both axes.
pub fn auto_window(c: u64, step_a: u64, step_b: u64) -> u64 {
    let need = 2 * c + 40;
    let step = step_a.min(step_b).max(1);
    need.div_ceil(step).max(3)
}

/// Diameter of `(α ∩ N_c(β)) ∪ (β ∩ N_c(α))` restricted to the window.
pub fn overlap_diameter(
    model: &ActionModel,
    axis_a: &AxisData,
    axis_b: &AxisData,
    c: u64,
    window: u64,
) -> Result<OverlapReport> {
    for ax in [axis_a, axis_b] {
        if ax.window < window {
            return Err(Error::WindowMismatch { needed: window, available: ax.window });
        }
    }
    let collect = |ax: &AxisData, other: &AxisData| -> Result<(Vec<usize>, bool, bool)> {
        let (lo, hi) = ax.index_range(window);
        let margin = (ax.step as usize).max(1);
        let mut set = Vec::new();
        let (mut touch_lo, mut touch_hi) = (false, false);
        for i in lo..=hi {
            if dist_to_points(model, &ax.path[i], &other.path)? <= c {
                set.push(i);
                touch_lo |= i < lo + margin;
                touch_hi |= i + margin > hi;
            }
        }
        Ok((set, touch_lo, touch_hi))
    };
    let (set_a, a_lo, a_hi) = collect(axis_a, axis_b)?;
    let (set_b, b_lo, b_hi) = collect(axis_b, axis_a)?;
    let points: Vec<&Point> = set_a
        .iter()
        .map(|&i| &axis_a.path[i])
        .chain(set_b.iter().map(|&i| &axis_b.path[i]))
        .collect();
    let mut best: Option<(u64, usize, usize)> = None;
    for i in 0..points.len() {
        for j in i..points.len() {
            let d = model.distance_unchecked(points[i], points[j])?;
            if best.is_none_or(|(bd, _, _)| d > bd) {
                best = Some((d, i, j));
            }
        }
    }
    let witness_segment = match best {
        Some((_, i, j)) => Some(model.geodesic(points[i], points[j])?),
        None => None,
    };
    Ok(OverlapReport {
        d: best.map_or(0, |b| b.0),
        unbounded_in_window: (a_lo && a_hi) || (b_lo && b_hi),
        c,
        window,
        witness_segment,
        boundary_touching: a_lo || a_hi || b_lo || b_hi,
        set_a,
        set_b,
    })
}

/// Base points for the witness chain: `x` on α near the middle of the
/// overlap and `y` the point of β nearest `x`. Disjoint neighbourhoods use
/// the midpoint of a shortest segment between the axes for both.
pub fn base_points(
    model: &ActionModel,
    axis_a: &AxisData,
    axis_b: &AxisData,
    overlap: &OverlapReport,
) -> Result<(Point, Point)> {
    let nearest = |p: &Point, path: &[Point]| -> Result<Point> {
        let mut best = (u64::MAX, &path[0]);
        for q in path {
            let d = model.distance_unchecked(p, q)?;
            if d < best.0 {
                best = (d, q);
            }
        }
        Ok(best.1.clone())
    };
    match &overlap.witness_segment {
        Some(seg) => {
            let x = nearest(seg.midpoint(), &axis_a.path)?;
            let y = nearest(&x, &axis_b.path)?;
            Ok((x, y))
        }
        None => {
            let mut best: Option<(u64, &Point, &Point)> = None;
            for p in &axis_a.path {
                for q in &axis_b.path {
                    let d = model.distance_unchecked(p, q)?;
                    if best.is_none_or(|b| d < b.0) {
                        best = Some((d, p, q));
                    }
                }
            }
            let (_, p, q) = best.expect("axes are non-empty");
            let mid = model.geodesic(p, q)?.midpoint().clone();
            Ok((mid.clone(), mid))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Independence {
    IndependentToBound { bound: u64 },
    Dependent { p: i64, q: i64 },
}

fn signed_range(bound: u64) -> impl Iterator<Item = i64> {
    (1..=bound as i64).flat_map(|k| [k, -k])
}

/// Looks for `0 < |p|, |q| <= bound` with `[a^p, b^q] = 1`.
pub fn independence_test(model: &ActionModel, a: &Word, b: &Word, bound: u64) -> Result<Independence> {
    if bound == 0 {
        return Err(Error::Precondition("exponent bound must be >= 1".into()));
    }
    for p in signed_range(bound) {
        let ap = model.power(a, p);
        for q in signed_range(bound) {
            let bq = model.power(b, q);
            if model.is_identity(&model.commutator(&ap, &bq)) {
                return Ok(Independence::Dependent { p, q });
            }
        }
    }
    Ok(Independence::IndependentToBound { bound })
}

/// Renders a translation-length interval for reports.
pub fn render_tr(t: &TranslationLength) -> String {
    if t.exact {
        rational::render(&t.lower)
    } else {
        format!("[{}, {}]", rational::render(&t.lower), rational::render(&t.upper))
    }
}
