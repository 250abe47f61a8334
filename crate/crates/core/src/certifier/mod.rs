//! Freeness criteria and the certificates they emit.
//!
//! Each criterion measures what it needs on the model (translation
//! lengths, axes, overlaps, constants), re-checks every inequality it
//! relies on with the conservative end of each interval, and backs the
//! result with the word oracle before a certificate is returned.

mod certificate;
mod chain;
mod constants;
mod criteria;
mod three_points;

pub use certificate::{
    Caveat, Certificate, CertifyParams, Check, ConstantValue, ConstantsBlock, Criterion, ElementRecord, Elements,
    EpsilonMode, ExponentClaim, OracleSummary, WitnessSummary, SCHEMA_VERSION,
};
pub use chain::{build_witness_chain, Band, ClauseResult, GapReport, LabeledPoint, SegmentRecord, WitnessChain, WordCase};
pub use constants::{
    brute_force_constants, choose_q, e_const, overlap_bound, m_const, n6, n7_closed, prop7_numbers, prop8_threshold,
    BaseConstants, Prop7Failure, Prop7Numbers, Provenance, N7_DERIVATION,
};
pub use criteria::{
    nielsen_certify, prop6_certify, prop7_certify, prop8_certify, theorem14_mode, theorem9_certify,
};
pub use three_points::{three_points_check, three_points_with, ThreePointsReport};

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::hyperbolicity::{compute_delta, DeltaOptions, Region};
use crate::isometry::{
    auto_window, base_points, classify, independence_test, min_displacement_point, overlap_diameter, quasi_axis,
    AxisData, Independence, IsometryProfile, OverlapReport, Verdict, DEFAULT_POWER_CAP, DEFAULT_SEARCH_RADIUS,
};
use crate::model::{build_model, ActionModel, Point};
use crate::oracle::{embedding_fit, freeness_to_depth, OracleVerdict};
use crate::word::Word;

/// Region radius and group-ball radius for the brute-forced constants.
const ACYL_REGION_RADIUS: u64 = 2;
const ACYL_GROUP_RADIUS: u64 = 4;
/// Window doublings tried while the overlap touches the window edge.
const WINDOW_RETRIES: u32 = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "kebab-case")]
pub enum RefusalReason {
    NotHyperbolic { element: String },
    AxisMode { element: String },
    OverlapUnbounded,
    Dependent { p: i64, q: i64 },
    EpsilonTooSmall,
    RatioPrecondition,
    PeriodBound,
    OverlapBound,
    Condition1Failed,
    Condition2Failed,
    QIntervalEmpty,
    NielsenInequality,
    NoBranch,
    OracleRelation { word: String },
    EmbeddingBound,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Refusal {
    pub criterion: Criterion,
    #[serde(flatten)]
    pub reason: RefusalReason,
    pub checks: Vec<Check>,
}

#[derive(Debug, thiserror::Error)]
pub enum CertifyError {
    #[error("certificate refused: {0:?}")]
    Refused(Box<Refusal>),
    #[error(transparent)]
    Model(#[from] Error),
}

impl CertifyError {
    pub fn refusal(&self) -> Option<&Refusal> {
        match self {
            CertifyError::Refused(r) => Some(r),
            CertifyError::Model(_) => None,
        }
    }
}

pub type CertifyResult<T> = std::result::Result<T, CertifyError>;

pub(crate) fn refuse<T>(criterion: Criterion, reason: RefusalReason, checks: Vec<Check>) -> CertifyResult<T> {
    Err(CertifyError::Refused(Box::new(Refusal { criterion, reason, checks })))
}

/// Everything measured about a pair before any criterion is applied.
#[derive(Clone, Debug)]
pub struct PairAnalysis {
    pub a: Word,
    pub b: Word,
    pub profile_a: IsometryProfile,
    pub profile_b: IsometryProfile,
    pub delta: u64,
    pub delta_exact: bool,
    pub constants: BaseConstants,
    /// Overlap radius: `10δ`, or `1000δ` for quasi-geodesic axes.
    pub c: u64,
    pub axis_a: Option<AxisData>,
    pub axis_b: Option<AxisData>,
    pub overlap: Option<OverlapReport>,
    pub base: Option<(Point, Point)>,
    pub independence: Independence,
    pub caveats: Vec<Caveat>,
}

impl PairAnalysis {
    pub fn d(&self) -> u64 {
        self.overlap.as_ref().map_or(0, |o| o.d)
    }
}

/// δ is 0 on trees, exact on finite models, and a ball estimate otherwise.
/// The flag says whether the value is exact.
pub fn estimate_delta(model: &ActionModel, radius: u64) -> crate::Result<(u64, bool)> {
    if model.is_tree() {
        return Ok((0, true));
    }
    let region = match model.all_points() {
        Some(_) => Region::whole(model),
        None => Region::ball(model.origin(), radius.min(model.cap())),
    };
    let rep = compute_delta(model, &region, &DeltaOptions::default())?;
    Ok((rep.delta, rep.exhaustive && region.radius.is_none()))
}

/// Measures δ, constants, profiles, axes, the overlap and independence.
pub fn analyze_pair(model: &ActionModel, a: &Word, b: &Word, params: &CertifyParams, quasi: bool) -> crate::Result<PairAnalysis> {
    let a = model.canon(a);
    let b = model.canon(b);
    let mut caveats = Vec::new();
    let (delta, delta_exact) = estimate_delta(model, params.delta_radius)?;
    if !delta_exact {
        caveats.push(Caveat::EmpiricalDelta);
    }
    let constants = match &params.constants {
        Some(c) => BaseConstants { provenance: Provenance::ConfigOverride, ..c.clone() },
        None => {
            let region = match model.all_points() {
                Some(_) => Region::whole(model),
                None => Region::ball(model.origin(), ACYL_REGION_RADIUS),
            };
            brute_force_constants(model, delta, &region, ACYL_GROUP_RADIUS)?
        }
    };
    if constants.provenance == Provenance::BruteForced && !constants.acyl_exhaustive {
        caveats.push(Caveat::EmpiricalAcyl);
    }
    let profile_a = classify(model, &a, delta, DEFAULT_POWER_CAP)?;
    let profile_b = classify(model, &b, delta, DEFAULT_POWER_CAP)?;
    let independence = independence_test(model, &a, &b, params.independence_bound)?;
    let c = if quasi { 1000 * delta } else { 10 * delta };
    let mut out = PairAnalysis {
        a: a.clone(),
        b: b.clone(),
        profile_a,
        profile_b,
        delta,
        delta_exact,
        constants,
        c,
        axis_a: None,
        axis_b: None,
        overlap: None,
        base: None,
        independence,
        caveats,
    };
    if out.profile_a.hyperbolic != Verdict::Yes || out.profile_b.hyperbolic != Verdict::Yes {
        return Ok(out);
    }
    let (_, step_a) = min_displacement_point(model, &a, DEFAULT_SEARCH_RADIUS)?;
    let (_, step_b) = min_displacement_point(model, &b, DEFAULT_SEARCH_RADIUS)?;
    let mut window = params.window.unwrap_or_else(|| auto_window(c, step_a, step_b));
    let mut tries = 0;
    loop {
        let axis_a = quasi_axis(model, &a, window, delta)?;
        let axis_b = quasi_axis(model, &b, window, delta)?;
        let ov = overlap_diameter(model, &axis_a, &axis_b, c, window)?;
        let retry = ov.boundary_touching && !ov.unbounded_in_window && params.window.is_none() && tries < WINDOW_RETRIES;
        if !retry {
            if ov.boundary_touching && !ov.unbounded_in_window {
                out.caveats.push(Caveat::WindowBoundedD);
            }
            out.base = Some(base_points(model, &axis_a, &axis_b, &ov)?);
            out.axis_a = Some(axis_a);
            out.axis_b = Some(axis_b);
            out.overlap = Some(ov);
            break;
        }
        window *= 2;
        tries += 1;
    }
    Ok(out)
}

/// Runs the criterion named in `params` on `(a, b)`.
pub fn certify(model: &ActionModel, a: &Word, b: &Word, params: &CertifyParams) -> CertifyResult<Certificate> {
    let quasi = params.criterion == Criterion::Theorem14Mode;
    let an = analyze_pair(model, a, b, params, quasi)?;
    match params.criterion {
        Criterion::Nielsen => nielsen_certify(model, &an, params),
        Criterion::Prop6 => prop6_certify(model, &an, params),
        Criterion::Prop7 => prop7_certify(model, &an, params),
        Criterion::Prop8 => prop8_certify(model, &an, params),
        Criterion::Theorem9 => theorem9_certify(model, &an, params),
        Criterion::Theorem14Mode => theorem14_mode(model, &an, params),
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub criterion: Criterion,
    /// Re-running the certifier gave a byte-identical document.
    pub reproduced: bool,
    pub checks_hold: bool,
    pub oracle: Vec<OracleSummary>,
    pub oracle_free: bool,
    pub embedding_holds: Option<bool>,
    pub ok: bool,
    pub messages: Vec<String>,
}

/// Independent re-check of a certificate document: recertifies from the
/// recorded parameters and reruns the oracle on every representative
/// exponent pair.
pub fn verify_certificate(cert: &Certificate) -> crate::Result<VerifyReport> {
    let model = build_model(&cert.model)?;
    let a = cert.elements.a.word.clone();
    let b = cert.elements.b.word.clone();
    let mut messages = Vec::new();
    let reproduced = match certify(&model, &a, &b, &cert.params) {
        Ok(again) => {
            let same = again.to_document() == cert.to_document();
            if !same {
                messages.push("recertification produced a different document".into());
            }
            same
        }
        Err(CertifyError::Refused(r)) => {
            messages.push(format!("recertification refused: {:?}", r.reason));
            false
        }
        Err(CertifyError::Model(e)) => return Err(e),
    };
    let checks_hold = cert.checks_hold();
    if !checks_hold {
        messages.push("a recorded check does not hold".into());
    }
    let depth = cert.params.oracle_depth.max(1);
    let mut reps = vec![cert.exponents.representative()];
    if let Some(c) = &cert.composite {
        reps.push(c.representative());
    }
    let mut oracle = Vec::new();
    let mut oracle_free = true;
    for (n, m) in reps {
        let an = model.power(&a, n);
        let bm = model.power(&b, m);
        let r = freeness_to_depth(&model, &an, &bm, depth)?;
        if r.verdict != OracleVerdict::FreeToDepth {
            oracle_free = false;
            messages.push(format!("oracle found a relation at ({n}, {m})"));
        }
        oracle.push(OracleSummary {
            depth,
            exponents: (n, m),
            verdict: r.verdict,
            words_checked: r.words_checked,
            min_displacement_ratio: None,
        });
    }
    let embedding_holds = match (&cert.predicted_embedding, &cert.base_point) {
        (Some(pred), Some(x)) => {
            let (n, m) = cert.exponents.representative();
            let r = embedding_fit(&model, &model.power(&a, n), &model.power(&b, m), x, depth, Some(*pred))?;
            if let Some(o) = oracle.first_mut() {
                o.min_displacement_ratio = r.min_displacement_ratio;
            }
            if r.predicted_holds != Some(true) {
                messages.push("embedding lower bound fails at the base point".into());
            }
            r.predicted_holds
        }
        _ => None,
    };
    let ok = reproduced && checks_hold && oracle_free && embedding_holds != Some(false);
    Ok(VerifyReport { criterion: cert.criterion, reproduced, checks_hold, oracle, oracle_free, embedding_holds, ok, messages })
}
