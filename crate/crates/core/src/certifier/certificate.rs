//! The certificate document. Field order is the serialization order.

use serde::{Deserialize, Serialize};

use super::constants::{BaseConstants, Provenance};
use crate::model::{ModelSpec, Point};
use crate::oracle::OracleVerdict;
use crate::rational::{self, int, Rational};
use crate::word::Word;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Criterion {
    Nielsen,
    Prop6,
    Prop7,
    Prop8,
    Theorem9,
    Theorem14Mode,
}

impl Criterion {
    pub const ALL: [Criterion; 6] =
        [Criterion::Nielsen, Criterion::Prop6, Criterion::Prop7, Criterion::Prop8, Criterion::Theorem9, Criterion::Theorem14Mode];

    pub fn name(self) -> &'static str {
        match self {
            Criterion::Nielsen => "nielsen",
            Criterion::Prop6 => "prop6",
            Criterion::Prop7 => "prop7",
            Criterion::Prop8 => "prop8",
            Criterion::Theorem9 => "theorem9",
            Criterion::Theorem14Mode => "theorem14-mode",
        }
    }

    pub fn parse(s: &str) -> Option<Criterion> {
        Criterion::ALL.into_iter().find(|c| c.name() == s)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpsilonMode {
    PaperLiteral,
    SharpExperimental,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementRecord {
    pub text: String,
    pub word: Word,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Elements {
    pub a: ElementRecord,
    pub b: ElementRecord,
}

/// The set of exponents a certificate covers.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "kebab-case")]
pub enum ExponentClaim {
    /// `<a^n, b^m>` for all `n >= n_min`, `m >= m_min`.
    AtLeast { n_min: i64, m_min: i64 },
    /// `<a^n, b>` for all `n >= n_min`.
    FirstAtLeast { n_min: i64 },
    Exactly { n: i64, m: i64 },
    /// `<a^n, b^m>` whenever `|n| + |m| >= sum_min` and `nm != 0`.
    SumAtLeast { sum_min: i64 },
}

impl ExponentClaim {
    /// The smallest covered pair, used for the oracle back-check.
    pub fn representative(&self) -> (i64, i64) {
        match *self {
            ExponentClaim::AtLeast { n_min, m_min } => (n_min, m_min),
            ExponentClaim::FirstAtLeast { n_min } => (n_min, 1),
            ExponentClaim::Exactly { n, m } => (n, m),
            ExponentClaim::SumAtLeast { sum_min } => {
                let half = (sum_min + 1) / 2;
                (half, sum_min - half)
            }
        }
    }

    pub fn covers(&self, n: i64, m: i64) -> bool {
        match *self {
            ExponentClaim::AtLeast { n_min, m_min } => n >= n_min && m >= m_min,
            ExponentClaim::FirstAtLeast { n_min } => n >= n_min && m == 1,
            ExponentClaim::Exactly { n: a, m: b } => n == a && m == b,
            ExponentClaim::SumAtLeast { sum_min } => n != 0 && m != 0 && n.abs() + m.abs() >= sum_min,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantValue {
    #[serde(with = "rational::serde_str")]
    pub value: Rational,
    pub provenance: Provenance,
}

impl ConstantValue {
    pub fn new(value: Rational, provenance: Provenance) -> Self {
        ConstantValue { value, provenance }
    }

    pub fn int(v: i128, provenance: Provenance) -> Self {
        ConstantValue { value: int(v), provenance }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstantsBlock {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<ConstantValue>,
    #[serde(rename = "P", skip_serializing_if = "Option::is_none")]
    pub p: Option<ConstantValue>,
    #[serde(rename = "K20", skip_serializing_if = "Option::is_none")]
    pub k20: Option<ConstantValue>,
    #[serde(rename = "L20", skip_serializing_if = "Option::is_none")]
    pub l20: Option<ConstantValue>,
    #[serde(rename = "K200", skip_serializing_if = "Option::is_none")]
    pub k200: Option<ConstantValue>,
    #[serde(rename = "L200", skip_serializing_if = "Option::is_none")]
    pub l200: Option<ConstantValue>,
    #[serde(rename = "D", skip_serializing_if = "Option::is_none")]
    pub d: Option<ConstantValue>,
    #[serde(rename = "E", skip_serializing_if = "Option::is_none")]
    pub e: Option<ConstantValue>,
    #[serde(rename = "Q", skip_serializing_if = "Option::is_none")]
    pub big_q: Option<ConstantValue>,
    #[serde(rename = "N6", skip_serializing_if = "Option::is_none")]
    pub n6: Option<ConstantValue>,
    #[serde(rename = "N7", skip_serializing_if = "Option::is_none")]
    pub n7: Option<ConstantValue>,
    #[serde(rename = "M", skip_serializing_if = "Option::is_none")]
    pub m: Option<ConstantValue>,
    /// Per-pair threshold depending on the elements.
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<ConstantValue>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<ConstantValue>,
}

impl ConstantsBlock {
    /// δ, P and the acylindricity constants.
    pub fn with_base(base: &BaseConstants, delta_provenance: Provenance) -> Self {
        let acyl = base.provenance;
        let p_prov = match base.provenance {
            Provenance::ConfigOverride => Provenance::ConfigOverride,
            _ => Provenance::PaperFormula,
        };
        ConstantsBlock {
            delta: Some(ConstantValue::int(base.delta as i128, delta_provenance)),
            p: Some(ConstantValue::int(base.p as i128, p_prov)),
            k20: Some(ConstantValue::int(base.k20 as i128, acyl)),
            l20: Some(ConstantValue::int(base.l20 as i128, acyl)),
            k200: Some(ConstantValue::int(base.k200 as i128, acyl)),
            l200: Some(ConstantValue::int(base.l200 as i128, acyl)),
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(with = "rational::serde_str")]
    pub lhs: Rational,
    pub relation: String,
    #[serde(with = "rational::serde_str")]
    pub rhs: Rational,
    pub holds: bool,
}

impl Check {
    pub fn new(name: &str, lhs: Rational, relation: &str, rhs: Rational) -> Self {
        let holds = match relation {
            ">=" => lhs >= rhs,
            ">" => lhs > rhs,
            "<=" => lhs <= rhs,
            "<" => lhs < rhs,
            "==" => lhs == rhs,
            _ => panic!("unknown relation {relation}"),
        };
        Check { name: name.to_string(), lhs, relation: relation.to_string(), rhs, holds }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Caveat {
    EmpiricalDelta,
    EmpiricalAcyl,
    WindowBoundedD,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleSummary {
    pub depth: u32,
    pub exponents: (i64, i64),
    pub verdict: OracleVerdict,
    pub words_checked: u64,
    #[serde(default, with = "rational::serde_opt_str", skip_serializing_if = "Option::is_none")]
    pub min_displacement_ratio: Option<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub words: usize,
    pub all_hold: bool,
    pub failures: Vec<String>,
}

/// Everything needed to rerun the certifier on the same inputs.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertifyParams {
    pub criterion: Criterion,
    pub epsilon_mode: EpsilonMode,
    #[serde(default, with = "rational::serde_opt_str", skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<Rational>,
    #[serde(default, with = "rational::serde_opt_str", skip_serializing_if = "Option::is_none")]
    pub q: Option<Rational>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exponents: Option<(i64, i64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window: Option<u64>,
    pub oracle_depth: u32,
    pub independence_bound: u64,
    pub delta_radius: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<BaseConstants>,
}

impl CertifyParams {
    pub fn new(criterion: Criterion) -> Self {
        CertifyParams {
            criterion,
            epsilon_mode: EpsilonMode::PaperLiteral,
            epsilon: None,
            q: None,
            exponents: None,
            window: None,
            oracle_depth: 6,
            independence_bound: 5,
            delta_radius: 3,
            constants: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Certificate {
    pub schema_version: u32,
    pub model: ModelSpec,
    pub criterion: Criterion,
    pub elements: Elements,
    /// `a` and `b` were exchanged so that `tr(b) <= tr(a)`.
    pub swapped: bool,
    pub epsilon_mode: EpsilonMode,
    #[serde(with = "rational::serde_str")]
    pub epsilon: Rational,
    pub exponents: ExponentClaim,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub composite: Option<ExponentClaim>,
    pub branch: Option<String>,
    pub constants: ConstantsBlock,
    pub checks: Vec<Check>,
    pub caveats: Vec<Caveat>,
    /// Predicted orbit-embedding constant at the constructed base point:
    /// `|w(x) - x| >= L'·|w|` for Nielsen-type claims, `>= |w|/L` otherwise.
    #[serde(default, with = "rational::serde_opt_str")]
    pub predicted_embedding: Option<Rational>,
    /// The constructed base point `x` the embedding bound refers to.
    pub base_point: Option<Point>,
    /// Radius `c` of the axis overlap behind `D`.
    pub overlap_radius: u64,
    pub oracle: Option<OracleSummary>,
    pub witness: Option<WitnessSummary>,
    pub notes: Vec<String>,
    pub params: CertifyParams,
}

impl Certificate {
    /// Pretty JSON with a trailing newline.
    pub fn to_document(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("certificate serializes");
        s.push('\n');
        s
    }

    pub fn from_document(text: &str) -> crate::Result<Certificate> {
        let c: Certificate = serde_json::from_str(text).map_err(|e| crate::Error::MalformedSpec(format!("certificate: {e}")))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(crate::Error::MalformedSpec(format!("unsupported schema version {}", c.schema_version)));
        }
        Ok(c)
    }

    pub fn checks_hold(&self) -> bool {
        self.checks.iter().all(|c| c.holds)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_representatives() {
        assert_eq!(ExponentClaim::AtLeast { n_min: 3, m_min: 4 }.representative(), (3, 4));
        assert_eq!(ExponentClaim::FirstAtLeast { n_min: 7 }.representative(), (7, 1));
        assert_eq!(ExponentClaim::SumAtLeast { sum_min: 10 }.representative(), (5, 5));
        let s = ExponentClaim::SumAtLeast { sum_min: 10 };
        assert!(s.covers(9, 1) && s.covers(-5, 5) && !s.covers(10, 0) && !s.covers(4, 5));
        let a = ExponentClaim::AtLeast { n_min: 3, m_min: 4 };
        assert!(a.covers(3, 4) && !a.covers(2, 9));
    }

    #[test]
    fn check_relations() {
        assert!(Check::new("x", int(2), ">=", int(2)).holds);
        assert!(!Check::new("x", int(2), ">", int(2)).holds);
        assert!(Check::new("x", int(1), "<", int(2)).holds);
    }

    #[test]
    fn criterion_names_round_trip() {
        for c in Criterion::ALL {
            assert_eq!(Criterion::parse(c.name()), Some(c));
            let v = serde_json::to_value(c).unwrap();
            assert_eq!(v.as_str(), Some(c.name()));
        }
    }
}
