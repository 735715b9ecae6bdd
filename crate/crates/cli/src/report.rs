//! Machine-readable run report. Every estimate carries an uncertainty; the
//! report holds no wall-clock data so that reruns are byte-identical.

use serde::{Deserialize, Serialize};

use dimest::shift::Word;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Warn,
    Violation,
}

impl Status {
    pub fn exit_code(self) -> i32 {
        match self {
            Status::Ok => 0,
            Status::Warn => 2,
            Status::Violation => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemSummary {
    /// `ifs` or `repeller`.
    pub kind: String,
    pub dim: usize,
    pub alphabet: usize,
    pub affine: bool,
    pub contraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimSReport {
    pub method: String,
    pub value: f64,
    /// Bisection bracket plus the distance to the root of `min_n P_n`.
    pub uncertainty: f64,
    pub s_bracket: [f64; 2],
    pub upper_root: Option<f64>,
    pub pressure_at_root: f64,
    pub n_list: Vec<usize>,
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimLReport {
    pub measure: String,
    pub method: String,
    pub value: f64,
    /// Spread of the dimension over the exponent confidence box.
    pub uncertainty: f64,
    pub entropy: f64,
    pub lambda: Vec<f64>,
    pub lambda_ci: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TnRow {
    pub n: usize,
    pub k: usize,
    pub t: f64,
    /// Bisection tolerance on `t`.
    pub uncertainty: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxReport {
    pub method: String,
    pub measure: String,
    pub value: f64,
    /// Standard error of the fitted slope.
    pub uncertainty: f64,
    pub residual: f64,
    pub n_points: usize,
    pub deltas: Vec<f64>,
    pub counts: Vec<usize>,
    pub fit_window: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PackReport {
    pub measure: String,
    pub method: String,
    pub value: f64,
    /// Standard error of the quantile estimate.
    pub uncertainty: f64,
    pub quantile: f64,
    pub probes: usize,
    pub skipped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaReport {
    pub method: String,
    pub value: f64,
    /// Standard error of the fitted slope.
    pub uncertainty: f64,
    pub slope: f64,
    pub intercept: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub dropped: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub s: f64,
    pub value: f64,
    /// `|P_N - value|` at the longest word length.
    pub uncertainty: f64,
    pub upper: f64,
    pub pn: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub word: Word,
    pub k: usize,
    pub balls: usize,
    pub radius: f64,
    pub count_bound: f64,
    pub log_count_bound: f64,
    pub c1: f64,
    /// Fraction of the cylinder cloud inside the cover.
    pub fraction: f64,
    pub check_points: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub survey: Option<SurveyReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveyReport {
    pub max_len: usize,
    pub words: usize,
    pub min_fraction: f64,
    pub max_control_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalRow {
    pub measure: String,
    pub s: f64,
    pub gap: f64,
    /// Pressure bracket plus Monte Carlo confidence.
    pub uncertainty: f64,
    pub pressure: f64,
    pub entropy: f64,
    pub potential: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    NotApplicable,
}

/// One inequality `lhs <= rhs + tolerance`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub statement: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<String>,
    pub lhs: Option<f64>,
    pub rhs: Option<f64>,
    pub tolerance: f64,
    /// `rhs + tolerance - lhs`; negative on failure.
    pub slack: Option<f64>,
    pub status: VerdictStatus,
}

impl Verdict {
    pub fn check_le(check: &str, statement: &str, measure: Option<&str>, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        let slack = rhs + tolerance - lhs;
        Verdict {
            check: check.into(),
            statement: statement.into(),
            measure: measure.map(Into::into),
            lhs: Some(lhs),
            rhs: Some(rhs),
            tolerance,
            slack: Some(slack),
            status: if slack >= 0.0 { VerdictStatus::Pass } else { VerdictStatus::Fail },
        }
    }

    pub fn not_applicable(check: &str, statement: &str, tolerance: f64) -> Self {
        Verdict {
            check: check.into(),
            statement: statement.into(),
            measure: None,
            lhs: None,
            rhs: None,
            tolerance,
            slack: None,
            status: VerdictStatus::NotApplicable,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub config_name: String,
    pub seed: u64,
    pub system: SystemSummary,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim_s: Option<DimSReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub dim_l: Vec<DimLReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tn: Vec<TnRow>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub box_dim: Option<BoxReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub packing: Vec<PackReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pressure_curve: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub variational: Vec<VariationalRow>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verdicts: Vec<Verdict>,
    pub warnings: Vec<String>,
    pub status: Status,
}
