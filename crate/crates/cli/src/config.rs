//! JSON run configuration: parsing, defaults and validation.

use std::fmt;

use dimest::ergodic::{LocalDimOptions, ShiftMeasure};
use dimest::pressure::{PressureOptions, DEFAULT_BUDGET, DEFAULT_MAX_N};
use dimest::shift::{Subshift, TransferMatrix};
use dimest::systems::{presets, CodedSystem, Domain, DynSystem, IfsSystem, Perturbation, RepellerSystem, SmoothMap, DEFAULT_K_PROBE};
use dimest::Matrix;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

/// Config problem with the source position it was traced to.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.column) {
            (Some(l), Some(c)) => write!(f, "{}:{}:{}: {}", self.path, l, c, self.message),
            (Some(l), None) => write!(f, "{}:{}: {}", self.path, l, self.message),
            _ => write!(f, "{}: {}", self.path, self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemSpec,
    #[serde(default)]
    pub measures: Vec<MeasureSpec>,
    #[serde(default)]
    pub solver: SolverSpec,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default)]
    pub lyapunov: LyapunovSpec,
    #[serde(default)]
    pub tn: TnSpec,
    #[serde(default)]
    pub theta: Option<ThetaSpec>,
    #[serde(default)]
    pub pressure_curve: CurveSpec,
    #[serde(default)]
    pub cover: CoverSpec,
    #[serde(default)]
    pub local: LocalSpec,
    #[serde(default)]
    pub box_count: BoxSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemSpec {
    Ifs {
        domain: DomainSpec,
        maps: Vec<MapSpec>,
        #[serde(default)]
        transfer: Option<Vec<Vec<u8>>>,
    },
    Repeller {
        domain: DomainSpec,
        transfer: Vec<Vec<u8>>,
        branches: Vec<BranchSpec>,
    },
    Preset {
        name: String,
        #[serde(default)]
        epsilon: Option<f64>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapSpec {
    /// Row-major rows.
    pub linear: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BranchSpec {
    pub from: usize,
    pub to: usize,
    pub linear: Vec<Vec<f64>>,
    pub translation: Vec<f64>,
    #[serde(default)]
    pub perturbation: Option<Perturbation>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Bernoulli {
        #[serde(default)]
        name: Option<String>,
        p: Vec<f64>,
    },
    Markov {
        #[serde(default)]
        name: Option<String>,
        transition: Vec<Vec<f64>>,
    },
    /// Uniform transitions over the allowed successors.
    UniformMarkov {
        #[serde(default)]
        name: Option<String>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    pub tol_s: Option<f64>,
    pub budget: u64,
    pub max_n: usize,
    pub n_list: Option<Vec<usize>>,
    pub k_probe: usize,
    pub probe_seed: u64,
}

impl Default for SolverSpec {
    fn default() -> Self {
        SolverSpec { tol_s: None, budget: DEFAULT_BUDGET, max_n: DEFAULT_MAX_N, n_list: None, k_probe: DEFAULT_K_PROBE, probe_seed: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SamplingSpec {
    pub seed: u64,
    pub n_points: usize,
    pub burn_in: usize,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec { seed: 1, n_points: 1_000_000, burn_in: 60 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovSpec {
    pub n_orbit: usize,
    pub n_samples: usize,
}

impl Default for LyapunovSpec {
    fn default() -> Self {
        LyapunovSpec { n_orbit: dimest::ergodic::DEFAULT_N_ORBIT, n_samples: dimest::ergodic::DEFAULT_N_SAMPLES }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TnSpec {
    pub n_values: Vec<usize>,
    /// Defaults to every `k` below the dimension.
    pub k_values: Option<Vec<usize>>,
}

impl Default for TnSpec {
    fn default() -> Self {
        TnSpec { n_values: vec![5, 10, 20, 40], k_values: None }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThetaSpec {
    /// Symbolwise potential `g`, one value per letter.
    pub g: Vec<f64>,
    /// Symbolwise potential `h`, negative.
    pub h: Vec<f64>,
    /// Transfer matrix of the subshift; full shift when absent.
    #[serde(default)]
    pub transfer: Option<Vec<Vec<u8>>>,
    /// Radii `2^-j` for `j` in `[r_exp_min, r_exp_max]`.
    #[serde(default = "default_r_exp_min")]
    pub r_exp_min: i32,
    #[serde(default = "default_r_exp_max")]
    pub r_exp_max: i32,
}

fn default_r_exp_min() -> i32 {
    5
}

fn default_r_exp_max() -> i32 {
    18
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CurveSpec {
    pub s_min: f64,
    /// Defaults to the dimension of the system.
    pub s_max: Option<f64>,
    pub steps: usize,
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec { s_min: 0.0, s_max: None, steps: 41 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoverSpec {
    pub word: Vec<usize>,
    pub k: usize,
    /// Points of the cylinder cloud used to check the cover.
    pub check_points: usize,
    /// When positive, every admissible word up to this length is checked.
    pub survey_len: usize,
}

impl Default for CoverSpec {
    fn default() -> Self {
        CoverSpec { word: Vec::new(), k: 0, check_points: 10_000, survey_len: 0 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LocalSpec {
    pub quantile: f64,
    pub min_count: usize,
    pub probes: usize,
    pub r_grid: Option<Vec<f64>>,
}

impl Default for LocalSpec {
    fn default() -> Self {
        let d = LocalDimOptions::default();
        LocalSpec { quantile: d.quantile, min_count: d.min_count, probes: d.probes, r_grid: None }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoxSpec {
    pub delta_grid: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    /// Slack allowed on every dimension inequality.
    pub tolerance: f64,
    /// Uncertainties above this raise a warning.
    pub warn_width: f64,
    /// Slack allowed on the variational gap.
    pub variational_tolerance: f64,
    /// Replaces the computed singularity dimension in the verdicts.
    pub dim_s_override: Option<f64>,
}

impl Default for VerifySpec {
    fn default() -> Self {
        VerifySpec { tolerance: 0.1, warn_width: 0.05, variational_tolerance: 0.02, dim_s_override: None }
    }
}

/// Validated configuration with the system and measures constructed.
pub struct RunConfig {
    pub raw: RawConfig,
    pub name: String,
    pub system: DynSystem,
    pub measures: Vec<(String, ShiftMeasure)>,
    pub theta: Option<(Subshift, Vec<f64>, Vec<f64>)>,
}

impl RunConfig {
    pub fn pressure_options(&self) -> PressureOptions {
        let s = &self.raw.solver;
        PressureOptions { budget: s.budget, n_list: s.n_list.clone(), max_n: s.max_n, k_probe: s.k_probe, probe_seed: s.probe_seed }
    }

    pub fn local_options(&self) -> LocalDimOptions {
        let l = &self.raw.local;
        LocalDimOptions { r_grid: l.r_grid.clone(), quantile: l.quantile, min_count: l.min_count, probes: l.probes }
    }
}

/// Parses and validates a config document; `path` labels error messages.
pub fn parse_config(src: &str, path: &str) -> Result<RunConfig, ConfigError> {
    parse_config_with(src, path, |_| {})
}

/// As [`parse_config`], with `patch` applied to the parsed document before validation.
pub fn parse_config_with<F: FnOnce(&mut RawConfig)>(src: &str, path: &str, patch: F) -> Result<RunConfig, ConfigError> {
    let mut raw: RawConfig = serde_json::from_str(src).map_err(|e| ConfigError {
        path: path.to_string(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: e.to_string().split(" at line ").next().unwrap_or_default().to_string(),
    })?;
    patch(&mut raw);
    build(raw).map_err(|(keys, message)| {
        let (line, column) = locate(src, &keys).map_or((None, None), |(l, c)| (Some(l), Some(c)));
        ConfigError { path: path.to_string(), line, column, message: format!("{}: {message}", keys.join(".")) }
    })
}

/// Line and column of the last key of `keys`, searching each key after the previous one.
fn locate(src: &str, keys: &[&str]) -> Option<(usize, usize)> {
    let mut pos = 0;
    let mut found = None;
    for k in keys {
        let pat = format!("\"{k}\"");
        if let Some(off) = src[pos..].find(&pat) {
            pos += off;
            found = Some(pos);
            pos += pat.len();
        }
    }
    let at = found?;
    let line = src[..at].matches('\n').count() + 1;
    let column = at - src[..at].rfind('\n').map_or(0, |i| i + 1) + 1;
    Some((line, column))
}

type BuildError = (Vec<&'static str>, String);

fn err<T>(keys: &[&'static str], msg: impl fmt::Display) -> Result<T, BuildError> {
    Err((keys.to_vec(), msg.to_string()))
}

fn check(cond: bool, keys: &[&'static str], msg: &str) -> Result<(), BuildError> {
    if cond {
        Ok(())
    } else {
        err(keys, msg)
    }
}

fn matrix(rows: &[Vec<f64>], keys: &[&'static str]) -> Result<Matrix, BuildError> {
    Matrix::from_rows(rows).or_else(|e| err(keys, e))
}

fn build_map(linear: &[Vec<f64>], translation: &[f64], p: Option<Perturbation>, domain: &Domain, keys: &[&'static str]) -> Result<SmoothMap, BuildError> {
    let a = matrix(linear, keys)?;
    SmoothMap::new(a, translation, p, domain).or_else(|e| err(keys, e))
}

fn build_system(spec: &SystemSpec) -> Result<DynSystem, BuildError> {
    match spec {
        SystemSpec::Preset { name, epsilon } => {
            let eps = epsilon.unwrap_or(0.0);
            let sys: DynSystem = match name.as_str() {
                "binary_interval" => presets::binary_interval().into(),
                "middle_thirds" => presets::middle_thirds().into(),
                "golden_mean_interval" => presets::golden_mean_interval().into(),
                "sierpinski" => presets::sierpinski().into(),
                "shared_diag" => presets::shared_diag().into(),
                "perturbed_shared_diag" => {
                    check(eps.is_finite() && eps.abs() <= 0.05, &["system", "epsilon"], "epsilon must lie in [-0.05, 0.05]")?;
                    presets::perturbed_shared_diag(eps).into()
                }
                "diag_pair" => presets::diag_pair().into(),
                "toral_repeller" => presets::toral_repeller().into(),
                other => return err(&["system", "name"], format!("unknown preset {other:?}")),
            };
            if epsilon.is_some() && name != "perturbed_shared_diag" {
                return err(&["system", "epsilon"], format!("preset {name:?} takes no epsilon"));
            }
            Ok(sys)
        }
        SystemSpec::Ifs { domain, maps, transfer } => {
            let dom = Domain::new(domain.min.clone(), domain.max.clone()).or_else(|e| err(&["system", "domain"], e))?;
            let maps = maps
                .iter()
                .map(|m| build_map(&m.linear, &m.translation, m.perturbation, &dom, &["system", "maps"]))
                .collect::<Result<Vec<_>, _>>()?;
            let mut sys = IfsSystem::new(maps, dom).or_else(|e| err(&["system", "maps"], e))?;
            if let Some(rows) = transfer {
                let x = Subshift::from_transfer_rows(rows).or_else(|e| err(&["system", "transfer"], e))?;
                sys = sys.with_code_space(x).or_else(|e| err(&["system", "transfer"], e))?;
            }
            Ok(sys.into())
        }
        SystemSpec::Repeller { domain, transfer, branches } => {
            let dom = Domain::new(domain.min.clone(), domain.max.clone()).or_else(|e| err(&["system", "domain"], e))?;
            let t = TransferMatrix::from_rows(transfer).or_else(|e| err(&["system", "transfer"], e))?;
            let b = branches
                .iter()
                .map(|b| Ok(((b.from, b.to), build_map(&b.linear, &b.translation, b.perturbation, &dom, &["system", "branches"])?)))
                .collect::<Result<Vec<_>, BuildError>>()?;
            Ok(RepellerSystem::new(t, b, dom).or_else(|e| err(&["system", "branches"], e))?.into())
        }
    }
}

fn build_measures(specs: &[MeasureSpec], sys: &DynSystem) -> Result<Vec<(String, ShiftMeasure)>, BuildError> {
    let x = sys.code_space();
    if specs.is_empty() {
        return Ok(vec![("uniform".to_string(), ShiftMeasure::uniform_markov(x))]);
    }
    let mut out: Vec<(String, ShiftMeasure)> = Vec::new();
    for (i, s) in specs.iter().enumerate() {
        let (name, m) = match s {
            MeasureSpec::Bernoulli { name, p } => (name, ShiftMeasure::bernoulli(p).or_else(|e| err(&["measures", "p"], e))?),
            MeasureSpec::Markov { name, transition } => {
                (name, ShiftMeasure::markov(transition).or_else(|e| err(&["measures", "transition"], e))?)
            }
            MeasureSpec::UniformMarkov { name } => (name, ShiftMeasure::uniform_markov(x)),
        };
        m.check_support(x).or_else(|e| err(&["measures"], e))?;
        let name = name.clone().unwrap_or_else(|| format!("m{i}"));
        check(
            !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-'),
            &["measures", "name"],
            "measure names must be non-empty and use only [A-Za-z0-9_-]",
        )?;
        check(!out.iter().any(|(n, _)| *n == name), &["measures", "name"], "duplicate measure name")?;
        out.push((name, m));
    }
    Ok(out)
}

fn build(raw: RawConfig) -> Result<RunConfig, BuildError> {
    check(
        raw.schema_version == SCHEMA_VERSION,
        &["schema_version"],
        &format!("unsupported schema_version {} (expected {SCHEMA_VERSION})", raw.schema_version),
    )?;
    let system = build_system(&raw.system)?;
    let d = system.dim();
    let ell = system.code_space().alphabet_size();
    let measures = build_measures(&raw.measures, &system)?;

    let s = &raw.solver;
    if let Some(t) = s.tol_s {
        check(t > 0.0 && t <= 0.1, &["solver", "tol_s"], "tol_s must lie in (0, 0.1]")?;
    }
    check(s.budget >= 1, &["solver", "budget"], "budget must be positive")?;
    check((1..=DEFAULT_MAX_N * 4).contains(&s.max_n), &["solver", "max_n"], "max_n must lie in [1, 256]")?;
    check((1..=64).contains(&s.k_probe), &["solver", "k_probe"], "k_probe must lie in [1, 64]")?;
    if let Some(list) = &s.n_list {
        check(
            !list.is_empty() && list[0] >= 1 && list.windows(2).all(|w| w[0] < w[1]),
            &["solver", "n_list"],
            "n_list must be positive and strictly increasing",
        )?;
    }
    let sm = &raw.sampling;
    check((1000..=50_000_000).contains(&sm.n_points), &["sampling", "n_points"], "n_points must lie in [1e3, 5e7]")?;
    check((1..=10_000).contains(&sm.burn_in), &["sampling", "burn_in"], "burn_in must lie in [1, 10000]")?;
    let ly = &raw.lyapunov;
    check(ly.n_orbit >= 1, &["lyapunov", "n_orbit"], "n_orbit must be positive")?;
    check(ly.n_samples >= 2, &["lyapunov", "n_samples"], "n_samples must be at least 2")?;
    check(raw.tn.n_values.iter().all(|&n| n >= 1), &["tn", "n_values"], "n_values must be positive")?;
    if let Some(ks) = &raw.tn.k_values {
        check(ks.iter().all(|&k| k < d), &["tn", "k_values"], "every k must be below the dimension")?;
    }
    let c = &raw.pressure_curve;
    check(c.s_min >= 0.0 && c.steps >= 2, &["pressure_curve"], "need s_min >= 0 and steps >= 2")?;
    if let Some(hi) = c.s_max {
        check(hi > c.s_min, &["pressure_curve", "s_max"], "s_max must exceed s_min")?;
    }
    let cv = &raw.cover;
    check(cv.k < d, &["cover", "k"], "k must be below the dimension")?;
    check(cv.word.iter().all(|&a| a < ell), &["cover", "word"], "letter outside the alphabet")?;
    check(cv.check_points >= 1, &["cover", "check_points"], "check_points must be positive")?;
    check(cv.survey_len <= 12, &["cover", "survey_len"], "survey_len must be at most 12")?;
    let l = &raw.local;
    check((0.0..=1.0).contains(&l.quantile), &["local", "quantile"], "quantile must lie in [0, 1]")?;
    check(l.min_count >= 1 && l.probes >= 1, &["local"], "min_count and probes must be positive")?;
    if let Some(g) = &l.r_grid {
        check(g.len() >= 3 && g.iter().all(|&r| r > 0.0), &["local", "r_grid"], "r_grid needs at least three positive radii")?;
    }
    if let Some(g) = &raw.box_count.delta_grid {
        check(g.len() >= 6 && g.iter().all(|&r| r > 0.0), &["box_count", "delta_grid"], "delta_grid needs at least six positive deltas")?;
    }
    let v = &raw.verify;
    check(v.tolerance >= 0.0 && v.warn_width > 0.0 && v.variational_tolerance >= 0.0, &["verify"], "tolerances must be non-negative")?;
    if let Some(o) = v.dim_s_override {
        check(o >= 0.0, &["verify", "dim_s_override"], "dim_s_override must be non-negative")?;
    }
    let theta = match &raw.theta {
        None => None,
        Some(t) => {
            check(!t.g.is_empty() && t.g.len() == t.h.len(), &["theta", "h"], "g and h need one value per letter")?;
            check(t.h.iter().all(|&x| x < 0.0), &["theta", "h"], "h must be negative")?;
            check(t.r_exp_min >= 1 && t.r_exp_max >= t.r_exp_min + 3 && t.r_exp_max <= 40, &["theta"], "need 1 <= r_exp_min and r_exp_min + 3 <= r_exp_max <= 40")?;
            let x = match &t.transfer {
                Some(rows) => Subshift::from_transfer_rows(rows).or_else(|e| err(&["theta", "transfer"], e))?,
                None => Subshift::full(t.g.len()).or_else(|e| err(&["theta", "g"], e))?,
            };
            check(x.alphabet_size() == t.g.len(), &["theta", "transfer"], "transfer size differs from the potentials")?;
            Some((x, t.g.clone(), t.h.clone()))
        }
    };
    let name = raw.name.clone().unwrap_or_else(|| "unnamed".to_string());
    Ok(RunConfig { raw, name, system, measures, theta })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn locate_finds_nested_keys() {
        let src = "{\n  \"solver\": {\n    \"tol_s\": -1\n  }\n}";
        assert_eq!(locate(src, &["solver", "tol_s"]), Some((3, 5)));
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let e = parse_config("{\n  \"schema_version\": 1,\n  \"system\": {\"type\": \"preset\", \"name\": \"sierpinski\"},\n}", "c.json").err().unwrap();
        assert_eq!(e.line, Some(4));
    }

    #[test]
    fn semantic_errors_carry_positions() {
        let src = "{\n  \"schema_version\": 1,\n  \"system\": {\"type\": \"preset\", \"name\": \"sierpinski\"},\n  \"local\": {\"quantile\": 1.5}\n}";
        let e = parse_config(src, "c.json").err().unwrap();
        assert_eq!(e.line, Some(4));
        assert!(e.to_string().starts_with("c.json:4:"), "{e}");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let src = r#"{"schema_version": 1, "system": {"type": "preset", "name": "sierpinski"}, "sovler": {}}"#;
        assert!(parse_config(src, "c.json").is_err());
    }

    #[test]
    fn explicit_affine_system() {
        let src = r#"{
          "schema_version": 1,
          "system": {"type": "ifs", "domain": {"min": [0, 0], "max": [1, 1]},
            "maps": [
              {"linear": [[0.5, 0], [0, 0.5]], "translation": [0, 0]},
              {"linear": [[0.5, 0], [0, 0.5]], "translation": [0.5, 0]},
              {"linear": [[0.5, 0], [0, 0.5]], "translation": [0, 0.45], "perturbation": {"kind": "sine", "epsilon": 0.01}}
            ]},
          "measures": [{"type": "bernoulli", "name": "skew", "p": [0.5, 0.25, 0.25]}]
        }"#;
        let c = parse_config(src, "c.json").unwrap();
        assert_eq!(c.system.dim(), 2);
        assert!(!c.system.is_affine());
        assert_eq!(c.measures[0].0, "skew");
    }
}
