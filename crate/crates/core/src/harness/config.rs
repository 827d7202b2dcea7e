use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{Functional, DEFAULT_TABLE_M, DEFAULT_TABLE_SEED};
use crate::fracops::{check_order, ProcessKind, Truncation};
use crate::innovations::{InnovationModel, InnovationProcess, InnovationSpec};
use crate::memtests::{bandwidth, DEFAULT_BANDWIDTH_RATE};

/// Smallest replication count accepted for any experiment.
pub const MIN_REPS: usize = 100;
/// Type I burn-in as a multiple of the largest sample size.
pub const DEFAULT_BURN_FACTOR: usize = 63;
pub const DEFAULT_CALIBRATION_LEN: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    #[serde(alias = "invariance")]
    InvariancePrinciple,
    LrvScaling,
    StatConvergence,
    CorollaryScaling,
    MomentBoundaryDemo,
}

impl Experiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::InvariancePrinciple => "invariance-principle",
            Experiment::LrvScaling => "lrv-scaling",
            Experiment::StatConvergence => "stat-convergence",
            Experiment::CorollaryScaling => "corollary-scaling",
            Experiment::MomentBoundaryDemo => "moment-boundary-demo",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FracConfig {
    pub d: f64,
    #[serde(default)]
    pub p: u32,
    #[serde(default = "default_kind")]
    pub kind: ProcessKind,
    /// Tail tolerance for the Type I cut-off; overrides `burn_factor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_tail: Option<f64>,
    /// Type I burn-in is `burn_factor * max(n_list)` when `eps_tail` is unset.
    #[serde(default = "default_burn_factor")]
    pub burn_factor: usize,
}

fn default_kind() -> ProcessKind {
    ProcessKind::TypeI
}

fn default_burn_factor() -> usize {
    DEFAULT_BURN_FACTOR
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandwidthRule {
    #[serde(default = "default_rate")]
    pub rate: f64,
    /// Fixed bandwidth for every n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
}

fn default_rate() -> f64 {
    DEFAULT_BANDWIDTH_RATE
}

impl Default for BandwidthRule {
    fn default() -> Self {
        BandwidthRule { rate: DEFAULT_BANDWIDTH_RATE, l: None }
    }
}

impl BandwidthRule {
    pub fn l_for(&self, n: usize) -> usize {
        self.l.unwrap_or_else(|| bandwidth(n, self.rate))
    }
}

/// Resolution of the reference tables used by the experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    #[serde(default = "default_table_m")]
    pub m: usize,
    #[serde(default = "default_table_reps")]
    pub reps: usize,
    #[serde(default = "default_table_seed")]
    pub seed: u64,
    #[serde(default = "default_true")]
    pub build_missing: bool,
    /// Resamples used for each KS noise floor.
    #[serde(default = "default_floor_resamples")]
    pub floor_resamples: usize,
}

fn default_table_m() -> usize {
    DEFAULT_TABLE_M
}
fn default_table_reps() -> usize {
    20_000
}
fn default_table_seed() -> u64 {
    DEFAULT_TABLE_SEED
}
fn default_true() -> bool {
    true
}
fn default_floor_resamples() -> usize {
    200
}

impl Default for TableConfig {
    fn default() -> Self {
        TableConfig {
            m: DEFAULT_TABLE_M,
            reps: default_table_reps(),
            seed: DEFAULT_TABLE_SEED,
            build_missing: true,
            floor_resamples: default_floor_resamples(),
        }
    }
}

/// Settings for the size and power columns of the statistic experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestConfig {
    #[serde(default)]
    pub d_null: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
}

fn default_alpha() -> f64 {
    0.05
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig { d_null: 0.0, alpha: 0.05 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ZetaConfig {
    /// Length of the calibration run when no closed form is known.
    #[serde(default = "default_calibration_len")]
    pub calibration_n: usize,
    /// Explicit `‖ζ_0‖`, bypassing both sources.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub norm: Option<f64>,
}

fn default_calibration_len() -> usize {
    DEFAULT_CALIBRATION_LEN
}

impl Default for ZetaConfig {
    fn default() -> Self {
        ZetaConfig { calibration_n: DEFAULT_CALIBRATION_LEN, norm: None }
    }
}

/// Every numeric threshold a verdict can use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub terminal_variance_rel: f64,
    pub ks_alpha: f64,
    pub ks_floor_multiplier: f64,
    pub lrv_median_rel: f64,
    pub kpss_mean_rel: f64,
    pub size_min: f64,
    pub size_max: f64,
    pub power_min: f64,
    pub slope_endpoint_abs: f64,
    pub slope_partial_sum_abs: f64,
    pub slope_sum_sq_abs: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            terminal_variance_rel: 0.10,
            ks_alpha: 0.01,
            ks_floor_multiplier: 2.0,
            lrv_median_rel: 0.20,
            kpss_mean_rel: 0.15,
            size_min: 0.02,
            size_max: 0.09,
            power_min: 0.80,
            slope_endpoint_abs: 0.10,
            slope_partial_sum_abs: 0.15,
            slope_sum_sq_abs: 0.15,
        }
    }
}

/// Which verdicts are produced. Disabled checks are still reported as
/// numbers, just not judged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Checks {
    pub terminal_variance: bool,
    pub terminal_ks: bool,
    pub functional_ks: bool,
    pub lrv_median: bool,
    pub lrv_trend: bool,
    pub kpss_mean: bool,
    pub ks_trend: bool,
    pub size: bool,
    pub power: bool,
    pub power_kpss: bool,
    pub slopes: bool,
    pub divergence: bool,
}

impl Default for Checks {
    fn default() -> Self {
        Checks {
            terminal_variance: true,
            terminal_ks: false,
            functional_ks: false,
            lrv_median: true,
            lrv_trend: true,
            kpss_mean: true,
            ks_trend: false,
            size: false,
            power: false,
            power_kpss: false,
            slopes: true,
            divergence: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub model: InnovationSpec,
    pub frac: FracConfig,
    pub n_list: Vec<usize>,
    pub reps: usize,
    pub seed: u64,
    #[serde(default)]
    pub bandwidth: BandwidthRule,
    #[serde(default = "default_functionals")]
    pub functionals: Vec<Functional>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tables_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub table: TableConfig,
    #[serde(default)]
    pub test: TestConfig,
    #[serde(default)]
    pub zeta: ZetaConfig,
    #[serde(default)]
    pub tolerance: Tolerances,
    #[serde(default)]
    pub checks: Checks,
}

fn default_functionals() -> Vec<Functional> {
    vec![Functional::RangeOfBridge, Functional::SupOfBridge, Functional::IntSqBridge]
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn n_max(&self) -> usize {
        *self.n_list.last().expect("validated non-empty")
    }

    /// Type I cut-off implied by the config.
    pub fn truncation(&self) -> Truncation {
        match self.frac.eps_tail {
            Some(eps) => Truncation::tolerance(eps),
            None => Truncation::Lags(self.frac.burn_factor * self.n_max()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Config(msg));
        if self.reps < MIN_REPS {
            return bad(format!("reps = {} is below the minimum of {MIN_REPS}", self.reps));
        }
        if self.n_list.is_empty() {
            return bad("n_list is empty".into());
        }
        if self.n_list[0] < 2 {
            return bad("every n must be at least 2".into());
        }
        if self.n_list.windows(2).any(|w| w[0] >= w[1]) {
            return bad(format!("n_list {:?} must be strictly increasing", self.n_list));
        }
        if !(self.bandwidth.rate > 0.0 && self.bandwidth.rate < 1.0) {
            return bad(format!("bandwidth.rate = {} must lie in (0, 1)", self.bandwidth.rate));
        }
        if let Some(l) = self.bandwidth.l {
            if l >= self.n_list[0] {
                return bad(format!("bandwidth.l = {l} must be below the smallest n"));
            }
        }
        if let Some(eps) = self.frac.eps_tail {
            if !(eps > 0.0) {
                return bad(format!("frac.eps_tail = {eps} must be positive"));
            }
        }
        if let Some(z) = self.zeta.norm {
            if !(z > 0.0 && z.is_finite()) {
                return bad(format!("zeta.norm = {z} must be positive"));
            }
        }
        if !(self.test.alpha > 0.0 && self.test.alpha < 1.0) {
            return bad(format!("test.alpha = {} must lie in (0, 1)", self.test.alpha));
        }
        check_order(self.test.d_null).map_err(|e| Error::Config(format!("test.d_null: {e}")))?;
        if self.table.floor_resamples == 0 {
            return bad("table.floor_resamples must be positive".into());
        }
        let t = &self.tolerance;
        let all = [
            t.terminal_variance_rel,
            t.ks_alpha,
            t.ks_floor_multiplier,
            t.lrv_median_rel,
            t.kpss_mean_rel,
            t.size_min,
            t.size_max,
            t.power_min,
            t.slope_endpoint_abs,
            t.slope_partial_sum_abs,
            t.slope_sum_sq_abs,
        ];
        if all.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return bad("tolerances must be finite and nonnegative".into());
        }
        match self.experiment {
            Experiment::MomentBoundaryDemo => self.validate_demo()?,
            _ => {
                check_order(self.frac.d).map_err(|e| Error::Config(format!("frac.d: {e}")))?;
                InnovationProcess::new(&self.model)?;
            }
        }
        match self.experiment {
            Experiment::CorollaryScaling => {
                if self.n_list.len() < 3 {
                    return bad("corollary scaling needs at least 3 sample sizes".into());
                }
                if self.frac.p < 1 {
                    return bad("corollary scaling needs frac.p >= 1".into());
                }
            }
            Experiment::MomentBoundaryDemo => {}
            _ if self.frac.p != 0 => {
                return bad(format!("frac.p = {} is only used by corollary-scaling", self.frac.p));
            }
            _ => {}
        }
        Ok(())
    }

    fn validate_demo(&self) -> Result<()> {
        let d = self.frac.d;
        if !(d > -0.5 && d < 0.0) {
            return Err(Error::Config(format!("moment-boundary-demo needs -0.5 < frac.d < 0, got {d}")));
        }
        match self.model.model {
            InnovationModel::HeavyTailEta { q0, .. } => {
                let want = 2.0 / (2.0 * d + 1.0);
                if (q0 - want).abs() > 1e-9 * want {
                    return Err(Error::Config(format!(
                        "heavy-tail q0 = {q0} must equal 2/(2d+1) = {want} for d = {d}"
                    )));
                }
                InnovationProcess::new(&InnovationSpec::iid_gaussian(1.0))?;
                Ok(())
            }
            InnovationModel::IidGaussian { sigma } if sigma > 0.0 => Ok(()),
            _ => Err(Error::Config(format!(
                "moment-boundary-demo needs a heavy-tail-eta or iid-gaussian model, got {}",
                self.model.name()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
experiment = "invariance-principle"
n_list = [256, 1024]
reps = 200
seed = 5

[model]
kind = "iid-gaussian"
sigma = 1.0

[frac]
d = 0.25
kind = "type1"
"#;

    #[test]
    fn parses_with_defaults() {
        let cfg = ExperimentConfig::from_toml(BASE).unwrap();
        assert_eq!(cfg.experiment, Experiment::InvariancePrinciple);
        assert_eq!(cfg.frac.burn_factor, DEFAULT_BURN_FACTOR);
        assert_eq!(cfg.truncation(), Truncation::Lags(63 * 1024));
        assert_eq!(cfg.bandwidth.l_for(1000), 10);
        assert_eq!(cfg.tolerance, Tolerances::default());
        let back = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn guards() {
        let with = |from: &str, to: &str| ExperimentConfig::from_toml(&BASE.replace(from, to));
        assert!(matches!(with("reps = 200", "reps = 10"), Err(Error::Config(_))));
        assert!(with("[256, 1024]", "[1024, 256]").is_err());
        assert!(with("d = 0.25", "d = 0.6").is_err());
        assert!(with("seed = 5", "seed = 5\nbogus = 1").is_err());
        assert!(with("invariance-principle", "corollary-scaling").is_err());
        assert!(with("sigma = 1.0", "sigma = -1.0").is_err());
    }

    #[test]
    fn demo_guards() {
        let demo = BASE
            .replace("invariance-principle", "moment-boundary-demo")
            .replace("d = 0.25", "d = -0.25")
            .replace("kind = \"iid-gaussian\"\nsigma = 1.0", "kind = \"heavy-tail-eta\"\nq0 = 4.0");
        assert!(ExperimentConfig::from_toml(&demo).is_ok());
        assert!(ExperimentConfig::from_toml(&demo.replace("q0 = 4.0", "q0 = 3.0")).is_err());
        let garch = demo.replace("kind = \"heavy-tail-eta\"\nq0 = 4.0", "kind = \"garch11\"\nomega = 0.1\nalpha = 0.1\nbeta = 0.8");
        assert!(ExperimentConfig::from_toml(&garch).is_err());
    }
}
