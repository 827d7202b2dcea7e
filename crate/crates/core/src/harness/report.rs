use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{Experiment, ExperimentConfig};
use crate::error::{Error, Result};
use crate::innovations::MomentCompatibility;

pub const MC_REPORT_FORMAT_VERSION: u32 = 1;

/// Where `‖ζ_0‖` came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZetaSource {
    Analytic,
    Calibration,
    Config,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaInfo {
    #[serde(with = "crate::num_serde")]
    pub norm: f64,
    pub source: ZetaSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    #[serde(with = "crate::num_serde")]
    pub mean: f64,
    #[serde(with = "crate::num_serde")]
    pub variance: f64,
    /// Standard error of `variance`.
    #[serde(with = "crate::num_serde")]
    pub variance_se: f64,
    #[serde(with = "crate::num_serde")]
    pub median: f64,
    #[serde(with = "crate::num_serde")]
    pub min: f64,
    #[serde(with = "crate::num_serde")]
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KsSummary {
    #[serde(with = "crate::num_serde")]
    pub distance: f64,
    /// 95% point of the same-size resampling distance; absent for analytic
    /// references, where `p_value` is given instead.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_floor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p_value: Option<f64>,
    pub reference: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NSummary {
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    pub metrics: BTreeMap<String, MetricSummary>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub ks: BTreeMap<String, KsSummary>,
    /// Derived scalars (relative errors, rejection rates, ...).
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default, with = "crate::num_serde::map")]
    pub values: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slope {
    #[serde(with = "crate::num_serde")]
    pub estimate: f64,
    #[serde(with = "crate::num_serde")]
    pub std_err: f64,
    #[serde(with = "crate::num_serde")]
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub check: String,
    pub passed: bool,
    #[serde(with = "crate::num_serde")]
    pub observed: f64,
    #[serde(with = "crate::num_serde")]
    pub target: f64,
    /// Name of the `tolerance.*` key (or fixed rule) used.
    pub tolerance_name: String,
    #[serde(with = "crate::num_serde")]
    pub tolerance: f64,
    pub rule: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub format_version: u32,
    pub experiment: Experiment,
    pub config: ExperimentConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub zeta: Option<ZetaInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    pub moment_compat: MomentCompatibility,
    /// Prominent flag for runs outside the theorem's moment condition.
    pub moment_warning: Option<String>,
    #[serde(with = "crate::num_serde::map")]
    pub targets: BTreeMap<String, f64>,
    pub per_n: Vec<NSummary>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty", default)]
    pub slopes: BTreeMap<String, Slope>,
    pub verdicts: Vec<Verdict>,
}

/// One value of the companion CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub n: usize,
    pub replication: usize,
    pub metric: &'static str,
    pub value: f64,
}

/// A finished run: the report plus its per-replication rows.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: McReport,
    pub rows: Vec<CsvRow>,
}

impl McReport {
    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Format {
            what: "experiment report",
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    /// CSV of the per-n summaries: `n,metric,value`.
    pub fn summary_csv(&self) -> String {
        let mut out = String::from("n,metric,value\n");
        for s in &self.per_n {
            for (name, m) in &s.metrics {
                for (stat, v) in [("mean", m.mean), ("variance", m.variance), ("median", m.median)] {
                    let _ = writeln!(out, "{},{name}_{stat},{v:?}", s.n);
                }
            }
            for (name, k) in &s.ks {
                let _ = writeln!(out, "{},ks_{name},{:?}", s.n, k.distance);
            }
            for (name, v) in &s.values {
                let _ = writeln!(out, "{},{name},{v:?}", s.n);
            }
        }
        out
    }
}

pub fn rows_csv(rows: &[CsvRow]) -> String {
    let mut out = String::with_capacity(32 * rows.len() + 32);
    out.push_str("n,replication,metric,value\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{:?}", r.n, r.replication, r.metric, r.value);
    }
    out
}

impl RunOutput {
    /// Writes `report.json`, `replications.csv` and `summary.csv` under `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let files = [
            ("report.json", self.report.to_json()),
            ("replications.csv", rows_csv(&self.rows)),
            ("summary.csv", self.report.summary_csv()),
        ];
        let mut paths = Vec::new();
        for (name, body) in files {
            let p = dir.join(name);
            fs::write(&p, body)?;
            paths.push(p);
        }
        Ok(paths)
    }
}
