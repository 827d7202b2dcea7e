//! Monte Carlo experiments that check the limit theorems at desk scale.
//!
//! Each runner takes an [`ExperimentConfig`] and returns the report together
//! with per-replication rows. Runs are pure functions of the config: worker
//! count affects speed only.

mod config;
mod experiments;
mod generate;
mod ks;
mod report;

use std::path::PathBuf;

pub use config::{
    BandwidthRule, Checks, Experiment, ExperimentConfig, FracConfig, TableConfig, TestConfig, Tolerances,
    ZetaConfig, DEFAULT_BURN_FACTOR, DEFAULT_CALIBRATION_LEN, MIN_REPS,
};
pub use experiments::{
    boundary_scale, run, run_corollary_scaling, run_invariance, run_lrv_scaling, run_moment_boundary_demo,
    run_stat_convergence, run_with_tables,
};
pub use generate::{replicate, replicate_pairs, SeriesGenerator};
pub use ks::{
    kolmogorov_survival, ks_distance, ks_noise_floor, ks_pvalue, ks_sorted_pair, normal_cdf, upper_quantile,
    Reference,
};
pub use report::{
    rows_csv, CsvRow, KsSummary, McReport, MetricSummary, NSummary, RunOutput, Slope, Verdict, ZetaInfo,
    ZetaSource, MC_REPORT_FORMAT_VERSION,
};

/// Environment variable naming the default tables directory.
pub const TABLES_ENV: &str = "FRACINV_TABLES";

/// `$FRACINV_TABLES`, or `tables` in the working directory.
pub fn default_tables_dir() -> PathBuf {
    std::env::var_os(TABLES_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("tables"))
}

/// Mean, variance (with its standard error), median and range.
pub fn summarize(x: &[f64]) -> MetricSummary {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let m2 = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let m4 = x.iter().map(|v| (v - mean).powi(4)).sum::<f64>() / n;
    let variance = if x.len() > 1 { m2 / (n - 1.0) } else { 0.0 };
    let pop = m2 / n;
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    MetricSummary {
        mean,
        variance,
        variance_se: ((m4 - pop * pop).max(0.0) / n).sqrt(),
        median: median_sorted(&s),
        min: s.first().copied().unwrap_or(f64::NAN),
        max: s.last().copied().unwrap_or(f64::NAN),
    }
}

fn median_sorted(s: &[f64]) -> f64 {
    match s.len() {
        0 => f64::NAN,
        n if n % 2 == 1 => s[n / 2],
        n => 0.5 * (s[n / 2 - 1] + s[n / 2]),
    }
}

pub fn median(x: &[f64]) -> f64 {
    let mut s = x.to_vec();
    s.sort_by(f64::total_cmp);
    median_sorted(&s)
}

/// Least-squares slope of `y` on `x` with its standard error.
pub fn ols_slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let k = x.len() as f64;
    let mx = x.iter().sum::<f64>() / k;
    let my = y.iter().sum::<f64>() / k;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - my - slope * (a - mx)).powi(2)).sum();
    let se = if x.len() > 2 { (ssr / (k - 2.0) / sxx).sqrt() } else { f64::NAN };
    (slope, se)
}
