//! Bartlett long-run variance and the R/S and KPSS long-memory statistics.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fbm::{pvalue_from_table, Functional, TableStore};
use crate::fft::{lag_products_direct, lag_products_fft};
use crate::fracops::ProcessKind;
use crate::innovations::{check_moment_compat, InnovationSpec, MomentContext};

/// Sample sizes from which autocovariances are computed by FFT.
pub const LRV_FFT_THRESHOLD: usize = 2048;
pub const DEFAULT_BANDWIDTH_RATE: f64 = 1.0 / 3.0;
pub const REPORT_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrvEstimate {
    pub w2: f64,
    pub l: usize,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LrvMethod {
    Auto,
    Direct,
    Fft,
}

fn check_len(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::domain("n", n as f64, "[2, inf)"));
    }
    Ok(())
}

fn deviations(x: &[f64]) -> Vec<f64> {
    // Exact zeros for constant input, which the mean may not reproduce.
    if x.iter().all(|&v| v == x[0]) {
        return vec![0.0; x.len()];
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| v - mean).collect()
}

/// `w² = γ̂_0 + 2 Σ_{j=1..l} (1 - j/(l+1)) γ̂_j` with `1/n` autocovariances.
pub fn bartlett_lrv(x: &[f64], l: usize) -> Result<LrvEstimate> {
    bartlett_lrv_with(x, l, LrvMethod::Auto)
}

pub fn bartlett_lrv_with(x: &[f64], l: usize, method: LrvMethod) -> Result<LrvEstimate> {
    let n = x.len();
    check_len(n)?;
    if l >= n {
        return Err(Error::Bandwidth { l, n });
    }
    Ok(LrvEstimate { w2: lrv_of_deviations(&deviations(x), l, method), l, n })
}

fn lrv_of_deviations(dev: &[f64], l: usize, method: LrvMethod) -> f64 {
    let n = dev.len();
    let fast = match method {
        LrvMethod::Auto => n >= LRV_FFT_THRESHOLD,
        LrvMethod::Direct => false,
        LrvMethod::Fft => true,
    };
    let prods = if fast { lag_products_fft(dev, l) } else { lag_products_direct(dev, l) };
    let lp1 = (l + 1) as f64;
    let mut s = prods[0];
    for (j, p) in prods.iter().enumerate().skip(1) {
        s += 2.0 * (1.0 - j as f64 / lp1) * p;
    }
    (s / n as f64).max(0.0)
}

/// `l = max(1, ⌊n^{1/3}⌋)`.
pub fn default_bandwidth(n: usize) -> usize {
    bandwidth(n, DEFAULT_BANDWIDTH_RATE)
}

/// `l = max(1, ⌊n^rate⌋)`, kept below `n`. Powers that land within rounding
/// of an integer (`1000^{1/3}`) are snapped to it.
pub fn bandwidth(n: usize, rate: f64) -> usize {
    let raw = (n as f64).powf(rate);
    let near = raw.round();
    let l = if (raw - near).abs() <= 1e-9 * near.max(1.0) { near } else { raw.floor() };
    (l as usize).max(1).min(n.saturating_sub(1).max(1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Statistic {
    #[serde(rename = "RS", alias = "rs")]
    Rs,
    #[serde(rename = "KPSS", alias = "kpss")]
    Kpss,
}

impl Statistic {
    pub fn as_str(self) -> &'static str {
        match self {
            Statistic::Rs => "RS",
            Statistic::Kpss => "KPSS",
        }
    }

    /// Limit-law functional of the Type I bridge.
    pub fn functional(self) -> Functional {
        match self {
            Statistic::Rs => Functional::RangeOfBridge,
            Statistic::Kpss => Functional::IntSqBridge,
        }
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Statistic {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "rs" | "r/s" => Ok(Statistic::Rs),
            "kpss" => Ok(Statistic::Kpss),
            _ => Err(format!("unknown statistic {s:?} (expected rs or kpss)")),
        }
    }
}

/// Both statistics from a single pass over the cumulative deviations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StatPair {
    pub q: f64,
    pub k: f64,
    pub lrv: LrvEstimate,
}

pub fn statistics(x: &[f64], l: usize) -> Result<StatPair> {
    let n = x.len();
    check_len(n)?;
    if l >= n {
        return Err(Error::Bandwidth { l, n });
    }
    let dev = deviations(x);
    let w2 = lrv_of_deviations(&dev, l, LrvMethod::Auto);
    let scale2 = dev.iter().map(|v| v * v).sum::<f64>() / n as f64;
    if !(w2 > 1e-24 * scale2) || w2 == 0.0 {
        return Err(Error::DegenerateVariance);
    }
    let (mut s, mut hi, mut lo, mut sq) = (0.0f64, f64::NEG_INFINITY, f64::INFINITY, 0.0f64);
    for v in &dev {
        s += v;
        hi = hi.max(s);
        lo = lo.min(s);
        sq += s * s;
    }
    let nf = n as f64;
    Ok(StatPair { q: (hi - lo) / w2.sqrt(), k: sq / (w2 * nf * nf), lrv: LrvEstimate { w2, l, n } })
}

/// `Q_n = (max_k S_k - min_k S_k) / w_{n,l}`.
pub fn rs_statistic(x: &[f64], l: usize) -> Result<f64> {
    Ok(statistics(x, l)?.q)
}

/// `K_n = Σ_k S_k² / (w²_{n,l} n²)`.
pub fn kpss_statistic(x: &[f64], l: usize) -> Result<f64> {
    Ok(statistics(x, l)?.k)
}

/// `l^d n^{-(d+1/2)} Q_n` or `l^{2d} n^{-2d} K_n`.
pub fn normalize_statistic(stat: Statistic, value: f64, n: usize, l: usize, d: f64) -> f64 {
    let (n, l) = (n as f64, l as f64);
    match stat {
        Statistic::Rs => value * l.powf(d) * n.powf(-(d + 0.5)),
        Statistic::Kpss => value * l.powf(2.0 * d) * n.powf(-2.0 * d),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub format_version: u32,
    pub statistic: Statistic,
    pub raw: f64,
    pub d_assumed: f64,
    pub normalized: f64,
    pub l: usize,
    pub n: usize,
    pub w2: f64,
    pub p_value: f64,
    pub table_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub moment_compatible: Option<bool>,
}

/// Long-memory test with a right-tail Monte Carlo p-value from the Type I
/// bridge table at `d_null`. `l = None` uses [`default_bandwidth`].
pub fn long_memory_test(
    x: &[f64],
    statistic: Statistic,
    l: Option<usize>,
    d_null: f64,
    tables: &TableStore,
    model: Option<&InnovationSpec>,
) -> Result<TestReport> {
    let n = x.len();
    let l = l.unwrap_or_else(|| default_bandwidth(n));
    let pair = statistics(x, l)?;
    let raw = match statistic {
        Statistic::Rs => pair.q,
        Statistic::Kpss => pair.k,
    };
    let normalized = normalize_statistic(statistic, raw, n, l, d_null);
    let table = tables.get(statistic.functional(), ProcessKind::TypeI, d_null)?;
    Ok(TestReport {
        format_version: REPORT_FORMAT_VERSION,
        statistic,
        raw,
        d_assumed: d_null,
        normalized,
        l,
        n,
        w2: pair.lrv.w2,
        p_value: pvalue_from_table(&table, normalized),
        table_id: table.id(),
        moment_compatible: model.map(|m| check_moment_compat(m, d_null, MomentContext::MemoryTest).ok),
    })
}
