use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::FbmPath;

/// Scalar path functionals used as limiting laws of the memory statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Functional {
    /// `sup B̃ - inf B̃` of the bridge.
    RangeOfBridge,
    /// `sup B̃` of the bridge.
    SupOfBridge,
    /// `∫ B̃(t)^2 dt` of the bridge.
    IntSqBridge,
    /// `B(1)`.
    TerminalValue,
}

impl Functional {
    pub const ALL: [Functional; 4] =
        [Functional::RangeOfBridge, Functional::SupOfBridge, Functional::IntSqBridge, Functional::TerminalValue];

    pub fn as_str(self) -> &'static str {
        match self {
            Functional::RangeOfBridge => "range-of-bridge",
            Functional::SupOfBridge => "sup-of-bridge",
            Functional::IntSqBridge => "int-sq-bridge",
            Functional::TerminalValue => "terminal-value",
        }
    }
}

impl fmt::Display for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Functional {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Functional::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| format!("unknown functional {s:?}"))
    }
}

/// `B̃(t_k) = B(t_k) - t_k B(1)`.
pub fn to_bridge(path: &FbmPath) -> FbmPath {
    FbmPath { kind: path.kind, d: path.d, values: bridge_values(&path.values) }
}

fn bridge_values(v: &[f64]) -> Vec<f64> {
    let m = v.len().saturating_sub(1).max(1);
    let end = *v.last().unwrap_or(&0.0);
    let mut out: Vec<f64> = v.iter().enumerate().map(|(k, x)| x - (k as f64 / m as f64) * end).collect();
    if let Some(last) = out.last_mut() {
        *last = 0.0;
    }
    out
}

/// Trapezoidal `∫_0^1 f(t)^2 dt` for values on a uniform grid.
pub fn trapezoid_sq(values: &[f64]) -> f64 {
    let m = values.len().saturating_sub(1);
    if m == 0 {
        return 0.0;
    }
    let inner: f64 = values[1..m].iter().map(|x| x * x).sum();
    let ends = 0.5 * (values[0] * values[0] + values[m] * values[m]);
    (inner + ends) / m as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathFunctionals {
    pub range_of_bridge: f64,
    pub sup_bridge: f64,
    pub int_sq_bridge: f64,
    pub terminal: f64,
}

impl PathFunctionals {
    pub fn get(&self, f: Functional) -> f64 {
        match f {
            Functional::RangeOfBridge => self.range_of_bridge,
            Functional::SupOfBridge => self.sup_bridge,
            Functional::IntSqBridge => self.int_sq_bridge,
            Functional::TerminalValue => self.terminal,
        }
    }
}

pub fn path_functionals(path: &FbmPath) -> PathFunctionals {
    let bridge = bridge_values(&path.values);
    let (lo, hi) = bridge
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    PathFunctionals {
        range_of_bridge: hi - lo,
        sup_bridge: hi,
        int_sq_bridge: trapezoid_sq(&bridge),
        terminal: *path.values.last().unwrap_or(&0.0),
    }
}
