//! Fractional Brownian motions of both types on `[0, 1]`, their normalizing
//! constants, bridge functionals, and Monte Carlo quantile tables.

mod functionals;
mod simulate;
mod table;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

pub use functionals::{path_functionals, to_bridge, trapezoid_sq, Functional, PathFunctionals};
pub use simulate::{simulate_type1, simulate_type2, CovarianceMethod, Type1Simulator, Type2Simulator};
pub use table::{
    build_quantile_table, build_quantile_tables, pvalue_from_table, QuantileTable, TableKey, TableStore, DEFAULT_TABLE_M,
    DEFAULT_TABLE_REPS, DEFAULT_TABLE_SEED, TABLE_FORMAT_VERSION,
};

use crate::error::{Error, Result};
use crate::fracops::{check_order, ProcessKind};
use crate::quad::tanh_sinh;

/// A path sampled on `m + 1` equally spaced times `0 = t_0 < ... < t_m = 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FbmPath {
    pub kind: ProcessKind,
    pub d: f64,
    pub values: Vec<f64>,
}

impl FbmPath {
    pub fn grid_size(&self) -> usize {
        self.values.len().saturating_sub(1)
    }

    pub fn time(&self, k: usize) -> f64 {
        k as f64 / self.grid_size() as f64
    }
}

/// `A(d) = {1/(2d+1) + ∫_0^∞ [(1+s)^d - s^d]^2 ds}^{1/2}`.
///
/// The integral is mapped to `(0, 1)` by `s = u / (1 - u)`, where the
/// integrand becomes `(1 - u^d)^2 / (1 - u)^{2d+2}`, and evaluated by
/// tanh-sinh quadrature.
pub fn const_a(d: f64) -> Result<f64> {
    check_order(d)?;
    if d == 0.0 {
        return Ok(1.0);
    }
    let (integral, _) = tanh_sinh(
        |u, v| {
            let ln_u = if v < 0.5 { (-v).ln_1p() } else { u.ln() };
            let gap = (-(d * ln_u).exp_m1()).abs();
            if gap == 0.0 {
                return 0.0;
            }
            (2.0 * gap.ln() - (2.0 * d + 2.0) * v.ln()).exp()
        },
        1e-12,
    );
    Ok((1.0 / (2.0 * d + 1.0) + integral).sqrt())
}

fn check_zeta(zeta_norm: f64) -> Result<()> {
    if zeta_norm > 0.0 && zeta_norm.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("zeta_norm", zeta_norm, "(0, inf)"))
    }
}

/// Type I scale `κ_1(d) = A(d) ‖ζ_0‖ / Γ(d + 1)`.
pub fn kappa1(d: f64, zeta_norm: f64) -> Result<f64> {
    check_zeta(zeta_norm)?;
    Ok(const_a(d)? * zeta_norm / gamma(d + 1.0))
}

/// Type II scale `κ_2(d) = ‖ζ_0‖ (2d + 1)^{-1/2} / Γ(d + 1)`.
pub fn kappa2(d: f64, zeta_norm: f64) -> Result<f64> {
    check_zeta(zeta_norm)?;
    check_order(d)?;
    Ok(zeta_norm / (2.0 * d + 1.0).sqrt() / gamma(d + 1.0))
}

/// Scale of the order-`d` partial-sum limit for the given process type.
pub fn kappa(kind: ProcessKind, d: f64, zeta_norm: f64) -> Result<f64> {
    match kind {
        ProcessKind::TypeI => kappa1(d, zeta_norm),
        ProcessKind::TypeII => kappa2(d, zeta_norm),
    }
}

/// `E ∫_0^1 B̃_d(t)^2 dt` for the Type I bridge, `H = d + 1/2`.
pub fn mean_int_sq_bridge(d: f64) -> Result<f64> {
    check_order(d)?;
    let h2 = 2.0 * d + 1.0;
    Ok(1.0 / (h2 + 1.0) + 1.0 / 3.0 - 1.0 / (h2 + 2.0) - 0.5 + 1.0 / ((h2 + 1.0) * (h2 + 2.0)))
}
