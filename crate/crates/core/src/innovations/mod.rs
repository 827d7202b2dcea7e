//! Causal nonlinear short-memory innovations and their dependence diagnostics.

mod heavy_tail;
mod spec;

use std::sync::OnceLock;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, StudentT};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use heavy_tail::HeavyTailEta;
pub use spec::{InnovationModel, InnovationSpec, Noise, DEFAULT_BURN_IN};

use crate::error::{Error, Result};
use crate::memtests::bartlett_lrv;
use crate::seed::{derive_named, derive_seed, rng_from_seed, McRng};
use crate::series::SeriesPath;

const CALIBRATION_LEN: usize = 200_000;
const CALIBRATION_SEED: u64 = 0x5EED_CA11;

/// Where a centring constant or second moment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentSource {
    Analytic,
    Calibrated,
}

/// A validated innovation model, ready to sample.
///
/// Model-level constants (the centring mean and, where no closed form is
/// known, the second moment) are computed once here rather than per draw.
#[derive(Debug)]
pub struct InnovationProcess {
    spec: InnovationSpec,
    inner: Option<Box<InnovationProcess>>,
    mean: f64,
    mean_source: MomentSource,
    calibrated: OnceLock<(f64, f64)>,
}

impl InnovationProcess {
    pub fn new(spec: &InnovationSpec) -> Result<Self> {
        validate(spec)?;
        let inner = match &spec.model {
            InnovationModel::ArmaFilter { inner, .. } => Some(Box::new(InnovationProcess::new(inner)?)),
            _ => None,
        };
        let mut process = Self {
            spec: spec.clone(),
            inner,
            mean: 0.0,
            mean_source: MomentSource::Analytic,
            calibrated: OnceLock::new(),
        };
        match &spec.model {
            InnovationModel::Bilinear { a, b, noise } => {
                // E u = a E u + b E[ε_{t-1} u_{t-1}] = a E u + b Var ε
                process.mean = b * noise.variance() / (1.0 - a);
            }
            InnovationModel::ThresholdAr { .. } => {
                let raw = process.raw_calibration_run();
                process.mean = raw.iter().sum::<f64>() / raw.len() as f64;
                process.mean_source = MomentSource::Calibrated;
            }
            _ => {}
        }
        Ok(process)
    }

    pub fn spec(&self) -> &InnovationSpec {
        &self.spec
    }

    /// Constant subtracted from the raw recursion output.
    pub fn centering(&self) -> (f64, MomentSource) {
        (self.mean, self.mean_source)
    }

    pub fn burn_in(&self) -> usize {
        self.spec.burn_in()
    }

    fn noise(&self) -> Noise {
        match &self.spec.model {
            InnovationModel::IidGaussian { sigma } => Noise::Gaussian { sigma: *sigma },
            InnovationModel::IidStudentT { nu, scale } => Noise::StudentT { nu: *nu, scale: *scale },
            InnovationModel::LinearMa { noise, .. }
            | InnovationModel::Garch11 { noise, .. }
            | InnovationModel::Bilinear { noise, .. }
            | InnovationModel::ThresholdAr { noise, .. } => *noise,
            InnovationModel::ArmaFilter { .. } => self.inner.as_ref().unwrap().noise(),
            InnovationModel::HeavyTailEta { .. } | InnovationModel::Constant { .. } => Noise::default(),
        }
    }

    fn draw_noise(&self, len: usize, rng: &mut McRng) -> Vec<f64> {
        sample_noise(self.noise(), len, rng)
    }

    /// Maps a driving-noise path to the raw (uncentred) output, including the
    /// warm-up positions.
    fn transform(&self, eps: &[f64]) -> Vec<f64> {
        match &self.spec.model {
            InnovationModel::IidGaussian { .. } | InnovationModel::IidStudentT { .. } => eps.to_vec(),
            InnovationModel::Constant { value } => vec![*value; eps.len()],
            InnovationModel::LinearMa { b, .. } => (0..eps.len())
                .map(|t| b.iter().take(t + 1).enumerate().map(|(k, bk)| bk * eps[t - k]).sum())
                .collect(),
            InnovationModel::Garch11 {
                omega,
                alpha,
                beta,
                noise,
            } => {
                let v = noise.variance();
                let mut sigma2 = omega / (1.0 - alpha * v - beta);
                eps.iter()
                    .map(|&e| {
                        let u = sigma2.sqrt() * e;
                        sigma2 = omega + alpha * u * u + beta * sigma2;
                        u
                    })
                    .collect()
            }
            InnovationModel::Bilinear { a, b, .. } => {
                let (mut u_prev, mut e_prev) = (0.0, 0.0);
                eps.iter()
                    .map(|&e| {
                        let u = (a + b * e_prev) * u_prev + e;
                        u_prev = u;
                        e_prev = e;
                        u
                    })
                    .collect()
            }
            InnovationModel::ThresholdAr { a_pos, a_neg, .. } => {
                let mut u_prev = 0.0f64;
                eps.iter()
                    .map(|&e| {
                        let u = a_pos * u_prev.max(0.0) + a_neg * u_prev.min(0.0) + e;
                        u_prev = u;
                        u
                    })
                    .collect()
            }
            InnovationModel::ArmaFilter { ar, ma, .. } => {
                let inner = self.inner.as_ref().unwrap();
                let v: Vec<f64> = inner.transform(eps).into_iter().map(|x| x - inner.mean).collect();
                let mut u = vec![0.0; v.len()];
                for t in 0..v.len() {
                    let mut acc = v[t];
                    for (j, th) in ma.iter().enumerate() {
                        if t > j {
                            acc += th * v[t - j - 1];
                        }
                    }
                    for (i, ph) in ar.iter().enumerate() {
                        if t > i {
                            acc += ph * u[t - i - 1];
                        }
                    }
                    u[t] = acc;
                }
                u
            }
            InnovationModel::HeavyTailEta { .. } => unreachable!("rejected at construction"),
        }
    }

    /// `u_1..u_n`, centred, after discarding the warm-up.
    pub fn sample(&self, n: usize, rng: &mut McRng) -> Vec<f64> {
        let burn = self.burn_in();
        let eps = self.draw_noise(burn + n, rng);
        let mut u = self.transform(&eps);
        u.drain(..burn);
        if self.mean != 0.0 {
            for x in &mut u {
                *x -= self.mean;
            }
        }
        u
    }

    fn raw_calibration_run(&self) -> Vec<f64> {
        let burn = self.burn_in();
        let mut rng = rng_from_seed(derive_named(CALIBRATION_SEED, self.spec.name()));
        let eps = self.draw_noise(burn + CALIBRATION_LEN, &mut rng);
        let mut u = self.transform(&eps);
        u.drain(..burn);
        u
    }

    fn calibrated_moments(&self) -> (f64, f64) {
        *self.calibrated.get_or_init(|| {
            let u = self.sample(CALIBRATION_LEN, &mut rng_from_seed(derive_named(CALIBRATION_SEED, "moments")));
            let n = u.len() as f64;
            let mean = u.iter().sum::<f64>() / n;
            let second = u.iter().map(|x| x * x).sum::<f64>() / n;
            (mean, second)
        })
    }

    /// `E u_t^2` in closed form when the model has one.
    pub fn analytic_second_moment(&self) -> Option<f64> {
        match &self.spec.model {
            InnovationModel::IidGaussian { sigma } => Some(sigma * sigma),
            InnovationModel::IidStudentT { .. } => Some(self.noise().variance()),
            InnovationModel::Constant { value } => Some(value * value),
            InnovationModel::LinearMa { b, noise } => Some(noise.variance() * b.iter().map(|x| x * x).sum::<f64>()),
            InnovationModel::Garch11 {
                omega,
                alpha,
                beta,
                noise,
            } => {
                let v = noise.variance();
                Some(omega * v / (1.0 - alpha * v - beta))
            }
            _ => None,
        }
    }

    /// Root mean square of `u_t`.
    pub fn rms(&self) -> f64 {
        self.analytic_second_moment()
            .unwrap_or_else(|| self.calibrated_moments().1)
            .sqrt()
    }

    /// `‖ζ_0‖² = 2π f_u(0)` in closed form, when available.
    pub fn analytic_zeta_norm2(&self) -> Option<f64> {
        match &self.spec.model {
            InnovationModel::IidGaussian { .. }
            | InnovationModel::IidStudentT { .. }
            | InnovationModel::Garch11 { .. } => self.analytic_second_moment(),
            InnovationModel::LinearMa { b, noise } => {
                let s: f64 = b.iter().sum();
                Some(noise.variance() * s * s)
            }
            InnovationModel::ArmaFilter { ar, ma, .. } => {
                let gain = (1.0 + ma.iter().sum::<f64>()) / (1.0 - ar.iter().sum::<f64>());
                self.inner.as_ref()?.analytic_zeta_norm2().map(|z| gain * gain * z)
            }
            _ => None,
        }
    }
}

fn validate(spec: &InnovationSpec) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidModel(msg));
    let check_noise = |noise: &Noise| -> Result<()> {
        match *noise {
            Noise::Gaussian { sigma } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidModel(format!("noise sigma must be positive, got {sigma}")))
            }
            Noise::StudentT { nu, scale } if !(nu > 2.0 && scale > 0.0 && nu.is_finite()) => Err(Error::InvalidModel(
                format!("Student-t noise needs nu > 2 and scale > 0, got nu={nu}, scale={scale}"),
            )),
            _ => Ok(()),
        }
    };
    let q = spec.q_moment();
    if !(q >= 2.0) {
        return bad(format!("declared moment order must be at least 2, got {q}"));
    }
    match &spec.model {
        InnovationModel::IidGaussian { sigma } => check_noise(&Noise::Gaussian { sigma: *sigma }),
        InnovationModel::IidStudentT { nu, scale } => check_noise(&Noise::StudentT { nu: *nu, scale: *scale }),
        InnovationModel::Constant { value } => {
            if value.is_finite() {
                Ok(())
            } else {
                bad("constant must be finite".into())
            }
        }
        InnovationModel::LinearMa { b, noise } => {
            check_noise(noise)?;
            if b.is_empty() || b.iter().any(|x| !x.is_finite()) {
                return bad("linear MA needs at least one finite weight".into());
            }
            if spec.burn_in() + 1 < b.len() {
                return bad(format!("burn-in must be at least {} for {} MA weights", b.len() - 1, b.len()));
            }
            Ok(())
        }
        InnovationModel::Garch11 {
            omega,
            alpha,
            beta,
            noise,
        } => {
            check_noise(noise)?;
            let v = noise.variance();
            if !(*omega > 0.0 && *alpha >= 0.0 && *beta >= 0.0 && alpha * v + beta < 1.0) {
                return bad(format!(
                    "GARCH(1,1) needs omega > 0, alpha, beta >= 0 and alpha Var(eps) + beta < 1; \
                     got omega={omega}, alpha={alpha}, beta={beta}"
                ));
            }
            Ok(())
        }
        InnovationModel::Bilinear { a, b, noise } => {
            check_noise(noise)?;
            if !(a.abs() < 1.0) {
                return bad(format!("bilinear model needs |a| < 1 for a finite mean, got {a}"));
            }
            let lyapunov = bilinear_log_contraction(*a, *b, noise);
            if !(lyapunov < 0.0) {
                return bad(format!("bilinear model is not contracting: E log|a + b eps| = {lyapunov:.4}"));
            }
            Ok(())
        }
        InnovationModel::ThresholdAr { a_pos, a_neg, noise } => {
            check_noise(noise)?;
            if !(a_pos.abs().max(a_neg.abs()) < 1.0) {
                return bad(format!("threshold AR needs max(|a+|, |a-|) < 1, got {a_pos}, {a_neg}"));
            }
            Ok(())
        }
        InnovationModel::ArmaFilter { ar, ma, inner } => {
            if ar.iter().chain(ma).any(|x| !x.is_finite()) {
                return bad("ARMA coefficients must be finite".into());
            }
            if !ar_is_stationary(ar) {
                return bad(format!("AR polynomial {ar:?} has a root on or inside the unit circle"));
            }
            if matches!(inner.model, InnovationModel::HeavyTailEta { .. }) {
                return bad("heavy-tail eta cannot drive an ARMA filter".into());
            }
            validate(inner)
        }
        InnovationModel::HeavyTailEta { .. } => {
            bad("heavy-tail eta is only available in the moment-boundary demonstration".into())
        }
    }
}

fn sample_noise(noise: Noise, len: usize, rng: &mut McRng) -> Vec<f64> {
    match noise {
        Noise::Gaussian { sigma } => (0..len).map(|_| sigma * standard_normal(rng)).collect(),
        Noise::StudentT { nu, scale } => {
            let t = StudentT::new(nu).expect("validated degrees of freedom");
            (0..len).map(|_| scale * t.sample(rng)).collect()
        }
    }
}

/// Monte Carlo estimate of `E log|a + b ε|`, fixed seed.
fn bilinear_log_contraction(a: f64, b: f64, noise: &Noise) -> f64 {
    let mut rng = rng_from_seed(derive_named(CALIBRATION_SEED, "bilinear"));
    let eps = sample_noise(*noise, CALIBRATION_LEN, &mut rng);
    eps.iter().map(|e| (a + b * e).abs().ln()).sum::<f64>() / eps.len() as f64
}

/// Step-down (Schur–Cohn) test on `x_t = sum φ_i x_{t-i} + e_t`.
pub fn ar_is_stationary(ar: &[f64]) -> bool {
    let mut phi = ar.to_vec();
    while let Some(&k) = phi.last() {
        if !(k.abs() < 1.0) {
            return false;
        }
        let p = phi.len();
        let denom = 1.0 - k * k;
        let next: Vec<f64> = (0..p - 1).map(|j| (phi[j] + k * phi[p - 2 - j]) / denom).collect();
        phi = next;
    }
    true
}

/// Draws `u_1..u_n` from `spec`.
pub fn gen(spec: &InnovationSpec, n: usize, seed: u64) -> Result<SeriesPath> {
    if n == 0 {
        return Err(Error::Empty("series length must be at least 1"));
    }
    let process = InnovationProcess::new(spec)?;
    Ok(process.sample(n, &mut rng_from_seed(seed)).into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MomentContext {
    /// Functional CLT for partial sums.
    InvariancePrinciple,
    /// R/S and KPSS limit laws.
    MemoryTest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentCompatibility {
    pub d: f64,
    #[serde(with = "crate::num_serde")]
    pub q_required: f64,
    #[serde(with = "crate::num_serde")]
    pub q_declared: f64,
    /// Whether the requirement is `q > q_required` rather than `q >= q_required`.
    pub strict: bool,
    pub ok: bool,
}

pub fn check_moment_compat(spec: &InnovationSpec, d: f64, context: MomentContext) -> MomentCompatibility {
    let q_declared = spec.q_moment();
    let (q_required, strict) = match context {
        MomentContext::InvariancePrinciple if d < 0.0 => (2.0 / (2.0 * d + 1.0), true),
        MomentContext::InvariancePrinciple => (2.0, false),
        MomentContext::MemoryTest => (f64::max(2.0, 2.0 / (2.0 * d + 1.0)), true),
    };
    let ok = if strict {
        q_declared > q_required
    } else {
        q_declared >= q_required
    };
    MomentCompatibility {
        d,
        q_required,
        q_declared,
        strict,
        ok,
    }
}

/// Monte Carlo coupled-output dependence curve.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DependenceCurve {
    pub q: f64,
    pub reps: usize,
    /// `Δ_q(k) = ‖u_k - u_k*‖_q`, `k = 0..=k_max`.
    pub delta: Vec<f64>,
    pub std_err: Vec<f64>,
    /// Set when `q` exceeds the model's declared moment order.
    pub q_exceeds_declared: bool,
}

/// Estimates `Δ_q(k) = ‖u_k - u_k*‖_q`, where `u_k*` is the same path with
/// `ε_0` replaced by an independent copy.
///
/// This bounds the predictive dependence measure from above, since
/// conditional expectation is a contraction in `L^q`.
pub fn coupled_dependence(
    spec: &InnovationSpec,
    k_max: usize,
    q: f64,
    reps: usize,
    seed: u64,
) -> Result<DependenceCurve> {
    if reps < 100 {
        return Err(Error::Config(format!("coupled dependence needs at least 100 replications, got {reps}")));
    }
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::domain("q", q, "[1, inf)"));
    }
    let process = InnovationProcess::new(spec)?;
    let burn = process.burn_in();
    let len = burn + k_max + 1;
    let diffs: Vec<Vec<f64>> = (0..reps as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = rng_from_seed(derive_seed(seed, r));
            let mut eps = process.draw_noise(len + 1, &mut rng);
            let replacement = eps.pop().unwrap();
            let u = process.transform(&eps);
            eps[burn] = replacement;
            let u_star = process.transform(&eps);
            (0..=k_max).map(|k| (u[burn + k] - u_star[burn + k]).abs().powf(q)).collect()
        })
        .collect();

    let n = reps as f64;
    let mut delta = Vec::with_capacity(k_max + 1);
    let mut std_err = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let mean = diffs.iter().map(|d| d[k]).sum::<f64>() / n;
        let var = diffs.iter().map(|d| (d[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let se_mean = (var / n).sqrt();
        let dq = mean.powf(1.0 / q);
        // delta method for m^{1/q}
        let se = if mean > 0.0 { dq / (q * mean) * se_mean } else { 0.0 };
        delta.push(dq);
        std_err.push(se);
    }
    Ok(DependenceCurve {
        q,
        reps,
        delta,
        std_err,
        q_exceeds_declared: q > spec.q_moment(),
    })
}

/// Bartlett estimate of `‖ζ_0‖² = 2π f_u(0)`.
pub fn lrv_innovations(u: &[f64], l: usize) -> Result<f64> {
    Ok(bartlett_lrv(u, l)?.w2)
}

/// Draws `n` iid heavy-tailed variables on the `q0` moment boundary.
pub fn gen_heavy_tail_eta(q0: f64, v0: f64, n: usize, seed: u64) -> Result<SeriesPath> {
    let law = HeavyTailEta::new(q0, v0)?;
    Ok(law.sample(n, &mut rng_from_seed(seed)).into())
}

/// Draws one standard normal; shared by the simulators.
pub(crate) fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}
