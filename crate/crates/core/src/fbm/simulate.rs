use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::FbmPath;
use crate::error::{Error, Result};
use crate::fft::{convolve_direct, FftConvolver, FFT_THRESHOLD};
use crate::fracops::{check_order, ProcessKind};
use crate::innovations::standard_normal;
use crate::seed::rng_from_seed;

/// How the Type I increments were generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CovarianceMethod {
    CirculantEmbedding,
    Cholesky,
}

/// Autocovariance of unit-variance fractional Gaussian noise.
fn fgn_autocov(k: usize, hurst: f64) -> f64 {
    let k = k as f64;
    let h2 = 2.0 * hurst;
    0.5 * ((k + 1.0).powf(h2) - 2.0 * k.powf(h2) + (k - 1.0).abs().powf(h2))
}

enum Sampler {
    Circulant {
        sqrt_weights: Vec<f64>,
        fft: Arc<dyn Fft<f64>>,
    },
    Cholesky {
        lower: Vec<f64>,
    },
}

/// Reusable exact sampler for Type I fBm on a power-of-two grid.
///
/// Increments are fractional Gaussian noise with `H = d + 1/2`, generated by
/// circulant embedding of the autocovariance. If the embedding has a
/// negative eigenvalue the sampler falls back to a dense Cholesky factor.
pub struct Type1Simulator {
    d: f64,
    m: usize,
    scale: f64,
    sampler: Sampler,
}

impl Type1Simulator {
    pub fn new(d: f64, m: usize) -> Result<Self> {
        check_order(d)?;
        if m < 2 || !m.is_power_of_two() {
            return Err(Error::GridSize(m));
        }
        let hurst = d + 0.5;
        let acov: Vec<f64> = (0..=m).map(|k| fgn_autocov(k, hurst)).collect();
        let len = 2 * m;
        let mut row: Vec<Complex64> = (0..len)
            .map(|k| Complex64::new(acov[if k <= m { k } else { len - k }], 0.0))
            .collect();
        let fft = FftPlanner::new().plan_fft_forward(len);
        fft.process(&mut row);
        let floor = -1e-9 * row[0].re.abs().max(1.0);
        let sampler = if row.iter().all(|z| z.re >= floor) {
            let sqrt_weights = row.iter().map(|z| (z.re.max(0.0) / len as f64).sqrt()).collect();
            Sampler::Circulant { sqrt_weights, fft }
        } else {
            log::warn!("circulant embedding not nonnegative for d = {d}, m = {m}; using Cholesky");
            Sampler::Cholesky { lower: cholesky(&acov[..m], m)? }
        };
        Ok(Type1Simulator { d, m, scale: (m as f64).powf(-hurst), sampler })
    }

    pub fn method(&self) -> CovarianceMethod {
        match self.sampler {
            Sampler::Circulant { .. } => CovarianceMethod::CirculantEmbedding,
            Sampler::Cholesky { .. } => CovarianceMethod::Cholesky,
        }
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    /// Unit-variance fractional Gaussian noise of length `m`.
    pub fn increments<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        match &self.sampler {
            Sampler::Circulant { sqrt_weights, fft } => {
                let mut w: Vec<Complex64> = sqrt_weights
                    .iter()
                    .map(|&s| {
                        let re = standard_normal(rng);
                        let im = standard_normal(rng);
                        Complex64::new(s * re, s * im)
                    })
                    .collect();
                fft.process(&mut w);
                w[..self.m].iter().map(|z| z.re).collect()
            }
            Sampler::Cholesky { lower } => {
                let z: Vec<f64> = (0..self.m).map(|_| standard_normal(rng)).collect();
                (0..self.m)
                    .map(|i| {
                        let row = &lower[i * self.m..i * self.m + i + 1];
                        row.iter().zip(&z).map(|(a, b)| a * b).sum()
                    })
                    .collect()
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FbmPath {
        let inc = self.increments(rng);
        let mut values = Vec::with_capacity(self.m + 1);
        let mut acc = 0.0;
        values.push(0.0);
        for x in inc {
            acc += x;
            values.push(acc * self.scale);
        }
        FbmPath { kind: ProcessKind::TypeI, d: self.d, values }
    }
}

/// Dense lower Cholesky factor of the symmetric Toeplitz matrix with first
/// row `acov`, stored row-major.
fn cholesky(acov: &[f64], m: usize) -> Result<Vec<f64>> {
    let mut l = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..=i {
            let mut s = acov[i - j];
            for k in 0..j {
                s -= l[i * m + k] * l[j * m + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::Config(format!(
                        "fractional Gaussian noise covariance is not positive definite at m = {m}"
                    )));
                }
                l[i * m + i] = s.sqrt();
            } else {
                l[i * m + j] = s / l[j * m + j];
            }
        }
    }
    Ok(l)
}

/// One Type I path on `m + 1` grid points, `m` a power of two.
pub fn simulate_type1(d: f64, m: usize, seed: u64) -> Result<FbmPath> {
    let sim = Type1Simulator::new(d, m)?;
    Ok(sim.sample(&mut rng_from_seed(seed)))
}

/// Reusable exact sampler for Type II fBm.
///
/// `W(t_k) = sum_{i=1..k} c_i Z_{k-i}` with cell weights
/// `c_i = h^{d+1/2} sqrt(i^{2d+1} - (i-1)^{2d+1})`, so the grid values have
/// exactly the covariance of `∫_0^t (t - s)^d dW(s) sqrt(2d + 1)`.
pub struct Type2Simulator {
    d: f64,
    m: usize,
    weights: Vec<f64>,
    fast: Option<FftConvolver>,
}

impl Type2Simulator {
    pub fn new(d: f64, m: usize) -> Result<Self> {
        if !(d > -0.5) || !d.is_finite() {
            return Err(Error::domain("d", d, "(-0.5, inf)"));
        }
        if m < 2 {
            return Err(Error::domain("m", m as f64, "[2, inf)"));
        }
        let e = 2.0 * d + 1.0;
        let h = 1.0 / m as f64;
        let scale = h.powf(d + 0.5);
        let weights: Vec<f64> = (1..=m)
            .map(|i| {
                let i = i as f64;
                scale * (i.powf(e) - (i - 1.0).powf(e)).sqrt()
            })
            .collect();
        let fast = (m >= FFT_THRESHOLD).then(|| FftConvolver::new(&weights, m, 0));
        Ok(Type2Simulator { d, m, weights, fast })
    }

    pub fn grid_size(&self) -> usize {
        self.m
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> FbmPath {
        let z: Vec<f64> = (0..self.m).map(|_| standard_normal(rng)).collect();
        let conv = match &self.fast {
            Some(c) => c.apply(&z),
            None => convolve_direct(&self.weights, &z),
        };
        let mut values = Vec::with_capacity(self.m + 1);
        values.push(0.0);
        values.extend(conv);
        FbmPath { kind: ProcessKind::TypeII, d: self.d, values }
    }
}

/// One Type II path on `m + 1` grid points.
pub fn simulate_type2(d: f64, m: usize, seed: u64) -> Result<FbmPath> {
    let sim = Type2Simulator::new(d, m)?;
    Ok(sim.sample(&mut rng_from_seed(seed)))
}
