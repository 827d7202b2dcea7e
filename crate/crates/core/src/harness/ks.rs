use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use rand::Rng;

/// What a sample is compared against.
pub enum Reference<'a> {
    /// A sorted sample (two-sample distance).
    Sorted(&'a [f64]),
    /// A continuous distribution function (one-sample distance).
    Cdf(&'a dyn Fn(f64) -> f64),
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut v = x.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Sup-norm distance between the ECDF of `sample` and the reference.
pub fn ks_distance(sample: &[f64], reference: Reference<'_>) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::Empty("KS sample"));
    }
    let a = sorted(sample);
    match reference {
        Reference::Cdf(cdf) => Ok(ks_sorted_cdf(&a, cdf)),
        Reference::Sorted(b) => {
            if b.is_empty() {
                return Err(Error::Empty("KS reference sample"));
            }
            Ok(ks_sorted_pair(&a, b))
        }
    }
}

fn ks_sorted_cdf(a: &[f64], cdf: &dyn Fn(f64) -> f64) -> f64 {
    let n = a.len() as f64;
    a.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            f64::max((i + 1) as f64 / n - f, f - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Two-sample distance for sorted inputs; ties advance both ECDFs together.
pub fn ks_sorted_pair(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut dist) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        dist = dist.max((i as f64 / na - j as f64 / nb).abs());
    }
    dist
}

/// Asymptotic Kolmogorov tail `P(K > λ)`.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let pi2 = std::f64::consts::PI.powi(2);
        let s: f64 = (1..=20)
            .map(|k| {
                let m = (2 * k - 1) as f64;
                (-m * m * pi2 / (8.0 * lambda * lambda)).exp()
            })
            .sum();
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * s).clamp(0.0, 1.0)
    } else {
        let s: f64 = (1..=100)
            .map(|k| {
                let k = k as f64;
                let sign = if k as u64 % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * k * k * lambda * lambda).exp()
            })
            .sum();
        (2.0 * s).clamp(0.0, 1.0)
    }
}

/// p-value of a KS distance with effective size `n_eff`, using the
/// `(√n + 0.12 + 0.11/√n) D` small-sample correction.
pub fn ks_pvalue(distance: f64, n_eff: f64) -> f64 {
    let r = n_eff.sqrt();
    kolmogorov_survival((r + 0.12 + 0.11 / r) * distance)
}

pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// 95th percentile of the distance between two independent size-`size`
/// draws (with replacement) from `reference`.
pub fn ks_noise_floor(reference: &[f64], size: usize, resamples: usize, seed: u64) -> Result<f64> {
    if reference.is_empty() || size == 0 || resamples == 0 {
        return Err(Error::Empty("noise floor reference"));
    }
    let mut rng = rng_from_seed(seed);
    let draw = |rng: &mut crate::seed::McRng| {
        let mut v: Vec<f64> = (0..size).map(|_| reference[rng.random_range(0..reference.len())]).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let mut dists: Vec<f64> = (0..resamples)
        .map(|_| {
            let a = draw(&mut rng);
            let b = draw(&mut rng);
            ks_sorted_pair(&a, &b)
        })
        .collect();
    dists.sort_by(f64::total_cmp);
    Ok(upper_quantile(&dists, 0.95))
}

/// Order statistic `x_(⌈p n⌉)` of sorted data.
pub fn upper_quantile(sorted: &[f64], p: f64) -> f64 {
    let k = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}
