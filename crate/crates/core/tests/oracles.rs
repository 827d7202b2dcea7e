//! Independent checks of the burn-in rule, the fBm samplers and the
//! quantile tables, computed without the library's own kernels.

use fracinv_core::fbm::{build_quantile_table, Type1Simulator, Type2Simulator};
use fracinv_core::fracops::{burn_in_for, DEFAULT_TRUNCATION_CAP};
use fracinv_core::seed::rng_from_seed;
use fracinv_core::{Functional, ProcessKind};
use rand_distr::{Distribution, StandardNormal};
use statrs::function::gamma::{gamma, ln_gamma};

/// `a_j = Γ(j + d) / (Γ(d) Γ(j + 1))` from log-gamma, not the recursion.
fn coeff(d: f64, j: usize) -> f64 {
    if j == 0 {
        return 1.0;
    }
    let g = gamma(d);
    g.signum() * (ln_gamma(j as f64 + d) - g.abs().ln() - ln_gamma(j as f64 + 1.0)).exp()
}

/// Smallest `M` with `sum_{j > M} a_j^2 <= target`, by summing the squares
/// from a far cutoff `J` downwards. Beyond `J` the squares follow
/// `(j^{d-1} / Γ(d))^2`, summed by Euler-Maclaurin.
fn brute_burn_in(d: f64, target: f64, far: usize) -> (usize, Vec<f64>) {
    let c2 = 1.0 / (gamma(d) * gamma(d));
    let jf = far as f64;
    let e = 2.0 * d - 2.0;
    let mut tail = c2 * (jf.powf(e + 1.0) / -(e + 1.0) - 0.5 * jf.powf(e));
    // tails[m] = sum_{j > m} a_j^2 for m < far
    let mut tails = vec![0.0; far];
    for m in (0..far).rev() {
        tails[m] = tail;
        let a = coeff(d, m);
        tail += a * a;
    }
    let m = tails.iter().position(|&t| t <= target).unwrap_or(far);
    (m, tails)
}

#[test]
fn gamma_ratio_coefficients_match_recursion() {
    for d in [-0.3, 0.25] {
        let mut a = 1.0;
        for j in 0..50 {
            if j > 0 {
                a *= (j as f64 - 1.0 + d) / j as f64;
            }
            assert!((coeff(d, j) - a).abs() <= 1e-12 * a.abs(), "d={d} j={j}");
        }
    }
}

#[test]
fn burn_in_matches_brute_force() {
    for (d, eps, far) in [(-0.3, 1e-3, 200_000), (0.25, 2e-2, 4_000_000)] {
        let target = eps * eps;
        let m = burn_in_for(d, 1.0, eps, DEFAULT_TRUNCATION_CAP).unwrap();
        let (oracle, tails) = brute_burn_in(d, target, far);
        assert!(oracle < far, "cutoff too small");
        assert!(m.abs_diff(oracle) <= 1, "d={d}: library {m}, oracle {oracle}");
        // Off-by-one is only acceptable when the tail sits on the threshold.
        if m != oracle {
            let edge = tails[m.min(oracle)];
            assert!((edge / target - 1.0).abs() < 1e-8, "d={d}: tail {edge:e} vs {target:e}");
        }
        assert!(tails[m] <= target * (1.0 + 1e-8));
        assert!(m == 0 || tails[m - 1] > target * (1.0 - 1e-8));
    }
}

#[test]
fn infeasible_burn_in_is_confirmed_by_oracle() {
    use fracinv_core::Error;
    // The tail sum at the cap still exceeds the target, so no M <= cap works.
    for (d, eps) in [(0.25, 1e-3), (0.45, 1e-8)] {
        let err = burn_in_for(d, 1.0, eps, DEFAULT_TRUNCATION_CAP).unwrap_err();
        assert!(matches!(err, Error::TruncationInfeasible { .. }), "d={d}: {err}");
        let (_, tails) = brute_burn_in(d, 0.0, DEFAULT_TRUNCATION_CAP + 1);
        assert!(tails[DEFAULT_TRUNCATION_CAP] > eps * eps, "d={d}");
    }
}

/// `(2d + 1) ∫_0^s (t - u)^d (s - u)^d du` for `s < t`, substituting
/// `s - u = s y^{1/(d+1)}` to remove the endpoint singularity. On the
/// diagonal it is `s^{2d+1}`.
fn type2_cov(d: f64, s: f64, t: f64) -> f64 {
    if s == t {
        return s.powf(2.0 * d + 1.0);
    }
    let k = 1.0 / (d + 1.0);
    let n = 200_000;
    let h = 1.0 / n as f64;
    let sum: f64 = (0..n).map(|i| (t - s + s * ((i as f64 + 0.5) * h).powf(k)).powf(d)).sum();
    (2.0 * d + 1.0) * s.powf(d + 1.0) * k * sum * h
}

fn fbm_cov(d: f64, s: f64, t: f64) -> f64 {
    let h2 = 2.0 * d + 1.0;
    0.5 * (s.powf(h2) + t.powf(h2) - (t - s).abs().powf(h2))
}

/// Empirical `Var B(s)`, `Var B(1)` and `Cov(B(s), B(1))` at `s = 1/2`,
/// each compared with the exact value within 4.5 standard errors.
fn check_moments(paths: &[Vec<f64>], exact: [f64; 3], label: &str) {
    let m = paths[0].len() - 1;
    let n = paths.len() as f64;
    let (mut vs, mut vt, mut c) = (0.0, 0.0, 0.0);
    for p in paths {
        let (x, y) = (p[m / 2], p[m]);
        vs += x * x;
        vt += y * y;
        c += x * y;
    }
    let est = [vs / n, vt / n, c / n];
    let se = [
        (2.0 * exact[0] * exact[0] / n).sqrt(),
        (2.0 * exact[1] * exact[1] / n).sqrt(),
        ((exact[0] * exact[1] + exact[2] * exact[2]) / n).sqrt(),
    ];
    for i in 0..3 {
        assert!((est[i] - exact[i]).abs() < 4.5 * se[i], "{label} moment {i}: {} vs {}", est[i], exact[i]);
    }
}

#[test]
fn type1_sampler_covariance() {
    for d in [-0.3, 0.3] {
        let sim = Type1Simulator::new(d, 64).unwrap();
        let mut rng = rng_from_seed(41);
        let paths: Vec<Vec<f64>> = (0..6000).map(|_| sim.sample(&mut rng).values).collect();
        check_moments(&paths, [fbm_cov(d, 0.5, 0.5), 1.0, fbm_cov(d, 0.5, 1.0)], &format!("type1 d={d}"));
    }
}

#[test]
fn type2_sampler_covariance() {
    // At d = 0 the process is Brownian motion.
    assert!((type2_cov(0.0, 0.5, 1.0) - 0.5).abs() < 1e-12);
    // The quadrature approaches the diagonal continuously.
    for d in [-0.3, 0.3] {
        assert!((type2_cov(d, 0.5, 0.5 + 1e-9) / type2_cov(d, 0.5, 0.5) - 1.0).abs() < 1e-3);
    }
    for d in [-0.3, 0.3] {
        let sim = Type2Simulator::new(d, 64).unwrap();
        let mut rng = rng_from_seed(42);
        let paths: Vec<Vec<f64>> = (0..6000).map(|_| sim.sample(&mut rng).values).collect();
        let exact = [type2_cov(d, 0.5, 0.5), 1.0, type2_cov(d, 0.5, 1.0)];
        check_moments(&paths, exact, &format!("type2 d={d}"));
    }
}

/// Range of the discrete bridge of a Gaussian random walk on `m` steps.
fn walk_bridge_range(m: usize, rng: &mut impl rand::Rng) -> f64 {
    let h = (1.0 / m as f64).sqrt();
    let mut w = vec![0.0; m + 1];
    for k in 1..=m {
        let z: f64 = StandardNormal.sample(rng);
        w[k] = w[k - 1] + h * z;
    }
    let end = w[m];
    let (mut lo, mut hi) = (0.0f64, 0.0f64);
    for (k, x) in w.iter().enumerate() {
        let b = x - end * k as f64 / m as f64;
        lo = lo.min(b);
        hi = hi.max(b);
    }
    hi - lo
}

#[test]
fn range_table_matches_independent_bridge_simulation() {
    let (m, reps) = (1024, 20_000);
    let table = build_quantile_table(Functional::RangeOfBridge, ProcessKind::TypeI, 0.0, m, reps, 5).unwrap();
    let mut rng = rng_from_seed(99);
    let mut other: Vec<f64> = (0..reps).map(|_| walk_bridge_range(m, &mut rng)).collect();
    other.sort_by(f64::total_cmp);

    // Two-sample KS distance.
    let (a, b) = (table.samples(), &other[..]);
    let (mut i, mut j, mut dist) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        dist = dist.max((i as f64 / a.len() as f64 - j as f64 / b.len() as f64).abs());
    }
    // Asymptotic critical value at level 0.001.
    let crit = 1.95 * (2.0 / reps as f64).sqrt();
    assert!(dist < crit, "KS distance {dist} >= {crit}");

    // The continuous-time range (Kuiper law) has mean sqrt(π/2); a grid of
    // m points misses about 2 * 0.5826 / sqrt(m) of it.
    let limit = (std::f64::consts::PI / 2.0).sqrt();
    let expected = limit - 2.0 * 0.5826 / (m as f64).sqrt();
    let se = 0.28 / (reps as f64).sqrt();
    assert!((table.mean() - expected).abs() < 5.0 * se + 0.005, "mean {} vs {expected}", table.mean());
}
