//! Fractional differencing and integration filters.
//!
//! `(1 - B)^{-d}` has MA(∞) weights `a_j = Γ(j + d) / (Γ(d) Γ(j + 1))`, generated
//! here by the recursion `a_j = a_{j-1} (j - 1 + d) / j`, which keeps the sign
//! for negative orders and never overflows.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{Error, Result};
use crate::fft::{causal_filter, convolve_direct, convolve_fft, FftConvolver, FFT_THRESHOLD};
use crate::innovations::{InnovationProcess, InnovationSpec};
use crate::seed::rng_from_seed;
use crate::series::SeriesPath;

/// Default hard cap on the number of Type I filter coefficients.
pub const DEFAULT_TRUNCATION_CAP: usize = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProcessKind {
    /// Stationary, infinite past.
    #[serde(rename = "type1", alias = "type-i", alias = "I")]
    TypeI,
    /// Started at time zero with no prehistory.
    #[serde(rename = "type2", alias = "type-ii", alias = "II")]
    TypeII,
}

impl ProcessKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProcessKind::TypeI => "type1",
            ProcessKind::TypeII => "type2",
        }
    }
}

impl std::str::FromStr for ProcessKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "type1" | "type-i" | "i" => Ok(ProcessKind::TypeI),
            "type2" | "type-ii" | "ii" => Ok(ProcessKind::TypeII),
            other => Err(format!("unknown process kind {other:?} (expected type1 or type2)")),
        }
    }
}

/// Integration order `p + d` and process type.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FracSpec {
    pub d: f64,
    #[serde(default)]
    pub p: u32,
    pub kind: ProcessKind,
}

impl FracSpec {
    pub fn new(d: f64, p: u32, kind: ProcessKind) -> Result<Self> {
        check_order(d)?;
        Ok(Self { d, p, kind })
    }
}

/// Rejects orders outside `(-1/2, 1/2)`.
pub fn check_order(d: f64) -> Result<()> {
    if d.is_finite() && d > -0.5 && d < 0.5 {
        Ok(())
    } else {
        Err(Error::domain("d", d, "(-0.5, 0.5)"))
    }
}

/// MA weights `a_0..a_{m-1}` of `(1 - B)^{-d}`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoeffSeq {
    pub d: f64,
    pub values: Vec<f64>,
}

pub fn frac_coeffs(d: f64, m: usize) -> Result<CoeffSeq> {
    if m == 0 {
        return Err(Error::Empty("coefficient count must be at least 1"));
    }
    if !(d.is_finite() && d > -1.0 && d < 1.0) {
        return Err(Error::domain("d", d, "(-1, 1)"));
    }
    let mut values = Vec::with_capacity(m);
    let mut a = 1.0;
    values.push(a);
    for j in 1..m {
        a *= (j as f64 - 1.0 + d) / j as f64;
        values.push(a);
    }
    Ok(CoeffSeq { d, values })
}

/// `A_k = a_0 + ... + a_k`.
pub fn partial_sums(coeffs: &CoeffSeq) -> Result<Vec<f64>> {
    if coeffs.values.is_empty() {
        return Err(Error::Empty("coefficient sequence"));
    }
    Ok(cumulative_sum(&coeffs.values))
}

pub fn cumulative_sum(x: &[f64]) -> Vec<f64> {
    x.iter()
        .scan(0.0, |acc, &v| {
            *acc += v;
            Some(*acc)
        })
        .collect()
}

/// Type II fractional integration `Y_t = sum_{i < t} a_i u_{t-i}`, `Y_0 = 0`.
///
/// Direct convolution below [`FFT_THRESHOLD`], FFT above.
pub fn integrate_type2(u: &[f64], d: f64) -> Result<SeriesPath> {
    check_order(d)?;
    if u.is_empty() {
        return Err(Error::Empty("innovation series"));
    }
    if d == 0.0 {
        return Ok(u.to_vec().into());
    }
    let a = frac_coeffs(d, u.len())?;
    Ok(causal_filter(&a.values, u).into())
}

/// [`integrate_type2`] forced through the direct path.
pub fn integrate_type2_direct(u: &[f64], d: f64) -> Result<SeriesPath> {
    check_order(d)?;
    if u.is_empty() {
        return Err(Error::Empty("innovation series"));
    }
    let a = frac_coeffs(d, u.len())?;
    Ok(convolve_direct(&a.values, u).into())
}

/// [`integrate_type2`] forced through the FFT path.
pub fn integrate_type2_fft(u: &[f64], d: f64) -> Result<SeriesPath> {
    check_order(d)?;
    if u.is_empty() {
        return Err(Error::Empty("innovation series"));
    }
    let a = frac_coeffs(d, u.len())?;
    Ok(convolve_fft(&a.values, u).into())
}

/// Applies `(1 - B)^d` to a series started at time 1, the exact inverse of
/// [`integrate_type2`].
pub fn fractional_difference(x: &[f64], d: f64) -> Result<SeriesPath> {
    if x.is_empty() {
        return Err(Error::Empty("series"));
    }
    if d == 0.0 {
        return Ok(x.to_vec().into());
    }
    let pi = frac_coeffs(-d, x.len())?;
    Ok(causal_filter(&pi.values, x).into())
}

/// `sum_{j >= 0} a_j^2 = Γ(1 - 2d) / Γ(1 - d)^2`.
pub fn coeff_square_sum(d: f64) -> f64 {
    (ln_gamma(1.0 - 2.0 * d) - 2.0 * ln_gamma(1.0 - d)).exp()
}

/// How the infinite Type I filter is cut off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Truncation {
    /// Smallest burn-in `M` with `sigma_u * (sum_{j > M} a_j^2)^{1/2} <= eps_tail`.
    Tolerance { eps_tail: f64, cap: usize },
    /// A fixed number of pre-sample lags.
    Lags(usize),
}

impl Truncation {
    pub fn tolerance(eps_tail: f64) -> Self {
        Truncation::Tolerance {
            eps_tail,
            cap: DEFAULT_TRUNCATION_CAP,
        }
    }
}

/// Upper bound on `sum_{j > m} a_j^2`, `m >= 1`.
///
/// `|a_j| j^{1-d}` is increasing to `1/Γ(d)` for `d > 0` and decreasing from
/// `|d|` for `d < 0`, so `a_j^2 <= C^2 j^{2d-2}` with `C` the larger endpoint,
/// and the sum is dominated by the integral from `m`.
pub fn tail_square_bound(d: f64, m: usize) -> f64 {
    let c = (1.0 / gamma(d).abs()).max(d.abs());
    let m = m.max(1) as f64;
    c * c * m.powf(2.0 * d - 1.0) / (1.0 - 2.0 * d)
}

/// Burn-in length for a Type I filter of order `d` with innovation root mean
/// square `sigma_u`.
pub fn burn_in_for(d: f64, sigma_u: f64, eps_tail: f64, cap: usize) -> Result<usize> {
    check_order(d)?;
    if !(eps_tail > 0.0) {
        return Err(Error::domain("eps_tail", eps_tail, "(0, inf)"));
    }
    if d == 0.0 || sigma_u == 0.0 {
        return Ok(0);
    }
    let target = (eps_tail / sigma_u).powi(2);
    let total = coeff_square_sum(d);
    let infeasible = |tail_sq: f64| Error::TruncationInfeasible {
        eps_tail,
        cap,
        tail_at_cap: sigma_u * tail_sq.max(0.0).sqrt(),
    };

    // Analytic upper bound on the needed burn-in.
    let bound_m = {
        let c = (1.0 / gamma(d).abs()).max(d.abs());
        let x = (c * c / ((1.0 - 2.0 * d) * target)).powf(1.0 / (1.0 - 2.0 * d));
        if x.is_finite() && x < 1e18 {
            (x.ceil() as usize).max(1)
        } else {
            usize::MAX
        }
    };

    // Below this the difference `total - partial` is dominated by rounding.
    let precision_floor = 256.0 * f64::EPSILON * total;
    if target <= precision_floor {
        return if bound_m <= cap {
            Ok(bound_m)
        } else {
            Err(infeasible(tail_square_bound(d, cap)))
        };
    }

    // Exact search: tail(M) = total - sum_{j <= M} a_j^2 (compensated sum).
    let limit = bound_m.min(cap);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut a = 1.0f64;
    for m in 0..=limit {
        if m > 0 {
            a *= (m as f64 - 1.0 + d) / m as f64;
        }
        let y = a * a - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        if total - sum <= target {
            return Ok(m);
        }
    }
    if bound_m <= cap {
        // rounding left the exact search a hair short of the bound
        Ok(bound_m)
    } else {
        Err(infeasible(total - sum))
    }
}

/// Planned Type I filter `X_t = sum_{j <= M} a_j u_{t-j}` for output length `n`.
///
/// `apply` takes `M + n` innovations (pre-sample first) and returns `X_1..X_n`.
pub struct Type1Filter {
    d: f64,
    n: usize,
    burn_in: usize,
    coeffs: Vec<f64>,
    conv: Option<FftConvolver>,
}

impl Type1Filter {
    pub fn new(d: f64, n: usize, burn_in: usize) -> Result<Self> {
        check_order(d)?;
        if n == 0 {
            return Err(Error::Empty("output length must be at least 1"));
        }
        let burn_in = if d == 0.0 { 0 } else { burn_in };
        let coeffs = frac_coeffs(d, burn_in + 1)?.values;
        let conv = (burn_in > 0 && burn_in + n >= FFT_THRESHOLD)
            .then(|| FftConvolver::new(&coeffs, burn_in + n, burn_in));
        Ok(Self {
            d,
            n,
            burn_in,
            coeffs,
            conv,
        })
    }

    pub fn with_truncation(d: f64, n: usize, sigma_u: f64, truncation: Truncation) -> Result<Self> {
        let burn_in = match truncation {
            Truncation::Lags(m) => m,
            Truncation::Tolerance { eps_tail, cap } => burn_in_for(d, sigma_u, eps_tail, cap)?,
        };
        Self::new(d, n, burn_in)
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn burn_in(&self) -> usize {
        self.burn_in
    }

    pub fn input_len(&self) -> usize {
        self.burn_in + self.n
    }

    pub fn apply(&self, u: &[f64]) -> Vec<f64> {
        assert_eq!(u.len(), self.input_len(), "Type I filter input length");
        if self.burn_in == 0 {
            return u.to_vec();
        }
        match &self.conv {
            Some(conv) => conv.apply(u),
            None => (self.burn_in..u.len())
                .map(|t| self.coeffs.iter().enumerate().map(|(j, a)| a * u[t - j]).sum())
                .collect(),
        }
    }

    /// Two independent inputs through one transform.
    pub fn apply_pair(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match &self.conv {
            Some(conv) => conv.apply_pair(u, v),
            None => (self.apply(u), self.apply(v)),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Type1Output {
    pub series: SeriesPath,
    pub burn_in: usize,
}

/// Stationary Type I process of order `d` driven by `model`, `X_1..X_n`.
pub fn integrate_type1(
    model: &InnovationSpec,
    d: f64,
    n: usize,
    truncation: Truncation,
    seed: u64,
) -> Result<Type1Output> {
    let process = InnovationProcess::new(model)?;
    let filter = Type1Filter::with_truncation(d, n, process.rms(), truncation)?;
    let u = process.sample(filter.input_len(), &mut rng_from_seed(seed));
    Ok(Type1Output {
        series: filter.apply(&u).into(),
        burn_in: filter.burn_in(),
    })
}

/// Input for [`integrate_higher`].
pub enum HigherSource<'a> {
    /// Given innovations `u_1..u_n` (Type II only).
    Series(&'a [f64]),
    /// Innovations generated from a model.
    Model {
        spec: &'a InnovationSpec,
        n: usize,
        truncation: Truncation,
        seed: u64,
    },
}

/// Order `p + d` process: order-`d` integration of the kind in `spec`
/// followed by `p` cumulative sums from time 1.
pub fn integrate_higher(source: HigherSource<'_>, spec: &FracSpec) -> Result<SeriesPath> {
    check_order(spec.d)?;
    let mut x = match (source, spec.kind) {
        (HigherSource::Series(u), ProcessKind::TypeII) => integrate_type2(u, spec.d)?.into_vec(),
        (HigherSource::Series(_), ProcessKind::TypeI) => {
            return Err(Error::Config(
                "a Type I process needs an innovation model for its pre-sample".into(),
            ))
        }
        (
            HigherSource::Model {
                spec: model,
                n,
                truncation,
                seed,
            },
            ProcessKind::TypeI,
        ) => integrate_type1(model, spec.d, n, truncation, seed)?.series.into_vec(),
        (HigherSource::Model { spec: model, n, seed, .. }, ProcessKind::TypeII) => {
            let process = InnovationProcess::new(model)?;
            let u = process.sample(n, &mut rng_from_seed(seed));
            integrate_type2(&u, spec.d)?.into_vec()
        }
    };
    for _ in 0..spec.p {
        x = cumulative_sum(&x);
    }
    Ok(x.into())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol * y.abs().max(1.0), "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn coefficient_hand_values() {
        assert_eq!(frac_coeffs(0.0, 4).unwrap().values, vec![1.0, 0.0, 0.0, 0.0]);
        assert_close(&frac_coeffs(0.4, 4).unwrap().values, &[1.0, 0.4, 0.28, 0.224], 1e-12);
        assert_close(&frac_coeffs(-0.3, 3).unwrap().values, &[1.0, -0.3, -0.105], 1e-12);
    }

    #[test]
    fn coefficient_errors() {
        assert!(matches!(frac_coeffs(0.2, 0), Err(Error::Empty(_))));
        assert!(matches!(frac_coeffs(1.0, 3), Err(Error::Domain { .. })));
        assert!(matches!(frac_coeffs(-1.2, 3), Err(Error::Domain { .. })));
        // the coefficient recursion itself accepts |d| < 1
        assert!(frac_coeffs(0.7, 3).is_ok());
    }

    #[test]
    fn partial_sum_hand_values() {
        assert_eq!(partial_sums(&frac_coeffs(0.0, 4).unwrap()).unwrap(), vec![1.0; 4]);
        assert_close(&partial_sums(&frac_coeffs(0.4, 3).unwrap()).unwrap(), &[1.0, 1.4, 1.68], 1e-12);
        assert_close(&partial_sums(&frac_coeffs(-0.3, 3).unwrap()).unwrap(), &[1.0, 0.7, 0.595], 1e-12);
        let empty = CoeffSeq { d: 0.1, values: vec![] };
        assert!(partial_sums(&empty).is_err());
    }

    #[test]
    fn coefficient_sign_and_monotonicity() {
        for &d in &[-0.45, -0.3, -0.1, 0.1, 0.25, 0.4] {
            let a = frac_coeffs(d, 2000).unwrap().values;
            assert_eq!(a[0], 1.0);
            for j in 1..a.len() {
                if d > 0.0 {
                    assert!(a[j] >= 0.0);
                } else {
                    assert!(a[j] <= 0.0);
                }
                if j > 1 {
                    assert!(a[j].abs() <= a[j - 1].abs());
                }
            }
        }
    }

    #[test]
    fn coefficient_asymptotics() {
        for &d in &[-0.45, -0.3, -0.1, 0.1, 0.25, 0.4] {
            let j = 100_000;
            let a = frac_coeffs(d, j + 1).unwrap().values[j];
            let r = a * gamma(d) * (j as f64).powf(1.0 - d);
            assert!((r - 1.0).abs() < 0.01, "d={d}: {r}");
        }
    }

    #[test]
    fn type2_hand_values() {
        assert_close(&integrate_type2(&[1.0, 0.0, 0.0], 0.4).unwrap(), &[1.0, 0.4, 0.28], 1e-12);
        assert_close(&integrate_type2(&[1.0, 1.0, 1.0], 0.4).unwrap(), &[1.0, 1.4, 1.68], 1e-12);
        let u = [0.3, -1.2, 4.0];
        assert_eq!(integrate_type2(&u, 0.0).unwrap().values(), &u);
        assert!(matches!(integrate_type2(&[], 0.2), Err(Error::Empty(_))));
        assert!(matches!(integrate_type2(&[1.0], 0.5), Err(Error::Domain { .. })));
    }

    #[test]
    fn difference_hand_values() {
        assert_close(&fractional_difference(&[1.0, 0.4, 0.28], 0.4).unwrap(), &[1.0, 0.0, 0.0], 1e-12);
        let x = [2.0, -1.0];
        assert_eq!(fractional_difference(&x, 0.0).unwrap().values(), &x);
        assert!(fractional_difference(&[], 0.1).is_err());
    }

    #[test]
    fn higher_order_hand_values() {
        let s = FracSpec::new(0.0, 1, ProcessKind::TypeII).unwrap();
        assert_eq!(integrate_higher(HigherSource::Series(&[1.0, 1.0, 1.0]), &s).unwrap().values(), &[1.0, 2.0, 3.0]);
        let s = FracSpec::new(0.4, 1, ProcessKind::TypeII).unwrap();
        assert_close(
            &integrate_higher(HigherSource::Series(&[1.0, 0.0, 0.0]), &s).unwrap(),
            &[1.0, 1.4, 1.68],
            1e-12,
        );
        let s0 = FracSpec::new(0.3, 0, ProcessKind::TypeII).unwrap();
        let u = [0.5, -0.25, 2.0, 1.0];
        assert_eq!(
            integrate_higher(HigherSource::Series(&u), &s0).unwrap(),
            integrate_type2(&u, 0.3).unwrap()
        );
        let s1 = FracSpec::new(0.3, 0, ProcessKind::TypeI).unwrap();
        assert!(integrate_higher(HigherSource::Series(&u), &s1).is_err());
    }

    #[test]
    fn fracspec_rejects_out_of_range() {
        assert!(FracSpec::new(0.5, 0, ProcessKind::TypeI).is_err());
        assert!(FracSpec::new(-0.5, 0, ProcessKind::TypeI).is_err());
        assert!(FracSpec::new(f64::NAN, 0, ProcessKind::TypeI).is_err());
        assert!(FracSpec::new(0.0, 3, ProcessKind::TypeII).is_ok());
    }

    #[test]
    fn square_sum_closed_form_matches_partial_sums() {
        let d = -0.3;
        let a = frac_coeffs(d, 200_000).unwrap().values;
        let partial: f64 = a.iter().map(|v| v * v).sum();
        // tail beyond 2e5 is below 1e-9 for d = -0.3
        assert!((coeff_square_sum(d) - partial).abs() < 1e-8);
    }

    #[test]
    fn burn_in_zero_for_white_noise() {
        assert_eq!(burn_in_for(0.0, 1.0, 1e-3, 10).unwrap(), 0);
    }

    #[test]
    fn burn_in_infeasible_beyond_cap() {
        let err = burn_in_for(0.45, 1.0, 1e-8, DEFAULT_TRUNCATION_CAP).unwrap_err();
        assert!(matches!(err, Error::TruncationInfeasible { .. }), "{err}");
        // default cap is far too small for d = 0.25 at 1e-3
        let err = burn_in_for(0.25, 1.0, 1e-3, DEFAULT_TRUNCATION_CAP).unwrap_err();
        assert!(matches!(err, Error::TruncationInfeasible { .. }));
    }

    #[test]
    fn burn_in_is_monotone_in_tolerance() {
        let loose = burn_in_for(0.2, 1.0, 0.05, DEFAULT_TRUNCATION_CAP).unwrap();
        let tight = burn_in_for(0.2, 1.0, 0.01, DEFAULT_TRUNCATION_CAP).unwrap();
        assert!(loose < tight);
        let tail = (coeff_square_sum(0.2) - frac_coeffs(0.2, tight + 1).unwrap().values.iter().map(|a| a * a).sum::<f64>()).sqrt();
        assert!(tail <= 0.01);
    }

    #[test]
    fn type1_filter_direct_and_fft_agree() {
        let u: Vec<f64> = (0..900).map(|i| ((i * 7919 % 113) as f64 - 56.0) / 30.0).collect();
        let fast = Type1Filter::new(0.3, 600, 300).unwrap();
        assert!(fast.conv.is_some());
        let x = fast.apply(&u);
        let a = frac_coeffs(0.3, 301).unwrap().values;
        for (k, xv) in x.iter().enumerate() {
            let t = 300 + k;
            let direct: f64 = (0..=300).map(|j| a[j] * u[t - j]).sum();
            assert!((xv - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }
    }
}
