//! Causal convolution and autocovariance kernels, direct and FFT-based.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Series at least this long are filtered through the FFT path by default.
pub const FFT_THRESHOLD: usize = 512;

/// First `signal.len()` outputs of the linear convolution `kernel * signal`:
/// `y[t] = sum_{i <= t} kernel[i] * signal[t - i]`.
pub fn convolve_direct(kernel: &[f64], signal: &[f64]) -> Vec<f64> {
    let n = signal.len();
    let k = kernel.len().min(n);
    (0..n)
        .map(|t| {
            let top = t.min(k.saturating_sub(1));
            let mut acc = 0.0;
            for i in 0..=top {
                acc += kernel[i] * signal[t - i];
            }
            acc
        })
        .collect()
}

/// Same contract as [`convolve_direct`], computed with a zero-padded FFT.
pub fn convolve_fft(kernel: &[f64], signal: &[f64]) -> Vec<f64> {
    if signal.is_empty() {
        return Vec::new();
    }
    FftConvolver::new(kernel, signal.len(), 0).apply(signal)
}

/// Dispatches on [`FFT_THRESHOLD`].
pub fn causal_filter(kernel: &[f64], signal: &[f64]) -> Vec<f64> {
    if signal.len() >= FFT_THRESHOLD {
        convolve_fft(kernel, signal)
    } else {
        convolve_direct(kernel, signal)
    }
}

/// A planned causal filter with the kernel spectrum cached, for repeated use on
/// signals of one fixed length.
///
/// Outputs are produced for indices `skip..signal_len` of the linear
/// convolution. The transform length only has to cover the wrap-around for
/// those indices, so a long kernel whose early outputs are discarded (a
/// burn-in) costs no more than the signal itself.
pub struct FftConvolver {
    signal_len: usize,
    skip: usize,
    spectrum: Vec<Complex<f64>>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl FftConvolver {
    pub fn new(kernel: &[f64], signal_len: usize, skip: usize) -> Self {
        assert!(skip < signal_len, "skip must leave at least one output");
        let k = kernel.len().min(signal_len).max(1);
        // Wrapped terms land on zero padding iff len >= signal_len + k - 1 - skip.
        let need = signal_len.max(signal_len + k - 1 - skip.min(k - 1));
        let len = need.next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(len);
        let inverse = planner.plan_fft_inverse(len);
        let mut spectrum = vec![Complex::new(0.0, 0.0); len];
        for (s, &c) in spectrum.iter_mut().zip(kernel.iter().take(k)) {
            s.re = c;
        }
        forward.process(&mut spectrum);
        let scale = 1.0 / len as f64;
        for s in &mut spectrum {
            *s *= scale;
        }
        Self {
            signal_len,
            skip,
            spectrum,
            forward,
            inverse,
        }
    }

    pub fn transform_len(&self) -> usize {
        self.spectrum.len()
    }

    pub fn apply(&self, signal: &[f64]) -> Vec<f64> {
        assert_eq!(signal.len(), self.signal_len);
        let mut buf = vec![Complex::new(0.0, 0.0); self.spectrum.len()];
        for (b, &x) in buf.iter_mut().zip(signal) {
            b.re = x;
        }
        self.run(&mut buf);
        buf[self.skip..self.signal_len].iter().map(|c| c.re).collect()
    }

    /// Filters two real signals with one complex transform.
    pub fn apply_pair(&self, a: &[f64], b: &[f64]) -> (Vec<f64>, Vec<f64>) {
        assert_eq!(a.len(), self.signal_len);
        assert_eq!(b.len(), self.signal_len);
        let mut buf = vec![Complex::new(0.0, 0.0); self.spectrum.len()];
        for ((z, &x), &y) in buf.iter_mut().zip(a).zip(b) {
            *z = Complex::new(x, y);
        }
        self.run(&mut buf);
        let out = &buf[self.skip..self.signal_len];
        (out.iter().map(|c| c.re).collect(), out.iter().map(|c| c.im).collect())
    }

    fn run(&self, buf: &mut [Complex<f64>]) {
        self.forward.process(buf);
        for (z, s) in buf.iter_mut().zip(&self.spectrum) {
            *z *= s;
        }
        self.inverse.process(buf);
    }
}

/// Lagged cross-products `sum_{i < n - j} x[i] * x[i + j]` for `j = 0..=max_lag`.
pub fn lag_products_direct(x: &[f64], max_lag: usize) -> Vec<f64> {
    (0..=max_lag)
        .map(|j| x.iter().zip(&x[j.min(x.len())..]).map(|(a, b)| a * b).sum())
        .collect()
}

/// Same as [`lag_products_direct`] via the Wiener–Khinchin identity.
pub fn lag_products_fft(x: &[f64], max_lag: usize) -> Vec<f64> {
    let n = x.len();
    let len = (2 * n).max(2).next_power_of_two();
    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(len);
    let inverse = planner.plan_fft_inverse(len);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (b, &v) in buf.iter_mut().zip(x) {
        b.re = v;
    }
    forward.process(&mut buf);
    for z in &mut buf {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    inverse.process(&mut buf);
    let scale = 1.0 / len as f64;
    (0..=max_lag)
        .map(|j| if j < n { buf[j].re * scale } else { 0.0 })
        .collect()
}
