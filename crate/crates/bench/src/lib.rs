//! Fixtures shared by the kernel benchmarks.

use fracinv_core::innovations::gen;
use fracinv_core::InnovationSpec;

/// Standard Gaussian white noise of length `n`.
pub fn white_noise(n: usize, seed: u64) -> Vec<f64> {
    gen(&InnovationSpec::iid_gaussian(1.0), n, seed).expect("gaussian model is valid").into_vec()
}

/// Sizes used across the benchmarks: below, at and above the FFT switch.
pub const SIZES: [usize; 3] = [1024, 4096, 16384];
