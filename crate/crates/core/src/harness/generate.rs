use rayon::prelude::*;

use crate::error::Result;
use crate::fft::{convolve_direct, FftConvolver, FFT_THRESHOLD};
use crate::fracops::{frac_coeffs, ProcessKind, Truncation, Type1Filter};
use crate::innovations::{InnovationProcess, InnovationSpec};
use crate::seed::{derive_seed, rng_from_seed};

/// Runs `f(r)` for `r = 0..reps` in parallel and returns results in
/// replication order, so reductions do not depend on scheduling.
pub fn replicate<T, F>(reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..reps as u64).into_par_iter().map(f).collect()
}

/// Like [`replicate`], but `f(i)` produces replications `2i` and `2i + 1`.
pub fn replicate_pairs<T, F>(reps: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> [T; 2] + Sync + Send,
{
    let pairs = reps.div_ceil(2) as u64;
    let mut out: Vec<T> = (0..pairs).into_par_iter().flat_map_iter(f).collect();
    out.truncate(reps);
    out
}

enum Integrator {
    Identity,
    Type1(Type1Filter),
    Type2 { coeffs: Vec<f64>, conv: Option<FftConvolver> },
}

/// Order-`d` series `X_1..X_{n_max}` for each replication.
///
/// Replication `r` draws its innovations from `derive_seed(seed, r)`.
/// Two replications share each FFT (one in the real part, one in the
/// imaginary part), which couples them only at rounding level.
pub struct SeriesGenerator {
    process: InnovationProcess,
    integrator: Integrator,
    n_max: usize,
    seed: u64,
}

impl SeriesGenerator {
    pub fn new(
        model: &InnovationSpec,
        d: f64,
        kind: ProcessKind,
        n_max: usize,
        truncation: Truncation,
        seed: u64,
    ) -> Result<Self> {
        let process = InnovationProcess::new(model)?;
        let integrator = if d == 0.0 {
            Integrator::Identity
        } else {
            match kind {
                ProcessKind::TypeI => {
                    Integrator::Type1(Type1Filter::with_truncation(d, n_max, process.rms(), truncation)?)
                }
                ProcessKind::TypeII => {
                    let coeffs = frac_coeffs(d, n_max)?.values;
                    let conv = (n_max >= FFT_THRESHOLD).then(|| FftConvolver::new(&coeffs, n_max, 0));
                    Integrator::Type2 { coeffs, conv }
                }
            }
        };
        Ok(SeriesGenerator { process, integrator, n_max, seed })
    }

    pub fn burn_in(&self) -> Option<usize> {
        match &self.integrator {
            Integrator::Type1(f) => Some(f.burn_in()),
            _ => None,
        }
    }

    fn input_len(&self) -> usize {
        match &self.integrator {
            Integrator::Type1(f) => f.input_len(),
            _ => self.n_max,
        }
    }

    fn innovations(&self, r: u64) -> Vec<f64> {
        self.process.sample(self.input_len(), &mut rng_from_seed(derive_seed(self.seed, r)))
    }

    /// Replications `2i` and `2i + 1`.
    pub fn pair(&self, i: u64) -> [Vec<f64>; 2] {
        let u = self.innovations(2 * i);
        let v = self.innovations(2 * i + 1);
        match &self.integrator {
            Integrator::Identity => [u, v],
            Integrator::Type1(f) => {
                let (a, b) = f.apply_pair(&u, &v);
                [a, b]
            }
            Integrator::Type2 { coeffs, conv } => match conv {
                Some(c) => {
                    let (a, b) = c.apply_pair(&u, &v);
                    [a, b]
                }
                None => [convolve_direct(coeffs, &u), convolve_direct(coeffs, &v)],
            },
        }
    }
}
