//! Symmetric variables with `P(|η|^{q0} >= g) = c g^{-1} (log g)^{-2}` for
//! `g >= v0`: finite `q0`-th moment, nothing beyond.
//!
//! Below `v0` the law of `|η|^{q0}` is uniform. `c` makes the density of
//! `|η|^{q0}` continuous at `v0`, which fixes the tail mass at
//! `1 / (2 + 2 / log v0)`.

use rand::Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub struct HeavyTailEta {
    q0: f64,
    v0: f64,
    c: f64,
    tail_mass: f64,
}

impl HeavyTailEta {
    pub fn new(q0: f64, v0: f64) -> Result<Self> {
        if !(q0.is_finite() && q0 > 0.0) {
            return Err(Error::domain("q0", q0, "(0, inf)"));
        }
        let e2 = std::f64::consts::E * std::f64::consts::E;
        if !(v0.is_finite() && v0 >= e2 * (1.0 - 1e-12)) {
            return Err(Error::domain("v0", v0, "[e^2, inf)"));
        }
        let l = v0.ln();
        let c = v0 * l * l / (2.0 + 2.0 / l);
        let tail_mass = c / (v0 * l * l);
        Ok(Self { q0, v0, c, tail_mass })
    }

    pub fn q0(&self) -> f64 {
        self.q0
    }

    pub fn v0(&self) -> f64 {
        self.v0
    }

    pub fn tail_constant(&self) -> f64 {
        self.c
    }

    /// `P(|η|^{q0} >= g)`.
    pub fn survival(&self, g: f64) -> f64 {
        if g <= 0.0 {
            1.0
        } else if g < self.v0 {
            1.0 - (1.0 - self.tail_mass) * g / self.v0
        } else {
            let l = g.ln();
            self.c / (g * l * l)
        }
    }

    /// Inverse survival on the tail: solves `g (log g)^2 = c / s` for `g >= v0`.
    fn tail_quantile(&self, s: f64) -> f64 {
        // With x = log g: h(x) = x + 2 ln x - ln(c / s), increasing for x > 0.
        let target = (self.c / s).ln();
        let h = |x: f64| x + 2.0 * x.ln() - target;
        let mut lo = self.v0.ln();
        let mut hi = target.max(lo);
        if h(lo) >= 0.0 {
            return self.v0;
        }
        // Newton steps kept inside the bracket, bisection otherwise.
        let mut x = 0.5 * (lo + hi);
        for _ in 0..200 {
            let fx = h(x);
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = fx / (1.0 + 2.0 / x);
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-12 * x.abs() || hi - lo <= 1e-12 * hi.abs() {
                x = next;
                break;
            }
            x = next;
        }
        x.exp()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let w: f64 = rng.random();
        let g = if w < 1.0 - self.tail_mass {
            self.v0 * w / (1.0 - self.tail_mass)
        } else {
            // survival level in (0, tail_mass]
            let s = (1.0 - w).max(f64::MIN_POSITIVE);
            self.tail_quantile(s)
        };
        let magnitude = g.powf(1.0 / self.q0);
        if rng.random::<bool>() {
            magnitude
        } else {
            -magnitude
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        (0..n).map(|_| self.draw(rng)).collect()
    }
}
