//! Size and regularity checks for convolution-type standard kernels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::cz::Omega;
use crate::error::{LabError, Result};
use crate::grid::{point_norm, Point};

/// `K(x, y) = Ω((x-y)/|x-y|) |x-y|^{-n}` with a claimed size constant and
/// Hölder exponent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardKernelSpec {
    pub omega: Omega,
    pub size_const: f64,
    pub hoelder_exp: f64,
}

/// Measured constants over random samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StandardKernelReport {
    /// `max |K(x,y)| |x-y|^n`.
    pub size: f64,
    /// `max |K(x,y) - K(x',y)| |x-y|^{n+δ} / |x-x'|^δ` over admissible triples.
    pub regularity_first: f64,
    /// The same with the second argument perturbed.
    pub regularity_second: f64,
    pub triples: usize,
    pub holds: bool,
    /// Set when `δ` lies outside `(0, 1]`.
    pub exponent_flagged: bool,
}

impl StandardKernelSpec {
    pub fn new(omega: Omega, size_const: f64, hoelder_exp: f64) -> Result<Self> {
        if !(size_const.is_finite() && size_const > 0.0 && hoelder_exp.is_finite()) {
            return Err(LabError::InvalidParams("kernel constants must be finite and positive".into()));
        }
        Ok(Self {
            omega,
            size_const,
            hoelder_exp,
        })
    }

    pub fn exponent_flagged(&self) -> bool {
        !(self.hoelder_exp > 0.0 && self.hoelder_exp <= 1.0)
    }

    pub fn kernel(&self, x: &Point, y: &Point) -> f64 {
        let dim = self.omega.dim();
        let z = [x[0] - y[0], x[1] - y[1]];
        let r = point_norm(&z, dim);
        if r == 0.0 {
            return 0.0;
        }
        self.omega.eval(&z) / r.powi(dim as i32)
    }

    /// Samples points in `[-1, 1]^n` and measures both bounds on `samples`
    /// triples with `2|x - x'| ≤ max(|x - y|, |x' - y|)`.
    pub fn check(&self, samples: usize, seed: u64) -> StandardKernelReport {
        let dim = self.omega.dim();
        let n = dim as f64;
        let delta = self.hoelder_exp;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = |rng: &mut ChaCha8Rng| {
            let mut p = [0.0; 2];
            for slot in p.iter_mut().take(dim) {
                *slot = rng.gen_range(-1.0..1.0);
            }
            p
        };
        let dist = |a: &Point, b: &Point| point_norm(&[a[0] - b[0], a[1] - b[1]], dim);
        let mut size: f64 = 0.0;
        let mut reg1: f64 = 0.0;
        let mut reg2: f64 = 0.0;
        let mut triples = 0;
        let mut attempts = 0;
        while triples < samples && attempts < samples * 50 {
            attempts += 1;
            let x = point(&mut rng);
            let y = point(&mut rng);
            let d = dist(&x, &y);
            if d < 1e-6 {
                continue;
            }
            size = size.max(self.kernel(&x, &y).abs() * d.powf(n));
            let scale: f64 = rng.gen_range(0.0..0.5);
            let mut u = point(&mut rng);
            let un = point_norm(&u, dim);
            if un == 0.0 {
                continue;
            }
            for slot in u.iter_mut().take(dim) {
                *slot *= scale * d / un;
            }
            let xp = [x[0] + u[0], x[1] + u[1]];
            let step = dist(&x, &xp);
            if step == 0.0 || 2.0 * step > d.max(dist(&xp, &y)) {
                continue;
            }
            let w = d.powf(n + delta) / step.powf(delta);
            reg1 = reg1.max((self.kernel(&x, &y) - self.kernel(&xp, &y)).abs() * w);
            // second argument: perturb y by the same step, distance measured from x
            let yp = [y[0] + u[0], y[1] + u[1]];
            if 2.0 * step <= d.max(dist(&x, &yp)) {
                reg2 = reg2.max((self.kernel(&x, &y) - self.kernel(&x, &yp)).abs() * w);
            }
            triples += 1;
        }
        StandardKernelReport {
            size,
            regularity_first: reg1,
            regularity_second: reg2,
            triples,
            holds: size <= self.size_const && reg1 <= self.size_const && reg2 <= self.size_const,
            exponent_flagged: self.exponent_flagged(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn hilbert_kernel_is_standard() {
        let omega = Omega::Line {
            plus: 1.0 / PI,
            minus: -1.0 / PI,
        };
        let k = StandardKernelSpec::new(omega, 1.0, 1.0).unwrap();
        let r = k.check(2000, 7);
        assert!(r.holds, "{r:?}");
        assert!((r.size - 1.0 / PI).abs() < 1e-12);
        assert!(!r.exponent_flagged);
        assert!(StandardKernelSpec::new(k.omega.clone(), 1.0, 1.5).unwrap().exponent_flagged());
    }
}
