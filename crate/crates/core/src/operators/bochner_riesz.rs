//! Bochner–Riesz means through their Bessel-function kernel.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::bessel::bessel_j_scaled;
use super::multiplier::{apply_multiplier, MultiplierSpec};
use crate::error::{LabError, Result};
use crate::grid::{point_norm, FunctionExpr, GridFunction, GridSpec, Point};
use crate::spectral::PaddedSpectrum;
use std::f64::consts::PI;

/// Kernel parameters: index `λ > 0` (or `λ = 0` on the line) and an inner
/// truncation radius below which the kernel is dropped.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BochnerRieszKernel {
    pub lambda: f64,
    #[serde(default)]
    pub eps: f64,
}

/// Shape `J_{n/2+λ}(2π|x|) / |x|^{n/2+λ}` without the constant.
pub fn kernel_shape(lambda: f64, dim: usize, x: &Point) -> f64 {
    let nu = dim as f64 / 2.0 + lambda;
    let r = point_norm(x, dim);
    // J_ν(2πr)/r^ν = (2π)^ν · J_ν(t)/t^ν with t = 2πr
    (2.0 * PI).powf(nu) * bessel_j_scaled(nu, 2.0 * PI * r)
}

impl BochnerRieszKernel {
    pub fn new(lambda: f64, eps: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(LabError::InvalidParams(format!("index λ = {lambda} must be ≥ 0")));
        }
        if !(eps.is_finite() && eps >= 0.0) {
            return Err(LabError::DegenerateRadius(format!("truncation radius {eps}")));
        }
        Ok(Self { lambda, eps })
    }

    fn check(&self, dim: usize) -> Result<()> {
        if self.lambda == 0.0 && dim != 1 {
            return Err(LabError::InvalidParams("index λ must be positive in the plane".into()));
        }
        Ok(())
    }

    fn convolve_shape(&self, f: &GridFunction) -> Vec<Complex64> {
        let spec = f.spec();
        let dim = spec.dim();
        let vol = spec.cell_volume();
        let eps = self.eps;
        PaddedSpectrum::new(f).convolve(|z| {
            if eps > 0.0 && point_norm(z, dim) < eps {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(kernel_shape(self.lambda, dim, z) * vol, 0.0)
            }
        })
    }

    fn shape_at(&self, f: &GridFunction, y: &Point) -> Complex64 {
        let spec = f.spec();
        let dim = spec.dim();
        let vol = spec.cell_volume();
        (0..spec.len())
            .map(|j| {
                let x = spec.node(j);
                let z = [y[0] - x[0], y[1] - x[1]];
                if self.eps > 0.0 && point_norm(&z, dim) < self.eps {
                    Complex64::new(0.0, 0.0)
                } else {
                    f.value(j) * kernel_shape(self.lambda, dim, &z) * vol
                }
            })
            .sum()
    }

    /// The constant `c` making the kernel form agree with the multiplier at
    /// the origin for the Gaussian `e^{-|x|²}` sampled on `spec`.
    pub fn calibrate(&self, spec: &GridSpec) -> Result<f64> {
        self.check(spec.dim())?;
        let reference = GridFunction::sample(&FunctionExpr::gauss(1.0), spec)?;
        let via_symbol = apply_multiplier(&reference, &MultiplierSpec::BochnerRiesz { lambda: self.lambda })?;
        let target = via_symbol.interpolate(&vec![0.0; spec.dim()])?;
        let shape = self.shape_at(&reference, &[0.0, 0.0]);
        if shape.norm() == 0.0 {
            return Err(LabError::ZeroNorm("kernel shape vanishes on the reference".into()));
        }
        Ok(target.re / shape.re)
    }

    /// `c · (shape * f)` with `c` from [`BochnerRieszKernel::calibrate`].
    pub fn apply(&self, f: &GridFunction) -> Result<(GridFunction, f64)> {
        let c = self.calibrate(f.spec())?;
        Ok((self.apply_with_constant(f, c)?, c))
    }

    pub fn apply_with_constant(&self, f: &GridFunction, c: f64) -> Result<GridFunction> {
        self.check(f.spec().dim())?;
        let values = self.convolve_shape(f).into_iter().map(|v| v * c).collect();
        Ok(GridFunction::from_parts(*f.spec(), values))
    }

    /// `sup |x|^n |c · shape(x)|` over `|x| ∈ [r_min, r_max]`, sampled on
    /// `samples` points of a geometric grid.
    pub fn decay_constant(&self, dim: usize, c: f64, r_min: f64, r_max: f64, samples: usize) -> f64 {
        let ratio = (r_max / r_min).ln();
        (0..samples)
            .map(|k| r_min * (ratio * k as f64 / (samples.max(2) - 1) as f64).exp())
            .map(|r| r.powi(dim as i32) * (c * kernel_shape(self.lambda, dim, &[r, 0.0])).abs())
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_index() {
        assert!(BochnerRieszKernel::new(-1.0, 0.0).is_err());
        assert!(BochnerRieszKernel::new(0.5, -1.0).is_err());
        let spec = GridSpec::new(2, 4.0, 32).unwrap();
        assert!(BochnerRieszKernel::new(0.0, 0.0).unwrap().calibrate(&spec).is_err());
    }

    #[test]
    fn zero_input() {
        let spec = GridSpec::new(1, 4.0, 128).unwrap();
        let k = BochnerRieszKernel::new(0.5, 0.0).unwrap();
        let (g, _) = k.apply(&GridFunction::zeros(spec)).unwrap();
        assert!(g.max_modulus() == 0.0);
    }
}
