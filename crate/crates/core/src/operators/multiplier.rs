//! Fourier multipliers applied through the periodic FFT.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::bessel::bessel_j;
use crate::error::{LabError, Result};
use crate::grid::{point_norm, GridFunction, GridSpec, Point};
use crate::spectral::{apply_symbol, axis_frequencies};

/// `C^∞` monotone step: 0 for `t ≤ 0`, 1 for `t ≥ 1`.
pub fn smooth_step(t: f64) -> f64 {
    if t <= 0.0 {
        0.0
    } else if t >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / t).exp();
        let b = (-1.0 / (1.0 - t)).exp();
        a / (a + b)
    }
}

/// Cut-off vanishing on `[0, ½]` and equal to 1 on `[1, ∞)`.
pub fn high_pass(t: f64) -> f64 {
    smooth_step(2.0 * t - 1.0)
}

/// Radial profile `ψ` of a Littlewood–Paley family, `ψ(0) = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LpProfile {
    /// `φ(t) - φ(2t)` with `φ = 1 - high_pass`, supported in `[¼, 1]`.
    #[default]
    SmoothStep,
    /// `e^{-t²} - e^{-4t²}`.
    GaussianDifference,
}

impl LpProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            LpProfile::SmoothStep => high_pass(2.0 * t) - high_pass(t),
            LpProfile::GaussianDifference => (-t * t).exp() - (-4.0 * t * t).exp(),
        }
    }

    /// Radius beyond which the profile is negligible.
    pub fn reach(&self) -> f64 {
        match self {
            LpProfile::SmoothStep => 1.0,
            LpProfile::GaussianDifference => 7.0,
        }
    }
}

/// A Fourier multiplier symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum MultiplierSpec {
    /// Indicator of `(a, b)` on the line; `None` is an infinite endpoint.
    /// Frequencies equal to an endpoint get the value ½.
    Interval { a: Option<f64>, b: Option<f64> },
    /// `ψ(2^{-j} |ξ|)`.
    DyadicSmooth {
        j: i32,
        #[serde(default)]
        profile: LpProfile,
    },
    /// `e^{i|ξ|^b} |ξ|^{-nb/2} φ(|ξ|)`, `0 < b < 1`, `φ` the high-pass cut-off.
    StronglySingular { b: f64 },
    /// `(1 - |ξ|²)^λ` on the unit ball; for `λ = 0` the sphere gets ½.
    BochnerRiesz { lambda: f64 },
}

impl MultiplierSpec {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            MultiplierSpec::Interval { a, b } => {
                if dim != 1 {
                    return Err(LabError::InvalidParams("interval multipliers act on the line".into()));
                }
                let lo = a.unwrap_or(f64::NEG_INFINITY);
                let hi = b.unwrap_or(f64::INFINITY);
                if lo.is_nan() || hi.is_nan() || lo >= hi {
                    return Err(LabError::InvalidParams(format!("interval ({lo}, {hi}) is empty")));
                }
            }
            MultiplierSpec::DyadicSmooth { profile, .. } => {
                if profile.eval(0.0) != 0.0 {
                    return Err(LabError::InvalidParams("profile must vanish at the origin".into()));
                }
            }
            MultiplierSpec::StronglySingular { b } => {
                if !(*b > 0.0 && *b < 1.0) {
                    return Err(LabError::InvalidParams(format!("exponent b = {b} outside (0, 1)")));
                }
            }
            MultiplierSpec::BochnerRiesz { lambda } => {
                if !(lambda.is_finite() && *lambda >= 0.0) {
                    return Err(LabError::InvalidParams(format!("index λ = {lambda} must be ≥ 0")));
                }
            }
        }
        Ok(())
    }

    /// Set for a Bochner–Riesz index below the critical `(n-1)/2`.
    pub fn below_critical_index(&self, dim: usize) -> bool {
        matches!(self, MultiplierSpec::BochnerRiesz { lambda } if *lambda < (dim as f64 - 1.0) / 2.0)
    }

    pub fn symbol(&self, xi: &Point, dim: usize) -> Complex64 {
        let r = point_norm(xi, dim);
        let real = |v: f64| Complex64::new(v, 0.0);
        match self {
            MultiplierSpec::Interval { a, b } => {
                let x = xi[0];
                let lo = a.unwrap_or(f64::NEG_INFINITY);
                let hi = b.unwrap_or(f64::INFINITY);
                if x == lo || x == hi {
                    real(0.5)
                } else if x > lo && x < hi {
                    real(1.0)
                } else {
                    real(0.0)
                }
            }
            MultiplierSpec::DyadicSmooth { j, profile } => real(profile.eval(r * 2f64.powi(-j))),
            MultiplierSpec::StronglySingular { b } => {
                let cut = high_pass(r);
                if cut == 0.0 {
                    real(0.0)
                } else {
                    Complex64::from_polar(cut * r.powf(-(dim as f64) * b / 2.0), r.powf(*b))
                }
            }
            MultiplierSpec::BochnerRiesz { lambda } => {
                if r > 1.0 {
                    real(0.0)
                } else if r == 1.0 {
                    real(if *lambda == 0.0 { 0.5 } else { 0.0 })
                } else {
                    real((1.0 - r * r).powf(*lambda))
                }
            }
        }
    }
}

/// Inverse transform of `symbol · f̂`.
pub fn apply_multiplier(f: &GridFunction, spec: &MultiplierSpec) -> Result<GridFunction> {
    let dim = f.spec().dim();
    spec.validate(dim)?;
    Ok(apply_symbol(f, |xi| spec.symbol(xi, dim)))
}

/// `max_ξ Σ_j |ψ(2^{-j}ξ)|²` over the nonzero frequencies of `spec`, the
/// family running over `js`.
pub fn square_symbol_sup(profile: LpProfile, spec: &GridSpec, js: std::ops::RangeInclusive<i32>) -> f64 {
    let freqs = axis_frequencies(spec);
    let radii: Vec<f64> = if spec.dim() == 1 {
        freqs.iter().map(|f| f.abs()).collect()
    } else {
        freqs
            .iter()
            .flat_map(|a| freqs.iter().map(move |b| (a * a + b * b).sqrt()))
            .collect()
    };
    radii
        .iter()
        .filter(|r| **r > 0.0)
        .map(|&r| {
            js.clone()
                .map(|j| profile.eval(r * 2f64.powi(-j)).powi(2))
                .sum::<f64>()
        })
        .fold(0.0, f64::max)
}

/// Inverse transform `Ψ(x)` of the radial profile, by the trapezoid rule on
/// `quad_points` nodes of `[0, reach]`.
pub fn profile_kernel(profile: LpProfile, dim: usize, r: f64, quad_points: usize) -> f64 {
    let reach = profile.reach();
    let dt = reach / quad_points as f64;
    let integrand = |t: f64| {
        let psi = profile.eval(t);
        if dim == 1 {
            2.0 * psi * (2.0 * PI * r * t).cos()
        } else {
            2.0 * PI * psi * bessel_j(0.0, 2.0 * PI * r * t) * t
        }
    };
    let mut s = 0.5 * (integrand(0.0) + integrand(reach));
    for k in 1..quad_points {
        s += integrand(k as f64 * dt);
    }
    s * dt
}

/// `sup_x |x|^n (Σ_j |2^{jn} Ψ(2^j x)|²)^{1/2}` over a geometric sample of
/// radii and the levels `js`.
pub fn square_kernel_constant(
    profile: LpProfile,
    dim: usize,
    js: std::ops::RangeInclusive<i32>,
    quad_points: usize,
) -> f64 {
    let n = dim as f64;
    (0..=48)
        .map(|k| 2f64.powf(-6.0 + k as f64 / 4.0))
        .map(|r| {
            let s: f64 = js
                .clone()
                .map(|j| {
                    let scale = 2f64.powi(j);
                    (scale.powf(n) * profile_kernel(profile, dim, scale * r, quad_points)).powi(2)
                })
                .sum();
            r.powf(n) * s.sqrt()
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(MultiplierSpec::Interval { a: Some(1.0), b: Some(1.0) }.validate(1).is_err());
        assert!(MultiplierSpec::Interval { a: None, b: None }.validate(2).is_err());
        assert!(MultiplierSpec::StronglySingular { b: 1.0 }.validate(1).is_err());
        assert!(MultiplierSpec::BochnerRiesz { lambda: -0.1 }.validate(1).is_err());
        assert!(MultiplierSpec::BochnerRiesz { lambda: 0.2 }.below_critical_index(2));
        assert!(!MultiplierSpec::BochnerRiesz { lambda: 0.0 }.below_critical_index(1));
    }

    #[test]
    fn full_line_is_identity() {
        let spec = GridSpec::new(1, 4.0, 256).unwrap();
        let f = GridFunction::sample(&"sum (chi -1 0.5) (gauss 0.3)".parse().unwrap(), &spec).unwrap();
        let g = apply_multiplier(&f, &MultiplierSpec::Interval { a: None, b: None }).unwrap();
        for (a, b) in f.values().iter().zip(g.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constants_are_annihilated_by_vanishing_profiles() {
        let spec = GridSpec::new(2, 2.0, 32).unwrap();
        let f = GridFunction::from_fn(spec, |_| Complex64::new(1.0, 0.0)).unwrap();
        for profile in [LpProfile::SmoothStep, LpProfile::GaussianDifference] {
            let g = apply_multiplier(&f, &MultiplierSpec::DyadicSmooth { j: 0, profile }).unwrap();
            assert!(g.max_modulus() < 1e-12);
        }
    }

    #[test]
    fn smooth_step_family_squares_stay_below_one() {
        let spec = GridSpec::new(1, 8.0, 512).unwrap();
        let s = square_symbol_sup(LpProfile::SmoothStep, &spec, -8..=8);
        assert!(s <= 1.0 + 1e-12 && s > 0.4);
    }

    #[test]
    fn bochner_riesz_kills_high_frequencies() {
        let spec = GridSpec::new(1, 4.0, 128).unwrap();
        // frequency 12/(2L) = 1.5
        let f = GridFunction::from_fn(spec, |p| Complex64::from_polar(1.0, 2.0 * PI * 1.5 * p[0])).unwrap();
        let g = apply_multiplier(&f, &MultiplierSpec::BochnerRiesz { lambda: 0.5 }).unwrap();
        assert!(g.max_modulus() < 1e-12);
    }
}
