//! Truncated and maximal singular integrals with homogeneous kernels
//! `Ω(z/|z|) |z|^{-n}`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::maximal::maximal_hl;
use crate::error::{LabError, Result};
use crate::grid::{point_norm, GridFunction, GridSpec, Point};
use crate::spectral::PaddedSpectrum;

const MEAN_TOL: f64 = 1e-12;

/// One Fourier mode `c cos(kθ) + s sin(kθ)` of an angular profile.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub k: u32,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

/// Angular profile of a homogeneous kernel.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Omega {
    /// The two values `Ω(+1)`, `Ω(-1)` on the line.
    Line { plus: f64, minus: f64 },
    /// A trigonometric polynomial in the polar angle (plane only).
    Trig { terms: Vec<TrigTerm> },
    /// Piecewise constant on equal angular sectors starting at `θ = 0`
    /// (plane only). Bounded but not smooth.
    Sectors { values: Vec<f64> },
}

impl Omega {
    pub fn dim(&self) -> usize {
        match self {
            Omega::Line { .. } => 1,
            _ => 2,
        }
    }

    /// Mean of `Ω` over the sphere.
    pub fn mean(&self) -> f64 {
        match self {
            Omega::Line { plus, minus } => (plus + minus) / 2.0,
            Omega::Trig { terms } => terms.iter().filter(|t| t.k == 0).map(|t| t.cos).sum(),
            Omega::Sectors { values } => values.iter().sum::<f64>() / values.len().max(1) as f64,
        }
    }

    pub fn sup(&self) -> f64 {
        match self {
            Omega::Line { plus, minus } => plus.abs().max(minus.abs()),
            Omega::Trig { terms } => terms.iter().map(|t| t.cos.abs() + t.sin.abs()).sum(),
            Omega::Sectors { values } => values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// Whether `Ω` is continuously differentiable on the sphere.
    pub fn is_smooth(&self) -> bool {
        !matches!(self, Omega::Sectors { values } if values.windows(2).any(|w| w[0] != w[1]))
    }

    /// `Ω(z/|z|)` for `z ≠ 0`.
    pub fn eval(&self, z: &Point) -> f64 {
        match self {
            Omega::Line { plus, minus } => {
                if z[0] > 0.0 {
                    *plus
                } else {
                    *minus
                }
            }
            Omega::Trig { terms } => {
                let theta = z[1].atan2(z[0]);
                terms
                    .iter()
                    .map(|t| {
                        let a = t.k as f64 * theta;
                        t.cos * a.cos() + t.sin * a.sin()
                    })
                    .sum()
            }
            Omega::Sectors { values } => {
                let theta = z[1].atan2(z[0]).rem_euclid(2.0 * PI);
                let m = values.len();
                let idx = ((theta / (2.0 * PI) * m as f64).floor() as usize).min(m - 1);
                values[idx]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = match self {
            Omega::Line { plus, minus } => plus.is_finite() && minus.is_finite(),
            Omega::Trig { terms } => terms.iter().all(|t| t.cos.is_finite() && t.sin.is_finite()),
            Omega::Sectors { values } => !values.is_empty() && values.iter().all(|v| v.is_finite()),
        };
        if !finite {
            return Err(LabError::InvalidParams("angular profile must be finite and nonempty".into()));
        }
        let mean = self.mean();
        if mean.abs() > MEAN_TOL * self.sup().max(1.0) {
            return Err(LabError::InvalidParams(format!(
                "angular profile has mean {mean}, expected zero"
            )));
        }
        Ok(())
    }
}

/// A homogeneous kernel truncated at radius `epsilon`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawKernel")]
pub struct HomogeneousKernelSpec {
    omega: Omega,
    epsilon: f64,
}

#[derive(Deserialize)]
struct RawKernel {
    omega: Omega,
    epsilon: f64,
}

impl TryFrom<RawKernel> for HomogeneousKernelSpec {
    type Error = LabError;
    fn try_from(raw: RawKernel) -> Result<Self> {
        Self::new(raw.omega, raw.epsilon)
    }
}

impl HomogeneousKernelSpec {
    pub fn new(omega: Omega, epsilon: f64) -> Result<Self> {
        omega.validate()?;
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(LabError::DegenerateRadius(format!("truncation radius {epsilon}")));
        }
        Ok(Self { omega, epsilon })
    }

    /// `Ω(±1) = ±1/π`: the Hilbert transform.
    pub fn hilbert(epsilon: f64) -> Result<Self> {
        Self::new(
            Omega::Line {
                plus: 1.0 / PI,
                minus: -1.0 / PI,
            },
            epsilon,
        )
    }

    /// Riesz transform along `axis` in the plane: `Ω = (z_axis/|z|) / (2π)`.
    pub fn riesz(axis: usize, epsilon: f64) -> Result<Self> {
        let term = if axis == 0 {
            TrigTerm { k: 1, cos: 0.5 / PI, sin: 0.0 }
        } else {
            TrigTerm { k: 1, cos: 0.0, sin: 0.5 / PI }
        };
        Self::new(Omega::Trig { terms: vec![term] }, epsilon)
    }

    pub fn omega(&self) -> &Omega {
        &self.omega
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        Self::new(self.omega.clone(), epsilon)
    }

    /// `Ω(z/|z|)|z|^{-n}` for `|z| ≥ ε`, else zero.
    pub fn kernel(&self, z: &Point, dim: usize) -> f64 {
        let r = point_norm(z, dim);
        if r < self.epsilon * (1.0 - 1e-12) || r == 0.0 {
            0.0
        } else {
            self.omega.eval(z) / r.powi(dim as i32)
        }
    }

    pub(crate) fn check_grid(&self, spec: &GridSpec) -> Result<()> {
        if self.omega.dim() != spec.dim() {
            return Err(LabError::InvalidParams(format!(
                "angular profile is for dimension {}, grid has {}",
                self.omega.dim(),
                spec.dim()
            )));
        }
        check_truncation(self.epsilon, spec)
    }
}

fn check_truncation(eps: f64, spec: &GridSpec) -> Result<()> {
    let h = spec.spacing();
    if eps < h * (1.0 - 1e-12) {
        return Err(LabError::SubGridTruncation { eps, spacing: h });
    }
    Ok(())
}

fn convolve_truncated(spectrum: &PaddedSpectrum, kernel: &HomogeneousKernelSpec, spec: &GridSpec) -> Vec<Complex64> {
    let vol = spec.cell_volume();
    let dim = spec.dim();
    spectrum.convolve(|z| Complex64::new(kernel.kernel(z, dim) * vol, 0.0))
}

/// `∫_{|z| ≥ ε} Ω(z/|z|) |z|^{-n} f(y - z) dz` at every node, by lattice
/// quadrature without periodisation.
pub fn cz_truncated(f: &GridFunction, kernel: &HomogeneousKernelSpec) -> Result<GridFunction> {
    let spec = *f.spec();
    kernel.check_grid(&spec)?;
    let values = convolve_truncated(&PaddedSpectrum::new(f), kernel, &spec);
    Ok(GridFunction::from_parts(spec, values))
}

/// The same quadrature evaluated at an arbitrary point `y`.
pub fn cz_truncated_at(f: &GridFunction, kernel: &HomogeneousKernelSpec, y: &Point) -> Result<Complex64> {
    let spec = f.spec();
    kernel.check_grid(spec)?;
    let dim = spec.dim();
    let vol = spec.cell_volume();
    Ok((0..spec.len())
        .map(|j| {
            let x = spec.node(j);
            let z = [y[0] - x[0], y[1] - x[1]];
            f.value(j) * kernel.kernel(&z, dim) * vol
        })
        .sum())
}

/// Geometric truncation ladder `h·2^{k/2}` up to the box diameter.
pub fn eps_ladder(spec: &GridSpec) -> Vec<f64> {
    let h = spec.spacing();
    let top = 2.0 * spec.half_width() * (spec.dim() as f64).sqrt();
    let mut out = Vec::new();
    let mut k = 0;
    loop {
        let e = h * 2f64.powf(k as f64 / 2.0);
        if e > top * (1.0 + 1e-12) {
            break;
        }
        out.push(e);
        k += 1;
    }
    out
}

/// `T* f = max_ε |T_ε f|` over `ladder`.
pub fn cz_maximal(f: &GridFunction, omega: &Omega, ladder: &[f64]) -> Result<GridFunction> {
    if ladder.is_empty() {
        return Err(LabError::EmptyCandidates("truncation ladder is empty".into()));
    }
    let spec = *f.spec();
    let kernels = ladder
        .iter()
        .map(|&e| {
            let k = HomogeneousKernelSpec::new(omega.clone(), e)?;
            k.check_grid(&spec)?;
            Ok(k)
        })
        .collect::<Result<Vec<_>>>()?;
    let spectrum = PaddedSpectrum::new(f);
    let best = kernels
        .par_iter()
        .map(|k| {
            convolve_truncated(&spectrum, k, &spec)
                .into_iter()
                .map(|v| v.norm())
                .collect::<Vec<f64>>()
        })
        .reduce_with(|a, b| a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect())
        .expect("ladder is nonempty");
    Ok(GridFunction::from_parts(spec, best.into_iter().map(|v| Complex64::new(v, 0.0)).collect()))
}

/// Values of a truncated integral along a ladder of radii and the
/// `ε → 0` limit of the least-squares line through them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrincipalValue {
    pub samples: Vec<(f64, [f64; 2])>,
    pub limit: [f64; 2],
}

/// Principal value at `y` from truncations at `ladder`, extrapolated
/// linearly in `ε` to zero.
pub fn principal_value_at(f: &GridFunction, omega: &Omega, y: &Point, ladder: &[f64]) -> Result<PrincipalValue> {
    if ladder.is_empty() {
        return Err(LabError::EmptyCandidates("truncation ladder is empty".into()));
    }
    let samples = ladder
        .iter()
        .map(|&e| {
            let k = HomogeneousKernelSpec::new(omega.clone(), e)?;
            let v = cz_truncated_at(f, &k, y)?;
            Ok((e, [v.re, v.im]))
        })
        .collect::<Result<Vec<_>>>()?;
    let limit = if samples.len() == 1 {
        samples[0].1
    } else {
        let m = samples.len() as f64;
        let mean_e = samples.iter().map(|s| s.0).sum::<f64>() / m;
        let var: f64 = samples.iter().map(|s| (s.0 - mean_e).powi(2)).sum();
        let mut out = [0.0; 2];
        for (c, slot) in out.iter_mut().enumerate() {
            let mean_v = samples.iter().map(|s| s.1[c]).sum::<f64>() / m;
            let cov: f64 = samples.iter().map(|s| (s.0 - mean_e) * (s.1[c] - mean_v)).sum();
            *slot = mean_v - cov / var * mean_e;
        }
        out
    };
    Ok(PrincipalValue { samples, limit })
}

/// The three fields of the Cotlar inequality `T*f ≤ c (M(Tf) + Mf)`, with
/// `Tf` the finest truncation of the ladder.
#[derive(Clone, Debug, PartialEq)]
pub struct CotlarFields {
    pub maximal_truncation: Vec<f64>,
    pub maximal_of_operator: Vec<f64>,
    pub maximal_of_input: Vec<f64>,
}

impl CotlarFields {
    pub fn compute(f: &GridFunction, omega: &Omega, ladder: &[f64]) -> Result<Self> {
        let finest = ladder
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let t_star = cz_maximal(f, omega, ladder)?;
        let tf = cz_truncated(f, &HomogeneousKernelSpec::new(omega.clone(), finest)?)?;
        Ok(Self {
            maximal_truncation: t_star.values().iter().map(|v| v.re).collect(),
            maximal_of_operator: maximal_hl(&tf).values().iter().map(|v| v.re).collect(),
            maximal_of_input: maximal_hl(f).values().iter().map(|v| v.re).collect(),
        })
    }

    /// `max T*f / (M(Tf) + Mf)` over nodes whose denominator exceeds
    /// `floor` times its maximum.
    pub fn constant(&self, floor: f64) -> f64 {
        let den: Vec<f64> = self
            .maximal_of_operator
            .iter()
            .zip(&self.maximal_of_input)
            .map(|(a, b)| a + b)
            .collect();
        let top = den.iter().copied().fold(0.0, f64::max);
        den.iter()
            .zip(&self.maximal_truncation)
            .filter(|(d, _)| **d > floor * top && **d > 0.0)
            .map(|(d, t)| t / d)
            .fold(0.0, f64::max)
    }
}
