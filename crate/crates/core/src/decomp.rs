//! Annulus partitions of unity, near/far splitting, far-field decay and
//! mollification.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::OnceLock;

use crate::error::{LabError, Result};
use crate::grid::{point_norm, pointwise_lq, GridFunction, GridFunctionSeq, GridSpec, Point};
use crate::norms::{lp_norm, morrey_norm_dyadic, MorreyParams, Region};
use crate::operators::OperatorSpec;
use crate::spectral::linear_convolve;

/// Cubic smoothstep `3t² - 2t³` clamped to `[0, 1]`.
pub fn cubic_step(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

/// `1` inside radius `a`, `0` beyond `2a`, cubic in between.
fn cap(rho: f64, a: f64) -> f64 {
    1.0 - cubic_step((rho - a) / a)
}

/// Radial partition of unity around `centre`: `φ_0` lives in `B_{4R}`,
/// `φ_i` in the annulus `B_{2^{i+2}R} \ B_{2^i R}`, and the last member
/// takes everything beyond `2^{I}R`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnnulusPartition {
    centre: Point,
    base_radius: f64,
    members: Vec<GridFunction>,
}

impl AnnulusPartition {
    pub fn centre(&self) -> &Point {
        &self.centre
    }

    pub fn base_radius(&self) -> f64 {
        self.base_radius
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    /// Index of the outermost member.
    pub fn outer_index(&self) -> usize {
        self.members.len() - 1
    }

    /// `Σ_i φ_i` at every node.
    pub fn sum(&self) -> Vec<f64> {
        let len = self.members[0].spec().len();
        (0..len)
            .map(|k| self.members.iter().map(|m| m.value(k).re).sum())
            .collect()
    }

    /// `{φ_i f}`.
    pub fn split(&self, f: &GridFunction) -> Result<Vec<GridFunction>> {
        self.members.iter().map(|phi| phi.mul(f)).collect()
    }
}

/// Smallest `I` with `2^{I+2} R ≥ 2L√n`, at least 1.
pub fn default_outer_index(spec: &GridSpec, radius: f64) -> usize {
    let reach = 2.0 * spec.half_width() * (spec.dim() as f64).sqrt();
    let mut i = 1;
    while 2f64.powi(i as i32 + 2) * radius < reach {
        i += 1;
    }
    i
}

/// Builds `φ_0, …, φ_{I}` on `spec`. `outer_index` defaults to
/// [`default_outer_index`]; it must be at least 1 and the outer ball
/// `B_{2^{I+2}R}(x)` must contain every node.
pub fn build_annulus_partition(
    centre: Point,
    radius: f64,
    outer_index: Option<usize>,
    spec: &GridSpec,
) -> Result<AnnulusPartition> {
    if !(radius.is_finite() && radius > 0.0) {
        return Err(LabError::DegenerateRadius(format!("base radius {radius}")));
    }
    let outer = outer_index.unwrap_or_else(|| default_outer_index(spec, radius));
    if outer == 0 {
        return Err(LabError::InvalidParams("partition needs at least two members".into()));
    }
    let reach = spec.max_distance_from(&centre);
    if 2f64.powi(outer as i32 + 2) * radius < reach {
        return Err(LabError::DomainTooSmall(format!(
            "outer ball of radius {} misses nodes at distance {reach}",
            2f64.powi(outer as i32 + 2) * radius
        )));
    }
    let dim = spec.dim();
    let rho: Vec<f64> = spec
        .nodes()
        .map(|p| point_norm(&[p[0] - centre[0], p[1] - centre[1]], dim))
        .collect();
    // caps[i] = 1 on B_{2^{i+1}R}, 0 off B_{2^{i+2}R}
    let caps: Vec<Vec<f64>> = (0..outer)
        .map(|i| {
            let a = 2f64.powi(i as i32 + 1) * radius;
            rho.iter().map(|&r| cap(r, a)).collect()
        })
        .collect();
    let to_fn = |v: Vec<f64>| GridFunction::from_parts(*spec, v.into_iter().map(|x| Complex64::new(x, 0.0)).collect());
    let mut members = vec![to_fn(caps[0].clone())];
    for i in 1..outer {
        members.push(to_fn(caps[i].iter().zip(&caps[i - 1]).map(|(a, b)| a - b).collect()));
    }
    members.push(to_fn(caps[outer - 1].iter().map(|c| 1.0 - c).collect()));
    Ok(AnnulusPartition {
        centre,
        base_radius: radius,
        members,
    })
}

/// Local norms of `T` applied to the near and far parts of `f`, scaled by
/// `R^{n/p+r} ‖f‖_{L^r_p}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearFarReport {
    pub centre: Point,
    pub radius: f64,
    /// `‖T(φ_0 f)‖_{L_p(B_R)}` over the normaliser.
    pub near_ratio: f64,
    /// `‖T((1 - φ_0) f)‖_{L_p(B_R)}` over the normaliser.
    pub far_ratio: f64,
    /// `Σ_{i≥1} ‖T(φ_i f)‖_{L_p(B_R)}` over the normaliser.
    pub far_termwise_ratio: f64,
    pub normaliser: f64,
}

/// Splits `f` with the annulus partition around `(x, R)` and measures the
/// operator on each side inside `B_R(x)`.
pub fn near_far_split(
    f: &GridFunction,
    centre: Point,
    radius: f64,
    op: &OperatorSpec,
    params: &MorreyParams,
) -> Result<NearFarReport> {
    let spec = *f.spec();
    if radius < 4.0 * spec.spacing() {
        return Err(LabError::DegenerateRadius(format!(
            "radius {radius} is below four grid cells"
        )));
    }
    let partition = build_annulus_partition(centre, radius, None, &spec)?;
    let pieces = partition.split(f)?;
    let morrey = morrey_norm_dyadic(f, params, None)?.value;
    let normaliser = radius.powf(params.scale_exponent(spec.dim())) * morrey;
    if normaliser == 0.0 {
        return Err(LabError::ZeroNorm("input has zero Morrey norm".into()));
    }
    let ball = Region::Ball { centre, radius };
    let local = |g: &GridFunction| -> Result<f64> { lp_norm(&op.apply(g)?, params.p(), Some(&ball)) };
    let near = local(&pieces[0])?;
    let far_part = f.sub(&pieces[0])?;
    let far = local(&far_part)?;
    let termwise: Vec<f64> = pieces[1..]
        .par_iter()
        .map(|g| if g.is_zero() { Ok(0.0) } else { local(g) })
        .collect::<Result<Vec<_>>>()?;
    Ok(NearFarReport {
        centre,
        radius,
        near_ratio: near / normaliser,
        far_ratio: far / normaliser,
        far_termwise_ratio: termwise.iter().sum::<f64>() / normaliser,
        normaliser,
    })
}

/// Decay of `t^n ‖{g_j(x)}‖_{ℓ_q}` on spheres `|x| = t ≥ 2R̄`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FarFieldReport {
    /// Largest `t^n ‖·‖_{ℓ_q}` on the sampled spheres.
    pub sup: f64,
    /// Constant term of the least-squares fit `a + b/t + c/t²`.
    pub asymptote: f64,
    /// Root-mean-square residual of that fit.
    pub fit_residual: f64,
    /// `(t, sup over the sphere)` pairs in increasing `t`.
    pub profile: Vec<(f64, f64)>,
}

/// Sphere-wise supremum of `t^n ‖{g_j(x)}‖_{ℓ_q}` for `2R̄ ≤ t ≤ L`, with
/// spheres binned to the grid spacing in the plane.
pub fn far_field_decay(seq: &GridFunctionSeq, support_radius: f64, q: f64) -> Result<FarFieldReport> {
    let spec = *seq.spec();
    let l = spec.half_width();
    if l < 4.0 * support_radius {
        return Err(LabError::DomainTooSmall(format!(
            "half-width {l} is below four support radii ({support_radius})"
        )));
    }
    let combined = pointwise_lq(seq, q)?;
    let dim = spec.dim();
    let h = spec.spacing();
    let lo = 2.0 * support_radius;
    let mut bins: std::collections::BTreeMap<i64, (f64, f64)> = std::collections::BTreeMap::new();
    for (i, x) in spec.nodes().enumerate() {
        let t = point_norm(&x, dim);
        if t < lo || t > l {
            continue;
        }
        let key = (t / h).round() as i64;
        let v = combined.value(i).re * t.powi(dim as i32);
        let slot = bins.entry(key).or_insert((t, 0.0));
        if v > slot.1 {
            slot.1 = v;
        }
    }
    let profile: Vec<(f64, f64)> = bins.into_values().collect();
    let sup = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    let (asymptote, fit_residual) = fit_inverse_quadratic(&profile);
    Ok(FarFieldReport {
        sup,
        asymptote,
        fit_residual,
        profile,
    })
}

/// Least squares for `a + b/t + c/t²`; returns `(a, rms residual)`.
fn fit_inverse_quadratic(samples: &[(f64, f64)]) -> (f64, f64) {
    if samples.len() < 3 {
        return (samples.last().map_or(0.0, |s| s.1), 0.0);
    }
    // normal equations in the basis 1, s, s² with s = t_min / t
    let t0 = samples[0].0;
    let mut ata = [[0.0f64; 3]; 3];
    let mut atb = [0.0f64; 3];
    for &(t, v) in samples {
        let s = t0 / t;
        let row = [1.0, s, s * s];
        for a in 0..3 {
            for b in 0..3 {
                ata[a][b] += row[a] * row[b];
            }
            atb[a] += row[a] * v;
        }
    }
    let coef = solve3(ata, atb);
    let rss: f64 = samples
        .iter()
        .map(|&(t, v)| {
            let s = t0 / t;
            (coef[0] + coef[1] * s + coef[2] * s * s - v).powi(2)
        })
        .sum();
    (coef[0], (rss / samples.len() as f64).sqrt())
}

fn solve3(mut a: [[f64; 3]; 3], mut b: [f64; 3]) -> [f64; 3] {
    for col in 0..3 {
        let pivot = (col..3)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        a.swap(col, pivot);
        b.swap(col, pivot);
        if a[col][col] == 0.0 {
            return [0.0; 3];
        }
        for row in col + 1..3 {
            let m = a[row][col] / a[col][col];
            for k in col..3 {
                a[row][k] -= m * a[col][k];
            }
            b[row] -= m * b[col];
        }
    }
    let mut x = [0.0; 3];
    for row in (0..3).rev() {
        let s: f64 = (row + 1..3).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

/// Mollifier `ψ_l = l^n ψ(l ·)` with `ψ = C e^{-1/(1-|x|²)}` on the unit
/// ball, `∫ψ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MollifierSpec {
    scale: u32,
}

impl MollifierSpec {
    pub fn new(scale: u32) -> Result<Self> {
        if scale == 0 {
            return Err(LabError::InvalidParams("mollifier scale must be at least 1".into()));
        }
        Ok(Self { scale })
    }

    pub fn scale(&self) -> u32 {
        self.scale
    }

    /// `ψ(x)`, normalised to unit integral in dimension `dim`.
    pub fn profile(x: &Point, dim: usize) -> f64 {
        bump_shape(point_norm(x, dim)) / bump_integral(dim)
    }

    /// `ψ_l(x)`.
    pub fn kernel(&self, x: &Point, dim: usize) -> f64 {
        let l = self.scale as f64;
        let scaled = [x[0] * l, x[1] * l];
        l.powi(dim as i32) * Self::profile(&scaled, dim)
    }
}

fn bump_shape(r: f64) -> f64 {
    if r >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - r * r)).exp()
    }
}

fn bump_integral(dim: usize) -> f64 {
    static CACHE: [OnceLock<f64>; 2] = [OnceLock::new(), OnceLock::new()];
    *CACHE[dim - 1].get_or_init(|| bump_integral_uncached(dim))
}

/// `∫ e^{-1/(1-|x|²)}` over the unit ball by a fine midpoint rule.
fn bump_integral_uncached(dim: usize) -> f64 {
    const STEPS: usize = 20_000;
    let dr = 1.0 / STEPS as f64;
    let radial: f64 = (0..STEPS)
        .map(|k| {
            let r = (k as f64 + 0.5) * dr;
            let weight = if dim == 1 { 2.0 } else { 2.0 * PI * r };
            weight * bump_shape(r)
        })
        .sum();
    radial * dr
}

/// `f * ψ_l` with the discrete kernel rescaled to unit mass. When `1/l`
/// is below one cell the kernel is the identity.
pub fn mollify(f: &GridFunction, m: &MollifierSpec) -> GridFunction {
    let spec = *f.spec();
    let dim = spec.dim();
    let h = spec.spacing();
    let vol = spec.cell_volume();
    let reach = (1.0 / (m.scale as f64 * h)).ceil() as i64;
    let mut mass = 0.0;
    if dim == 1 {
        for a in -reach..=reach {
            mass += m.kernel(&[a as f64 * h, 0.0], 1) * vol;
        }
    } else {
        for a in -reach..=reach {
            for b in -reach..=reach {
                mass += m.kernel(&[a as f64 * h, b as f64 * h], 2) * vol;
            }
        }
    }
    if mass == 0.0 {
        return f.clone();
    }
    linear_convolve(f, |z| Complex64::new(m.kernel(z, dim) * vol / mass, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FunctionExpr;

    #[test]
    fn partition_sums_to_one() {
        for dim in [1, 2] {
            let spec = GridSpec::new(dim, 4.0, 64).unwrap();
            let part = build_annulus_partition([0.3, -0.2], 0.5, None, &spec).unwrap();
            for s in part.sum() {
                assert!((s - 1.0).abs() < 1e-12);
            }
            for (i, phi) in part.members().iter().enumerate() {
                for (k, v) in phi.values().iter().enumerate() {
                    assert!(v.re >= 0.0 && v.re <= 1.0);
                    let x = spec.node(k);
                    let rho = point_norm(&[x[0] - 0.3, x[1] + 0.2], dim);
                    if v.re != 0.0 {
                        assert!(rho < 2f64.powi(i as i32 + 2) * 0.5);
                        if i >= 1 {
                            assert!(rho > 2f64.powi(i as i32) * 0.5);
                        }
                    }
                    if i == 0 && rho <= 1.0 {
                        assert_eq!(v.re, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn partition_must_cover() {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        assert!(matches!(
            build_annulus_partition([0.0, 0.0], 0.25, Some(1), &spec),
            Err(LabError::DomainTooSmall(_))
        ));
        assert!(build_annulus_partition([0.0, 0.0], 0.0, None, &spec).is_err());
    }

    #[test]
    fn mollifier_mass_and_identity_on_constants() {
        for dim in [1, 2] {
            let m = MollifierSpec::new(4).unwrap();
            let spec = GridSpec::new(dim, 2.0, 64).unwrap();
            let f = GridFunction::from_fn(spec, |_| Complex64::new(1.0, 0.0)).unwrap();
            let g = mollify(&f, &m);
            let centre = spec.flat_index([32, 32 * (dim - 1)]);
            assert!((g.value(centre).re - 1.0).abs() < 1e-12);
            assert!(MollifierSpec::profile(&[0.0, 0.0], dim) <= 1.0);
        }
        assert!(MollifierSpec::new(0).is_err());
        let spec = GridSpec::new(1, 2.0, 64).unwrap();
        assert!(mollify(&GridFunction::zeros(spec), &MollifierSpec::new(2).unwrap()).is_zero());
    }

    #[test]
    fn fit_recovers_exact_model() {
        let samples: Vec<(f64, f64)> = (2..50).map(|k| {
            let t = k as f64;
            (t, 0.7 + 0.3 / t - 0.2 / (t * t))
        }).collect();
        let (a, res) = fit_inverse_quadratic(&samples);
        assert!((a - 0.7).abs() < 1e-10 && res < 1e-10);
    }

    #[test]
    fn near_piece_vanishes_for_distant_support() {
        let spec = GridSpec::new(1, 8.0, 512).unwrap();
        let f = GridFunction::sample(&FunctionExpr::bump(5.0, 0.5), &spec).unwrap();
        let params = MorreyParams::new(2.0, -0.25).unwrap();
        let r = near_far_split(&f, [0.0, 0.0], 0.5, &OperatorSpec::Maximal, &params).unwrap();
        assert_eq!(r.near_ratio, 0.0);
        assert!(r.far_ratio > 0.0);
        let g = GridFunction::sample(&FunctionExpr::bump(0.0, 0.5), &spec).unwrap();
        let r = near_far_split(&g, [0.0, 0.0], 1.0, &OperatorSpec::Maximal, &params).unwrap();
        assert_eq!(r.far_ratio, 0.0);
        assert!(near_far_split(&g, [0.0, 0.0], 0.01, &OperatorSpec::Maximal, &params).is_err());
    }
}
