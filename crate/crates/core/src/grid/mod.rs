//! Sampled functions on uniform cell-centred grids, dyadic cube geometry,
//! and the pointwise `ℓ_q` reduction of finite function sequences.
//!
//! A grid covers the box `[-L, L]^n` (`n ∈ {1, 2}`) with `N` cells per axis.
//! Samples live at cell centres `-L + (i + ½)h`, `h = 2L/N`, so every
//! integral in the crate is a midpoint sum: node value times cell volume.
//! Multi-dimensional samples are stored lexicographically (row-major, the
//! first axis varies slowest).

mod cube;
mod expr;

pub use cube::{cubes_touching, level_cube_sums, DyadicCube, LevelRange, DEFAULT_CUBE_CAP};
pub use expr::{sample, Coord, FunctionExpr};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// A point of the ambient space. One-dimensional grids leave the second
/// coordinate at zero.
pub type Point = [f64; 2];

/// Euclidean length of a point, reading only the first `dim` coordinates.
pub fn point_norm(p: &Point, dim: usize) -> f64 {
    p[..dim].iter().map(|c| c * c).sum::<f64>().sqrt()
}

/// Pads a user-supplied coordinate slice to a [`Point`].
pub fn to_point(coords: &[f64], dim: usize) -> Result<Point> {
    if coords.len() != dim {
        return Err(LabError::LengthMismatch {
            expected: dim,
            actual: coords.len(),
        });
    }
    let mut p = [0.0; 2];
    p[..dim].copy_from_slice(coords);
    Ok(p)
}

#[derive(Deserialize)]
struct RawGridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

/// Geometry of a uniform grid over `[-L, L]^n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawGridSpec")]
pub struct GridSpec {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl TryFrom<RawGridSpec> for GridSpec {
    type Error = LabError;

    fn try_from(raw: RawGridSpec) -> Result<Self> {
        GridSpec::new(raw.dim, raw.half_width, raw.points_per_axis)
    }
}

impl GridSpec {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self> {
        if dim != 1 && dim != 2 {
            return Err(LabError::InvalidGrid(format!(
                "dimension must be 1 or 2, got {dim}"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(LabError::InvalidGrid(format!(
                "half width must be positive and finite, got {half_width}"
            )));
        }
        if points_per_axis < 2 || !points_per_axis.is_power_of_two() {
            return Err(LabError::InvalidGrid(format!(
                "points per axis must be a power of two >= 2, got {points_per_axis}"
            )));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    /// Grid spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Total number of nodes, `N^n`.
    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Centre of cell `i` along any axis.
    pub fn coord(&self, i: usize) -> f64 {
        -self.half_width + (i as f64 + 0.5) * self.spacing()
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        if self.dim == 1 {
            [flat, 0]
        } else {
            [flat / n, flat % n]
        }
    }

    pub fn flat_index(&self, multi: [usize; 2]) -> usize {
        if self.dim == 1 {
            multi[0]
        } else {
            multi[0] * self.points_per_axis + multi[1]
        }
    }

    pub fn node(&self, flat: usize) -> Point {
        let m = self.multi_index(flat);
        let mut p = [0.0; 2];
        for (axis, slot) in p.iter_mut().enumerate().take(self.dim) {
            *slot = self.coord(m[axis]);
        }
        p
    }

    pub fn nodes(&self) -> impl Iterator<Item = Point> + '_ {
        (0..self.len()).map(move |i| self.node(i))
    }

    /// Inclusive range of cell indices along one axis whose centres lie in the
    /// closed interval `[a, b]`, or `None` when no centre does.
    pub fn axis_range_closed(&self, a: f64, b: f64) -> Option<(usize, usize)> {
        let h = self.spacing();
        let lo = ((a + self.half_width) / h - 0.5).ceil().max(0.0);
        let hi = ((b + self.half_width) / h - 0.5)
            .floor()
            .min(self.points_per_axis as f64 - 1.0);
        if lo > hi {
            None
        } else {
            Some((lo as usize, hi as usize))
        }
    }

    /// Half-open range `[lo, hi)` of cell indices whose centres lie in `[a, b)`.
    pub fn axis_range_half_open(&self, a: f64, b: f64) -> (usize, usize) {
        let h = self.spacing();
        let n = self.points_per_axis as f64;
        let lo = ((a + self.half_width) / h - 0.5).ceil().clamp(0.0, n);
        let hi = ((b + self.half_width) / h - 0.5).ceil().clamp(0.0, n);
        (lo as usize, hi.max(lo) as usize)
    }

    /// The same box with twice as many cells per axis.
    pub fn refined(&self) -> GridSpec {
        GridSpec {
            points_per_axis: self.points_per_axis * 2,
            ..*self
        }
    }

    /// The box scaled by `factor` with the same number of cells.
    pub fn scaled(&self, factor: f64) -> Result<GridSpec> {
        GridSpec::new(self.dim, self.half_width * factor, self.points_per_axis)
    }

    /// Largest distance from `centre` to any node of the grid.
    pub fn max_distance_from(&self, centre: &Point) -> f64 {
        let corner = self.coord(self.points_per_axis - 1);
        let mut sq = 0.0;
        for c in centre.iter().take(self.dim) {
            let far = (corner - c).abs().max((-corner - c).abs());
            sq += far * far;
        }
        sq.sqrt()
    }

    pub(crate) fn ensure_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(LabError::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// A complex-valued function sampled at the nodes of a grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    spec: GridSpec,
    values: Vec<Complex64>,
}

impl GridFunction {
    pub fn new(spec: GridSpec, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != spec.len() {
            return Err(LabError::LengthMismatch {
                expected: spec.len(),
                actual: values.len(),
            });
        }
        if let Some(index) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(LabError::NonFinite { index });
        }
        Ok(Self { spec, values })
    }

    pub fn from_real(spec: GridSpec, values: Vec<f64>) -> Result<Self> {
        Self::new(spec, values.into_iter().map(|v| Complex64::new(v, 0.0)).collect())
    }

    pub fn zeros(spec: GridSpec) -> Self {
        Self {
            spec,
            values: vec![Complex64::new(0.0, 0.0); spec.len()],
        }
    }

    /// Samples `f` at every node. Fails if any sample is not finite.
    pub fn from_fn(spec: GridSpec, f: impl Fn(&Point) -> Complex64) -> Result<Self> {
        Self::new(spec, spec.nodes().map(|p| f(&p)).collect())
    }

    /// Builds a grid function without re-validating samples; callers must
    /// only pass values derived from finite data.
    pub(crate) fn from_parts(spec: GridSpec, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), spec.len());
        Self { spec, values }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn value(&self, flat: usize) -> Complex64 {
        self.values[flat]
    }

    /// Pointwise modulus.
    pub fn moduli(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn modulus(&self) -> GridFunction {
        self.map(|v| Complex64::new(v.norm(), 0.0))
    }

    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> GridFunction {
        GridFunction::from_parts(self.spec, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn map_indexed(&self, f: impl Fn(usize, Complex64) -> Complex64) -> GridFunction {
        GridFunction::from_parts(
            self.spec,
            self.values.iter().enumerate().map(|(i, &v)| f(i, v)).collect(),
        )
    }

    pub fn zip_with(
        &self,
        other: &GridFunction,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<GridFunction> {
        self.spec.ensure_same(&other.spec)?;
        Ok(GridFunction::from_parts(
            self.spec,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn mul(&self, other: &GridFunction) -> Result<GridFunction> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scale(&self, c: Complex64) -> GridFunction {
        self.map(|v| v * c)
    }

    pub fn scale_real(&self, c: f64) -> GridFunction {
        self.map(|v| v * c)
    }

    pub fn max_modulus(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }

    /// Nodes carrying a nonzero sample.
    pub fn support_mask(&self) -> Vec<bool> {
        self.values.iter().map(|v| v.re != 0.0 || v.im != 0.0).collect()
    }

    /// Zeroes every sample whose node fails `keep`.
    pub fn restrict(&self, keep: impl Fn(&Point) -> bool) -> GridFunction {
        self.map_indexed(|i, v| {
            if keep(&self.spec.node(i)) {
                v
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Shifts samples by whole nodes: the result at node `i` is the input at
    /// node `i - shift`, zero where that falls outside the grid.
    pub fn translate_nodes(&self, shift: [i64; 2]) -> GridFunction {
        let n = self.spec.points_per_axis as i64;
        let dim = self.spec.dim;
        let mut out = vec![Complex64::new(0.0, 0.0); self.spec.len()];
        for (flat, slot) in out.iter_mut().enumerate() {
            let m = self.spec.multi_index(flat);
            let mut src = [0usize; 2];
            let mut inside = true;
            for axis in 0..dim {
                let s = m[axis] as i64 - shift[axis];
                if s < 0 || s >= n {
                    inside = false;
                    break;
                }
                src[axis] = s as usize;
            }
            if inside {
                *slot = self.values[self.spec.flat_index(src)];
            }
        }
        GridFunction::from_parts(self.spec, out)
    }

    /// Multilinear interpolation between nodes; zero outside the node hull.
    pub fn interpolate(&self, coords: &[f64]) -> Result<Complex64> {
        let p = to_point(coords, self.spec.dim)?;
        let h = self.spec.spacing();
        let n = self.spec.points_per_axis;
        let mut base = [0usize; 2];
        let mut frac = [0.0; 2];
        for axis in 0..self.spec.dim {
            let t = (p[axis] + self.spec.half_width) / h - 0.5;
            if t < 0.0 || t > (n - 1) as f64 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let i = (t.floor() as usize).min(n - 2);
            base[axis] = i;
            frac[axis] = t - i as f64;
        }
        let corners = 1usize << self.spec.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for corner in 0..corners {
            let mut idx = [0usize; 2];
            let mut w = 1.0;
            for axis in 0..self.spec.dim {
                let bit = (corner >> axis) & 1;
                idx[axis] = base[axis] + bit;
                w *= if bit == 1 { frac[axis] } else { 1.0 - frac[axis] };
            }
            acc += self.values[self.spec.flat_index(idx)] * w;
        }
        Ok(acc)
    }

    /// Midpoint-rule integral of the samples.
    pub fn integral(&self) -> Complex64 {
        self.values.iter().sum::<Complex64>() * self.spec.cell_volume()
    }
}

/// A finite sequence of grid functions sharing one grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridFunctionSeq {
    spec: GridSpec,
    members: Vec<GridFunction>,
}

impl GridFunctionSeq {
    pub fn new(spec: GridSpec, members: Vec<GridFunction>) -> Result<Self> {
        for m in &members {
            spec.ensure_same(m.spec())?;
        }
        Ok(Self { spec, members })
    }

    pub fn singleton(f: GridFunction) -> Self {
        Self {
            spec: *f.spec(),
            members: vec![f],
        }
    }

    pub fn spec(&self) -> &GridSpec {
        &self.spec
    }

    pub fn members(&self) -> &[GridFunction] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// The sequence extended by zero functions up to `len` members.
    pub fn padded(&self, len: usize) -> GridFunctionSeq {
        let mut members = self.members.clone();
        while members.len() < len {
            members.push(GridFunction::zeros(self.spec));
        }
        GridFunctionSeq {
            spec: self.spec,
            members,
        }
    }
}

/// `(Σ_j |f_j(x)|^q)^{1/q}` at every node, for finite `q ≥ 1`.
pub fn pointwise_lq(seq: &GridFunctionSeq, q: f64) -> Result<GridFunction> {
    if seq.is_empty() {
        return Err(LabError::InvalidParams(
            "pointwise ℓ_q of an empty sequence".into(),
        ));
    }
    if !(q.is_finite() && q >= 1.0) {
        return Err(LabError::InvalidParams(format!(
            "ℓ_q exponent must be finite and >= 1, got {q}"
        )));
    }
    let spec = *seq.spec();
    let values = (0..spec.len())
        .map(|i| {
            let largest = seq
                .members()
                .iter()
                .map(|f| f.values[i].norm())
                .fold(0.0, f64::max);
            if largest == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            let s: f64 = seq
                .members()
                .iter()
                .map(|f| (f.values[i].norm() / largest).powf(q))
                .sum();
            Complex64::new(largest * s.powf(1.0 / q), 0.0)
        })
        .collect();
    Ok(GridFunction::from_parts(spec, values))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(l: f64, n: usize) -> GridSpec {
        GridSpec::new(1, l, n).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, 1.0, 8).is_err());
        assert!(GridSpec::new(1, 0.0, 8).is_err());
        assert!(GridSpec::new(1, 1.0, 12).is_err());
        assert!(GridSpec::new(1, 1.0, 1).is_err());
        assert!(GridSpec::new(2, 1.0, 2).is_ok());
    }

    #[test]
    fn nodes_are_cell_centres() {
        let g = line(4.0, 8);
        assert_eq!(g.spacing(), 1.0);
        let xs: Vec<f64> = g.nodes().map(|p| p[0]).collect();
        assert_eq!(xs, vec![-3.5, -2.5, -1.5, -0.5, 0.5, 1.5, 2.5, 3.5]);
    }

    #[test]
    fn axis_ranges() {
        let g = line(4.0, 8);
        assert_eq!(g.axis_range_closed(-1.0, 1.0), Some((3, 4)));
        assert_eq!(g.axis_range_closed(1.0, 1.4), None);
        assert_eq!(g.axis_range_half_open(-4.0, 0.0), (0, 4));
        assert_eq!(g.axis_range_half_open(0.0, 4.0), (4, 8));
        assert_eq!(g.axis_range_half_open(10.0, 12.0), (8, 8));
    }

    #[test]
    fn two_dimensional_indexing_round_trips() {
        let g = GridSpec::new(2, 1.0, 4).unwrap();
        for flat in 0..g.len() {
            assert_eq!(g.flat_index(g.multi_index(flat)), flat);
        }
        assert_eq!(g.node(0), [-0.75, -0.75]);
        assert_eq!(g.node(1), [-0.75, -0.25]);
    }

    #[test]
    fn rejects_non_finite_samples() {
        let g = line(1.0, 4);
        let err = GridFunction::from_real(g, vec![0.0, f64::NAN, 0.0, 0.0]).unwrap_err();
        assert_eq!(err, LabError::NonFinite { index: 1 });
    }

    #[test]
    fn single_member_lq_is_modulus() {
        let g = line(2.0, 16);
        let f = GridFunction::from_fn(g, |p| Complex64::new(p[0], -2.0 * p[0])).unwrap();
        let out = pointwise_lq(&GridFunctionSeq::singleton(f.clone()), 3.0).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a.re - b.norm()).abs() <= 1e-15 * b.norm().max(1.0));
            assert_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn doubled_member_lq2_is_sqrt2() {
        let g = line(2.0, 16);
        let f = GridFunction::from_fn(g, |p| Complex64::new(p[0].sin(), 0.0)).unwrap();
        let seq = GridFunctionSeq::new(g, vec![f.clone(), f.clone()]).unwrap();
        let out = pointwise_lq(&seq, 2.0).unwrap();
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a.re - 2f64.sqrt() * b.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn disjoint_indicators_combine() {
        let g = line(2.0, 16);
        let a = GridFunction::from_fn(g, |p| Complex64::new((p[0] < -0.5) as u8 as f64, 0.0)).unwrap();
        let b = GridFunction::from_fn(g, |p| Complex64::new((p[0] > 0.5) as u8 as f64, 0.0)).unwrap();
        let out = pointwise_lq(&GridFunctionSeq::new(g, vec![a, b]).unwrap(), 3.0).unwrap();
        for (i, v) in out.values().iter().enumerate() {
            let x = g.node(i)[0];
            let expect = if x.abs() > 0.5 { 1.0 } else { 0.0 };
            assert_eq!(v.re, expect);
        }
    }

    #[test]
    fn empty_sequence_rejected() {
        let g = line(1.0, 4);
        assert!(pointwise_lq(&GridFunctionSeq::new(g, vec![]).unwrap(), 2.0).is_err());
    }

    #[test]
    fn interpolation_reproduces_linear_functions() {
        let g = GridSpec::new(2, 2.0, 16).unwrap();
        let f = GridFunction::from_fn(g, |p| Complex64::new(1.0 + 2.0 * p[0] - p[1], 0.0)).unwrap();
        let v = f.interpolate(&[0.3, -0.7]).unwrap();
        assert!((v.re - (1.0 + 0.6 + 0.7)).abs() < 1e-12);
    }

    #[test]
    fn translation_by_nodes_shifts_support() {
        let g = line(4.0, 8);
        let f = GridFunction::from_real(g, (0..8).map(|i| i as f64).collect()).unwrap();
        let t = f.translate_nodes([2, 0]);
        let re: Vec<f64> = t.values().iter().map(|v| v.re).collect();
        assert_eq!(re, vec![0.0, 0.0, 0.0, 1.0, 2.0, 3.0, 4.0, 5.0]);
    }
}
