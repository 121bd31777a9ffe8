use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{GridSpec, Point};
use crate::error::{LabError, Result};

/// Default guard against runaway cube enumerations.
pub const DEFAULT_CUBE_CAP: usize = 4_000_000;

#[derive(Serialize, Deserialize)]
struct RawCube {
    #[serde(rename = "J")]
    level: i32,
    #[serde(rename = "M")]
    offset: Vec<i64>,
}

/// The cube `Q_{J,M} = 2^{-J}(M + [-1, 1]^n)`.
///
/// Cubes of one level overlap their neighbours by half; the family with
/// offsets of a fixed parity along every axis tiles space.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawCube", into = "RawCube")]
pub struct DyadicCube {
    level: i32,
    offset: [i64; 2],
    dim: usize,
}

impl TryFrom<RawCube> for DyadicCube {
    type Error = LabError;

    fn try_from(raw: RawCube) -> Result<Self> {
        DyadicCube::new(raw.level, &raw.offset)
    }
}

impl From<DyadicCube> for RawCube {
    fn from(c: DyadicCube) -> Self {
        RawCube {
            level: c.level,
            offset: c.offset().to_vec(),
        }
    }
}

impl DyadicCube {
    pub fn new(level: i32, offset: &[i64]) -> Result<Self> {
        if offset.is_empty() || offset.len() > 2 {
            return Err(LabError::InvalidParams(format!(
                "cube offset must have 1 or 2 components, got {}",
                offset.len()
            )));
        }
        let mut m = [0i64; 2];
        m[..offset.len()].copy_from_slice(offset);
        Ok(Self {
            level,
            offset: m,
            dim: offset.len(),
        })
    }

    pub(crate) fn from_array(level: i32, offset: [i64; 2], dim: usize) -> Self {
        Self { level, offset, dim }
    }

    pub fn level(&self) -> i32 {
        self.level
    }

    pub fn offset(&self) -> &[i64] {
        &self.offset[..self.dim]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `2^{-J}`, exact for every representable level.
    pub fn half_width(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn side(&self) -> f64 {
        2.0 * self.half_width()
    }

    /// `2^{n(1-J)}`.
    pub fn volume(&self) -> f64 {
        self.side().powi(self.dim as i32)
    }

    pub fn center(&self) -> Point {
        let mut c = [0.0; 2];
        for (axis, slot) in c.iter_mut().enumerate().take(self.dim) {
            *slot = self.offset[axis] as f64 * self.half_width();
        }
        c
    }

    /// Closed extent `[lo, hi]` along `axis`.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        let w = self.half_width();
        let m = self.offset[axis] as f64;
        ((m - 1.0) * w, (m + 1.0) * w)
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..self.dim).all(|axis| {
            let (lo, hi) = self.bounds(axis);
            lo <= p[axis] && p[axis] <= hi
        })
    }

    /// `2^{J·exponent}`; with `exponent = n/p + r` this is the Morrey scale weight.
    pub fn scale_weight(&self, exponent: f64) -> f64 {
        2f64.powf(self.level as f64 * exponent)
    }

    /// The measure density `2^{J(n + p r)}` of the `c_0`-embedding of `L^r_p`.
    pub fn mu_weight(&self, p: f64, r: f64) -> f64 {
        self.scale_weight(self.dim as f64 + p * r)
    }

    /// The `2^n` non-overlapping half-size subcubes. Their offsets are
    /// `2M ± 1` along each axis.
    pub fn children(&self) -> Vec<DyadicCube> {
        let count = 1usize << self.dim;
        (0..count)
            .map(|mask| {
                let mut m = [0i64; 2];
                for (axis, slot) in m.iter_mut().enumerate().take(self.dim) {
                    let sign = if (mask >> (self.dim - 1 - axis)) & 1 == 1 { 1 } else { -1 };
                    *slot = 2 * self.offset[axis] + sign;
                }
                DyadicCube::from_array(self.level + 1, m, self.dim)
            })
            .collect()
    }
}

/// An inclusive range of cube levels `[min, max]`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRange {
    pub min: i32,
    pub max: i32,
}

impl LevelRange {
    pub fn new(min: i32, max: i32) -> Result<Self> {
        if min > max {
            return Err(LabError::EmptyLevelRange { min, max });
        }
        Ok(Self { min, max })
    }

    /// Levels from a cube that covers the whole box down to cubes of side
    /// at least `2h`.
    pub fn default_for(spec: &GridSpec) -> Self {
        let min = -(spec.half_width().log2().ceil() as i32) - 1;
        let max = (1.0 / spec.spacing()).log2().floor() as i32;
        Self {
            min,
            max: max.max(min),
        }
    }

    pub fn levels(&self) -> impl Iterator<Item = i32> {
        self.min..=self.max
    }

    pub fn shifted(&self, by: i32) -> Self {
        Self {
            min: self.min + by,
            max: self.max + by,
        }
    }
}

fn offset_bounds(spec: &GridSpec, level: i32) -> (i64, i64) {
    let scaled = spec.half_width() * 2f64.powi(level);
    ((-scaled - 1.0).ceil() as i64, (scaled + 1.0).floor() as i64)
}

/// Every cube with level in `range` whose closure meets `[-L, L]^n`.
pub fn cubes_touching(spec: &GridSpec, range: LevelRange, cap: usize) -> Result<Vec<DyadicCube>> {
    if range.min > range.max {
        return Err(LabError::EmptyLevelRange {
            min: range.min,
            max: range.max,
        });
    }
    let mut total: u128 = 0;
    for level in range.levels() {
        let (lo, hi) = offset_bounds(spec, level);
        total += ((hi - lo + 1) as u128).pow(spec.dim() as u32);
    }
    if total > cap as u128 {
        return Err(LabError::TooManyCubes { count: total, cap });
    }
    let mut cubes = Vec::with_capacity(total as usize);
    for level in range.levels() {
        let (lo, hi) = offset_bounds(spec, level);
        if spec.dim() == 1 {
            cubes.extend((lo..=hi).map(|m| DyadicCube::from_array(level, [m, 0], 1)));
        } else {
            for m0 in lo..=hi {
                cubes.extend((lo..=hi).map(|m1| DyadicCube::from_array(level, [m0, m1], 2)));
            }
        }
    }
    Ok(cubes)
}

/// Sums of `weights` (one per node) over every cube of `level` that meets the
/// box, paired with the cube. A node belongs to a cube when its cell centre
/// does; cube sums are assembled from the `2^n` aligned half-width cells of
/// the level, so no prefix-sum cancellation enters.
pub fn level_cube_sums(spec: &GridSpec, weights: &[f64], level: i32) -> Vec<(DyadicCube, f64)> {
    debug_assert_eq!(weights.len(), spec.len());
    let scale = 2f64.powi(level);
    let dim = spec.dim();
    let mut buckets: HashMap<[i64; 2], f64> = HashMap::new();
    for (flat, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let p = spec.node(flat);
        let mut key = [0i64; 2];
        for axis in 0..dim {
            key[axis] = (p[axis] * scale).floor() as i64;
        }
        *buckets.entry(key).or_insert(0.0) += w;
    }
    let (lo, hi) = offset_bounds(spec, level);
    let bucket = |k: [i64; 2]| buckets.get(&k).copied().unwrap_or(0.0);
    let mut out = Vec::new();
    if dim == 1 {
        for m in lo..=hi {
            let s = bucket([m - 1, 0]) + bucket([m, 0]);
            out.push((DyadicCube::from_array(level, [m, 0], 1), s));
        }
    } else {
        for m0 in lo..=hi {
            for m1 in lo..=hi {
                let s = bucket([m0 - 1, m1 - 1])
                    + bucket([m0 - 1, m1])
                    + bucket([m0, m1 - 1])
                    + bucket([m0, m1]);
                out.push((DyadicCube::from_array(level, [m0, m1], 2), s));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometry_is_exact() {
        let q = DyadicCube::new(2, &[3, -1]).unwrap();
        assert_eq!(q.half_width(), 0.25);
        assert_eq!(q.side(), 0.5);
        assert_eq!(q.volume(), 0.25);
        assert_eq!(q.center(), [0.75, -0.25]);
        assert_eq!(q.bounds(0), (0.5, 1.0));
        let coarse = DyadicCube::new(-3, &[1]).unwrap();
        assert_eq!(coarse.volume(), 16.0);
        // 2^{J(n + p r)} with J = 2, n = 2, p = 2, r = -1/2: 2^{2·1} = 4
        assert_eq!(q.mu_weight(2.0, -0.5), 4.0);
    }

    #[test]
    fn children_tile_parent() {
        let q = DyadicCube::new(0, &[0]).unwrap();
        let kids = q.children();
        assert_eq!(kids.len(), 2);
        assert_eq!(kids[0].bounds(0), (-1.0, 0.0));
        assert_eq!(kids[1].bounds(0), (0.0, 1.0));
        let q2 = DyadicCube::new(1, &[1, -1]).unwrap();
        let kids2 = q2.children();
        assert_eq!(kids2.len(), 4);
        let vol: f64 = kids2.iter().map(|c| c.volume()).sum();
        assert_eq!(vol, q2.volume());
    }

    #[test]
    fn adjacent_cubes_overlap() {
        let a = DyadicCube::new(1, &[0]).unwrap();
        let b = DyadicCube::new(1, &[1]).unwrap();
        let overlap = a.bounds(0).1.min(b.bounds(0).1) - a.bounds(0).0.max(b.bounds(0).0);
        assert!(overlap > 0.0);
    }

    #[test]
    fn touching_cubes_unit_box() {
        let spec = GridSpec::new(1, 1.0, 8).unwrap();
        let level0 = cubes_touching(&spec, LevelRange::new(0, 0).unwrap(), DEFAULT_CUBE_CAP).unwrap();
        let m0: Vec<i64> = level0.iter().map(|c| c.offset()[0]).collect();
        assert_eq!(m0, vec![-2, -1, 0, 1, 2]);
        let level1 = cubes_touching(&spec, LevelRange::new(1, 1).unwrap(), DEFAULT_CUBE_CAP).unwrap();
        let m1: Vec<i64> = level1.iter().map(|c| c.offset()[0]).collect();
        assert_eq!(m1, (-3..=3).collect::<Vec<_>>());
    }

    #[test]
    fn empty_range_and_cap() {
        let spec = GridSpec::new(2, 1.0, 8).unwrap();
        assert!(LevelRange::new(2, 1).is_err());
        assert!(cubes_touching(&spec, LevelRange { min: 3, max: 1 }, 100).is_err());
        let err = cubes_touching(&spec, LevelRange::new(0, 8).unwrap(), 100).unwrap_err();
        assert!(matches!(err, LabError::TooManyCubes { .. }));
    }

    #[test]
    fn default_range_covers_box_and_resolves_two_cells() {
        let spec = GridSpec::new(1, 8.0, 1024).unwrap();
        let r = LevelRange::default_for(&spec);
        assert_eq!(r, LevelRange { min: -4, max: 6 });
        let top = DyadicCube::new(r.min, &[0]).unwrap();
        assert!(top.half_width() >= 2.0 * spec.half_width());
        let bottom = DyadicCube::new(r.max, &[0]).unwrap();
        assert!(bottom.side() >= 2.0 * spec.spacing());
    }

    #[test]
    fn level_sums_match_direct_cell_counts() {
        let spec = GridSpec::new(2, 2.0, 16).unwrap();
        let ones = vec![1.0; spec.len()];
        for (cube, s) in level_cube_sums(&spec, &ones, 1) {
            let direct = spec.nodes().filter(|p| cube.contains(p)).count() as f64;
            assert_eq!(s, direct, "{cube:?}");
        }
    }

    #[test]
    fn serde_uses_j_and_m() {
        let q = DyadicCube::new(-1, &[2, 3]).unwrap();
        let s = serde_json::to_string(&q).unwrap();
        assert_eq!(s, r#"{"J":-1,"M":[2,3]}"#);
        let back: DyadicCube = serde_json::from_str(&s).unwrap();
        assert_eq!(back, q);
    }
}
