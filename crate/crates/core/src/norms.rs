//! Lebesgue, Morrey (dyadic and ball forms), weighted and vector-valued norms.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{
    level_cube_sums, point_norm, pointwise_lq, DyadicCube, GridFunction, GridFunctionSeq, GridSpec,
    LevelRange, Point,
};
use crate::spectral::PaddedSpectrum;

/// Exponent and shape of a Morrey space: `1 < p < ∞`, `-n/p ≤ r < 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMorrey")]
pub struct MorreyParams {
    p: f64,
    r: f64,
}

#[derive(Deserialize)]
struct RawMorrey {
    p: f64,
    r: f64,
}

impl TryFrom<RawMorrey> for MorreyParams {
    type Error = LabError;
    fn try_from(raw: RawMorrey) -> Result<Self> {
        Self::new(raw.p, raw.r)
    }
}

const SHAPE_SLACK: f64 = 1e-12;

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p > 1.0) {
        return Err(LabError::InvalidParams(format!("exponent p = {p} must satisfy 1 < p < ∞")));
    }
    Ok(())
}

impl MorreyParams {
    /// Checks `p` and the sign of `r`; the lower bound on `r` depends on the
    /// dimension and is checked by [`MorreyParams::check_dim`].
    pub fn new(p: f64, r: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(r.is_finite() && r < 0.0) {
            return Err(LabError::InvalidParams(format!("shape r = {r} must be negative")));
        }
        Ok(Self { p, r })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn conjugate_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `n/p + r`, the exponent of the scale weight.
    pub fn scale_exponent(&self, dim: usize) -> f64 {
        dim as f64 / self.p + self.r
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        let floor = -(dim as f64) / self.p;
        if self.r < floor - SHAPE_SLACK {
            return Err(LabError::InvalidParams(format!(
                "shape r = {} is below -n/p = {floor} for n = {dim}",
                self.r
            )));
        }
        Ok(())
    }
}

/// Exponent and shape of the atomic predual space: `1 < p < ∞`, `-n < ϱ < -n/p`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawPredual")]
pub struct PredualParams {
    p: f64,
    rho: f64,
}

#[derive(Deserialize)]
struct RawPredual {
    p: f64,
    rho: f64,
}

impl TryFrom<RawPredual> for PredualParams {
    type Error = LabError;
    fn try_from(raw: RawPredual) -> Result<Self> {
        Self::new(raw.p, raw.rho)
    }
}

impl PredualParams {
    pub fn new(p: f64, rho: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(rho.is_finite() && rho < 0.0) {
            return Err(LabError::InvalidParams(format!("shape rho = {rho} must be negative")));
        }
        Ok(Self { p, rho })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn conjugate_exponent(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `n/p + ϱ`; atoms on `Q_{J,M}` cost `2^{J(n/p+ϱ)} ‖·‖_{L_p}`.
    pub fn scale_exponent(&self, dim: usize) -> f64 {
        dim as f64 / self.p + self.rho
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        let n = dim as f64;
        if !(self.rho > -n && self.rho < -n / self.p) {
            return Err(LabError::InvalidParams(format!(
                "shape rho = {} outside (-n, -n/p) = ({}, {}) for n = {dim}",
                self.rho,
                -n,
                -n / self.p
            )));
        }
        Ok(())
    }

    /// The Morrey space paired with this one: exponent `p'`, shape `-n - ϱ`.
    pub fn paired_morrey(&self, dim: usize) -> Result<MorreyParams> {
        self.check_dim(dim)?;
        let m = MorreyParams::new(self.conjugate_exponent(), -(dim as f64) - self.rho)?;
        m.check_dim(dim)?;
        Ok(m)
    }
}

/// Power weight `w_α(x) = (1 + |x|²)^{α/2}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightParams {
    pub alpha: f64,
}

impl WeightParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(LabError::InvalidParams(format!("weight exponent {alpha} is not finite")));
        }
        Ok(Self { alpha })
    }

    pub fn weight(&self, x: &Point, dim: usize) -> f64 {
        let r = point_norm(x, dim);
        (1.0 + r * r).powf(self.alpha / 2.0)
    }
}

/// Integration region for [`lp_norm`]. Balls are open and cubes closed; a
/// cell counts when its centre lies inside.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region {
    Cube(DyadicCube),
    Ball { centre: Point, radius: f64 },
}

impl Region {
    pub fn contains(&self, x: &Point, dim: usize) -> bool {
        match self {
            Region::Cube(c) => c.contains(x),
            Region::Ball { centre, radius } => {
                let d = [x[0] - centre[0], x[1] - centre[1]];
                point_norm(&d, dim) < *radius
            }
        }
    }
}

fn check_lebesgue_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(LabError::InvalidParams(format!("exponent p = {p} must satisfy 1 ≤ p < ∞")));
    }
    Ok(())
}

/// Midpoint-rule value of `(∫_region |f|^p)^{1/p}`, over the whole box when
/// `region` is `None`.
pub fn lp_norm(f: &GridFunction, p: f64, region: Option<&Region>) -> Result<f64> {
    check_lebesgue_exponent(p)?;
    let spec = f.spec();
    let dim = spec.dim();
    let mods: Vec<f64> = f
        .values()
        .iter()
        .enumerate()
        .filter(|(i, _)| region.is_none_or(|reg| reg.contains(&spec.node(*i), dim)))
        .map(|(_, v)| v.norm())
        .collect();
    Ok(scaled_power_mean(&mods, p, spec.cell_volume()))
}

/// `(Σ |v|^p · vol)^{1/p}` with the largest entry factored out.
fn scaled_power_mean(mods: &[f64], p: f64, vol: f64) -> f64 {
    let top = mods.iter().copied().fold(0.0, f64::max);
    if top == 0.0 {
        return 0.0;
    }
    let s: f64 = mods.iter().map(|m| (m / top).powf(p)).sum();
    top * (s * vol).powf(1.0 / p)
}

/// `|f|^p h^n` at every node.
pub(crate) fn power_masses(f: &GridFunction, p: f64) -> Vec<f64> {
    let vol = f.spec().cell_volume();
    f.values().iter().map(|v| v.norm().powf(p) * vol).collect()
}

/// A Morrey norm value together with the cube attaining it.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DyadicNorm {
    pub value: f64,
    pub argmax: Option<DyadicCube>,
}

/// `sup_{J,M} 2^{J(n/p+r)} ‖f‖_{L_p(Q_{J,M})}` over the levels in `range`
/// (the grid default when `None`).
pub fn morrey_norm_dyadic(
    f: &GridFunction,
    params: &MorreyParams,
    range: Option<LevelRange>,
) -> Result<DyadicNorm> {
    let spec = f.spec();
    params.check_dim(spec.dim())?;
    let range = resolve_range(spec, range)?;
    let masses = power_masses(f, params.p());
    Ok(dyadic_sup(spec, &masses, params.p(), params.scale_exponent(spec.dim()), range))
}

pub(crate) fn resolve_range(spec: &GridSpec, range: Option<LevelRange>) -> Result<LevelRange> {
    match range {
        None => Ok(LevelRange::default_for(spec)),
        Some(r) => LevelRange::new(r.min, r.max),
    }
}

/// Supremum of `2^{J·exponent} (Σ_Q masses)^{1/p}` over cubes at the given levels.
pub(crate) fn dyadic_sup(
    spec: &GridSpec,
    masses: &[f64],
    p: f64,
    exponent: f64,
    range: LevelRange,
) -> DyadicNorm {
    let levels: Vec<i32> = range.levels().collect();
    let per_level: Vec<DyadicNorm> = levels
        .par_iter()
        .map(|&level| {
            let mut best = DyadicNorm {
                value: 0.0,
                argmax: None,
            };
            for (cube, s) in level_cube_sums(spec, masses, level) {
                if s <= 0.0 {
                    continue;
                }
                let v = cube.scale_weight(exponent) * s.powf(1.0 / p);
                if v > best.value {
                    best = DyadicNorm {
                        value: v,
                        argmax: Some(cube),
                    };
                }
            }
            best
        })
        .collect();
    per_level.into_iter().fold(
        DyadicNorm {
            value: 0.0,
            argmax: None,
        },
        |acc, x| if x.value > acc.value { x } else { acc },
    )
}

/// Candidate balls for [`morrey_norm_ball`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallCandidates {
    /// Centres are the nodes whose multi-index is divisible by this stride.
    pub center_stride: usize,
    pub radii: Vec<f64>,
}

impl BallCandidates {
    /// Centres on every fourth node, radii `2^{k/2} h` up to `2L`.
    pub fn default_for(spec: &GridSpec) -> Self {
        let h = spec.spacing();
        let top = 2.0 * spec.half_width();
        let mut radii = Vec::new();
        let mut k = 0;
        loop {
            let r = h * 2f64.powf(k as f64 / 2.0);
            if r > top * (1.0 + 1e-12) {
                break;
            }
            radii.push(r);
            k += 1;
        }
        Self {
            center_stride: 4,
            radii,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.center_stride == 0 {
            return Err(LabError::EmptyCandidates("centre stride is zero".into()));
        }
        if self.radii.is_empty() {
            return Err(LabError::EmptyCandidates("no radii".into()));
        }
        if let Some(r) = self.radii.iter().find(|r| !(r.is_finite() && **r > 0.0)) {
            return Err(LabError::DegenerateRadius(format!("radius {r}")));
        }
        Ok(())
    }
}

/// A ball-form Morrey norm with its maximising ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallNorm {
    pub value: f64,
    pub centre: Option<Point>,
    pub radius: Option<f64>,
}

/// Open-ball sums `Σ_{|x_j - x_i| < R} masses_j` at every node.
pub(crate) fn ball_sums(spec: &GridSpec, masses: &[f64], radius: f64) -> Vec<f64> {
    let h = spec.spacing();
    if spec.dim() == 1 {
        let n = spec.points_per_axis();
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + masses[i];
        }
        // |j - i| h < R  <=>  |j - i| <= reach
        let reach = ((radius / h).ceil() as i64 - 1).max(0) as usize;
        (0..n)
            .map(|i| {
                let lo = i.saturating_sub(reach);
                let hi = (i + reach + 1).min(n);
                (prefix[hi] - prefix[lo]).max(0.0)
            })
            .collect()
    } else {
        let spectrum = PaddedSpectrum::from_real(spec, masses);
        ball_sums_2d(&spectrum, radius)
    }
}

pub(crate) fn ball_sums_2d(spectrum: &PaddedSpectrum, radius: f64) -> Vec<f64> {
    let r2 = radius * radius;
    spectrum
        .convolve(|d| {
            let one = if d[0] * d[0] + d[1] * d[1] < r2 * (1.0 - 1e-12) { 1.0 } else { 0.0 };
            num_complex::Complex64::new(one, 0.0)
        })
        .into_iter()
        .map(|v| v.re.max(0.0))
        .collect()
}

/// `sup R^{-(n/p+r)} ‖f‖_{L_p(B_R(x))}` over the candidate centres and radii.
pub fn morrey_norm_ball(
    f: &GridFunction,
    params: &MorreyParams,
    candidates: &BallCandidates,
) -> Result<BallNorm> {
    let spec = *f.spec();
    params.check_dim(spec.dim())?;
    candidates.validate()?;
    let masses = power_masses(f, params.p());
    let exponent = params.scale_exponent(spec.dim());
    let stride = candidates.center_stride;
    let is_centre = |flat: usize| {
        let m = spec.multi_index(flat);
        (0..spec.dim()).all(|a| m[a].is_multiple_of(stride))
    };
    let spectrum = (spec.dim() == 2).then(|| PaddedSpectrum::from_real(&spec, &masses));
    let per_radius: Vec<BallNorm> = candidates
        .radii
        .par_iter()
        .map(|&radius| {
            let sums = match &spectrum {
                Some(s) => ball_sums_2d(s, radius),
                None => ball_sums(&spec, &masses, radius),
            };
            let w = radius.powf(-exponent);
            let mut best = BallNorm {
                value: 0.0,
                centre: None,
                radius: None,
            };
            for (flat, s) in sums.iter().enumerate() {
                if *s <= 0.0 || !is_centre(flat) {
                    continue;
                }
                let v = w * s.powf(1.0 / params.p());
                if v > best.value {
                    best = BallNorm {
                        value: v,
                        centre: Some(spec.node(flat)),
                        radius: Some(radius),
                    };
                }
            }
            best
        })
        .collect();
    Ok(per_radius.into_iter().fold(
        BallNorm {
            value: 0.0,
            centre: None,
            radius: None,
        },
        |acc, x| if x.value > acc.value { x } else { acc },
    ))
}

/// Dyadic Morrey norm of the pointwise `ℓ_q` norm of a sequence.
pub fn morrey_norm_vector(
    seq: &GridFunctionSeq,
    params: &MorreyParams,
    q: f64,
    range: Option<LevelRange>,
) -> Result<DyadicNorm> {
    let combined = pointwise_lq(seq, q)?;
    morrey_norm_dyadic(&combined, params, range)
}

/// `‖w_α f‖_{L_p}`.
pub fn weighted_norm(f: &GridFunction, p: f64, weight: &WeightParams) -> Result<f64> {
    check_lebesgue_exponent(p)?;
    let spec = *f.spec();
    let weighted = f.map_indexed(|i, v| v * weight.weight(&spec.node(i), spec.dim()));
    lp_norm(&weighted, p, None)
}

/// The three norms of the chain `L_u → L^r_p → L_p(w_α)` with `u = -n/r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingReport {
    pub lebesgue_exponent: f64,
    pub lebesgue: f64,
    pub morrey: f64,
    pub weighted: f64,
    /// `‖f‖_{L^r_p} / ‖f‖_{L_u}`; zero when `f = 0`.
    pub morrey_over_lebesgue: f64,
    /// `‖f‖_{L_p(w_α)} / ‖f‖_{L^r_p}`; zero when `f = 0`.
    pub weighted_over_morrey: f64,
    /// Set when a ratio exceeds the supplied slack.
    pub violation: bool,
}

/// Evaluates the embedding chain for `f`. The weight exponent must satisfy
/// `-n < αp < -n - rp`.
pub fn check_embedding_chain(
    f: &GridFunction,
    params: &MorreyParams,
    alpha: f64,
    slack: f64,
) -> Result<EmbeddingReport> {
    let dim = f.spec().dim();
    params.check_dim(dim)?;
    let n = dim as f64;
    let ap = alpha * params.p();
    let upper = -n - params.r() * params.p();
    if !(ap > -n && ap < upper) {
        return Err(LabError::InvalidParams(format!(
            "weight exponent α p = {ap} outside ({}, {upper})",
            -n
        )));
    }
    let u = -n / params.r();
    let lebesgue = lp_norm(f, u, None)?;
    let morrey = morrey_norm_dyadic(f, params, None)?.value;
    let weighted = weighted_norm(f, params.p(), &WeightParams::new(alpha)?)?;
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };
    let morrey_over_lebesgue = ratio(morrey, lebesgue);
    let weighted_over_morrey = ratio(weighted, morrey);
    Ok(EmbeddingReport {
        lebesgue_exponent: u,
        lebesgue,
        morrey,
        weighted,
        morrey_over_lebesgue,
        weighted_over_morrey,
        violation: morrey_over_lebesgue > slack || weighted_over_morrey > slack,
    })
}

/// A serialisable norm evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub norm_kind: String,
    pub params: serde_json::Value,
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub argmax_cube: Option<DyadicCube>,
    pub resolution: usize,
}

impl NormReport {
    pub fn new(
        kind: &str,
        params: serde_json::Value,
        value: f64,
        argmax_cube: Option<DyadicCube>,
        spec: &GridSpec,
    ) -> Self {
        Self {
            norm_kind: kind.to_string(),
            params,
            value,
            argmax_cube,
            resolution: spec.points_per_axis(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FunctionExpr;

    fn line(n: usize, l: f64) -> GridSpec {
        GridSpec::new(1, l, n).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(MorreyParams::new(1.0, -0.1).is_err());
        assert!(MorreyParams::new(2.0, 0.0).is_err());
        let m = MorreyParams::new(2.0, -0.6).unwrap();
        assert!(m.check_dim(1).is_err());
        assert!(m.check_dim(2).is_ok());
        let d = PredualParams::new(2.0, -0.75).unwrap();
        let paired = d.paired_morrey(1).unwrap();
        assert_eq!(paired.p(), 2.0);
        assert_eq!(paired.r(), -0.25);
        assert!(PredualParams::new(2.0, -0.25).unwrap().check_dim(1).is_err());
        assert!(serde_json::from_str::<MorreyParams>(r#"{"p":0.5,"r":-0.1}"#).is_err());
    }

    #[test]
    fn lp_of_indicator_and_ball_overlap() {
        let spec = line(1024, 8.0);
        let f = GridFunction::sample(&FunctionExpr::chi(-1.0, 1.0), &spec).unwrap();
        assert!((lp_norm(&f, 2.0, None).unwrap() - 2f64.sqrt()).abs() < 1e-12);
        let ball = Region::Ball {
            centre: [2.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(lp_norm(&f, 2.0, Some(&ball)).unwrap(), 0.0);
        assert_eq!(lp_norm(&GridFunction::zeros(spec), 3.0, None).unwrap(), 0.0);
    }

    #[test]
    fn weighted_closed_form() {
        let spec = line(1024, 8.0);
        let f = GridFunction::sample(&FunctionExpr::chi(0.0, 1.0), &spec).unwrap();
        let v = weighted_norm(&f, 1.0, &WeightParams::new(2.0).unwrap()).unwrap();
        assert!((v - 4.0 / 3.0).abs() / (4.0 / 3.0) < 1e-3);
        let plain = weighted_norm(&f, 2.0, &WeightParams::new(0.0).unwrap()).unwrap();
        assert!((plain - lp_norm(&f, 2.0, None).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn collapse_to_lebesgue() {
        let spec = line(1024, 8.0);
        let f = GridFunction::sample(&FunctionExpr::chi(-1.0, 1.0), &spec).unwrap();
        let params = MorreyParams::new(2.0, -0.5).unwrap();
        let d = morrey_norm_dyadic(&f, &params, None).unwrap();
        assert!((d.value - 2f64.sqrt()).abs() < 1e-12);
        let b = morrey_norm_ball(&f, &params, &BallCandidates::default_for(&spec)).unwrap();
        assert!((b.value - 2f64.sqrt()).abs() / 2f64.sqrt() < 0.02);
    }

    #[test]
    fn zero_function_norms() {
        let spec = line(64, 2.0);
        let z = GridFunction::zeros(spec);
        let params = MorreyParams::new(2.0, -0.25).unwrap();
        let d = morrey_norm_dyadic(&z, &params, None).unwrap();
        assert_eq!(d.value, 0.0);
        assert!(d.argmax.is_none());
        let b = morrey_norm_ball(&z, &params, &BallCandidates::default_for(&spec)).unwrap();
        assert_eq!(b.value, 0.0);
        let e = check_embedding_chain(&z, &params, -0.4, 10.0).unwrap();
        assert_eq!((e.lebesgue, e.morrey, e.weighted), (0.0, 0.0, 0.0));
    }

    #[test]
    fn embedding_window_enforced() {
        let spec = line(64, 2.0);
        let f = GridFunction::sample(&FunctionExpr::bump(0.0, 1.0), &spec).unwrap();
        let params = MorreyParams::new(2.0, -0.25).unwrap();
        // window: -1 < 2α < -0.5
        assert!(check_embedding_chain(&f, &params, -0.1, 10.0).is_err());
        assert!(check_embedding_chain(&f, &params, -0.6, 10.0).is_err());
        assert!(check_embedding_chain(&f, &params, -0.4, 10.0).is_ok());
    }

    #[test]
    fn ball_candidates_validated() {
        let spec = line(64, 2.0);
        let f = GridFunction::sample(&FunctionExpr::bump(0.0, 1.0), &spec).unwrap();
        let params = MorreyParams::new(2.0, -0.25).unwrap();
        let empty = BallCandidates {
            center_stride: 4,
            radii: vec![],
        };
        assert!(matches!(
            morrey_norm_ball(&f, &params, &empty),
            Err(LabError::EmptyCandidates(_))
        ));
    }

    #[test]
    fn disc_sums_match_direct_count() {
        let spec = GridSpec::new(2, 1.0, 16).unwrap();
        let masses: Vec<f64> = (0..spec.len()).map(|i| (i % 7) as f64).collect();
        let r = 0.31;
        let fast = ball_sums(&spec, &masses, r);
        for i in (0..spec.len()).step_by(37) {
            let xi = spec.node(i);
            let slow: f64 = (0..spec.len())
                .filter(|&j| {
                    let xj = spec.node(j);
                    ((xi[0] - xj[0]).powi(2) + (xi[1] - xj[1]).powi(2)).sqrt() < r
                })
                .map(|j| masses[j])
                .sum();
            assert!((fast[i] - slow).abs() < 1e-9, "{} vs {slow}", fast[i]);
        }
    }
}
