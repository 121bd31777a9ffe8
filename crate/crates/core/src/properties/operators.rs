use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{relative_gap, spread, Measurement};
use crate::decomp::far_field_decay;
use crate::error::{LabError, Result};
use crate::grid::{point_norm, FunctionExpr, GridFunction, GridFunctionSeq, GridSpec};
use crate::norms::{lp_norm, morrey_norm_dyadic, MorreyParams, Region};
use crate::operators::{
    apply_multiplier, cz_truncated, eps_ladder, kernel_domination_constant, maximal_hl,
    principal_value_at, square_kernel_constant, BochnerRieszKernel, CotlarFields,
    HomogeneousKernelSpec, LpProfile, MultiplierSpec, Omega, OperatorSpec, StandardKernelSpec,
};
use crate::spectral::apply_symbol;

/// Norm in which boundedness ratios are measured.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NormSpace {
    Lebesgue { p: f64 },
    Morrey { p: f64, r: f64 },
}

impl From<MorreyParams> for NormSpace {
    fn from(m: MorreyParams) -> Self {
        NormSpace::Morrey { p: m.p(), r: m.r() }
    }
}

impl NormSpace {
    pub fn norm(&self, f: &GridFunction) -> Result<f64> {
        match *self {
            NormSpace::Lebesgue { p } => lp_norm(f, p, None),
            NormSpace::Morrey { p, r } => Ok(morrey_norm_dyadic(f, &MorreyParams::new(p, r)?, None)?.value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRatioRow {
    pub function: String,
    pub points_per_axis: usize,
    pub ratio: f64,
}

/// `‖Tf‖ / ‖f‖` per function and resolution, with the corpus supremum at
/// each resolution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRatioTable {
    pub operator: String,
    pub space: NormSpace,
    pub rows: Vec<BoundRatioRow>,
    /// `(points per axis, sup over the corpus)`.
    pub per_resolution: Vec<(usize, f64)>,
    pub max_ratio: f64,
    /// Max over min of the per-resolution suprema.
    pub stability_quotient: f64,
}

impl BoundRatioTable {
    /// Passes when the supremum is finite and the quotient is below `tolerance`.
    pub fn measurement(&self, tolerance: f64) -> Measurement {
        let mut m = Measurement::below(
            self.stability_quotient,
            tolerance,
            self.per_resolution.iter().map(|r| r.0).collect(),
            serde_json::to_value(self).unwrap_or_default(),
        );
        m.pass &= self.max_ratio.is_finite();
        m
    }
}

/// Boundedness ratios of `op` over `corpus` on `spec` and `refinements`
/// successive refinements of it.
pub fn bound_ratio(
    op: &OperatorSpec,
    space: &NormSpace,
    corpus: &[FunctionExpr],
    spec: &GridSpec,
    refinements: usize,
) -> Result<BoundRatioTable> {
    if corpus.is_empty() {
        return Err(LabError::InvalidParams("bound ratios need a nonempty corpus".into()));
    }
    let mut grids = vec![*spec];
    for _ in 0..refinements {
        let last = *grids.last().expect("nonempty");
        grids.push(last.refined());
    }
    let jobs: Vec<(usize, &FunctionExpr)> = grids
        .iter()
        .enumerate()
        .flat_map(|(g, _)| corpus.iter().map(move |e| (g, e)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(g, expr)| {
            let f = GridFunction::sample(expr, &grids[g])?;
            let denominator = space.norm(&f)?;
            if denominator == 0.0 {
                return Err(LabError::ZeroNorm(format!("corpus function `{expr}` has zero norm")));
            }
            Ok(BoundRatioRow {
                function: expr.to_string(),
                points_per_axis: grids[g].points_per_axis(),
                ratio: space.norm(&op.apply(&f)?)? / denominator,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let per_resolution: Vec<(usize, f64)> = grids
        .iter()
        .map(|g| {
            let n = g.points_per_axis();
            let sup = rows
                .iter()
                .filter(|r| r.points_per_axis == n)
                .map(|r| r.ratio)
                .fold(0.0, f64::max);
            (n, sup)
        })
        .collect();
    let sups: Vec<f64> = per_resolution.iter().map(|r| r.1).collect();
    Ok(BoundRatioTable {
        operator: op.label(),
        space: *space,
        rows,
        max_ratio: sups.iter().copied().fold(0.0, f64::max),
        stability_quotient: spread(&sups),
        per_resolution,
    })
}

fn l2(f: &GridFunction) -> Result<f64> {
    lp_norm(f, 2.0, None)
}

/// Seeded partner: a bump at a random place and scale with a random phase.
fn random_bump(spec: &GridSpec, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let l = spec.half_width();
    let radius = rng.gen_range(0.05 * l..0.25 * l);
    let reach = l - radius - 4.0 * spec.spacing();
    let centre = rng.gen_range(-reach..reach);
    let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..2.0 * PI));
    let g = GridFunction::sample(&FunctionExpr::bump(0.0, radius), spec)?;
    let shift = (centre / spec.spacing()).round() as i64;
    let shift = if spec.dim() == 1 { [shift, 0] } else { [shift, -shift / 2] };
    Ok(g.translate_nodes(shift).scale(phase))
}

/// `‖T(af + bg) - aTf - bTg‖₂ / (‖aTf‖₂ + ‖bTg‖₂)` for seeded `a`, `b`, `g`.
pub fn linearity(
    op: &OperatorSpec,
    expr: &FunctionExpr,
    spec: &GridSpec,
    rng: &mut ChaCha8Rng,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let g = random_bump(spec, rng)?;
    let a = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let b = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
    let combined = op.apply(&f.scale(a).add(&g.scale(b))?)?;
    let tf = op.apply(&f)?.scale(a);
    let tg = op.apply(&g)?.scale(b);
    let residual = l2(&combined.sub(&tf.add(&tg)?)?)?;
    let scale = l2(&tf)? + l2(&tg)?;
    let value = if scale > 0.0 { residual / scale } else { residual };
    Ok(Measurement::at_most(
        value,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "a": [a.re, a.im], "b": [b.re, b.im] }),
    ))
}

/// Largest pointwise excess of `T(f + g)` over `Tf + Tg`, and of
/// `|T(-f) - Tf|`, relative to `max(Tf + Tg)`.
pub fn sublinearity(
    op: &OperatorSpec,
    expr: &FunctionExpr,
    spec: &GridSpec,
    rng: &mut ChaCha8Rng,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let g = random_bump(spec, rng)?;
    let tf = op.apply(&f)?.moduli();
    let tg = op.apply(&g)?.moduli();
    let tsum = op.apply(&f.add(&g)?)?.moduli();
    let tneg = op.apply(&f.scale_real(-1.0))?.moduli();
    let scale = tf.iter().zip(&tg).map(|(a, b)| a + b).fold(0.0, f64::max);
    let mut excess: f64 = 0.0;
    let mut symmetry: f64 = 0.0;
    for i in 0..tf.len() {
        excess = excess.max(tsum[i] - tf[i] - tg[i]);
        symmetry = symmetry.max((tneg[i] - tf[i]).abs());
    }
    let value = if scale > 0.0 { excess.max(symmetry) / scale } else { 0.0 };
    Ok(Measurement::at_most(
        value.max(0.0),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "excess": excess, "reflection_gap": symmetry, "scale": scale }),
    ))
}

/// Spread of the kernel-domination constant between `spec` and its
/// refinement.
pub fn kernel_domination(
    op: &OperatorSpec,
    expr: &FunctionExpr,
    spec: &GridSpec,
    tolerance: f64,
) -> Result<Measurement> {
    let fine = spec.refined();
    let reports = [*spec, fine]
        .par_iter()
        .map(|g| kernel_domination_constant(op, &GridFunction::sample(expr, g)?))
        .collect::<Result<Vec<_>>>()?;
    let constants: Vec<f64> = reports.iter().map(|r| r.constant).collect();
    let mut m = Measurement::below(
        spread(&constants),
        tolerance,
        vec![spec.points_per_axis(), fine.points_per_axis()],
        json!({ "constants": constants, "argmax": [reports[0].argmax, reports[1].argmax] }),
    );
    m.pass &= constants.iter().all(|c| c.is_finite());
    Ok(m)
}

fn omega_of(op: &OperatorSpec) -> Result<(Omega, Option<Vec<f64>>)> {
    match op {
        OperatorSpec::Hilbert { eps } => Ok((HomogeneousKernelSpec::hilbert(*eps)?.omega().clone(), None)),
        OperatorSpec::Cz { omega, .. } => Ok((omega.clone(), None)),
        OperatorSpec::CzMaximal { omega, eps_ladder } => Ok((omega.clone(), eps_ladder.clone())),
        other => Err(LabError::InvalidParams(format!(
            "{} is not a singular integral",
            other.label()
        ))),
    }
}

/// Below this fraction of its maximum the Cotlar denominator is ignored.
const COTLAR_FLOOR: f64 = 1e-6;

/// Fits the Cotlar constant over the corpus on `spec`, then reports the
/// largest refined-grid constant over the fitted one.
pub fn cotlar(op: &OperatorSpec, corpus: &[FunctionExpr], spec: &GridSpec, tolerance: f64) -> Result<Measurement> {
    let (omega, ladder) = omega_of(op)?;
    let fine = spec.refined();
    let constants = |g: &GridSpec| -> Result<Vec<f64>> {
        let ladder = ladder.clone().unwrap_or_else(|| eps_ladder(g));
        corpus
            .par_iter()
            .map(|e| {
                let f = GridFunction::sample(e, g)?;
                Ok(CotlarFields::compute(&f, &omega, &ladder)?.constant(COTLAR_FLOOR))
            })
            .collect()
    };
    let coarse = constants(spec)?;
    let refined = constants(&fine)?;
    let fitted = coarse.iter().copied().fold(0.0, f64::max);
    let worst = refined.iter().copied().fold(0.0, f64::max);
    let value = if fitted > 0.0 { worst / fitted } else if worst > 0.0 { f64::INFINITY } else { 0.0 };
    Ok(Measurement::below(
        value,
        tolerance,
        vec![spec.points_per_axis(), fine.points_per_axis()],
        json!({ "fitted_constant": fitted, "coarse": coarse, "fine": refined }),
    ))
}

fn one_dimensional(spec: &GridSpec, what: &str) -> Result<()> {
    if spec.dim() != 1 {
        return Err(LabError::InvalidParams(format!("{what} is defined on the line")));
    }
    Ok(())
}

/// Relative `L_2` gap on `|x| ≤ fraction·L` between the half-line multiplier
/// and `(f + iHf)/2`, with `H` truncated at one grid cell.
pub fn riesz_projection(expr: &FunctionExpr, spec: &GridSpec, fraction: f64, tolerance: f64) -> Result<Measurement> {
    one_dimensional(spec, "the half-line projection")?;
    let f = GridFunction::sample(expr, spec)?;
    let projected = apply_multiplier(&f, &MultiplierSpec::Interval { a: Some(0.0), b: None })?;
    let hf = cz_truncated(&f, &HomogeneousKernelSpec::hilbert(spec.spacing())?)?;
    let expected = f.add(&hf.scale(Complex64::new(0.0, 1.0)))?.scale_real(0.5);
    let region = Region::Ball {
        centre: [0.0, 0.0],
        radius: fraction * spec.half_width(),
    };
    let gap = lp_norm(&projected.sub(&expected)?, 2.0, Some(&region))?;
    let size = lp_norm(&expected, 2.0, Some(&region))?;
    let value = if size > 0.0 { gap / size } else { gap };
    Ok(Measurement::at_most(
        value,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "region_radius": fraction * spec.half_width(), "gap": gap, "size": size }),
    ))
}

/// Relative `L_2` distance between `f` and its full-line multiplier image.
pub fn full_line_identity(expr: &FunctionExpr, spec: &GridSpec, tolerance: f64) -> Result<Measurement> {
    one_dimensional(spec, "the full-line multiplier")?;
    let f = GridFunction::sample(expr, spec)?;
    let g = apply_multiplier(&f, &MultiplierSpec::Interval { a: None, b: None })?;
    let size = l2(&f)?;
    let gap = l2(&g.sub(&f)?)?;
    Ok(Measurement::at_most(
        if size > 0.0 { gap / size } else { gap },
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "gap": gap }),
    ))
}

fn strongly_singular_exponent(op: &OperatorSpec) -> Result<f64> {
    match op {
        OperatorSpec::Multiplier {
            symbol: MultiplierSpec::StronglySingular { b },
        } => Ok(*b),
        other => Err(LabError::InvalidParams(format!(
            "{} is not a strongly singular multiplier",
            other.label()
        ))),
    }
}

/// Band limit of the inputs fed to the annihilation check.
const LOW_BAND: f64 = 0.45;

/// `‖T_b f_low‖₂ / ‖f_low‖₂` where `f_low` keeps the frequencies of `f` in
/// `|ξ| ≤ 0.45`.
pub fn strongly_singular_annihilation(
    op: &OperatorSpec,
    expr: &FunctionExpr,
    spec: &GridSpec,
    tolerance: f64,
) -> Result<Measurement> {
    strongly_singular_exponent(op)?;
    let dim = spec.dim();
    let f = GridFunction::sample(expr, spec)?;
    let low = apply_symbol(&f, |xi| {
        Complex64::new(if point_norm(xi, dim) <= LOW_BAND { 1.0 } else { 0.0 }, 0.0)
    });
    let size = l2(&low)?;
    let out = l2(&op.apply(&low)?)?;
    Ok(Measurement::at_most(
        if size > 0.0 { out / size } else { out },
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "band": LOW_BAND, "input_norm": size }),
    ))
}

/// `‖T_b f‖₂ / (2^{nb/2} ‖f‖₂) - 1`, clamped below at zero.
pub fn strongly_singular_plancherel(
    op: &OperatorSpec,
    expr: &FunctionExpr,
    spec: &GridSpec,
    tolerance: f64,
) -> Result<Measurement> {
    let b = strongly_singular_exponent(op)?;
    let f = GridFunction::sample(expr, spec)?;
    let bound = 2f64.powf(spec.dim() as f64 * b / 2.0) * l2(&f)?;
    let out = l2(&op.apply(&f)?)?;
    let value = if bound > 0.0 { (out / bound - 1.0).max(0.0) } else { out };
    Ok(Measurement::at_most(
        value,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "output": out, "bound": bound }),
    ))
}

/// Relative `L_2` gap between the calibrated kernel form and the multiplier
/// form of the Bochner–Riesz mean.
pub fn bochner_riesz_agreement(
    op: &OperatorSpec,
    expr: &FunctionExpr,
    spec: &GridSpec,
    tolerance: f64,
) -> Result<Measurement> {
    let lambda = match op {
        OperatorSpec::BochnerRieszKernel { lambda, .. } => *lambda,
        OperatorSpec::Multiplier {
            symbol: MultiplierSpec::BochnerRiesz { lambda },
        } => *lambda,
        other => {
            return Err(LabError::InvalidParams(format!(
                "{} is not a Bochner-Riesz mean",
                other.label()
            )))
        }
    };
    let f = GridFunction::sample(expr, spec)?;
    let (kernel_form, constant) = BochnerRieszKernel::new(lambda, 0.0)?.apply(&f)?;
    let symbol_form = apply_multiplier(&f, &MultiplierSpec::BochnerRiesz { lambda })?;
    let size = l2(&symbol_form)?;
    let gap = l2(&kernel_form.sub(&symbol_form)?)?;
    Ok(Measurement::at_most(
        if size > 0.0 { gap / size } else { gap },
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "lambda": lambda, "constant": constant }),
    ))
}

/// `(1/π) ln 3`, the Hilbert transform of `χ[-1,1]` at 2.
const HILBERT_AT_TWO: f64 = 0.349_699_152_566_059_8;

/// Principal value of `Hχ[-1,1](2)` from the truncations `h, 2h, 4h, 8h`.
pub fn hilbert_closed_form(spec: &GridSpec, tolerance: f64) -> Result<Measurement> {
    one_dimensional(spec, "the Hilbert transform")?;
    let f = GridFunction::sample(&FunctionExpr::chi(-1.0, 1.0), spec)?;
    let h = spec.spacing();
    let ladder = [h, 2.0 * h, 4.0 * h, 8.0 * h];
    let omega = HomogeneousKernelSpec::hilbert(h)?.omega().clone();
    let pv = principal_value_at(&f, &omega, &[2.0, 0.0], &ladder)?;
    Ok(Measurement::at_most(
        relative_gap(pv.limit[0], HILBERT_AT_TWO),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "limit": pv.limit, "expected": HILBERT_AT_TWO, "samples": pv.samples }),
    ))
}

/// `Mχ[0,1]` at 2 against `1/4`.
pub fn maximal_closed_form(spec: &GridSpec, tolerance: f64) -> Result<Measurement> {
    one_dimensional(spec, "this closed form")?;
    let f = GridFunction::sample(&FunctionExpr::chi(0.0, 1.0), spec)?;
    let value = maximal_hl(&f).interpolate(&[2.0])?.re;
    Ok(Measurement::at_most(
        relative_gap(value, 0.25),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "value": value, "expected": 0.25 }),
    ))
}

fn far_field(g: GridFunction, expected: f64, tolerance: f64) -> Result<Measurement> {
    let spec = *g.spec();
    let report = far_field_decay(&GridFunctionSeq::singleton(g), 1.0, 2.0)?;
    Ok(Measurement::at_most(
        relative_gap(report.asymptote, expected),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "asymptote": report.asymptote, "expected": expected, "sup": report.sup, "fit_residual": report.fit_residual }),
    ))
}

/// Far-field constant of `Hχ[-1,1]` against `2/π`.
pub fn far_field_hilbert(spec: &GridSpec, tolerance: f64) -> Result<Measurement> {
    one_dimensional(spec, "this closed form")?;
    let f = GridFunction::sample(&FunctionExpr::chi(-1.0, 1.0), spec)?;
    let hf = cz_truncated(&f, &HomogeneousKernelSpec::hilbert(spec.spacing())?)?;
    far_field(hf, 2.0 / PI, tolerance)
}

/// Far-field constant of `Mχ[-1,1]` against 1.
pub fn far_field_maximal(spec: &GridSpec, tolerance: f64) -> Result<Measurement> {
    one_dimensional(spec, "this closed form")?;
    let f = GridFunction::sample(&FunctionExpr::chi(-1.0, 1.0), spec)?;
    far_field(maximal_hl(&f), 1.0, tolerance)
}

/// Spread of the Littlewood–Paley kernel constant over levels `-6..=6`
/// between 256 and 512 quadrature points.
pub fn square_function_kernel(dim: usize, tolerance: f64) -> Result<Measurement> {
    let values: Vec<f64> = [256, 512]
        .par_iter()
        .map(|&q| square_kernel_constant(LpProfile::SmoothStep, dim, -6..=6, q))
        .collect();
    Ok(Measurement::below(
        spread(&values),
        tolerance,
        vec![256, 512],
        json!({ "constants": values }),
    ))
}

/// Size and regularity constants of the Hilbert kernel on the line or the
/// first Riesz kernel in the plane, over the declared constant 1.
pub fn standard_kernel(dim: usize, seed: u64) -> Result<Measurement> {
    let omega = if dim == 1 {
        HomogeneousKernelSpec::hilbert(1.0)?.omega().clone()
    } else {
        HomogeneousKernelSpec::riesz(0, 1.0)?.omega().clone()
    };
    let spec = StandardKernelSpec::new(omega, 1.0, 1.0)?;
    let report = spec.check(2000, seed);
    let value = report.size.max(report.regularity_first).max(report.regularity_second);
    let mut m = Measurement::at_most(value, 1.0, Vec::new(), serde_json::to_value(report)?);
    m.pass &= report.holds;
    Ok(m)
}
