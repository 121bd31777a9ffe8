use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{relative_gap, Measurement};
use crate::error::{LabError, Result};
use crate::grid::{pointwise_lq, FunctionExpr, GridFunction, GridFunctionSeq, GridSpec, LevelRange};
use crate::norms::{morrey_norm_vector, PredualParams};
use crate::predual::{
    default_dictionary, pairing, predual_lower_bound, predual_upper_bound, DualityCertificate,
};

fn certificate(f: &GridFunction, params: &PredualParams) -> Result<Option<DualityCertificate>> {
    if f.is_zero() {
        return Ok(None);
    }
    let dictionary = default_dictionary(f, params)?;
    predual_lower_bound(f, params, None, &dictionary).map(Some)
}

/// `lower / upper` of the duality bracket; fails on any violation.
pub fn weak_duality(expr: &FunctionExpr, spec: &GridSpec, params: &PredualParams) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let resolution = vec![spec.points_per_axis()];
    match certificate(&f, params)? {
        None => Ok(Measurement::at_most(0.0, 1.0, resolution, json!({ "lower": 0.0, "upper": 0.0 }))),
        Some(c) => Ok(Measurement {
            value: if c.upper_bound > 0.0 { c.lower_bound / c.upper_bound } else { 0.0 },
            tolerance: 1.0,
            pass: c.weak_duality_holds,
            resolution,
            details: serde_json::to_value(c.export())?,
        }),
    }
}

/// Number of nodes where the atoms fail to sum bitwise to the target.
pub fn reconstruction(expr: &FunctionExpr, spec: &GridSpec, params: &PredualParams) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let d = predual_upper_bound(&f, params, None)?;
    let rebuilt = d.reconstruct();
    let mismatches = rebuilt
        .values()
        .iter()
        .zip(f.values())
        .filter(|(a, b)| a.re.to_bits() != b.re.to_bits() || a.im.to_bits() != b.im.to_bits())
        .count();
    Ok(Measurement::at_most(
        mismatches as f64,
        0.0,
        vec![spec.points_per_axis()],
        json!({ "atoms": d.atoms().len(), "cost": d.total_cost() }),
    ))
}

/// Largest `normalized_scale - 1` over the atoms.
pub fn atom_validity(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &PredualParams,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let d = predual_upper_bound(&f, params, None)?;
    let worst = d
        .atoms()
        .iter()
        .map(|a| a.normalized_scale(params) - 1.0)
        .fold(0.0, f64::max);
    Ok(Measurement::at_most(
        worst,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "atoms": d.atoms().len() }),
    ))
}

/// Compares the cost of `f(2 ·)` on the half-size box with `2^ϱ` times the
/// cost of `f`. The half-size grid has the same node count, so both sample
/// vectors coincide and the level range shifts by one.
pub fn scale_shift(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &PredualParams,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let half = spec.scaled(0.5)?;
    let g = GridFunction::sample(&expr.clone().dilate(2.0), &half)?;
    let base = predual_upper_bound(&f, params, Some(LevelRange::default_for(spec)))?.total_cost();
    let shifted =
        predual_upper_bound(&g, params, Some(LevelRange::default_for(spec).shifted(1)))?.total_cost();
    let expected = 2f64.powf(params.rho()) * base;
    Ok(Measurement::at_most(
        relative_gap(shifted, expected),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "cost": base, "dilated_cost": shifted, "factor": 2f64.powf(params.rho()) }),
    ))
}

/// Cost and certified lower bound of `c f` against `c` times those of `f`
/// for a seeded `c` in `[0.1, 10]`.
pub fn homogeneity(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &PredualParams,
    rng: &mut ChaCha8Rng,
    tolerance: f64,
) -> Result<Measurement> {
    let c = rng.gen_range(0.1..10.0);
    let f = GridFunction::sample(expr, spec)?;
    let g = f.scale_real(c);
    let resolution = vec![spec.points_per_axis()];
    let (cf, cg) = match (certificate(&f, params)?, certificate(&g, params)?) {
        (Some(a), Some(b)) => (a, b),
        _ => return Ok(Measurement::at_most(0.0, tolerance, resolution, json!({ "c": c }))),
    };
    let value = relative_gap(cg.upper_bound, c * cf.upper_bound)
        .max(relative_gap(cg.lower_bound, c * cf.lower_bound));
    Ok(Measurement::at_most(
        value,
        tolerance,
        resolution,
        json!({ "c": c, "upper": [cf.upper_bound, cg.upper_bound], "lower": [cf.lower_bound, cg.lower_bound] }),
    ))
}

fn random_values(spec: &GridSpec, rng: &mut ChaCha8Rng, keep: impl Fn(usize) -> bool) -> Result<GridFunction> {
    let values = (0..spec.len())
        .map(|i| {
            let z = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if keep(i) {
                z
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
        .collect();
    GridFunction::new(*spec, values)
}

/// On `pairs` seeded pairs of length-3 sequences, the largest
/// `|⟨g, f⟩| / (‖g‖_{L^r_{p'}(ℓ_{q'})} · cost(f))` minus one, where the
/// Morrey side uses the parameters paired with `params` and both sides see
/// the same level range.
pub fn holder_duality(
    spec: &GridSpec,
    params: &PredualParams,
    q: f64,
    pairs: usize,
    rng: &mut ChaCha8Rng,
    tolerance: f64,
) -> Result<Measurement> {
    let dim = spec.dim();
    let morrey = params.paired_morrey(dim)?;
    if !(q.is_finite() && q > 1.0) {
        return Err(LabError::InvalidParams(format!("sequence exponent must lie in (1, ∞), got {q}")));
    }
    let q_dual = q / (q - 1.0);
    let range = LevelRange::default_for(spec);
    let n = spec.points_per_axis();
    let mut worst = f64::NEG_INFINITY;
    let mut violations = 0;
    for _ in 0..pairs {
        let lo: Vec<usize> = (0..dim).map(|_| rng.gen_range(0..n / 2)).collect();
        let hi: Vec<usize> = lo.iter().map(|&a| rng.gen_range(a + 1..=n.min(a + n / 2))).collect();
        let inside = |i: usize| {
            let m = spec.multi_index(i);
            (0..dim).all(|a| lo[a] <= m[a] && m[a] < hi[a])
        };
        let f_members = (0..3)
            .map(|_| random_values(spec, rng, inside))
            .collect::<Result<Vec<_>>>()?;
        let g_members = (0..3)
            .map(|_| random_values(spec, rng, |_| true))
            .collect::<Result<Vec<_>>>()?;
        let f = GridFunctionSeq::new(*spec, f_members)?;
        let g = GridFunctionSeq::new(*spec, g_members)?;
        let lhs = pairing(&g, &f)?.norm();
        let g_norm = morrey_norm_vector(&g, &morrey, q_dual, Some(range))?.value;
        let cost = predual_upper_bound(&pointwise_lq(&f, q)?, params, Some(range))?.total_cost();
        let bound = g_norm * cost;
        let excess = if bound > 0.0 { lhs / bound - 1.0 } else { lhs };
        if excess > tolerance {
            violations += 1;
        }
        worst = worst.max(excess);
    }
    Ok(Measurement::at_most(
        worst,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "pairs": pairs, "violations": violations, "q": q, "q_dual": q_dual }),
    ))
}
