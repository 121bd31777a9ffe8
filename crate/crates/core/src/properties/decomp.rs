use rayon::prelude::*;
use serde_json::json;

use super::{spread, Measurement};
use crate::decomp::{build_annulus_partition, mollify, near_far_split, MollifierSpec};
use crate::error::Result;
use crate::grid::{point_norm, FunctionExpr, GridFunction, GridSpec};
use crate::norms::{lp_norm, morrey_norm_dyadic, MorreyParams};
use crate::operators::OperatorSpec;

/// Base radii swept by the partition and near/far checks.
const RADII: [f64; 3] = [0.5, 1.0, 2.0];

/// Worst deviation of the annulus partition around the origin from its
/// invariants, over the base radii 1/2, 1 and 2: the sum is 1, members lie
/// in `[0, 1]`, `φ_0 = 1` on `B_{2R}`, and `φ_i` vanishes outside
/// `B_{2^{i+2}R} \ B_{2^i R}` for `i ≥ 1`.
pub fn partition_of_unity(spec: &GridSpec, tolerance: f64) -> Result<Measurement> {
    let dim = spec.dim();
    let mut sum_gap: f64 = 0.0;
    let mut range_gap: f64 = 0.0;
    let mut support_gap: f64 = 0.0;
    for &radius in &RADII {
        let partition = build_annulus_partition([0.0, 0.0], radius, None, spec)?;
        for s in partition.sum() {
            sum_gap = sum_gap.max((s - 1.0).abs());
        }
        let last = partition.outer_index();
        for (i, member) in partition.members().iter().enumerate() {
            for (k, v) in member.values().iter().enumerate() {
                let v = v.re;
                range_gap = range_gap.max(-v).max(v - 1.0);
                let rho = point_norm(&spec.node(k), dim);
                let inner = if i == 0 { 0.0 } else { 2f64.powi(i as i32) * radius };
                let outer = 2f64.powi(i as i32 + 2) * radius;
                let outside = rho < inner || (i < last && rho > outer);
                if outside {
                    support_gap = support_gap.max(v.abs());
                }
                if i == 0 && rho <= 2.0 * radius {
                    support_gap = support_gap.max((v - 1.0).abs());
                }
            }
        }
    }
    Ok(Measurement::at_most(
        sum_gap.max(range_gap).max(support_gap),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "sum": sum_gap, "range": range_gap, "support": support_gap, "radii": RADII }),
    ))
}

/// Spread of the near and far ratios at the origin over the base radii
/// 1/2, 1, 2 and the dilated pair `(f(·/2), 2)`. Scale-free inputs keep
/// both ratios constant.
pub fn near_far_stability(
    op: &OperatorSpec,
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &MorreyParams,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let dilated = GridFunction::sample(&expr.clone().dilate(0.5), spec)?;
    let mut cases: Vec<(&GridFunction, f64)> = RADII.iter().map(|&r| (&f, r)).collect();
    cases.push((&dilated, 2.0));
    let reports = cases
        .par_iter()
        .map(|&(g, r)| near_far_split(g, [0.0, 0.0], r, op, params))
        .collect::<Result<Vec<_>>>()?;
    let near: Vec<f64> = reports.iter().map(|r| r.near_ratio).collect();
    let far: Vec<f64> = reports.iter().map(|r| r.far_ratio).collect();
    Ok(Measurement::below(
        spread(&near).max(spread(&far)),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "near": near, "far": far, "radii": [0.5, 1.0, 2.0, 2.0], "dilated_last": true }),
    ))
}

/// Largest `d_{2l} / d_l` with `d_l = ‖f * ψ_l - f‖_{L^r_p}` along
/// `l = 2, 4, 8, 16`.
pub fn mollifier_trend(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &MorreyParams,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let distances = [2u32, 4, 8, 16]
        .par_iter()
        .map(|&l| {
            let g = mollify(&f, &MollifierSpec::new(l)?);
            Ok(morrey_norm_dyadic(&g.sub(&f)?, params, None)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = distances
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(Measurement::below(
        worst,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "scales": [2, 4, 8, 16], "distances": distances }),
    ))
}

/// With `l = 4`: relative excess of `‖f * ψ_l‖_p` over `‖f‖_p`, and the
/// largest gap between mollifying then translating by eight nodes and the
/// reverse, away from the box edge, relative to `max |f * ψ_l|`.
pub fn mollifier_invariants(expr: &FunctionExpr, spec: &GridSpec, p: f64, tolerance: f64) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let m = MollifierSpec::new(4)?;
    let smooth = mollify(&f, &m);
    let before = lp_norm(&f, p, None)?;
    let after = lp_norm(&smooth, p, None)?;
    let expansion = if before > 0.0 { (after / before - 1.0).max(0.0) } else { after };

    const SHIFT: i64 = 8;
    let shift = if spec.dim() == 1 { [SHIFT, 0] } else { [SHIFT, SHIFT] };
    let a = mollify(&f.translate_nodes(shift), &m);
    let b = smooth.translate_nodes(shift);
    let reach = (0.25 / spec.spacing()).ceil() as usize + 1;
    let n = spec.points_per_axis();
    let margin = reach + SHIFT as usize;
    let scale = smooth.max_modulus();
    let mut gap: f64 = 0.0;
    for k in 0..spec.len() {
        let idx = spec.multi_index(k);
        if (0..spec.dim()).all(|ax| idx[ax] >= margin && idx[ax] + reach < n) {
            gap = gap.max((a.value(k) - b.value(k)).norm());
        }
    }
    let commutation = if scale > 0.0 { gap / scale } else { gap };
    Ok(Measurement::at_most(
        expansion.max(commutation),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "expansion": expansion, "commutation": commutation }),
    ))
}
