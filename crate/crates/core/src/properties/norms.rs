use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use super::{relative_gap, spread, Measurement};
use crate::error::Result;
use crate::grid::{pointwise_lq, FunctionExpr, GridFunction, GridFunctionSeq, GridSpec};
use crate::norms::{
    check_embedding_chain, lp_norm, morrey_norm_ball, morrey_norm_dyadic, BallCandidates,
    MorreyParams,
};

/// `|‖f‖_{L^{-n/p}_p} / ‖f‖_{L_p} - 1|`.
pub fn norm_collapse(expr: &FunctionExpr, spec: &GridSpec, p: f64, tolerance: f64) -> Result<Measurement> {
    let params = MorreyParams::new(p, -(spec.dim() as f64) / p)?;
    let f = GridFunction::sample(expr, spec)?;
    let morrey = morrey_norm_dyadic(&f, &params, None)?.value;
    let lebesgue = lp_norm(&f, p, None)?;
    Ok(Measurement::at_most(
        relative_gap(morrey, lebesgue),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "morrey": morrey, "lebesgue": lebesgue }),
    ))
}

/// Largest `|‖f(2^k ·)‖ / (2^{kr} ‖f‖) - 1|` over `ks`.
pub fn dilation_covariance(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &MorreyParams,
    ks: &[i32],
    tolerance: f64,
) -> Result<Measurement> {
    let base = morrey_norm_dyadic(&GridFunction::sample(expr, spec)?, params, None)?.value;
    let mut worst: f64 = 0.0;
    let mut rows = Vec::new();
    for &k in ks {
        let factor = 2f64.powi(k);
        let g = GridFunction::sample(&expr.clone().dilate(factor), spec)?;
        let norm = morrey_norm_dyadic(&g, params, None)?.value;
        let gap = relative_gap(norm, factor.powf(params.r()) * base);
        worst = worst.max(gap);
        rows.push(json!({ "k": k, "norm": norm, "gap": gap }));
    }
    Ok(Measurement::at_most(
        worst,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "base": base, "dilations": rows }),
    ))
}

fn ratio_interval(corpus: &[FunctionExpr], spec: &GridSpec, params: &MorreyParams) -> Result<Option<(f64, f64)>> {
    let candidates = BallCandidates::default_for(spec);
    let mut interval: Option<(f64, f64)> = None;
    for expr in corpus {
        let f = GridFunction::sample(expr, spec)?;
        let dyadic = morrey_norm_dyadic(&f, params, None)?.value;
        let ball = morrey_norm_ball(&f, params, &candidates)?.value;
        if dyadic == 0.0 || ball == 0.0 {
            continue;
        }
        let r = dyadic / ball;
        interval = Some(match interval {
            None => (r, r),
            Some((lo, hi)) => (lo.min(r), hi.max(r)),
        });
    }
    Ok(interval)
}

/// Relative movement of the corpus interval of dyadic/ball ratios between
/// `spec` and its refinement.
pub fn dyadic_ball_equivalence(
    corpus: &[FunctionExpr],
    spec: &GridSpec,
    params: &MorreyParams,
    tolerance: f64,
) -> Result<Measurement> {
    let fine = spec.refined();
    let coarse_iv = ratio_interval(corpus, spec, params)?;
    let fine_iv = ratio_interval(corpus, &fine, params)?;
    let value = match (coarse_iv, fine_iv) {
        (Some((a, b)), Some((c, d))) => relative_gap(c, a).max(relative_gap(d, b)),
        (None, None) => 0.0,
        _ => f64::INFINITY,
    };
    Ok(Measurement::at_most(
        value,
        tolerance,
        vec![spec.points_per_axis(), fine.points_per_axis()],
        json!({ "coarse": coarse_iv, "fine": fine_iv }),
    ))
}

/// Ball norm before and after a seeded translation by a multiple of the
/// centre stride that keeps the support inside the box.
pub fn translation_invariance(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &MorreyParams,
    rng: &mut ChaCha8Rng,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let candidates = BallCandidates::default_for(spec);
    let stride = candidates.center_stride as i64;
    let n = spec.points_per_axis() as i64;
    let mut lo = [n; 2];
    let mut hi = [-1i64; 2];
    for (i, inside) in f.support_mask().into_iter().enumerate() {
        if inside {
            let m = spec.multi_index(i);
            for a in 0..spec.dim() {
                lo[a] = lo[a].min(m[a] as i64);
                hi[a] = hi[a].max(m[a] as i64);
            }
        }
    }
    let mut shift = [0i64; 2];
    if hi[0] >= 0 {
        for a in 0..spec.dim() {
            let down = lo[a] / stride;
            let up = (n - 1 - hi[a]) / stride;
            shift[a] = stride * rng.gen_range(-down..=up);
        }
    }
    let g = f.translate_nodes(shift);
    let before = morrey_norm_ball(&f, params, &candidates)?.value;
    let after = morrey_norm_ball(&g, params, &candidates)?.value;
    Ok(Measurement::at_most(
        relative_gap(after, before),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "shift": &shift[..spec.dim()], "before": before, "after": after }),
    ))
}

/// The three norms used by the comparison checks.
fn all_norms(f: &GridFunction, params: &MorreyParams, candidates: &BallCandidates) -> Result<[f64; 3]> {
    Ok([
        lp_norm(f, params.p(), None)?,
        morrey_norm_dyadic(f, params, None)?.value,
        morrey_norm_ball(f, params, candidates)?.value,
    ])
}

/// Shrinks `f` by seeded factors in `[0, 1]` and reports the largest
/// relative increase of any norm.
pub fn monotonicity(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &MorreyParams,
    rng: &mut ChaCha8Rng,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let factors: Vec<f64> = (0..spec.len()).map(|_| rng.gen_range(0.0..=1.0)).collect();
    let g = f.map_indexed(|i, v| v * factors[i]);
    let candidates = BallCandidates::default_for(spec);
    let big = all_norms(&f, params, &candidates)?;
    let small = all_norms(&g, params, &candidates)?;
    let excess = big
        .iter()
        .zip(&small)
        .map(|(b, s)| if *b > 0.0 { (s - b) / b } else { *s })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Measurement::at_most(
        excess.max(0.0),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "norms": big, "shrunk": small }),
    ))
}

/// Partner for `f`: seeded complex noise under a Gaussian envelope.
fn random_partner(spec: &GridSpec, rng: &mut ChaCha8Rng) -> Result<GridFunction> {
    let l = spec.half_width();
    let centre: Vec<f64> = (0..spec.dim()).map(|_| rng.gen_range(-l / 2.0..l / 2.0)).collect();
    let width = rng.gen_range(0.1 * l..0.4 * l);
    let noise: Vec<Complex64> = (0..spec.len())
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let values = (0..spec.len())
        .map(|i| {
            let x = spec.node(i);
            let r2: f64 = (0..spec.dim()).map(|a| (x[a] - centre[a]).powi(2)).sum();
            noise[i] * (-r2 / (width * width)).exp()
        })
        .collect();
    GridFunction::new(*spec, values)
}

/// Largest relative excess of `‖f + g‖` over `‖f‖ + ‖g‖` across the norms.
pub fn triangle_inequality(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &MorreyParams,
    rng: &mut ChaCha8Rng,
    tolerance: f64,
) -> Result<Measurement> {
    let f = GridFunction::sample(expr, spec)?;
    let g = random_partner(spec, rng)?;
    let sum = f.add(&g)?;
    let candidates = BallCandidates::default_for(spec);
    let nf = all_norms(&f, params, &candidates)?;
    let ng = all_norms(&g, params, &candidates)?;
    let ns = all_norms(&sum, params, &candidates)?;
    let excess = (0..3)
        .map(|k| (ns[k] - nf[k] - ng[k]) / (nf[k] + ng[k]))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(Measurement::at_most(
        excess.max(0.0),
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "f": nf, "g": ng, "sum": ns }),
    ))
}

/// Refinement spread of both embedding ratios, with the weight exponent at
/// the centre of its admissible window.
pub fn embedding_chain(
    expr: &FunctionExpr,
    spec: &GridSpec,
    params: &MorreyParams,
    tolerance: f64,
) -> Result<Measurement> {
    let n = spec.dim() as f64;
    let alpha = (-n + (-n - params.r() * params.p())) / (2.0 * params.p());
    let fine = spec.refined();
    let coarse = check_embedding_chain(&GridFunction::sample(expr, spec)?, params, alpha, f64::INFINITY)?;
    let refined = check_embedding_chain(&GridFunction::sample(expr, &fine)?, params, alpha, f64::INFINITY)?;
    let value = spread(&[coarse.morrey_over_lebesgue, refined.morrey_over_lebesgue])
        .max(spread(&[coarse.weighted_over_morrey, refined.weighted_over_morrey]));
    Ok(Measurement::below(
        value,
        tolerance,
        vec![spec.points_per_axis(), fine.points_per_axis()],
        json!({ "alpha": alpha, "coarse": coarse, "fine": refined }),
    ))
}

/// Largest relative increase of the pointwise `ℓ_q` norm from `q₁` to
/// `q₂ > q₁` on a seeded random sequence.
pub fn lq_monotonicity(spec: &GridSpec, rng: &mut ChaCha8Rng, tolerance: f64) -> Result<Measurement> {
    let members = (0..4)
        .map(|_| random_partner(spec, rng))
        .collect::<Result<Vec<_>>>()?;
    let seq = GridFunctionSeq::new(*spec, members)?;
    let q1 = rng.gen_range(1.0..4.0);
    let q2 = q1 + rng.gen_range(0.1..4.0);
    let a = pointwise_lq(&seq, q1)?;
    let b = pointwise_lq(&seq, q2)?;
    let worst = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| if x.re > 0.0 { (y.re - x.re) / x.re } else { y.re })
        .fold(0.0, f64::max);
    Ok(Measurement::at_most(
        worst,
        tolerance,
        vec![spec.points_per_axis()],
        json!({ "q": [q1, q2] }),
    ))
}
