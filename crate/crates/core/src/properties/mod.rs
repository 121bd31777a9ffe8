//! Named, measurable invariants of the norm, predual, operator and
//! decomposition modules.
//!
//! Every check returns a [`Measurement`]: the headline value, the tolerance it
//! was judged against, and the grid resolutions involved. The experiment
//! runner addresses checks by name through [`CHECKS`] and [`evaluate`].

mod decomp;
mod norms;
mod operators;
mod predual;

pub use self::decomp::{
    mollifier_invariants, mollifier_trend, near_far_stability, partition_of_unity,
};
pub use self::norms::{
    dilation_covariance, dyadic_ball_equivalence, embedding_chain, lq_monotonicity, monotonicity,
    norm_collapse, translation_invariance, triangle_inequality,
};
pub use self::operators::{
    bochner_riesz_agreement, bound_ratio, cotlar, far_field_hilbert, far_field_maximal,
    full_line_identity, hilbert_closed_form, kernel_domination, linearity, maximal_closed_form,
    riesz_projection, square_function_kernel, standard_kernel, strongly_singular_annihilation,
    strongly_singular_plancherel, sublinearity, BoundRatioRow, BoundRatioTable, NormSpace,
};
pub use self::predual::{
    atom_validity, holder_duality, homogeneity, reconstruction, scale_shift, weak_duality,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{LabError, Result};
use crate::grid::{FunctionExpr, GridSpec};
use crate::norms::{MorreyParams, PredualParams};
use crate::operators::{MultiplierSpec, OperatorSpec};

/// Outcome of one check on one subject.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    pub value: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Points per axis of every grid the value depends on.
    pub resolution: Vec<usize>,
    pub details: Value,
}

impl Measurement {
    /// Passes when `value <= tolerance`.
    pub fn at_most(value: f64, tolerance: f64, resolution: Vec<usize>, details: Value) -> Self {
        Self {
            value,
            tolerance,
            pass: value.is_finite() && value <= tolerance,
            resolution,
            details,
        }
    }

    /// Passes when `value < tolerance`.
    pub fn below(value: f64, tolerance: f64, resolution: Vec<usize>, details: Value) -> Self {
        Self {
            value,
            tolerance,
            pass: value.is_finite() && value < tolerance,
            resolution,
            details,
        }
    }
}

/// What a check iterates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    /// Runs once, independent of corpus and operators.
    Standalone,
    /// Once per corpus function.
    Function,
    /// Once over the whole corpus.
    Corpus,
    /// Once per applicable (operator, function) pair.
    OperatorFunction,
    /// Once per applicable operator over the whole corpus.
    OperatorCorpus,
}

/// Registry entry for a named check.
#[derive(Clone, Copy, Debug)]
pub struct CheckInfo {
    pub name: &'static str,
    pub scope: Scope,
    pub tolerance: f64,
    pub invariant: &'static str,
    applies: fn(&OperatorSpec) -> bool,
}

impl CheckInfo {
    /// Whether the check is meaningful for `op`. Always true for checks
    /// without an operator.
    pub fn applies_to(&self, op: &OperatorSpec) -> bool {
        (self.applies)(op)
    }
}

fn any_op(_: &OperatorSpec) -> bool {
    true
}

fn linear_op(op: &OperatorSpec) -> bool {
    op.is_linear()
}

fn sublinear_op(op: &OperatorSpec) -> bool {
    !op.is_linear()
}

fn singular_integral_op(op: &OperatorSpec) -> bool {
    matches!(
        op,
        OperatorSpec::Hilbert { .. } | OperatorSpec::Cz { .. } | OperatorSpec::CzMaximal { .. }
    )
}

fn strongly_singular_op(op: &OperatorSpec) -> bool {
    matches!(
        op,
        OperatorSpec::Multiplier {
            symbol: MultiplierSpec::StronglySingular { .. }
        }
    )
}

fn bochner_riesz_op(op: &OperatorSpec) -> bool {
    matches!(
        op,
        OperatorSpec::BochnerRieszKernel { .. }
            | OperatorSpec::Multiplier {
                symbol: MultiplierSpec::BochnerRiesz { .. }
            }
    )
}

const fn entry(
    name: &'static str,
    scope: Scope,
    tolerance: f64,
    invariant: &'static str,
    applies: fn(&OperatorSpec) -> bool,
) -> CheckInfo {
    CheckInfo {
        name,
        scope,
        tolerance,
        invariant,
        applies,
    }
}

/// Every check the runner can address by name.
pub const CHECKS: &[CheckInfo] = &[
    entry("norm_collapse", Scope::Function, 0.02,
        "dyadic Morrey norm at r = -n/p equals the global L_p norm", any_op),
    entry("dilation_covariance", Scope::Function, 0.02,
        "‖f(2^k ·)‖ = 2^{kr} ‖f‖ for k in {-1, 0, 1, 2}", any_op),
    entry("dyadic_ball_equivalence", Scope::Corpus, 0.10,
        "dyadic/ball ratio interval moves by less than the tolerance under refinement", any_op),
    entry("translation_invariance", Scope::Function, 1e-9,
        "ball norm is unchanged by translation along the centre lattice", any_op),
    entry("monotonicity", Scope::Function, 1e-12,
        "|g| <= |f| pointwise implies ‖g‖ <= ‖f‖ for every norm", any_op),
    entry("triangle_inequality", Scope::Function, 1e-12,
        "‖f + g‖ <= ‖f‖ + ‖g‖ for every norm on a random partner g", any_op),
    entry("embedding_chain", Scope::Function, 1.25,
        "embedding ratios are refinement-stable", any_op),
    entry("lq_monotonicity", Scope::Standalone, 1e-12,
        "pointwise ℓ_q norm is non-increasing in q", any_op),
    entry("weak_duality", Scope::Function, 1.0,
        "certified lower bound never exceeds the partition cost", any_op),
    entry("reconstruction", Scope::Function, 0.0,
        "atoms sum bitwise to the target", any_op),
    entry("atom_validity", Scope::Function, 1e-12,
        "every normalised atom meets its size bound", any_op),
    entry("scale_shift", Scope::Function, 1e-9,
        "cost of f(2 ·) is 2^ϱ times the cost of f", any_op),
    entry("homogeneity", Scope::Function, 1e-9,
        "costs and certificates scale linearly under f -> c f", any_op),
    entry("holder_duality", Scope::Standalone, 1e-12,
        "|<g, f>| <= Morrey norm of g times partition cost of f on random vector pairs", any_op),
    entry("linearity", Scope::OperatorFunction, 1e-9,
        "T(a f + b g) = a Tf + b Tg", linear_op),
    entry("sublinearity", Scope::OperatorFunction, 1e-12,
        "T(f + g) <= Tf + Tg and T(-f) = Tf pointwise", sublinear_op),
    entry("kernel_domination", Scope::OperatorFunction, 1.25,
        "kernel-domination constant is finite and refinement-stable", any_op),
    entry("bound_ratio", Scope::OperatorCorpus, 1.25,
        "sup of ‖Tf‖/‖f‖ over the corpus is finite and refinement-stable", any_op),
    entry("cotlar", Scope::OperatorCorpus, 1.25,
        "maximal truncations are dominated by M(Tf) + Mf with one fitted constant", singular_integral_op),
    entry("near_far_stability", Scope::OperatorFunction, 1.25,
        "near/far ratios are stable across radii and a joint dilation of (f, R)", any_op),
    entry("riesz_projection", Scope::Function, 0.03,
        "the half-line multiplier equals (f + iHf)/2", any_op),
    entry("full_line_identity", Scope::Function, 1e-10,
        "the full-line interval multiplier is the identity", any_op),
    entry("strongly_singular_annihilation", Scope::OperatorFunction, 1e-10,
        "T_b vanishes on inputs with spectrum in |ξ| <= 1/2", strongly_singular_op),
    entry("strongly_singular_plancherel", Scope::OperatorFunction, 1e-12,
        "‖T_b f‖_2 <= 2^{nb/2} ‖f‖_2", strongly_singular_op),
    entry("bochner_riesz_agreement", Scope::OperatorFunction, 0.05,
        "Bochner-Riesz kernel and multiplier forms agree after calibration", bochner_riesz_op),
    entry("hilbert_closed_form", Scope::Standalone, 0.03,
        "principal value of Hχ[-1,1] at 2 is ln(3)/π", any_op),
    entry("maximal_closed_form", Scope::Standalone, 0.02,
        "Mχ[0,1](2) = 1/4", any_op),
    entry("far_field_hilbert", Scope::Standalone, 0.05,
        "|x| |Hχ[-1,1](x)| tends to 2/π", any_op),
    entry("far_field_maximal", Scope::Standalone, 0.05,
        "|x| Mχ[-1,1](x) tends to 1", any_op),
    entry("square_function_kernel", Scope::Standalone, 1.25,
        "ℓ_2 kernel bound of the Littlewood-Paley family is quadrature-stable", any_op),
    entry("standard_kernel", Scope::Standalone, 1.0,
        "homogeneous kernel satisfies the size and regularity bounds", any_op),
    entry("partition_of_unity", Scope::Standalone, 1e-12,
        "annulus partition sums to one with members in [0, 1]", any_op),
    entry("mollifier_trend", Scope::Function, 1.0,
        "‖f * ψ_l - f‖ decreases along l = 2, 4, 8, 16", any_op),
    entry("mollifier_invariants", Scope::Function, 1e-12,
        "mollification is L_p-nonexpansive and commutes with grid translations", any_op),
];

/// Looks up a check by name.
pub fn lookup(name: &str) -> Result<&'static CheckInfo> {
    CHECKS
        .iter()
        .find(|c| c.name == name)
        .ok_or_else(|| LabError::UnknownCheck(name.to_string()))
}

/// Shared inputs for a batch of checks.
#[derive(Clone, Debug)]
pub struct CheckContext {
    pub grid: GridSpec,
    pub morrey: MorreyParams,
    /// Absent when the Morrey parameters sit at the collapse `r = -n/p`,
    /// which has no predual partner.
    pub predual: Option<PredualParams>,
    pub q: f64,
    pub seed: u64,
}

impl CheckContext {
    fn predual(&self) -> Result<&PredualParams> {
        self.predual.as_ref().ok_or_else(|| {
            LabError::InvalidParams("these Morrey parameters have no predual partner".into())
        })
    }

    /// Generator for the subject at `index`, independent across subjects.
    pub fn rng(&self, index: u64) -> ChaCha8Rng {
        let mut z = self
            .seed
            .wrapping_add(index.wrapping_mul(0x9E37_79B9_7F4A_7C15));
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
    }
}

/// What one evaluation looks at.
#[derive(Clone, Copy, Debug)]
pub struct Subject<'a> {
    pub function: Option<&'a FunctionExpr>,
    pub operator: Option<&'a OperatorSpec>,
    pub corpus: &'a [FunctionExpr],
    /// Position of this subject in the run, used to derive its generator.
    pub index: u64,
}

fn need<'a, T>(x: Option<&'a T>, what: &str) -> Result<&'a T> {
    x.ok_or_else(|| LabError::InvalidParams(format!("check needs {what}")))
}

/// Runs the check `info` on `subject` against `tolerance`.
pub fn evaluate(
    info: &CheckInfo,
    ctx: &CheckContext,
    subject: Subject<'_>,
    tolerance: f64,
) -> Result<Measurement> {
    let spec = &ctx.grid;
    let f = || need(subject.function, "a corpus function");
    let op = || need(subject.operator, "an operator");
    let mut rng = ctx.rng(subject.index);
    match info.name {
        "norm_collapse" => norm_collapse(f()?, spec, ctx.morrey.p(), tolerance),
        "dilation_covariance" => dilation_covariance(f()?, spec, &ctx.morrey, &[-1, 0, 1, 2], tolerance),
        "dyadic_ball_equivalence" => dyadic_ball_equivalence(subject.corpus, spec, &ctx.morrey, tolerance),
        "translation_invariance" => translation_invariance(f()?, spec, &ctx.morrey, &mut rng, tolerance),
        "monotonicity" => monotonicity(f()?, spec, &ctx.morrey, &mut rng, tolerance),
        "triangle_inequality" => triangle_inequality(f()?, spec, &ctx.morrey, &mut rng, tolerance),
        "embedding_chain" => embedding_chain(f()?, spec, &ctx.morrey, tolerance),
        "lq_monotonicity" => lq_monotonicity(spec, &mut rng, tolerance),
        "weak_duality" => weak_duality(f()?, spec, ctx.predual()?),
        "reconstruction" => reconstruction(f()?, spec, ctx.predual()?),
        "atom_validity" => atom_validity(f()?, spec, ctx.predual()?, tolerance),
        "scale_shift" => scale_shift(f()?, spec, ctx.predual()?, tolerance),
        "homogeneity" => homogeneity(f()?, spec, ctx.predual()?, &mut rng, tolerance),
        "holder_duality" => holder_duality(spec, ctx.predual()?, ctx.q, 50, &mut rng, tolerance),
        "linearity" => linearity(op()?, f()?, spec, &mut rng, tolerance),
        "sublinearity" => sublinearity(op()?, f()?, spec, &mut rng, tolerance),
        "kernel_domination" => kernel_domination(op()?, f()?, spec, tolerance),
        "bound_ratio" => {
            let table = bound_ratio(op()?, &NormSpace::from(ctx.morrey), subject.corpus, spec, 1)?;
            Ok(table.measurement(tolerance))
        }
        "cotlar" => cotlar(op()?, subject.corpus, spec, tolerance),
        "near_far_stability" => near_far_stability(op()?, f()?, spec, &ctx.morrey, tolerance),
        "riesz_projection" => riesz_projection(f()?, spec, 0.5, tolerance),
        "full_line_identity" => full_line_identity(f()?, spec, tolerance),
        "strongly_singular_annihilation" => strongly_singular_annihilation(op()?, f()?, spec, tolerance),
        "strongly_singular_plancherel" => strongly_singular_plancherel(op()?, f()?, spec, tolerance),
        "bochner_riesz_agreement" => bochner_riesz_agreement(op()?, f()?, spec, tolerance),
        "hilbert_closed_form" => hilbert_closed_form(spec, tolerance),
        "maximal_closed_form" => maximal_closed_form(spec, tolerance),
        "far_field_hilbert" => far_field_hilbert(spec, tolerance),
        "far_field_maximal" => far_field_maximal(spec, tolerance),
        "square_function_kernel" => square_function_kernel(spec.dim(), tolerance),
        "standard_kernel" => standard_kernel(spec.dim(), ctx.seed),
        "partition_of_unity" => partition_of_unity(spec, tolerance),
        "mollifier_trend" => mollifier_trend(f()?, spec, &ctx.morrey, tolerance),
        "mollifier_invariants" => mollifier_invariants(f()?, spec, ctx.morrey.p(), tolerance),
        other => Err(LabError::UnknownCheck(other.to_string())),
    }
}

/// `|a / b - 1|`, zero when both vanish and infinite when only `b` does.
pub(crate) fn relative_gap(a: f64, b: f64) -> f64 {
    if b == 0.0 {
        if a == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a / b - 1.0).abs()
    }
}

/// `max / min` of positive values; one when all vanish.
pub(crate) fn spread(values: &[f64]) -> f64 {
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    if hi == 0.0 {
        1.0
    } else if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_are_unique_and_dispatchable() {
        let mut names: Vec<&str> = CHECKS.iter().map(|c| c.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), CHECKS.len());
        assert!(matches!(lookup("nope"), Err(LabError::UnknownCheck(_))));
    }

    #[test]
    fn spread_and_gap_conventions() {
        assert_eq!(spread(&[0.0, 0.0]), 1.0);
        assert_eq!(spread(&[0.0, 1.0]), f64::INFINITY);
        assert_eq!(spread(&[2.0, 1.0]), 2.0);
        assert_eq!(relative_gap(0.0, 0.0), 0.0);
        assert!((relative_gap(1.01, 1.0) - 0.01).abs() < 1e-12);
    }
}
