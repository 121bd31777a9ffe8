//! Discretised maximal, singular integral and multiplier operators.

mod bessel;
mod bochner_riesz;
mod cz;
mod domination;
mod maximal;
mod multiplier;
mod standard;

pub use bessel::{bessel_j, bessel_j_scaled, SWITCHOVER as BESSEL_SWITCHOVER};
pub use bochner_riesz::{kernel_shape as bochner_riesz_shape, BochnerRieszKernel};
pub use cz::{
    cz_maximal, cz_truncated, cz_truncated_at, eps_ladder, principal_value_at, CotlarFields,
    HomogeneousKernelSpec, Omega, PrincipalValue, TrigTerm,
};
pub use domination::{kernel_domination_constant, DominationReport};
pub use maximal::{disc_radii, maximal_hl};
pub use multiplier::{
    apply_multiplier, high_pass, profile_kernel, smooth_step, square_kernel_constant,
    square_symbol_sup, LpProfile, MultiplierSpec,
};
pub use standard::{StandardKernelReport, StandardKernelSpec};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{GridFunction, GridFunctionSeq, GridSpec};

/// One operator with its discretisation parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OperatorSpec {
    Identity,
    Maximal,
    /// Truncated Hilbert transform.
    Hilbert { eps: f64 },
    /// Truncated homogeneous singular integral.
    Cz { omega: Omega, eps: f64 },
    /// Supremum of truncations over a ladder (the default ladder when absent).
    CzMaximal {
        omega: Omega,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        eps_ladder: Option<Vec<f64>>,
    },
    Multiplier { symbol: MultiplierSpec },
    /// Bochner–Riesz mean as a convolution with its calibrated Bessel kernel.
    BochnerRieszKernel {
        lambda: f64,
        #[serde(default)]
        eps: f64,
    },
}

impl OperatorSpec {
    pub fn apply(&self, f: &GridFunction) -> Result<GridFunction> {
        match self {
            OperatorSpec::Identity => Ok(f.clone()),
            OperatorSpec::Maximal => Ok(maximal_hl(f)),
            OperatorSpec::Hilbert { eps } => cz_truncated(f, &HomogeneousKernelSpec::hilbert(*eps)?),
            OperatorSpec::Cz { omega, eps } => {
                cz_truncated(f, &HomogeneousKernelSpec::new(omega.clone(), *eps)?)
            }
            OperatorSpec::CzMaximal { omega, eps_ladder: ladder } => {
                let ladder = ladder.clone().unwrap_or_else(|| eps_ladder(f.spec()));
                cz_maximal(f, omega, &ladder)
            }
            OperatorSpec::Multiplier { symbol } => apply_multiplier(f, symbol),
            OperatorSpec::BochnerRieszKernel { lambda, eps } => {
                Ok(BochnerRieszKernel::new(*lambda, *eps)?.apply(f)?.0)
            }
        }
    }

    /// Checks the parameters against `spec` without applying the operator.
    pub fn validate(&self, spec: &GridSpec) -> Result<()> {
        match self {
            OperatorSpec::Identity | OperatorSpec::Maximal => Ok(()),
            OperatorSpec::Hilbert { eps } => HomogeneousKernelSpec::hilbert(*eps)?.check_grid(spec),
            OperatorSpec::Cz { omega, eps } => HomogeneousKernelSpec::new(omega.clone(), *eps)?.check_grid(spec),
            OperatorSpec::CzMaximal { omega, eps_ladder: ladder } => {
                let ladder = ladder.clone().unwrap_or_else(|| eps_ladder(spec));
                if ladder.is_empty() {
                    return Err(LabError::EmptyCandidates("truncation ladder is empty".into()));
                }
                ladder
                    .iter()
                    .try_for_each(|&e| HomogeneousKernelSpec::new(omega.clone(), e)?.check_grid(spec))
            }
            OperatorSpec::Multiplier { symbol } => symbol.validate(spec.dim()),
            OperatorSpec::BochnerRieszKernel { lambda, eps } => {
                BochnerRieszKernel::new(*lambda, *eps)?;
                if *lambda == 0.0 && spec.dim() != 1 {
                    return Err(LabError::InvalidParams("index λ must be positive in the plane".into()));
                }
                Ok(())
            }
        }
    }

    /// False for the sublinear maximal operators.
    pub fn is_linear(&self) -> bool {
        !matches!(self, OperatorSpec::Maximal | OperatorSpec::CzMaximal { .. })
    }

    /// Short label used in reports.
    pub fn label(&self) -> String {
        match self {
            OperatorSpec::Identity => "identity".into(),
            OperatorSpec::Maximal => "maximal".into(),
            OperatorSpec::Hilbert { eps } => format!("hilbert(eps={eps})"),
            OperatorSpec::Cz { eps, .. } => format!("cz(eps={eps})"),
            OperatorSpec::CzMaximal { .. } => "cz_maximal".into(),
            OperatorSpec::Multiplier { symbol } => match symbol {
                MultiplierSpec::Interval { a, b } => format!("interval({a:?},{b:?})"),
                MultiplierSpec::DyadicSmooth { j, .. } => format!("dyadic_smooth(j={j})"),
                MultiplierSpec::StronglySingular { b } => format!("strongly_singular(b={b})"),
                MultiplierSpec::BochnerRiesz { lambda } => format!("bochner_riesz(lambda={lambda})"),
            },
            OperatorSpec::BochnerRieszKernel { lambda, .. } => format!("bochner_riesz_kernel(lambda={lambda})"),
        }
    }
}

/// Applies `ops[j]` to `seq[j]`.
pub fn apply_vector(ops: &[OperatorSpec], seq: &GridFunctionSeq) -> Result<GridFunctionSeq> {
    if ops.len() != seq.len() {
        return Err(LabError::LengthMismatch {
            expected: seq.len(),
            actual: ops.len(),
        });
    }
    let members = ops
        .iter()
        .zip(seq.members())
        .map(|(op, f)| op.apply(f))
        .collect::<Result<Vec<_>>>()?;
    GridFunctionSeq::new(*seq.spec(), members)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{FunctionExpr, GridSpec};

    #[test]
    fn spec_json_round_trip() {
        let ops = vec![
            OperatorSpec::Maximal,
            OperatorSpec::Hilbert { eps: 0.01 },
            OperatorSpec::Multiplier {
                symbol: MultiplierSpec::Interval { a: Some(0.0), b: None },
            },
            OperatorSpec::CzMaximal {
                omega: Omega::Line { plus: 1.0, minus: -1.0 },
                eps_ladder: None,
            },
        ];
        let text = serde_json::to_string(&ops).unwrap();
        let back: Vec<OperatorSpec> = serde_json::from_str(&text).unwrap();
        assert_eq!(ops, back);
        let parsed: OperatorSpec =
            serde_json::from_str(r#"{"kind":"multiplier","symbol":{"type":"bochner_riesz","lambda":0.5}}"#).unwrap();
        assert!(parsed.is_linear());
    }

    #[test]
    fn vector_application() {
        let spec = GridSpec::new(1, 2.0, 64).unwrap();
        let f = GridFunction::sample(&FunctionExpr::bump(0.0, 0.5), &spec).unwrap();
        let seq = GridFunctionSeq::new(spec, vec![f.clone(), f.clone()]).unwrap();
        let out = apply_vector(&[OperatorSpec::Identity, OperatorSpec::Maximal], &seq).unwrap();
        assert_eq!(out.members()[0], f);
        assert_eq!(out.members()[1], maximal_hl(&f));
        assert!(apply_vector(&[OperatorSpec::Identity], &seq).is_err());
    }
}
