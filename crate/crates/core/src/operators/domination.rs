//! Empirical constant in `|Tf(y)| ≤ c ∫ |f(z)| |y - z|^{-n} dz` for `y` off
//! the support of `f`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::OperatorSpec;
use crate::error::{LabError, Result};
use crate::grid::{point_norm, GridFunction, Point};
use crate::spectral::PaddedSpectrum;

/// Largest observed ratio and where it occurred.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominationReport {
    pub constant: f64,
    pub argmax: Option<Point>,
    pub admissible_points: usize,
}

/// `sup_y |Tf(y)| / Σ_j |f(x_j)| |y - x_j|^{-n} h^n` over nodes `y` at
/// distance at least `2h` from every support node. The support must avoid
/// the two outermost cells on each side.
pub fn kernel_domination_constant(op: &OperatorSpec, f: &GridFunction) -> Result<DominationReport> {
    let spec = *f.spec();
    let dim = spec.dim();
    let h = spec.spacing();
    let n = spec.points_per_axis();
    let support: Vec<usize> = (0..spec.len()).filter(|&i| f.value(i).norm() > 0.0).collect();
    if support.is_empty() {
        return Ok(DominationReport {
            constant: 0.0,
            argmax: None,
            admissible_points: 0,
        });
    }
    for &i in &support {
        let m = spec.multi_index(i);
        if (0..dim).any(|a| m[a] < 2 || m[a] + 2 >= n) {
            return Err(LabError::DomainTooSmall(
                "support reaches the edge of the box".into(),
            ));
        }
    }
    let mut mask = vec![false; spec.len()];
    for &i in &support {
        mask[i] = true;
    }
    let near = |i: usize| {
        let m = spec.multi_index(i);
        let range = |a: usize| m[a].saturating_sub(2)..=(m[a] + 2).min(n - 1);
        if dim == 1 {
            range(0).any(|j| mask[j] && (j as f64 - m[0] as f64).abs() < 2.0 - 1e-9)
        } else {
            range(0).any(|a| {
                range(1).any(|b| {
                    let d = ((a as f64 - m[0] as f64).powi(2) + (b as f64 - m[1] as f64).powi(2)).sqrt();
                    mask[spec.flat_index([a, b])] && d < 2.0 - 1e-9
                })
            })
        }
    };
    let admissible: Vec<usize> = (0..spec.len()).filter(|&i| !near(i)).collect();
    if admissible.is_empty() {
        return Err(LabError::NoAdmissiblePoints("every node lies within 2h of the support".into()));
    }
    let tf = op.apply(f)?;
    let vol = spec.cell_volume();
    let denominators = PaddedSpectrum::from_real(&spec, &f.moduli()).convolve(|z| {
        let r = point_norm(z, dim);
        Complex64::new(if r < 0.5 * h { 0.0 } else { r.powi(-(dim as i32)) * vol }, 0.0)
    });
    let mut best = DominationReport {
        constant: 0.0,
        argmax: None,
        admissible_points: admissible.len(),
    };
    for &i in &admissible {
        let den = denominators[i].re;
        if den <= 0.0 {
            continue;
        }
        let ratio = tf.value(i).norm() / den;
        if ratio > best.constant {
            best.constant = ratio;
            best.argmax = Some(spec.node(i));
        }
    }
    Ok(best)
}
