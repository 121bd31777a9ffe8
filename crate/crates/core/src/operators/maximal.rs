//! Centred Hardy–Littlewood maximal function.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::grid::{GridFunction, GridSpec};
use crate::spectral::PaddedSpectrum;

/// Radii of the discs used in two dimensions: `h·2^{k/4}` from below one
/// cell up to the box diagonal.
pub fn disc_radii(spec: &GridSpec) -> Vec<f64> {
    let h = spec.spacing();
    let top = 2.0 * spec.half_width() * 2f64.sqrt();
    let mut radii = vec![0.75 * h];
    let mut k = 0;
    loop {
        let r = h * 2f64.powf(k as f64 / 4.0);
        if r > top {
            break;
        }
        radii.push(r);
        k += 1;
    }
    radii.push(top * (1.0 + 1e-9));
    radii
}

/// `Mf(x) = sup_R |B_R(x)|^{-1} ∫_{B_R(x)} |f|` with `f` extended by zero.
///
/// On the line every radius `(k + ½)h` is visited, so a ball holds exactly
/// `2k + 1` cells. In the plane the supremum runs over [`disc_radii`] and a
/// disc's measure is its number of lattice points.
pub fn maximal_hl(f: &GridFunction) -> GridFunction {
    let spec = *f.spec();
    let mods = f.moduli();
    let values = if spec.dim() == 1 {
        maximal_line(&mods)
    } else {
        maximal_plane(&spec, &mods)
    };
    let values = values.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    GridFunction::from_parts(spec, values)
}

fn maximal_line(mods: &[f64]) -> Vec<f64> {
    let n = mods.len() as i64;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sum = mods[i as usize];
            let mut best = sum;
            for k in 1..n {
                let lo = i - k;
                let hi = i + k;
                if lo < 0 && hi >= n {
                    break;
                }
                if lo >= 0 {
                    sum += mods[lo as usize];
                }
                if hi < n {
                    sum += mods[hi as usize];
                }
                let avg = sum / (2 * k + 1) as f64;
                if avg > best {
                    best = avg;
                }
            }
            best
        })
        .collect()
}

fn maximal_plane(spec: &GridSpec, mods: &[f64]) -> Vec<f64> {
    let spectrum = PaddedSpectrum::from_real(spec, mods);
    let h = spec.spacing();
    disc_radii(spec)
        .par_iter()
        .map(|&radius| {
            let r2 = radius * radius;
            let inside = |d0: f64, d1: f64| d0 * d0 + d1 * d1 < r2;
            let reach = (radius / h).ceil() as i64;
            let mut count = 0usize;
            for a in -reach..=reach {
                for b in -reach..=reach {
                    if inside(a as f64 * h, b as f64 * h) {
                        count += 1;
                    }
                }
            }
            let sums = spectrum.convolve(|d| {
                Complex64::new(if inside(d[0], d[1]) { 1.0 } else { 0.0 }, 0.0)
            });
            sums.into_iter()
                .map(|s| s.re.max(0.0) / count as f64)
                .collect::<Vec<f64>>()
        })
        .reduce_with(|a, b| a.into_iter().zip(b).map(|(x, y)| x.max(y)).collect())
        .unwrap_or_else(|| mods.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FunctionExpr;

    #[test]
    fn indicator_values() {
        let spec = GridSpec::new(1, 8.0, 1024).unwrap();
        let f = GridFunction::sample(&FunctionExpr::chi(0.0, 1.0), &spec).unwrap();
        let m = maximal_hl(&f);
        assert!((m.interpolate(&[0.5]).unwrap().re - 1.0).abs() < 1e-12);
        assert!((m.interpolate(&[2.0]).unwrap().re - 0.25).abs() < 0.005);
    }

    #[test]
    fn dominates_modulus_in_both_dimensions() {
        for dim in [1, 2] {
            let spec = GridSpec::new(dim, 2.0, 32).unwrap();
            let f = GridFunction::sample(&"sum (bump 0.3 0.6) (chi -1 -0.5)".parse().unwrap(), &spec).unwrap();
            let m = maximal_hl(&f);
            for (a, b) in m.values().iter().zip(f.values()) {
                assert!(a.re >= b.norm() * (1.0 - 1e-12) - 1e-14);
            }
        }
    }

    #[test]
    fn zero_maps_to_zero() {
        let spec = GridSpec::new(2, 1.0, 16).unwrap();
        assert!(maximal_hl(&GridFunction::zeros(spec)).values().iter().all(|v| v.norm() < 1e-15));
    }
}
