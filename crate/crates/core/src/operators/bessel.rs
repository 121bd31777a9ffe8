//! Bessel functions of the first kind for real order `ν ≥ 0`.

use statrs::function::gamma::gamma;
use std::f64::consts::PI;

/// Argument at which the power series hands over to the Hankel expansion.
pub const SWITCHOVER: f64 = 12.0;

/// `J_ν(x)` for `ν ≥ 0`, `x ≥ 0`.
pub fn bessel_j(nu: f64, x: f64) -> f64 {
    debug_assert!(nu >= 0.0 && x >= 0.0);
    if x < SWITCHOVER {
        series(nu, x)
    } else {
        hankel(nu, x)
    }
}

/// `J_ν(x) / x^ν`, finite at the origin where it equals `1 / (2^ν Γ(ν+1))`.
pub fn bessel_j_scaled(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 1.0 / (2f64.powf(nu) * gamma(nu + 1.0));
    }
    if x < SWITCHOVER {
        series_scaled(nu, x)
    } else {
        hankel(nu, x) / x.powf(nu)
    }
}

fn series(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 { 1.0 } else { 0.0 };
    }
    series_scaled(nu, x) * x.powf(nu)
}

/// `Σ_k (-1)^k (x/2)^{2k} / (k! Γ(k+ν+1)) / 2^ν`.
fn series_scaled(nu: f64, x: f64) -> f64 {
    let q = -(x * x) / 4.0;
    let mut term = 1.0 / (2f64.powf(nu) * gamma(nu + 1.0));
    let mut sum = term;
    for k in 1..200 {
        let kf = k as f64;
        term *= q / (kf * (kf + nu));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) {
            break;
        }
    }
    sum
}

fn hankel(nu: f64, x: f64) -> f64 {
    let mu = 4.0 * nu * nu;
    let z = 8.0 * x;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..60 {
        let kf = k as f64;
        term *= (mu - (2.0 * kf - 1.0).powi(2)) / (kf * z);
        if term.abs() >= last {
            break;
        }
        last = term.abs();
        // odd terms feed Q, even terms feed P, with alternating signs
        match k % 4 {
            1 => q += term,
            2 => p -= term,
            3 => q -= term,
            _ => p += term,
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    let chi = x - (nu / 2.0 + 0.25) * PI;
    (2.0 / (PI * x)).sqrt() * (p * chi.cos() - q * chi.sin())
}
