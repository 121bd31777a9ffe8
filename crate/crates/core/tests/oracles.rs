//! Library values against independent reference computations.

use std::f64::consts::PI;

use num_complex::Complex64;
use proptest::prelude::*;

use morrey_core::grid::{FunctionExpr, GridFunction, GridSpec, LevelRange};
use morrey_core::norms::{lp_norm, morrey_norm_dyadic, MorreyParams};
use morrey_core::operators::{bessel_j, bessel_j_scaled, OperatorSpec};

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + k as f64 * h);
    }
    s * h / 3.0
}

/// Schläfli's integral for `J_ν(x)`, `x > 0`.
fn bessel_by_quadrature(nu: f64, x: f64) -> f64 {
    let oscillatory = simpson(|t| (nu * t - x * t.sin()).cos(), 0.0, PI, 40_000) / PI;
    if nu.fract() == 0.0 {
        return oscillatory;
    }
    let t_max = (60.0 / x).asinh() + 1.0;
    let tail = simpson(|t| (-x * t.sinh() - nu * t).exp(), 0.0, t_max, 40_000);
    oscillatory - (nu * PI).sin() / PI * tail
}

#[test]
fn bessel_matches_integral_representation() {
    for &nu in &[0.0, 0.25, 1.0, 1.5, 2.0, 2.7, 4.5] {
        for &x in &[0.4, 3.0, 7.5, 11.9, 12.1, 20.0, 45.0, 80.0] {
            let reference = bessel_by_quadrature(nu, x);
            let got = bessel_j(nu, x);
            assert!((got - reference).abs() < 1e-8, "ν={nu} x={x}: {got} vs {reference}");
            let scaled = bessel_j_scaled(nu, x) * x.powf(nu);
            assert!((scaled - reference).abs() < 1e-8 * (1.0 + x.powf(nu)), "scaled ν={nu} x={x}");
        }
    }
}

#[test]
fn gaussian_lp_norms_match_closed_form() {
    // ∫ exp(-p|x|²/σ²) dx = (σ √(π/p))^n
    for (dim, l, n) in [(1usize, 8.0, 512usize), (2, 8.0, 128)] {
        let spec = GridSpec::new(dim, l, n).unwrap();
        for &sigma in &[0.5, 1.0, 1.5] {
            let f = GridFunction::sample(&FunctionExpr::gauss(sigma), &spec).unwrap();
            for &p in &[1.0, 2.0, 3.5] {
                let exact = (sigma * (PI / p).sqrt()).powi(dim as i32).powf(1.0 / p);
                let got = lp_norm(&f, p, None).unwrap();
                assert!((got / exact - 1.0).abs() < 1e-12, "n={dim} σ={sigma} p={p}");
            }
        }
    }
}

fn hilbert_error(points: usize) -> f64 {
    let spec = GridSpec::new(1, 8.0, points).unwrap();
    let f = GridFunction::sample(&FunctionExpr::chi(-1.0, 1.0), &spec).unwrap();
    let hf = OperatorSpec::Hilbert { eps: spec.spacing() }.apply(&f).unwrap();
    let mut worst: f64 = 0.0;
    for k in 0..spec.len() {
        let y = spec.coord(k);
        if (y.abs() - 1.0).abs() < 0.5 || y.abs() > 6.0 {
            continue;
        }
        let exact = ((y + 1.0) / (y - 1.0)).abs().ln() / PI;
        worst = worst.max((hf.value(k).re - exact).abs());
    }
    worst
}

#[test]
fn hilbert_transform_of_interval_converges_to_log_profile() {
    let coarse = hilbert_error(1024);
    let fine = hilbert_error(2048);
    println!("hilbert error {coarse:e} -> {fine:e}");
    assert!(fine < 1e-4, "{fine}");
    assert!(fine < 0.5 * coarse, "{coarse} -> {fine}");
}

/// `sup_{J,M} 2^{J(n/p+r)} (Σ_{x ∈ Q_{J,M}} |f(x)|^p h^n)^{1/p}` by direct
/// enumeration of every cube centre.
fn brute_force_morrey(f: &GridFunction, p: f64, r: f64, range: LevelRange) -> f64 {
    let spec = f.spec();
    let dim = spec.dim();
    let l = spec.half_width();
    let vol = spec.cell_volume();
    let mut best: f64 = 0.0;
    for level in range.levels() {
        let half = 2f64.powi(-level);
        let reach = (l / half).ceil() as i64 + 1;
        let offsets: Vec<[i64; 2]> = if dim == 1 {
            (-reach..=reach).map(|m| [m, 0]).collect()
        } else {
            (-reach..=reach)
                .flat_map(|a| (-reach..=reach).map(move |b| [a, b]))
                .collect()
        };
        for m in offsets {
            let mut mass = 0.0;
            for (k, x) in spec.nodes().enumerate() {
                if (0..dim).all(|a| (x[a] - m[a] as f64 * half).abs() < half) {
                    mass += f.value(k).norm().powf(p) * vol;
                }
            }
            let w = 2f64.powf(level as f64 * (dim as f64 / p + r));
            best = best.max(w * mass.powf(1.0 / p));
        }
    }
    best
}

fn random_function(spec: GridSpec, values: &[(f64, f64)]) -> GridFunction {
    GridFunction::new(spec, values.iter().map(|&(a, b)| Complex64::new(a, b)).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dyadic_norm_matches_cube_enumeration_on_line(
        values in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 64),
        p in 1.1..4.0f64,
        shape in 0.0..1.0f64,
    ) {
        let spec = GridSpec::new(1, 4.0, 64).unwrap();
        let r = -shape / p;
        prop_assume!(r < 0.0);
        let f = random_function(spec, &values);
        let range = LevelRange::default_for(&spec);
        let got = morrey_norm_dyadic(&f, &MorreyParams::new(p, r).unwrap(), None).unwrap().value;
        let reference = brute_force_morrey(&f, p, r, range);
        prop_assert!((got / reference - 1.0).abs() < 1e-12, "{got} vs {reference}");
    }

    #[test]
    fn dyadic_norm_matches_cube_enumeration_on_plane(
        values in proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 256),
        p in 1.1..4.0f64,
        shape in 0.0..1.0f64,
    ) {
        let spec = GridSpec::new(2, 2.0, 16).unwrap();
        let r = -2.0 * shape / p;
        prop_assume!(r < 0.0);
        let f = random_function(spec, &values);
        let range = LevelRange::default_for(&spec);
        let got = morrey_norm_dyadic(&f, &MorreyParams::new(p, r).unwrap(), None).unwrap().value;
        let reference = brute_force_morrey(&f, p, r, range);
        prop_assert!((got / reference - 1.0).abs() < 1e-12, "{got} vs {reference}");
    }
}
