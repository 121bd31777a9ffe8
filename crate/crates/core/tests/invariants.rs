use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use morrey_core::grid::{FunctionExpr, GridFunction, GridSpec, LevelRange};
use morrey_core::norms::{morrey_norm_dyadic, MorreyParams, PredualParams};
use morrey_core::operators::{MultiplierSpec, OperatorSpec};
use morrey_core::properties as props;

fn line() -> GridSpec {
    GridSpec::new(1, 8.0, 128).unwrap()
}

fn plane() -> GridSpec {
    GridSpec::new(2, 4.0, 32).unwrap()
}

fn morrey() -> MorreyParams {
    MorreyParams::new(2.0, -0.25).unwrap()
}

fn predual() -> PredualParams {
    PredualParams::new(2.0, -0.75).unwrap()
}

fn leaf() -> impl Strategy<Value = FunctionExpr> {
    prop_oneof![
        (-4.0..3.0f64, 0.1..3.0f64).prop_map(|(a, w)| FunctionExpr::chi(a, a + w)),
        (-3.0..3.0f64, 0.2..2.0f64).prop_map(|(c, r)| FunctionExpr::bump(c, r)),
        (0.3..2.0f64).prop_map(FunctionExpr::gauss),
    ]
}

fn expr() -> impl Strategy<Value = FunctionExpr> {
    prop_oneof![
        leaf(),
        (leaf(), -1.0..1.0f64).prop_map(|(e, t)| e.translate(t)),
        (leaf(), 0.5..2.0f64).prop_map(|(e, s)| e.dilate(s)),
        (leaf(), leaf()).prop_map(|(a, b)| a.plus(b)),
    ]
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ball_norm_is_translation_invariant(f in expr(), seed in any::<u64>()) {
        let m = props::translation_invariance(&f, &line(), &morrey(), &mut rng(seed), 1e-9).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn norms_are_monotone(f in expr(), seed in any::<u64>()) {
        let m = props::monotonicity(&f, &line(), &morrey(), &mut rng(seed), 1e-12).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn norms_satisfy_triangle_inequality(f in expr(), seed in any::<u64>()) {
        let m = props::triangle_inequality(&f, &line(), &morrey(), &mut rng(seed), 1e-12).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn plane_norms_satisfy_triangle_inequality(f in expr(), seed in any::<u64>()) {
        let m = props::triangle_inequality(&f, &plane(), &morrey(), &mut rng(seed), 1e-12).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    // f(2·) on the half-size box has the same samples; every cube moves up
    // one level, so the norm picks up exactly 2^r.
    #[test]
    fn dyadic_norm_scales_exactly_under_grid_dilation(f in expr(), r in -0.5..-0.01f64) {
        let spec = line();
        let params = MorreyParams::new(2.0, r).unwrap();
        let range = LevelRange::default_for(&spec);
        let base = morrey_norm_dyadic(&GridFunction::sample(&f, &spec).unwrap(), &params, Some(range))
            .unwrap()
            .value;
        let half = spec.scaled(0.5).unwrap();
        let g = GridFunction::sample(&f.clone().dilate(2.0), &half).unwrap();
        let scaled = morrey_norm_dyadic(&g, &params, Some(range.shifted(1))).unwrap().value;
        prop_assert!((scaled / (2f64.powf(r) * base) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sequence_norm_is_monotone_in_q(seed in any::<u64>()) {
        let m = props::lq_monotonicity(&line(), &mut rng(seed), 1e-12).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn linear_operators_are_linear(f in expr(), seed in any::<u64>(), which in 0..3usize) {
        let spec = line();
        let op = [
            OperatorSpec::Hilbert { eps: spec.spacing() },
            OperatorSpec::Multiplier { symbol: MultiplierSpec::Interval { a: Some(-1.0), b: Some(2.0) } },
            OperatorSpec::BochnerRieszKernel { lambda: 0.5, eps: 0.0 },
        ][which].clone();
        let m = props::linearity(&op, &f, &spec, &mut rng(seed), 1e-9).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn maximal_operators_are_sublinear(f in expr(), seed in any::<u64>()) {
        let spec = line();
        let m = props::sublinearity(&OperatorSpec::Maximal, &f, &spec, &mut rng(seed), 1e-12).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn decomposition_reconstructs_bitwise(f in expr()) {
        let m = props::reconstruction(&f, &line(), &predual()).unwrap();
        prop_assert_eq!(m.value, 0.0);
    }

    #[test]
    fn atoms_are_normalized(f in expr()) {
        let m = props::atom_validity(&f, &line(), &predual(), 1e-12).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn decomposition_cost_shifts_with_scale(f in expr()) {
        let m = props::scale_shift(&f, &line(), &predual(), 1e-9).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn bracket_is_homogeneous(f in expr(), seed in any::<u64>()) {
        let m = props::homogeneity(&f, &line(), &predual(), &mut rng(seed), 1e-9).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn lower_bound_never_exceeds_upper(f in expr()) {
        let m = props::weak_duality(&f, &line(), &predual()).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }

    #[test]
    fn mollifier_is_nonexpansive_and_commutes_with_shifts(f in expr()) {
        let m = props::mollifier_invariants(&f, &line(), 2.0, 1e-12).unwrap();
        prop_assert!(m.pass, "{m:?}");
    }
}
