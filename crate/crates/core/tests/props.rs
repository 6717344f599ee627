//! Property tests: structural invariants that hold for all inputs, not just
//! the pinned examples.

use proptest::prelude::*;
use voltorus_core::green::{eval_gd, GdQuad, Normalization};
use voltorus_core::kernels::{solve_resolvent, Kernel};
use voltorus_core::lattice::build_index_set;
use voltorus_core::rng;
use voltorus_core::simulate::mode_autocovariance;
use voltorus_core::spectrum::sobolev_norm;
use voltorus_core::stats::ols;

fn builtin() -> impl Strategy<Value = Kernel> {
    prop_oneof![
        Just(Kernel::One),
        Just(Kernel::Linear),
        Just(Kernel::Exp),
        Just(Kernel::TExp),
    ]
}

proptest! {
    // mu = 0 decouples the memory term: the resolvent grid must reproduce
    // kernel samples bit for bit, whatever the grid geometry.
    #[test]
    fn mu_zero_collapses_to_kernel_samples(
        kernel in builtin(),
        steps in 1u32..200,
        dt_num in 1u32..40,
    ) {
        let dt = dt_num as f64 / 128.0;
        let horizon = steps as f64 * dt;
        let grid = solve_resolvent(&kernel, 0.0, dt, horizon).unwrap();
        prop_assert_eq!(grid.values.len(), steps as usize + 1);
        for (j, r) in grid.values.iter().enumerate() {
            prop_assert_eq!(*r, kernel.eval(j as f64 * dt).unwrap());
        }
    }

    #[test]
    fn sobolev_norm_scales_absolutely(
        coeffs in proptest::collection::vec(-10.0f64..10.0, 1..24),
        xi0 in -10.0f64..10.0,
        scale in -8.0f64..8.0,
        alpha in -2.0f64..2.0,
    ) {
        let the_d = 1 + (coeffs.len() as u32 % 3);
        let idx = build_index_set(the_d, 3);
        let take = coeffs.len().min(idx.members.len());
        let ms: Vec<u64> = idx.members[..take].iter().map(|m| m.m).collect();
        let xi1 = &coeffs[..take];
        let xi2: Vec<f64> = coeffs[..take].iter().map(|x| 0.5 - x).collect();
        let base = sobolev_norm(xi0, xi1, &xi2, &ms, alpha).unwrap();
        let s1: Vec<f64> = xi1.iter().map(|x| scale * x).collect();
        let s2: Vec<f64> = xi2.iter().map(|x| scale * x).collect();
        let scaled = sobolev_norm(scale * xi0, &s1, &s2, &ms, alpha).unwrap();
        prop_assert!((scaled - scale.abs() * base).abs() <= 1e-11 * (1.0 + base));
    }

    // Cauchy-Schwarz on the stationary mode covariance.
    #[test]
    fn autocovariance_dominated_by_variance(
        kernel in prop_oneof![Just(Kernel::Exp), Just(Kernel::TExp)],
        m in 0.0f64..100.0,
        h in 0.0f64..5.0,
    ) {
        let rho = mode_autocovariance(&kernel, m, &[0.0, h]).unwrap();
        prop_assert!(rho[1].abs() <= rho[0] + 1e-14);
    }

    // G_d is even: the quadrature must agree at x and -x.
    #[test]
    fn green_function_is_even(
        d in 1u32..=3,
        coords in proptest::collection::vec(-3.1f64..3.1, 3),
        printed in any::<bool>(),
    ) {
        let x: Vec<f64> = coords[..d as usize].to_vec();
        if d >= 2 && x.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let norm = if printed { Normalization::AsPrinted } else { Normalization::StandardHeat };
        let (a, _) = eval_gd(d, &x, GdQuad::default(), norm).unwrap();
        let (b, _) = eval_gd(d, &neg, GdQuad::default(), norm).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * (1.0 + a.abs()));
    }

    // Counter-addressed Gaussian streams: any splice of fill calls agrees
    // with one contiguous fill, and with per-index draws.
    #[test]
    fn normal_streams_are_position_addressed(
        seed in any::<u64>(),
        start in 0u64..1000,
        len in 1usize..96,
        cut in 0usize..96,
    ) {
        let key = rng::stream_key(rng::path_key(rng::root_key(seed), 2), 5);
        let cut = cut.min(len);
        let mut whole = vec![0.0f64; len];
        rng::fill_normals(key, start, &mut whole);
        let mut left = vec![0.0f64; cut];
        let mut right = vec![0.0f64; len - cut];
        rng::fill_normals(key, start, &mut left);
        rng::fill_normals(key, start + cut as u64, &mut right);
        let spliced: Vec<f64> = left.into_iter().chain(right).collect();
        prop_assert_eq!(&whole, &spliced);
        for (i, v) in whole.iter().enumerate() {
            prop_assert_eq!(*v, rng::normal_at(key, start + i as u64));
        }
    }

    // Exact data on a line is recovered exactly.
    #[test]
    fn ols_recovers_exact_lines(
        slope in -5.0f64..5.0,
        intercept in -5.0f64..5.0,
        n in 3usize..30,
    ) {
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * 0.25).collect();
        let ys: Vec<f64> = xs.iter().map(|x| slope * x + intercept).collect();
        let fit = ols(&xs, &ys).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 1e-9);
        prop_assert!((fit.intercept - intercept).abs() <= 1e-9);
        prop_assert!(fit.slope_se <= 1e-8);
    }
}
