//! Squared-resolvent integrals, the C_b limit, and the two-sided resolvent
//! growth scan: pinned closed-form values plus guard behavior.

use approx::assert_abs_diff_eq;
use voltorus_core::admissibility::{
    admissibility_curve, check_hypothesis_h, estimate_cb, squared_resolvent_integral, QuadParams,
};
use voltorus_core::error::Error;
use voltorus_core::kernels::{tabulated_kernel, Kernel};

#[test]
fn squared_integral_pinned_values() {
    // Exp mode m = 9: int e^{-20 s} ds = 1/20.
    let v = squared_resolvent_integral(&Kernel::Exp, 9.0, 1e-3, 1e-10).unwrap();
    assert_abs_diff_eq!(v, 0.05, epsilon = 1e-8);
    // TExp mode m = 1: int e^{-2s} sin^2 s ds = 1/8.
    let v = squared_resolvent_integral(&Kernel::TExp, 1.0, 1e-3, 1e-10).unwrap();
    assert_abs_diff_eq!(v, 0.125, epsilon = 1e-8);
    // Zero mode of Exp: int e^{-2s} ds = 1/2.
    let v = squared_resolvent_integral(&Kernel::Exp, 0.0, 1e-3, 1e-10).unwrap();
    assert_abs_diff_eq!(v, 0.5, epsilon = 1e-8);
}

#[test]
fn squared_integral_guards() {
    assert!(matches!(
        squared_resolvent_integral(&Kernel::One, 4.0, 1e-3, 1e-10),
        Err(Error::NonIntegrableKernel(_))
    ));
    assert!(matches!(
        squared_resolvent_integral(&Kernel::Linear, 4.0, 1e-3, 1e-10),
        Err(Error::NonIntegrableKernel(_))
    ));
    // Outer step too coarse for the requested mode.
    assert!(matches!(
        squared_resolvent_integral(&Kernel::Exp, 1000.0, 1e-3, 1e-10),
        Err(Error::StiffnessGuard { .. })
    ));
}

#[test]
fn curve_points_pinned_at_n_10() {
    let exp = admissibility_curve(&Kernel::Exp, &[10.0], QuadParams::default()).unwrap();
    assert_abs_diff_eq!(exp[0].i_n, 100.0 / 202.0, epsilon = 1e-6);
    let texp = admissibility_curve(&Kernel::TExp, &[10.0], QuadParams::default()).unwrap();
    assert_abs_diff_eq!(texp[0].i_n, 100.0 / 404.0, epsilon = 1e-6);
}

#[test]
fn exp_curve_increases_toward_limit() {
    let pts =
        admissibility_curve(&Kernel::Exp, &[2.0, 4.0, 8.0, 16.0, 32.0], QuadParams::default())
            .unwrap();
    for w in pts.windows(2) {
        assert!(w[1].i_n > w[0].i_n, "curve not increasing: {pts:?}");
    }
    assert!(pts.last().unwrap().i_n < 0.5);
    assert!(matches!(
        admissibility_curve(&Kernel::Exp, &[0.0], QuadParams::default()),
        Err(Error::Config(_))
    ));
}

#[test]
fn cb_estimates_converge_to_known_limits() {
    let exp = estimate_cb(&Kernel::Exp, 256, 1e-5).unwrap();
    assert!(exp.converged);
    assert_abs_diff_eq!(exp.cb_estimate, 0.5, epsilon = 1e-4);
    assert_eq!(exp.reference_value, Some(1.0));
    let note = exp.reference_note.as_deref().unwrap_or("");
    assert!(note.contains("factor-2"), "Exp note should flag the factor-2 discrepancy: {note}");

    let texp = estimate_cb(&Kernel::TExp, 256, 1e-5).unwrap();
    assert!(texp.converged);
    assert_abs_diff_eq!(texp.cb_estimate, 0.25, epsilon = 1e-4);
    assert_eq!(texp.reference_value, Some(0.25));

    assert!(matches!(
        estimate_cb(&Kernel::One, 64, 1e-5),
        Err(Error::NonIntegrableKernel(_))
    ));
    assert!(matches!(estimate_cb(&Kernel::Exp, 4, 1e-5), Err(Error::Config(_))));
}

#[test]
fn cb_estimate_stable_under_ladder_extension() {
    let a = estimate_cb(&Kernel::Exp, 128, 1e-5).unwrap();
    let b = estimate_cb(&Kernel::Exp, 256, 1e-5).unwrap();
    assert!(
        (a.cb_estimate - b.cb_estimate).abs() <= 1e-5,
        "ladder extension moved C_b: {} vs {}",
        a.cb_estimate,
        b.cb_estimate
    );
}

#[test]
fn tabulated_kernel_integral_matches_closed_form() {
    // Samples of e^{-t} on [0, 40]; the solver-backed quadrature must agree
    // with the closed form 1/(2(1+m)).
    let dt = 1e-3;
    let samples: Vec<f64> = (0..=40_000).map(|j| (-(j as f64) * dt).exp()).collect();
    let tab = tabulated_kernel(samples, dt, true).unwrap();
    for m in [1.0, 9.0, 100.0] {
        let v = squared_resolvent_integral(&tab, m, 1e-3, 1e-9).unwrap();
        let exact = 0.5 / (1.0 + m);
        assert!(
            (v - exact).abs() <= 1e-4,
            "m = {m}: {v} vs closed form {exact}"
        );
    }
}

fn dyadic_pairs() -> Vec<(f64, f64)> {
    (3..=10).map(|j| (1.0, 1.0 + 0.5f64.powi(j))).collect()
}

fn n_ladder() -> Vec<u32> {
    vec![1, 2, 4, 8, 16, 32, 64]
}

#[test]
fn growth_bounds_hold_for_exp_at_half() {
    let rep = check_hypothesis_h(&Kernel::Exp, 0.5, &n_ladder(), &dyadic_pairs()).unwrap();
    assert!(rep.satisfied, "note: {}", rep.note);
    // 2^{-1/2} plus scan slack.
    assert!(rep.c_delta <= 0.8, "C_delta = {}", rep.c_delta);
    assert!(rep.c_delta > 0.0);
    // Witnesses come from the scanned set.
    assert!(n_ladder().contains(&rep.witness_i.0));
    assert!(n_ladder().contains(&rep.witness_ii.0));
    // Sup curves must not grow toward large n or small gaps.
    assert!(rep.trend_across_n <= 0.1, "n-trend {}", rep.trend_across_n);
    assert!(rep.trend_across_scale <= 0.1, "scale trend {}", rep.trend_across_scale);
}

#[test]
fn coincident_pairs_contribute_nothing() {
    let mut pairs = dyadic_pairs();
    let base = check_hypothesis_h(&Kernel::Exp, 0.5, &n_ladder(), &pairs).unwrap();
    pairs.push((1.0, 1.0));
    pairs.push((0.25, 0.25));
    let padded = check_hypothesis_h(&Kernel::Exp, 0.5, &n_ladder(), &pairs).unwrap();
    assert_eq!(base.c_delta, padded.c_delta);
    assert_eq!(base.sup_per_scale.len(), padded.sup_per_scale.len());
}

#[test]
fn sharper_exponent_costs_a_larger_constant() {
    let half = check_hypothesis_h(&Kernel::Exp, 0.5, &n_ladder(), &dyadic_pairs()).unwrap();
    let tight = check_hypothesis_h(&Kernel::Exp, 0.99, &n_ladder(), &dyadic_pairs()).unwrap();
    assert!(tight.satisfied, "note: {}", tight.note);
    assert!(
        tight.c_delta > half.c_delta,
        "delta = 0.99 constant {} should exceed delta = 0.5 constant {}",
        tight.c_delta,
        half.c_delta
    );
}

#[test]
fn hypothesis_scan_guards() {
    let pairs = dyadic_pairs();
    for bad_delta in [0.0, 1.0, -0.5, 1.5] {
        assert!(matches!(
            check_hypothesis_h(&Kernel::Exp, bad_delta, &n_ladder(), &pairs),
            Err(Error::Config(_))
        ));
    }
    assert!(matches!(
        check_hypothesis_h(&Kernel::Exp, 0.5, &[], &pairs),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        check_hypothesis_h(&Kernel::Exp, 0.5, &[0, 1], &pairs),
        Err(Error::Config(_))
    ));
    // Too narrow a scale ladder.
    assert!(matches!(
        check_hypothesis_h(&Kernel::Exp, 0.5, &n_ladder(), &[(1.0, 1.25), (1.0, 1.5)]),
        Err(Error::Config(_))
    ));
    // Reversed pair.
    assert!(matches!(
        check_hypothesis_h(&Kernel::Exp, 0.5, &n_ladder(), &[(2.0, 1.0)]),
        Err(Error::Config(_))
    ));
    // Closed-form scan cannot run on tabulated data.
    let tab = tabulated_kernel(vec![1.0, 0.5, 0.25], 0.5, true).unwrap();
    assert!(matches!(
        check_hypothesis_h(&tab, 0.5, &n_ladder(), &pairs),
        Err(Error::Config(_))
    ));
}
