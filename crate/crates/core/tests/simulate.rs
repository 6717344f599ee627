//! Gaussian field sampling: mode autocovariances, stationary moments, the
//! two samplers' laws, pointwise evaluation, and the increment-scaling probe.

use approx::assert_abs_diff_eq;
use voltorus_core::error::Error;
use voltorus_core::kernels::{tabulated_kernel, Kernel};
use voltorus_core::simulate::{
    analytic_second_moment, estimate_hoelder, estimate_moment, evaluate_field,
    mode_autocovariance, simulate_convolution, simulate_exact_gaussian, SimulationConfig,
    ZeroModePolicy,
};
use voltorus_core::spectrum::CovarianceSpectrum;
use voltorus_core::stats;

fn base_config(d: u32, n_max: u32, times: Vec<f64>, n_paths: usize, seed: u64) -> SimulationConfig {
    SimulationConfig {
        d,
        alpha: -1.0,
        n_max,
        time_grid: times,
        conv_dt: 1.0 / 64.0,
        memory_horizon: 13.0,
        n_paths,
        seed,
        zero_mode_policy: ZeroModePolicy::StationaryKernel,
    }
}

#[test]
fn autocovariance_pinned_values() {
    // Exp mode |n|^2 = m: rho(h) = e^{-(1+m)h} / (2(1+m)).
    let v = mode_autocovariance(&Kernel::Exp, 3.0, &[0.0]).unwrap();
    assert_abs_diff_eq!(v[0], 0.125, epsilon = 1e-14);
    let v = mode_autocovariance(&Kernel::Exp, 2.0, &[0.3]).unwrap();
    assert_abs_diff_eq!(v[0], (-0.9f64).exp() / 6.0, epsilon = 1e-14);
    // Constant kernel, m > 0: r = e^{-mt}, rho(h) = e^{-mh} / (2m).
    let v = mode_autocovariance(&Kernel::One, 4.0, &[0.0, 0.2]).unwrap();
    assert_abs_diff_eq!(v[0], 0.125, epsilon = 1e-14);
    assert_abs_diff_eq!(v[1], (-0.8f64).exp() / 8.0, epsilon = 1e-14);
    // TExp at m = 1 agrees with the direct squared integral.
    let v = mode_autocovariance(&Kernel::TExp, 1.0, &[0.0]).unwrap();
    assert_abs_diff_eq!(v[0], 0.125, epsilon = 1e-12);
}

#[test]
fn autocovariance_peaks_at_zero_lag() {
    let lags = [0.0, 0.05, 0.3, 0.8, 2.0, 5.0];
    for kernel in [Kernel::Exp, Kernel::TExp, Kernel::One] {
        for m in [0.5, 1.0, 7.0, 36.0] {
            let rho = mode_autocovariance(&kernel, m, &lags).unwrap();
            for (i, r) in rho.iter().enumerate() {
                assert!(
                    r.abs() <= rho[0] + 1e-14,
                    "{} m={m}: |rho({})| = {} > rho(0) = {}",
                    kernel.id(),
                    lags[i],
                    r.abs(),
                    rho[0]
                );
            }
        }
    }
}

#[test]
fn autocovariance_guards() {
    assert!(matches!(
        mode_autocovariance(&Kernel::Linear, 1.0, &[0.0]),
        Err(Error::NonIntegrableKernel(_))
    ));
    assert!(matches!(
        mode_autocovariance(&Kernel::One, 0.0, &[0.0]),
        Err(Error::NonIntegrableKernel(_))
    ));
    assert!(matches!(
        mode_autocovariance(&Kernel::Exp, 1.0, &[-0.5]),
        Err(Error::NegativeTime(_))
    ));
    assert!(matches!(
        mode_autocovariance(&Kernel::Exp, -1.0, &[0.0]),
        Err(Error::Config(_))
    ));
}

#[test]
fn tabulated_autocovariance_matches_closed_form() {
    let dt = 1e-3;
    let samples: Vec<f64> = (0..=40_000).map(|j| (-(j as f64) * dt).exp()).collect();
    let tab = tabulated_kernel(samples, dt, true).unwrap();
    let lags = [0.0, 0.25, 1.0];
    let got = mode_autocovariance(&tab, 2.0, &lags).unwrap();
    for (h, v) in lags.iter().zip(&got) {
        let exact = (-3.0 * h).exp() / 6.0;
        assert!(
            (v - exact).abs() <= 1e-5,
            "h = {h}: {v} vs closed form {exact}"
        );
    }
}

#[test]
fn analytic_moment_pinned_and_monotone() {
    // Single pair of modes at n = +-1, gamma = 1, L^2 norm (alpha = -1):
    // 2 gamma rho(0) = 2 / (2 (1+1)) = 1/2.
    let pair = CovarianceSpectrum::tabulated(1, 1, vec![(vec![1], 1.0), (vec![-1], 1.0)]);
    let v = analytic_second_moment(&Kernel::Exp, &pair, -1.0, 1).unwrap();
    assert_abs_diff_eq!(v, 0.5, epsilon = 1e-14);

    let none = CovarianceSpectrum::parametric(1, 8, 0.0, 1.0);
    assert_eq!(analytic_second_moment(&Kernel::Exp, &none, -1.0, 8).unwrap(), 0.0);

    // Raising any single weight raises the moment.
    let bumped = CovarianceSpectrum::tabulated(1, 1, vec![(vec![1], 1.5), (vec![-1], 1.5)]);
    let vb = analytic_second_moment(&Kernel::Exp, &bumped, -1.0, 1).unwrap();
    assert!(vb > v);

    let spec = CovarianceSpectrum::parametric(1, 4, 1.0, 1.0);
    assert!(matches!(
        analytic_second_moment(&Kernel::Exp, &spec, -1.0, 8),
        Err(Error::Config(_))
    ));
}

#[test]
fn white_noise_moment_diverges_with_truncation_in_d2() {
    // sum gamma /(1+|n|^2) over Z^2 grows without bound: the L^2 second
    // moment must keep climbing as the spectral ball widens.
    let spec = CovarianceSpectrum::white(2, 16, 1.0);
    let ladder: Vec<f64> = [2u32, 4, 8, 16]
        .iter()
        .map(|&n| analytic_second_moment(&Kernel::Exp, &spec, -1.0, n).unwrap())
        .collect();
    for w in ladder.windows(2) {
        assert!(w[1] > w[0]);
    }
    let inc: Vec<f64> = ladder.windows(2).map(|w| w[1] - w[0]).collect();
    assert!(
        inc[inc.len() - 1] > 0.5 * inc[0],
        "increments should not decay geometrically: {inc:?}"
    );
}

#[test]
fn zero_spectrum_samples_to_zero() {
    let spec = CovarianceSpectrum::parametric(1, 4, 0.0, 1.0);
    let config = base_config(1, 4, vec![0.0, 0.25, 0.5], 16, 7);
    let conv = simulate_convolution(&Kernel::Exp, &spec, &config).unwrap();
    assert!(conv.zero.iter().all(|&v| v == 0.0));
    assert!(conv.cos_coeff.iter().all(|&v| v == 0.0));
    assert!(conv.sin_coeff.iter().all(|&v| v == 0.0));
    for (mean, se) in estimate_moment(&conv, -1.0) {
        assert_eq!((mean, se), (0.0, 0.0));
    }
    let exact = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();
    assert!(exact.cos_coeff.iter().all(|&v| v == 0.0));
}

#[test]
fn samplers_are_deterministic_in_the_seed() {
    let spec = CovarianceSpectrum::parametric(1, 3, 1.0, 1.0);
    let config = base_config(1, 3, vec![0.0, 0.25], 8, 42);
    let a = simulate_convolution(&Kernel::Exp, &spec, &config).unwrap();
    let b = simulate_convolution(&Kernel::Exp, &spec, &config).unwrap();
    assert_eq!(a.zero, b.zero);
    assert_eq!(a.cos_coeff, b.cos_coeff);
    assert_eq!(a.sin_coeff, b.sin_coeff);

    let e1 = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();
    let e2 = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();
    assert_eq!(e1.cos_coeff, e2.cos_coeff);
    assert_eq!(e1.zero, e2.zero);

    let mut other = config.clone();
    other.seed = 43;
    let e3 = simulate_exact_gaussian(&Kernel::Exp, &spec, &other).unwrap();
    assert_ne!(e1.cos_coeff, e3.cos_coeff);
}

#[test]
fn exact_sampler_reproduces_mode_law() {
    let spec = CovarianceSpectrum::parametric(1, 4, 1.0, 1.0);
    let config = base_config(1, 4, vec![0.0, 0.125], 4000, 11);
    let ens = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();

    let j = ens.index.members.iter().position(|m| m.n == vec![1]).unwrap();
    let gamma = 0.5; // (1 + 1)^{-1}
    let rho0 = 0.25; // 1 / (2 (1+1))
    let var_target = 2.0 * gamma * rho0;

    let c0: Vec<f64> = (0..ens.n_paths()).map(|p| ens.cos_at(p, 0, j)).collect();
    let s0: Vec<f64> = (0..ens.n_paths()).map(|p| ens.sin_at(p, 0, j)).collect();
    for series in [&c0, &s0] {
        let v = stats::sample_variance(series);
        let se = stats::variance_se(series);
        assert!(
            (v - var_target).abs() <= 4.0 * se,
            "variance {v} vs {var_target} (se {se})"
        );
    }

    // Temporal covariance across the lag: 2 gamma rho(0.125).
    let c1: Vec<f64> = (0..ens.n_paths()).map(|p| ens.cos_at(p, 1, j)).collect();
    let cov = stats::sample_covariance(&c0, &c1);
    let cov_se = stats::covariance_se(&c0, &c1);
    let cov_target = 2.0 * gamma * (-2.0 * 0.125f64).exp() / 4.0;
    assert!(
        (cov - cov_target).abs() <= 4.0 * cov_se,
        "lag covariance {cov} vs {cov_target} (se {cov_se})"
    );

    // Zero mode: Var X_0 = gamma_0 rho_0(0) = 1/2.
    let z0: Vec<f64> = (0..ens.n_paths()).map(|p| ens.zero_at(p, 0)).collect();
    let v = stats::sample_variance(&z0);
    let se = stats::variance_se(&z0);
    assert!((v - 0.5).abs() <= 4.0 * se, "zero-mode variance {v} (se {se})");
}

#[test]
fn convolution_sampler_reproduces_stationary_variance() {
    let spec = CovarianceSpectrum::parametric(1, 2, 1.0, 1.0);
    let config = base_config(1, 2, vec![0.0], 3000, 19);
    let ens = simulate_convolution(&Kernel::Exp, &spec, &config).unwrap();
    let j = ens.index.members.iter().position(|m| m.n == vec![1]).unwrap();
    let series: Vec<f64> = (0..ens.n_paths()).map(|p| ens.cos_at(p, 0, j)).collect();
    let v = stats::sample_variance(&series);
    let se = stats::variance_se(&series);
    assert!(
        (v - 0.25).abs() <= 4.0 * se + 1e-3,
        "stationary variance {v} vs 0.25 (se {se})"
    );
    // Moment estimator vs the analytic stationary value.
    let analytic = analytic_second_moment(&Kernel::Exp, &spec, -1.0, 2).unwrap();
    let (mean, mse) = estimate_moment(&ens, -1.0)[0];
    assert!(
        (mean - analytic).abs() <= 4.0 * mse,
        "moment {mean} vs analytic {analytic} (se {mse})"
    );
}

#[test]
fn moment_se_shrinks_with_path_doubling() {
    let spec = CovarianceSpectrum::parametric(1, 2, 1.0, 1.0);
    let half = base_config(1, 2, vec![0.0], 400, 5);
    let mut full = half.clone();
    full.n_paths = 1600;
    let e_half = simulate_exact_gaussian(&Kernel::Exp, &spec, &half).unwrap();
    let e_full = simulate_exact_gaussian(&Kernel::Exp, &spec, &full).unwrap();
    let se_half = estimate_moment(&e_half, -1.0)[0].1;
    let se_full = estimate_moment(&e_full, -1.0)[0].1;
    // Quadrupling paths halves the standard error, up to sampling noise.
    let ratio = se_half / se_full;
    assert!(
        (1.4..=2.9).contains(&ratio),
        "se ratio {ratio} (half {se_half}, full {se_full})"
    );
}

#[test]
fn field_evaluation_and_grid_parseval() {
    let spec = CovarianceSpectrum::parametric(1, 4, 0.0, 1.0);
    let config = base_config(1, 4, vec![0.0], 1, 3);
    let mut ens = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();

    // Constant field from the zero coordinate alone.
    ens.zero[0] = 3.0;
    let thetas: Vec<Vec<f64>> = (0..8).map(|i| vec![-3.0 + 0.7 * i as f64]).collect();
    for v in evaluate_field(&ens, &thetas, 0, 0).unwrap() {
        assert_abs_diff_eq!(v, 3.0, epsilon = 1e-15);
    }

    // One cosine coordinate gives cos(theta) on top of the constant.
    let j = ens.index.members.iter().position(|m| m.n == vec![1]).unwrap();
    ens.cos_coeff[j] = 1.0;
    for (theta, v) in thetas.iter().zip(evaluate_field(&ens, &thetas, 0, 0).unwrap()) {
        assert_abs_diff_eq!(v, 3.0 + theta[0].cos(), epsilon = 1e-12);
    }

    // Fresh random coefficients: the uniform-grid mean of X^2 equals
    // X_0^2 + (1/2) sum (c^2 + s^2) exactly (trigonometric orthogonality).
    let spec = CovarianceSpectrum::parametric(1, 4, 1.0, 1.0);
    let ens = simulate_exact_gaussian(&Kernel::Exp, &spec, &config).unwrap();
    let mm = 32usize;
    let grid: Vec<Vec<f64>> = (0..mm)
        .map(|i| vec![-std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / mm as f64])
        .collect();
    let values = evaluate_field(&ens, &grid, 0, 0).unwrap();
    let lhs: f64 = values.iter().map(|v| v * v).sum::<f64>() / mm as f64;
    let rhs = ens.coefficient_norm(0, 0, 0.0).powi(2);
    assert_abs_diff_eq!(lhs, rhs, epsilon = 1e-12 * (1.0 + rhs));

    // Out-of-range requests are refused.
    assert!(matches!(
        evaluate_field(&ens, &grid, 1, 0),
        Err(Error::Config(_))
    ));
    assert!(matches!(
        evaluate_field(&ens, &[vec![0.0, 0.0]], 0, 0),
        Err(Error::Config(_))
    ));
}

#[test]
fn simulation_config_guards() {
    let spec = CovarianceSpectrum::parametric(1, 4, 1.0, 1.0);
    let ok = base_config(1, 4, vec![0.0, 0.25], 4, 1);

    let mut c = ok.clone();
    c.d = 4;
    assert!(matches!(
        simulate_exact_gaussian(&Kernel::Exp, &CovarianceSpectrum::parametric(4, 4, 1.0, 1.0), &c),
        Err(Error::Config(_))
    ));
    let mut c = ok.clone();
    c.d = 2;
    assert!(matches!(
        simulate_exact_gaussian(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));
    let mut c = ok.clone();
    c.n_max = 9;
    assert!(matches!(
        simulate_exact_gaussian(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));
    let mut c = ok.clone();
    c.n_paths = 0;
    assert!(matches!(
        simulate_exact_gaussian(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));
    let mut c = ok.clone();
    c.time_grid = vec![];
    assert!(matches!(
        simulate_exact_gaussian(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));
    let mut c = ok.clone();
    c.time_grid = vec![0.5, 0.5];
    assert!(matches!(
        simulate_exact_gaussian(&Kernel::Exp, &spec, &c),
        Err(Error::GridMismatch(_))
    ));
    let mut c = ok.clone();
    c.time_grid = (0..600).map(|k| k as f64 / 64.0).collect();
    assert!(matches!(
        simulate_exact_gaussian(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));

    // Convolution-specific grid discipline.
    let mut c = ok.clone();
    c.time_grid = vec![0.0, 0.3];
    assert!(matches!(
        simulate_convolution(&Kernel::Exp, &spec, &c),
        Err(Error::GridMismatch(_))
    ));
    let mut c = ok.clone();
    c.conv_dt = 0.5;
    assert!(matches!(
        simulate_convolution(&Kernel::Exp, &spec, &c),
        Err(Error::GridMismatch(_))
    ));
    let mut c = ok.clone();
    c.memory_horizon = 1.0;
    assert!(matches!(
        simulate_convolution(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));

    // A constant kernel has no stationary zero mode.
    assert!(matches!(
        simulate_convolution(&Kernel::One, &spec, &ok),
        Err(Error::NonIntegrableKernel(_))
    ));
    // Without spectral mass at the origin the same kernel samples fine.
    let no_origin = CovarianceSpectrum::tabulated(1, 1, vec![(vec![1], 1.0), (vec![-1], 1.0)]);
    let mut c = ok.clone();
    c.n_max = 1;
    simulate_convolution(&Kernel::One, &no_origin, &c).unwrap();
}

#[test]
fn increment_scaling_probe_smoke() {
    let spec = CovarianceSpectrum::parametric(1, 8, 1.0, 1.0);
    let mut config = base_config(1, 8, vec![], 300, 5);
    config.conv_dt = 1.0 / 1024.0;
    config.time_grid = vec![0.0, 1.0 / 256.0, 1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0];
    let rep = estimate_hoelder(&Kernel::Exp, &spec, &config).unwrap();
    assert_eq!(rep.lags.len(), 5);
    assert_eq!(rep.n_paths, 300);
    // Brownian-like increments of the truncated series: slope near 1.
    assert!(
        (rep.analytic_fit.slope - 1.0).abs() <= 0.2,
        "analytic slope {}",
        rep.analytic_fit.slope
    );
    assert!(
        (rep.mc_fit.slope - rep.analytic_fit.slope).abs() <= 0.35,
        "mc slope {} vs analytic {}",
        rep.mc_fit.slope,
        rep.analytic_fit.slope
    );
    assert_abs_diff_eq!(rep.eta_hat, rep.delta_hat / 2.0, epsilon = 1e-15);
    // Monte Carlo means must track the analytic series at every lag.
    for ((mc, se), an) in rep.mc_mean.iter().zip(&rep.mc_se).map(|(m, s)| (m, s)).zip(&rep.analytic)
    {
        assert!(
            (mc - an).abs() <= 5.0 * se,
            "increment moment {mc} vs analytic {an} (se {se})"
        );
    }
}

#[test]
fn increment_probe_guards() {
    let spec = CovarianceSpectrum::parametric(1, 8, 1.0, 1.0);
    // Too few lags.
    let mut c = base_config(1, 8, vec![0.0, 0.25, 0.5], 4, 1);
    c.conv_dt = 1.0 / 64.0;
    assert!(matches!(
        estimate_hoelder(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));
    // Non-dyadic ladder.
    let mut c = base_config(1, 8, vec![0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5], 4, 1);
    c.conv_dt = 1.0 / 64.0;
    assert!(matches!(
        estimate_hoelder(&Kernel::Exp, &spec, &c),
        Err(Error::Config(_))
    ));
    // The flat d = 2 spectrum fails the summability precondition.
    let white = CovarianceSpectrum::white(2, 8, 1.0);
    let mut c = base_config(2, 8, vec![], 4, 1);
    c.conv_dt = 1.0 / 1024.0;
    c.time_grid = vec![0.0, 1.0 / 256.0, 1.0 / 128.0, 1.0 / 64.0, 1.0 / 32.0, 1.0 / 16.0];
    assert!(matches!(
        estimate_hoelder(&Kernel::Exp, &white, &c),
        Err(Error::DivergentSpectrum(_))
    ));
}
