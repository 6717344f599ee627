//! Ten-point acceptance battery. Each runner is self-contained (fixed
//! configuration, fixed seeds, fixed tolerances) so a report is reproducible
//! from the library alone; the `acceptance` test target asserts on these and
//! `voltorus repro` prints them.

use std::time::Instant;

use serde::Serialize;

use crate::admissibility::{check_hypothesis_h, estimate_cb};
use crate::error::{Error, Result};
use crate::green::{eval_gd, GdQuad, Normalization};
use crate::kernels::{max_error_vs_closed_form, solve_resolvent, Kernel};
use crate::simulate::{
    analytic_second_moment, estimate_hoelder, estimate_moment, simulate_convolution,
    simulate_exact_gaussian, FieldEnsemble, SimulationConfig, ZeroModePolicy,
};
use crate::spectrum::{
    parametric_regularity_decision, regularity_partial_sums, CovarianceSpectrum, Verdict,
};
use crate::stats::{
    covariance_se, ks_two_sample_pass, ols, sample_covariance, sample_variance, variance_se,
};
use crate::uniqueness::check_uniqueness_condition;

#[derive(Debug, Clone, Serialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub passed: bool,
    pub elapsed_s: f64,
    pub details: String,
}

impl CriterionReport {
    pub fn line(&self) -> String {
        format!(
            "criterion {:2} {:<44} {} [{:6.2}s] {}",
            self.id,
            self.name,
            if self.passed { "PASS" } else { "FAIL" },
            self.elapsed_s,
            self.details
        )
    }
}

fn run(
    id: u32,
    name: &str,
    cap_s: Option<f64>,
    body: impl FnOnce() -> Result<(bool, String)>,
) -> CriterionReport {
    let start = Instant::now();
    let outcome = body();
    let elapsed_s = start.elapsed().as_secs_f64();
    let (mut passed, mut details) = match outcome {
        Ok((ok, details)) => (ok, details),
        Err(e) => (false, format!("error: {e}")),
    };
    if let Some(cap) = cap_s {
        if elapsed_s >= cap {
            passed = false;
            details.push_str(&format!(
                "; runtime {elapsed_s:.2}s breaches the {cap:.0}s budget"
            ));
        }
    }
    CriterionReport {
        id,
        name: name.to_string(),
        passed,
        elapsed_s,
        details,
    }
}

/// Every builtin kernel and mu in {-1, -4, -25}: dt = 1e-3 on [0, 10] must
/// track the closed form within 1e-5, and halving dt must show order >= 1.9.
pub fn criterion_1() -> CriterionReport {
    run(1, "resolvent accuracy across the builtin catalog", Some(5.0), || {
        let mut worst_err = 0.0f64;
        let mut worst_case = String::new();
        let mut min_order = f64::INFINITY;
        let mut breaches = Vec::new();
        for kernel in [Kernel::One, Kernel::Linear, Kernel::Exp, Kernel::TExp] {
            for mu in [-1.0, -4.0, -25.0] {
                let coarse = solve_resolvent(&kernel, mu, 1e-3, 10.0)?;
                let fine = solve_resolvent(&kernel, mu, 5e-4, 10.0)?;
                let e1 = max_error_vs_closed_form(&kernel, &coarse)?;
                let e2 = max_error_vs_closed_form(&kernel, &fine)?;
                let order = (e1 / e2).log2();
                if e1 > worst_err {
                    worst_err = e1;
                    worst_case = format!("{} at mu={mu}", kernel.id());
                }
                min_order = min_order.min(order);
                if e1 > 1e-5 {
                    breaches.push(format!("{} at mu={mu}: {e1:.3e}", kernel.id()));
                }
            }
        }
        let ok = breaches.is_empty() && min_order >= 1.9;
        let mut details = format!(
            "worst max|err| {worst_err:.3e} ({worst_case}); min dt-halving order {min_order:.3}"
        );
        if !breaches.is_empty() {
            details.push_str(&format!(
                "; tolerance 1e-5 exceeded by: {}",
                breaches.join(", ")
            ));
        }
        Ok((ok, details))
    })
}

/// C_b for t e^{-t} must extrapolate to 1/4 within 1e-4 and flag convergence.
pub fn criterion_2() -> CriterionReport {
    run(2, "admissibility constant of the t e^{-t} kernel", Some(10.0), || {
        let rep = estimate_cb(&Kernel::TExp, 1024, 1e-6)?;
        let ok = (rep.cb_estimate - 0.25).abs() <= 1e-4 && rep.converged;
        Ok((
            ok,
            format!(
                "C_b = {:.8} (target 0.25 +- 1e-4), converged = {}",
                rep.cb_estimate, rep.converged
            ),
        ))
    })
}

/// C_b for e^{-t} is pegged to the quadrature/closed-form oracle value 1/2;
/// the report must still surface the commonly quoted value 1 with a note.
pub fn criterion_3() -> CriterionReport {
    run(3, "admissibility constant of the e^{-t} kernel", None, || {
        let rep = estimate_cb(&Kernel::Exp, 1024, 1e-6)?;
        let has_ref = rep.reference_value == Some(1.0) && rep.reference_note.is_some();
        let ok = (rep.cb_estimate - 0.5).abs() <= 1e-4 && rep.converged && has_ref;
        let note = rep
            .reference_note
            .clone()
            .unwrap_or_else(|| "reference note missing".into());
        Ok((
            ok,
            format!(
                "C_b = {:.8} (oracle 0.5 +- 1e-4), converged = {}; quoted value {:?}: {note}",
                rep.cb_estimate, rep.converged, rep.reference_value
            ),
        ))
    })
}

/// The partial-sum classifier must reproduce the closed-form dichotomy
/// 2(beta - alpha) > d on the 27-case parametric grid (boundary cases may
/// read divergent or inconclusive, never convergent), and the d=1, beta=1,
/// alpha=0 sums must approach pi*coth(pi).
pub fn criterion_4() -> CriterionReport {
    run(4, "regularity dichotomy on the parametric grid", Some(10.0), || {
        let ladder = |d: u32| -> Vec<u32> {
            match d {
                1 => vec![256, 512, 1024, 2048, 4096, 8192, 16384],
                2 => vec![16, 32, 64, 128, 256, 512],
                _ => vec![4, 8, 16, 32, 64, 128],
            }
        };
        let mut mismatches = Vec::new();
        let mut boundary_cases = 0;
        for d in 1..=3u32 {
            let levels = ladder(d);
            let n_top = *levels.last().unwrap();
            for alpha in [-1.0, 0.0, 1.0] {
                for beta in [0.0, 1.0, 2.0] {
                    let spec = CovarianceSpectrum::parametric(d, n_top, 1.0, beta);
                    let rep = regularity_partial_sums(&spec, alpha, &levels)?;
                    let on_boundary = 2.0 * (beta - alpha) == d as f64;
                    if on_boundary {
                        boundary_cases += 1;
                        if rep.verdict == Verdict::Convergent {
                            mismatches.push(format!(
                                "d={d} alpha={alpha} beta={beta}: convergent on the boundary"
                            ));
                        }
                    } else {
                        let expect = if parametric_regularity_decision(d, alpha, beta) {
                            Verdict::Convergent
                        } else {
                            Verdict::Divergent
                        };
                        if rep.verdict != expect {
                            mismatches.push(format!(
                                "d={d} alpha={alpha} beta={beta}: {} (expected {expect})",
                                rep.verdict
                            ));
                        }
                    }
                }
            }
        }
        let levels = ladder(1);
        let spec = CovarianceSpectrum::parametric(1, 16384, 1.0, 1.0);
        let rep = regularity_partial_sums(&spec, 0.0, &levels)?;
        let s_top = *rep.partial_sums.last().unwrap();
        let target = std::f64::consts::PI / std::f64::consts::PI.tanh();
        let dev = (s_top - target).abs();
        let ok = mismatches.is_empty() && dev <= 1e-3;
        let mut details = format!(
            "27-case grid: {} mismatches ({boundary_cases} boundary cases held non-convergent); \
             S(2^14) = {s_top:.6} vs pi*coth(pi) = {target:.6} (|diff| {dev:.2e} <= 1e-3)",
            mismatches.len()
        );
        if !mismatches.is_empty() {
            details.push_str(&format!("; {}", mismatches.join("; ")));
        }
        Ok((ok, details))
    })
}

/// Monte Carlo second moment vs the analytic series: d=1, e^{-t} kernel,
/// gamma_n = (1+n^2)^{-1}, alpha = -1, n_max = 32, 2000 paths; at least 4 of
/// 5 seeds must land within 3 standard errors.
pub fn criterion_5() -> CriterionReport {
    run(5, "stationary moment identity over five seeds", Some(60.0), || {
        let kernel = Kernel::Exp;
        let spec = CovarianceSpectrum::parametric(1, 32, 1.0, 1.0);
        let analytic = analytic_second_moment(&kernel, &spec, -1.0, 32)?;
        let mut passes = 0;
        let mut per_seed = Vec::new();
        for seed in 1..=5u64 {
            let config = SimulationConfig {
                d: 1,
                alpha: -1.0,
                n_max: 32,
                time_grid: vec![0.0, 0.1],
                conv_dt: 4e-4,
                memory_horizon: 12.0,
                n_paths: 2000,
                seed,
                zero_mode_policy: ZeroModePolicy::StationaryKernel,
            };
            let ens = simulate_convolution(&kernel, &spec, &config)?;
            let est = estimate_moment(&ens, -1.0);
            let (mean, se) = *est.last().unwrap();
            let hit = (mean - analytic).abs() <= 3.0 * se;
            if hit {
                passes += 1;
            }
            per_seed.push(format!(
                "seed {seed}: {mean:.4} +- {se:.4}{}",
                if hit { "" } else { " MISS" }
            ));
        }
        Ok((
            passes >= 4,
            format!(
                "analytic {analytic:.6}; {passes}/5 seeds within 3 SE [{}]",
                per_seed.join(", ")
            ),
        ))
    })
}

/// Convolution and exact-Gaussian samplers must agree in law: per-mode
/// variances and lag-1 covariances within 3 SE at 1e4 paths, plus a
/// two-sample KS test on one marginal at level 0.01.
pub fn criterion_6() -> CriterionReport {
    run(6, "law equivalence of the two samplers", Some(120.0), || {
        let kernel = Kernel::Exp;
        let spec = CovarianceSpectrum::parametric(1, 8, 1.0, 1.0);
        let base = SimulationConfig {
            d: 1,
            alpha: -1.0,
            n_max: 8,
            time_grid: (0..16).map(|k| k as f64 * 0.125).collect(),
            conv_dt: 1.0 / 512.0,
            memory_horizon: 12.0,
            n_paths: 10_000,
            seed: 2026,
            zero_mode_policy: ZeroModePolicy::StationaryKernel,
        };
        let conv = simulate_convolution(&kernel, &spec, &base)?;
        let mut exact_cfg = base.clone();
        exact_cfg.seed = 9102; // independent draws; the laws are what we compare
        let exact = simulate_exact_gaussian(&kernel, &spec, &exact_cfg)?;

        let m = conv.n_members();
        let paths = conv.n_paths();
        let collect = |ens: &FieldEnsemble, series: usize, k: usize| -> Vec<f64> {
            (0..paths)
                .map(|p| {
                    if series == 0 {
                        ens.zero_at(p, k)
                    } else if series <= m {
                        ens.cos_at(p, k, series - 1)
                    } else {
                        ens.sin_at(p, k, series - 1 - m)
                    }
                })
                .collect()
        };
        let name = |series: usize| -> String {
            if series == 0 {
                "zero".into()
            } else if series <= m {
                format!("cos n={:?}", conv.index.members[series - 1].n)
            } else {
                format!("sin n={:?}", conv.index.members[series - 1 - m].n)
            }
        };

        let mut tests = 0usize;
        let mut failures = Vec::new();
        for series in 0..(1 + 2 * m) {
            let a0 = collect(&conv, series, 0);
            let b0 = collect(&exact, series, 0);
            let a1 = collect(&conv, series, 1);
            let b1 = collect(&exact, series, 1);

            let va = sample_variance(&a0);
            let vb = sample_variance(&b0);
            let se = (variance_se(&a0).powi(2) + variance_se(&b0).powi(2)).sqrt();
            tests += 1;
            if (va - vb).abs() > 3.0 * se {
                failures.push(format!("{} variance: {va:.5} vs {vb:.5}", name(series)));
            }

            let ca = sample_covariance(&a0, &a1);
            let cb = sample_covariance(&b0, &b1);
            let se = (covariance_se(&a0, &a1).powi(2) + covariance_se(&b0, &b1).powi(2)).sqrt();
            tests += 1;
            if (ca - cb).abs() > 3.0 * se {
                failures.push(format!("{} lag-1 cov: {ca:.5} vs {cb:.5}", name(series)));
            }
        }

        let j1 = conv
            .index
            .members
            .iter()
            .position(|mb| mb.m == 1)
            .ok_or_else(|| Error::Config("n=1 member missing from the index set".into()))?;
        let (dstat, thresh, ks_pass) =
            ks_two_sample_pass(&collect(&conv, 1 + j1, 0), &collect(&exact, 1 + j1, 0), 0.01);

        let ok = failures.is_empty() && ks_pass;
        let mut details = format!(
            "{}/{tests} second-moment tests within 3 SE; KS on the n=1 cosine: D = {dstat:.5} \
             (threshold {thresh:.5})",
            tests - failures.len()
        );
        if !failures.is_empty() {
            details.push_str(&format!("; misses: {}", failures.join("; ")));
        }
        Ok((ok, details))
    })
}

/// Increment-variance slope over dyadic lags 2^{-10}..2^{-4}: the analytic
/// series must fit slope 1.0 +- 0.1 and the 2000-path Monte Carlo slope must
/// land inside the analytic fit's 95% band.
pub fn criterion_7() -> CriterionReport {
    run(7, "increment-variance slope (path regularity)", None, || {
        let kernel = Kernel::Exp;
        let spec = CovarianceSpectrum::parametric(1, 32, 1.0, 1.0);
        let mut grid = vec![0.0f64];
        grid.extend((-10..=-4).map(|j| 2f64.powi(j)));
        let config = SimulationConfig {
            d: 1,
            alpha: -1.0,
            n_max: 32,
            time_grid: grid,
            conv_dt: 2f64.powi(-12),
            memory_horizon: 12.0,
            n_paths: 2000,
            seed: 7,
            zero_mode_policy: ZeroModePolicy::StationaryKernel,
        };
        let rep = estimate_hoelder(&kernel, &spec, &config)?;
        let a = rep.analytic_fit.slope;
        let mc = rep.mc_fit.slope;
        let ok_analytic = (a - 1.0).abs() <= 0.1;
        let ok_mc = (mc - a).abs() <= rep.analytic_fit.band95;
        Ok((
            ok_analytic && ok_mc,
            format!(
                "analytic slope {a:.4} (target 1.0 +- 0.1; 95% band +- {:.4}); Monte Carlo \
                 slope {mc:.4} at {} paths; eta_hat = {:.3}",
                rep.analytic_fit.band95, rep.n_paths, rep.eta_hat
            ),
        ))
    })
}

/// Resolvent growth-bound scan for e^{-t} at delta = 1/2 over n <= 64 and
/// dyadic gaps: the supremum constant must stay below 0.8 (oracle 1/sqrt(2)
/// plus slack) with no growth trend.
pub fn criterion_8() -> CriterionReport {
    run(8, "resolvent growth-bound scan at delta = 1/2", None, || {
        let n_set: Vec<u32> = (1..=64).collect();
        let pairs: Vec<(f64, f64)> = (-10..=-3).map(|j| (1.0, 1.0 + 2f64.powi(j))).collect();
        let rep = check_hypothesis_h(&Kernel::Exp, 0.5, &n_set, &pairs)?;
        let ok = rep.satisfied && rep.c_delta <= 0.8;
        Ok((
            ok,
            format!(
                "C_delta = {:.6} (bound 0.8), satisfied = {}; trend across n {:.3}, across \
                 scale {:.3}",
                rep.c_delta, rep.satisfied, rep.trend_across_n, rep.trend_across_scale
            ),
        ))
    })
}

/// Mode-uniqueness separation: e^{-t} and t e^{-t} keep min distance >= 1,
/// the constant kernel violates exactly at (k, n) = (0, 0).
pub fn criterion_9() -> CriterionReport {
    run(9, "uniqueness condition over the builtin catalog", None, || {
        let exp = check_uniqueness_condition(&Kernel::Exp, 1, 64, 64, 1e-6)?;
        let texp = check_uniqueness_condition(&Kernel::TExp, 1, 64, 64, 1e-6)?;
        let one = check_uniqueness_condition(&Kernel::One, 1, 64, 64, 1e-6)?;
        let ok_exp = exp.holds && exp.min_distance >= 1.0 - 1e-9;
        let ok_texp = texp.holds && texp.min_distance >= 1.0 - 1e-9;
        let origin_violation = one.violations.iter().any(|v| v.k == 0 && v.n_abs2 == 0);
        let ok = ok_exp && ok_texp && !one.holds && origin_violation;
        Ok((
            ok,
            format!(
                "e^{{-t}}: min distance {:.9}, holds = {}; t e^{{-t}}: {:.9}, holds = {}; \
                 constant kernel violated at (k,n)=(0,0): {origin_violation}",
                exp.min_distance, exp.holds, texp.min_distance, texp.holds
            ),
        ))
    })
}

/// G_3 must decay like 1/|x| near the origin: log-log slope over
/// |x| in [1e-2, 1e-1] within -1 +- 0.1 under both normalizations.
pub fn criterion_10() -> CriterionReport {
    run(10, "Green-function short-distance power law, d=3", None, || {
        let mut parts = Vec::new();
        let mut ok = true;
        for norm in [Normalization::AsPrinted, Normalization::StandardHeat] {
            let mut lx = Vec::new();
            let mut ly = Vec::new();
            for j in 0..9 {
                let rho = 1e-2 * 10f64.powf(j as f64 / 8.0);
                let (v, _) = eval_gd(3, &[rho, 0.0, 0.0], GdQuad::default(), norm)?;
                lx.push(rho.ln());
                ly.push(v.ln());
            }
            let fit = ols(&lx, &ly)?;
            ok &= (fit.slope + 1.0).abs() <= 0.1;
            let label = match norm {
                Normalization::AsPrinted => "as-printed",
                Normalization::StandardHeat => "standard-heat",
            };
            parts.push(format!("{label} slope {:.4}", fit.slope));
        }
        Ok((ok, format!("{} (target -1 +- 0.1)", parts.join(", "))))
    })
}

pub fn run_criterion(id: u32) -> Option<CriterionReport> {
    match id {
        1 => Some(criterion_1()),
        2 => Some(criterion_2()),
        3 => Some(criterion_3()),
        4 => Some(criterion_4()),
        5 => Some(criterion_5()),
        6 => Some(criterion_6()),
        7 => Some(criterion_7()),
        8 => Some(criterion_8()),
        9 => Some(criterion_9()),
        10 => Some(criterion_10()),
        _ => None,
    }
}

pub fn run_all() -> Vec<CriterionReport> {
    (1..=10).map(|id| run_criterion(id).unwrap()).collect()
}
