//! One function per subcommand: resolve the merged configuration, call the
//! library, write the artifact, and return the one-line summary.

use std::path::PathBuf;

use serde::Serialize;

use voltorus_core::io;
use voltorus_core::stats;
use voltorus_core::suite;
use voltorus_core::uniqueness::check_uniqueness_condition_with_route;
use voltorus_core::{
    check_hypothesis_h, check_uniqueness_condition, estimate_cb, estimate_hoelder,
    estimate_moment, eval_gd, pairing_gamma_gd, regularity_partial_sums, resolvent_residual,
    simulate_convolution, simulate_exact_gaussian, solve_resolvent, Error, GdQuad, PairingParams,
    Result, SimulationConfig,
};

use crate::config::{
    need, opt, pick, pick_enum, resolve_kernel, resolve_spectrum, FileCfg, FormatArg, NormArg,
    RouteArg, SchemeArg, ZeroModeArg,
};
use crate::{
    AdmissibilityArgs, GdArgs, HoelderArgs, HypothesisHArgs, PairingArgs, RegularityArgs,
    ReproArgs, ResolventArgs, SimulateArgs, SobolevArgs, UniquenessArgs,
};

pub struct Outcome {
    pub summary: String,
    pub exit: i32,
}

impl Outcome {
    fn ok(summary: String) -> Self {
        Outcome { summary, exit: 0 }
    }
}

fn artifact_path(flag: Option<PathBuf>, file: Option<PathBuf>, default_name: &str) -> PathBuf {
    flag.or(file).unwrap_or_else(|| PathBuf::from(default_name))
}

#[derive(Serialize)]
struct ResolventArtifact {
    kernel: String,
    mu: f64,
    dt: f64,
    horizon: f64,
    max_residual: f64,
    t: Vec<f64>,
    r: Vec<f64>,
}

pub fn resolvent(a: ResolventArgs, f: &FileCfg) -> Result<Outcome> {
    let kernel = resolve_kernel(&need(a.kernel, f.kernel.clone(), "kernel")?)?;
    let mu = need(a.mu, f.mu, "mu")?;
    let dt = pick(a.dt, f.dt, 1e-3);
    let horizon = pick(a.horizon, f.horizon, 10.0);
    let format = pick_enum(a.format, f.format.as_deref(), "format", FormatArg::Csv)?;
    let out = artifact_path(a.output, f.output.clone(), &format!("resolvent.{}", format.ext()));

    let grid = solve_resolvent(&kernel, mu, dt, horizon)?;
    let residual = resolvent_residual(&kernel, &grid)?;
    match format {
        FormatArg::Csv => io::write_resolvent_csv(&out, &grid)?,
        FormatArg::Json => io::write_json(
            &out,
            &ResolventArtifact {
                kernel: kernel.id().to_string(),
                mu,
                dt,
                horizon,
                max_residual: residual,
                t: (0..grid.values.len()).map(|j| grid.t(j)).collect(),
                r: grid.values.clone(),
            },
        )?,
    }
    Ok(Outcome::ok(format!(
        "resolvent {} mu={mu}: {} nodes on [0, {horizon}], max residual {residual:.3e} -> {}",
        kernel.id(),
        grid.values.len(),
        out.display()
    )))
}

pub fn admissibility(a: AdmissibilityArgs, f: &FileCfg) -> Result<Outcome> {
    let kernel = resolve_kernel(&need(a.kernel, f.kernel.clone(), "kernel")?)?;
    let n_max = pick(a.n_max, f.n_max, 1024);
    let tol = pick(a.tol, f.tol, 1e-6);
    let out = artifact_path(a.output, f.output.clone(), "admissibility.json");

    let rep = estimate_cb(&kernel, n_max, tol)?;
    io::write_json(&out, &rep)?;
    let quoted = match rep.reference_value {
        Some(v) => format!(", commonly quoted {v} (note in artifact)"),
        None => String::new(),
    };
    Ok(Outcome::ok(format!(
        "C_b \u{2248} {:.4} ({}); kernel {}, n_max {n_max}, I(n_max) = {:.6}{quoted} -> {}",
        rep.cb_estimate,
        if rep.converged { "converged" } else { "not converged" },
        kernel.id(),
        rep.points.last().map_or(f64::NAN, |p| p.i_n),
        out.display()
    )))
}

pub fn hypothesis_h(a: HypothesisHArgs, f: &FileCfg) -> Result<Outcome> {
    let kernel = resolve_kernel(&need(a.kernel, f.kernel.clone(), "kernel")?)?;
    let delta = pick(a.delta, f.delta, 0.5);
    let n_max = pick(a.n_max, f.n_max, 64);
    let t0 = pick(a.t0, f.t0, 1.0);
    let j_min = pick(a.gap_min_exp, f.gap_min_exp, -10);
    let j_max = pick(a.gap_max_exp, f.gap_max_exp, -3);
    if j_min > j_max {
        return Err(Error::Config(format!(
            "--gap-min-exp {j_min} exceeds --gap-max-exp {j_max}"
        )));
    }
    let out = artifact_path(a.output, f.output.clone(), "hypothesis_h.json");

    let n_set: Vec<u32> = (1..=n_max).collect();
    let pairs: Vec<(f64, f64)> = (j_min..=j_max).map(|j| (t0, t0 + 2f64.powi(j))).collect();
    let rep = check_hypothesis_h(&kernel, delta, &n_set, &pairs)?;
    io::write_json(&out, &rep)?;
    Ok(Outcome::ok(format!(
        "hypothesis growth bounds: C_delta = {:.6}, satisfied = {}; kernel {}, delta = {delta}, \
         n <= {n_max}, gaps 2^{j_min}..2^{j_max} -> {}",
        rep.c_delta,
        rep.satisfied,
        kernel.id(),
        out.display()
    )))
}

/// Dyadic ladder ending at `n_top`: 7 levels in d = 1, 6 otherwise, matching
/// the per-dimension cost of each partial sum.
fn default_ladder(n_top: u32, d: u32) -> Vec<u32> {
    let halvings = if d == 1 { 6 } else { 5 };
    let mut lv: Vec<u32> = (0..=halvings)
        .rev()
        .map(|j| n_top >> j)
        .filter(|&x| x >= 1)
        .collect();
    lv.dedup();
    lv
}

pub fn regularity(a: RegularityArgs, f: &FileCfg) -> Result<Outcome> {
    let token = pick(a.spectrum, f.spectrum.clone(), "parametric".into());
    let c = pick(a.c, f.c, 1.0);
    let choice = resolve_spectrum(
        &token,
        opt(a.d, f.d),
        opt(a.n_max, f.n_max),
        c,
        opt(a.beta, f.beta),
        None,
        |d| match d {
            1 => 16384,
            2 => 512,
            _ => 128,
        },
    )?;
    let alpha = need(a.alpha, f.alpha, "alpha")?;
    let levels = pick(a.levels, f.levels.clone(), default_ladder(choice.n_max, choice.d));
    if levels.len() < 4 {
        return Err(Error::Config(
            "truncation ladder needs >= 4 distinct ascending levels; pass --levels".into(),
        ));
    }
    let out = artifact_path(a.output, f.output.clone(), "regularity.json");

    let rep = regularity_partial_sums(&choice.spec, alpha, &levels)?;
    io::write_json(&out, &rep)?;
    Ok(Outcome::ok(format!(
        "regularity verdict {}; d = {}, alpha = {alpha}, {}, S({}) = {:.6} -> {}",
        rep.verdict,
        choice.d,
        choice.desc,
        levels.last().unwrap(),
        rep.partial_sums.last().unwrap(),
        out.display()
    )))
}

#[derive(Serialize)]
struct SobolevArtifact {
    ensemble: String,
    alpha: f64,
    t: Vec<f64>,
    mean_norm: Vec<f64>,
    se: Vec<f64>,
}

pub fn sobolev(a: SobolevArgs, f: &FileCfg) -> Result<Outcome> {
    let ens_path = need(a.ensemble, f.ensemble.clone(), "ensemble")?;
    let ens = io::read_ensemble(&ens_path)?;
    let alpha = pick(a.alpha, f.alpha, ens.meta.alpha + 1.0);
    let format = pick_enum(a.format, f.format.as_deref(), "format", FormatArg::Csv)?;
    let out = artifact_path(a.output, f.output.clone(), &format!("sobolev.{}", format.ext()));

    let mut t = Vec::with_capacity(ens.n_times());
    let mut mean_norm = Vec::with_capacity(ens.n_times());
    let mut se = Vec::with_capacity(ens.n_times());
    for k in 0..ens.n_times() {
        let norms: Vec<f64> = (0..ens.n_paths())
            .map(|p| ens.coefficient_norm(p, k, alpha))
            .collect();
        let (m, s) = stats::mean_se(&norms);
        t.push(ens.meta.time_grid[k]);
        mean_norm.push(m);
        se.push(s);
    }
    match format {
        FormatArg::Csv => {
            let rows: Vec<Vec<f64>> = (0..t.len())
                .map(|k| vec![t[k], mean_norm[k], se[k]])
                .collect();
            io::write_table_csv(&out, &["t", "mean_norm", "se"], &rows)?;
        }
        FormatArg::Json => io::write_json(
            &out,
            &SobolevArtifact {
                ensemble: ens_path.display().to_string(),
                alpha,
                t: t.clone(),
                mean_norm: mean_norm.clone(),
                se: se.clone(),
            },
        )?,
    }
    Ok(Outcome::ok(format!(
        "sobolev H^{alpha} norm: mean {:.6} +- {:.3e} at t = {}; {} paths x {} times -> {}",
        mean_norm.last().unwrap(),
        se.last().unwrap(),
        t.last().unwrap(),
        ens.n_paths(),
        ens.n_times(),
        out.display()
    )))
}

#[derive(Serialize)]
struct GdArtifact {
    d: u32,
    normalization: voltorus_core::Normalization,
    rho: Vec<f64>,
    g: Vec<f64>,
    err_est: Vec<f64>,
    loglog_slope: f64,
}

pub fn gd(a: GdArgs, f: &FileCfg) -> Result<Outcome> {
    let d = need(a.d, f.d, "d")?;
    let rho_min = pick(a.rho_min, f.rho_min, 1e-2);
    let rho_max = pick(a.rho_max, f.rho_max, 1e-1);
    let count = pick(a.count, f.count, 9);
    if count < 2 {
        return Err(Error::Config(format!("--count must be >= 2, got {count}")));
    }
    if !(rho_min > 0.0 && rho_min < rho_max && rho_max.is_finite()) {
        return Err(Error::Config(format!(
            "--rho-min/--rho-max must satisfy 0 < {rho_min} < {rho_max}"
        )));
    }
    let norm = pick_enum(a.norm, f.norm.as_deref(), "norm", NormArg::AsPrinted)?;
    let quad = GdQuad {
        lattice_cut: pick(a.lattice_cut, f.lattice_cut, 3),
        ustep: pick(a.ustep, f.ustep, 0.05),
    };
    let format = pick_enum(a.format, f.format.as_deref(), "format", FormatArg::Csv)?;
    let out = artifact_path(a.output, f.output.clone(), &format!("gd.{}", format.ext()));

    let mut rho = Vec::with_capacity(count);
    let mut g = Vec::with_capacity(count);
    let mut err_est = Vec::with_capacity(count);
    for i in 0..count {
        let r = rho_min * (rho_max / rho_min).powf(i as f64 / (count - 1) as f64);
        let mut x = vec![0.0f64; d as usize];
        x[0] = r;
        let (v, e) = eval_gd(d, &x, quad, norm.core())?;
        rho.push(r);
        g.push(v);
        err_est.push(e);
    }
    let lx: Vec<f64> = rho.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = g.iter().map(|v| v.ln()).collect();
    let slope = stats::ols(&lx, &ly)?.slope;

    match format {
        FormatArg::Csv => {
            let rows: Vec<Vec<f64>> = (0..count)
                .map(|i| vec![rho[i], g[i], err_est[i]])
                .collect();
            io::write_table_csv(&out, &["rho", "g", "err_est"], &rows)?;
        }
        FormatArg::Json => io::write_json(
            &out,
            &GdArtifact {
                d,
                normalization: norm.core(),
                rho,
                g,
                err_est,
                loglog_slope: slope,
            },
        )?,
    }
    Ok(Outcome::ok(format!(
        "G_{d} ({}): log-log slope {slope:.4} over {count} radii in [{rho_min:e}, {rho_max:e}] \
         -> {}",
        norm.token(),
        out.display()
    )))
}

pub fn pairing(a: PairingArgs, f: &FileCfg) -> Result<Outcome> {
    let token = pick(a.spectrum, f.spectrum.clone(), "parametric".into());
    let c = pick(a.c, f.c, 1.0);
    let norm = pick_enum(a.norm, f.norm.as_deref(), "norm", NormArg::AsPrinted)?;
    let choice = resolve_spectrum(
        &token,
        opt(a.d, f.d),
        opt(a.n_max, f.n_max),
        c,
        opt(a.beta, f.beta),
        None,
        |d| match d {
            1 => 32,
            2 => 16,
            _ => 8,
        },
    )?;
    let defaults = PairingParams::for_dimension(choice.d, norm.core());
    let params = PairingParams {
        levels: pick(a.levels, f.levels.clone(), defaults.levels),
        grid_mult: pick(a.grid_mult, f.grid_mult, defaults.grid_mult),
        quad: GdQuad {
            lattice_cut: pick(a.lattice_cut, f.lattice_cut, defaults.quad.lattice_cut),
            ustep: pick(a.ustep, f.ustep, defaults.quad.ustep),
        },
        normalization: norm.core(),
    };
    let out = artifact_path(a.output, f.output.clone(), "pairing.json");

    let rep = pairing_gamma_gd(&choice.spec, &params)?;
    io::write_json(&out, &rep)?;
    let value = match rep.value {
        Some(v) => format!("{v:.6}"),
        None => "n/a".into(),
    };
    Ok(Outcome::ok(format!(
        "pairing <Gamma, G_{}> ({}): verdict {}, value {value}; {} -> {}",
        choice.d,
        norm.token(),
        rep.verdict,
        choice.desc,
        out.display()
    )))
}

/// Shared simulation-config assembly for `simulate` and `hoelder`.
struct SimSetup {
    kernel: voltorus_core::Kernel,
    spec: voltorus_core::CovarianceSpectrum,
    config: SimulationConfig,
    desc: String,
}

#[allow(clippy::too_many_arguments)]
fn sim_setup(
    kernel: Option<String>,
    spectrum: Option<String>,
    c: Option<f64>,
    beta: Option<f64>,
    d: Option<u32>,
    alpha: Option<f64>,
    n_max: Option<u32>,
    time_grid: Vec<f64>,
    conv_dt: f64,
    memory_horizon: f64,
    n_paths: usize,
    seed: u64,
    zero_mode: ZeroModeArg,
    f: &FileCfg,
) -> Result<SimSetup> {
    let kernel = resolve_kernel(&need(kernel, f.kernel.clone(), "kernel")?)?;
    let token = pick(spectrum, f.spectrum.clone(), "parametric".into());
    let choice = resolve_spectrum(
        &token,
        opt(d, f.d),
        opt(n_max, f.n_max),
        pick(c, f.c, 1.0),
        opt(beta, f.beta),
        Some(1),
        |_| 32,
    )?;
    let config = SimulationConfig {
        d: choice.d,
        alpha: pick(alpha, f.alpha, -1.0),
        n_max: choice.n_max,
        time_grid,
        conv_dt,
        memory_horizon,
        n_paths,
        seed,
        zero_mode_policy: zero_mode.core(),
    };
    Ok(SimSetup {
        kernel,
        spec: choice.spec,
        desc: choice.desc,
        config,
    })
}

pub fn simulate(a: SimulateArgs, f: &FileCfg) -> Result<Outcome> {
    let times = match opt(a.times, f.times.clone()) {
        Some(ts) => {
            if ts.is_empty() {
                return Err(Error::Config("--times must be a nonempty list".into()));
            }
            ts
        }
        None => {
            let t_max = pick(a.t_max, f.t_max, 1.0);
            let t_count = pick(a.t_count, f.t_count, 17);
            if t_count < 2 {
                return Err(Error::Config(format!("--t-count must be >= 2, got {t_count}")));
            }
            if !(t_max > 0.0 && t_max.is_finite()) {
                return Err(Error::Config(format!("--t-max must be > 0, got {t_max}")));
            }
            (0..t_count)
                .map(|j| t_max * j as f64 / (t_count - 1) as f64)
                .collect()
        }
    };
    let scheme = pick_enum(a.scheme, f.scheme.as_deref(), "scheme", SchemeArg::Convolution)?;
    let zero_mode = pick_enum(a.zero_mode, f.zero_mode.as_deref(), "zero-mode", ZeroModeArg::Stationary)?;
    let setup = sim_setup(
        a.kernel,
        a.spectrum,
        a.c,
        a.beta,
        a.d,
        a.alpha,
        a.n_max,
        times,
        pick(a.conv_dt, f.conv_dt, 2f64.powi(-12)),
        pick(a.memory_horizon, f.memory_horizon, 12.0),
        pick(a.paths, f.paths, 2000),
        pick(a.seed, f.seed, 1),
        zero_mode,
        f,
    )?;
    let out = artifact_path(a.output, f.output.clone(), "ensemble.vfe");
    let moments_out = a
        .moments
        .or(f.moments.clone())
        .unwrap_or_else(|| out.with_extension("moments.csv"));

    let ens = match scheme {
        SchemeArg::Convolution => simulate_convolution(&setup.kernel, &setup.spec, &setup.config)?,
        SchemeArg::Exact => simulate_exact_gaussian(&setup.kernel, &setup.spec, &setup.config)?,
    };
    io::write_ensemble(&out, &ens)?;
    let moments = estimate_moment(&ens, setup.config.alpha);
    let rows: Vec<Vec<f64>> = ens
        .meta
        .time_grid
        .iter()
        .zip(&moments)
        .map(|(&t, &(m, s))| vec![t, m, s])
        .collect();
    io::write_table_csv(&moments_out, &["t", "mean_sq_norm", "se"], &rows)?;

    let (last_mean, last_se) = *moments.last().unwrap();
    let scheme_token = match scheme {
        SchemeArg::Convolution => "convolution",
        SchemeArg::Exact => "exact",
    };
    Ok(Outcome::ok(format!(
        "simulate {scheme_token} kernel {}: {} paths x {} times, seed {}; E||X(t)||^2 in H^{} = \
         {last_mean:.4} +- {last_se:.4} at t = {}; {} -> {} (moments -> {})",
        setup.kernel.id(),
        ens.n_paths(),
        ens.n_times(),
        setup.config.seed,
        setup.config.alpha + 1.0,
        ens.meta.time_grid.last().unwrap(),
        setup.desc,
        out.display(),
        moments_out.display()
    )))
}

pub fn hoelder(a: HoelderArgs, f: &FileCfg) -> Result<Outcome> {
    let t0 = pick(a.t0, f.t0, 0.0);
    let j_min = pick(a.lag_min_exp, f.lag_min_exp, -10);
    let j_max = pick(a.lag_max_exp, f.lag_max_exp, -4);
    if j_min > j_max {
        return Err(Error::Config(format!(
            "--lag-min-exp {j_min} exceeds --lag-max-exp {j_max}"
        )));
    }
    let mut grid = vec![t0];
    grid.extend((j_min..=j_max).map(|j| t0 + 2f64.powi(j)));
    let zero_mode = pick_enum(a.zero_mode, f.zero_mode.as_deref(), "zero-mode", ZeroModeArg::Stationary)?;
    let setup = sim_setup(
        a.kernel,
        a.spectrum,
        a.c,
        a.beta,
        a.d,
        a.alpha,
        a.n_max,
        grid,
        pick(a.conv_dt, f.conv_dt, 2f64.powi(-12)),
        pick(a.memory_horizon, f.memory_horizon, 12.0),
        pick(a.paths, f.paths, 2000),
        pick(a.seed, f.seed, 7),
        zero_mode,
        f,
    )?;
    let out = artifact_path(a.output, f.output.clone(), "hoelder.json");

    let rep = estimate_hoelder(&setup.kernel, &setup.spec, &setup.config)?;
    io::write_json(&out, &rep)?;
    Ok(Outcome::ok(format!(
        "hoelder exponents: delta_hat = {:.4}, eta_hat = {:.4} (analytic slope {:.4} +- {:.4}); \
         kernel {}, {} paths -> {}",
        rep.delta_hat,
        rep.eta_hat,
        rep.analytic_fit.slope,
        rep.analytic_fit.band95,
        setup.kernel.id(),
        rep.n_paths,
        out.display()
    )))
}

pub fn uniqueness(a: UniquenessArgs, f: &FileCfg) -> Result<Outcome> {
    let kernel = resolve_kernel(&need(a.kernel, f.kernel.clone(), "kernel")?)?;
    let d = pick(a.d, f.d, 1);
    let k_max = pick(a.k_max, f.k_max, 64);
    let n_max = pick(a.n_max, f.n_max, 64);
    let tol = pick(a.tol, f.tol, 1e-6);
    let route = pick_enum(a.route, f.route.as_deref(), "route", RouteArg::Auto)?;
    let out = artifact_path(a.output, f.output.clone(), "uniqueness.json");

    let rep = match route.core() {
        None => check_uniqueness_condition(&kernel, d, k_max, n_max, tol)?,
        Some(r) => check_uniqueness_condition_with_route(&kernel, d, k_max, n_max, tol, r)?,
    };
    io::write_json(&out, &rep)?;
    Ok(Outcome::ok(format!(
        "uniqueness holds = {}; kernel {}, min |1/b~(ik) + |n|^2| = {:.6} at (k, |n|^2) = \
         ({}, {}), {} violations -> {}",
        rep.holds,
        kernel.id(),
        rep.min_distance,
        rep.min_at.0,
        rep.min_at.1,
        rep.violations.len(),
        out.display()
    )))
}

pub fn repro(a: ReproArgs, f: &FileCfg) -> Result<Outcome> {
    let ids = pick(a.ids, f.ids.clone(), (1..=10).collect());
    if ids.is_empty() {
        return Err(Error::Config("--ids must name at least one criterion".into()));
    }
    if let Some(bad) = ids.iter().find(|id| !(1..=10).contains(*id)) {
        return Err(Error::Config(format!(
            "--ids entries must lie in 1..=10, got {bad}"
        )));
    }
    let out = artifact_path(a.output, f.output.clone(), "repro.json");

    let mut reports = Vec::with_capacity(ids.len());
    for id in &ids {
        let rep = suite::run_criterion(*id).expect("ids validated above");
        println!("{}", rep.line());
        reports.push(rep);
    }
    let passed = reports.iter().filter(|r| r.passed).count();
    // Timings vary run to run; zero them in the artifact so fixed inputs
    // yield fixed bytes. The printed lines keep the measured values.
    let mut artifact = reports.clone();
    for r in &mut artifact {
        r.elapsed_s = 0.0;
    }
    io::write_json(&out, &artifact)?;
    Ok(Outcome {
        summary: format!(
            "acceptance: {passed}/{} criteria passed -> {}",
            reports.len(),
            out.display()
        ),
        exit: if passed == reports.len() { 0 } else { 2 },
    })
}
