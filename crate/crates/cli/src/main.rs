//! `voltorus`: every analysis in the library as one subcommand, each writing
//! a single machine-readable artifact and printing a one-line summary.
//!
//! Exit codes: 0 success, 1 usage or config error, 2 numerical guard tripped,
//! 3 method assumption violated by the input. Flags override values from the
//! optional `--config` JSON file; for fixed inputs every subcommand writes
//! byte-identical artifacts.

mod config;
mod run;

use std::path::PathBuf;
use std::process;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_file, FormatArg, NormArg, RouteArg, SchemeArg, ZeroModeArg};

#[derive(Debug, Parser)]
#[command(
    name = "voltorus",
    version,
    about = "Resolvent kernels, admissibility, Sobolev regularity, and Gaussian field \
             simulation on the torus",
    arg_required_else_help = true
)]
struct Cli {
    /// JSON config file; keys mirror the long flag names and flags win.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Cap on worker threads (default: one per core).
    #[arg(long, global = true, value_name = "N")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve the mode resolvent r = b + mu * (b conv r) on a uniform grid.
    Resolvent(ResolventArgs),
    /// Estimate the admissibility constant C_b = lim |n|^2 int r(s,-|n|^2)^2 ds.
    Admissibility(AdmissibilityArgs),
    /// Scan the two resolvent growth bounds behind path-regularity estimates.
    HypothesisH(HypothesisHArgs),
    /// Classify sum gamma_n (1+|n|^2)^alpha by dyadic partial sums.
    Regularity(RegularityArgs),
    /// Sobolev norms of a stored ensemble, averaged over paths per time.
    Sobolev(SobolevArgs),
    /// Tabulate the periodized Green function G_d along a radial ray.
    Gd(GdArgs),
    /// Pair a covariance spectrum against G_d over a truncation ladder.
    Pairing(PairingArgs),
    /// Sample the spectral solution and write an ensemble container.
    Simulate(SimulateArgs),
    /// Estimate the increment-variance and Hoelder exponents.
    Hoelder(HoelderArgs),
    /// Scan for spectral obstructions 1/b~(ik) = -|n|^2 to mode uniqueness.
    Uniqueness(UniquenessArgs),
    /// Run acceptance criteria and write their reports.
    Repro(ReproArgs),
}

#[derive(Debug, Args)]
struct ResolventArgs {
    /// Memory kernel: builtin name (one, linear, exp, texp) or CSV path.
    #[arg(long, value_name = "KERNEL")]
    kernel: Option<String>,
    /// Spectral parameter mu (mu <= 0; -|n|^2 for mode n).
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<f64>,
    /// Grid step [default: 1e-3].
    #[arg(long)]
    dt: Option<f64>,
    /// Solve horizon [default: 10].
    #[arg(long)]
    horizon: Option<f64>,
    /// Artifact format [default: csv].
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Artifact path [default: resolvent.<format>].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AdmissibilityArgs {
    /// Memory kernel: builtin name (one, linear, exp, texp) or CSV path.
    #[arg(long, value_name = "KERNEL")]
    kernel: Option<String>,
    /// Top of the geometric mode ladder {2, 4, ..., n-max} [default: 1024].
    #[arg(long)]
    n_max: Option<u32>,
    /// Convergence tolerance for the extrapolated ladder [default: 1e-6].
    #[arg(long)]
    tol: Option<f64>,
    /// Artifact path [default: admissibility.json].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HypothesisHArgs {
    /// Memory kernel: builtin name only (the scan needs closed-form resolvents).
    #[arg(long, value_name = "KERNEL")]
    kernel: Option<String>,
    /// Growth-bound exponent in (0, 1) [default: 0.5].
    #[arg(long)]
    delta: Option<f64>,
    /// Scan modes n = 1..=n-max [default: 64].
    #[arg(long)]
    n_max: Option<u32>,
    /// Left endpoint of every scanned time pair [default: 1].
    #[arg(long)]
    t0: Option<f64>,
    /// Smallest dyadic gap exponent: gaps 2^j, j = gap-min-exp..=gap-max-exp [default: -10].
    #[arg(long, allow_negative_numbers = true)]
    gap_min_exp: Option<i32>,
    /// Largest dyadic gap exponent [default: -3].
    #[arg(long, allow_negative_numbers = true)]
    gap_max_exp: Option<i32>,
    /// Artifact path [default: hypothesis_h.json].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RegularityArgs {
    /// Covariance spectrum: parametric, white, or CSV path [default: parametric].
    #[arg(long, value_name = "SPECTRUM")]
    spectrum: Option<String>,
    /// Overall spectrum scale c [default: 1].
    #[arg(long)]
    c: Option<f64>,
    /// Parametric decay: gamma_n = c (1+|n|^2)^-beta (required for parametric).
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Torus dimension (required unless the spectrum is a CSV file).
    #[arg(long)]
    d: Option<u32>,
    /// Sobolev exponent alpha in the weight (1+|n|^2)^alpha.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Top truncation of the default dyadic ladder [default: 16384/512/128 for d=1/2/3].
    #[arg(long)]
    n_max: Option<u32>,
    /// Explicit truncation ladder (>= 4 ascending levels), e.g. 16,32,64,128.
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    /// Artifact path [default: regularity.json].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SobolevArgs {
    /// Ensemble container written by `simulate`.
    #[arg(long, value_name = "FILE")]
    ensemble: Option<PathBuf>,
    /// Sobolev exponent of the reported norm [default: stored alpha + 1].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Artifact format [default: csv].
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Artifact path [default: sobolev.<format>].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GdArgs {
    /// Torus dimension.
    #[arg(long)]
    d: Option<u32>,
    /// Smallest radius of the log-spaced ray [default: 1e-2].
    #[arg(long)]
    rho_min: Option<f64>,
    /// Largest radius [default: 1e-1].
    #[arg(long)]
    rho_max: Option<f64>,
    /// Number of radii [default: 9].
    #[arg(long)]
    count: Option<usize>,
    /// Green-function normalization [default: as-printed].
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    /// Periodization images truncated at |k|_inf <= lattice-cut [default: 3].
    #[arg(long)]
    lattice_cut: Option<u32>,
    /// Trapezoid step in u = ln t [default: 0.05].
    #[arg(long)]
    ustep: Option<f64>,
    /// Artifact format [default: csv].
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    /// Artifact path [default: gd.<format>].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PairingArgs {
    /// Covariance spectrum: parametric, white, or CSV path [default: parametric].
    #[arg(long, value_name = "SPECTRUM")]
    spectrum: Option<String>,
    /// Overall spectrum scale c [default: 1].
    #[arg(long)]
    c: Option<f64>,
    /// Parametric decay: gamma_n = c (1+|n|^2)^-beta (required for parametric).
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Torus dimension (required unless the spectrum is a CSV file).
    #[arg(long)]
    d: Option<u32>,
    /// Spectrum truncation bound [default: largest ladder level].
    #[arg(long)]
    n_max: Option<u32>,
    /// Truncation ladder (>= 4 ascending levels) [default: dimension-dependent].
    #[arg(long, value_delimiter = ',')]
    levels: Option<Vec<u32>>,
    /// Quadrature midpoints per axis = grid-mult * max(levels) [default: 4].
    #[arg(long)]
    grid_mult: Option<u32>,
    /// Green-function normalization [default: as-printed].
    #[arg(long, value_enum)]
    norm: Option<NormArg>,
    /// Periodization images truncated at |k|_inf <= lattice-cut [default: 3].
    #[arg(long)]
    lattice_cut: Option<u32>,
    /// Trapezoid step in u = ln t [default: 0.05].
    #[arg(long)]
    ustep: Option<f64>,
    /// Artifact path [default: pairing.json].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Memory kernel: builtin name (one, linear, exp, texp) or CSV path.
    #[arg(long, value_name = "KERNEL")]
    kernel: Option<String>,
    /// Covariance spectrum: parametric, white, or CSV path [default: parametric].
    #[arg(long, value_name = "SPECTRUM")]
    spectrum: Option<String>,
    /// Overall spectrum scale c [default: 1].
    #[arg(long)]
    c: Option<f64>,
    /// Parametric decay: gamma_n = c (1+|n|^2)^-beta (required for parametric).
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Torus dimension [default: 1].
    #[arg(long)]
    d: Option<u32>,
    /// Moments are reported in the H^{alpha+1} norm [default: -1].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Spectral truncation |n|_inf <= n-max [default: 32].
    #[arg(long)]
    n_max: Option<u32>,
    /// Explicit output times (ascending, multiples of conv-dt), e.g. 0,0.25,0.5.
    #[arg(long, value_delimiter = ',')]
    times: Option<Vec<f64>>,
    /// Last time of the default uniform grid [default: 1].
    #[arg(long)]
    t_max: Option<f64>,
    /// Node count of the default uniform grid [default: 17].
    #[arg(long)]
    t_count: Option<usize>,
    /// Stochastic-convolution step [default: 2^-12].
    #[arg(long)]
    conv_dt: Option<f64>,
    /// Stationary-memory horizon [default: 12].
    #[arg(long)]
    memory_horizon: Option<f64>,
    /// Monte Carlo paths [default: 2000].
    #[arg(long)]
    paths: Option<usize>,
    /// RNG seed; fixed seed means byte-identical artifacts [default: 1].
    #[arg(long)]
    seed: Option<u64>,
    /// Zero-mode law [default: stationary].
    #[arg(long, value_enum)]
    zero_mode: Option<ZeroModeArg>,
    /// Sampler [default: convolution].
    #[arg(long, value_enum)]
    scheme: Option<SchemeArg>,
    /// Ensemble artifact path [default: ensemble.vfe].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
    /// Moment-table path [default: <output>.moments.csv].
    #[arg(long)]
    moments: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HoelderArgs {
    /// Memory kernel: builtin name (one, linear, exp, texp) or CSV path.
    #[arg(long, value_name = "KERNEL")]
    kernel: Option<String>,
    /// Covariance spectrum: parametric, white, or CSV path [default: parametric].
    #[arg(long, value_name = "SPECTRUM")]
    spectrum: Option<String>,
    /// Overall spectrum scale c [default: 1].
    #[arg(long)]
    c: Option<f64>,
    /// Parametric decay: gamma_n = c (1+|n|^2)^-beta (required for parametric).
    #[arg(long, allow_negative_numbers = true)]
    beta: Option<f64>,
    /// Torus dimension [default: 1].
    #[arg(long)]
    d: Option<u32>,
    /// Smoothness index of the underlying simulation [default: -1].
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Spectral truncation |n|_inf <= n-max [default: 32].
    #[arg(long)]
    n_max: Option<u32>,
    /// Base time of the increment ladder [default: 0].
    #[arg(long)]
    t0: Option<f64>,
    /// Smallest dyadic lag exponent: lags 2^j, j = lag-min-exp..=lag-max-exp [default: -10].
    #[arg(long, allow_negative_numbers = true)]
    lag_min_exp: Option<i32>,
    /// Largest dyadic lag exponent [default: -4].
    #[arg(long, allow_negative_numbers = true)]
    lag_max_exp: Option<i32>,
    /// Stochastic-convolution step [default: 2^-12].
    #[arg(long)]
    conv_dt: Option<f64>,
    /// Stationary-memory horizon [default: 12].
    #[arg(long)]
    memory_horizon: Option<f64>,
    /// Monte Carlo paths [default: 2000].
    #[arg(long)]
    paths: Option<usize>,
    /// RNG seed [default: 7].
    #[arg(long)]
    seed: Option<u64>,
    /// Zero-mode law [default: stationary].
    #[arg(long, value_enum)]
    zero_mode: Option<ZeroModeArg>,
    /// Artifact path [default: hoelder.json].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct UniquenessArgs {
    /// Memory kernel: builtin name (one, linear, exp, texp) or CSV path.
    #[arg(long, value_name = "KERNEL")]
    kernel: Option<String>,
    /// Torus dimension [default: 1].
    #[arg(long)]
    d: Option<u32>,
    /// Frequency scan window k in [-k-max, k-max] [default: 64].
    #[arg(long)]
    k_max: Option<i64>,
    /// Mode scan bound: achievable |n|^2 up to d * n-max^2 [default: 64].
    #[arg(long)]
    n_max: Option<u32>,
    /// Distance below which a scanned pair counts as a violation [default: 1e-6].
    #[arg(long)]
    tol: Option<f64>,
    /// How 1/b~(ik) is computed [default: auto].
    #[arg(long, value_enum)]
    route: Option<RouteArg>,
    /// Artifact path [default: uniqueness.json].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ReproArgs {
    /// Criteria to run, e.g. 1,2,9 [default: all ten].
    #[arg(long, value_delimiter = ',')]
    ids: Option<Vec<u32>>,
    /// Artifact path [default: repro.json].
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are successes; anything else is a usage error.
            let code = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            process::exit(code);
        }
    };

    match dispatch(cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            process::exit(outcome.exit);
        }
        Err(e) => {
            eprintln!("error: {e}");
            process::exit(e.exit_code());
        }
    }
}

fn dispatch(cli: Cli) -> voltorus_core::Result<run::Outcome> {
    let file = load_file(cli.config.as_deref())?;
    if let Some(threads) = cli.threads.or(file.threads) {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| voltorus_core::Error::Config(format!("--threads: {e}")))?;
    }
    match cli.command {
        Command::Resolvent(a) => run::resolvent(a, &file),
        Command::Admissibility(a) => run::admissibility(a, &file),
        Command::HypothesisH(a) => run::hypothesis_h(a, &file),
        Command::Regularity(a) => run::regularity(a, &file),
        Command::Sobolev(a) => run::sobolev(a, &file),
        Command::Gd(a) => run::gd(a, &file),
        Command::Pairing(a) => run::pairing(a, &file),
        Command::Simulate(a) => run::simulate(a, &file),
        Command::Hoelder(a) => run::hoelder(a, &file),
        Command::Uniqueness(a) => run::uniqueness(a, &file),
        Command::Repro(a) => run::repro(a, &file),
    }
}
