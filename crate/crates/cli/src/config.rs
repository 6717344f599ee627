//! Config-file merge layer: a flat JSON object whose keys mirror the long
//! flag names (kebab-case; snake_case accepted). Flags override file values,
//! and missing-field errors name the flag to set.

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use serde::Deserialize;

use voltorus_core::green::Normalization;
use voltorus_core::io::{load_kernel_csv, load_spectrum_csv};
use voltorus_core::simulate::ZeroModePolicy;
use voltorus_core::uniqueness::TransformRoute;
use voltorus_core::{CovarianceSpectrum, Error, Kernel, Result};

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct FileCfg {
    pub kernel: Option<String>,
    pub spectrum: Option<String>,
    pub c: Option<f64>,
    pub beta: Option<f64>,
    pub d: Option<u32>,
    pub alpha: Option<f64>,
    #[serde(alias = "n_max")]
    pub n_max: Option<u32>,
    pub tol: Option<f64>,
    pub mu: Option<f64>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub delta: Option<f64>,
    pub t0: Option<f64>,
    #[serde(alias = "gap_min_exp")]
    pub gap_min_exp: Option<i32>,
    #[serde(alias = "gap_max_exp")]
    pub gap_max_exp: Option<i32>,
    #[serde(alias = "lag_min_exp")]
    pub lag_min_exp: Option<i32>,
    #[serde(alias = "lag_max_exp")]
    pub lag_max_exp: Option<i32>,
    pub levels: Option<Vec<u32>>,
    #[serde(alias = "grid_mult")]
    pub grid_mult: Option<u32>,
    #[serde(alias = "lattice_cut")]
    pub lattice_cut: Option<u32>,
    pub ustep: Option<f64>,
    pub norm: Option<String>,
    #[serde(alias = "rho_min")]
    pub rho_min: Option<f64>,
    #[serde(alias = "rho_max")]
    pub rho_max: Option<f64>,
    pub count: Option<usize>,
    pub times: Option<Vec<f64>>,
    #[serde(alias = "t_max")]
    pub t_max: Option<f64>,
    #[serde(alias = "t_count")]
    pub t_count: Option<usize>,
    #[serde(alias = "conv_dt")]
    pub conv_dt: Option<f64>,
    #[serde(alias = "memory_horizon")]
    pub memory_horizon: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    #[serde(alias = "zero_mode")]
    pub zero_mode: Option<String>,
    pub scheme: Option<String>,
    #[serde(alias = "k_max")]
    pub k_max: Option<i64>,
    pub route: Option<String>,
    pub ensemble: Option<PathBuf>,
    pub ids: Option<Vec<u32>>,
    pub output: Option<PathBuf>,
    pub moments: Option<PathBuf>,
    pub format: Option<String>,
    pub threads: Option<usize>,
}

pub fn load_file(path: Option<&Path>) -> Result<FileCfg> {
    let Some(path) = path else {
        return Ok(FileCfg::default());
    };
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config file {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config file {}: {e}", path.display())))
}

pub fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

pub fn opt<T>(flag: Option<T>, file: Option<T>) -> Option<T> {
    flag.or(file)
}

pub fn need<T>(flag: Option<T>, file: Option<T>, name: &str) -> Result<T> {
    flag.or(file).ok_or_else(|| {
        Error::Config(format!(
            "missing required --{name} (pass the flag or set \"{name}\" in the config file)"
        ))
    })
}

/// Enum-valued option: the flag wins, then the config-file string, then the
/// default; file strings use the flag tokens.
pub fn pick_enum<V: ValueEnum>(
    flag: Option<V>,
    file: Option<&str>,
    key: &str,
    default: V,
) -> Result<V> {
    if let Some(v) = flag {
        return Ok(v);
    }
    let Some(s) = file else {
        return Ok(default);
    };
    V::from_str(s, true).map_err(|_| {
        let tokens: Vec<String> = V::value_variants()
            .iter()
            .filter_map(|v| v.to_possible_value())
            .map(|p| p.get_name().to_string())
            .collect();
        Error::Config(format!(
            "config key \"{key}\": unknown value {s:?} (expected one of: {})",
            tokens.join(", ")
        ))
    })
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

impl FormatArg {
    pub fn ext(self) -> &'static str {
        match self {
            FormatArg::Csv => "csv",
            FormatArg::Json => "json",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum NormArg {
    AsPrinted,
    StandardHeat,
}

impl NormArg {
    pub fn core(self) -> Normalization {
        match self {
            NormArg::AsPrinted => Normalization::AsPrinted,
            NormArg::StandardHeat => Normalization::StandardHeat,
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            NormArg::AsPrinted => "as-printed",
            NormArg::StandardHeat => "standard-heat",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ZeroModeArg {
    Stationary,
    Brownian,
}

impl ZeroModeArg {
    pub fn core(self) -> ZeroModePolicy {
        match self {
            ZeroModeArg::Stationary => ZeroModePolicy::StationaryKernel,
            ZeroModeArg::Brownian => ZeroModePolicy::BrownianMotion,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum SchemeArg {
    Convolution,
    Exact,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RouteArg {
    Auto,
    ClosedForm,
    Numerical,
}

impl RouteArg {
    pub fn core(self) -> Option<TransformRoute> {
        match self {
            RouteArg::Auto => None,
            RouteArg::ClosedForm => Some(TransformRoute::ClosedForm),
            RouteArg::Numerical => Some(TransformRoute::Numerical),
        }
    }
}

/// Builtin kernel name, or a CSV tabulation loaded as the kernel's entire
/// support.
pub fn resolve_kernel(token: &str) -> Result<Kernel> {
    if let Some(k) = Kernel::from_name(token) {
        return Ok(k);
    }
    let path = Path::new(token);
    if path.exists() {
        return load_kernel_csv(path);
    }
    Err(Error::Config(format!(
        "--kernel {token:?} is neither a builtin (one, linear, exp, texp) nor an existing CSV file"
    )))
}

pub struct SpectrumChoice {
    pub spec: CovarianceSpectrum,
    pub d: u32,
    pub n_max: u32,
    pub desc: String,
}

/// Resolves the spectrum selection plus the (d, n_max) pair it pins down.
/// CSV spectra fix both from the file (flags may restate them consistently);
/// parametric/white ones take them from the flags or the given defaults,
/// with `n_default` dimension-dependent. `d_default = None` makes --d
/// required.
pub fn resolve_spectrum(
    token: &str,
    d: Option<u32>,
    n_max: Option<u32>,
    c: f64,
    beta: Option<f64>,
    d_default: Option<u32>,
    n_default: impl FnOnce(u32) -> u32,
) -> Result<SpectrumChoice> {
    match token {
        "parametric" | "white" => {
            let d = d
                .or(d_default)
                .ok_or_else(|| Error::Config("missing required --d".into()))?;
            let n_used = n_max.unwrap_or_else(|| n_default(d));
            if token == "parametric" {
                let beta = beta.ok_or_else(|| {
                    Error::Config("parametric spectrum: missing required --beta".into())
                })?;
                Ok(SpectrumChoice {
                    spec: CovarianceSpectrum::parametric(d, n_used, c, beta),
                    d,
                    n_max: n_used,
                    desc: format!("gamma_n = {c} (1+|n|^2)^-{beta}"),
                })
            } else {
                Ok(SpectrumChoice {
                    spec: CovarianceSpectrum::white(d, n_used, c),
                    d,
                    n_max: n_used,
                    desc: format!("white gamma_n = {c}"),
                })
            }
        }
        path_str => {
            let path = Path::new(path_str);
            if !path.exists() {
                return Err(Error::Config(format!(
                    "--spectrum {path_str:?} is neither \"parametric\", \"white\", nor an \
                     existing CSV file"
                )));
            }
            let spec = load_spectrum_csv(path)?;
            if let Some(df) = d {
                if df != spec.d {
                    return Err(Error::Config(format!(
                        "--d {df} disagrees with the spectrum file dimension {}",
                        spec.d
                    )));
                }
            }
            let n_used = n_max.unwrap_or(spec.n_max);
            if n_used > spec.n_max {
                return Err(Error::Config(format!(
                    "--n-max {n_used} exceeds the spectrum file truncation {}",
                    spec.n_max
                )));
            }
            Ok(SpectrumChoice {
                d: spec.d,
                n_max: n_used,
                desc: format!("spectrum {}", path.display()),
                spec,
            })
        }
    }
}
