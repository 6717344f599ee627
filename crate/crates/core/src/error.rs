use thiserror::Error;

/// Coarse failure class, used by callers (the CLI) to map errors to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    /// Malformed input: bad arguments, unreadable files, inconsistent shapes.
    Usage,
    /// A numerical guard tripped: stiffness, non-decaying tails, failed factorization.
    Numerical,
    /// A mathematical hypothesis of the method is violated by the input.
    Assumption,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative time t = {0}")]
    NegativeTime(f64),
    #[error("t = {t} outside tabulated horizon {horizon}; tabulated kernels do not extrapolate")]
    OutsideHorizon { t: f64, horizon: f64 },
    #[error("Laplace transform of {kernel} diverges at Re(lambda) = {re}")]
    DivergentTransform { kernel: String, re: f64 },
    #[error("no closed-form resolvent for kernel {0}")]
    NoClosedForm(String),
    #[error("stiffness guard: |mu|*dt = {zdt:.6} > 0.5; use dt <= {suggested:.3e}")]
    StiffnessGuard { zdt: f64, suggested: f64 },
    #[error("implicit step singular: |mu|*dt*|b(0)|/2 = {0:.6} >= 1")]
    ImplicitStepSingular(f64),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("kernel {0} is not integrable on [0, inf); admissibility analysis requires b in L1")]
    NonIntegrableKernel(String),
    #[error("integrand tail does not decay below tolerance within horizon cap {0}")]
    TailNotDecaying(f64),
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("G_d is singular at the requested point for d >= 2")]
    SingularPoint,
    #[error("covariance factorization failed after diagonal jitter escalation up to {0:.3e}")]
    Factorization(f64),
    #[error("partial Fourier sums are negative beyond tolerance: min {min:.6e} at truncation N = {level}")]
    NegativePartialSums { min: f64, level: usize },
    #[error("spectrum fails the required convergence condition: {0}")]
    DivergentSpectrum(String),
    #[error("quadrature failure: {0}")]
    Quadrature(String),
    #[error("config: {0}")]
    Config(String),
    #[error("non-finite value produced in {0}")]
    NonFinite(&'static str),
    #[error("container: {0}")]
    Container(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> Category {
        use Error::*;
        match self {
            NegativeTime(_) | OutsideHorizon { .. } | GridMismatch(_) | InvalidSpectrum(_)
            | Config(_) | Container(_) | Io(_) | Csv(_) | Json(_) => Category::Usage,
            StiffnessGuard { .. } | ImplicitStepSingular(_) | TailNotDecaying(_)
            | Factorization(_) | Quadrature(_) | NonFinite(_) => Category::Numerical,
            DivergentTransform { .. } | NoClosedForm(_) | NonIntegrableKernel(_)
            | SingularPoint | NegativePartialSums { .. } | DivergentSpectrum(_) => {
                Category::Assumption
            }
        }
    }

    /// Exit status the CLI maps this error to (success is 0).
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            Category::Usage => 1,
            Category::Numerical => 2,
            Category::Assumption => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
