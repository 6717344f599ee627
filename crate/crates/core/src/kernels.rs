use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Memory kernel b on [0, inf).
///
/// Builtins carry closed-form Laplace transforms and closed-form resolvents.
/// `Tabulated` evaluates by linear interpolation on its uniform grid and
/// refuses to extrapolate past its horizon. `Evaluable` wraps a caller-supplied
/// function; the caller declares integrability.
#[derive(Clone)]
pub enum Kernel {
    /// b(t) = 1
    One,
    /// b(t) = t
    Linear,
    /// b(t) = e^{-t}
    Exp,
    /// b(t) = t e^{-t}
    TExp,
    Tabulated {
        /// samples at t = 0, dt, 2 dt, ...
        values: Arc<Vec<f64>>,
        dt: f64,
        integrable: bool,
    },
    Evaluable {
        f: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
        integrable: bool,
    },
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Tabulated { values, dt, .. } => {
                write!(f, "Tabulated({} samples, dt={})", values.len(), dt)
            }
            Kernel::Evaluable { .. } => write!(f, "Evaluable"),
            k => write!(f, "{}", k.id()),
        }
    }
}

impl Kernel {
    pub fn id(&self) -> &'static str {
        match self {
            Kernel::One => "one",
            Kernel::Linear => "linear",
            Kernel::Exp => "exp",
            Kernel::TExp => "texp",
            Kernel::Tabulated { .. } => "tabulated",
            Kernel::Evaluable { .. } => "evaluable",
        }
    }

    pub fn from_name(name: &str) -> Option<Kernel> {
        match name {
            "one" => Some(Kernel::One),
            "linear" => Some(Kernel::Linear),
            "exp" => Some(Kernel::Exp),
            "texp" => Some(Kernel::TExp),
            _ => None,
        }
    }

    pub fn is_builtin(&self) -> bool {
        matches!(
            self,
            Kernel::One | Kernel::Linear | Kernel::Exp | Kernel::TExp
        )
    }

    /// Whether b is in L1([0, inf)).
    pub fn integrable(&self) -> bool {
        match self {
            Kernel::One | Kernel::Linear => false,
            Kernel::Exp | Kernel::TExp => true,
            Kernel::Tabulated { integrable, .. } | Kernel::Evaluable { integrable, .. } => {
                *integrable
            }
        }
    }

    pub fn horizon(&self) -> Option<f64> {
        match self {
            Kernel::Tabulated { values, dt, .. } => Some((values.len() - 1) as f64 * dt),
            _ => None,
        }
    }

    /// b(t) for t >= 0.
    pub fn eval(&self, t: f64) -> Result<f64> {
        if t < 0.0 || !t.is_finite() {
            return Err(Error::NegativeTime(t));
        }
        match self {
            Kernel::One => Ok(1.0),
            Kernel::Linear => Ok(t),
            Kernel::Exp => Ok((-t).exp()),
            Kernel::TExp => Ok(t * (-t).exp()),
            Kernel::Tabulated { values, dt, .. } => {
                let horizon = (values.len() - 1) as f64 * dt;
                // Tolerate roundoff at the last node but never extrapolate.
                if t > horizon * (1.0 + 1e-12) + 1e-300 {
                    return Err(Error::OutsideHorizon { t, horizon });
                }
                let x = (t / dt).min((values.len() - 1) as f64);
                let j = (x.floor() as usize).min(values.len() - 2);
                let w = x - j as f64;
                Ok(values[j] * (1.0 - w) + values[j + 1] * w)
            }
            Kernel::Evaluable { f, .. } => Ok(f(t)),
        }
    }

    /// b(0); the first sample for tabulated kernels.
    pub fn b0(&self) -> f64 {
        match self {
            Kernel::One => 1.0,
            Kernel::Linear | Kernel::TExp => 0.0,
            Kernel::Exp => 1.0,
            Kernel::Tabulated { values, .. } => values[0],
            Kernel::Evaluable { f, .. } => f(0.0),
        }
    }

    /// Closed-form Laplace transform when one is attached (all builtins).
    pub fn analytic_laplace(&self, lambda: Complex64) -> Option<Complex64> {
        match self {
            Kernel::One => Some(1.0 / lambda),
            Kernel::Linear => Some(1.0 / (lambda * lambda)),
            Kernel::Exp => Some(1.0 / (lambda + 1.0)),
            Kernel::TExp => {
                let d = lambda + 1.0;
                Some(1.0 / (d * d))
            }
            _ => None,
        }
    }
}

/// Builds a tabulated kernel from uniform samples starting at t = 0.
pub fn tabulated_kernel(values: Vec<f64>, dt: f64, integrable: bool) -> Result<Kernel> {
    if values.len() < 2 {
        return Err(Error::Config("tabulated kernel needs >= 2 samples".into()));
    }
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::Config("tabulated kernel step must be positive".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("tabulated_kernel"));
    }
    Ok(Kernel::Tabulated {
        values: Arc::new(values),
        dt,
        integrable,
    })
}

/// b~(lambda) = int_0^inf e^{-lambda t} b(t) dt, with an error estimate
/// (zero for closed forms).
///
/// Domain: One and Linear need Re(lambda) > 0; Exp and TExp converge for
/// Re(lambda) > -1. Analytic extension beyond these half-planes is the
/// caller's assertion, not checked here.
pub fn laplace_transform(kernel: &Kernel, lambda: Complex64) -> Result<(Complex64, f64)> {
    match kernel {
        Kernel::One | Kernel::Linear => {
            if lambda.re <= 0.0 {
                return Err(Error::DivergentTransform {
                    kernel: kernel.id().into(),
                    re: lambda.re,
                });
            }
        }
        Kernel::Exp | Kernel::TExp => {
            if lambda.re <= -1.0 {
                return Err(Error::DivergentTransform {
                    kernel: kernel.id().into(),
                    re: lambda.re,
                });
            }
        }
        _ => {
            if !kernel.integrable() && lambda.re <= 0.0 {
                return Err(Error::DivergentTransform {
                    kernel: kernel.id().into(),
                    re: lambda.re,
                });
            }
        }
    }
    if let Some(v) = kernel.analytic_laplace(lambda) {
        return Ok((v, 0.0));
    }
    numerical_laplace(kernel, lambda)
}

/// Trapezoidal transform on [0, H]; error estimated by step halving plus a
/// crude tail bound |b(H)| e^{-Re(lambda) H} / max(Re(lambda), decay).
fn numerical_laplace(kernel: &Kernel, lambda: Complex64) -> Result<(Complex64, f64)> {
    let horizon = match kernel.horizon() {
        Some(h) => h,
        // Evaluable without horizon: integrate until the integrand envelope falls off.
        None => adaptive_horizon(kernel, lambda.re)?,
    };
    let quad = |n: usize| -> Result<Complex64> {
        let h = horizon / n as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        for j in 0..=n {
            let t = j as f64 * h;
            let w = if j == 0 || j == n { 0.5 } else { 1.0 };
            acc += w * (-lambda * t).exp() * kernel.eval(t)?;
        }
        Ok(acc * h)
    };
    let coarse = quad(4096)?;
    let fine = quad(8192)?;
    let tail = (kernel.eval(horizon)?.abs() * (-lambda.re * horizon).exp())
        / lambda.re.max(1e-2).abs();
    Ok((fine, (fine - coarse).norm() + tail))
}

fn adaptive_horizon(kernel: &Kernel, re: f64) -> Result<f64> {
    let mut horizon = 1.0f64;
    const CAP: f64 = 1e5;
    while horizon < CAP {
        let envelope = kernel.eval(horizon)?.abs() * (-re * horizon).exp();
        if envelope < 1e-14 {
            return Ok(horizon);
        }
        horizon *= 2.0;
    }
    Err(Error::TailNotDecaying(CAP))
}

/// Closed-form resolvent r(t, mu) of
///     r(t) = b(t) + mu int_0^t b(t-s) r(s) ds
/// for the builtin catalog and mu <= 0:
///     One    -> e^{mu t}
///     Exp    -> e^{(mu - 1) t}
///     Linear -> sin(w t)/w,           w = sqrt(|mu|)   (t at mu = 0)
///     TExp   -> e^{-t} sin(w t)/w     (t e^{-t} at mu = 0)
pub fn resolvent_closed_form(kernel: &Kernel, mu: f64, t: f64) -> Result<f64> {
    if t < 0.0 || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    if mu > 0.0 {
        return Err(Error::Config(format!("mu must be <= 0, got {mu}")));
    }
    let osc = |t: f64| -> f64 {
        if mu == 0.0 {
            t
        } else {
            let w = mu.abs().sqrt();
            (w * t).sin() / w
        }
    };
    match kernel {
        Kernel::One => Ok((mu * t).exp()),
        Kernel::Exp => Ok(((mu - 1.0) * t).exp()),
        Kernel::Linear => Ok(osc(t)),
        Kernel::TExp => Ok((-t).exp() * osc(t)),
        k => Err(Error::NoClosedForm(k.id().into())),
    }
}

/// Uniform-grid numerical resolvent for one fixed mu <= 0.
#[derive(Debug, Clone)]
pub struct ResolventGrid {
    pub kernel_id: String,
    pub mu: f64,
    pub dt: f64,
    pub horizon: f64,
    /// values[j] approximates r(j dt, mu); values[0] = b(0).
    pub values: Vec<f64>,
}

impl ResolventGrid {
    pub fn t(&self, j: usize) -> f64 {
        j as f64 * self.dt
    }
}

/// Dot product of `a` against `b` reversed, with fixed 4-lane accumulation
/// (deterministic and fast enough for the O(N^2) convolution sums).
#[inline]
pub(crate) fn dot_rev(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len();
    let mut acc = [0.0f64; 4];
    let chunks = n / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[n - 1 - i];
        acc[1] += a[i + 1] * b[n - 2 - i];
        acc[2] += a[i + 2] * b[n - 3 - i];
        acc[3] += a[i + 3] * b[n - 4 - i];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..n {
        tail += a[i] * b[n - 1 - i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Product-trapezoidal solution of the second-kind Volterra equation
/// r = b + mu (b * r). Second order in dt for smooth b. At each node j,
///     r_j (1 - mu dt b_0 / 2) = b_j + mu dt (b_j r_0 / 2 + sum_{i=1}^{j-1} b_{j-i} r_i).
pub fn solve_resolvent(kernel: &Kernel, mu: f64, dt: f64, horizon: f64) -> Result<ResolventGrid> {
    if dt.is_nan() || dt <= 0.0 || horizon.is_nan() || horizon <= 0.0 {
        return Err(Error::Config("dt and horizon must be positive".into()));
    }
    if mu > 0.0 {
        return Err(Error::Config(format!("mu must be <= 0, got {mu}")));
    }
    let steps_f = horizon / dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-9 * steps_f.max(1.0) {
        return Err(Error::GridMismatch(format!(
            "dt = {dt} does not divide horizon = {horizon}"
        )));
    }
    if mu.abs() * dt > 0.5 {
        return Err(Error::StiffnessGuard {
            zdt: mu.abs() * dt,
            suggested: 0.5 / mu.abs(),
        });
    }
    let b0 = kernel.b0();
    let gate = mu.abs() * dt * b0.abs() / 2.0;
    if gate >= 1.0 {
        return Err(Error::ImplicitStepSingular(gate));
    }

    let b: Vec<f64> = (0..=steps)
        .map(|j| kernel.eval(j as f64 * dt))
        .collect::<Result<_>>()?;
    let fac = 1.0 - mu * dt * b0 / 2.0;
    let mut r = vec![0.0f64; steps + 1];
    r[0] = b0;
    for j in 1..=steps {
        let conv = 0.5 * b[j] * r[0] + dot_rev(&b[1..j], &r[1..j]);
        let val = (b[j] + mu * dt * conv) / fac;
        if !val.is_finite() {
            return Err(Error::NonFinite("solve_resolvent"));
        }
        r[j] = val;
    }
    Ok(ResolventGrid {
        kernel_id: kernel.id().into(),
        mu,
        dt,
        horizon,
        values: r,
    })
}

/// Maximum defect of the grid in the defining equation, measured with an
/// independent quadrature: composite Simpson where the node count permits
/// (even j >= 2), trapezoid otherwise.
pub fn resolvent_residual(kernel: &Kernel, grid: &ResolventGrid) -> Result<f64> {
    let n = grid.values.len() - 1;
    let dt = grid.dt;
    let b: Vec<f64> = (0..=n)
        .map(|j| kernel.eval(j as f64 * dt))
        .collect::<Result<_>>()?;
    let r = &grid.values;
    let mut worst = 0.0f64;
    for j in 0..=n {
        let quad = if j == 0 {
            0.0
        } else if j >= 2 && j % 2 == 0 {
            // Simpson over i = 0..j of b[j-i] r[i].
            let mut acc = b[j] * r[0] + b[0] * r[j];
            let mut odd = 0.0;
            let mut even = 0.0;
            for i in 1..j {
                let term = b[j - i] * r[i];
                if i % 2 == 1 {
                    odd += term;
                } else {
                    even += term;
                }
            }
            acc += 4.0 * odd + 2.0 * even;
            acc * dt / 3.0
        } else {
            let mut acc = 0.5 * (b[j] * r[0] + b[0] * r[j]);
            for i in 1..j {
                acc += b[j - i] * r[i];
            }
            acc * dt
        };
        let defect = (r[j] - b[j] - grid.mu * quad).abs();
        worst = worst.max(defect);
    }
    Ok(worst)
}

/// Max abs deviation of a numerical grid from the closed form (builtins only).
pub fn max_error_vs_closed_form(kernel: &Kernel, grid: &ResolventGrid) -> Result<f64> {
    let mut worst = 0.0f64;
    for (j, &v) in grid.values.iter().enumerate() {
        let exact = resolvent_closed_form(kernel, grid.mu, grid.t(j))?;
        worst = worst.max((v - exact).abs());
    }
    Ok(worst)
}
