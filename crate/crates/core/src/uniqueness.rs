use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{laplace_transform, Kernel};
use crate::lattice::achievable_mode_squares;

/// How 1/b~(ik) is obtained during the scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TransformRoute {
    /// Closed-form transforms for builtin kernels (includes removable
    /// singularities such as 1/b~ = ik at k = 0 for the constant kernel).
    ClosedForm,
    /// Quadrature of the Laplace transform on the imaginary axis.
    Numerical,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessViolation {
    pub k: i64,
    pub n_abs2: u64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct UniquenessReport {
    pub kernel: String,
    pub d: u32,
    pub k_max: i64,
    pub n_max: u32,
    pub tol: f64,
    pub route: TransformRoute,
    /// min over scanned (k, |n|^2) of |1/b~(ik) + |n|^2|.
    pub min_distance: f64,
    pub min_at: (i64, u64),
    pub violations: Vec<UniquenessViolation>,
    pub holds: bool,
    /// For closed-form transforms: |1/b~(ik)| -> inf as |k| -> inf, so the
    /// finite-window verdict cannot be overturned by unscanned k.
    pub asymptote_unbounded: Option<bool>,
    /// The verdict covers the scanned window only.
    pub note: String,
}

/// 1/b~(ik) in closed form for builtin kernels, with poles of b~ folded in
/// as the limit value of the reciprocal.
pub fn inverse_transform_closed(kernel: &Kernel, k: f64) -> Option<Complex64> {
    let ik = Complex64::new(0.0, k);
    match kernel {
        Kernel::One => Some(ik),
        Kernel::Linear => Some(ik * ik),
        Kernel::Exp => Some(Complex64::new(1.0, k)),
        Kernel::TExp => {
            let z = Complex64::new(1.0, k);
            Some(z * z)
        }
        _ => None,
    }
}

/// 1/b~(ik) by quadrature. Errors where the transform integral diverges on
/// the imaginary axis (the constant and linear kernels).
pub fn inverse_transform_numerical(kernel: &Kernel, k: f64) -> Result<Complex64> {
    let (bt, _err) = laplace_transform(kernel, Complex64::new(0.0, k))?;
    if bt.norm() < 1e-300 {
        return Err(Error::Quadrature(format!(
            "b~(ik) vanishes at k = {k}; its reciprocal is unbounded"
        )));
    }
    Ok(bt.finv())
}

/// Scans k in [-k_max, k_max] and the achievable |n|^2 values of Z^d up to
/// d * n_max^2 for near-solutions of 1/b~(ik) = -|n|^2, the spectral
/// obstruction to uniqueness.
pub fn check_uniqueness_condition(
    kernel: &Kernel,
    d: u32,
    k_max: i64,
    n_max: u32,
    tol: f64,
) -> Result<UniquenessReport> {
    let route = if kernel.is_builtin() {
        TransformRoute::ClosedForm
    } else {
        TransformRoute::Numerical
    };
    check_uniqueness_condition_with_route(kernel, d, k_max, n_max, tol, route)
}

pub fn check_uniqueness_condition_with_route(
    kernel: &Kernel,
    d: u32,
    k_max: i64,
    n_max: u32,
    tol: f64,
    route: TransformRoute,
) -> Result<UniquenessReport> {
    if d == 0 {
        return Err(Error::Config("d must be >= 1".into()));
    }
    if k_max < 0 {
        return Err(Error::Config("k_max must be >= 0".into()));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Config("tol must be > 0".into()));
    }
    let squares = achievable_mode_squares(d, n_max);
    let mut min_distance = f64::INFINITY;
    let mut min_at = (0i64, 0u64);
    let mut violations = Vec::new();
    for k in -k_max..=k_max {
        let inv = match route {
            TransformRoute::ClosedForm => inverse_transform_closed(kernel, k as f64)
                .ok_or_else(|| Error::NoClosedForm(kernel.id().into()))?,
            TransformRoute::Numerical => inverse_transform_numerical(kernel, k as f64)?,
        };
        for &m in &squares {
            let dist = (inv + m as f64).norm();
            if dist < min_distance {
                min_distance = dist;
                min_at = (k, m);
            }
            if dist < tol {
                violations.push(UniquenessViolation {
                    k,
                    n_abs2: m,
                    distance: dist,
                });
            }
        }
    }
    let holds = violations.is_empty();
    let asymptote_unbounded = match route {
        TransformRoute::ClosedForm => Some(true),
        TransformRoute::Numerical => None,
    };
    Ok(UniquenessReport {
        kernel: kernel.id().into(),
        d,
        k_max,
        n_max,
        tol,
        route,
        min_distance,
        min_at,
        violations,
        holds,
        asymptote_unbounded,
        note: format!(
            "finite-window verdict over k in [-{k_max}, {k_max}] and |n|^2 achievable up to {}",
            d as u64 * (n_max as u64).pow(2)
        ),
    })
}
