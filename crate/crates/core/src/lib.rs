//! Numerical toolkit for linear stochastic Volterra equations with infinite
//! delay on the d-dimensional torus, driven by spatially homogeneous noise.
//!
//! The solution diagonalizes over the Fourier lattice: each mode is a scalar
//! Volterra equation whose resolvent [`kernels::solve_resolvent`] is the
//! single numerical primitive everything else builds on. On top of it sit
//! kernel admissibility and growth-bound scans ([`admissibility`]), the
//! Sobolev-regularity classifier ([`spectrum`]), Green-function pairings for
//! measure-valued covariances ([`green`]), Monte Carlo samplers of the
//! spectral solution with analytic cross-checks ([`simulate`]), and the
//! mode-uniqueness condition ([`uniqueness`]).

pub mod admissibility;
pub mod error;
pub mod green;
pub mod io;
pub mod kernels;
pub mod lattice;
pub mod rng;
pub mod simulate;
pub mod spectrum;
pub mod stats;
pub mod suite;
pub mod uniqueness;

pub use error::{Error, Result};
pub use kernels::{
    laplace_transform, max_error_vs_closed_form, resolvent_closed_form, resolvent_residual,
    solve_resolvent, tabulated_kernel, Kernel, ResolventGrid,
};
pub use lattice::{build_index_set, IndexMember, IndexSet};
pub use spectrum::{
    classify_partial_sums, regularity_partial_sums, sobolev_norm, CovarianceSpectrum,
    RegularityReport, SpectrumForm, Verdict,
};
pub use admissibility::{
    check_hypothesis_h, estimate_cb, AdmissibilityReport, HypothesisHReport,
};
pub use green::{eval_gd, pairing_gamma_gd, GdQuad, Normalization, PairingParams, PairingReport};
pub use simulate::{
    analytic_second_moment, estimate_hoelder, estimate_moment, evaluate_field,
    mode_autocovariance, simulate_convolution, simulate_exact_gaussian, FieldEnsemble,
    HoelderReport, SimulationConfig, SimulationMeta, ZeroModePolicy,
};
pub use uniqueness::{check_uniqueness_condition, UniquenessReport, UniquenessViolation};
pub use suite::{run_all, run_criterion, CriterionReport};
