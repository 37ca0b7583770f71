//! Spectra of self-adjoint extensions of restricted operators.
//!
//! Start from a base operator `A` with purely discrete spectrum and a trace
//! map `τ : D(A) → ℂ^m`; the self-adjoint extensions of `A` restricted to
//! `ker τ` are labelled by pairs `(Π, Θ)` of an orthogonal projection in
//! `ℂ^m` and a Hermitian operator on its range. This crate computes, for
//! such extensions:
//!
//! * the resolvent through the Krein-type formula ([`spectral::resolvent_apply`]),
//! * new eigenvalues inside spectral gaps of `A`, located as singular points
//!   of the Hermitian pencil `Θ + Q_Π(λ)` ([`spectral::new_eigenvalues`]),
//! * which eigenvalues of `A` survive into the extension, with the surviving
//!   eigenspaces ([`preservation::surviving_eigenspace`]),
//!
//! together with a catalog of concrete models (interval Laplacian, point
//! perturbation of a rectangle, equilateral star graphs, generic rank-one
//! data) carrying exact trace data and closed-form Q-matrices where
//! available.
//!
//! The `examples/` directory holds one runnable program per capability; the
//! thin `krein` binary drives the same computations from a TOML config.

pub mod cli;
pub mod error;
pub mod extensions;
pub mod fmt;
pub mod linalg;
pub mod models;
pub mod preservation;
pub mod spectral;

pub use error::{Error, Result};
pub use extensions::{
    b_from_theta, block_decompose, make_projection, principal_cosines, subspace_intersect,
    theta_from_b, ExtensionParams, Subspace,
};
pub use preservation::{
    classify_case, kernel_k, sufficient_checks, surviving_eigenspace, trace_range, CaseTag,
    PerturbedVector, PreservationReport, PreserveOptions,
};
pub use spectral::{
    extension_eigenvector, green_apply, green_apply_reduced, new_eigenvalues, pencil_matrix,
    q_matrix, q_matrix_series, q_matrix_tol, q_perp_matrix, q_perp_matrix_series, resolvent_apply,
    EigenCoordVector, GreenCharge, ModelKind, NewEigenvalue, ScanOptions, SpectralModel, TailBound,
};
