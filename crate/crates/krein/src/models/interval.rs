//! The Dirichlet Laplacian on a bounded interval `(0, a)` with the boundary
//! derivative trace `τφ = (φ′(0), −φ′(a))`.
//!
//! Levels are `λ_n = −(nπ/a)²` with simple multiplicity and normalized
//! eigenfunctions `ψ_n(x) = √(2/a) sin(nπx/a)`, so the trace columns are
//!
//! ```text
//!   τψ_n = √(2/a) (nπ/a) (1, (−1)^{n−1})
//! ```
//!
//! The Q-matrix has an exact evaluator, derived from the boundary values of
//! the explicit resolvent kernel. Writing `k = √z`,
//!
//! ```text
//!   Q(z) = [ k coth(ka) − 1/a     1/a − k/sinh(ka) ]
//!          [ 1/a − k/sinh(ka)     k coth(ka) − 1/a ]
//! ```
//!
//! so that `P₀ + Q(z)` is the Dirichlet-to-Neumann matrix of the interval.
//! For negative real `z = −κ²` this reduces to `κ cot(κa)` and `κ/sin(κa)`
//! entries with poles precisely at the levels. The reduced matrix at a level
//! follows by removing the pole term and taking the limit:
//!
//! ```text
//!   Q^⊥(λ_n) = [ −3/(2a)              1/a + (−1)^n/(2a) ]
//!              [ 1/a + (−1)^n/(2a)    −3/(2a)           ]
//! ```
//!
//! Trace-data tail: `‖T_n‖²/λ_n² = 4a/(π² n²)`, so the tail beyond `N`
//! levels is bounded by `(4a/π²) · N⁻¹` exactly.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::real;
use crate::spectral::{ModelData, ModelKind, SpectralModel, TailBound};

/// The zero-energy boundary matrix `P₀ = (1/a) [[1, −1], [−1, 1]]` used in
/// the `(Π, B)` parametrization.
pub fn dirichlet_to_neumann(a: f64) -> DMatrix<Complex64> {
    DMatrix::from_row_slice(
        2,
        2,
        &[
            real(1.0 / a),
            real(-1.0 / a),
            real(-1.0 / a),
            real(1.0 / a),
        ],
    )
}

/// Unit vector spanning the trace range at level index `i` (0-based):
/// `(1, (−1)^i)/√2`.
pub fn trace_direction(i: usize) -> DVector<Complex64> {
    let s = if i % 2 == 0 { 1.0 } else { -1.0 };
    DVector::from_vec(vec![real(1.0 / 2f64.sqrt()), real(s / 2f64.sqrt())])
}

/// Unit vector orthogonal to the trace range at level index `i`:
/// `(1, −(−1)^i)/√2`.
pub fn trace_direction_perp(i: usize) -> DVector<Complex64> {
    let s = if i % 2 == 0 { -1.0 } else { 1.0 };
    DVector::from_vec(vec![real(1.0 / 2f64.sqrt()), real(s / 2f64.sqrt())])
}

/// Exact Q-matrix entries at complex `z`; returns `(diagonal, off-diagonal)`.
pub(crate) fn q_entries(a: f64, z: Complex64) -> (Complex64, Complex64) {
    let one = Complex64::new(1.0, 0.0);
    if (z * a * a).norm() < 1e-4 {
        // Series around z = 0 avoids the 0/0 cancellation:
        //   k coth(ka) = 1/a + za/3 − z²a³/45 + 2z³a⁵/945 − …
        //   k/sinh(ka) = 1/a − za/6 + 7z²a³/360 − 31z³a⁵/15120 + …
        let a3 = a * a * a;
        let a5 = a3 * a * a;
        let qd = z * (a / 3.0) - z * z * (a3 / 45.0) + z * z * z * (2.0 * a5 / 945.0);
        let qo = z * (a / 6.0) - z * z * (7.0 * a3 / 360.0) + z * z * z * (31.0 * a5 / 15120.0);
        return (qd, qo);
    }
    let k = z.sqrt();
    let ka = k * a;
    let qd = k * ka.cosh() / ka.sinh() - one / a;
    let qo = one / a - k / ka.sinh();
    (qd, qo)
}

pub(crate) fn q_closed_matrix(a: f64, z: Complex64) -> DMatrix<Complex64> {
    let (qd, qo) = q_entries(a, z);
    DMatrix::from_row_slice(2, 2, &[qd, qo, qo, qd])
}

/// Exact reduced Q-matrix entries at level index `i`; `(diagonal, off)`.
pub(crate) fn q_perp_entries(a: f64, i: usize) -> (f64, f64) {
    // (−1)^n with n = i+1
    let sign_n = if i % 2 == 0 { -1.0 } else { 1.0 };
    (-1.5 / a, 1.0 / a + sign_n * 0.5 / a)
}

pub(crate) fn q_perp_closed_matrix(a: f64, i: usize) -> DMatrix<Complex64> {
    let (d, o) = q_perp_entries(a, i);
    DMatrix::from_row_slice(2, 2, &[real(d), real(o), real(o), real(d)])
}

/// Build the interval model with the first `levels` eigenvalues.
pub fn build_interval(a: f64, levels: usize) -> Result<SpectralModel> {
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "interval length must be positive, got {a}"
        )));
    }
    if levels == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let mut lams = Vec::with_capacity(levels);
    let mut traces = Vec::with_capacity(levels);
    let amp = (2.0 / a).sqrt();
    for i in 0..levels {
        let n = (i + 1) as f64;
        let kappa = n * std::f64::consts::PI / a;
        lams.push(-(kappa * kappa));
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        traces.push(DMatrix::from_column_slice(
            2,
            1,
            &[real(amp * kappa), real(amp * kappa * s)],
        ));
    }
    let tail = TailBound {
        constant: 4.0 * a / (std::f64::consts::PI * std::f64::consts::PI),
        exponent: 1.0,
    };
    let trace_scale = amp * std::f64::consts::PI / a * 2f64.sqrt();
    let a_q = a;
    let a_qp = a;
    SpectralModel::assemble(ModelData {
        levels: lams,
        traces,
        boundary_dim: 2,
        tail,
        trace_scale,
        p0: Some(dirichlet_to_neumann(a)),
        q_closed: Some(Box::new(move |z| q_closed_matrix(a_q, z))),
        q_perp_closed: Some(Box::new(move |i| q_perp_closed_matrix(a_qp, i))),
        kind: ModelKind::Interval { length: a },
    })
}
