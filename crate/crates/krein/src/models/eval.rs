//! Pointwise evaluation of representation vectors for catalog models whose
//! eigenfunctions are known in real space.
//!
//! Green charges converge slowly pointwise when expanded naively (the sine
//! coefficients decay like `1/n`). For interval-type models the charge is
//! therefore rebased at zero energy, where the Green vectors are the exact
//! linear profiles `(a−x)/a` and `x/a` per edge:
//!
//! ```text
//!   G_z ξ = G₀ ξ + Σ_k ⟨τψ_k, ξ⟩ · z/(λ_k(z−λ_k)) · ψ_k
//! ```
//!
//! leaving a series with `O(k⁻³)`-ish terms. Rectangle charges have no such
//! elementary profile and are expanded directly. The returned error estimate
//! compares the full partial sum against the half-truncation partial sum.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{EigenCoordVector, GreenCharge, ModelKind, SpectralModel};

/// A sample point, matching the model's geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplePoint {
    /// Position on the interval `[0, a]`.
    X(f64),
    /// Edge index (0-based) and position on that edge.
    Edge(usize, f64),
    /// Position inside the rectangle.
    XY(f64, f64),
}

fn basis_value(model: &SpectralModel, level: usize, j: usize, point: SamplePoint) -> Result<f64> {
    match (model.kind(), point) {
        (ModelKind::Interval { length }, SamplePoint::X(x)) => {
            let n = (level + 1) as f64;
            Ok((2.0 / length).sqrt() * (n * std::f64::consts::PI * x / length).sin())
        }
        (ModelKind::StarGraph { edges, length }, SamplePoint::Edge(e, x)) => {
            if e >= *edges {
                return Err(Error::InvalidParameter(format!(
                    "edge {e} out of range for {edges} edges"
                )));
            }
            if j != e {
                return Ok(0.0);
            }
            let n = (level + 1) as f64;
            Ok((2.0 / length).sqrt() * (n * std::f64::consts::PI * x / length).sin())
        }
        (ModelKind::Seba(data), SamplePoint::XY(x, y)) => {
            let (m, n) = data.groups[level].pairs[j];
            let amp = (4.0 / (data.a * data.b)).sqrt();
            Ok(amp
                * (f64::from(m) * std::f64::consts::PI * x / data.a).sin()
                * (f64::from(n) * std::f64::consts::PI * y / data.b).sin())
        }
        (ModelKind::Generic, _) => Err(Error::Unsupported(
            "generic models carry no real-space eigenfunctions".into(),
        )),
        _ => Err(Error::InvalidParameter(
            "sample point kind does not match the model geometry".into(),
        )),
    }
}

/// Value of the zero-energy Green vector `G₀ ξ` at a point, for models where
/// it is an elementary function. `None` when no such profile exists.
fn harmonic_profile(
    model: &SpectralModel,
    xi: &nalgebra::DVector<Complex64>,
    point: SamplePoint,
) -> Option<Result<Complex64>> {
    match (model.kind(), point) {
        (ModelKind::Interval { length }, SamplePoint::X(x)) => Some(Ok(
            xi[0] * ((length - x) / length) + xi[1] * (x / length)
        )),
        (ModelKind::Interval { .. }, _) | (ModelKind::StarGraph { .. }, SamplePoint::X(_)) => {
            Some(Err(Error::InvalidParameter(
                "sample point kind does not match the model geometry".into(),
            )))
        }
        (ModelKind::StarGraph { edges, length }, SamplePoint::Edge(e, x)) => {
            if e >= *edges {
                return Some(Err(Error::InvalidParameter(format!(
                    "edge {e} out of range for {edges} edges"
                ))));
            }
            Some(Ok(
                xi[2 * e] * ((length - x) / length) + xi[2 * e + 1] * (x / length)
            ))
        }
        _ => None,
    }
}

fn supports_harmonic_rebase(model: &SpectralModel) -> bool {
    matches!(
        model.kind(),
        ModelKind::Interval { .. } | ModelKind::StarGraph { .. }
    )
}

/// Coefficients of a charge after rebasing at zero energy:
/// `⟨τψ_k, ξ⟩ z/(λ_k(z−λ_k))`, plus the level correction
/// `+⟨τψ_n, ξ⟩/λ_n` when level `n` is excluded from the charge.
fn rebased_charge_coeffs(
    model: &SpectralModel,
    ch: &GreenCharge,
    trunc: usize,
    into: &mut BTreeMap<(usize, usize), Complex64>,
) -> Result<()> {
    for k in 0..trunc {
        let lam = Complex64::new(model.level(k), 0.0);
        let pairing = model.trace_matrix(k).adjoint() * &ch.xi;
        if Some(k) == ch.excluded_level {
            for j in 0..pairing.len() {
                let c = pairing[j] / lam;
                if c.norm() != 0.0 {
                    *into.entry((k, j)).or_insert(Complex64::new(0.0, 0.0)) += c;
                }
            }
            continue;
        }
        let denom = ch.z - lam;
        if denom.norm() < 1e-300 {
            return Err(Error::Pole {
                z: ch.z,
                level_lambda: model.level(k),
            });
        }
        let factor = ch.z / (lam * denom);
        for j in 0..pairing.len() {
            let c = pairing[j] * factor;
            if c.norm() != 0.0 {
                *into.entry((k, j)).or_insert(Complex64::new(0.0, 0.0)) += c;
            }
        }
    }
    Ok(())
}

/// Evaluate `φ = ψ-part + Green charges` at the sample points through the
/// truncated eigenfunction series. Returns the values and a truncation-error
/// estimate (difference between the full and half partial sums); when `tol`
/// is given and the estimate exceeds it, the evaluation is rejected.
pub fn eigenfunction_eval(
    model: &SpectralModel,
    vector: &EigenCoordVector,
    points: &[SamplePoint],
    trunc: usize,
    tol: Option<f64>,
) -> Result<(Vec<Complex64>, f64)> {
    let trunc = trunc.min(model.num_levels());
    if trunc == 0 {
        return Err(Error::InvalidParameter("truncation must be at least 1".into()));
    }

    let zero = Complex64::new(0.0, 0.0);
    let mut coeffs: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
    for (&(n, j), &c) in vector.coeffs() {
        if n >= model.num_levels() {
            return Err(Error::InsufficientSpectralData {
                requested: n + 1,
                available: model.num_levels(),
            });
        }
        if n < trunc {
            *coeffs.entry((n, j)).or_insert(zero) += c;
        }
    }

    let rebase = supports_harmonic_rebase(model);
    let mut baseline = vec![zero; points.len()];
    for ch in vector.charges() {
        if rebase {
            rebased_charge_coeffs(model, ch, trunc, &mut coeffs)?;
            for (p, point) in points.iter().enumerate() {
                baseline[p] += harmonic_profile(model, &ch.xi, *point)
                    .expect("rebase support checked")?;
            }
        } else {
            // Plain expansion of this charge.
            let mut single = EigenCoordVector::new(trunc);
            single.add_charge(ch.z, ch.xi.clone(), ch.excluded_level);
            let expanded = single.expanded(model)?;
            for (&(n, j), &c) in expanded.coeffs() {
                *coeffs.entry((n, j)).or_insert(zero) += c;
            }
        }
    }

    let mut full = baseline.clone();
    let mut half = baseline;
    let half_cut = trunc / 2;
    for (&(n, j), &c) in coeffs.iter() {
        for (p, point) in points.iter().enumerate() {
            let v = c * basis_value(model, n, j, *point)?;
            full[p] += v;
            if n < half_cut {
                half[p] += v;
            }
        }
    }
    let estimate = full
        .iter()
        .zip(half.iter())
        .map(|(f, h)| (f - h).norm())
        .fold(0.0f64, f64::max);
    if let Some(tol) = tol {
        if estimate > tol {
            return Err(Error::TruncationInsufficient {
                bound: estimate,
                tolerance: tol,
                needed: 2 * trunc,
            });
        }
    }
    Ok((full, estimate))
}
