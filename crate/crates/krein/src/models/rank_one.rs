//! Generic rank-one perturbations: user-supplied levels, multiplicities and
//! scalar trace values with boundary space `ℂ`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{ModelData, ModelKind, SpectralModel, TailBound};

/// Build a rank-one model from explicit spectral data. Each entry of
/// `trace_values[n]` is the trace of one orthonormal eigenvector of level
/// `n`, so multiplicities are the row lengths. `tail` may be omitted for a
/// finite model (the tail is then exactly zero).
pub fn build_rank_one(
    levels: Vec<f64>,
    trace_values: Vec<Vec<Complex64>>,
    tail: Option<TailBound>,
) -> Result<SpectralModel> {
    if levels.len() != trace_values.len() {
        return Err(Error::InvalidModel(format!(
            "{} levels but {} trace rows",
            levels.len(),
            trace_values.len()
        )));
    }
    let traces: Vec<DMatrix<Complex64>> = trace_values
        .iter()
        .map(|row| DMatrix::from_row_slice(1, row.len(), row))
        .collect();
    let trace_scale = trace_values
        .iter()
        .flatten()
        .map(|v| v.norm())
        .fold(0.0f64, f64::max)
        .max(1e-12);
    SpectralModel::assemble(ModelData {
        levels,
        traces,
        boundary_dim: 1,
        tail: tail.unwrap_or(TailBound {
            constant: 0.0,
            exponent: 1.0,
        }),
        trace_scale,
        p0: None,
        q_closed: None,
        q_perp_closed: None,
        kind: ModelKind::Generic,
    })
}
