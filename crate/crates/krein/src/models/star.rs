//! Equilateral star graphs: `N` copies of the interval Laplacian coupled
//! through vertex conditions on the stacked boundary space `ℂ^{2N}`.
//!
//! The direct sum structure makes every level `N`-fold degenerate with trace
//! matrix `T_n` whose `k`-th column carries the interval trace vector in the
//! `k`-th edge slot. `P₀`, `Q(z)` and `Q^⊥(λ_n)` are block-diagonal stacks
//! of the interval matrices; the tail constant scales linearly with the
//! number of edges.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::real;
use crate::models::interval;
use crate::spectral::{ModelData, ModelKind, SpectralModel, TailBound};

/// Block-diagonal stack of `edges` copies of a `2×2` matrix.
fn block_stack(edges: usize, block: &DMatrix<Complex64>) -> DMatrix<Complex64> {
    let mut out = DMatrix::zeros(2 * edges, 2 * edges);
    for k in 0..edges {
        for i in 0..2 {
            for j in 0..2 {
                out[(2 * k + i, 2 * k + j)] = block[(i, j)];
            }
        }
    }
    out
}

/// `⊕_k P₀`: the zero-energy boundary matrix of the star graph.
pub fn dirichlet_to_neumann(edges: usize, a: f64) -> DMatrix<Complex64> {
    block_stack(edges, &interval::dirichlet_to_neumann(a))
}

/// The vector `ξ̂_{k,n} ∈ ℂ^{2N}`: the interval trace direction of level
/// index `i` placed in edge slot `k`.
pub fn edge_trace_direction(edges: usize, k: usize, i: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(2 * edges);
    let d = interval::trace_direction(i);
    v[2 * k] = d[0];
    v[2 * k + 1] = d[1];
    v
}

/// The vector `ξ̂_{k,n}^⊥ ∈ ℂ^{2N}`.
pub fn edge_trace_direction_perp(edges: usize, k: usize, i: usize) -> DVector<Complex64> {
    let mut v = DVector::zeros(2 * edges);
    let d = interval::trace_direction_perp(i);
    v[2 * k] = d[0];
    v[2 * k + 1] = d[1];
    v
}

/// Build the star-graph model with the first `levels` eigenvalues.
pub fn build_star_graph(edges: usize, a: f64, levels: usize) -> Result<SpectralModel> {
    if edges == 0 {
        return Err(Error::InvalidParameter("need at least one edge".into()));
    }
    if !(a > 0.0) || !a.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "edge length must be positive, got {a}"
        )));
    }
    if levels == 0 {
        return Err(Error::InvalidParameter("need at least one level".into()));
    }
    let m = 2 * edges;
    let amp = (2.0 / a).sqrt();
    let mut lams = Vec::with_capacity(levels);
    let mut traces = Vec::with_capacity(levels);
    for i in 0..levels {
        let n = (i + 1) as f64;
        let kappa = n * std::f64::consts::PI / a;
        lams.push(-(kappa * kappa));
        let s = if i % 2 == 0 { 1.0 } else { -1.0 };
        let mut t = DMatrix::zeros(m, edges);
        for k in 0..edges {
            t[(2 * k, k)] = real(amp * kappa);
            t[(2 * k + 1, k)] = real(amp * kappa * s);
        }
        traces.push(t);
    }
    let tail = TailBound {
        constant: edges as f64 * 4.0 * a / (std::f64::consts::PI * std::f64::consts::PI),
        exponent: 1.0,
    };
    let trace_scale = amp * std::f64::consts::PI / a * 2f64.sqrt();
    let (aq, nq) = (a, edges);
    let (ap, np) = (a, edges);
    SpectralModel::assemble(ModelData {
        levels: lams,
        traces,
        boundary_dim: m,
        tail,
        trace_scale,
        p0: Some(dirichlet_to_neumann(edges, a)),
        q_closed: Some(Box::new(move |z| {
            block_stack(nq, &interval::q_closed_matrix(aq, z))
        })),
        q_perp_closed: Some(Box::new(move |i| {
            block_stack(np, &interval::q_perp_closed_matrix(ap, i))
        })),
        kind: ModelKind::StarGraph { edges, length: a },
    })
}
