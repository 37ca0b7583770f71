//! Render extension parameters as explicit boundary conditions for the
//! interval and star-graph models, in terms of the boundary value vector
//! `γ₀φ` and the boundary derivative vector `γ₁φ = (φ′(0), −φ′(a))` per
//! edge.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extensions::Subspace;
use crate::fmt::complex_compact;
use crate::spectral::{ModelKind, SpectralModel};

fn near(a: Complex64, b: Complex64) -> bool {
    (a - b).norm() < 1e-12
}

fn term(coef: Complex64, symbol: &str, first: bool) -> Option<String> {
    if coef.norm() < 1e-12 {
        return None;
    }
    let one = Complex64::new(1.0, 0.0);
    let body = if near(coef, one) {
        symbol.to_string()
    } else if near(coef, -one) {
        if first {
            format!("-{symbol}")
        } else {
            return Some(format!("- {symbol}"));
        }
    } else if coef.re < 0.0 && coef.im == 0.0 && !first {
        return Some(format!("- {}·{symbol}", complex_compact(-coef)));
    } else {
        format!("{}·{symbol}", complex_compact(coef))
    };
    if first {
        Some(body)
    } else {
        Some(format!("+ {body}"))
    }
}

fn equation(coefs: &[(Complex64, String)]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (c, s) in coefs {
        if let Some(t) = term(*c, s, parts.is_empty()) {
            parts.push(t);
        }
    }
    if parts.is_empty() {
        "0 = 0".to_string()
    } else {
        format!("{} = 0", parts.join(" "))
    }
}

/// Human-readable boundary conditions of the extension `(Π, B)`.
pub fn boundary_conditions_render(
    model: &SpectralModel,
    pi: &Subspace,
    b: &DMatrix<Complex64>,
) -> Result<String> {
    let r = pi.dim();
    if b.nrows() != r || b.ncols() != r {
        return Err(Error::DimensionMismatch {
            context: "boundary parameter B".into(),
            expected: r,
            found: b.nrows().max(b.ncols()),
        });
    }
    match model.kind() {
        ModelKind::Interval { .. } => render_interval(pi, b),
        ModelKind::StarGraph { edges, .. } => render_star(*edges, pi, b),
        _ => Err(Error::Unsupported(
            "boundary conditions are rendered for interval and star-graph models only".into(),
        )),
    }
}

fn render_interval(pi: &Subspace, b: &DMatrix<Complex64>) -> Result<String> {
    let one = Complex64::new(1.0, 0.0);
    match pi.dim() {
        0 => Ok("Dirichlet (unperturbed):\n  φ(0) = 0\n  φ(a) = 0\n".to_string()),
        1 => {
            let w1 = pi.basis()[(0, 0)];
            let w2 = pi.basis()[(1, 0)];
            let beta = b[(0, 0)];
            let line1 = equation(&[(w2, "φ(0)".into()), (-w1, "φ(a)".into())]);
            let line2 = equation(&[
                (w1.conj() * beta, "φ(0)".into()),
                (-w1.conj(), "φ′(0)".into()),
                (w2.conj() * beta, "φ(a)".into()),
                (w2.conj(), "φ′(a)".into()),
            ]);
            Ok(format!("  {line1}\n  {line2}\n"))
        }
        2 => {
            // Express B in the standard basis of ℂ²: the stored basis of a
            // full projection may be any unitary.
            let u = pi.basis();
            let b_std = u * b * u.adjoint();
            let line1 = equation(&[
                (b_std[(0, 0)], "φ(0)".into()),
                (-one, "φ′(0)".into()),
                (b_std[(0, 1)], "φ(a)".into()),
            ]);
            let line2 = equation(&[
                (b_std[(1, 0)], "φ(0)".into()),
                (b_std[(1, 1)], "φ(a)".into()),
                (one, "φ′(a)".into()),
            ]);
            Ok(format!("  {line1}\n  {line2}\n"))
        }
        d => Err(Error::DimensionMismatch {
            context: "interval projection rank".into(),
            expected: 2,
            found: d,
        }),
    }
}

fn render_star(edges: usize, pi: &Subspace, b: &DMatrix<Complex64>) -> Result<String> {
    let m = 2 * edges;
    if pi.ambient_dim() != m {
        return Err(Error::DimensionMismatch {
            context: "star graph boundary space".into(),
            expected: m,
            found: pi.ambient_dim(),
        });
    }
    let value_symbols: Vec<String> = (0..edges)
        .flat_map(|k| {
            let e = k + 1;
            [format!("φ{e}(0)"), format!("φ{e}(a)")]
        })
        .collect();
    let deriv_symbols: Vec<String> = (0..edges)
        .flat_map(|k| {
            let e = k + 1;
            [format!("φ{e}′(0)"), format!("-φ{e}′(a)")]
        })
        .collect();

    let r = pi.dim();
    if r == 0 {
        let mut out = String::from("Dirichlet on every edge (unperturbed):\n");
        for s in &value_symbols {
            out.push_str(&format!("  {s} = 0\n"));
        }
        return Ok(out);
    }

    let mut out = String::new();
    if r == m {
        // γ₁φ = B γ₀φ component-wise in the standard basis.
        let u = pi.basis();
        let b_std = u * b * u.adjoint();
        for i in 0..m {
            let mut coefs: Vec<(Complex64, String)> = (0..m)
                .map(|j| (b_std[(i, j)], value_symbols[j].clone()))
                .collect();
            coefs.push((-Complex64::new(1.0, 0.0), deriv_symbols[i].clone()));
            out.push_str(&format!("  {}\n", equation(&coefs)));
        }
        return Ok(out);
    }

    // General projection: membership conditions (boundary values lie in the
    // range of Π) plus the coupling rows on the range basis.
    out.push_str("boundary-value membership, (1-Π)·γ₀φ = 0:\n");
    let complement = pi.complement();
    for c in 0..complement.dim() {
        let coefs: Vec<(Complex64, String)> = (0..m)
            .map(|j| (complement.basis()[(j, c)].conj(), value_symbols[j].clone()))
            .collect();
        out.push_str(&format!("  {}\n", equation(&coefs)));
    }
    out.push_str("coupling, Π·γ₁φ = B·γ₀φ on the range basis:\n");
    for row in 0..r {
        let mut coefs: Vec<(Complex64, String)> = Vec::new();
        for j in 0..m {
            // (B P* γ₀φ)_row expressed on raw boundary values.
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..r {
                acc += b[(row, l)] * pi.basis()[(j, l)].conj();
            }
            coefs.push((acc, value_symbols[j].clone()));
        }
        for j in 0..m {
            coefs.push((-pi.basis()[(j, row)].conj(), deriv_symbols[j].clone()));
        }
        out.push_str(&format!("  {}\n", equation(&coefs)));
    }
    Ok(out)
}
