//! Deterministic report writers: tab-separated tables and a structured JSON
//! mirror of the preservation reports. All numbers are rendered with 12
//! significant digits through [`crate::fmt`], so identical configs produce
//! byte-identical outputs.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64;

use crate::fmt;
use crate::preservation::PreservationReport;
use crate::spectral::NewEigenvalue;

pub type IoResult<T> = std::io::Result<T>;

fn case_name(tag: crate::preservation::CaseTag) -> &'static str {
    match tag {
        crate::preservation::CaseTag::PiZero => "PiZero",
        crate::preservation::CaseTag::TraceRangeZero => "TraceRangeZero",
        crate::preservation::CaseTag::Case1 => "Case1",
        crate::preservation::CaseTag::Case2 => "Case2",
    }
}

pub fn write_preserve_tsv(path: &Path, reports: &[PreservationReport]) -> IoResult<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "level\tlambda\tcase\tpreserved\tdim\tresidual\ttolerance_sensitive"
    )?;
    for r in reports {
        writeln!(
            f,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.level_index,
            fmt::sig12(r.lambda),
            case_name(r.case_tag),
            r.preserved,
            r.dim_surviving,
            fmt::sig12(r.diagnostics.residual),
            r.diagnostics.tolerance_sensitive
        )?;
    }
    Ok(())
}

fn complex_json(z: Complex64) -> serde_json::Value {
    serde_json::Value::String(fmt::complex(z))
}

fn vector_json(v: &nalgebra::DVector<Complex64>) -> serde_json::Value {
    serde_json::Value::Array(v.iter().map(|z| complex_json(*z)).collect())
}

pub fn report_json(r: &PreservationReport) -> serde_json::Value {
    serde_json::json!({
        "level_index": r.level_index,
        "lambda": fmt::sig12(r.lambda),
        "case": case_name(r.case_tag),
        "preserved": r.preserved,
        "dim_surviving": r.dim_surviving,
        "eigenvectors": r.eigenvectors.iter().map(|v| serde_json::json!({
            "psi": vector_json(&v.psi),
            "xi": vector_json(&v.xi),
        })).collect::<Vec<_>>(),
        "diagnostics": {
            "trace_rank": r.diagnostics.trace_rank,
            "intersect_dim": r.diagnostics.intersect_dim,
            "principal_cosines": r.diagnostics.principal_cosines.iter()
                .map(|c| serde_json::Value::String(fmt::sig12(*c))).collect::<Vec<_>>(),
            "residual": fmt::sig12(r.diagnostics.residual),
            "q_perp_bound": fmt::sig12(r.diagnostics.q_perp_bound),
            "rank_tol": fmt::sig12(r.diagnostics.rank_tol),
            "tolerance_sensitive": r.diagnostics.tolerance_sensitive,
        },
    })
}

pub fn write_preserve_json(path: &Path, reports: &[PreservationReport]) -> IoResult<()> {
    let doc = serde_json::json!({
        "levels": reports.iter().map(report_json).collect::<Vec<_>>(),
    });
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "{}", serde_json::to_string_pretty(&doc)?)?;
    Ok(())
}

pub fn write_roots_tsv(
    path: &Path,
    rows: &[((f64, f64), Vec<NewEigenvalue>)],
) -> IoResult<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(
        f,
        "interval_lo\tinterval_hi\tlambda\tmultiplicity\tresidual\tat_boundary"
    )?;
    for ((lo, hi), roots) in rows {
        for r in roots {
            writeln!(
                f,
                "{}\t{}\t{}\t{}\t{}\t{}",
                fmt::sig12(*lo),
                fmt::sig12(*hi),
                fmt::sig12(r.lambda),
                r.multiplicity,
                fmt::sig12(r.residual),
                r.at_boundary
            )?;
        }
    }
    Ok(())
}

pub fn write_pencil_tsv(path: &Path, branches: usize, rows: &[(f64, Vec<f64>)]) -> IoResult<()> {
    let mut f = std::fs::File::create(path)?;
    let mut header = String::from("lambda");
    for i in 0..branches {
        header.push_str(&format!("\teig_{i}"));
    }
    header.push_str("\tdet");
    writeln!(f, "{header}")?;
    for (lam, eigs) in rows {
        let mut line = fmt::sig12(*lam);
        let mut det = 1.0;
        for e in eigs {
            line.push('\t');
            line.push_str(&fmt::sig12(*e));
            det *= e;
        }
        line.push('\t');
        line.push_str(&fmt::sig12(det));
        writeln!(f, "{line}")?;
    }
    Ok(())
}

pub fn write_resolvent_tsv(
    path: &Path,
    coeffs: &[(usize, usize, Complex64)],
    charges: &[(Complex64, nalgebra::DVector<Complex64>)],
) -> IoResult<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "kind\ta\tb\tvalue")?;
    for (n, j, v) in coeffs {
        writeln!(f, "coeff\t{n}\t{j}\t{}", fmt::complex(*v))?;
    }
    for (z, xi) in charges {
        for (i, v) in xi.iter().enumerate() {
            writeln!(f, "charge\t{}\t{i}\t{}", fmt::complex(*z), fmt::complex(*v))?;
        }
    }
    Ok(())
}

pub fn write_eigenfunction_tsv(
    path: &Path,
    header: &str,
    estimate: f64,
    rows: &[(Vec<f64>, Complex64)],
) -> IoResult<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# truncation_estimate\t{}", fmt::sig12(estimate))?;
    writeln!(f, "{header}\tre\tim")?;
    for (coords, v) in rows {
        let mut line = String::new();
        for (i, c) in coords.iter().enumerate() {
            if i > 0 {
                line.push('\t');
            }
            line.push_str(&fmt::sig12(*c));
        }
        writeln!(f, "{line}\t{}\t{}", fmt::sig12(v.re), fmt::sig12(v.im))?;
    }
    Ok(())
}
