//! Command-line front end: build a model and extension from a parsed
//! configuration, run the requested task, and emit deterministic report
//! files. Level-wise and interval-wise work is fanned out to the rayon pool
//! configured by the binary; results are merged in input order, so thread
//! count never changes outputs.

pub mod config;
pub mod report;

use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;

pub use config::{parse_config, ConfigError, RunConfig};
use config::{ExtensionSpec, LevelSelection, ModelSpec, Parametrization, PiSpec, TaskSpec};

use crate::error::{Error, Result};
use crate::extensions::{b_from_theta, theta_from_b, ExtensionParams, Subspace};
use crate::models::{
    self, boundary_conditions_render, build_interval, build_rank_one, build_seba,
    build_star_graph, eigenfunction_eval, SamplePoint,
};
use crate::preservation::{surviving_eigenspace, PreservationReport, PreserveOptions};
use crate::spectral::{
    new_eigenvalues, pencil_matrix, resolvent_apply, EigenCoordVector, ModelKind, ScanOptions,
    SpectralModel,
};

/// What a run produced.
#[derive(Debug)]
pub struct RunOutcome {
    /// At least one verdict carried the tolerance-sensitive flag.
    pub tolerance_sensitive: bool,
    pub files: Vec<PathBuf>,
    pub summary: String,
}

pub fn build_model(spec: &ModelSpec) -> Result<SpectralModel> {
    match spec {
        ModelSpec::Interval { a, levels } => build_interval(*a, *levels),
        ModelSpec::Star { edges, a, levels } => build_star_graph(*edges, *a, *levels),
        ModelSpec::Seba {
            a,
            b,
            ratio,
            y1,
            y2,
            cutoff,
        } => build_seba(*a, *b, *ratio, *y1, *y2, *cutoff),
        ModelSpec::RankOne {
            levels,
            traces,
            tail,
        } => build_rank_one(levels.clone(), traces.clone(), *tail),
    }
}

fn rows_to_matrix(rows: &[Vec<Complex64>]) -> DMatrix<Complex64> {
    let r = rows.len();
    let c = rows.first().map(|x| x.len()).unwrap_or(0);
    DMatrix::from_fn(r, c, |i, j| rows[i][j])
}

pub fn build_extension(
    model: &SpectralModel,
    spec: &ExtensionSpec,
    rank_tol: f64,
) -> Result<ExtensionParams> {
    let m = model.boundary_dim();
    let pi = match &spec.pi {
        PiSpec::Full => Subspace::full(m),
        PiSpec::Zero => Subspace::zero(m),
        PiSpec::Vectors(vectors) => {
            // Vectors must be orthonormal: the Θ/B matrix refers to exactly
            // this basis of the range, so reordering or reorthogonalizing
            // behind the caller's back would silently change its meaning.
            let mut basis = DMatrix::zeros(m, vectors.len());
            for (j, v) in vectors.iter().enumerate() {
                if v.len() != m {
                    return Err(Error::DimensionMismatch {
                        context: format!("[extension] pi vector {j}"),
                        expected: m,
                        found: v.len(),
                    });
                }
                basis.set_column(j, &DVector::from_vec(v.clone()));
            }
            Subspace::from_orthonormal(basis)?
        }
    };
    let r = pi.dim();
    if r == 0 {
        return Ok(ExtensionParams::unperturbed(m));
    }
    let rows = spec.matrix.as_ref().ok_or_else(|| {
        Error::InvalidParameter(
            "[extension] a projection of positive rank needs 'theta' or 'b'".into(),
        )
    })?;
    if rows.len() != r {
        return Err(Error::DimensionMismatch {
            context: "[extension] matrix on the projection range".into(),
            expected: r,
            found: rows.len(),
        });
    }
    let matrix = rows_to_matrix(rows);
    let _ = rank_tol;
    match spec.parametrization {
        Parametrization::Theta => ExtensionParams::new(pi, matrix),
        Parametrization::BoundaryB => {
            let p0 = model.p0().ok_or_else(|| {
                Error::Unsupported(
                    "the (Π, B) parametrization needs a model with a boundary matrix".into(),
                )
            })?;
            theta_from_b(p0, pi, &matrix)
        }
    }
}

fn level_list(model: &SpectralModel, selection: &LevelSelection) -> Result<Vec<usize>> {
    match selection {
        LevelSelection::First(k) => Ok((0..(*k).min(model.num_levels())).collect()),
        LevelSelection::Explicit(list) => {
            for &l in list {
                if l >= model.num_levels() {
                    return Err(Error::InsufficientSpectralData {
                        requested: l + 1,
                        available: model.num_levels(),
                    });
                }
            }
            Ok(list.clone())
        }
    }
}

/// Execute a validated configuration, writing reports under `out_dir`.
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<RunOutcome> {
    std::fs::create_dir_all(out_dir)
        .map_err(|e| Error::InvalidParameter(format!("cannot create output dir: {e}")))?;
    let model = build_model(&cfg.model)?;
    let ext = build_extension(&model, &cfg.extension, cfg.tolerances.rank)?;
    let trunc = cfg.tolerances.trunc.min(model.num_levels());
    let mut files = Vec::new();
    let mut summary = String::new();
    let mut tolerance_sensitive = false;

    for w in &cfg.warnings {
        summary.push_str(&format!("warning: {w}\n"));
    }

    match &cfg.task {
        TaskSpec::Preserve { levels } => {
            let list = level_list(&model, levels)?;
            let opts = PreserveOptions {
                rank_tol: cfg.tolerances.rank,
                trunc,
                pole_rel: crate::spectral::DEFAULT_POLE_REL,
            };
            let reports: Result<Vec<PreservationReport>> = list
                .par_iter()
                .map(|&l| surviving_eigenspace(&model, l, &ext, &opts))
                .collect();
            let mut reports = reports?;
            reports.sort_by_key(|r| r.level_index);
            tolerance_sensitive = reports.iter().any(|r| r.diagnostics.tolerance_sensitive);
            let preserved = reports.iter().filter(|r| r.preserved).count();
            summary.push_str(&format!(
                "preserve: {} levels analyzed, {} preserved, {} tolerance-sensitive\n",
                reports.len(),
                preserved,
                reports
                    .iter()
                    .filter(|r| r.diagnostics.tolerance_sensitive)
                    .count()
            ));
            let tsv = out_dir.join("preserve.tsv");
            let json = out_dir.join("preserve.json");
            report::write_preserve_tsv(&tsv, &reports)
                .map_err(|e| Error::InvalidParameter(format!("write {tsv:?}: {e}")))?;
            report::write_preserve_json(&json, &reports)
                .map_err(|e| Error::InvalidParameter(format!("write {json:?}: {e}")))?;
            files.push(tsv);
            files.push(json);
        }
        TaskSpec::NewEigenvalues {
            intervals,
            plot_grid,
        } => {
            let opts = ScanOptions {
                grid: cfg.tolerances.grid,
                trunc,
                rank_tol: cfg.tolerances.rank,
                pole_rel: crate::spectral::DEFAULT_POLE_REL,
            };
            let rows: Result<Vec<_>> = intervals
                .par_iter()
                .map(|&(lo, hi)| {
                    new_eigenvalues(&model, &ext, (lo, hi), cfg.tolerances.root, &opts)
                        .map(|roots| ((lo, hi), roots))
                })
                .collect();
            let rows = rows?;
            let total: usize = rows.iter().map(|(_, r)| r.len()).sum();
            summary.push_str(&format!(
                "new-eigenvalues: {} intervals scanned, {} eigenvalues found\n",
                rows.len(),
                total
            ));
            for ((lo, hi), roots) in &rows {
                for r in roots {
                    summary.push_str(&format!(
                        "  λ = {} (multiplicity {}) in [{lo}, {hi}]\n",
                        crate::fmt::sig12(r.lambda),
                        r.multiplicity
                    ));
                }
            }
            let tsv = out_dir.join("roots.tsv");
            report::write_roots_tsv(&tsv, &rows)
                .map_err(|e| Error::InvalidParameter(format!("write {tsv:?}: {e}")))?;
            files.push(tsv);
            if *plot_grid > 0 && ext.rank() > 0 {
                let mut grid_rows = Vec::new();
                for &(lo, hi) in intervals {
                    for g in 0..=*plot_grid {
                        let lam = lo + (hi - lo) * (g as f64) / (*plot_grid as f64);
                        if model.nearest_level_distance(lam) < 1e-9 * lam.abs().max(1.0) {
                            continue;
                        }
                        let (m, _) =
                            pencil_matrix(&model, &ext, Complex64::new(lam, 0.0), trunc)?;
                        let eigs = crate::linalg::hermitian_eigen_sorted(&m).0;
                        grid_rows.push((lam, eigs));
                    }
                }
                let tsv = out_dir.join("pencil.tsv");
                report::write_pencil_tsv(&tsv, ext.rank(), &grid_rows)
                    .map_err(|e| Error::InvalidParameter(format!("write {tsv:?}: {e}")))?;
                files.push(tsv);
            }
        }
        TaskSpec::ResolventProbe { z, phi } => {
            let mut input = EigenCoordVector::new(trunc);
            for &(level, index, value) in phi {
                if level >= model.num_levels() {
                    return Err(Error::InsufficientSpectralData {
                        requested: level + 1,
                        available: model.num_levels(),
                    });
                }
                if index >= model.multiplicity(level) {
                    return Err(Error::DimensionMismatch {
                        context: format!("[task] phi index at level {level}"),
                        expected: model.multiplicity(level),
                        found: index + 1,
                    });
                }
                input.add_coeff(level, index, value);
            }
            let out = resolvent_apply(&model, &ext, *z, &input, trunc)?;
            let coeffs: Vec<(usize, usize, Complex64)> = out
                .coeffs()
                .map(|(&(n, j), &v)| (n, j, v))
                .collect();
            let charges: Vec<(Complex64, DVector<Complex64>)> = out
                .charges()
                .iter()
                .map(|c| (c.z, c.xi.clone()))
                .collect();
            summary.push_str(&format!(
                "resolvent-probe: {} coefficients, {} charges\n",
                coeffs.len(),
                charges.len()
            ));
            let tsv = out_dir.join("resolvent.tsv");
            report::write_resolvent_tsv(&tsv, &coeffs, &charges)
                .map_err(|e| Error::InvalidParameter(format!("write {tsv:?}: {e}")))?;
            files.push(tsv);
        }
        TaskSpec::RenderBc => {
            let b = match cfg.extension.parametrization {
                Parametrization::BoundaryB => cfg
                    .extension
                    .matrix
                    .as_ref()
                    .map(|rows| rows_to_matrix(rows))
                    .unwrap_or_else(|| DMatrix::zeros(0, 0)),
                Parametrization::Theta => {
                    if ext.rank() == 0 {
                        DMatrix::zeros(0, 0)
                    } else {
                        let p0 = model.p0().ok_or_else(|| {
                            Error::Unsupported(
                                "rendering boundary conditions needs the (Π, B) form".into(),
                            )
                        })?;
                        b_from_theta(p0, &ext)
                    }
                }
            };
            let text = boundary_conditions_render(&model, ext.pi(), &b)?;
            summary.push_str(&text);
            let path = out_dir.join("boundary_conditions.txt");
            std::fs::write(&path, &text)
                .map_err(|e| Error::InvalidParameter(format!("write {path:?}: {e}")))?;
            files.push(path);
        }
        TaskSpec::Eigenfunction { level, samples } => {
            let opts = PreserveOptions {
                rank_tol: cfg.tolerances.rank,
                trunc,
                pole_rel: crate::spectral::DEFAULT_POLE_REL,
            };
            let report = surviving_eigenspace(&model, *level, &ext, &opts)?;
            tolerance_sensitive = report.diagnostics.tolerance_sensitive;
            if !report.preserved {
                return Err(Error::InvalidParameter(format!(
                    "level {level} is not preserved by this extension; no eigenfunction to render"
                )));
            }
            let vector = report.eigenvectors[0].reconstruct(&model, trunc)?;
            let samples = (*samples).max(2);
            let (points, header): (Vec<SamplePoint>, &str) = match model.kind() {
                ModelKind::Interval { length } => (
                    (0..samples)
                        .map(|i| SamplePoint::X(length * i as f64 / (samples - 1) as f64))
                        .collect(),
                    "x",
                ),
                ModelKind::StarGraph { edges, length } => {
                    let per_edge = (samples / edges).max(2);
                    (
                        (0..*edges)
                            .flat_map(|e| {
                                (0..per_edge).map(move |i| {
                                    SamplePoint::Edge(
                                        e,
                                        length * i as f64 / (per_edge - 1) as f64,
                                    )
                                })
                            })
                            .collect(),
                        "edge\tx",
                    )
                }
                ModelKind::Seba(data) => {
                    let side = (samples as f64).sqrt().ceil() as usize;
                    (
                        (1..=side)
                            .flat_map(|i| {
                                let a = data.a;
                                let b = data.b;
                                (1..=side).map(move |j| {
                                    SamplePoint::XY(
                                        a * i as f64 / (side + 1) as f64,
                                        b * j as f64 / (side + 1) as f64,
                                    )
                                })
                            })
                            .collect(),
                        "x\ty",
                    )
                }
                ModelKind::Generic => {
                    return Err(Error::Unsupported(
                        "generic models carry no real-space eigenfunctions".into(),
                    ))
                }
            };
            let (values, estimate) = eigenfunction_eval(&model, &vector, &points, trunc, None)?;
            let rows: Vec<(Vec<f64>, Complex64)> = points
                .iter()
                .zip(values.iter())
                .map(|(p, v)| {
                    let coords = match p {
                        SamplePoint::X(x) => vec![*x],
                        SamplePoint::Edge(e, x) => vec![*e as f64, *x],
                        SamplePoint::XY(x, y) => vec![*x, *y],
                    };
                    (coords, *v)
                })
                .collect();
            summary.push_str(&format!(
                "eigenfunction: level {level}, dim {}, {} samples, truncation estimate {}\n",
                report.dim_surviving,
                rows.len(),
                crate::fmt::sig12(estimate)
            ));
            let tsv = out_dir.join("eigenfunction.tsv");
            report::write_eigenfunction_tsv(&tsv, header, estimate, &rows)
                .map_err(|e| Error::InvalidParameter(format!("write {tsv:?}: {e}")))?;
            files.push(tsv);
        }
    }

    // Only models::seba carries grouped degeneracy metadata worth surfacing.
    if let ModelKind::Seba(data) = model.kind() {
        if data.has_exact_coordinates() {
            if let Ok(preserved) = models::seba_common_spectrum_exact(&model) {
                summary.push_str(&format!(
                    "exact common spectrum: {} of {} level groups preserved\n",
                    preserved.len(),
                    model.num_levels()
                ));
            }
        }
    }

    Ok(RunOutcome {
        tolerance_sensitive,
        files,
        summary,
    })
}
