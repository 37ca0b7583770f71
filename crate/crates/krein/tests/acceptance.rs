//! Acceptance suite: one test per criterion, each printing a PASS line on
//! success (run with `--nocapture` to see them). Tolerances are pinned in
//! the assertions.

mod common;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use krein::models::interval::{trace_direction, trace_direction_perp};
use krein::models::star::{edge_trace_direction, edge_trace_direction_perp};
use krein::models::{
    build_interval, build_seba, build_star_graph, eigenfunction_eval, seba_common_spectrum_exact,
    Coordinate, SamplePoint, SideRatio,
};
use krein::{
    block_decompose, new_eigenvalues, pencil_matrix, q_matrix, q_matrix_series, q_perp_matrix,
    q_perp_matrix_series, resolvent_apply, subspace_intersect, surviving_eigenspace, theta_from_b,
    CaseTag, EigenCoordVector, ExtensionParams, ModelKind, PreserveOptions, ScanOptions,
    SpectralModel, Subspace,
};

const PI: f64 = std::f64::consts::PI;

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn random_hermitian(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<Complex64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = c(rng.gen_range(-2.0..2.0));
        for j in (i + 1)..n {
            let z = Complex64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            m[(i, j)] = z;
            m[(j, i)] = z.conj();
        }
    }
    m
}

fn random_unit_complex(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    let v = DVector::from_fn(n, |_, _| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    });
    let norm = v.norm();
    v / c(norm)
}

fn preserve_opts(trunc: usize) -> PreserveOptions {
    PreserveOptions::with_trunc(trunc)
}

fn full_b_extension(model: &SpectralModel, b: &DMatrix<Complex64>) -> ExtensionParams {
    let p0 = model.p0().expect("model with boundary matrix");
    theta_from_b(p0, Subspace::full(model.boundary_dim()), b).expect("valid extension")
}

/// Criterion 1: for a = π, n = 1..20 and 200 random Hermitian B with Π = 1,
/// the survival verdict equals the sign test b11 + b22 + 2(−1)^n Re b12 = 0.
#[test]
fn criterion_1_interval_preservation_law() {
    let model = build_interval(PI, 64).unwrap();
    let opts = preserve_opts(64);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    let mut zero_cases = 0usize;
    for trial in 0..200 {
        let mut b = random_hermitian(&mut rng, 2);
        // A fifth of the draws are projected onto the preservation manifold
        // of one parity class, so both verdict values occur.
        if trial % 5 == 0 {
            let parity_sign = if trial % 2 == 0 { 1.0 } else { -1.0 };
            let b22 = -b[(0, 0)].re - 2.0 * parity_sign * b[(0, 1)].re;
            b[(1, 1)] = c(b22);
        }
        let ext = full_b_extension(&model, &b);
        let scale = 1.0 + b.norm();
        for i in 0..20 {
            let minus_one_n = if (i + 1) % 2 == 0 { 1.0 } else { -1.0 };
            let sign = b[(0, 0)].re + b[(1, 1)].re + 2.0 * minus_one_n * b[(0, 1)].re;
            let expected = sign.abs() <= 1e-9 * scale;
            if expected {
                zero_cases += 1;
            }
            let report = surviving_eigenspace(&model, i, &ext, &opts).unwrap();
            assert_eq!(
                report.preserved, expected,
                "trial {trial}, level n={} (sign {sign:.3e})",
                i + 1
            );
        }
    }
    assert!(zero_cases >= 100, "constructed zero cases must be exercised");
    println!(
        "PASS criterion 1: interval preservation verdict equals the parity sign law on 200 random B ({zero_cases} preserved cases included)"
    );
}

/// Criterion 2: with Π = w⊗w the verdict equals `w = ξ̂_n^⊥ up to phase`,
/// phase invariance checked explicitly.
#[test]
fn criterion_2_rank_one_projection_case() {
    let model = build_interval(PI, 64).unwrap();
    let opts = preserve_opts(64);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    for trial in 0..200 {
        let w = random_unit_complex(&mut rng, 2);
        let b_val = rng.gen_range(-2.0..2.0);
        let ext = ExtensionParams::rank_one(&w, b_val).unwrap();
        for i in 0..6 {
            let perp = trace_direction_perp(i);
            let overlap = (perp.adjoint() * &w)[0].norm();
            let aligned = (overlap - 1.0).abs() < 1e-9;
            let report = surviving_eigenspace(&model, i, &ext, &opts).unwrap();
            assert_eq!(report.preserved, aligned, "trial {trial}, level {i}");
        }
    }
    // Phase invariance: e^{iα} ξ̂_n^⊥ preserves level n for every phase.
    for i in 0..4 {
        let mut verdicts = Vec::new();
        for alpha in [0.0, 0.7, 2.1, PI, 4.4] {
            let phase = Complex64::new(alpha.cos(), alpha.sin());
            let w = trace_direction_perp(i).map(|x| x * phase);
            let ext = ExtensionParams::rank_one(&w, 0.42).unwrap();
            let report = surviving_eigenspace(&model, i, &ext, &preserve_opts(64)).unwrap();
            verdicts.push((report.preserved, report.dim_surviving));
            assert!(report.preserved, "phase {alpha}, level {i}");
        }
        assert!(verdicts.windows(2).all(|w| w[0] == w[1]));
    }
    println!(
        "PASS criterion 2: rank-one projection verdict equals phase-invariant alignment with the perp trace direction (200 random w)"
    );
}

/// Criterion 3: the Neumann parameters (Π = 1, B = 0) on a = π add the
/// eigenvalue 0 and preserve every Dirichlet level.
#[test]
fn criterion_3_neumann_spectrum() {
    let model = build_interval(PI, 400).unwrap();
    let ext = full_b_extension(&model, &DMatrix::zeros(2, 2));
    let opts = ScanOptions::with_trunc(400);

    let interior = new_eigenvalues(&model, &ext, (-0.5, -1e-6), 1e-9, &opts).unwrap();
    assert!(
        interior.is_empty(),
        "no new eigenvalue strictly inside (-0.5, -1e-6)"
    );

    let with_boundary = new_eigenvalues(&model, &ext, (-0.5, 0.0), 1e-9, &opts).unwrap();
    assert_eq!(with_boundary.len(), 1);
    assert!(with_boundary[0].lambda.abs() <= 1e-9, "zero found to 1e-9");
    assert_eq!(with_boundary[0].multiplicity, 1);

    // The new eigenvector is the constant function: G₀ (1,1)/√2 ∝ 1.
    let root = &with_boundary[0];
    let vector = krein::extension_eigenvector(root, 0, 400);
    let pts: Vec<SamplePoint> = (1..8).map(|i| SamplePoint::X(PI * i as f64 / 8.0)).collect();
    let (vals, _) = eigenfunction_eval(&model, &vector, &pts, 400, None).unwrap();
    let first = vals[0];
    assert!(first.norm() > 1e-6);
    for v in &vals {
        assert!((v - first).norm() < 1e-6 * first.norm(), "constant profile");
    }

    let opts_p = preserve_opts(400);
    for i in 0..30 {
        let report = surviving_eigenspace(&model, i, &ext, &opts_p).unwrap();
        assert!(report.preserved, "level {} preserved", i + 1);
        assert_eq!(report.dim_surviving, 1);
    }
    println!(
        "PASS criterion 3: Neumann extension spectrum is {{0}} joined with every Dirichlet level (0 found to 1e-9)"
    );
}

/// Criterion 4: rationality of the perturbation point governs the common
/// spectrum of the rectangle, exactly and numerically.
#[test]
fn criterion_4_rectangle_rationality() {
    let b_side = 2f64.powf(0.25);
    let cutoff = 2000.0;

    // (y1/a, y2/b) = (1/2, irrational): common spectrum is the even-m family.
    let model = build_seba(
        1.0,
        b_side,
        SideRatio::Irrational,
        Coordinate::rational(1, 2).unwrap(),
        Coordinate::Irrational {
            value: std::f64::consts::FRAC_1_SQRT_2,
        },
        cutoff,
    )
    .unwrap();
    let exact: Vec<usize> = seba_common_spectrum_exact(&model).unwrap();
    let data = match model.kind() {
        ModelKind::Seba(d) => d,
        _ => unreachable!(),
    };
    for (idx, g) in data.groups.iter().enumerate() {
        let expected = g.pairs[0].0 % 2 == 0;
        assert_eq!(exact.contains(&idx), expected, "group {idx}");
    }
    assert!(!exact.is_empty());
    agree_engine_with_exact(&model, &exact);

    // (1/3, 2/5): union of the two families {3|m} ∪ {5|n}.
    let model = build_seba(
        1.0,
        b_side,
        SideRatio::Irrational,
        Coordinate::rational(1, 3).unwrap(),
        Coordinate::rational(2, 5).unwrap(),
        cutoff,
    )
    .unwrap();
    let exact = seba_common_spectrum_exact(&model).unwrap();
    let data = match model.kind() {
        ModelKind::Seba(d) => d,
        _ => unreachable!(),
    };
    for (idx, g) in data.groups.iter().enumerate() {
        let (m, n) = g.pairs[0];
        let expected = m % 3 == 0 || n % 5 == 0;
        assert_eq!(exact.contains(&idx), expected, "group {idx} (m={m}, n={n})");
    }
    assert!(!exact.is_empty());
    agree_engine_with_exact(&model, &exact);

    // Degenerate square: the engine agrees with the exact predicate on
    // multiplicity-2+ groups as well.
    let square = build_seba(
        1.0,
        1.0,
        SideRatio::Rational { num: 1, den: 1 },
        Coordinate::rational(1, 3).unwrap(),
        Coordinate::rational(2, 5).unwrap(),
        cutoff,
    )
    .unwrap();
    let exact = seba_common_spectrum_exact(&square).unwrap();
    agree_engine_with_exact(&square, &exact);
    let square_data = match square.kind() {
        ModelKind::Seba(d) => d,
        _ => unreachable!(),
    };
    assert!(
        square_data.groups.iter().any(|g| g.pairs.len() >= 2),
        "square spectrum must contain degenerate groups"
    );

    println!(
        "PASS criterion 4: rectangle common spectrum matches the rationality families exactly, and the survival engine agrees on every level group"
    );
}

fn agree_engine_with_exact(model: &SpectralModel, exact: &[usize]) {
    let theta = DMatrix::from_element(1, 1, c(0.9));
    let ext = ExtensionParams::full(theta).unwrap();
    let opts = preserve_opts(model.num_levels());
    for idx in 0..model.num_levels() {
        let report = surviving_eigenspace(model, idx, &ext, &opts).unwrap();
        assert_eq!(
            report.preserved,
            exact.contains(&idx),
            "level group {idx} at λ={}",
            model.level(idx)
        );
    }
}

/// Criterion 5: star graph with Π = 1 survives a level iff the perp-block
/// of B is singular; annihilated trace columns shortcut to survival.
#[test]
fn criterion_5_star_graph() {
    let edges = 3;
    let model = build_star_graph(edges, PI, 64).unwrap();
    let opts = preserve_opts(64);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);

    let perp_block = |b: &DMatrix<Complex64>, i: usize| -> DMatrix<Complex64> {
        let par = Subspace::span(
            6,
            &(0..edges)
                .map(|k| edge_trace_direction(edges, k, i))
                .collect::<Vec<_>>(),
            1e-9,
        )
        .unwrap();
        let perp = Subspace::span(
            6,
            &(0..edges)
                .map(|k| edge_trace_direction_perp(edges, k, i))
                .collect::<Vec<_>>(),
            1e-9,
        )
        .unwrap();
        block_decompose(b, &par, &perp).unwrap().perp
    };

    for trial in 0..100 {
        let b = if trial % 4 == 0 {
            // Constructed singular perp block for the parity of level
            // index trial % 2.
            let i = trial % 2;
            let wperp: Vec<DVector<Complex64>> = (0..edges)
                .map(|k| edge_trace_direction_perp(edges, k, i))
                .collect();
            let wpar: Vec<DVector<Complex64>> = (0..edges)
                .map(|k| edge_trace_direction(edges, k, i))
                .collect();
            let mut m = random_hermitian(&mut rng, edges);
            // Null the first perp direction: rank-deficient perp block.
            for j in 0..edges {
                m[(0, j)] = c(0.0);
                m[(j, 0)] = c(0.0);
            }
            let h = random_hermitian(&mut rng, edges);
            let mut b = DMatrix::zeros(6, 6);
            for p in 0..edges {
                for q in 0..edges {
                    b += &wperp[p] * wperp[q].adjoint() * m[(p, q)];
                    b += &wpar[p] * wpar[q].adjoint() * h[(p, q)];
                }
            }
            b
        } else {
            random_hermitian(&mut rng, 6)
        };
        let ext = full_b_extension(&model, &b);
        let bnorm = krein::linalg::spectral_norm(&b).max(1e-6);
        for i in 0..2 {
            let det = perp_block(&b, i).determinant().norm();
            let expected = det <= 1e-9 * bnorm.powi(edges as i32);
            let report = surviving_eigenspace(&model, i, &ext, &opts).unwrap();
            assert_eq!(
                report.preserved, expected,
                "trial {trial}, level {i}, det {det:.3e}"
            );
            if expected && trial % 4 == 0 {
                assert_eq!(report.case_tag, CaseTag::Case2);
                assert!(report.dim_surviving >= 1);
            }
        }
    }

    // Shortcut: projections annihilating one trace column force survival.
    let i = 2usize;
    let killed = edge_trace_direction(edges, 0, i);
    let mut fired_count = 0;
    for _ in 0..20 {
        let mut vectors = Vec::new();
        for _ in 0..3 {
            let v = random_unit_complex(&mut rng, 6);
            let overlap = (killed.adjoint() * &v)[0];
            vectors.push(v - &killed * overlap);
        }
        let pi = krein::make_projection(6, &vectors, 1e-9).unwrap();
        if pi.dim() == 0 {
            continue;
        }
        let theta = {
            let raw = random_hermitian(&mut rng, pi.dim());
            raw
        };
        let ext = ExtensionParams::new(pi, theta).unwrap();
        let fired = krein::sufficient_checks(&model, i, &ext, &opts).unwrap();
        assert!(fired
            .iter()
            .any(|s| matches!(s, krein::preservation::Shortcut::TraceColumnAnnihilated { column: 0 })));
        fired_count += 1;
        let report = surviving_eigenspace(&model, i, &ext, &opts).unwrap();
        assert!(report.preserved, "shortcut implies survival");
    }
    assert!(fired_count >= 18);
    println!(
        "PASS criterion 5: star-graph verdict equals the singular perp-block law on 100 random B, and annihilated-column shortcuts force survival"
    );
}

/// Criterion 6: the calibration identity — the perp trace direction is
/// annihilated by P₀ + Q^⊥(λ_n) — holds for the series at truncation 1e5
/// within the certified tail bound, for n = 1..50.
#[test]
fn criterion_6_calibration_identity_series() {
    let model = build_interval(PI, 100_000).unwrap();
    let p0 = model.p0().unwrap().clone();
    for i in 0..50 {
        let (q_perp, bound) = q_perp_matrix_series(&model, i, 100_000).unwrap();
        let v = trace_direction_perp(i);
        let quad = (v.adjoint() * (&p0 + &q_perp) * &v)[0];
        assert!(
            quad.norm() <= bound,
            "level {}: |quadratic form| {:.3e} exceeds certified bound {bound:.3e}",
            i + 1,
            quad.norm()
        );
        // The closed form satisfies the identity to machine precision.
        let (q_exact, _) = q_perp_matrix(&model, i, 1).unwrap();
        let quad_exact = (v.adjoint() * (&p0 + &q_exact) * &v)[0];
        assert!(quad_exact.norm() < 1e-13);
    }
    println!(
        "PASS criterion 6: calibration identity holds for n = 1..50 within the certified tail bound at truncation 1e5"
    );
}

/// Criterion 7: the Krein resolvent of the Robin–Dirichlet extension matches
/// a 1e4-point finite-difference solve to relative L² error 1e-3, and the
/// gap eigenvalues match the transcendental secular equation to 1e-9.
#[test]
fn criterion_7_robin_dirichlet_oracles() {
    let a = PI;
    let b_coef = 1.0;
    let levels = 5000;
    let model = build_interval(a, levels).unwrap();
    let w = DVector::from_vec(vec![c(1.0), c(0.0)]);
    let pi = Subspace::span(2, &[w], 1e-9).unwrap();
    let p0 = model.p0().unwrap().clone();
    let ext = theta_from_b(&p0, pi, &DMatrix::from_element(1, 1, c(b_coef))).unwrap();

    // Resolvent against the finite-difference oracle at z = -0.3.
    let z = Complex64::new(-0.3, 0.0);
    let phi = EigenCoordVector::from_level(0, &[c(1.0)], levels);
    let out = resolvent_apply(&model, &ext, z, &phi, levels).unwrap();

    let m_fd = 10_000;
    let amp = (2.0 / a).sqrt();
    let f = move |x: f64| amp * x.sin();
    let (grid, u_fd) = common::fd_robin_dirichlet_resolvent(a, b_coef, z.re, &f, m_fd);

    let stride = 4;
    let sample_idx: Vec<usize> = (0..grid.len()).step_by(stride).collect();
    let points: Vec<SamplePoint> = sample_idx.iter().map(|&i| SamplePoint::X(grid[i])).collect();
    let (vals, _) = eigenfunction_eval(&model, &out, &points, levels, None).unwrap();
    let reference: Vec<f64> = sample_idx.iter().map(|&i| u_fd[i]).collect();
    let test: Vec<f64> = vals.iter().map(|v| v.re).collect();
    let imag_max = vals.iter().map(|v| v.im.abs()).fold(0.0f64, f64::max);
    assert!(imag_max < 1e-10, "real problem must stay real");
    let err = common::relative_l2_error(&reference, &test, false);
    assert!(
        err <= 1e-3,
        "relative L2 error {err:.3e} vs finite differences"
    );

    // Gap eigenvalues against the secular equation.
    let secular = common::secular_robin_dirichlet(a, b_coef, 5);
    let opts = ScanOptions::with_trunc(levels);
    for (n, lam_exact) in secular.iter().enumerate() {
        let (lo, hi) = if n == 0 {
            (-1.0 + 1e-9, -1e-12)
        } else {
            let upper = -((n as f64) * (n as f64));
            let lower = -(((n + 1) as f64) * ((n + 1) as f64));
            (lower + 1e-9, upper - 1e-9)
        };
        let roots = new_eigenvalues(&model, &ext, (lo, hi), 1e-12, &opts).unwrap();
        assert_eq!(roots.len(), 1, "one Robin root per gap (gap {n})");
        assert!(
            (roots[0].lambda - lam_exact).abs() <= 1e-9,
            "gap {n}: {} vs secular {}",
            roots[0].lambda,
            lam_exact
        );
    }
    println!(
        "PASS criterion 7: Robin-Dirichlet resolvent matches the finite-difference oracle (relative L2 {err:.2e} <= 1e-3) and gap eigenvalues match the secular equation to 1e-9"
    );
}

/// Criterion 8: property suites.
#[test]
fn criterion_8_property_suites() {
    resolvent_difference_coefficient_identity();
    first_resolvent_identity();
    q_hermiticity_and_cross_route();
    q_derivative_positive_semidefinite();
    case1_theta_independence();
    scanner_root_residuals();
    parity_periodicity();
    single_edge_star_equals_interval();
    case2_reconstruction_via_resolvent();
    println!(
        "PASS criterion 8: property suites (resolvent identities, Q hermiticity & monotonicity, case-1 theta independence, root residuals, parity periodicity, star/interval equivalence, eigenvector reconstruction)"
    );
}

/// The resolvent-difference identity for Green vectors, coefficient-wise at
/// exact rational points: each coefficient identity is algebraic.
fn resolvent_difference_coefficient_identity() {
    let model = build_interval(PI, 200).unwrap();
    let xi = DVector::from_vec(vec![c(1.0), c(-0.5)]);
    let z = Complex64::new(-0.25, 0.0);
    let w = Complex64::new(1.5, 0.0);
    let g_z = krein::green_apply(&model, z, &xi, 200).unwrap();
    let g_w = krein::green_apply(&model, w, &xi, 200).unwrap();
    for i in 0..200 {
        let lam = c(model.level(i));
        let lhs = g_w.coeff(i, 0) - g_z.coeff(i, 0);
        // (z−w)(−A+w)⁻¹ G_z acts diagonally: divide the G_z coefficient.
        let rhs = (z - w) / (w - lam) * g_z.coeff(i, 0);
        let scale = g_w.coeff(i, 0).norm().max(g_z.coeff(i, 0).norm());
        assert!((lhs - rhs).norm() <= 1e-14 * scale.max(1e-300), "level {i}");
    }
}

/// First resolvent identity of the extension at 1e-8 relative accuracy.
fn first_resolvent_identity() {
    let model = build_interval(PI, 2000).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x81);
    let b = random_hermitian(&mut rng, 2);
    let ext = full_b_extension(&model, &b);
    let z = Complex64::new(-0.3, 0.0);
    let w = Complex64::new(-0.55, 0.0);

    let mut phi = EigenCoordVector::new(2000);
    for level in 0..6 {
        phi.add_coeff(
            level,
            0,
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
        );
    }

    let r_z = resolvent_apply(&model, &ext, z, &phi, 2000).unwrap();
    let r_w = resolvent_apply(&model, &ext, w, &phi, 2000).unwrap();
    let r_zw = resolvent_apply(&model, &ext, z, &r_w, 2000).unwrap();

    let mut lhs = r_z.expanded(&model).unwrap();
    lhs.add_scaled(&r_w, c(-1.0));
    let lhs = lhs.expanded(&model).unwrap();
    let mut rhs = EigenCoordVector::new(2000);
    rhs.add_scaled(&r_zw, w - z);
    let rhs = rhs.expanded(&model).unwrap();

    let scale = lhs.coeff_l2().max(1e-300);
    let diff = lhs.coeff_distance(&rhs);
    assert!(
        diff <= 1e-8 * scale,
        "first resolvent identity: relative deviation {:.3e}",
        diff / scale
    );
}

/// Hermiticity of Q at real gap points, and agreement of the Gram route
/// (built from Green coefficients) with the series route. Pins the pairing
/// convention: the opposite conjugation fails both checks for complex data.
fn q_hermiticity_and_cross_route() {
    // Synthetic model with genuinely complex trace data.
    let levels = vec![-1.0, -2.5, -4.7, -8.1, -13.0, -19.5];
    let traces: Vec<DMatrix<Complex64>> = (0..6)
        .map(|n| {
            let phase = Complex64::new(0.0, 0.6 * n as f64).exp();
            DMatrix::from_column_slice(
                2,
                1,
                &[
                    Complex64::new(0.8 + 0.1 * n as f64, 0.3) * phase,
                    Complex64::new(-0.2, 0.5 - 0.05 * n as f64) * phase,
                ],
            )
        })
        .collect();
    let model = SpectralModel::assemble(krein::spectral::ModelData {
        levels,
        traces,
        boundary_dim: 2,
        tail: krein::TailBound {
            constant: 0.0,
            exponent: 1.0,
        },
        trace_scale: 1.0,
        p0: None,
        q_closed: None,
        q_perp_closed: None,
        kind: ModelKind::Generic,
    })
    .unwrap();

    for lam in [-0.4, -1.7, -3.3, 2.0] {
        let (q, bound) = q_matrix_series(&model, lam, 6).unwrap();
        assert_eq!(bound, 0.0, "finite model has zero tail");
        // Gram route: Q_ij = λ Σ_n conj(c⁰_n(e_i)) c^λ_n(e_j).
        let e = [
            DVector::from_vec(vec![c(1.0), c(0.0)]),
            DVector::from_vec(vec![c(0.0), c(1.0)]),
        ];
        let g0: Vec<_> = e
            .iter()
            .map(|v| krein::green_apply(&model, Complex64::new(0.0, 0.0), v, 6).unwrap())
            .collect();
        let gl: Vec<_> = e
            .iter()
            .map(|v| krein::green_apply(&model, Complex64::new(lam, 0.0), v, 6).unwrap())
            .collect();
        let mut gram = DMatrix::<Complex64>::zeros(2, 2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = Complex64::new(0.0, 0.0);
                for n in 0..6 {
                    acc += g0[i].coeff(n, 0).conj() * gl[j].coeff(n, 0);
                }
                gram[(i, j)] = c(lam) * acc;
            }
        }
        assert!(
            (&gram - gram.adjoint()).norm() < 1e-13 * (1.0 + gram.norm()),
            "Gram-route Q must be Hermitian at real λ = {lam}"
        );
        assert!(
            (&gram - &q).norm() < 1e-12 * (1.0 + q.norm()),
            "series and Gram routes agree at λ = {lam}"
        );
    }
}

/// Finite-difference positivity of Q′ on 50 gap points: every eigenvalue of
/// the symmetric difference quotient is nonnegative up to O(h²).
fn q_derivative_positive_semidefinite() {
    let model = build_interval(PI, 2000).unwrap();
    let mut points = Vec::new();
    for gap in 0..5 {
        let hi = if gap == 0 {
            20.0
        } else {
            -((gap as f64) * (gap as f64))
        };
        let lo = -(((gap + 1) as f64) * ((gap + 1) as f64));
        for j in 1..=10 {
            points.push(lo + (hi - lo) * j as f64 / 11.0);
        }
    }
    assert_eq!(points.len(), 50);
    for lam in points {
        let h = 1e-5 * (1.0 + lam.abs());
        let (qp, _) = q_matrix(&model, lam + h, 2000).unwrap();
        let (qm, _) = q_matrix(&model, lam - h, 2000).unwrap();
        let diff = (qp - qm) / c(2.0 * h);
        let (eigs, _) = krein::linalg::hermitian_eigen_sorted(&diff);
        assert!(
            eigs[0] >= -1e-4 * (1.0 + eigs[1].abs()),
            "Q' at λ={lam} has eigenvalue {}",
            eigs[0]
        );
    }
}

/// Case-1 verdicts do not depend on Θ: 100 random Θ on a fixed projection.
fn case1_theta_independence() {
    let edges = 3;
    let model = build_star_graph(edges, PI, 64).unwrap();
    let level = 1;
    // Π spanned by two parallel trace directions: misses the perp space, so
    // the meet is trivial and Case 1 applies.
    let pi = Subspace::span(
        6,
        &[
            edge_trace_direction(edges, 0, level),
            edge_trace_direction(edges, 1, level),
        ],
        1e-9,
    )
    .unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x8C);
    let mut baseline = None;
    for _ in 0..100 {
        let theta = random_hermitian(&mut rng, 2);
        let ext = ExtensionParams::new(pi.clone(), theta).unwrap();
        let report = surviving_eigenspace(&model, level, &ext, &preserve_opts(64)).unwrap();
        assert_eq!(report.case_tag, CaseTag::Case1);
        let key = (report.preserved, report.dim_surviving);
        match &baseline {
            None => baseline = Some(key),
            Some(b) => assert_eq!(*b, key, "case-1 verdicts must ignore theta"),
        }
    }
    assert_eq!(baseline, Some((true, 1)));
}

/// Every scanner root satisfies the kernel residual bound.
fn scanner_root_residuals() {
    let model = build_interval(PI, 2000).unwrap();
    let w = DVector::from_vec(vec![c(1.0), c(0.0)]);
    let p0 = model.p0().unwrap().clone();
    let ext = theta_from_b(
        &p0,
        Subspace::span(2, &[w], 1e-9).unwrap(),
        &DMatrix::from_element(1, 1, c(1.0)),
    )
    .unwrap();
    let opts = ScanOptions::with_trunc(2000);
    let roots = new_eigenvalues(&model, &ext, (-3.99, -1.01), 1e-10, &opts).unwrap();
    assert!(!roots.is_empty());
    for root in &roots {
        for xi in &root.charges {
            let (m, _) =
                pencil_matrix(&model, &ext, Complex64::new(root.lambda, 0.0), 2000).unwrap();
            let zeta = ext.pi().basis().adjoint() * xi;
            let residual = (m * &zeta).norm();
            assert!(
                residual <= 1e-8 * zeta.norm(),
                "kernel residual {residual:.3e} at λ = {}",
                root.lambda
            );
        }
    }
}

/// Survival of level n implies survival of n+2 for Π = 1 boundary data.
fn parity_periodicity() {
    let model = build_interval(PI, 64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x8F);
    let mut candidates: Vec<DMatrix<Complex64>> = Vec::new();
    // Odd-preserving, even-preserving, and generic B.
    for parity_sign in [-1.0, 1.0] {
        let mut b = random_hermitian(&mut rng, 2);
        let b22 = -b[(0, 0)].re - 2.0 * parity_sign * b[(0, 1)].re;
        b[(1, 1)] = c(b22);
        candidates.push(b);
    }
    candidates.push(random_hermitian(&mut rng, 2));
    for b in candidates {
        let ext = full_b_extension(&model, &b);
        let verdicts: Vec<bool> = (0..12)
            .map(|i| {
                surviving_eigenspace(&model, i, &ext, &preserve_opts(64))
                    .unwrap()
                    .preserved
            })
            .collect();
        for i in 0..10 {
            assert_eq!(verdicts[i], verdicts[i + 2], "period-two verdict at {i}");
        }
    }
}

/// A single-edge star graph is observationally the interval model.
fn single_edge_star_equals_interval() {
    let a = 1.9;
    let star = build_star_graph(1, a, 300).unwrap();
    let line = build_interval(a, 300).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0x85);
    let b = random_hermitian(&mut rng, 2);
    let ext_s = full_b_extension(&star, &b);
    let ext_l = full_b_extension(&line, &b);

    for lam in [-0.7, 3.1] {
        let (qs, _) = q_matrix(&star, lam, 300).unwrap();
        let (ql, _) = q_matrix(&line, lam, 300).unwrap();
        assert!((qs - ql).norm() < 1e-14);
    }
    for i in 0..8 {
        let (ps, _) = q_perp_matrix(&star, i, 300).unwrap();
        let (pl, _) = q_perp_matrix(&line, i, 300).unwrap();
        assert!((ps - pl).norm() < 1e-14);
        let rs = surviving_eigenspace(&star, i, &ext_s, &preserve_opts(300)).unwrap();
        let rl = surviving_eigenspace(&line, i, &ext_l, &preserve_opts(300)).unwrap();
        assert_eq!(rs.preserved, rl.preserved);
        assert_eq!(rs.dim_surviving, rl.dim_surviving);
        assert_eq!(rs.case_tag, rl.case_tag);
    }
    let first_gap = (-(2.0f64 * PI / a).powi(2) + 1e-6, -(PI / a).powi(2) - 1e-6);
    let opts = ScanOptions::with_trunc(300);
    let roots_s = new_eigenvalues(&star, &ext_s, first_gap, 1e-11, &opts).unwrap();
    let roots_l = new_eigenvalues(&line, &ext_l, first_gap, 1e-11, &opts).unwrap();
    assert_eq!(roots_s.len(), roots_l.len());
    for (rs, rl) in roots_s.iter().zip(roots_l.iter()) {
        assert!((rs.lambda - rl.lambda).abs() < 1e-9);
        assert_eq!(rs.multiplicity, rl.multiplicity);
    }
}

/// Case-2 eigenvectors reconstruct true eigenvectors: the extension
/// resolvent acts on them as (z − λ)⁻¹ to 1e-6 at default truncation.
fn case2_reconstruction_via_resolvent() {
    let model = build_interval(PI, 2000).unwrap();
    let ext = full_b_extension(&model, &DMatrix::zeros(2, 2)); // Neumann
    for level in [1usize, 2] {
        let report = surviving_eigenspace(&model, level, &ext, &preserve_opts(2000)).unwrap();
        assert!(report.preserved);
        assert_eq!(report.case_tag, CaseTag::Case2);
        let lam = model.level(level);
        let z = Complex64::new(lam + 0.43, 0.0);
        for vec in &report.eigenvectors {
            let phi = vec.reconstruct(&model, 2000).unwrap();
            let applied = resolvent_apply(&model, &ext, z, &phi, 2000)
                .unwrap()
                .expanded(&model)
                .unwrap();
            let mut expected = EigenCoordVector::new(2000);
            expected.add_scaled(&phi, Complex64::new(1.0, 0.0) / (z - c(lam)));
            let expected = expected.expanded(&model).unwrap();
            let scale = expected.coeff_l2().max(1e-300);
            let diff = applied.coeff_distance(&expected);
            assert!(
                diff <= 1e-6 * scale,
                "reconstruction residual {:.3e} at level {level}",
                diff / scale
            );
        }
    }
}
