//! Spectral data of the base operator and the operations built on it: the
//! Green operator `G_z`, the Q-matrix `Q(z) = z G₀* G_z`, its reduced variant
//! at eigenvalues, the Krein-type resolvent of an extension, and the search
//! for new eigenvalues inside spectral gaps.
//!
//! Pairing convention, fixed once for the whole crate: inner products are
//! conjugate-linear in the first slot, `⟨u, v⟩ = u* v`. With that convention
//! the eigencoordinates of `G_z ξ` are
//!
//! ```text
//!   ⟨G_z ξ, ψ_{n,j}⟩-dual  =>  coeff(n, j) = ⟨τψ_{n,j}, ξ⟩ / (z − λ_n)
//! ```
//!
//! and `Q(z) = Σ_n z / (λ_n (λ_n − z)) · T_n T_n*`. The convention is pinned
//! by the resolvent-difference identity and Hermiticity tests, which fail for
//! the opposite choice of conjugated slot.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::extensions::ExtensionParams;
use crate::linalg;
use crate::models::seba::SebaData;

/// Relative pole tolerance: `|λ − λ_n| < pole_rel · max(1, |λ_n|)` counts as
/// hitting the spectrum.
pub const DEFAULT_POLE_REL: f64 = 1e-10;

/// Certified bound on the trace-data tail: `Σ_{n>N} ‖T_n‖² / λ_n² ≤ C · N^(-p)`.
///
/// Builders derive the constants from the model's eigenvalue growth law
/// (interval-type models decay like `n⁻²` per term, planar billiards like
/// `λ⁻²` with the eigenvalue-counting law supplying the level density) and
/// the constructor verifies them empirically against the stored data.
#[derive(Debug, Clone, Copy)]
pub struct TailBound {
    pub constant: f64,
    pub exponent: f64,
}

impl TailBound {
    /// Tail of the trace-data sum beyond the first `n` levels.
    pub fn trace_tail(&self, n: usize) -> f64 {
        if self.constant == 0.0 {
            return 0.0;
        }
        self.constant * (n as f64).powf(-self.exponent)
    }
}

/// Exact Q-matrix evaluator supplied by a model (analytic formula).
pub type QClosedForm = Box<dyn Fn(Complex64) -> DMatrix<Complex64> + Send + Sync>;
/// Exact reduced-Q evaluator at a stored level index.
pub type QPerpClosedForm = Box<dyn Fn(usize) -> DMatrix<Complex64> + Send + Sync>;

/// What family a model belongs to; drives real-space evaluation, boundary
/// condition rendering, and exact fast paths.
#[derive(Debug, Clone)]
pub enum ModelKind {
    Interval { length: f64 },
    StarGraph { edges: usize, length: f64 },
    Seba(SebaData),
    Generic,
}

/// The base operator in spectral form: distinct eigenvalues ordered by
/// increasing magnitude, per-level trace matrices `T_n` whose `j`-th column
/// is the trace map applied to the `j`-th orthonormal eigenvector of the
/// level, and a certified tail bound for everything truncated away.
pub struct SpectralModel {
    levels: Vec<f64>,
    traces: Vec<DMatrix<Complex64>>,
    boundary_dim: usize,
    tail: TailBound,
    trace_scale: f64,
    p0: Option<DMatrix<Complex64>>,
    q_closed: Option<QClosedForm>,
    q_perp_closed: Option<QPerpClosedForm>,
    kind: ModelKind,
}

impl std::fmt::Debug for SpectralModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralModel")
            .field("levels", &self.levels.len())
            .field("boundary_dim", &self.boundary_dim)
            .field("kind", &self.kind)
            .finish()
    }
}

/// Raw ingredients handed to [`SpectralModel::assemble`].
pub struct ModelData {
    pub levels: Vec<f64>,
    pub traces: Vec<DMatrix<Complex64>>,
    pub boundary_dim: usize,
    pub tail: TailBound,
    pub trace_scale: f64,
    pub p0: Option<DMatrix<Complex64>>,
    pub q_closed: Option<QClosedForm>,
    pub q_perp_closed: Option<QPerpClosedForm>,
    pub kind: ModelKind,
}

impl SpectralModel {
    /// Validate and freeze a model. Rejects data violating the standing
    /// hypotheses (a level at zero, repeated levels, trace rows not matching
    /// the boundary dimension), checks the declared tail constants against
    /// the stored data, and cross-checks any closed-form Q evaluator against
    /// the series within its own certified bound.
    pub fn assemble(data: ModelData) -> Result<Self> {
        let ModelData {
            mut levels,
            mut traces,
            boundary_dim,
            tail,
            trace_scale,
            p0,
            q_closed,
            q_perp_closed,
            kind,
        } = data;

        if levels.is_empty() {
            return Err(Error::InvalidModel("no levels supplied".into()));
        }
        if levels.len() != traces.len() {
            return Err(Error::InvalidModel(format!(
                "{} levels but {} trace matrices",
                levels.len(),
                traces.len()
            )));
        }

        // Canonical internal order: increasing |λ|.
        let mut order: Vec<usize> = (0..levels.len()).collect();
        order.sort_by(|&i, &j| {
            levels[i]
                .abs()
                .partial_cmp(&levels[j].abs())
                .expect("finite levels")
        });
        if order.windows(2).any(|w| w[0] > w[1]) {
            let mut new_levels = Vec::with_capacity(levels.len());
            let mut new_traces = Vec::with_capacity(traces.len());
            for &i in &order {
                new_levels.push(levels[i]);
                new_traces.push(traces[i].clone());
            }
            levels = new_levels;
            traces = new_traces;
        }

        let scale = levels.last().map(|l| l.abs()).unwrap_or(1.0).max(1.0);
        for (n, lam) in levels.iter().enumerate() {
            if !lam.is_finite() {
                return Err(Error::InvalidModel(format!("level {n} is not finite")));
            }
            if lam.abs() < 1e-12 * scale.min(1.0) || lam.abs() < 1e-300 {
                return Err(Error::InvalidModel(
                    "a level sits at zero; zero must belong to the resolvent set".into(),
                ));
            }
        }
        for w in 0..levels.len() {
            for v in (w + 1)..levels.len() {
                if (levels[w] - levels[v]).abs() < 1e-12 * (1.0 + levels[w].abs()) {
                    return Err(Error::InvalidModel(format!(
                        "levels {w} and {v} coincide: merge multiplicities in the builder"
                    )));
                }
                if levels[v].abs() > 1.5 * levels[w].abs() {
                    break;
                }
            }
        }
        for (n, t) in traces.iter().enumerate() {
            if t.nrows() != boundary_dim {
                return Err(Error::InvalidModel(format!(
                    "trace matrix at level {n} has {} rows, boundary dimension is {boundary_dim}",
                    t.nrows()
                )));
            }
            if t.ncols() == 0 {
                return Err(Error::InvalidModel(format!(
                    "level {n} has multiplicity zero"
                )));
            }
            if t.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
                return Err(Error::InvalidModel(format!(
                    "trace matrix at level {n} has non-finite entries"
                )));
            }
        }

        let model = Self {
            levels,
            traces,
            boundary_dim,
            tail,
            trace_scale,
            p0,
            q_closed,
            q_perp_closed,
            kind,
        };

        model.check_tail_empirically()?;
        model.check_closed_forms()?;
        Ok(model)
    }

    /// Empirical check of the declared tail constants: for sampled cut
    /// points `N`, the stored partial sums beyond `N` must stay below the
    /// certificate (a necessary condition; the analytic derivation in the
    /// builder covers the rest of the tail).
    fn check_tail_empirically(&self) -> Result<()> {
        let len = self.levels.len();
        if len < 4 {
            return Ok(());
        }
        let weights: Vec<f64> = (0..len)
            .map(|n| {
                let t = &self.traces[n];
                t.norm_squared() / (self.levels[n] * self.levels[n])
            })
            .collect();
        for cut in [len / 2, (3 * len) / 4] {
            if cut == 0 {
                continue;
            }
            let partial: f64 = weights[cut..].iter().sum();
            let certified = self.tail.trace_tail(cut);
            if partial > certified * (1.0 + 1e-9) + 1e-300 {
                return Err(Error::InvalidModel(format!(
                    "tail certificate violated at N={cut}: partial sum {partial:.6e} exceeds bound {certified:.6e}"
                )));
            }
        }
        Ok(())
    }

    /// Closed-form evaluators must agree with the series within the series'
    /// own certified bound, otherwise the model is rejected at load time.
    fn check_closed_forms(&self) -> Result<()> {
        let len = self.levels.len();
        if self.q_closed.is_some() && len >= 8 {
            let trunc = len.min(10_000).saturating_sub(1).max(4);
            let l1 = self.levels[0];
            let mut probes = vec![-0.5 * l1.signum() * l1.abs().min(1.0), 0.5 * l1];
            if len >= 2 {
                probes.push(0.5 * (self.levels[0] + self.levels[1]));
            }
            for lam in probes {
                if self.nearest_level_distance(lam) < 1e-6 * (1.0 + lam.abs()) {
                    continue;
                }
                let (series, bound) = self.q_series(Complex64::new(lam, 0.0), trunc, None)?;
                let exact = self.q_closed.as_ref().expect("checked")(Complex64::new(lam, 0.0));
                let diff = (&series - &exact).norm();
                let allowance = bound + 1e-9 * (1.0 + exact.norm());
                if diff > allowance {
                    return Err(Error::InvalidModel(format!(
                        "closed-form Q disagrees with the series at λ={lam}: diff {diff:.3e} > allowed {allowance:.3e}"
                    )));
                }
            }
        }
        if self.q_perp_closed.is_some() && len >= 8 {
            let trunc = len.min(10_000).saturating_sub(0).min(len);
            for n in [0usize, 1, 2] {
                if n >= len {
                    break;
                }
                let (series, bound) = self.q_series(
                    Complex64::new(self.levels[n], 0.0),
                    trunc,
                    Some(n),
                )?;
                let exact = self.q_perp_closed.as_ref().expect("checked")(n);
                let diff = (&series - &exact).norm();
                let allowance = bound + 1e-9 * (1.0 + exact.norm());
                if diff > allowance {
                    return Err(Error::InvalidModel(format!(
                        "closed-form reduced Q disagrees with the series at level {n}: diff {diff:.3e} > allowed {allowance:.3e}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, n: usize) -> f64 {
        self.levels[n]
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn multiplicity(&self, n: usize) -> usize {
        self.traces[n].ncols()
    }

    /// The `m×d_n` trace matrix of level `n`.
    pub fn trace_matrix(&self, n: usize) -> &DMatrix<Complex64> {
        &self.traces[n]
    }

    pub fn boundary_dim(&self) -> usize {
        self.boundary_dim
    }

    pub fn tail(&self) -> TailBound {
        self.tail
    }

    /// Natural magnitude of trace data; used as an absolute floor in rank
    /// decisions so that an all-but-zero trace matrix is recognized as zero
    /// instead of being normalized against its own noise.
    pub fn trace_scale(&self) -> f64 {
        self.trace_scale
    }

    /// Zero-energy boundary matrix (Dirichlet-to-Neumann) when the model
    /// supports the `(Π, B)` parametrization.
    pub fn p0(&self) -> Option<&DMatrix<Complex64>> {
        self.p0.as_ref()
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn has_closed_form_q(&self) -> bool {
        self.q_closed.is_some()
    }

    /// Distance from `lam` to the nearest eigenvalue, including (for models
    /// with a known growth law) eigenvalues beyond the stored range.
    pub fn nearest_level_distance(&self, lam: f64) -> f64 {
        let mut dist = self
            .levels
            .iter()
            .map(|l| (l - lam).abs())
            .fold(f64::INFINITY, f64::min);
        let known_law_length = match &self.kind {
            ModelKind::Interval { length } => Some(*length),
            ModelKind::StarGraph { length, .. } => Some(*length),
            _ => None,
        };
        if let Some(a) = known_law_length {
            if lam < 0.0 {
                let kappa = (-lam).sqrt();
                let q = (kappa * a / std::f64::consts::PI).round().max(1.0);
                let pole = -(q * std::f64::consts::PI / a).powi(2);
                dist = dist.min((lam - pole).abs());
            }
        }
        dist
    }

    fn pole_check(&self, z: Complex64, pole_rel: f64) -> Result<()> {
        if z.im != 0.0 {
            // Complex z with nonzero imaginary part cannot hit the (real) spectrum.
            if z.im.abs() > pole_rel {
                return Ok(());
            }
        }
        let lam = z.re;
        let dist = self.nearest_level_distance(lam);
        let nearest = self
            .levels
            .iter()
            .cloned()
            .min_by(|a, b| {
                (a - lam)
                    .abs()
                    .partial_cmp(&(b - lam).abs())
                    .expect("finite")
            })
            .unwrap_or(f64::INFINITY);
        let tol = pole_rel * nearest.abs().max(1.0);
        if dist.hypot(z.im) < tol {
            return Err(Error::Pole {
                z,
                level_lambda: nearest,
            });
        }
        Ok(())
    }

    /// Truncated series for `Q(z) = Σ_n z/(λ_n(λ_n − z)) T_n T_n*`, with the
    /// certified tail bound; `exclude` omits one level (the reduced variant).
    fn q_series(
        &self,
        z: Complex64,
        trunc: usize,
        exclude: Option<usize>,
    ) -> Result<(DMatrix<Complex64>, f64)> {
        if trunc == 0 {
            return Err(Error::InvalidParameter("truncation must be at least 1".into()));
        }
        if trunc > self.levels.len() {
            return Err(Error::InsufficientSpectralData {
                requested: trunc,
                available: self.levels.len(),
            });
        }
        let m = self.boundary_dim;
        let mut acc = DMatrix::<Complex64>::zeros(m, m);
        for n in 0..trunc {
            if Some(n) == exclude {
                continue;
            }
            let lam_n = Complex64::new(self.levels[n], 0.0);
            let coef = z / (lam_n * (lam_n - z));
            accumulate_outer(&mut acc, &self.traces[n], coef);
        }
        Ok((acc, self.q_tail_bound(z, trunc)))
    }

    /// Certified bound on the dropped part of the Q series:
    /// `Σ_{n>N} |z| ‖T_n‖²/(|λ_n||λ_n−z|) ≤ |z| κ Σ_{n>N} ‖T_n‖²/λ_n²` with
    /// `κ = |λ_next|/(|λ_next| − |z|)`. Infinite when the stored levels do
    /// not reach past `|z|`, in which case no certificate is possible at
    /// this truncation.
    fn q_tail_bound(&self, z: Complex64, trunc: usize) -> f64 {
        if self.tail.constant == 0.0 || z.norm() == 0.0 {
            return 0.0;
        }
        let idx = trunc.min(self.levels.len() - 1);
        let lam_next = self.levels[idx].abs();
        let zn = z.norm();
        if lam_next <= zn * (1.0 + 1e-12) {
            return f64::INFINITY;
        }
        let kappa = lam_next / (lam_next - zn);
        zn * kappa * self.tail.trace_tail(trunc)
    }
}

/// `acc += coef · T T*` without temporaries.
fn accumulate_outer(acc: &mut DMatrix<Complex64>, t: &DMatrix<Complex64>, coef: Complex64) {
    let (m, d) = t.shape();
    for i in 0..m {
        for j in 0..m {
            let mut s = Complex64::new(0.0, 0.0);
            for l in 0..d {
                s += t[(i, l)] * t[(j, l)].conj();
            }
            acc[(i, j)] += coef * s;
        }
    }
}

/// A Green-type singular component `G_z ξ` (optionally with one level
/// projected out of the underlying series).
#[derive(Debug, Clone)]
pub struct GreenCharge {
    pub z: Complex64,
    pub xi: DVector<Complex64>,
    pub excluded_level: Option<usize>,
}

/// A vector in eigencoordinates of the base operator: finitely many
/// coefficients on eigenvectors `(level n, index j)` plus optional singular
/// charges. The decomposition into regular part and charges is unique
/// because the range of `G_z` meets the operator domain only at zero.
#[derive(Debug, Clone, Default)]
pub struct EigenCoordVector {
    coeffs: BTreeMap<(usize, usize), Complex64>,
    charges: Vec<GreenCharge>,
    trunc_levels: usize,
}

impl EigenCoordVector {
    pub fn new(trunc_levels: usize) -> Self {
        Self {
            coeffs: BTreeMap::new(),
            charges: Vec::new(),
            trunc_levels,
        }
    }

    /// A vector supported on a single level with the given component
    /// coefficients.
    pub fn from_level(level: usize, coeffs: &[Complex64], trunc_levels: usize) -> Self {
        let mut v = Self::new(trunc_levels);
        for (j, c) in coeffs.iter().enumerate() {
            if c.norm() != 0.0 {
                v.coeffs.insert((level, j), *c);
            }
        }
        v
    }

    pub fn trunc_levels(&self) -> usize {
        self.trunc_levels
    }

    pub fn coeff(&self, level: usize, j: usize) -> Complex64 {
        self.coeffs
            .get(&(level, j))
            .copied()
            .unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub fn coeffs(&self) -> impl Iterator<Item = (&(usize, usize), &Complex64)> {
        self.coeffs.iter()
    }

    pub fn charges(&self) -> &[GreenCharge] {
        &self.charges
    }

    pub fn add_coeff(&mut self, level: usize, j: usize, value: Complex64) {
        let entry = self
            .coeffs
            .entry((level, j))
            .or_insert_with(|| Complex64::new(0.0, 0.0));
        *entry += value;
    }

    /// Add a charge, merging with an existing charge at the same base point
    /// and exclusion.
    pub fn add_charge(&mut self, z: Complex64, xi: DVector<Complex64>, excluded: Option<usize>) {
        if xi.norm() == 0.0 {
            return;
        }
        for ch in &mut self.charges {
            if ch.z == z && ch.excluded_level == excluded {
                ch.xi += xi;
                return;
            }
        }
        self.charges.push(GreenCharge {
            z,
            xi,
            excluded_level: excluded,
        });
    }

    pub fn scale(&mut self, s: Complex64) {
        for v in self.coeffs.values_mut() {
            *v *= s;
        }
        for ch in &mut self.charges {
            ch.xi *= s;
        }
    }

    pub fn add_scaled(&mut self, other: &Self, s: Complex64) {
        for (&(n, j), &c) in other.coeffs.iter() {
            self.add_coeff(n, j, s * c);
        }
        for ch in &other.charges {
            self.add_charge(ch.z, ch.xi.clone() * s, ch.excluded_level);
        }
    }

    /// Fold all charges into explicit coefficients up to the recorded
    /// truncation level, leaving a charge-free vector. Exact per kept
    /// coefficient; the discarded tail is exactly the charge tail beyond the
    /// truncation.
    pub fn expanded(&self, model: &SpectralModel) -> Result<Self> {
        let trunc = self.trunc_levels.min(model.num_levels());
        let mut out = Self::new(self.trunc_levels);
        out.coeffs = self.coeffs.clone();
        for ch in &self.charges {
            let g = green_expand(model, ch.z, &ch.xi, trunc, ch.excluded_level)?;
            for (&(n, j), &c) in g.coeffs.iter() {
                out.add_coeff(n, j, c);
            }
        }
        Ok(out)
    }

    /// ℓ² norm of the explicit coefficients (charges not included).
    pub fn coeff_l2(&self) -> f64 {
        self.coeffs
            .values()
            .map(|c| c.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// ℓ² distance between the explicit coefficient parts.
    pub fn coeff_distance(&self, other: &Self) -> f64 {
        let mut keys: Vec<(usize, usize)> = self.coeffs.keys().cloned().collect();
        for k in other.coeffs.keys() {
            if !self.coeffs.contains_key(k) {
                keys.push(*k);
            }
        }
        keys.iter()
            .map(|&(n, j)| (self.coeff(n, j) - other.coeff(n, j)).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Eigencoordinates of `G_z ξ` truncated to the first `trunc` levels, with
/// an optional excluded level (the reduced Green operator at that level).
fn green_expand(
    model: &SpectralModel,
    z: Complex64,
    xi: &DVector<Complex64>,
    trunc: usize,
    exclude: Option<usize>,
) -> Result<EigenCoordVector> {
    if xi.len() != model.boundary_dim() {
        return Err(Error::DimensionMismatch {
            context: "green charge".into(),
            expected: model.boundary_dim(),
            found: xi.len(),
        });
    }
    let mut out = EigenCoordVector::new(trunc);
    for n in 0..trunc {
        if Some(n) == exclude {
            continue;
        }
        let denom = z - Complex64::new(model.level(n), 0.0);
        if denom.norm() < DEFAULT_POLE_REL * model.level(n).abs().max(1.0) {
            return Err(Error::Pole {
                z,
                level_lambda: model.level(n),
            });
        }
        let pairing = model.trace_matrix(n).adjoint() * xi;
        for j in 0..pairing.len() {
            let c = pairing[j] / denom;
            if c.norm() != 0.0 {
                out.add_coeff(n, j, c);
            }
        }
    }
    Ok(out)
}

/// Eigencoordinates of the Green vector `G_z ξ` over the first `trunc`
/// levels. The coefficient on eigenvector `(n, j)` is
/// `⟨τψ_{n,j}, ξ⟩ / (z − λ_n)`.
pub fn green_apply(
    model: &SpectralModel,
    z: Complex64,
    xi: &DVector<Complex64>,
    trunc: usize,
) -> Result<EigenCoordVector> {
    if trunc == 0 {
        return Err(Error::InvalidParameter("truncation must be at least 1".into()));
    }
    if trunc > model.num_levels() {
        return Err(Error::InsufficientSpectralData {
            requested: trunc,
            available: model.num_levels(),
        });
    }
    model.pole_check(z, DEFAULT_POLE_REL)?;
    green_expand(model, z, xi, trunc, None)
}

/// Eigencoordinates of the reduced Green vector `G^⊥_{λ_n} ξ`: the series at
/// `z = λ_n` with the level-`n` term omitted.
pub fn green_apply_reduced(
    model: &SpectralModel,
    level_index: usize,
    xi: &DVector<Complex64>,
    trunc: usize,
) -> Result<EigenCoordVector> {
    if level_index >= model.num_levels() {
        return Err(Error::InsufficientSpectralData {
            requested: level_index + 1,
            available: model.num_levels(),
        });
    }
    if trunc > model.num_levels() {
        return Err(Error::InsufficientSpectralData {
            requested: trunc,
            available: model.num_levels(),
        });
    }
    let z = Complex64::new(model.level(level_index), 0.0);
    green_expand(model, z, xi, trunc, Some(level_index))
}

/// `Q(λ) = λ G₀* G_λ` at real `λ` in the resolvent set, together with a
/// certified truncation bound. Uses the model's closed form when present
/// (bound 0); the series is then only a load-time consistency check.
pub fn q_matrix(model: &SpectralModel, lam: f64, trunc: usize) -> Result<(DMatrix<Complex64>, f64)> {
    let z = Complex64::new(lam, 0.0);
    model.pole_check(z, DEFAULT_POLE_REL)?;
    if let Some(qc) = &model.q_closed {
        return Ok((linalg::hermitian_part(&qc(z)), 0.0));
    }
    let (q, bound) = model.q_series(z, trunc, None)?;
    Ok((linalg::hermitian_part(&q), bound))
}

/// The Q series evaluated directly, regardless of any closed form: the
/// definitional route kept for cross-checks.
pub fn q_matrix_series(
    model: &SpectralModel,
    lam: f64,
    trunc: usize,
) -> Result<(DMatrix<Complex64>, f64)> {
    let z = Complex64::new(lam, 0.0);
    model.pole_check(z, DEFAULT_POLE_REL)?;
    let (q, bound) = model.q_series(z, trunc, None)?;
    Ok((linalg::hermitian_part(&q), bound))
}

/// `Q(λ)` with the truncation chosen adaptively so that the certified tail
/// bound is below `tol`; errors with the needed level count when the stored
/// data cannot reach it.
pub fn q_matrix_tol(
    model: &SpectralModel,
    lam: f64,
    tol: f64,
) -> Result<(DMatrix<Complex64>, f64)> {
    let z = Complex64::new(lam, 0.0);
    model.pole_check(z, DEFAULT_POLE_REL)?;
    if model.q_closed.is_some() {
        return q_matrix(model, lam, model.num_levels().min(1));
    }
    if model.tail.constant == 0.0 {
        return q_matrix(model, lam, model.num_levels());
    }
    // Invert bound(N) = |λ| κ C N^(-p) ≤ tol, refining κ once.
    let mut needed = 1usize;
    for _ in 0..2 {
        let mut n = needed.max(1);
        while n < model.num_levels() && model.q_tail_bound(z, n) > tol {
            n *= 2;
        }
        needed = n;
    }
    if needed >= model.num_levels() {
        let bound = model.q_tail_bound(z, model.num_levels() - 1);
        if bound > tol {
            return Err(Error::TruncationInsufficient {
                bound,
                tolerance: tol,
                needed: estimate_needed(model, z, tol),
            });
        }
        needed = model.num_levels() - 1;
    }
    // Shrink back to the smallest sufficient N by bisection.
    let mut lo = 1usize;
    let mut hi = needed;
    while lo < hi {
        let mid = (lo + hi) / 2;
        if model.q_tail_bound(z, mid) <= tol {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    q_matrix_series(model, lam, lo)
}

fn estimate_needed(model: &SpectralModel, z: Complex64, tol: f64) -> usize {
    let zn = z.norm();
    let c = model.tail.constant;
    let p = model.tail.exponent;
    if c == 0.0 || tol <= 0.0 {
        return model.num_levels();
    }
    ((2.0 * zn * c / tol).powf(1.0 / p)).ceil().max(1.0) as usize
}

/// Reduced Q-matrix `Q^⊥(λ_n) = λ_n G₀* G^⊥_{λ_n}`: the Q series at the
/// level with the level's own term excluded. Hermitian at real eigenvalues.
pub fn q_perp_matrix(
    model: &SpectralModel,
    level_index: usize,
    trunc: usize,
) -> Result<(DMatrix<Complex64>, f64)> {
    if level_index >= model.num_levels() {
        return Err(Error::InsufficientSpectralData {
            requested: level_index + 1,
            available: model.num_levels(),
        });
    }
    if let Some(qp) = &model.q_perp_closed {
        return Ok((linalg::hermitian_part(&qp(level_index)), 0.0));
    }
    let z = Complex64::new(model.level(level_index), 0.0);
    let (q, bound) = model.q_series(z, trunc, Some(level_index))?;
    Ok((linalg::hermitian_part(&q), bound))
}

/// The series route for the reduced Q-matrix, kept for cross-checks against
/// closed forms.
pub fn q_perp_matrix_series(
    model: &SpectralModel,
    level_index: usize,
    trunc: usize,
) -> Result<(DMatrix<Complex64>, f64)> {
    if level_index >= model.num_levels() {
        return Err(Error::InsufficientSpectralData {
            requested: level_index + 1,
            available: model.num_levels(),
        });
    }
    let z = Complex64::new(model.level(level_index), 0.0);
    let (q, bound) = model.q_series(z, trunc, Some(level_index))?;
    Ok((linalg::hermitian_part(&q), bound))
}

/// `Q(z)` at complex `z` (not Hermitian-symmetrized); used by the resolvent.
pub fn q_matrix_complex(
    model: &SpectralModel,
    z: Complex64,
    trunc: usize,
) -> Result<(DMatrix<Complex64>, f64)> {
    model.pole_check(z, DEFAULT_POLE_REL)?;
    if let Some(qc) = &model.q_closed {
        return Ok((qc(z), 0.0));
    }
    model.q_series(z, trunc, None)
}

/// The boundary-space matrix `G_{z̄}* G_{z'} = Σ_k T_k T_k* /((z−λ_k)(z'−λ_k))`,
/// with an optional excluded level attached to the second factor. Closed
/// forms are used when available: `(Q(z) − Q(z'))/(z − z')` for distinct
/// points, and the reduced-Q combination when the second factor is a
/// reduced Green operator at a level.
fn green_cross_gram(
    model: &SpectralModel,
    z: Complex64,
    zp: Complex64,
    exclude: Option<usize>,
    trunc: usize,
) -> Result<DMatrix<Complex64>> {
    let scale = z.norm().max(zp.norm()).max(1.0);
    if let (Some(qc), Some(n)) = (&model.q_closed, exclude) {
        if let Some(qp) = &model.q_perp_closed {
            // Σ_{k≠n} T_k T_k*/((z−λ_k)(λ_n−λ_k))
            //   = [Q(z) − q_n(z) T_n T_n* − Q^⊥(λ_n)] / (z − λ_n)
            let lam_n = Complex64::new(model.level(n), 0.0);
            if (z - lam_n).norm() > 1e-8 * scale {
                let qn = Complex64::new(1.0, 0.0) / (lam_n - z) - Complex64::new(1.0, 0.0) / lam_n;
                let mut pole_term = DMatrix::zeros(model.boundary_dim(), model.boundary_dim());
                accumulate_outer(&mut pole_term, model.trace_matrix(n), qn);
                let result = (qc(z) - pole_term - qp(n)) / (z - lam_n);
                return Ok(result);
            }
        }
    }
    if exclude.is_none() {
        if let Some(qc) = &model.q_closed {
            if (z - zp).norm() > 1e-8 * scale {
                return Ok((qc(z) - qc(zp)) / (z - zp));
            }
        }
    }
    let trunc = trunc.min(model.num_levels());
    let m = model.boundary_dim();
    let mut acc = DMatrix::<Complex64>::zeros(m, m);
    for k in 0..trunc {
        if Some(k) == exclude {
            continue;
        }
        let lam = Complex64::new(model.level(k), 0.0);
        let denom = (z - lam) * (zp - lam);
        if denom.norm() < 1e-300 {
            return Err(Error::Pole {
                z,
                level_lambda: model.level(k),
            });
        }
        accumulate_outer(&mut acc, model.trace_matrix(k), Complex64::new(1.0, 0.0) / denom);
    }
    Ok(acc)
}

/// Boundary data `G_{z̄}* φ = τ(−A+z)⁻¹ φ` of a representation vector.
fn green_star_apply(
    model: &SpectralModel,
    z: Complex64,
    phi: &EigenCoordVector,
    trunc: usize,
) -> Result<DVector<Complex64>> {
    let m = model.boundary_dim();
    let mut acc = DVector::<Complex64>::zeros(m);
    // Regular coefficients: Σ_n T_n (a_n / (z − λ_n)).
    let mut by_level: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
    for (&(n, j), &c) in phi.coeffs() {
        by_level.entry(n).or_default().push((j, c));
    }
    for (n, entries) in by_level {
        if n >= model.num_levels() {
            return Err(Error::InsufficientSpectralData {
                requested: n + 1,
                available: model.num_levels(),
            });
        }
        let denom = z - Complex64::new(model.level(n), 0.0);
        if denom.norm() < 1e-300 {
            return Err(Error::Pole {
                z,
                level_lambda: model.level(n),
            });
        }
        let t = model.trace_matrix(n);
        for (j, c) in entries {
            let w = c / denom;
            for i in 0..m {
                acc[i] += t[(i, j)] * w;
            }
        }
    }
    for ch in phi.charges() {
        let gram = green_cross_gram(model, z, ch.z, ch.excluded_level, trunc)?;
        acc += gram * &ch.xi;
    }
    Ok(acc)
}

/// The pencil `M(z) = Θ + z Π G₀* G_z Π` expressed on the range of `Π`.
pub fn pencil_matrix(
    model: &SpectralModel,
    ext: &ExtensionParams,
    z: Complex64,
    trunc: usize,
) -> Result<(DMatrix<Complex64>, f64)> {
    let (q, bound) = q_matrix_complex(model, z, trunc)?;
    Ok((ext.theta() + ext.compress(&q), bound))
}

/// Apply the extension resolvent `(−A^{Π,Θ} + z)⁻¹` through the Krein-type
/// formula
///
/// ```text
///   (−A^{Π,Θ}+z)⁻¹ φ = (−A+z)⁻¹ φ + G_z Π (Θ + zΠG₀*G_zΠ)⁻¹ Π G_{z̄}* φ
/// ```
///
/// The result is returned in eigencoordinates-plus-charge form. A singular
/// pencil matrix signals that `z` is an eigenvalue of the extension.
pub fn resolvent_apply(
    model: &SpectralModel,
    ext: &ExtensionParams,
    z: Complex64,
    phi: &EigenCoordVector,
    trunc: usize,
) -> Result<EigenCoordVector> {
    if ext.boundary_dim() != model.boundary_dim() {
        return Err(Error::DimensionMismatch {
            context: "extension boundary dimension".into(),
            expected: model.boundary_dim(),
            found: ext.boundary_dim(),
        });
    }
    model.pole_check(z, DEFAULT_POLE_REL)?;
    let trunc = trunc.min(model.num_levels());
    let mut out = EigenCoordVector::new(phi.trunc_levels().max(trunc));

    // Free part (−A+z)⁻¹φ on explicit coefficients.
    for (&(n, j), &c) in phi.coeffs() {
        if n >= model.num_levels() {
            return Err(Error::InsufficientSpectralData {
                requested: n + 1,
                available: model.num_levels(),
            });
        }
        let denom = z - Complex64::new(model.level(n), 0.0);
        out.add_coeff(n, j, c / denom);
    }
    // Free part on charges: (−A+z)⁻¹ G_{z'} ξ = (G_z ξ − G_{z'} ξ)/(z'−z).
    for ch in phi.charges() {
        let denom = ch.z - z;
        if denom.norm() < 1e-12 * z.norm().max(1.0) {
            // Same-point application: expand the charge into coefficients
            // first and divide level-wise.
            let g = green_expand(model, ch.z, &ch.xi, trunc, ch.excluded_level)?;
            for (&(n, j), &c) in g.coeffs.iter() {
                let d = z - Complex64::new(model.level(n), 0.0);
                out.add_coeff(n, j, c / d);
            }
            continue;
        }
        let scaled = ch.xi.clone() / denom;
        match ch.excluded_level {
            None => {
                out.add_charge(z, scaled.clone(), None);
                out.add_charge(ch.z, -scaled, ch.excluded_level);
            }
            Some(n) => {
                // The z-based charge is a full Green vector; compensate its
                // level-n part explicitly so the exclusion is preserved.
                out.add_charge(z, scaled.clone(), None);
                out.add_charge(ch.z, -scaled.clone(), Some(n));
                let denom_n = z - Complex64::new(model.level(n), 0.0);
                if denom_n.norm() < 1e-300 {
                    return Err(Error::Pole {
                        z,
                        level_lambda: model.level(n),
                    });
                }
                let pairing = model.trace_matrix(n).adjoint() * &scaled;
                for j in 0..pairing.len() {
                    out.add_coeff(n, j, -pairing[j] / denom_n);
                }
            }
        }
    }

    if ext.rank() == 0 {
        return Ok(out);
    }

    let w = green_star_apply(model, z, phi, trunc)?;
    let (m_z, _bound) = pencil_matrix(model, ext, z, trunc)?;
    let rhs = ext.pi().basis().adjoint() * w;
    let scale = linalg::spectral_norm(&m_z).max(1.0);
    let zeta = linalg::solve_checked(&m_z, &rhs, 1e-12 * scale)
        .ok_or(Error::SingularPencil { z })?;
    out.add_charge(z, ext.lift(&zeta), None);
    Ok(out)
}

/// One eigenvalue of the extension found inside a spectral gap.
#[derive(Debug, Clone)]
pub struct NewEigenvalue {
    pub lambda: f64,
    pub multiplicity: usize,
    /// Kernel charges `ξ ∈ ℂ^m`; the eigenvectors of the extension are
    /// `G_λ ξ`.
    pub charges: Vec<DVector<Complex64>>,
    /// Largest pencil eigenvalue magnitude among the reported kernel
    /// directions.
    pub residual: f64,
    /// Root found by endpoint inspection rather than interior bracketing.
    pub at_boundary: bool,
}

/// Controls for the gap scanner.
#[derive(Debug, Clone, Copy)]
pub struct ScanOptions {
    /// Grid points per interval used to bracket eigenvalue branches.
    pub grid: usize,
    /// Series truncation (ignored by closed-form models).
    pub trunc: usize,
    /// Relative rank tolerance for kernel decisions at roots.
    pub rank_tol: f64,
    /// Relative pole clearance from gap edges.
    pub pole_rel: f64,
}

impl ScanOptions {
    pub fn with_trunc(trunc: usize) -> Self {
        Self {
            grid: 64,
            trunc,
            rank_tol: 1e-9,
            pole_rel: DEFAULT_POLE_REL,
        }
    }
}

/// Find the eigenvalues of the extension inside an interval of the
/// resolvent set of the base operator: the points where the Hermitian pencil
/// `M(λ) = Θ + Q_Π(λ)` becomes singular.
///
/// Each of the finitely many eigenvalue branches of `M(λ)` is strictly
/// increasing on gaps (the λ-derivative of `Q` is `G_λ*G_λ ⪰ 0`), so
/// per-branch sign changes on a coarse grid bracket every root and bisection
/// converges. The interval endpoints are inspected separately so that roots
/// sitting exactly on a gap boundary in the resolvent set are reported.
pub fn new_eigenvalues(
    model: &SpectralModel,
    ext: &ExtensionParams,
    interval: (f64, f64),
    tol: f64,
    opts: &ScanOptions,
) -> Result<Vec<NewEigenvalue>> {
    let (lo, hi) = interval;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!(
            "empty search interval [{lo}, {hi}]"
        )));
    }
    if ext.rank() == 0 {
        return Ok(Vec::new());
    }
    // The open interval must avoid the spectrum.
    for lam in model.levels() {
        if *lam > lo + DEFAULT_POLE_REL && *lam < hi - DEFAULT_POLE_REL {
            return Err(Error::SpectrumTouchesInterval { lambda: *lam });
        }
    }

    // Clamp evaluation away from gap edges that touch the spectrum.
    let clamp = |x: f64| -> f64 {
        let dist = model.nearest_level_distance(x);
        let eps = opts.pole_rel * x.abs().max(1.0);
        if dist < eps {
            if x <= 0.5 * (lo + hi) {
                x + eps
            } else {
                x - eps
            }
        } else {
            x
        }
    };
    let lo_eval = clamp(lo);
    let hi_eval = clamp(hi);

    let r = ext.rank();
    let grid = opts.grid.max(2);
    let eigs_at = |lam: f64| -> Result<Vec<f64>> {
        let (m, _) = pencil_matrix(model, ext, Complex64::new(lam, 0.0), opts.trunc)?;
        Ok(linalg::hermitian_eigen_sorted(&m).0)
    };

    let mut grid_pts = Vec::with_capacity(grid + 1);
    let mut grid_eigs = Vec::with_capacity(grid + 1);
    for g in 0..=grid {
        let lam = lo_eval + (hi_eval - lo_eval) * (g as f64) / (grid as f64);
        grid_pts.push(lam);
        grid_eigs.push(eigs_at(lam)?);
    }

    let mut roots: Vec<(f64, f64)> = Vec::new(); // (λ*, |f| achieved)
    for branch in 0..r {
        for cell in 0..grid {
            let fa = grid_eigs[cell][branch];
            let fb = grid_eigs[cell + 1][branch];
            if fa == 0.0 {
                roots.push((grid_pts[cell], 0.0));
                continue;
            }
            if fa.signum() * fb.signum() < 0.0 {
                let mut a = grid_pts[cell];
                let mut b = grid_pts[cell + 1];
                let mut fa = fa;
                let mut f_mid = fa;
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    f_mid = eigs_at(mid)?[branch];
                    if !f_mid.is_finite() {
                        return Err(Error::BracketingFailure { lo: a, hi: b, branch });
                    }
                    if f_mid == 0.0 {
                        a = mid;
                        b = mid;
                        break;
                    }
                    if f_mid.signum() == fa.signum() {
                        a = mid;
                        fa = f_mid;
                    } else {
                        b = mid;
                    }
                    if (b - a) <= tol {
                        break;
                    }
                }
                roots.push((0.5 * (a + b), f_mid.abs()));
            }
        }
    }

    // Merge bisection hits from different branches pointing at the same root.
    roots.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite roots"));
    let mut clusters: Vec<(f64, f64)> = Vec::new();
    for (lam, f) in roots {
        match clusters.last_mut() {
            Some((last, fmax)) if (lam - *last).abs() <= 4.0 * tol.max(1e-14) => {
                *last = 0.5 * (*last + lam);
                *fmax = fmax.max(f);
            }
            _ => clusters.push((lam, f)),
        }
    }

    let mut results = Vec::new();
    for (lam, f_achieved) in &clusters {
        if let Some(root) = kernel_at(model, ext, *lam, *f_achieved, false, opts)? {
            results.push(root);
        }
    }

    // Endpoint inspection: a root may sit exactly on an interval boundary
    // (still inside the resolvent set of the base operator).
    for endpoint in [lo_eval, hi_eval] {
        let near_interior = results
            .iter()
            .any(|r: &NewEigenvalue| (r.lambda - endpoint).abs() <= 8.0 * tol.max(1e-14));
        if near_interior {
            continue;
        }
        if let Some(root) = kernel_at(model, ext, endpoint, 0.0, true, opts)? {
            results.push(root);
        }
    }

    results.sort_by(|a, b| a.lambda.partial_cmp(&b.lambda).expect("finite"));
    Ok(results)
}

/// Kernel of the pencil at a candidate point; `None` when the pencil is
/// regular there at the working tolerance.
fn kernel_at(
    model: &SpectralModel,
    ext: &ExtensionParams,
    lam: f64,
    f_achieved: f64,
    boundary: bool,
    opts: &ScanOptions,
) -> Result<Option<NewEigenvalue>> {
    let (m, _) = pencil_matrix(model, ext, Complex64::new(lam, 0.0), opts.trunc)?;
    let (values, vectors) = linalg::hermitian_eigen_sorted(&m);
    let scale = values.iter().fold(0.0f64, |acc, v| acc.max(v.abs())).max(1.0);
    let ktol = (opts.rank_tol * scale).max(4.0 * f_achieved);
    let mut charges = Vec::new();
    let mut residual = 0.0f64;
    for (i, mu) in values.iter().enumerate() {
        if mu.abs() <= ktol {
            charges.push(ext.lift(&vectors.column(i).into_owned()));
            residual = residual.max(mu.abs());
        }
    }
    if charges.is_empty() {
        return Ok(None);
    }
    Ok(Some(NewEigenvalue {
        lambda: lam,
        multiplicity: charges.len(),
        charges,
        residual,
        at_boundary: boundary,
    }))
}

/// The eigenvector of the extension attached to a scanner root, as a pure
/// Green charge; expand or evaluate it on demand.
pub fn extension_eigenvector(
    root: &NewEigenvalue,
    which: usize,
    trunc_levels: usize,
) -> EigenCoordVector {
    let mut v = EigenCoordVector::new(trunc_levels);
    v.add_charge(
        Complex64::new(root.lambda, 0.0),
        root.charges[which].clone(),
        None,
    );
    v
}
