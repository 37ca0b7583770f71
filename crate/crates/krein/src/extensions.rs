//! Extension-parameter algebra: orthogonal projections `Π` on the boundary
//! space, Hermitian operators `Θ` on their range, the `(Π, B)` boundary
//! reparametrization, and block decompositions relative to subspace
//! splittings.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;

/// Default relative tolerance for numerical rank decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

const ORTHONORMALITY_TOL: f64 = 1e-12;

/// A subspace of `ℂ^m` stored as an `m×k` matrix with orthonormal columns.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: DMatrix<Complex64>,
}

impl Subspace {
    /// Wrap a basis that is already orthonormal (checked to `1e-12`).
    pub fn from_orthonormal(basis: DMatrix<Complex64>) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        if (gram - DMatrix::<Complex64>::identity(k, k)).norm() > ORTHONORMALITY_TOL * (1 + k) as f64
        {
            return Err(Error::InvalidParameter(
                "subspace basis is not orthonormal".into(),
            ));
        }
        Ok(Self { basis })
    }

    /// Span of an arbitrary set of vectors; numerically dependent directions
    /// (singular values below `rank_tol` relative to the largest) are dropped.
    pub fn span(ambient_dim: usize, vectors: &[DVector<Complex64>], rank_tol: f64) -> Result<Self> {
        for v in vectors {
            if v.len() != ambient_dim {
                return Err(Error::DimensionMismatch {
                    context: "subspace spanning vector".into(),
                    expected: ambient_dim,
                    found: v.len(),
                });
            }
        }
        if vectors.is_empty() {
            return Ok(Self::zero(ambient_dim));
        }
        let mut m = DMatrix::zeros(ambient_dim, vectors.len());
        for (j, v) in vectors.iter().enumerate() {
            m.set_column(j, v);
        }
        let smax = linalg::spectral_norm(&m);
        let basis = linalg::orthonormal_range(&m, rank_tol * smax.max(f64::MIN_POSITIVE));
        Ok(Self { basis })
    }

    /// The zero subspace of `ℂ^m`.
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::zeros(ambient_dim, 0),
        }
    }

    /// All of `ℂ^m`.
    pub fn full(ambient_dim: usize) -> Self {
        Self {
            basis: DMatrix::identity(ambient_dim, ambient_dim),
        }
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &DMatrix<Complex64> {
        &self.basis
    }

    /// The orthogonal projector `V V*` materialized as an `m×m` matrix.
    pub fn projector(&self) -> DMatrix<Complex64> {
        &self.basis * self.basis.adjoint()
    }

    /// Orthogonal complement within the ambient space.
    pub fn complement(&self) -> Subspace {
        let m = self.ambient_dim();
        let residual = DMatrix::<Complex64>::identity(m, m) - self.projector();
        Subspace {
            basis: linalg::orthonormal_range(&residual, 0.5),
        }
    }

    /// Apply the orthogonal projector onto this subspace to `v`.
    pub fn project(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        &self.basis * (self.basis.adjoint() * v)
    }

    /// `‖(1 - P) v‖`: distance of `v` from the subspace.
    pub fn residual_norm(&self, v: &DVector<Complex64>) -> f64 {
        (v - self.project(v)).norm()
    }
}

/// The pair `(Π, Θ)` labelling a self-adjoint extension: an orthogonal
/// projection in `ℂ^m` held as a range basis, and a Hermitian matrix acting
/// on that range expressed in the basis coordinates.
///
/// Projections are never stored as `m×m` idempotent matrices; the range
/// basis is the primary representation and the idempotent is materialized on
/// demand.
#[derive(Debug, Clone)]
pub struct ExtensionParams {
    pi: Subspace,
    theta: DMatrix<Complex64>,
}

impl ExtensionParams {
    /// Build from a projection range and a Hermitian `Θ` given in the range
    /// basis. `theta` is symmetrized on storage; asymmetry beyond `1e-12`
    /// relative to its norm is rejected.
    pub fn new(pi: Subspace, theta: DMatrix<Complex64>) -> Result<Self> {
        let r = pi.dim();
        if theta.nrows() != r || theta.ncols() != r {
            return Err(Error::DimensionMismatch {
                context: "theta on the projection range".into(),
                expected: r,
                found: theta.nrows().max(theta.ncols()),
            });
        }
        let asym = linalg::asymmetry(&theta);
        if asym > 1e-12 * (1.0 + theta.norm()) {
            return Err(Error::NonHermitian { asymmetry: asym });
        }
        Ok(Self {
            pi,
            theta: linalg::hermitian_part(&theta),
        })
    }

    /// The trivial extension parameters `Π = 0` (the unperturbed operator).
    pub fn unperturbed(boundary_dim: usize) -> Self {
        Self {
            pi: Subspace::zero(boundary_dim),
            theta: DMatrix::zeros(0, 0),
        }
    }

    /// `Π = 1` with the given `Θ` in the standard basis.
    pub fn full(theta: DMatrix<Complex64>) -> Result<Self> {
        let m = theta.nrows();
        Self::new(Subspace::full(m), theta)
    }

    /// Rank-one projection `Π = w ⊗ w` for a unit vector `w`, with scalar `Θ`.
    pub fn rank_one(w: &DVector<Complex64>, theta: f64) -> Result<Self> {
        let norm = w.norm();
        if norm < 1e-14 {
            return Err(Error::InvalidParameter("rank-one direction is zero".into()));
        }
        let basis = DMatrix::from_column_slice(w.len(), 1, (w / linalg::real(norm)).as_slice());
        Self::new(
            Subspace::from_orthonormal(basis)?,
            DMatrix::from_element(1, 1, linalg::real(theta)),
        )
    }

    pub fn boundary_dim(&self) -> usize {
        self.pi.ambient_dim()
    }

    /// Rank of the projection.
    pub fn rank(&self) -> usize {
        self.pi.dim()
    }

    pub fn pi(&self) -> &Subspace {
        &self.pi
    }

    pub fn theta(&self) -> &DMatrix<Complex64> {
        &self.theta
    }

    /// The projection as an `m×m` idempotent.
    pub fn projection_matrix(&self) -> DMatrix<Complex64> {
        self.pi.projector()
    }

    /// Compress an `m×m` operator to the projection range: `P* L P` (`r×r`).
    pub fn compress(&self, op: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        self.pi.basis().adjoint() * op * self.pi.basis()
    }

    /// Lift range coordinates to `ℂ^m`.
    pub fn lift(&self, v: &DVector<Complex64>) -> DVector<Complex64> {
        self.pi.basis() * v
    }
}

/// Orthonormalize a list of vectors into a projection range, dropping
/// numerically dependent directions.
pub fn make_projection(
    ambient_dim: usize,
    vectors: &[DVector<Complex64>],
    rank_tol: f64,
) -> Result<Subspace> {
    Subspace::span(ambient_dim, vectors, rank_tol)
}

/// Translate boundary parameters `(Π, B)` into `(Π, Θ)` with
/// `Θ = B + Π P₀ Π` restricted to the range of `Π`; `p0` is the model's
/// zero-energy boundary (Dirichlet-to-Neumann) matrix.
pub fn theta_from_b(
    p0: &DMatrix<Complex64>,
    pi: Subspace,
    b: &DMatrix<Complex64>,
) -> Result<ExtensionParams> {
    let r = pi.dim();
    if p0.nrows() != pi.ambient_dim() || p0.ncols() != pi.ambient_dim() {
        return Err(Error::DimensionMismatch {
            context: "boundary matrix p0".into(),
            expected: pi.ambient_dim(),
            found: p0.nrows(),
        });
    }
    if b.nrows() != r || b.ncols() != r {
        return Err(Error::DimensionMismatch {
            context: "b on the projection range".into(),
            expected: r,
            found: b.nrows().max(b.ncols()),
        });
    }
    let asym = linalg::asymmetry(b);
    if asym > 1e-12 * (1.0 + b.norm()) {
        return Err(Error::NonHermitian { asymmetry: asym });
    }
    let compressed_p0 = pi.basis().adjoint() * p0 * pi.basis();
    let theta = linalg::hermitian_part(&(b + compressed_p0));
    ExtensionParams::new(pi, theta)
}

/// Inverse of [`theta_from_b`]: recover `B = Θ - Π P₀ Π` on the range.
pub fn b_from_theta(p0: &DMatrix<Complex64>, ext: &ExtensionParams) -> DMatrix<Complex64> {
    let compressed_p0 = ext.pi().basis().adjoint() * p0 * ext.pi().basis();
    linalg::hermitian_part(&(ext.theta() - compressed_p0))
}

/// The four compression blocks of an operator relative to an orthogonal
/// splitting of its domain space.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub par: DMatrix<Complex64>,
    pub par_perp: DMatrix<Complex64>,
    pub perp_par: DMatrix<Complex64>,
    pub perp: DMatrix<Complex64>,
}

impl BlockDecomposition {
    /// Conjugate the blocks back by the split bases, reproducing the operator.
    pub fn reassemble(&self, first: &Subspace, second: &Subspace) -> DMatrix<Complex64> {
        let s1 = first.basis();
        let s2 = second.basis();
        s1 * &self.par * s1.adjoint()
            + s1 * &self.par_perp * s2.adjoint()
            + s2 * &self.perp_par * s1.adjoint()
            + s2 * &self.perp * s2.adjoint()
    }
}

/// Decompose `op` into blocks relative to two mutually orthogonal subspaces
/// that jointly span the operator's domain space.
pub fn block_decompose(
    op: &DMatrix<Complex64>,
    first: &Subspace,
    second: &Subspace,
) -> Result<BlockDecomposition> {
    let m = op.nrows();
    if op.ncols() != m {
        return Err(Error::DimensionMismatch {
            context: "block decomposition operator".into(),
            expected: m,
            found: op.ncols(),
        });
    }
    if first.ambient_dim() != m || second.ambient_dim() != m {
        return Err(Error::DimensionMismatch {
            context: "block decomposition split".into(),
            expected: m,
            found: first.ambient_dim().max(second.ambient_dim()),
        });
    }
    if first.dim() + second.dim() != m {
        return Err(Error::InvalidParameter(
            "split subspaces do not span the operator's domain space".into(),
        ));
    }
    let overlap = (first.basis().adjoint() * second.basis()).norm();
    if overlap > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "split subspaces are not orthogonal (overlap {overlap:.3e})"
        )));
    }
    let s1 = first.basis();
    let s2 = second.basis();
    Ok(BlockDecomposition {
        par: s1.adjoint() * op * s1,
        par_perp: s1.adjoint() * op * s2,
        perp_par: s2.adjoint() * op * s1,
        perp: s2.adjoint() * op * s2,
    })
}

/// Cosines of the principal angles between two subspaces, sorted descending.
pub fn principal_cosines(a: &Subspace, b: &Subspace) -> Vec<f64> {
    if a.is_zero() || b.is_zero() {
        return Vec::new();
    }
    let product = a.basis().adjoint() * b.basis();
    let mut cosines: Vec<f64> = product
        .svd(false, false)
        .singular_values
        .iter()
        .map(|s| s.min(1.0))
        .collect();
    cosines.sort_by(|x, y| y.partial_cmp(x).expect("finite cosines"));
    cosines
}

/// Intersection of two subspaces via principal angles: directions whose
/// principal cosine is at least `1 - tol` count as common directions.
pub fn subspace_intersect(a: &Subspace, b: &Subspace, tol: f64) -> Subspace {
    if a.is_zero() || b.is_zero() {
        return Subspace::zero(a.ambient_dim());
    }
    let product = a.basis().adjoint() * b.basis();
    let svd = product.svd(true, false);
    let u = svd.u.expect("svd with u requested");
    let mut directions = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s >= 1.0 - tol {
            directions.push(a.basis() * u.column(i).into_owned());
        }
    }
    Subspace::span(a.ambient_dim(), &directions, 0.5).expect("dimension consistent by construction")
}
