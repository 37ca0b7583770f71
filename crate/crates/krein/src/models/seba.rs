//! Point perturbation of the Dirichlet Laplacian on a rectangle
//! `(0,a)×(0,b)`: levels `λ_{m,n} = −π²(m²/a² + n²/b²)` merged into groups
//! of equal value, scalar trace `τψ = ψ(y)` at the perturbation point.
//!
//! Whether a level survives the perturbation is governed by exact
//! arithmetic: the relative coordinates `(y₁/a, y₂/b)` are supplied either
//! as exact fractions or as explicit irrational markers, because
//! irrationality cannot be detected from floating-point input. Trace values
//! that are exactly zero by rationality (`sin(mπ·p/q) = 0` when `q | m`)
//! are snapped to `0.0` at build time so the numerical engine sees the same
//! nodal pattern as the exact predicate.
//!
//! Level grouping is likewise exact when the squared side ratio `a²/b²` is
//! declared rational: `λ_{m,n} = λ_{m',n'}` iff `m²q + n²p` coincide, where
//! `a²/b² = p/q`. A declared-irrational ratio makes every level simple. A
//! plain numeric ratio falls back to relative-tolerance grouping (1e-9) and
//! disables the exact predicate.
//!
//! Tail constants: the eigenvalue counting function of the rectangle grows
//! like `(ab/4π)·|λ|`, so the trace tail decays like `1/N`. The builder
//! certifies `C` by combining the stored partial sums with twice the
//! counting-law estimate for everything beyond the cutoff.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::real;
use crate::spectral::{ModelData, ModelKind, SpectralModel, TailBound};

/// A relative coordinate in `(0, 1)` with its exactness status.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coordinate {
    /// Exactly `num/den` (reduced at construction).
    Rational { num: u32, den: u32 },
    /// Declared irrational, with the numeric value used for evaluation.
    Irrational { value: f64 },
    /// Plain numeric value with no exactness claim.
    Numeric { value: f64 },
}

impl Coordinate {
    pub fn rational(num: u32, den: u32) -> Result<Self> {
        if den == 0 || num == 0 || num >= den {
            return Err(Error::InvalidParameter(format!(
                "relative coordinate fraction {num}/{den} must lie strictly inside (0,1)"
            )));
        }
        let g = gcd(num, den);
        Ok(Self::Rational {
            num: num / g,
            den: den / g,
        })
    }

    pub fn value(&self) -> f64 {
        match self {
            Self::Rational { num, den } => f64::from(*num) / f64::from(*den),
            Self::Irrational { value } | Self::Numeric { value } => *value,
        }
    }

    pub fn is_exact(&self) -> bool {
        !matches!(self, Self::Numeric { .. })
    }

    /// Is `sin(k·π·coordinate)` exactly zero? `None` when no exactness data
    /// is available.
    pub fn sine_vanishes(&self, k: u32) -> Option<bool> {
        match self {
            Self::Rational { num, den } => Some((u64::from(k) * u64::from(*num)) % u64::from(*den) == 0),
            Self::Irrational { .. } => Some(false),
            Self::Numeric { .. } => None,
        }
    }

    /// `sin(kπ·coordinate)` with exact-zero snapping and reduced argument
    /// for rational coordinates.
    fn sine(&self, k: u32) -> f64 {
        match self {
            Self::Rational { num, den } => {
                let r = (u64::from(k) * u64::from(*num)) % (2 * u64::from(*den));
                if r % u64::from(*den) == 0 {
                    0.0
                } else {
                    (std::f64::consts::PI * r as f64 / f64::from(*den)).sin()
                }
            }
            Self::Irrational { value } | Self::Numeric { value } => {
                (std::f64::consts::PI * f64::from(k) * value).sin()
            }
        }
    }
}

fn gcd(mut a: u32, mut b: u32) -> u32 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a.max(1)
}

/// Exactness status of the squared side ratio `a²/b²`, which controls level
/// degeneracy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SideRatio {
    /// `a²/b² = num/den` exactly.
    Rational { num: u32, den: u32 },
    /// Declared irrational: all levels are simple.
    Irrational,
    /// No exactness claim: group levels within relative tolerance 1e-9 and
    /// treat near-degeneracies as distinct.
    Numeric,
}

/// One merged level of the rectangle.
#[derive(Debug, Clone)]
pub struct LevelGroup {
    pub lambda: f64,
    /// Index pairs `(m, n)` sharing the level, in lexicographic order.
    pub pairs: Vec<(u32, u32)>,
}

/// Model-specific data kept alongside the spectral data.
#[derive(Debug, Clone)]
pub struct SebaData {
    pub a: f64,
    pub b: f64,
    pub y1: Coordinate,
    pub y2: Coordinate,
    pub ratio: SideRatio,
    pub groups: Vec<LevelGroup>,
}

impl SebaData {
    pub fn has_exact_coordinates(&self) -> bool {
        self.y1.is_exact() && self.y2.is_exact()
    }
}

/// Enumerate and group the rectangle levels with `|λ| ≤ cutoff`.
fn enumerate_groups(a: f64, b: f64, ratio: SideRatio, cutoff: f64) -> Result<Vec<LevelGroup>> {
    let pi2 = std::f64::consts::PI * std::f64::consts::PI;
    let m_max = (a * (cutoff / pi2).sqrt()).floor() as u32;
    let n_max = (b * (cutoff / pi2).sqrt()).floor() as u32;
    if m_max == 0 || n_max == 0 {
        return Err(Error::InvalidParameter(format!(
            "cutoff {cutoff} admits no levels for sides {a} × {b}"
        )));
    }
    if let SideRatio::Rational { num, den } = ratio {
        if den == 0 || num == 0 {
            return Err(Error::InvalidParameter("side ratio must be positive".into()));
        }
        let declared = f64::from(num) / f64::from(den);
        let actual = (a * a) / (b * b);
        if (declared - actual).abs() > 1e-9 * declared.max(actual) {
            return Err(Error::InvalidParameter(format!(
                "declared squared side ratio {num}/{den} does not match a²/b² = {actual}"
            )));
        }
    }

    let lambda_of = |m: u32, n: u32| -> f64 {
        -pi2 * (f64::from(m) * f64::from(m) / (a * a) + f64::from(n) * f64::from(n) / (b * b))
    };

    let mut groups: Vec<LevelGroup> = Vec::new();
    match ratio {
        SideRatio::Rational { num, den } => {
            // Exact grouping key: m² den + n² num (λ = −π²/(a² den) · key).
            let mut map: std::collections::BTreeMap<u64, Vec<(u32, u32)>> =
                std::collections::BTreeMap::new();
            for m in 1..=m_max {
                for n in 1..=n_max {
                    if lambda_of(m, n).abs() <= cutoff {
                        let key = u64::from(m) * u64::from(m) * u64::from(den)
                            + u64::from(n) * u64::from(n) * u64::from(num);
                        map.entry(key).or_default().push((m, n));
                    }
                }
            }
            for (key, mut pairs) in map {
                pairs.sort_unstable();
                let lambda = -pi2 * (key as f64) / (a * a * f64::from(den));
                groups.push(LevelGroup { lambda, pairs });
            }
        }
        SideRatio::Irrational => {
            for m in 1..=m_max {
                for n in 1..=n_max {
                    let lambda = lambda_of(m, n);
                    if lambda.abs() <= cutoff {
                        groups.push(LevelGroup {
                            lambda,
                            pairs: vec![(m, n)],
                        });
                    }
                }
            }
            groups.sort_by(|x, y| {
                x.lambda
                    .abs()
                    .partial_cmp(&y.lambda.abs())
                    .expect("finite levels")
            });
        }
        SideRatio::Numeric => {
            let mut flat: Vec<(f64, (u32, u32))> = Vec::new();
            for m in 1..=m_max {
                for n in 1..=n_max {
                    let lambda = lambda_of(m, n);
                    if lambda.abs() <= cutoff {
                        flat.push((lambda, (m, n)));
                    }
                }
            }
            flat.sort_by(|x, y| x.0.abs().partial_cmp(&y.0.abs()).expect("finite levels"));
            for (lambda, pair) in flat {
                match groups.last_mut() {
                    Some(g) if (g.lambda - lambda).abs() <= 1e-9 * lambda.abs() => {
                        g.pairs.push(pair);
                    }
                    _ => groups.push(LevelGroup {
                        lambda,
                        pairs: vec![pair],
                    }),
                }
            }
            for g in &mut groups {
                g.pairs.sort_unstable();
            }
        }
    }
    if groups.is_empty() {
        return Err(Error::InvalidParameter(
            "no levels below the requested cutoff".into(),
        ));
    }
    Ok(groups)
}

/// Build the rectangle model with a point perturbation at the relative
/// position `(y1, y2)`; `cutoff` bounds `|λ|` for the stored levels.
pub fn build_seba(
    a: f64,
    b: f64,
    ratio: SideRatio,
    y1: Coordinate,
    y2: Coordinate,
    cutoff: f64,
) -> Result<SpectralModel> {
    if !(a > 0.0 && b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "rectangle sides must be positive, got {a} × {b}"
        )));
    }
    for (name, c) in [("y1", &y1), ("y2", &y2)] {
        let v = c.value();
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "relative coordinate {name} = {v} must lie strictly inside (0,1)"
            )));
        }
    }
    if !(cutoff > 0.0) {
        return Err(Error::InvalidParameter("cutoff must be positive".into()));
    }

    let groups = enumerate_groups(a, b, ratio, cutoff)?;
    let amp = (4.0 / (a * b)).sqrt();
    let mut levels = Vec::with_capacity(groups.len());
    let mut traces = Vec::with_capacity(groups.len());
    for g in &groups {
        levels.push(g.lambda);
        let mut t = DMatrix::zeros(1, g.pairs.len());
        for (j, (m, n)) in g.pairs.iter().enumerate() {
            let s1 = y1.sine(*m);
            let s2 = y2.sine(*n);
            let v = if s1 == 0.0 || s2 == 0.0 {
                0.0
            } else {
                amp * s1 * s2
            };
            t[(0, j)] = real(v);
        }
        traces.push(t);
    }

    // Tail certificate: stored partial sums, plus twice the counting-law
    // estimate (ab/4π per unit of |λ|) for levels beyond the cutoff.
    let weights: Vec<f64> = traces
        .iter()
        .zip(levels.iter())
        .map(|(t, l)| t.norm_squared() / (l * l))
        .collect();
    let beyond = 2.0 * (4.0 / (a * b)) * (a * b / (4.0 * std::f64::consts::PI)) / cutoff;
    let mut constant: f64 = 0.0;
    for cut in 1..levels.len() {
        let partial: f64 = weights[cut..].iter().sum();
        constant = constant.max((partial + beyond) * cut as f64);
    }
    constant = constant.max(beyond * levels.len() as f64) * 1.1;

    SpectralModel::assemble(ModelData {
        levels,
        traces,
        boundary_dim: 1,
        tail: TailBound {
            constant,
            exponent: 1.0,
        },
        trace_scale: amp,
        p0: None,
        q_closed: None,
        q_perp_closed: None,
        kind: ModelKind::Seba(SebaData {
            a,
            b,
            y1,
            y2,
            ratio,
            groups,
        }),
    })
}

/// Exact combinatorial evaluation of the survival predicate per level group:
/// a level survives the point perturbation iff its eigenspace contains a
/// function vanishing at the perturbation point, i.e. iff the group is
/// degenerate or its single eigenfunction has a node there. Returns the
/// preserved level indices; requires exact coordinate data.
pub fn seba_common_spectrum_exact(model: &SpectralModel) -> Result<Vec<usize>> {
    let data = match model.kind() {
        ModelKind::Seba(data) => data,
        _ => {
            return Err(Error::Unsupported(
                "exact common spectrum is only defined for rectangle models".into(),
            ))
        }
    };
    if !data.has_exact_coordinates() {
        return Err(Error::ExactDataMissing(
            "relative coordinates must be exact fractions or declared irrational".into(),
        ));
    }
    let mut preserved = Vec::new();
    for (idx, g) in data.groups.iter().enumerate() {
        let survives = if g.pairs.len() >= 2 {
            true
        } else {
            let (m, n) = g.pairs[0];
            data.y1.sine_vanishes(m).expect("exact coordinate")
                || data.y2.sine_vanishes(n).expect("exact coordinate")
        };
        if survives {
            preserved.push(idx);
        }
    }
    Ok(preserved)
}
