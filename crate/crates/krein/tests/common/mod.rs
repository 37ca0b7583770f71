//! Shared oracle machinery for the integration suites. Everything here is
//! independent of the library's computational paths: finite-difference
//! discretizations solved with a hand-rolled banded LU, transcendental
//! secular equations solved by bisection, and a direct re-implementation of
//! the Q-matrix series from the level data.

#![allow(dead_code)]

/// Banded matrix with partial-pivoted Gaussian elimination. Row `i` stores
/// columns `[i-kl, i+ku+2kl]`; the extra width absorbs pivoting fill-in.
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    width: usize,
    data: Vec<f64>,
}

impl BandMatrix {
    pub fn new(n: usize, kl: usize, ku: usize) -> Self {
        let width = 3 * kl + ku + 1;
        Self {
            n,
            kl,
            ku,
            width,
            data: vec![0.0; n * width],
        }
    }

    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let off = j as isize - i as isize + self.kl as isize;
        if off < 0 || off >= self.width as isize {
            None
        } else {
            Some(i * self.width + off as usize)
        }
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.offset(i, j).expect("entry outside band");
        self.data[idx] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let idx = self.offset(i, j).expect("entry outside band");
        self.data[idx] += v;
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).map(|idx| self.data[idx]).unwrap_or(0.0)
    }

    /// Solve `A x = rhs`, consuming the matrix.
    pub fn solve(mut self, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
        assert_eq!(rhs.len(), self.n);
        let n = self.n;
        for k in 0..n {
            let pmax = (k + self.kl).min(n - 1);
            let mut pivot_row = k;
            let mut pivot_val = self.get(k, k).abs();
            for p in (k + 1)..=pmax {
                let v = self.get(p, k).abs();
                if v > pivot_val {
                    pivot_val = v;
                    pivot_row = p;
                }
            }
            if pivot_val < 1e-300 {
                return None;
            }
            let jmax = (k + self.ku + 2 * self.kl).min(n - 1);
            if pivot_row != k {
                for j in k..=jmax {
                    let a = self.get(k, j);
                    let b = self.get(pivot_row, j);
                    self.set(k, j, b);
                    self.set(pivot_row, j, a);
                }
                rhs.swap(k, pivot_row);
            }
            let diag = self.get(k, k);
            for r in (k + 1)..=pmax {
                let factor = self.get(r, k) / diag;
                if factor == 0.0 {
                    continue;
                }
                for j in k..=jmax {
                    let v = self.get(k, j);
                    if v != 0.0 {
                        self.add(r, j, -factor * v);
                    }
                }
                rhs[r] -= factor * rhs[k];
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let jmax = (i + self.ku + 2 * self.kl).min(n - 1);
            let mut acc = rhs[i];
            for j in (i + 1)..=jmax {
                acc -= self.get(i, j) * x[j];
            }
            x[i] = acc / self.get(i, i);
        }
        Some(x)
    }
}

/// Solve `u'' = z u` on `(0, a)` with Dirichlet data `u(0) = u0`,
/// `u(a) = ua` by second-order central differences on `m+1` grid points.
/// Returns `(grid, values)`.
pub fn fd_dirichlet_data(a: f64, z: f64, u0: f64, ua: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = a / m as f64;
    let n = m + 1;
    let mut mat = BandMatrix::new(n, 1, 1);
    let mut rhs = vec![0.0; n];
    mat.set(0, 0, 1.0);
    rhs[0] = u0;
    for i in 1..m {
        mat.set(i, i - 1, 1.0 / (h * h));
        mat.set(i, i, -2.0 / (h * h) - z);
        mat.set(i, i + 1, 1.0 / (h * h));
    }
    mat.set(m, m, 1.0);
    rhs[m] = ua;
    let x = mat.solve(rhs).expect("nonsingular boundary-value problem");
    let grid = (0..n).map(|i| i as f64 * h).collect();
    (grid, x)
}

/// Solve the resolvent problem `(−u'' + z u) = f` on `(0, a)` with the Robin
/// condition `u'(0) = b u(0)` and `u(a) = 0`, second order throughout (the
/// Robin row uses the one-sided three-point derivative).
pub fn fd_robin_dirichlet_resolvent(
    a: f64,
    b: f64,
    z: f64,
    f: &dyn Fn(f64) -> f64,
    m: usize,
) -> (Vec<f64>, Vec<f64>) {
    let h = a / m as f64;
    let n = m + 1;
    let mut mat = BandMatrix::new(n, 1, 2);
    let mut rhs = vec![0.0; n];
    // (−3u₀ + 4u₁ − u₂)/(2h) − b u₀ = 0
    mat.set(0, 0, -3.0 / (2.0 * h) - b);
    mat.set(0, 1, 4.0 / (2.0 * h));
    mat.set(0, 2, -1.0 / (2.0 * h));
    for i in 1..m {
        let x = i as f64 * h;
        mat.set(i, i - 1, -1.0 / (h * h));
        mat.set(i, i, 2.0 / (h * h) + z);
        mat.set(i, i + 1, -1.0 / (h * h));
        rhs[i] = f(x);
    }
    mat.set(m, m, 1.0);
    let x = mat.solve(rhs).expect("resolvent system nonsingular");
    let grid = (0..n).map(|i| i as f64 * h).collect();
    (grid, x)
}

/// Solve `(−Δ + z) u = δ_y / (hx hy)` on the rectangle `(0,a)×(0,b)` with
/// Dirichlet boundary, on an `(mx × my)` interior grid. Returns
/// `(xs, ys, u)` with `u` indexed `u[j*mx + i]` for `x = xs[i], y = ys[j]`.
pub fn fd_rectangle_point_source(
    a: f64,
    b: f64,
    z: f64,
    source: (f64, f64),
    mx: usize,
    my: usize,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let hx = a / (mx + 1) as f64;
    let hy = b / (my + 1) as f64;
    let n = mx * my;
    let mut mat = BandMatrix::new(n, mx, mx);
    let mut rhs = vec![0.0; n];
    for j in 0..my {
        for i in 0..mx {
            let row = j * mx + i;
            mat.set(row, row, 2.0 / (hx * hx) + 2.0 / (hy * hy) + z);
            if i > 0 {
                mat.set(row, row - 1, -1.0 / (hx * hx));
            }
            if i + 1 < mx {
                mat.set(row, row + 1, -1.0 / (hx * hx));
            }
            if j > 0 {
                mat.set(row, row - mx, -1.0 / (hy * hy));
            }
            if j + 1 < my {
                mat.set(row, row + mx, -1.0 / (hy * hy));
            }
        }
    }
    let si = ((source.0 / hx).round() as usize).clamp(1, mx) - 1;
    let sj = ((source.1 / hy).round() as usize).clamp(1, my) - 1;
    rhs[sj * mx + si] = 1.0 / (hx * hy);
    let u = mat.solve(rhs).expect("shifted Laplacian nonsingular");
    let xs = (1..=mx).map(|i| i as f64 * hx).collect();
    let ys = (1..=my).map(|j| j as f64 * hy).collect();
    (xs, ys, u)
}

/// Roots of the Robin–Dirichlet secular equation `k cos(ka) + b sin(ka) = 0`
/// in `k`, one per bracket `(nπ/a, (n+1)π/a)` for `n = 0..count`, solved by
/// bisection to near machine precision. Returns the eigenvalues `λ = −k²`.
pub fn secular_robin_dirichlet(a: f64, b: f64, count: usize) -> Vec<f64> {
    let g = |k: f64| k * (k * a).cos() + b * (k * a).sin();
    let mut out = Vec::with_capacity(count);
    for n in 0..count {
        let mut lo = n as f64 * std::f64::consts::PI / a + 1e-12;
        let mut hi = (n + 1) as f64 * std::f64::consts::PI / a - 1e-12;
        let mut glo = g(lo);
        assert!(
            glo * g(hi) < 0.0,
            "secular bracket ({lo}, {hi}) must change sign"
        );
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            let gm = g(mid);
            if gm == 0.0 {
                lo = mid;
                hi = mid;
                break;
            }
            if gm.signum() == glo.signum() {
                lo = mid;
                glo = gm;
            } else {
                hi = mid;
            }
            if hi - lo < 1e-15 * hi.max(1.0) {
                break;
            }
        }
        let k = 0.5 * (lo + hi);
        out.push(-k * k);
    }
    out
}

/// Direct re-implementation of the interval Q-matrix series from the level
/// formulas, independent of the library: entries of
/// `Σ_{n≤N} λ/(λ_n(λ_n−λ)) T_n T_n*` for `T_n = √(2/a)(nπ/a)(1,(−1)^{n−1})`.
/// Returns `(diagonal, off-diagonal)`.
pub fn interval_q_series_direct(a: f64, lam: f64, terms: usize) -> (f64, f64) {
    let mut diag = 0.0;
    let mut off = 0.0;
    for n in 1..=terms {
        let kappa = n as f64 * std::f64::consts::PI / a;
        let level = -kappa * kappa;
        let coef = lam / (level * (level - lam));
        let weight = (2.0 / a) * kappa * kappa;
        let parity = if n % 2 == 1 { 1.0 } else { -1.0 };
        diag += coef * weight;
        off += coef * weight * parity;
    }
    (diag, off)
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    h * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Relative L² distance of sampled functions on a uniform grid, allowing an
/// optimal real scaling of `test` onto `reference` when `fit_scale` is set
/// (for eigenvector comparisons, where normalization is arbitrary).
pub fn relative_l2_error(reference: &[f64], test: &[f64], fit_scale: bool) -> f64 {
    assert_eq!(reference.len(), test.len());
    let scale = if fit_scale {
        let num: f64 = reference.iter().zip(test).map(|(r, t)| r * t).sum();
        let den: f64 = test.iter().map(|t| t * t).sum();
        num / den
    } else {
        1.0
    };
    let err: f64 = reference
        .iter()
        .zip(test)
        .map(|(r, t)| (r - scale * t) * (r - scale * t))
        .sum();
    let norm: f64 = reference.iter().map(|r| r * r).sum();
    (err / norm).sqrt()
}

#[cfg(test)]
mod self_checks {
    use super::*;

    #[test]
    fn band_solver_matches_dense_elimination() {
        // A small nonsymmetric banded system with a known solution.
        let n = 6;
        let mut m = BandMatrix::new(n, 2, 1);
        for i in 0..n {
            m.set(i, i, 4.0 + i as f64);
            if i + 1 < n {
                m.set(i, i + 1, -1.5);
            }
            if i >= 1 {
                m.set(i, i - 1, 2.0);
            }
            if i >= 2 {
                m.set(i, i - 2, 0.5);
            }
        }
        let x_true: Vec<f64> = (0..n).map(|i| (i as f64 - 2.5) * 0.7).collect();
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                let a = match (j as isize - i as isize, j as isize - i as isize) {
                    (0, _) => 4.0 + i as f64,
                    (1, _) => -1.5,
                    (-1, _) => 2.0,
                    (-2, _) => 0.5,
                    _ => 0.0,
                };
                rhs[i] += a * x_true[j];
            }
        }
        let x = m.solve(rhs).unwrap();
        for i in 0..n {
            assert!((x[i] - x_true[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn fd_reproduces_sine_eigenfunction() {
        // u'' = z u with u(0)=0, u(π)=0 is singular at z = -1; slightly off
        // the eigenvalue with boundary data (0, 1) gives sin-like growth.
        let (grid, u) = fd_dirichlet_data(std::f64::consts::PI, 4.0, 1.0, 0.0, 2000);
        // Exact: u(x) = sinh(2(π−x))/sinh(2π).
        for (x, v) in grid.iter().zip(u.iter()).step_by(100) {
            let exact = (2.0 * (std::f64::consts::PI - x)).sinh() / (2.0 * std::f64::consts::PI).sinh();
            assert!((v - exact).abs() < 1e-5, "x={x}");
        }
    }

    #[test]
    fn secular_roots_solve_equation() {
        let a = std::f64::consts::PI;
        let roots = secular_robin_dirichlet(a, 1.0, 4);
        for lam in roots {
            let k = (-lam).sqrt();
            let g = k * (k * a).cos() + (k * a).sin();
            assert!(g.abs() < 1e-10);
        }
    }
}
