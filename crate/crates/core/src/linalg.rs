//! Tridiagonal kernels shared by the eigensolver and the time-steppers.

/// Symmetric tridiagonal matrix stored as diagonal plus one off-diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert_eq!(off.len() + 1, diag.len().max(1), "off-diagonal length must be n-1");
        Self { diag, off }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Infinity norm, which bounds every eigenvalue in magnitude.
    pub fn norm_inf(&self) -> f64 {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
                let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
                self.diag[i].abs() + l + r
            })
            .fold(0.0, f64::max)
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.dim();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let l = if i > 0 { self.off[i - 1].abs() } else { 0.0 };
            let r = if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - l - r);
            hi = hi.max(self.diag[i] + l + r);
        }
        (lo, hi)
    }

    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        let n = self.dim();
        for i in 0..n {
            let mut acc = self.diag[i] * x[i];
            if i > 0 {
                acc += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                acc += self.off[i] * x[i + 1];
            }
            out[i] = acc;
        }
    }

    /// One LDLᵀ sweep of `T − shift·I`.
    ///
    /// Returns the number of negative pivots (Sylvester inertia) and, when a
    /// vector `c` is given, the quadratic form `cᵀ (T − shift)⁻¹ c` computed as
    /// `Σ y_i² / d_i` with `L y = c`.
    pub fn ldl_sweep(&self, shift: f64, c: Option<&[f64]>) -> (usize, f64) {
        let n = self.dim();
        let guard = self.pivot_guard();
        let mut neg = 0;
        let mut quad = 0.0;
        let mut d_prev = 1.0;
        let mut y_prev = 0.0;
        for i in 0..n {
            let mut d = self.diag[i] - shift;
            let mut y = c.map_or(0.0, |c| c[i]);
            if i > 0 {
                let l = self.off[i - 1] / d_prev;
                d -= l * self.off[i - 1];
                y -= l * y_prev;
            }
            if d.abs() < guard {
                d = if d < 0.0 { -guard } else { guard };
            }
            if d < 0.0 {
                neg += 1;
            }
            quad += y * y / d;
            d_prev = d;
            y_prev = y;
        }
        (neg, quad)
    }

    fn pivot_guard(&self) -> f64 {
        f64::EPSILON * f64::EPSILON * self.norm_inf().max(1.0)
    }
}

/// LU factorization with partial pivoting of a general tridiagonal matrix
/// (the LAPACK `gttrf` scheme). Used for shifted solves close to
/// eigenvalues, where an unpivoted sweep is unstable.
#[derive(Debug, Clone)]
pub struct TridiagonalLu {
    dl: Vec<f64>,
    d: Vec<f64>,
    du: Vec<f64>,
    du2: Vec<f64>,
    swap: Vec<bool>,
}

impl TridiagonalLu {
    /// Factors `T − shift·I` for symmetric tridiagonal `T`. Exactly zero
    /// pivots are replaced by a tiny multiple of the matrix norm.
    pub fn factor_shifted(t: &SymTridiagonal, shift: f64) -> Self {
        let n = t.dim();
        let mut d: Vec<f64> = t.diag.iter().map(|v| v - shift).collect();
        let mut dl = t.off.clone();
        let mut du = t.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        let tiny = f64::EPSILON * t.norm_inf().max(1.0) * 1e-3;
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                dl[i] = fact;
                d[i + 1] -= fact * du[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] *= -fact;
                }
                swap[i] = true;
            }
        }
        if n > 0 && d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        Self { dl, d, du, du2, swap }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.d.len();
        for i in 0..n.saturating_sub(1) {
            if self.swap[i] {
                b.swap(i, i + 1);
            }
            b[i + 1] -= self.dl[i] * b[i];
        }
        for i in (0..n).rev() {
            let mut acc = b[i];
            if i + 1 < n {
                acc -= self.du[i] * b[i + 1];
            }
            if i + 2 < n {
                acc -= self.du2[i] * b[i + 2];
            }
            b[i] = acc / self.d[i];
        }
    }
}

/// Thomas solver for `(1 + 2r) x_i − r (x_{i−1} + x_{i+1}) = b_i`, the
/// matrix `I − r h² D₂` of an implicit diffusion step. Diagonally dominant,
/// so no pivoting is needed.
#[derive(Debug, Clone)]
pub struct DiffusionSolver {
    r: f64,
    inv_denom: Vec<f64>,
    c_prime: Vec<f64>,
}

impl DiffusionSolver {
    pub fn new(n: usize, r: f64) -> Self {
        let diag = 1.0 + 2.0 * r;
        let off = -r;
        let mut inv_denom = vec![0.0; n];
        let mut c_prime = vec![0.0; n];
        let mut prev_c = 0.0;
        for i in 0..n {
            let denom = diag - off * prev_c;
            inv_denom[i] = 1.0 / denom;
            prev_c = off / denom;
            c_prime[i] = prev_c;
        }
        Self { r, inv_denom, c_prime }
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = b.len();
        let off = -self.r;
        let mut prev = 0.0;
        for i in 0..n {
            let v = (b[i] - off * prev) * self.inv_denom[i];
            b[i] = v;
            prev = v;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            b[i] -= self.c_prime[i] * b[i + 1];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> SymTridiagonal {
        SymTridiagonal::new(vec![2.0, -1.0, 0.5, 3.0, -2.0], vec![1.0, -0.7, 0.2, 1.5])
    }

    fn dense(t: &SymTridiagonal) -> nalgebra::DMatrix<f64> {
        let n = t.dim();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                t.diag[i]
            } else if i + 1 == j {
                t.off[i]
            } else if j + 1 == i {
                t.off[j]
            } else {
                0.0
            }
        })
    }

    #[test]
    fn sturm_count_matches_dense_spectrum() {
        let t = sample();
        let eig = dense(&t).symmetric_eigen().eigenvalues;
        for shift in [-5.0, -1.5, 0.0, 0.7, 2.2, 10.0] {
            let expected = eig.iter().filter(|&&e| e < shift).count();
            assert_eq!(t.ldl_sweep(shift, None).0, expected, "shift {shift}");
        }
    }

    #[test]
    fn quadratic_form_matches_dense_solve() {
        let t = sample();
        let c = [0.3, -1.0, 0.2, 0.9, 0.4];
        let shift = 0.37;
        let m = dense(&t) - nalgebra::DMatrix::identity(5, 5) * shift;
        let cv = nalgebra::DVector::from_row_slice(&c);
        let x = m.lu().solve(&cv).unwrap();
        let expected = cv.dot(&x);
        let (_, quad) = t.ldl_sweep(shift, Some(&c));
        assert!((quad - expected).abs() < 1e-12 * expected.abs().max(1.0));
    }

    #[test]
    fn pivoted_lu_solves_indefinite_system() {
        let t = sample();
        let shift = -0.9;
        let lu = TridiagonalLu::factor_shifted(&t, shift);
        let b = [1.0, 2.0, -3.0, 0.5, 0.25];
        let mut x = b;
        lu.solve_in_place(&mut x);
        let mut tx = [0.0; 5];
        t.apply(&x, &mut tx);
        for i in 0..5 {
            assert!((tx[i] - shift * x[i] - b[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn diffusion_solver_inverts_implicit_step() {
        let n = 9;
        let r = 3.7;
        let solver = DiffusionSolver::new(n, r);
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut x = b.clone();
        solver.solve_in_place(&mut x);
        for i in 0..n {
            let l = if i > 0 { x[i - 1] } else { 0.0 };
            let rr = if i + 1 < n { x[i + 1] } else { 0.0 };
            assert!(((1.0 + 2.0 * r) * x[i] - r * (l + rr) - b[i]).abs() < 1e-12);
        }
    }
}
