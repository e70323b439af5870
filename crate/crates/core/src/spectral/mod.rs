//! The linearized operator `L_ε v = v'' + p v + ε c ∫ c v` and its spectrum.
//!
//! On the grid the operator is a symmetric tridiagonal matrix plus a
//! rank-one term, `A = T + diag(p) + ε h c cᵀ`. The eigensolver never forms
//! the dense matrix: inertia of `A − μ` follows from a bordered LDLᵀ sweep,
//! eigenvalues from bisection on that count, and eigenvectors from inverse
//! iteration with a Sherman–Morrison correction.

mod analysis;
mod solver;

pub use analysis::{
    classify, epsilon_scan, hyperbolicity_certificate, morse_index, orthogonality_check,
    orthogonality_scaled, restricted_linearization, spectral_gap, variational_solution,
    Classification, EpsilonScan, GapRow, HyperbolicityCertificate, SimplicityFlag,
    StabilityReport, VariationalReport,
};
pub use solver::{eigenpairs, eigenvalues, kth_largest, EigenCount, Spectrum};

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::linalg::SymTridiagonal;
use crate::model::ModelConfig;

/// Data `(p, c, ε)` of the operator.
#[derive(Debug, Clone)]
pub struct OperatorSpec {
    pub p: GridFunction,
    pub cvec: GridFunction,
    pub epsilon: f64,
}

impl OperatorSpec {
    pub fn new(p: GridFunction, cvec: GridFunction, epsilon: f64) -> Result<Self> {
        p.check_same_grid(&cvec)?;
        if !epsilon.is_finite() {
            return Err(Error::InvalidArgument(format!("epsilon must be finite, got {epsilon}")));
        }
        Ok(Self { p, cvec, epsilon })
    }

    pub fn grid(&self) -> Grid {
        *self.p.grid()
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Self {
        Self { epsilon, ..self.clone() }
    }
}

/// Linearization at an equilibrium: `p = λ f'(φ)/a(c)`, `c = f(φ)`,
/// `ε = −2 λ² a'(c) / a(c)³`.
pub fn linearization(eq: &Equilibrium, cfg: &ModelConfig) -> OperatorSpec {
    let lambda = cfg.lambda();
    let a = cfg.diffusion.value(eq.c);
    let a_prime = cfg.diffusion.derivative(eq.c);
    let f = &cfg.nonlinearity;
    OperatorSpec {
        p: eq.phi.map(|u| lambda * f.derivative(u) / a),
        cvec: eq.phi.map(|u| f.value(u)),
        epsilon: -2.0 * lambda * lambda * a_prime / (a * a * a),
    }
}

/// Assembled operator: symmetric tridiagonal part plus `weight · c cᵀ`.
#[derive(Debug, Clone)]
pub struct NonlocalOperator {
    grid: Grid,
    tri: SymTridiagonal,
    c: Vec<f64>,
    weight: f64,
}

/// Assembles `A = T + diag(p) + ε h c cᵀ`.
pub fn assemble(spec: &OperatorSpec) -> NonlocalOperator {
    let grid = spec.grid();
    let n = grid.n();
    let inv_h2 = 1.0 / (grid.h() * grid.h());
    let diag = spec.p.values().iter().map(|p| p - 2.0 * inv_h2).collect();
    let tri = SymTridiagonal::new(diag, vec![inv_h2; n - 1]);
    let c = spec.cvec.values().to_vec();
    let has_rank_one = spec.epsilon != 0.0 && c.iter().any(|&v| v != 0.0);
    let weight = if has_rank_one { spec.epsilon * grid.h() } else { 0.0 };
    NonlocalOperator { grid, tri, c, weight }
}

impl NonlocalOperator {
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn dim(&self) -> usize {
        self.tri.dim()
    }

    pub fn tridiagonal(&self) -> &SymTridiagonal {
        &self.tri
    }

    pub fn rank_one_vector(&self) -> &[f64] {
        &self.c
    }

    /// Coefficient of `c cᵀ`, i.e. `ε h` (zero when the term vanishes).
    pub fn rank_one_weight(&self) -> f64 {
        self.weight
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let t = if i == j {
            self.tri.diag[i]
        } else if i + 1 == j {
            self.tri.off[i]
        } else if j + 1 == i {
            self.tri.off[j]
        } else {
            0.0
        };
        t + self.weight * (self.c[i] * self.c[j])
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.entry(i, j);
            }
        }
        out
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.tri.apply(x, &mut out);
        if self.weight != 0.0 {
            let s = self.weight * crate::grid::dot(&self.c, x);
            for (o, c) in out.iter_mut().zip(&self.c) {
                *o += s * c;
            }
        }
        out
    }

    /// Infinity-norm bound on `‖A‖`.
    pub fn norm_bound(&self) -> f64 {
        let c1: f64 = self.c.iter().map(|v| v.abs()).sum();
        let cmax = self.c.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.tri.norm_inf() + self.weight.abs() * c1 * cmax
    }

    /// Interval guaranteed to contain the spectrum.
    pub fn spectrum_bounds(&self) -> (f64, f64) {
        let (lo, hi) = self.tri.gershgorin();
        let c2: f64 = self.c.iter().map(|v| v * v).sum();
        let shift = self.weight * c2;
        (lo + shift.min(0.0) - 1.0, hi + shift.max(0.0) + 1.0)
    }

    /// Number of eigenvalues strictly below `mu`.
    ///
    /// With `K = [[J − μ, c], [cᵀ, −1/w]]`, both Schur complements give the
    /// inertia of `K`, so `neg(A − μ) = neg(J − μ) + [s < 0] − [w > 0]` with
    /// `s = −1/w − cᵀ (J − μ)⁻¹ c`.
    pub fn count_below(&self, mu: f64) -> usize {
        if self.weight == 0.0 {
            return self.tri.ldl_sweep(mu, None).0;
        }
        let (neg, quad) = self.tri.ldl_sweep(mu, Some(&self.c));
        let s = -1.0 / self.weight - quad;
        let total = neg + usize::from(s < 0.0);
        total.saturating_sub(usize::from(self.weight > 0.0))
    }
}

/// Checks a row-major matrix for exact symmetry.
pub fn check_symmetric(dense: &[f64], n: usize, tol: f64) -> Result<()> {
    for i in 0..n {
        for j in (i + 1)..n {
            let diff = (dense[i * n + j] - dense[j * n + i]).abs();
            if diff > tol {
                return Err(Error::NotSymmetric { row: i, col: j, diff });
            }
        }
    }
    Ok(())
}
