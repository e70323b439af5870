use serde::Serialize;

use super::NonlocalOperator;
use crate::error::{Error, Result};
use crate::grid::{dot, GridFunction};
use crate::linalg::TridiagonalLu;

const MAX_BISECTIONS: usize = 200;
const INVERSE_ITERATIONS: usize = 4;

/// How many eigenvalues to compute, counted from the top of the spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EigenCount {
    Top(usize),
    All,
}

impl EigenCount {
    fn resolve(self, n: usize) -> usize {
        match self {
            EigenCount::Top(k) => k.min(n),
            EigenCount::All => n,
        }
    }
}

/// Eigenpairs in decreasing order of eigenvalue.
#[derive(Debug, Clone, Serialize)]
pub struct Spectrum {
    pub eigenvalues: Vec<f64>,
    #[serde(skip)]
    pub eigenvectors: Vec<GridFunction>,
    /// `‖A v − μ v‖` in the discrete L² norm.
    pub residuals: Vec<f64>,
    /// Gap-based simplicity indicator.
    pub simple: Vec<bool>,
    /// Bound on `‖A‖` used for the relative thresholds.
    pub norm: f64,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn leading(&self) -> Option<f64> {
        self.eigenvalues.first().copied()
    }
}

/// The `k`-th largest eigenvalue (1-based), by bisection on the inertia count.
pub fn kth_largest(op: &NonlocalOperator, k: usize) -> Result<f64> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!("eigenvalue index {k} outside 1..={n}")));
    }
    let (lo, hi) = op.spectrum_bounds();
    bisect_kth(op, k, lo, hi)
}

fn bisect_kth(op: &NonlocalOperator, k: usize, mut lo: f64, mut hi: f64) -> Result<f64> {
    let n = op.dim();
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 2.0 * f64::EPSILON * lo.abs().max(hi.abs()) {
            return Ok(mid);
        }
        // Eigenvalues at or above `mid`.
        if n - op.count_below(mid) >= k {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Err(Error::NonConvergence { what: "eigenvalue bisection", iterations: MAX_BISECTIONS })
}

/// Eigenvalues only, decreasing.
pub fn eigenvalues(op: &NonlocalOperator, count: EigenCount) -> Result<Vec<f64>> {
    let k_max = count.resolve(op.dim());
    let (lo, mut hi) = op.spectrum_bounds();
    let mut out = Vec::with_capacity(k_max);
    for k in 1..=k_max {
        let mu = bisect_kth(op, k, lo, hi)?;
        out.push(mu);
        hi = mu + 4.0 * f64::EPSILON * mu.abs().max(1.0);
    }
    Ok(out)
}

/// Eigenvalues with L²-normalized, sign-fixed eigenvectors.
pub fn eigenpairs(op: &NonlocalOperator, count: EigenCount) -> Result<Spectrum> {
    let values = eigenvalues(op, count)?;
    let grid = op.grid();
    let h = grid.h();
    let norm = op.norm_bound();
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut residuals = Vec::with_capacity(values.len());

    for (k, &mu) in values.iter().enumerate() {
        let cluster_tol = 1e-7 * mu.abs().max(1.0);
        let cluster: Vec<usize> =
            (0..k).filter(|&i| (values[i] - mu).abs() <= cluster_tol).collect();
        let v = inverse_iteration(op, mu, k, &cluster, &vectors, h);
        let av = op.apply(&v);
        let r2: f64 = av.iter().zip(&v).map(|(a, x)| (a - mu * x).powi(2)).sum();
        residuals.push((h * r2).sqrt());
        vectors.push(v);
    }

    let simple = simplicity_flags(&values, 1e-9 * norm);
    Ok(Spectrum {
        eigenvectors: vectors.into_iter().map(|v| GridFunction::from_raw(grid, v)).collect(),
        eigenvalues: values,
        residuals,
        simple,
        norm,
    })
}

/// `true` where the eigenvalue is separated from both neighbours by more
/// than `threshold`.
pub(crate) fn simplicity_flags(values: &[f64], threshold: f64) -> Vec<bool> {
    (0..values.len())
        .map(|i| {
            let left = i.checked_sub(1).map_or(f64::INFINITY, |l| (values[l] - values[i]).abs());
            let right = values.get(i + 1).map_or(f64::INFINITY, |r| (values[i] - r).abs());
            left.min(right) > threshold
        })
        .collect()
}

fn inverse_iteration(
    op: &NonlocalOperator,
    mu: f64,
    index: usize,
    cluster: &[usize],
    previous: &[Vec<f64>],
    h: f64,
) -> Vec<f64> {
    let n = op.dim();
    let sigma = mu + 1e-10 * mu.abs().max(1.0);
    let lu = TridiagonalLu::factor_shifted(op.tridiagonal(), sigma);
    let w = op.rank_one_weight();
    let c = op.rank_one_vector();
    let (z, denom) = if w != 0.0 {
        let mut z = c.to_vec();
        lu.solve_in_place(&mut z);
        let denom = 1.0 + w * dot(c, &z);
        (z, denom)
    } else {
        (Vec::new(), 1.0)
    };

    let seed = index as f64;
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * (1.7 * i as f64 + seed).sin()).collect();
    for _ in 0..INVERSE_ITERATIONS {
        lu.solve_in_place(&mut x);
        if w != 0.0 {
            let t = w * dot(c, &x) / denom;
            for (xi, zi) in x.iter_mut().zip(&z) {
                *xi -= t * zi;
            }
        }
        for &j in cluster {
            let q = &previous[j];
            let proj = dot(q, &x) * h;
            for (xi, qi) in x.iter_mut().zip(q) {
                *xi -= proj * qi;
            }
        }
        let scale = 1.0 / (h * dot(&x, &x)).sqrt();
        if !scale.is_finite() {
            break;
        }
        x.iter_mut().for_each(|v| *v *= scale);
    }
    fix_sign(&mut x);
    x
}

/// Makes the first significant component positive, which for a grid
/// function vanishing at 0 means a positive slope there.
fn fix_sign(v: &mut [f64]) {
    let max = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if let Some(&first) = v.iter().find(|x| x.abs() > 1e-6 * max) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_grid;
    use crate::spectral::{assemble, OperatorSpec};

    #[test]
    fn laplacian_eigenvalues_match_closed_form() {
        let g = build_grid(63).unwrap();
        let spec =
            OperatorSpec::new(GridFunction::zeros(g), GridFunction::zeros(g), 0.0).unwrap();
        let op = assemble(&spec);
        let vals = eigenvalues(&op, EigenCount::All).unwrap();
        let h = g.h();
        for (k, mu) in vals.iter().enumerate() {
            let kk = (k + 1) as f64;
            let exact = -(2.0 / (h * h)) * (1.0 - (kk * h).cos());
            assert!((mu - exact).abs() <= 1e-10 * exact.abs(), "k={kk}: {mu} vs {exact}");
        }
    }

    #[test]
    fn simplicity_flags_detect_close_pairs() {
        let flags = simplicity_flags(&[3.0, 1.0, 1.0 + 1e-12, -2.0], 1e-9);
        assert_eq!(flags, vec![true, false, false, true]);
    }

    #[test]
    fn eigenvectors_have_small_residuals() {
        let g = build_grid(127).unwrap();
        let spec = OperatorSpec::new(
            GridFunction::from_fn(g, |x| 5.0 * (1.0 - x.sin())),
            GridFunction::from_fn(g, |x| (3.0 * x).sin() * x),
            -4.0,
        )
        .unwrap();
        let spectrum = eigenpairs(&assemble(&spec), EigenCount::Top(8)).unwrap();
        for (mu, r) in spectrum.eigenvalues.iter().zip(&spectrum.residuals) {
            assert!(*r <= 1e-8 * (1.0 + mu.abs()), "residual {r} for {mu}");
        }
    }
}
