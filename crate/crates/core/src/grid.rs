//! Uniform grid on `[0, L]` with the Dirichlet boundary eliminated.
//!
//! Only interior nodes carry unknowns; the boundary values are implicitly
//! zero. Every interior node then gets the same trapezoid weight `h`, which
//! keeps the discrete rank-one term of the linearized operator symmetric.

use std::f64::consts::PI;

use serde::Serialize;

use crate::{Error, Result};

/// Uniform mesh on `[0, length]` with `n` interior nodes `x_i = i·h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    n: usize,
    length: f64,
    h: f64,
}

/// Grid on `[0, π]` with `n` interior nodes and `h = π/(n+1)`.
pub fn build_grid(n: usize) -> Result<Grid> {
    Grid::on_interval(n, PI)
}

impl Grid {
    pub fn on_interval(n: usize, length: f64) -> Result<Self> {
        if n < 3 {
            return Err(Error::GridTooSmall(n));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(Error::InvalidArgument(format!("interval length {length}")));
        }
        Ok(Self { n, length, h: length / (n + 1) as f64 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Position of interior node `i` (0-based, so `x = (i+1)·h`).
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    /// Grid on `[0, length/q]` sharing this mesh width. Requires `q | n+1`.
    pub fn subgrid(&self, q: usize) -> Result<Grid> {
        if q == 0 || (self.n + 1) % q != 0 {
            return Err(Error::InvalidArgument(format!(
                "{} cells cannot be split into {q} equal parts",
                self.n + 1
            )));
        }
        let sub = Grid::on_interval((self.n + 1) / q - 1, self.length / q as f64)?;
        Ok(Grid { h: self.h, ..sub })
    }

    /// Grid with twice as many cells on the same interval.
    pub fn refined(&self) -> Grid {
        let n = 2 * self.n + 1;
        Grid { n, length: self.length, h: self.length / (n + 1) as f64 }
    }
}

/// Nodal values on the interior nodes of a [`Grid`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidArgument(format!(
                "{} values for a grid with {} nodes",
                values.len(),
                grid.n
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite value at node {i}")));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![0.0; grid.n] }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self { grid, values: grid.nodes().map(f).collect() }
    }

    /// Wraps values already known to be finite and of the right length.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.check_same_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn scale(&self, alpha: f64) -> Self {
        self.map(|v| alpha * v)
    }

    pub fn neg(&self) -> Self {
        self.map(|v| -v)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + alpha·other`.
    pub fn axpy(&self, alpha: f64, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + alpha * b)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Continuous L² norm, `sqrt(h Σ v²)`.
    pub fn l2_norm(&self) -> f64 {
        (self.grid.h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt()
    }

    pub fn h1_seminorm(&self) -> f64 {
        h1_seminorm_sq(self).sqrt()
    }

    /// Value with the boundary zeros included: index 0 and `n+1` are 0.
    pub fn padded(&self, k: usize) -> f64 {
        if k == 0 || k > self.grid.n {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// Four-point Lagrange interpolation at `x ∈ [0, L]`, using the boundary
    /// zeros as nodes. Fourth order for smooth data.
    pub fn interpolate(&self, x: f64) -> f64 {
        let h = self.grid.h;
        let last = self.grid.n + 1;
        let x = x.clamp(0.0, self.grid.length);
        let cell = ((x / h).floor() as usize).min(last - 1);
        let start = cell.saturating_sub(1).min(last.saturating_sub(3));
        let idx = [start, start + 1, start + 2, start + 3];
        let mut acc = 0.0;
        for (a, &ka) in idx.iter().enumerate() {
            let mut w = 1.0;
            for (b, &kb) in idx.iter().enumerate() {
                if a != b {
                    w *= (x - kb as f64 * h) / ((ka as f64 - kb as f64) * h);
                }
            }
            acc += w * self.padded(ka);
        }
        acc
    }

    /// Restriction to the first `sub.n()` nodes (the subgrid shares `h`).
    pub fn restrict(&self, sub: Grid) -> Result<Self> {
        if sub.n > self.grid.n || (sub.h - self.grid.h).abs() > 1e-15 * self.grid.h {
            return Err(Error::GridMismatch);
        }
        Ok(Self { grid: sub, values: self.values[..sub.n].to_vec() })
    }

    pub(crate) fn check_same_grid(&self, other: &Self) -> Result<()> {
        if self.grid == other.grid {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }
}

/// Trapezoid rule with zero boundary values: `h Σ g_i`.
pub fn integral(g: &GridFunction) -> f64 {
    g.grid.h * g.values.iter().sum::<f64>()
}

/// `∫ u v` by the same trapezoid weights.
pub fn inner(u: &GridFunction, v: &GridFunction) -> Result<f64> {
    u.check_same_grid(v)?;
    Ok(u.grid.h * dot(&u.values, &v.values))
}

/// Forward-difference energy `Σ_{i=0..n} (u_{i+1} − u_i)² / h`, i.e. `‖u'‖²`.
pub fn h1_seminorm_sq(u: &GridFunction) -> f64 {
    seminorm_sq_raw(&u.values, u.grid.h)
}

pub(crate) fn seminorm_sq_raw(values: &[f64], h: f64) -> f64 {
    let mut prev = 0.0;
    let mut acc = 0.0;
    for &v in values {
        let d = v - prev;
        acc += d * d;
        prev = v;
    }
    acc += prev * prev;
    acc / h
}

/// `(u_{i−1} − 2u_i + u_{i+1}) / h²` with zero boundary values.
pub fn second_difference(u: &GridFunction) -> GridFunction {
    let mut out = vec![0.0; u.values.len()];
    second_difference_raw(&u.values, u.grid.h, &mut out);
    GridFunction { grid: u.grid, values: out }
}

pub(crate) fn second_difference_raw(u: &[f64], h: f64, out: &mut [f64]) {
    let n = u.len();
    let inv_h2 = 1.0 / (h * h);
    for i in 0..n {
        let left = if i > 0 { u[i - 1] } else { 0.0 };
        let right = if i + 1 < n { u[i + 1] } else { 0.0 };
        out[i] = (left - 2.0 * u[i] + right) * inv_h2;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn grid_construction() {
        let g = build_grid(3).unwrap();
        assert!((g.h() - PI / 4.0).abs() < 1e-15);
        let nodes: Vec<f64> = g.nodes().collect();
        assert!((nodes[0] - PI / 4.0).abs() < 1e-15);
        assert!((nodes[1] - PI / 2.0).abs() < 1e-15);
        assert!((nodes[2] - 3.0 * PI / 4.0).abs() < 1e-15);

        let g = build_grid(1023).unwrap();
        assert!((g.h() - PI / 1024.0).abs() < 1e-18);
        assert!((g.h() * 1024.0 - PI).abs() < 4.0 * f64::EPSILON);
        assert!(g.nodes().zip(g.nodes().skip(1)).all(|(a, b)| a < b));
        assert!(g.nodes().all(|x| x > 0.0 && x < PI));

        assert!(matches!(build_grid(2), Err(Error::GridTooSmall(2))));
    }

    #[test]
    fn integral_examples() {
        let g = build_grid(1023).unwrap();
        assert_eq!(integral(&GridFunction::zeros(g)), 0.0);
        let s = GridFunction::from_fn(g, f64::sin);
        assert!(rel(integral(&s), 2.0) < 1e-5);
        let s2 = GridFunction::from_fn(g, |x| x.sin().powi(2));
        assert!(rel(integral(&s2), PI / 2.0) < 1e-5);
    }

    #[test]
    fn seminorm_examples() {
        let g = build_grid(1023).unwrap();
        assert_eq!(h1_seminorm_sq(&GridFunction::zeros(g)), 0.0);
        let s1 = GridFunction::from_fn(g, f64::sin);
        assert!(rel(h1_seminorm_sq(&s1), PI / 2.0) < 1e-4);
        let s2 = GridFunction::from_fn(g, |x| (2.0 * x).sin());
        assert!(rel(h1_seminorm_sq(&s2), 2.0 * PI) < 1e-4);
    }

    #[test]
    fn seminorm_converges_second_order() {
        let err = |n: usize| {
            let g = build_grid(n).unwrap();
            let u = GridFunction::from_fn(g, |x| (3.0 * x).sin());
            (h1_seminorm_sq(&u) - 9.0 * PI / 2.0).abs()
        };
        let ratio = err(511) / err(1023);
        assert!((ratio - 4.0).abs() < 0.8, "ratio {ratio}");
    }

    #[test]
    fn second_difference_of_sines() {
        let g = build_grid(1023).unwrap();
        assert_eq!(second_difference(&GridFunction::zeros(g)).sup_norm(), 0.0);
        let h = g.h();
        for k in [1.0, 2.0, 5.0] {
            let u = GridFunction::from_fn(g, |x| (k * x).sin());
            let d2 = second_difference(&u);
            let expected = u.scale(-k * k);
            let err = d2.sub(&expected).unwrap().sup_norm();
            // Truncation error k⁴h²/12 relative to amplitude.
            assert!(err <= k.powi(4) * h * h / 12.0 * 1.01, "k={k} err={err}");
        }
    }

    #[test]
    fn interpolation_is_fourth_order_accurate() {
        let g = build_grid(255).unwrap();
        let u = GridFunction::from_fn(g, |x| (3.0 * x).sin());
        for &x in &[0.0, 0.001, 0.3, 1.0, PI / 3.0, 2.5, PI - 1e-4, PI] {
            assert!((u.interpolate(x) - (3.0 * x).sin()).abs() < 1e-7, "x={x}");
        }
    }

    #[test]
    fn subgrid_shares_mesh_width() {
        let g = build_grid(1023).unwrap();
        let s = g.subgrid(2).unwrap();
        assert_eq!(s.n(), 511);
        assert_eq!(s.h(), g.h());
        assert!((s.length() - PI / 2.0).abs() < 1e-15);
        assert!(g.subgrid(3).is_err());
        let u = GridFunction::from_fn(g, f64::sin);
        let r = u.restrict(s).unwrap();
        assert_eq!(r.values(), &u.values()[..511]);
    }

    #[test]
    fn mismatched_grids_rejected() {
        let a = GridFunction::zeros(build_grid(7).unwrap());
        let b = GridFunction::zeros(build_grid(15).unwrap());
        assert!(matches!(a.add(&b), Err(Error::GridMismatch)));
        assert!(GridFunction::new(build_grid(7).unwrap(), vec![0.0; 6]).is_err());
        assert!(GridFunction::new(build_grid(3).unwrap(), vec![0.0, f64::NAN, 0.0]).is_err());
    }
}
