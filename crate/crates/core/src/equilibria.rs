//! Stationary solutions of `a(‖φ'‖²) φ'' + λ f(φ) = 0` with Dirichlet data.
//!
//! For a fixed value `c` of the seminorm the problem is the semilinear
//! equation `φ'' + μ f(φ) = 0` with `μ = λ / a(c)`, solved by shooting on
//! the initial slope. An outer bisection then enforces `‖φ'‖² = c`.
//!
//! The shooting integrator is the Störmer recurrence
//! `φ_{i+1} = 2φ_i − φ_{i−1} − h² μ f(φ_i)`, which is the discrete equation
//! itself read as an initial value problem. A profile with `φ_{n+1} = 0` is
//! therefore an exact zero of the discrete residual, and a grid function
//! started there stays put under the time-steppers of [`crate::dynamics`].
//!
//! For large `μ/j²` the end value grows exponentially with the slope, so even
//! adjacent floating-point slopes leave a visible end value. The best shot is
//! then polished by a few Newton steps on the discrete boundary value problem.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::linalg::{SymTridiagonal, TridiagonalLu};
use crate::model::{ModelConfig, NonlinearitySpec};

const MAX_BISECTIONS: usize = 200;
const POLISH_STEPS: usize = 6;
const MAX_DOUBLINGS: usize = 20;
const DIVERGENCE_FACTOR: f64 = 10.0;

/// Result of one shot: the initial value problem sampled on the grid.
#[derive(Debug, Clone)]
pub struct ShotResult {
    pub profile: GridFunction,
    /// Value at `x = π`, i.e. at node `n + 1`.
    pub end_value: f64,
    /// Zeros in `[0, π]`, both endpoints included when `end_value ≈ 0`.
    pub zero_count: usize,
    pub slope: f64,
}

/// Integrates `φ'' = −μ f(φ)`, `φ(0) = 0`, `φ'(0) = s` across the grid.
///
/// Fails with [`Error::Divergence`] when `|φ|` exceeds `10 u*`.
pub fn shoot(f: &NonlinearitySpec, mu: f64, s: f64, grid: Grid) -> Result<ShotResult> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let (values, end_value) = match integrate(f, mu, s, grid) {
        Shot::Finished { values, end } => (values, end),
        Shot::Diverged { value, at } => {
            return Err(Error::Divergence { value, bound: DIVERGENCE_FACTOR * f.witness(), at })
        }
    };
    let interior = count_sign_changes(&values);
    let last = values.last().copied().unwrap_or(0.0);
    let end_zero = end_value.abs() <= 1e-9 * s.abs();
    let tail = if end_zero || (last != 0.0 && last.signum() != end_value.signum()) { 1 } else { 0 };
    Ok(ShotResult {
        profile: GridFunction::from_raw(grid, values),
        end_value,
        zero_count: 1 + interior + tail,
        slope: s,
    })
}

enum Shot {
    Finished { values: Vec<f64>, end: f64 },
    Diverged { value: f64, at: f64 },
}

fn integrate(f: &NonlinearitySpec, mu: f64, s: f64, grid: Grid) -> Shot {
    let n = grid.n();
    let h = grid.h();
    let k = h * h * mu;
    let bound = DIVERGENCE_FACTOR * f.witness();
    let mut values = Vec::with_capacity(n);
    let mut prev = 0.0;
    let mut cur = s * h;
    for i in 1..=n {
        if cur.abs() > bound || !cur.is_finite() {
            return Shot::Diverged { value: cur.abs(), at: grid.node(i - 1) };
        }
        values.push(cur);
        let next = 2.0 * cur - prev - k * f.value(cur);
        prev = cur;
        cur = next;
    }
    if cur.abs() > bound || !cur.is_finite() {
        return Shot::Diverged { value: cur.abs(), at: grid.length() };
    }
    Shot::Finished { values, end: cur }
}

/// Strict sign changes of a sequence; an exact zero counts once.
pub fn count_sign_changes(values: &[f64]) -> usize {
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for &v in values {
        if v == 0.0 {
            count += 1;
            prev = None;
            continue;
        }
        let positive = v > 0.0;
        if prev.is_some_and(|p| p != positive) {
            count += 1;
        }
        prev = Some(positive);
    }
    count
}

/// Zeros of a grid function on `[0, π]`, both endpoints included.
pub fn zero_count(phi: &GridFunction) -> usize {
    2 + count_sign_changes(phi.values())
}

/// Sign changes of `φ_1, …, φ_{n+1}` (divergence reads as "too few").
fn crossings(f: &NonlinearitySpec, mu: f64, s: f64, grid: Grid) -> (usize, Option<Vec<f64>>, f64) {
    match integrate(f, mu, s, grid) {
        Shot::Finished { mut values, end } => {
            values.push(end);
            let z = count_sign_changes(&values);
            values.pop();
            (z, Some(values), end)
        }
        Shot::Diverged { .. } => (0, None, f64::NAN),
    }
}

/// Newton steps on the discrete boundary value problem, started from a
/// shot whose end value is limited by the conditioning of shooting. Returns
/// the profile and its largest scaled residual, which plays the role of the
/// end value.
fn polish(f: &NonlinearitySpec, mu: f64, mut values: Vec<f64>, end: f64) -> (Vec<f64>, f64) {
    let n = values.len();
    let k = mu * (std::f64::consts::PI / (n + 1) as f64).powi(2);
    let residual = |v: &[f64], out: &mut [f64]| {
        for i in 0..n {
            let left = if i > 0 { v[i - 1] } else { 0.0 };
            let right = if i + 1 < n { v[i + 1] } else { 0.0 };
            out[i] = left - 2.0 * v[i] + right + k * f.value(v[i]);
        }
        out.iter().fold(0.0f64, |m, r| m.max(r.abs()))
    };
    let mut r = vec![0.0; n];
    let mut best = end.abs();
    let start = values.clone();
    for _ in 0..POLISH_STEPS {
        let size = residual(&values, &mut r);
        if size == 0.0 {
            return (values, 0.0);
        }
        let diag: Vec<f64> = values.iter().map(|&v| -2.0 + k * f.derivative(v)).collect();
        let lu = TridiagonalLu::factor_shifted(&SymTridiagonal::new(diag, vec![1.0; n - 1]), 0.0);
        lu.solve_in_place(&mut r);
        let next: Vec<f64> = values.iter().zip(&r).map(|(v, d)| v - d).collect();
        let mut scratch = vec![0.0; n];
        let next_size = residual(&next, &mut scratch);
        if !(next_size < size) {
            break;
        }
        values = next;
        best = next_size;
    }
    if best < end.abs() {
        (values, best)
    } else {
        (start, end)
    }
}

/// Positive profile of the `j`-th mode of `φ'' + μ f(φ) = 0` on the grid.
pub fn solve_mode(f: &NonlinearitySpec, mu: f64, j: usize, grid: Grid) -> Result<GridFunction> {
    solve_mode_with_slope(f, mu, j, grid).map(|(phi, _)| phi)
}

fn solve_mode_with_slope(
    f: &NonlinearitySpec,
    mu: f64,
    j: usize,
    grid: Grid,
) -> Result<(GridFunction, f64)> {
    if j == 0 {
        return Err(Error::InvalidArgument("mode index must be at least 1".into()));
    }
    let jf = j as f64;
    if !(mu > jf * jf) {
        return Err(Error::NoSuchMode {
            mode: j,
            reason: format!("mu = {mu} does not exceed {}", jf * jf),
        });
    }
    // Bracket: tiny slopes behave linearly and oscillate at least j times,
    // large slopes overshoot u* and have fewer crossings or diverge.
    let mut lo = 1e-8 * f.witness();
    if crossings(f, mu, lo, grid).0 < j {
        return Err(Error::NoSuchMode {
            mode: j,
            reason: format!("mu = {mu} is below the discrete threshold on this grid"),
        });
    }
    let mut hi = 0.01 * f.witness();
    let mut doublings = 0;
    while crossings(f, mu, hi, grid).0 >= j {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > 64 {
            return Err(Error::NonConvergence { what: "slope bracket", iterations: doublings });
        }
    }
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
        if crossings(f, mu, mid, grid).0 >= j {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (_, lo_vals, lo_end) = crossings(f, mu, lo, grid);
    let (_, hi_vals, hi_end) = crossings(f, mu, hi, grid);
    let (values, end) = match (lo_vals, hi_vals) {
        (Some(a), Some(b)) => {
            if lo_end.abs() <= hi_end.abs() {
                (a, lo_end)
            } else {
                (b, hi_end)
            }
        }
        (Some(a), None) => (a, lo_end),
        _ => return Err(Error::NonConvergence { what: "slope bisection", iterations: MAX_BISECTIONS }),
    };
    let (values, end) = polish(f, mu, values, end);
    let s = values[0] / grid.h();
    if end.abs() > 1e-10 * s {
        return Err(Error::NonConvergence { what: "mode polishing", iterations: POLISH_STEPS });
    }
    Ok((GridFunction::from_raw(grid, values), s))
}

/// A stationary solution `φ_j^±`.
#[derive(Debug, Clone, Serialize)]
pub struct Equilibrium {
    pub mode: usize,
    /// Sign of `φ'(0)`; `+1` for the zero solution.
    pub sign: i8,
    #[serde(skip)]
    pub phi: GridFunction,
    /// `‖φ'‖²` at the fixed point.
    pub c: f64,
    /// `λ / a(c)`.
    pub mu: f64,
    /// Sup norm of `a(c) D₂φ + λ f(φ)`.
    pub residual: f64,
    /// Discrete initial slope of the profile.
    pub slope: f64,
}

impl Equilibrium {
    pub fn zero(cfg: &ModelConfig, grid: Grid) -> Self {
        Self {
            mode: 0,
            sign: 1,
            phi: GridFunction::zeros(grid),
            c: 0.0,
            mu: cfg.lambda() / cfg.a0(),
            residual: 0.0,
            slope: 0.0,
        }
    }

    /// Short identifier: `0`, `phi1+`, `phi2-`, ...
    pub fn label(&self) -> String {
        if self.mode == 0 {
            "0".to_string()
        } else {
            format!("phi{}{}", self.mode, if self.sign > 0 { '+' } else { '-' })
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.phi.sup_norm()
    }

    pub fn grid(&self) -> Grid {
        *self.phi.grid()
    }

    /// Same mode with the opposite sign. Exact negation, no recomputation.
    pub fn negated(&self) -> Self {
        if self.mode == 0 {
            return self.clone();
        }
        Self { sign: -self.sign, phi: self.phi.neg(), slope: -self.slope, ..self.clone() }
    }

    /// Evaluates the structural properties every equilibrium must have.
    pub fn check(&self, cfg: &ModelConfig) -> InvariantReport {
        let grid = self.grid();
        let n = grid.n();
        let v = self.phi.values();
        let residual = equilibrium_residual(&self.phi, self.c, cfg);
        let f_max = v.iter().map(|&x| cfg.nonlinearity.value(x).abs()).fold(0.0, f64::max);
        let residual_bound = 1e-6 * cfg.lambda() * f_max;
        let seminorm = grid::h1_seminorm_sq(&self.phi);
        let fixed_point_error = (seminorm - self.c).abs();
        let zeros = zero_count(&self.phi);

        let (first_arch_positive, symmetry_error) = if self.mode == 0 {
            (true, v.iter().map(|x| x.abs()).fold(0.0, f64::max))
        } else {
            let limit = grid.length() / self.mode as f64 - 0.5 * grid.h();
            let sign = f64::from(self.sign);
            let arch = (0..n).filter(|&i| grid.node(i) < limit).all(|i| sign * v[i] > 0.0);
            let parity = if self.mode % 2 == 1 { 1.0 } else { -1.0 };
            let sym = (0..n).map(|i| (v[n - 1 - i] - parity * v[i]).abs()).fold(0.0, f64::max);
            (arch, sym)
        };

        InvariantReport {
            residual,
            residual_ok: residual <= residual_bound.max(f64::MIN_POSITIVE),
            fixed_point_error,
            fixed_point_ok: fixed_point_error <= 1e-8 * (1.0 + self.c),
            zero_count: zeros,
            // The zero solution has no isolated zeros to count.
            zero_count_ok: self.mode == 0 || zeros == self.mode + 1,
            first_arch_positive,
            symmetry_error,
            symmetry_ok: symmetry_error <= 1e-8,
        }
    }
}

/// Outcome of [`Equilibrium::check`].
#[derive(Debug, Clone, Serialize)]
pub struct InvariantReport {
    pub residual: f64,
    pub residual_ok: bool,
    pub fixed_point_error: f64,
    pub fixed_point_ok: bool,
    pub zero_count: usize,
    pub zero_count_ok: bool,
    pub first_arch_positive: bool,
    pub symmetry_error: f64,
    pub symmetry_ok: bool,
}

impl InvariantReport {
    pub fn all_ok(&self) -> bool {
        self.residual_ok
            && self.fixed_point_ok
            && self.zero_count_ok
            && self.first_arch_positive
            && self.symmetry_ok
    }
}

/// Sup norm of `a(c) D₂φ + λ f(φ)`.
pub fn equilibrium_residual(phi: &GridFunction, c: f64, cfg: &ModelConfig) -> f64 {
    let a = cfg.diffusion.value(c);
    let lambda = cfg.lambda();
    grid::second_difference(phi)
        .values()
        .iter()
        .zip(phi.values())
        .map(|(d2, &p)| (a * d2 + lambda * cfg.nonlinearity.value(p)).abs())
        .fold(0.0, f64::max)
}

/// The outer map `G(c) = ‖φ'‖² − c`, where `φ` is the `j`-mode at
/// `μ = λ/a(c)`; the seminorm is taken as 0 when that mode does not exist.
pub fn outer_map(cfg: &ModelConfig, j: usize, c: f64, grid: Grid) -> Result<f64> {
    let mu = cfg.lambda() / cfg.diffusion.value(c);
    match solve_mode(&cfg.nonlinearity, mu, j, grid) {
        Ok(phi) => Ok(grid::h1_seminorm_sq(&phi) - c),
        Err(Error::NoSuchMode { .. }) => Ok(-c),
        Err(e) => Err(e),
    }
}

/// Solves for `φ_j^±` by bisection on `c`.
pub fn solve_equilibrium(cfg: &ModelConfig, j: usize, sign: i8, grid: Grid) -> Result<Equilibrium> {
    if j == 0 {
        return Ok(Equilibrium::zero(cfg, grid));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let lambda = cfg.lambda();
    let jf = j as f64;
    if !(lambda > cfg.a0() * jf * jf) {
        return Err(Error::NoSuchMode {
            mode: j,
            reason: format!("lambda = {lambda} does not exceed a(0) j^2 = {}", cfg.a0() * jf * jf),
        });
    }

    let u_star = cfg.nonlinearity.witness();
    let mut lo = 0.0;
    let mut hi = lambda / cfg.diffusion.lower() * u_star * u_star * std::f64::consts::PI;
    let mut doublings = 0;
    while outer_map(cfg, j, hi, grid)? > 0.0 {
        lo = hi;
        hi *= 2.0;
        doublings += 1;
        if doublings > MAX_DOUBLINGS {
            return Err(Error::NonConvergence { what: "seminorm bracket", iterations: doublings });
        }
    }

    let mut best: Option<(f64, f64)> = None;
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        let g = outer_map(cfg, j, mid, grid)?;
        if best.is_none_or(|(_, bg)| g.abs() < bg.abs()) {
            best = Some((mid, g));
        }
        if g.abs() <= 1e-8 * (1.0 + mid) && hi - lo <= 1e-13 * (1.0 + hi) {
            break;
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 4.0 * f64::EPSILON * hi {
            break;
        }
    }
    let (c, g) = best.ok_or(Error::NonConvergence { what: "seminorm bisection", iterations: 0 })?;
    if g.abs() > 1e-8 * (1.0 + c) {
        return Err(Error::NonConvergence { what: "seminorm bisection", iterations: MAX_BISECTIONS });
    }

    let mu = lambda / cfg.diffusion.value(c);
    let (phi, slope) = solve_mode_with_slope(&cfg.nonlinearity, mu, j, grid)?;
    let residual = equilibrium_residual(&phi, c, cfg);
    let eq = Equilibrium { mode: j, sign: 1, phi, c, mu, residual, slope };
    Ok(if sign < 0 { eq.negated() } else { eq })
}

/// All `2N + 1` equilibria, ordered `0, φ₁⁺, φ₁⁻, φ₂⁺, φ₂⁻, …`.
pub fn enumerate_equilibria(cfg: &ModelConfig, grid: Grid) -> Result<Vec<Equilibrium>> {
    let n_modes = cfg.max_mode();
    let mut out = Vec::with_capacity(2 * n_modes + 1);
    out.push(Equilibrium::zero(cfg, grid));
    for j in 1..=n_modes {
        let plus = solve_equilibrium(cfg, j, 1, grid)?;
        let minus = plus.negated();
        out.push(plus);
        out.push(minus);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_grid;

    fn cubic() -> NonlinearitySpec {
        NonlinearitySpec::cubic()
    }

    #[test]
    fn zero_slope_gives_zero_profile() {
        let g = build_grid(63).unwrap();
        let shot = shoot(&cubic(), 1.0, 0.0, g).unwrap();
        assert_eq!(shot.end_value, 0.0);
        assert!(shot.profile.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn small_slope_is_sine_like() {
        let g = build_grid(255).unwrap();
        let shot = shoot(&cubic(), 1.05, 1e-4, g).unwrap();
        // The linear solution sin(√μ x)/√μ first vanishes at π/√μ ≈ 3.066.
        let g_nodes: Vec<f64> = g.nodes().collect();
        let v = shot.profile.values();
        assert!(g_nodes.iter().zip(v).filter(|(x, _)| **x < 3.0).all(|(_, &v)| v > 0.0));
        assert!(shot.end_value < 0.0);
        assert_eq!(shot.zero_count, 2);
    }

    #[test]
    fn large_slope_diverges() {
        let g = build_grid(255).unwrap();
        assert!(matches!(shoot(&cubic(), 4.0, 50.0, g), Err(Error::Divergence { .. })));
    }

    #[test]
    fn mode_below_threshold_is_rejected() {
        let g = build_grid(127).unwrap();
        assert!(matches!(solve_mode(&cubic(), 0.5, 1, g), Err(Error::NoSuchMode { .. })));
        assert!(matches!(solve_mode(&cubic(), 4.0, 2, g), Err(Error::NoSuchMode { .. })));
    }

    #[test]
    fn sign_change_counting() {
        assert_eq!(count_sign_changes(&[1.0, 2.0, -1.0, -3.0, 4.0]), 2);
        assert_eq!(count_sign_changes(&[1.0, 0.0, -1.0]), 1);
        assert_eq!(count_sign_changes(&[]), 0);
    }

    #[test]
    fn boundary_lambda_has_no_mode() {
        let cfg = ModelConfig::default_nonlocal(4.0).unwrap();
        let g = build_grid(127).unwrap();
        assert!(matches!(solve_equilibrium(&cfg, 2, 1, g), Err(Error::NoSuchMode { .. })));
    }
}
