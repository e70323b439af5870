use serde::Serialize;

use super::solver::{eigenvalues, kth_largest, EigenCount, Spectrum};
use super::{assemble, linearization, NonlocalOperator, OperatorSpec};
use crate::equilibria::{self, Equilibrium};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::model::ModelConfig;

/// Stability class of an equilibrium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Classification {
    Stable,
    Unstable { morse_index: usize },
    MarginCase,
}

#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub equilibrium: String,
    pub mode: usize,
    pub sign: i8,
    pub classification: Classification,
    /// `min_k |μ_k|`.
    pub spectral_gap: f64,
    /// `μ_1`.
    pub leading: f64,
}

/// `min_k |μ_k|`, from the two eigenvalues that bracket zero.
pub fn spectral_gap(op: &NonlocalOperator) -> Result<f64> {
    let n = op.dim();
    let nonneg = n - op.count_below(0.0);
    let mut gap = f64::INFINITY;
    if nonneg >= 1 {
        gap = gap.min(kth_largest(op, nonneg)?.abs());
    }
    if nonneg < n {
        gap = gap.min(kth_largest(op, nonneg + 1)?.abs());
    }
    Ok(gap)
}

/// Number of eigenvalues above `tol`.
pub fn morse_index(op: &NonlocalOperator, tol: f64) -> usize {
    op.dim() - op.count_below(tol)
}

/// Classifies an equilibrium from the spectrum of its linearization.
pub fn classify(eq: &Equilibrium, cfg: &ModelConfig, tol: f64) -> Result<StabilityReport> {
    let op = assemble(&linearization(eq, cfg));
    let leading = kth_largest(&op, 1)?;
    let spectral_gap = spectral_gap(&op)?;
    let near_zero = op.count_below(tol) - op.count_below(-tol);
    let classification = if near_zero > 0 {
        Classification::MarginCase
    } else if leading < -tol {
        Classification::Stable
    } else {
        Classification::Unstable { morse_index: morse_index(&op, tol) }
    };
    Ok(StabilityReport {
        equilibrium: eq.label(),
        mode: eq.mode,
        sign: eq.sign,
        classification,
        spectral_gap,
        leading,
    })
}

/// Simplicity indicator for one entry of an ε-scan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SimplicityFlag {
    Simple,
    /// Within the threshold of an eigenvalue of the unperturbed operator,
    /// where simplicity is not guaranteed.
    NearGamma,
    /// Within the threshold of a neighbouring eigenvalue.
    Clustered,
}

/// Top eigenvalues of `L_ε` for a list of couplings.
#[derive(Debug, Clone, Serialize)]
pub struct EpsilonScan {
    pub epsilons: Vec<f64>,
    /// `rows[i][k]` is the `(k+1)`-th largest eigenvalue at `epsilons[i]`.
    pub rows: Vec<Vec<f64>>,
    pub flags: Vec<Vec<SimplicityFlag>>,
    /// Top eigenvalues of the `ε = 0` operator (one more than tracked).
    pub gammas: Vec<f64>,
    /// Largest decrease of a tracked eigenvalue between consecutive ε.
    pub max_decrease: f64,
}

impl EpsilonScan {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.max_decrease <= tol
    }

    /// Largest violation of the rank-one interlacing bounds
    /// `γ_{k+1} ≤ μ_k(ε) ≤ γ_k` (ε ≤ 0) and `γ_k ≤ μ_k(ε) ≤ γ_{k−1}` (ε ≥ 0).
    pub fn interlacing_violation(&self) -> f64 {
        let mut worst = 0.0f64;
        for (eps, row) in self.epsilons.iter().zip(&self.rows) {
            for (k, &mu) in row.iter().enumerate() {
                let (lo, hi) = if *eps <= 0.0 {
                    (self.gammas.get(k + 1).copied().unwrap_or(f64::NEG_INFINITY), self.gammas[k])
                } else {
                    (self.gammas[k], k.checked_sub(1).map_or(f64::INFINITY, |i| self.gammas[i]))
                };
                worst = worst.max(lo - mu).max(mu - hi);
            }
        }
        worst
    }
}

/// Scans the sorted top-`track` eigenvalues over `eps_list`.
pub fn epsilon_scan(spec: &OperatorSpec, eps_list: &[f64], track: usize) -> Result<EpsilonScan> {
    if eps_list.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::InvalidArgument("epsilon list must be sorted ascending".into()));
    }
    let base = assemble(&spec.with_epsilon(0.0));
    let gammas = eigenvalues(&base, EigenCount::Top(track + 1))?;
    let threshold = 1e-9 * base.norm_bound();

    let mut rows = Vec::with_capacity(eps_list.len());
    let mut flags = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let op = assemble(&spec.with_epsilon(eps));
        let row = eigenvalues(&op, EigenCount::Top(track))?;
        let simple = super::solver::simplicity_flags(&row, threshold);
        flags.push(
            row.iter()
                .zip(simple)
                .map(|(mu, s)| {
                    if gammas.iter().any(|g| (g - mu).abs() <= threshold) {
                        SimplicityFlag::NearGamma
                    } else if s {
                        SimplicityFlag::Simple
                    } else {
                        SimplicityFlag::Clustered
                    }
                })
                .collect(),
        );
        rows.push(row);
    }

    let mut max_decrease = f64::NEG_INFINITY;
    for pair in rows.windows(2) {
        for (a, b) in pair[0].iter().zip(&pair[1]) {
            max_decrease = max_decrease.max(a - b);
        }
    }
    Ok(EpsilonScan {
        epsilons: eps_list.to_vec(),
        rows,
        flags,
        gammas,
        max_decrease: max_decrease.max(0.0),
    })
}

/// `∫ f(φ) u_k` for the `k`-th (1-based) eigenvector of `spectrum0`.
pub fn orthogonality_check(
    eq: &Equilibrium,
    spectrum0: &Spectrum,
    k: usize,
    cfg: &ModelConfig,
) -> Result<f64> {
    let u = eigenvector(spectrum0, k)?;
    let fphi = eq.phi.map(|v| cfg.nonlinearity.value(v));
    crate::grid::inner(&fphi, u)
}

/// [`orthogonality_check`] divided by `‖f(φ)‖ ‖u_k‖`.
pub fn orthogonality_scaled(
    eq: &Equilibrium,
    spectrum0: &Spectrum,
    k: usize,
    cfg: &ModelConfig,
) -> Result<f64> {
    let raw = orthogonality_check(eq, spectrum0, k, cfg)?;
    let u = eigenvector(spectrum0, k)?;
    let fphi = eq.phi.map(|v| cfg.nonlinearity.value(v));
    let scale = fphi.l2_norm() * u.l2_norm();
    Ok(if scale > 0.0 { raw / scale } else { 0.0 })
}

fn eigenvector(spectrum: &Spectrum, k: usize) -> Result<&GridFunction> {
    k.checked_sub(1).and_then(|i| spectrum.eigenvectors.get(i)).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "eigenvector {k} not available (spectrum holds {})",
            spectrum.eigenvectors.len()
        ))
    })
}

/// Solution of `w'' + μ f'(φ) w = 0`, `w(0) = 0`, `w'(0) = 1`, with the
/// Wronskian against `v = φ'` and the sign facts used in the instability
/// argument.
#[derive(Debug, Clone, Serialize)]
pub struct VariationalReport {
    #[serde(skip)]
    pub w: GridFunction,
    /// `W(0) = φ'(0)`.
    pub wronskian_initial: f64,
    /// `max_x |W(x) − W(0)| / |W(0)|` over the grid nodes.
    pub wronskian_deviation: f64,
    /// First interior minimum of `φ` with `φ < 0` (even modes).
    pub x0: Option<f64>,
    pub w_at_x0: Option<f64>,
    /// Sign changes of `w` on `(0, π/2)`.
    pub zeros_before_half: usize,
    /// First zero of `w` in `(0, π/2)`, linearly interpolated.
    pub first_zero: Option<f64>,
}

/// Integrates the variational equation along the positive profile of the
/// equilibrium's mode (the equation does not depend on the sign).
pub fn variational_solution(eq: &Equilibrium, cfg: &ModelConfig) -> Result<VariationalReport> {
    if eq.mode < 2 {
        return Err(Error::InvalidArgument(format!(
            "variational solution needs mode >= 2, got {}",
            eq.mode
        )));
    }
    let grid = eq.grid();
    let n = grid.n();
    let h = grid.h();
    let mu = cfg.lambda() / cfg.diffusion.value(eq.c);
    let f = &cfg.nonlinearity;
    let s = eq.slope.abs();

    // State (φ, φ', w, w'), four classical RK4 steps per cell.
    let rhs = |y: [f64; 4]| [y[1], -mu * f.value(y[0]), y[3], -mu * f.derivative(y[0]) * y[2]];
    let wronskian = |y: [f64; 4]| y[3] * y[1] - y[2] * (-mu * f.value(y[0]));
    let dt = h / 4.0;
    let mut y = [0.0, s, 0.0, 1.0];
    let w0 = wronskian(y);
    let mut phi = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    let mut deviation = 0.0f64;
    for _ in 0..=n {
        for _ in 0..4 {
            let k1 = rhs(y);
            let k2 = rhs(axpy(y, 0.5 * dt, k1));
            let k3 = rhs(axpy(y, 0.5 * dt, k2));
            let k4 = rhs(axpy(y, dt, k3));
            for i in 0..4 {
                y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        deviation = deviation.max((wronskian(y) - w0).abs() / w0.abs());
        if phi.len() < n {
            phi.push(y[0]);
            w.push(y[2]);
        }
    }

    let (x0, w_at_x0) = if eq.mode % 2 == 0 {
        match (1..n - 1).find(|&i| phi[i] < 0.0 && phi[i] <= phi[i - 1] && phi[i] <= phi[i + 1]) {
            Some(i) => (Some(grid.node(i)), Some(w[i])),
            None => (None, None),
        }
    } else {
        (None, None)
    };

    let half = grid.length() / 2.0;
    let mut zeros_before_half = 0;
    let mut first_zero = None;
    let mut prev = (0.0f64, 0.0f64);
    for i in 0..n {
        let x = grid.node(i);
        if x >= half {
            break;
        }
        if i > 0 && prev.1 != 0.0 && w[i].signum() != prev.1.signum() {
            zeros_before_half += 1;
            if first_zero.is_none() {
                let t = prev.1 / (prev.1 - w[i]);
                first_zero = Some(prev.0 + t * (x - prev.0));
            }
        }
        prev = (x, w[i]);
    }

    Ok(VariationalReport {
        w: GridFunction::new(grid, w)?,
        wronskian_initial: w0,
        wronskian_deviation: deviation,
        x0,
        w_at_x0,
        zeros_before_half,
        first_zero,
    })
}

fn axpy(y: [f64; 4], a: f64, k: [f64; 4]) -> [f64; 4] {
    [y[0] + a * k[0], y[1] + a * k[1], y[2] + a * k[2], y[3] + a * k[3]]
}

/// Linearization restricted to `[0, π/q]`.
///
/// Admissible divisors are powers of two with `q = 2` (the half-interval
/// operator, valid for every mode) or `q ≤ 2ⁿ` where `2ⁿ` is the largest
/// power of two dividing the mode. The coupling is multiplied by `q`.
pub fn restricted_linearization(eq: &Equilibrium, q: usize, cfg: &ModelConfig) -> Result<OperatorSpec> {
    let invalid = |reason: String| Error::InvalidDivisor { divisor: q, mode: eq.mode, reason };
    if eq.mode == 0 {
        return Err(invalid("the zero equilibrium has no symmetry reduction".into()));
    }
    if q < 2 || !q.is_power_of_two() {
        return Err(invalid("divisor must be a power of two, at least 2".into()));
    }
    let two_adic = 1usize << eq.mode.trailing_zeros();
    if q != 2 && q > two_adic {
        return Err(invalid(format!("largest admissible power of two is {}", two_adic.max(2))));
    }
    let grid = eq.grid();
    if (grid.n() + 1) % q != 0 {
        return Err(invalid(format!("grid with n = {} has no node at pi/{q}", grid.n())));
    }
    let sub = grid.subgrid(q)?;
    let full = linearization(eq, cfg);
    OperatorSpec::new(full.p.restrict(sub)?, full.cvec.restrict(sub)?, full.epsilon * q as f64)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct GapRow {
    pub n: usize,
    pub gap: f64,
}

/// Spectral gaps of one equilibrium over a sequence of grids.
#[derive(Debug, Clone, Serialize)]
pub struct HyperbolicityCertificate {
    pub label: String,
    pub rows: Vec<GapRow>,
    /// Largest relative change between successive gaps.
    pub max_relative_change: f64,
    pub limit: f64,
    pub passed: bool,
}

/// Recomputes `φ_mode^sign` on every grid and records its spectral gap.
/// Passes when successive gaps change by less than 10% and the finest one
/// exceeds `1e-3`.
pub fn hyperbolicity_certificate(
    cfg: &ModelConfig,
    mode: usize,
    sign: i8,
    grids: &[Grid],
) -> Result<HyperbolicityCertificate> {
    if grids.is_empty() {
        return Err(Error::InvalidArgument("grid sequence is empty".into()));
    }
    let mut rows = Vec::with_capacity(grids.len());
    let mut label = String::new();
    for &g in grids {
        let eq = equilibria::solve_equilibrium(cfg, mode, sign, g)?;
        label = eq.label();
        let gap = spectral_gap(&assemble(&linearization(&eq, cfg)))?;
        rows.push(GapRow { n: g.n(), gap });
    }
    let max_relative_change = rows
        .windows(2)
        .map(|w| (w[1].gap - w[0].gap).abs() / w[1].gap.abs().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max);
    let limit = rows.last().map_or(0.0, |r| r.gap);
    Ok(HyperbolicityCertificate {
        label,
        passed: max_relative_change < 0.1 && limit > 1e-3,
        rows,
        max_relative_change,
        limit,
    })
}
