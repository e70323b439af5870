//! Time integration of the quasilinear problem and its semilinear companion
//! `w_τ = w_xx + λ f(w) / a(‖w_x‖²)`.
//!
//! Both use the same linearly implicit step: diffusion implicit with the
//! nonlocal coefficient frozen at the start of the step, reaction explicit.
//! A semilinear step of size `dτ` is algebraically a quasilinear step of
//! size `dτ / a(‖w_x‖²)`, which is the discrete form of the time change.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::equilibria::Equilibrium;
use crate::error::{Error, Result};
use crate::grid::{self, Grid, GridFunction};
use crate::linalg::DiffusionSolver;
use crate::model::{lyapunov_raw, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// `u_t = a(‖u_x‖²) u_xx + λ f(u)`, time `t`.
    Quasilinear,
    /// `w_τ = w_xx + λ f(w) / a(‖w_x‖²)`, time `τ`.
    Semilinear,
}

#[derive(Debug, Clone, Copy)]
pub struct FlowOptions {
    /// Step size; `None` selects `min(1e-3, h)`.
    pub dt: Option<f64>,
    /// Record every `stride`-th step (the initial and final states are
    /// always recorded).
    pub stride: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self { dt: None, stride: 1 }
    }
}

impl FlowOptions {
    pub fn with_dt(dt: f64) -> Self {
        Self { dt: Some(dt), ..Self::default() }
    }

    pub fn stride(self, stride: usize) -> Self {
        Self { stride, ..self }
    }

    fn step_size(&self, grid: Grid) -> f64 {
        self.dt.unwrap_or_else(|| 1e-3f64.min(grid.h()))
    }
}

/// Sampled solution together with Lyapunov bookkeeping.
#[derive(Debug, Clone, Serialize)]
pub struct Trajectory {
    pub formulation: Formulation,
    pub dt: f64,
    pub steps: usize,
    pub times: Vec<f64>,
    #[serde(skip)]
    pub states: Vec<GridFunction>,
    pub lyapunov: Vec<f64>,
    /// `‖u_x‖²` at each sample.
    pub seminorms: Vec<f64>,
    /// Largest increase of the Lyapunov functional over any single step,
    /// sampled or not (negative when it decreased everywhere).
    pub max_lyapunov_increase: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &GridFunction {
        self.states.last().expect("trajectory always holds its initial state")
    }

    pub fn lyapunov_monotone(&self, tol: f64) -> bool {
        self.max_lyapunov_increase <= tol
    }
}

struct Stepper<'a> {
    cfg: &'a ModelConfig,
    formulation: Formulation,
    h: f64,
    dt: f64,
    u: Vec<f64>,
    fixed: Option<DiffusionSolver>,
    bound: f64,
}

impl<'a> Stepper<'a> {
    fn new(u0: &GridFunction, cfg: &'a ModelConfig, formulation: Formulation, dt: f64) -> Self {
        let grid = u0.grid();
        let h = grid.h();
        let fixed = match formulation {
            Formulation::Semilinear => Some(DiffusionSolver::new(grid.n(), dt / (h * h))),
            Formulation::Quasilinear => None,
        };
        Self {
            cfg,
            formulation,
            h,
            dt,
            u: u0.values().to_vec(),
            fixed,
            bound: 10.0 * cfg.nonlinearity.witness(),
        }
    }

    fn seminorm(&self) -> f64 {
        grid::seminorm_sq_raw(&self.u, self.h)
    }

    fn step(&mut self, time: f64) -> Result<()> {
        let a = self.cfg.diffusion.value(self.seminorm());
        let lambda = self.cfg.lambda();
        let f = &self.cfg.nonlinearity;
        let (gain, solver) = match self.formulation {
            Formulation::Semilinear => (self.dt * lambda / a, None),
            Formulation::Quasilinear => {
                (self.dt * lambda, Some(DiffusionSolver::new(self.u.len(), self.dt * a / (self.h * self.h))))
            }
        };
        for v in self.u.iter_mut() {
            *v += gain * f.value(*v);
        }
        match (&self.fixed, &solver) {
            (Some(s), _) | (None, Some(s)) => s.solve_in_place(&mut self.u),
            (None, None) => unreachable!("one of the solvers is always present"),
        }
        let sup = self.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if !(sup <= self.bound) {
            return Err(Error::Divergence { value: sup, bound: self.bound, at: time });
        }
        Ok(())
    }
}

fn integrate(
    u0: &GridFunction,
    cfg: &ModelConfig,
    formulation: Formulation,
    t_end: f64,
    opts: FlowOptions,
) -> Result<Trajectory> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("end time must be positive, got {t_end}")));
    }
    let grid = *u0.grid();
    let nominal = opts.step_size(grid);
    if !(nominal > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {nominal}")));
    }
    let steps = ((t_end / nominal).round() as usize).max(1);
    let dt = t_end / steps as f64;
    let stride = opts.stride.max(1);
    let h = grid.h();

    let mut stepper = Stepper::new(u0, cfg, formulation, dt);
    let mut traj = Trajectory {
        formulation,
        dt,
        steps,
        times: vec![0.0],
        states: vec![u0.clone()],
        lyapunov: vec![lyapunov_raw(u0.values(), h, cfg)],
        seminorms: vec![stepper.seminorm()],
        max_lyapunov_increase: f64::NEG_INFINITY,
    };
    let mut v_prev = traj.lyapunov[0];
    for k in 1..=steps {
        let t = k as f64 * dt;
        stepper.step(t)?;
        let v = lyapunov_raw(&stepper.u, h, cfg);
        traj.max_lyapunov_increase = traj.max_lyapunov_increase.max(v - v_prev);
        v_prev = v;
        if k % stride == 0 || k == steps {
            traj.times.push(t);
            traj.states.push(GridFunction::from_raw(grid, stepper.u.clone()));
            traj.lyapunov.push(v);
            traj.seminorms.push(stepper.seminorm());
        }
    }
    Ok(traj)
}

/// Integrates `w_τ = w_xx + λ f(w)/a(‖w_x‖²)` up to `τ = tau_end`.
pub fn integrate_semilinear(
    u0: &GridFunction,
    cfg: &ModelConfig,
    tau_end: f64,
    opts: FlowOptions,
) -> Result<Trajectory> {
    integrate(u0, cfg, Formulation::Semilinear, tau_end, opts)
}

/// Integrates `u_t = a(‖u_x‖²) u_xx + λ f(u)` up to `t = t_end`.
pub fn integrate_quasilinear(
    u0: &GridFunction,
    cfg: &ModelConfig,
    t_end: f64,
    opts: FlowOptions,
) -> Result<Trajectory> {
    integrate(u0, cfg, Formulation::Quasilinear, t_end, opts)
}

/// Paired samples of `τ` and `t = ∫₀^τ a(‖w_x‖²)⁻¹ dθ`.
#[derive(Debug, Clone, Serialize)]
pub struct TimeChangeMap {
    pub tau: Vec<f64>,
    pub t: Vec<f64>,
}

impl TimeChangeMap {
    /// Largest violation of `τ/M ≤ t ≤ τ/m` (zero when the bounds hold).
    pub fn bound_violation(&self, m: f64, upper: f64) -> f64 {
        self.tau
            .iter()
            .zip(&self.t)
            .map(|(tau, t)| (tau / upper - t).max(t - tau / m).max(0.0))
            .fold(0.0, f64::max)
    }

    /// Interpolates `t(τ)`.
    pub fn t_at(&self, tau: f64) -> f64 {
        interpolate(&self.tau, &self.t, tau)
    }
}

/// Cumulative trapezoid of `1/a(‖w_x‖²)` over the samples of a semilinear
/// trajectory.
pub fn time_change_map(traj: &Trajectory, cfg: &ModelConfig) -> Result<TimeChangeMap> {
    if traj.formulation != Formulation::Semilinear {
        return Err(Error::InvalidArgument("time change needs a semilinear trajectory".into()));
    }
    let inv: Vec<f64> = traj.seminorms.iter().map(|&s| 1.0 / cfg.diffusion.value(s)).collect();
    let mut t = Vec::with_capacity(inv.len());
    let mut acc = 0.0;
    t.push(0.0);
    for k in 1..inv.len() {
        acc += 0.5 * (traj.times[k] - traj.times[k - 1]) * (inv[k] + inv[k - 1]);
        t.push(acc);
    }
    Ok(TimeChangeMap { tau: traj.times.clone(), t })
}

/// Linear interpolation of sampled data, clamped at the ends.
pub fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    match xs.partition_point(|&v| v <= x) {
        0 => ys[0],
        i if i >= xs.len() => ys[xs.len() - 1],
        i => {
            let t = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
            ys[i - 1] + t * (ys[i] - ys[i - 1])
        }
    }
}

/// State of a trajectory at an arbitrary time, interpolated linearly between
/// samples.
pub fn state_at(traj: &Trajectory, time: f64) -> GridFunction {
    let i = traj.times.partition_point(|&v| v <= time);
    if i == 0 {
        return traj.states[0].clone();
    }
    if i >= traj.times.len() {
        return traj.final_state().clone();
    }
    let (t0, t1) = (traj.times[i - 1], traj.times[i]);
    let s = (time - t0) / (t1 - t0);
    let a = traj.states[i - 1].values();
    let b = traj.states[i].values();
    let values = a.iter().zip(b).map(|(x, y)| x + s * (y - x)).collect();
    GridFunction::from_raw(*traj.states[0].grid(), values)
}

/// Fitted `‖u(t) − φ‖ ≈ K e^{−β t} ‖u₀ − φ‖` in the trajectory's own time.
#[derive(Debug, Clone, Serialize)]
pub struct DecayEstimate {
    pub k: f64,
    pub beta: f64,
    /// Time interval of the fit.
    pub window: (f64, f64),
    /// RMS residual of the fit in log space.
    pub residual: f64,
    pub samples: usize,
}

const NOISE_FLOOR: f64 = 1e-10;

/// Least-squares fit of `log ‖u − φ‖_{H¹₀}` over the trailing `fit_window`
/// fraction of the samples above the noise floor.
pub fn decay_rate(traj: &Trajectory, target: &Equilibrium, fit_window: f64) -> Result<DecayEstimate> {
    if !(fit_window > 0.0 && fit_window <= 1.0) {
        return Err(Error::InvalidArgument(format!("fit window must lie in (0, 1], got {fit_window}")));
    }
    let distances: Vec<f64> = traj
        .states
        .iter()
        .map(|s| s.sub(&target.phi).map(|d| d.h1_seminorm()))
        .collect::<Result<_>>()?;
    let initial = distances[0];
    let last = *distances.last().unwrap_or(&initial);
    if !(initial > 0.0 && last < 1e-6 * initial) {
        return Err(Error::NonConverging { final_distance: last, initial_distance: initial });
    }
    let usable: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&distances)
        .filter(|(_, &d)| d > NOISE_FLOOR)
        .map(|(&t, &d)| (t, d.ln()))
        .collect();
    let keep = ((usable.len() as f64 * fit_window).ceil() as usize).max(2);
    if usable.len() < 2 {
        return Err(Error::EmptySamples);
    }
    let window = &usable[usable.len().saturating_sub(keep)..];
    let (slope, intercept, residual) = least_squares(window);
    Ok(DecayEstimate {
        k: intercept.exp() / initial,
        beta: -slope,
        window: (window[0].0, window[window.len() - 1].0),
        residual,
        samples: window.len(),
    })
}

fn least_squares(points: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let intercept = my - slope * mx;
    let rss: f64 = points.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    (slope, intercept, (rss / n).sqrt())
}

/// Outcome of following a perturbation of an equilibrium.
#[derive(Debug, Clone, Serialize)]
pub struct ProbeReport {
    pub start: String,
    pub delta: f64,
    /// Index into the equilibrium list the probe settled at.
    pub target_index: usize,
    pub target: String,
    /// First time the H¹₀ distance from the start exceeds `0.1`.
    pub escape_time: Option<f64>,
    /// Time at which the settling criterion was met.
    pub settle_time: f64,
    pub final_distance: f64,
    pub trajectory: Trajectory,
}

#[derive(Debug, Clone, Copy)]
pub struct ProbeOptions {
    pub flow: FlowOptions,
    /// Integration horizon; `None` selects `200 / m`.
    pub t_max: Option<f64>,
    /// H¹₀ distance counted as "at" an equilibrium.
    pub settle_distance: f64,
    /// Consecutive steps the distance must stay below the threshold.
    pub settle_steps: usize,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            flow: FlowOptions { dt: None, stride: 100 },
            t_max: None,
            settle_distance: 1e-5,
            settle_steps: 100,
        }
    }
}

/// Integrates the quasilinear flow from `eq.phi + delta · direction` until it
/// settles at one of `equilibria`.
pub fn unstable_probe(
    eq: &Equilibrium,
    direction: &GridFunction,
    delta: f64,
    cfg: &ModelConfig,
    equilibria: &[Equilibrium],
    opts: ProbeOptions,
) -> Result<ProbeReport> {
    if !(delta.abs() > 0.0 && delta.abs() <= 1e-2) {
        return Err(Error::InvalidArgument(format!("|delta| must lie in (0, 1e-2], got {delta}")));
    }
    if equilibria.is_empty() {
        return Err(Error::InvalidArgument("no equilibria to settle at".into()));
    }
    let norm = direction.l2_norm();
    if !(norm > 0.0) {
        return Err(Error::InvalidArgument("direction must be nonzero".into()));
    }
    let u0 = eq.phi.axpy(delta / norm, direction)?;
    let grid = *u0.grid();
    let h = grid.h();
    let t_max = opts.t_max.unwrap_or(200.0 / cfg.diffusion.lower());
    let dt = opts.flow.step_size(grid);
    let max_steps = (t_max / dt).ceil() as usize;
    let stride = opts.flow.stride.max(1);
    let distance = |u: &[f64], phi: &GridFunction| {
        let diff: Vec<f64> = u.iter().zip(phi.values()).map(|(a, b)| a - b).collect();
        grid::seminorm_sq_raw(&diff, h).sqrt()
    };

    let mut stepper = Stepper::new(&u0, cfg, Formulation::Quasilinear, dt);
    let mut traj = Trajectory {
        formulation: Formulation::Quasilinear,
        dt,
        steps: 0,
        times: vec![0.0],
        states: vec![u0.clone()],
        lyapunov: vec![lyapunov_raw(u0.values(), h, cfg)],
        seminorms: vec![stepper.seminorm()],
        max_lyapunov_increase: f64::NEG_INFINITY,
    };
    let mut v_prev = traj.lyapunov[0];
    let mut escape_time = None;
    let mut streak: Option<(usize, usize)> = None;
    for k in 1..=max_steps {
        let t = k as f64 * dt;
        stepper.step(t)?;
        let v = lyapunov_raw(&stepper.u, h, cfg);
        traj.max_lyapunov_increase = traj.max_lyapunov_increase.max(v - v_prev);
        v_prev = v;
        traj.steps = k;
        if escape_time.is_none() && distance(&stepper.u, &eq.phi) > 0.1 {
            escape_time = Some(t);
        }
        let nearest = equilibria
            .iter()
            .enumerate()
            .map(|(i, e)| (i, distance(&stepper.u, &e.phi)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("equilibrium list is nonempty");
        streak = match streak {
            Some((i, count)) if i == nearest.0 && nearest.1 < opts.settle_distance => Some((i, count + 1)),
            _ if nearest.1 < opts.settle_distance => Some((nearest.0, 1)),
            _ => None,
        };
        let settled = streak.is_some_and(|(_, count)| count >= opts.settle_steps);
        if k % stride == 0 || settled {
            traj.times.push(t);
            traj.states.push(GridFunction::from_raw(grid, stepper.u.clone()));
            traj.lyapunov.push(v);
            traj.seminorms.push(stepper.seminorm());
        }
        if settled {
            let (index, _) = streak.expect("settled implies a streak");
            return Ok(ProbeReport {
                start: eq.label(),
                delta,
                target_index: index,
                target: equilibria[index].label(),
                escape_time,
                settle_time: t,
                final_distance: nearest.1,
                trajectory: traj,
            });
        }
    }
    Err(Error::Unresolved { t_max })
}

/// Smooth random state `Σ_{k≤4} a_k sin(kx)` with `a_k` uniform in
/// `[−amplitude, amplitude]`.
pub fn random_smooth_state(grid: Grid, seed: u64, amplitude: f64) -> GridFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs: Vec<f64> = (0..4).map(|_| rng.gen_range(-amplitude..=amplitude)).collect();
    GridFunction::from_fn(grid, |x| {
        coeffs.iter().enumerate().map(|(k, a)| a * ((k + 1) as f64 * x).sin()).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build_grid;

    #[test]
    fn zero_state_stays_zero() {
        let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
        let g = build_grid(63).unwrap();
        let traj = integrate_semilinear(&GridFunction::zeros(g), &cfg, 0.1, FlowOptions::default()).unwrap();
        assert!(traj.final_state().values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_diffusion_time_change_is_identity() {
        let cfg = ModelConfig::classical(3.0).unwrap();
        let g = build_grid(63).unwrap();
        let u0 = random_smooth_state(g, 7, 0.3);
        let traj = integrate_semilinear(&u0, &cfg, 0.5, FlowOptions::default()).unwrap();
        let map = time_change_map(&traj, &cfg).unwrap();
        for (tau, t) in map.tau.iter().zip(&map.t) {
            assert!((tau - t).abs() <= 1e-12 * tau.max(1.0));
        }
    }

    #[test]
    fn time_change_rejects_quasilinear_input() {
        let cfg = ModelConfig::classical(3.0).unwrap();
        let g = build_grid(31).unwrap();
        let traj = integrate_quasilinear(&random_smooth_state(g, 1, 0.2), &cfg, 0.01, FlowOptions::default()).unwrap();
        assert!(time_change_map(&traj, &cfg).is_err());
    }

    #[test]
    fn interpolation_is_piecewise_linear() {
        let xs = [0.0, 1.0, 3.0];
        let ys = [1.0, 3.0, -1.0];
        assert_eq!(interpolate(&xs, &ys, 0.5), 2.0);
        assert_eq!(interpolate(&xs, &ys, 2.0), 1.0);
        assert_eq!(interpolate(&xs, &ys, 5.0), -1.0);
        assert_eq!(interpolate(&xs, &ys, -1.0), 1.0);
    }

    #[test]
    fn least_squares_recovers_a_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|i| (i as f64, 2.0 - 0.5 * i as f64)).collect();
        let (slope, intercept, res) = least_squares(&pts);
        assert!((slope + 0.5).abs() < 1e-12 && (intercept - 2.0).abs() < 1e-12 && res < 1e-12);
    }

    #[test]
    fn bad_arguments_are_rejected() {
        let cfg = ModelConfig::classical(3.0).unwrap();
        let g = build_grid(31).unwrap();
        let u0 = GridFunction::zeros(g);
        assert!(integrate_quasilinear(&u0, &cfg, 0.0, FlowOptions::default()).is_err());
        let eq = Equilibrium::zero(&cfg, g);
        let dir = GridFunction::from_fn(g, f64::sin);
        assert!(unstable_probe(&eq, &dir, 0.5, &cfg, &[eq.clone()], ProbeOptions::default()).is_err());
    }
}
