//! The verification suite: one function per claim, shared by the CLI
//! `verify` command and the acceptance test target.
//!
//! Every claim is evaluated at fixed parameter values scaled by `a(0)`, so a
//! model with `a(0) = 1` reproduces the nominal values exactly. Failures are
//! recorded in the report, never propagated.

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::combinatorics;
use crate::dynamics::{self, FlowOptions, ProbeOptions, Trajectory};
use crate::equilibria::{self, Equilibrium};
use crate::error::Result;
use crate::grid::{build_grid, Grid, GridFunction};
use crate::model::ModelConfig;
use crate::spectral::{self, Classification, EigenCount};

/// Grids coarser than this cannot resolve the spectral claims.
pub const MIN_RESOLVED_N: usize = 127;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Margin,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Margin => "margin",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Claim {
    pub id: String,
    /// The mathematical statement the claim checks.
    pub anchor: String,
    pub status: Status,
    /// Headline measurement compared against `tolerance`.
    pub measured: f64,
    pub tolerance: f64,
    pub detail: Vec<String>,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl Claim {
    /// One-line summary, e.g. `AC01 pass  equilibrium count ...`.
    pub fn summary_line(&self) -> String {
        format!(
            "{} {:<6} {} (measured {:.6e}, tolerance {:.3e}, {:.2}s)",
            self.id,
            self.status.as_str(),
            self.anchor,
            self.measured,
            self.tolerance,
            self.elapsed.as_secs_f64()
        )
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub margin: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub grid_n: usize,
    pub lambda: f64,
    pub claims: Vec<Claim>,
    pub summary: Summary,
}

impl VerificationReport {
    pub fn new(suite: &Suite, claims: Vec<Claim>) -> Self {
        let mut summary = Summary::default();
        for c in &claims {
            match c.status {
                Status::Pass => summary.pass += 1,
                Status::Fail => summary.fail += 1,
                Status::Margin => summary.margin += 1,
            }
        }
        Self { grid_n: suite.config.grid_n, lambda: suite.config.model.lambda(), claims, summary }
    }

    pub fn passed(&self) -> bool {
        self.summary.fail == 0
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.claims {
            out.push_str(&c.summary_line());
            out.push('\n');
            for d in &c.detail {
                out.push_str("    ");
                out.push_str(d);
                out.push('\n');
            }
        }
        out.push_str(&format!(
            "{} passed, {} failed, {} margin\n",
            self.summary.pass, self.summary.fail, self.summary.margin
        ));
        out
    }
}

/// Suite parameters.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub model: ModelConfig,
    pub grid_n: usize,
    pub seed: u64,
    pub det_max_n: usize,
    pub det_max_j: usize,
    pub margin_tol: f64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            model: ModelConfig::default_nonlocal(6.0).expect("default lambda is valid"),
            grid_n: 1023,
            seed: 0,
            det_max_n: 50,
            det_max_j: 60,
            margin_tol: 1e-4,
        }
    }
}

/// Identifiers of the acceptance claims, in report order.
pub const ACCEPTANCE_IDS: [&str; 13] = [
    "AC01", "AC02", "AC03", "AC04", "AC05", "AC06", "AC07", "AC08", "AC09", "AC10", "AC11",
    "AC12", "AC13",
];

/// Hyperbolicity of every equilibrium at the configured λ.
pub const CONFIG_HYPERBOLICITY_ID: &str = "HYP";

/// Claim runner. Trajectory Lyapunov records from the dynamics claims are
/// collected so the descent claim can audit all of them.
pub struct Suite {
    pub config: SuiteConfig,
    lyapunov_log: Mutex<Vec<(String, f64)>>,
}

impl Suite {
    pub fn new(config: SuiteConfig) -> Self {
        Self { config, lyapunov_log: Mutex::new(Vec::new()) }
    }

    /// All claim ids; the descent claim must run after the other dynamics
    /// claims to see their trajectories.
    pub fn ids() -> Vec<&'static str> {
        let mut ids = ACCEPTANCE_IDS.to_vec();
        ids.push(CONFIG_HYPERBOLICITY_ID);
        ids
    }

    /// Claims that can run in any order (everything except `AC11`).
    pub fn independent_ids() -> Vec<&'static str> {
        Self::ids().into_iter().filter(|&id| id != "AC11").collect()
    }

    pub fn run_all(&self) -> VerificationReport {
        let mut claims: Vec<Claim> =
            Self::independent_ids().into_iter().map(|id| self.run(id)).collect();
        claims.push(self.run("AC11"));
        self.report(claims)
    }

    /// Orders claims as in [`Suite::ids`] and builds the report.
    pub fn report(&self, mut claims: Vec<Claim>) -> VerificationReport {
        let order = Self::ids();
        claims.sort_by_key(|c| order.iter().position(|&id| id == c.id).unwrap_or(usize::MAX));
        VerificationReport::new(self, claims)
    }

    pub fn run(&self, id: &str) -> Claim {
        let start = Instant::now();
        let (anchor, needs_grid, body): (&str, bool, fn(&Suite) -> Result<Outcome>) = match id {
            "AC01" => ("equilibrium count 2N+1", true, Suite::equilibrium_count),
            "AC02" => ("spectrum at zero is -k^2 + lambda/a(0)", true, Suite::spectrum_at_zero),
            "AC03" => ("phi1 stable, every other equilibrium unstable", true, Suite::stability),
            "AC04" => ("hyperbolicity except 0 at lambda = a(0)N^2", true, Suite::hyperbolicity),
            "AC05" => ("eigenvalues non-decreasing in epsilon", true, Suite::epsilon_monotone),
            "AC06" => ("f(phi_j) orthogonal to u_k of opposite parity", true, Suite::orthogonality),
            "AC07" => ("constant Wronskian and sign of w", true, Suite::wronskian),
            "AC08" => ("gamma_2 is the first eigenvalue on [0, pi/2]", true, Suite::half_interval),
            "AC09" => ("exact determinants of A_n and L", false, Suite::determinants),
            "AC10" => ("time change maps the semilinear flow onto the quasilinear one", true, Suite::time_change),
            "AC11" => ("Lyapunov functional non-increasing", true, Suite::lyapunov_descent),
            "AC12" => ("exponential decay rates match spectral gaps", true, Suite::decay_rates),
            "AC13" => ("unstable sets connect equilibria", true, Suite::connections),
            CONFIG_HYPERBOLICITY_ID => ("hyperbolicity at the configured lambda", true, Suite::configured_hyperbolicity),
            _ => {
                return Claim {
                    id: id.to_string(),
                    anchor: "unknown claim".into(),
                    status: Status::Fail,
                    measured: f64::NAN,
                    tolerance: f64::NAN,
                    detail: vec![format!("no claim named {id}")],
                    elapsed: start.elapsed(),
                }
            }
        };
        let outcome = if needs_grid && self.config.grid_n < MIN_RESOLVED_N {
            Outcome {
                status: Status::Margin,
                measured: self.config.grid_n as f64,
                tolerance: MIN_RESOLVED_N as f64,
                detail: vec![format!(
                    "insufficient resolution: grid_n = {} is below {MIN_RESOLVED_N}",
                    self.config.grid_n
                )],
            }
        } else {
            body(self).unwrap_or_else(|e| Outcome {
                status: Status::Fail,
                measured: f64::NAN,
                tolerance: f64::NAN,
                detail: vec![format!("error: {e}")],
            })
        };
        Claim {
            id: id.to_string(),
            anchor: anchor.to_string(),
            status: outcome.status,
            measured: outcome.measured,
            tolerance: outcome.tolerance,
            detail: outcome.detail,
            elapsed: start.elapsed(),
        }
    }

    fn model_at(&self, nominal_lambda: f64) -> Result<ModelConfig> {
        self.config.model.with_lambda(nominal_lambda * self.config.model.a0())
    }

    fn grid(&self) -> Result<Grid> {
        build_grid(self.config.grid_n)
    }

    fn log_trajectory(&self, label: String, traj: &Trajectory) {
        let mut log = self.lyapunov_log.lock().unwrap_or_else(|p| p.into_inner());
        log.push((label, traj.max_lyapunov_increase));
    }

    fn equilibrium_count(&self) -> Result<Outcome> {
        let grid = self.grid()?;
        let start = Instant::now();
        let mut detail = Vec::new();
        let mut worst = 0.0f64;
        let mut ok = true;
        for nominal in [0.5, 2.0, 6.0, 12.0] {
            let cfg = self.model_at(nominal)?;
            let eqs = equilibria::enumerate_equilibria(&cfg, grid)?;
            let expected = 2 * cfg.max_mode() + 1;
            let invariants_ok = eqs.iter().all(|e| e.check(&cfg).all_ok());
            worst = worst.max((eqs.len() as f64 - expected as f64).abs());
            ok &= eqs.len() == expected && invariants_ok;
            detail.push(format!(
                "lambda = {}: {} equilibria (expected {expected}), invariants {}",
                cfg.lambda(),
                eqs.len(),
                if invariants_ok { "hold" } else { "violated" }
            ));
        }
        let secs = start.elapsed().as_secs_f64();
        detail.push(runtime_note(secs, 5.0));
        Ok(Outcome::check(ok && secs < 5.0, worst, 0.0, detail))
    }

    fn spectrum_at_zero(&self) -> Result<Outcome> {
        let cfg = self.model_at(6.0)?;
        let shift = cfg.lambda() / cfg.a0();
        let errors = |n: usize| -> Result<f64> {
            let grid = build_grid(n)?;
            let op = spectral::assemble(&spectral::linearization(&Equilibrium::zero(&cfg, grid), &cfg));
            let vals = spectral::eigenvalues(&op, EigenCount::Top(10))?;
            Ok(vals
                .iter()
                .enumerate()
                .map(|(k, mu)| {
                    let exact = shift - ((k + 1) * (k + 1)) as f64;
                    ((mu - exact) / exact).abs()
                })
                .fold(0.0, f64::max))
        };
        let n = self.config.grid_n;
        let coarse = errors(n)?;
        let fine = errors(2 * n + 1)?;
        let ratio = coarse / fine;
        let detail = vec![
            format!("max relative error {coarse:.3e} at n = {n}, {fine:.3e} at n = {}", 2 * n + 1),
            format!("refinement ratio {ratio:.3} (expected 4 +- 20%)"),
        ];
        Ok(Outcome::check(coarse <= 1e-3 && (3.2..=4.8).contains(&ratio), coarse, 1e-3, detail))
    }

    fn stability(&self) -> Result<Outcome> {
        let cfg = self.model_at(12.0)?;
        let grid = self.grid()?;
        let mut ok = true;
        let mut min_gap = f64::INFINITY;
        let mut detail = Vec::new();
        for eq in equilibria::enumerate_equilibria(&cfg, grid)? {
            let report = spectral::classify(&eq, &cfg, self.config.margin_tol)?;
            let expected_stable = eq.mode == 1;
            let right = match report.classification {
                Classification::Stable => expected_stable,
                Classification::Unstable { morse_index } => !expected_stable && morse_index >= 1,
                Classification::MarginCase => false,
            };
            let separated = report.spectral_gap > 1e-3 && report.leading.abs() > 1e-3;
            ok &= right && separated;
            min_gap = min_gap.min(report.spectral_gap);
            detail.push(format!(
                "{}: {:?}, leading {:.6}, gap {:.6}",
                report.equilibrium, report.classification, report.leading, report.spectral_gap
            ));
        }
        Ok(Outcome::check(ok, min_gap, 1e-3, detail))
    }

    fn refinement_grids(&self) -> Result<Vec<Grid>> {
        let g = self.grid()?;
        Ok(vec![g, g.refined(), g.refined().refined()])
    }

    fn hyperbolicity(&self) -> Result<Outcome> {
        let cfg = self.model_at(6.0)?;
        let grids = self.refinement_grids()?;
        let mut ok = true;
        let mut min_limit = f64::INFINITY;
        let mut detail = Vec::new();
        for eq in equilibria::enumerate_equilibria(&cfg, grids[0])? {
            let cert = spectral::hyperbolicity_certificate(&cfg, eq.mode, eq.sign, &grids)?;
            ok &= cert.passed;
            min_limit = min_limit.min(cert.limit);
            detail.push(format!(
                "{}: gaps {} (max relative change {:.2e})",
                cert.label,
                gap_list(&cert.rows),
                cert.max_relative_change
            ));
        }
        let exceptional = self.model_at(4.0)?;
        let cert = spectral::hyperbolicity_certificate(&exceptional, 0, 1, &grids)?;
        let shrinking = cert.rows.windows(2).all(|w| w[1].gap < w[0].gap);
        let small = cert.rows.iter().all(|r| r.gap < 1e-3);
        ok &= shrinking && small;
        detail.push(format!(
            "0 at lambda = {}: gaps {} ({})",
            exceptional.lambda(),
            gap_list(&cert.rows),
            if shrinking && small { "vanishing under refinement" } else { "not vanishing" }
        ));
        Ok(Outcome::check(ok, min_limit, 1e-3, detail))
    }

    fn epsilon_monotone(&self) -> Result<Outcome> {
        let cfg = self.model_at(12.0)?;
        let grid = self.grid()?;
        let mut worst = 0.0f64;
        let mut detail = Vec::new();
        for eq in equilibria::enumerate_equilibria(&cfg, grid)?.into_iter().filter(|e| e.mode >= 2) {
            let spec = spectral::linearization(&eq, &cfg);
            let eps: Vec<f64> =
                (0..41).map(|i| 2.0 * spec.epsilon * (1.0 - i as f64 / 40.0)).collect();
            let scan = spectral::epsilon_scan(&spec, &eps, 8)?;
            worst = worst.max(scan.max_decrease);
            detail.push(format!(
                "{}: epsilon_j = {:.6}, max decrease {:.2e}, interlacing violation {:.2e}",
                eq.label(),
                spec.epsilon,
                scan.max_decrease,
                scan.interlacing_violation()
            ));
        }
        Ok(Outcome::check(worst <= 1e-8, worst, 1e-8, detail))
    }

    fn orthogonality(&self) -> Result<Outcome> {
        let cfg = self.model_at(12.0)?;
        let grid = self.grid()?;
        let mut worst_zero = 0.0f64;
        let mut weakest_nonzero = f64::INFINITY;
        let mut detail = Vec::new();
        for j in [2usize, 3] {
            let eq = equilibria::solve_equilibrium(&cfg, j, 1, grid)?;
            let spec0 = spectral::linearization(&eq, &cfg).with_epsilon(0.0);
            let spectrum = spectral::eigenpairs(&spectral::assemble(&spec0), EigenCount::Top(10))?;
            let mut values = Vec::new();
            for k in 1..=10 {
                let v = spectral::orthogonality_scaled(&eq, &spectrum, k, &cfg)?;
                values.push(format!("k={k}: {v:+.2e}"));
                let opposite = (j + k) % 2 == 1;
                if opposite && k <= if j == 2 { 9 } else { 10 } {
                    worst_zero = worst_zero.max(v.abs());
                } else if forced_nonzero(j, k) {
                    weakest_nonzero = weakest_nonzero.min(v.abs());
                }
            }
            detail.push(format!("phi{j}: {}", values.join(", ")));
        }
        detail.push(format!(
            "opposite parity max {worst_zero:.2e} (limit 1e-6); k = 2 mod 4 for phi2 and k = 3 mod 6 for phi3 min {weakest_nonzero:.2e} (must exceed 1e-3)"
        ));
        detail.push(
            "same-parity k outside those classes vanish too: the half-profile symmetry of phi_j forces it".into(),
        );
        Ok(Outcome::check(worst_zero <= 1e-6 && weakest_nonzero > 1e-3, worst_zero, 1e-6, detail))
    }

    fn wronskian(&self) -> Result<Outcome> {
        let cfg = self.model_at(12.0)?;
        let grid = self.grid()?;
        let two = spectral::variational_solution(&equilibria::solve_equilibrium(&cfg, 2, 1, grid)?, &cfg)?;
        let three = spectral::variational_solution(&equilibria::solve_equilibrium(&cfg, 3, 1, grid)?, &cfg)?;
        let deviation = two.wronskian_deviation.max(three.wronskian_deviation);
        let negative = two.w_at_x0.is_some_and(|w| w < 0.0);
        let zero = three.first_zero.is_some_and(|x| x < grid.length() / 2.0);
        let detail = vec![
            format!(
                "phi2: W = {:.6}, deviation {:.2e}, w({:.4}) = {:.6}",
                two.wronskian_initial,
                two.wronskian_deviation,
                two.x0.unwrap_or(f64::NAN),
                two.w_at_x0.unwrap_or(f64::NAN)
            ),
            format!(
                "phi3: W = {:.6}, deviation {:.2e}, first zero of w at {:.4}",
                three.wronskian_initial,
                three.wronskian_deviation,
                three.first_zero.unwrap_or(f64::NAN)
            ),
        ];
        Ok(Outcome::check(deviation <= 1e-5 && negative && zero, deviation, 1e-5, detail))
    }

    fn half_interval(&self) -> Result<Outcome> {
        let cfg = self.model_at(12.0)?;
        let grid = self.grid()?;
        let mut worst = 0.0f64;
        let mut detail = Vec::new();
        for j in [2usize, 3] {
            let eq = equilibria::solve_equilibrium(&cfg, j, 1, grid)?;
            let full = spectral::assemble(&spectral::linearization(&eq, &cfg).with_epsilon(0.0));
            let gamma2 = spectral::kth_largest(&full, 2)?;
            let half = spectral::restricted_linearization(&eq, 2, &cfg)?.with_epsilon(0.0);
            let first = spectral::kth_largest(&spectral::assemble(&half), 1)?;
            worst = worst.max((gamma2 - first).abs());
            detail.push(format!("phi{j}: gamma_2 = {gamma2:.10}, first on half interval = {first:.10}"));
        }
        Ok(Outcome::check(worst <= 1e-4, worst, 1e-4, detail))
    }

    fn determinants(&self) -> Result<Outcome> {
        let start = Instant::now();
        let an = combinatorics::an_table(self.config.det_max_n)?;
        let l = combinatorics::tridiag_table(self.config.det_max_j)?;
        let rec = combinatorics::recurrence_table(self.config.det_max_n)?;
        let secs = start.elapsed().as_secs_f64();
        let failures = an.iter().chain(&l).chain(&rec).filter(|r| !r.ok).count();
        let detail = vec![
            format!("det A_n = (2n+1)(-1)^n for n = 2..={}: {}", self.config.det_max_n, ok_word(&an)),
            format!("det L = j for j = 2..={}: {}", self.config.det_max_j, ok_word(&l)),
            format!("det A_(n+1) = -det A_n - 2 det T_n for n = 2..{}: {}", self.config.det_max_n, ok_word(&rec)),
            runtime_note(secs, 1.0),
        ];
        Ok(Outcome::check(failures == 0 && secs < 1.0, failures as f64, 0.0, detail))
    }

    fn time_change(&self) -> Result<Outcome> {
        let cfg = self.model_at(6.0)?;
        let grid = self.grid()?;
        let (m, upper) = (cfg.diffusion.lower(), cfg.diffusion.upper());
        let run = |dt: f64| -> Result<(f64, f64)> {
            let mut worst = 0.0f64;
            let mut bound = 0.0f64;
            for i in 0..5u64 {
                let u0 = dynamics::random_smooth_state(grid, self.config.seed + i, 0.5);
                let semi = dynamics::integrate_semilinear(&u0, &cfg, 2.0, FlowOptions::with_dt(dt))?;
                let map = dynamics::time_change_map(&semi, &cfg)?;
                let t_end = *map.t.last().expect("map is nonempty");
                let quasi = dynamics::integrate_quasilinear(&u0, &cfg, t_end, FlowOptions::with_dt(dt))?;
                for (k, &t) in map.t.iter().enumerate() {
                    let diff = semi.states[k].sub(&dynamics::state_at(&quasi, t))?.sup_norm();
                    worst = worst.max(diff);
                }
                bound = bound.max(map.bound_violation(m, upper));
                self.log_trajectory(format!("time change semilinear seed {} dt {dt}", self.config.seed + i), &semi);
                self.log_trajectory(format!("time change quasilinear seed {} dt {dt}", self.config.seed + i), &quasi);
            }
            Ok((worst, bound))
        };
        let dt = 5e-4;
        let (coarse, bound_a) = run(dt)?;
        let (fine, bound_b) = run(dt / 2.0)?;
        let ratio = coarse / fine;
        let bound = bound_a.max(bound_b);
        let detail = vec![
            format!("max sup difference {coarse:.3e} at dt = {dt}, {fine:.3e} at dt = {}", dt / 2.0),
            format!("halving ratio {ratio:.3} (first order: about 2)"),
            format!("largest violation of tau/M <= t <= tau/m: {bound:.2e}"),
        ];
        let ok = coarse <= 1e-3 && ratio >= 1.6 && bound <= 1e-12;
        Ok(Outcome::check(ok, coarse, 1e-3, detail))
    }

    fn lyapunov_descent(&self) -> Result<Outcome> {
        let cfg = self.model_at(6.0)?;
        let grid = self.grid()?;
        for i in 0..5u64 {
            let u0 = dynamics::random_smooth_state(grid, self.config.seed + 100 + i, 0.5);
            let semi = dynamics::integrate_semilinear(&u0, &cfg, 2.0, FlowOptions::default())?;
            let quasi = dynamics::integrate_quasilinear(&u0, &cfg, 2.0, FlowOptions::default())?;
            self.log_trajectory(format!("random semilinear {i}"), &semi);
            self.log_trajectory(format!("random quasilinear {i}"), &quasi);
        }
        let log = self.lyapunov_log.lock().unwrap_or_else(|p| p.into_inner());
        let (label, worst) = log
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
            .cloned()
            .expect("at least the local trajectories are logged");
        let detail = vec![
            format!("{} trajectories audited", log.len()),
            format!("largest single-step increase {worst:.2e} ({label})"),
        ];
        Ok(Outcome::check(worst <= 1e-8, worst, 1e-8, detail))
    }

    fn decay_rates(&self) -> Result<Outcome> {
        let grid = self.grid()?;
        let mut detail = Vec::new();

        let cfg = self.model_at(0.5)?;
        let zero = Equilibrium::zero(&cfg, grid);
        let expected = (cfg.lambda() / cfg.a0() - 1.0).abs();
        let u0 = dynamics::random_smooth_state(grid, self.config.seed, 0.5);
        let opts = FlowOptions::default().stride(10);
        let semi = dynamics::integrate_semilinear(&u0, &cfg, 40.0, opts)?;
        let quasi = dynamics::integrate_quasilinear(&u0, &cfg, 40.0, opts)?;
        self.log_trajectory("decay to 0, semilinear".into(), &semi);
        self.log_trajectory("decay to 0, quasilinear".into(), &quasi);
        let semi_rate = dynamics::decay_rate(&semi, &zero, 0.5)?;
        let quasi_rate = dynamics::decay_rate(&quasi, &zero, 0.5)?;
        let err_zero = (semi_rate.beta - expected).abs() / expected;
        let (m, upper) = (cfg.diffusion.lower(), cfg.diffusion.upper());
        let band = (0.85 * m * semi_rate.beta, 1.15 * upper * semi_rate.beta);
        let in_band = quasi_rate.beta >= band.0 && quasi_rate.beta <= band.1;
        detail.push(format!(
            "to 0 at lambda = {}: beta = {:.5} vs {:.5} (relative error {:.2e})",
            cfg.lambda(),
            semi_rate.beta,
            expected,
            err_zero
        ));
        detail.push(format!(
            "quasilinear beta = {:.5}, band [{:.5}, {:.5}]",
            quasi_rate.beta, band.0, band.1
        ));

        let cfg = self.model_at(6.0)?;
        let phi1 = equilibria::solve_equilibrium(&cfg, 1, 1, grid)?;
        let leading = spectral::kth_largest(&spectral::assemble(&spectral::linearization(&phi1, &cfg)), 1)?;
        let pert = GridFunction::from_fn(grid, |x| 0.05 * (x.sin() + (2.0 * x).sin()));
        let u0 = phi1.phi.add(&pert)?;
        let tau_end = 40.0 / leading.abs();
        let semi = dynamics::integrate_semilinear(&u0, &cfg, tau_end, opts)?;
        self.log_trajectory("decay to phi1, semilinear".into(), &semi);
        let rate = dynamics::decay_rate(&semi, &phi1, 0.5)?;
        let err_phi1 = (rate.beta - leading.abs()).abs() / leading.abs();
        detail.push(format!(
            "to phi1 at lambda = {}: beta = {:.5} vs |mu_1| = {:.5} (relative error {:.2e})",
            cfg.lambda(),
            rate.beta,
            leading.abs(),
            err_phi1
        ));
        let worst = err_zero.max(err_phi1);
        Ok(Outcome::check(worst <= 0.15 && in_band, worst, 0.15, detail))
    }

    fn connections(&self) -> Result<Outcome> {
        let cfg = self.model_at(6.0)?;
        let grid = self.grid()?;
        let eqs = equilibria::enumerate_equilibria(&cfg, grid)?;
        let mut detail = Vec::new();
        let mut ok = true;
        let mut phi2_targets = std::collections::BTreeSet::new();
        for eq in &eqs {
            let op = spectral::assemble(&spectral::linearization(eq, &cfg));
            let lead = spectral::eigenpairs(&op, EigenCount::Top(1))?;
            let dir = &lead.eigenvectors[0];
            for delta in [1e-3, -1e-3] {
                match dynamics::unstable_probe(eq, dir, delta, &cfg, &eqs, ProbeOptions::default()) {
                    Ok(report) => {
                        self.log_trajectory(format!("probe {} {delta:+}", eq.label()), &report.trajectory);
                        if eq.mode == 2 && eq.sign > 0 {
                            phi2_targets.insert(report.target.clone());
                        }
                        detail.push(format!(
                            "{} {:+e}: settled at {} (t = {:.3})",
                            eq.label(),
                            delta,
                            report.target,
                            report.settle_time
                        ));
                    }
                    Err(e) => {
                        ok = false;
                        detail.push(format!("{} {delta:+e}: {e}", eq.label()));
                    }
                }
            }
        }
        ok &= phi2_targets.len() >= 2;
        detail.push(format!("targets from phi2+: {:?}", phi2_targets));
        Ok(Outcome::check(ok, phi2_targets.len() as f64, 2.0, detail))
    }

    fn configured_hyperbolicity(&self) -> Result<Outcome> {
        let cfg = &self.config.model;
        let grid = self.grid()?;
        let exceptional = {
            let ratio = cfg.lambda() / cfg.a0();
            let k = ratio.sqrt().round();
            k >= 1.0 && (ratio - k * k).abs() <= 1e-12 * ratio
        };
        let mut detail = Vec::new();
        let mut status = Status::Pass;
        let mut min_gap = f64::INFINITY;
        for eq in equilibria::enumerate_equilibria(cfg, grid)? {
            let report = spectral::classify(&eq, cfg, self.config.margin_tol)?;
            min_gap = min_gap.min(report.spectral_gap);
            let entry = format!("{}: {:?}, gap {:.3e}", report.equilibrium, report.classification, report.spectral_gap);
            if report.classification == Classification::MarginCase {
                if eq.mode == 0 && exceptional {
                    status = Status::Margin;
                    detail.push(format!("{entry} (expected exception at lambda = a(0)N^2)"));
                    continue;
                }
                return Ok(Outcome::check(false, report.spectral_gap, self.config.margin_tol, vec![entry]));
            }
            detail.push(entry);
        }
        Ok(Outcome { status, measured: min_gap, tolerance: self.config.margin_tol, detail })
    }
}

struct Outcome {
    status: Status,
    measured: f64,
    tolerance: f64,
    detail: Vec<String>,
}

impl Outcome {
    fn check(ok: bool, measured: f64, tolerance: f64, detail: Vec<String>) -> Self {
        Self { status: if ok { Status::Pass } else { Status::Fail }, measured, tolerance, detail }
    }
}

/// Same-parity indices where `∫ f(φ_j) u_k` has no symmetry reason to vanish.
fn forced_nonzero(j: usize, k: usize) -> bool {
    match j {
        2 => k % 4 == 2,
        3 => k % 6 == 3,
        _ => false,
    }
}

/// Runtime verdict without the measured time, which would make reports
/// differ between identical runs.
fn runtime_note(secs: f64, limit: f64) -> String {
    if secs < limit {
        format!("runtime within the {limit}s limit")
    } else {
        format!("runtime exceeded the {limit}s limit")
    }
}

fn gap_list(rows: &[spectral::GapRow]) -> String {
    rows.iter().map(|r| format!("{:.6} (n={})", r.gap, r.n)).collect::<Vec<_>>().join(", ")
}

fn ok_word(rows: &[combinatorics::DetRow]) -> String {
    let bad: Vec<usize> = rows.iter().filter(|r| !r.ok).map(|r| r.index).collect();
    if bad.is_empty() {
        format!("{} exact matches", rows.len())
    } else {
        format!("mismatch at {bad:?}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coarse_grid_flags_resolution() {
        let suite = Suite::new(SuiteConfig { grid_n: 3, ..SuiteConfig::default() });
        let claim = suite.run("AC03");
        assert_eq!(claim.status, Status::Margin);
        assert!(claim.detail[0].contains("insufficient resolution"));
        assert_eq!(suite.run("AC09").status, Status::Pass);
    }

    #[test]
    fn unknown_claim_fails() {
        let suite = Suite::new(SuiteConfig::default());
        assert_eq!(suite.run("AC99").status, Status::Fail);
    }

    #[test]
    fn ids_are_unique() {
        let ids = Suite::ids();
        let set: std::collections::BTreeSet<_> = ids.iter().collect();
        assert_eq!(set.len(), ids.len());
    }
}
