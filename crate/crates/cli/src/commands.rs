//! One function per subcommand. Each writes its artifacts into the output
//! directory and returns a short human-readable summary.

use anyhow::{anyhow, bail, Context, Result};
use nlci_core::combinatorics;
use nlci_core::dynamics::{self, FlowOptions, Formulation, ProbeOptions};
use nlci_core::equilibria::{self, Equilibrium, InvariantReport};
use nlci_core::grid::h1_seminorm_sq;
use nlci_core::model::lyapunov;
use nlci_core::spectral::{self, EigenCount, StabilityReport};
use nlci_core::verify::{Suite, SuiteConfig, VerificationReport};
use nlci_core::{build_grid, Grid, GridFunction, ModelConfig};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{InitialState, RunConfig};
use crate::output::{OutDir, Table};
use crate::plot::{self, Artifact};

/// Result of a subcommand: printed lines and whether it succeeded.
#[derive(Debug, Default)]
pub struct Outcome {
    pub lines: Vec<String>,
    pub warnings: Vec<String>,
    pub success: bool,
}

impl Outcome {
    fn ok(lines: Vec<String>) -> Self {
        Self { lines, warnings: Vec::new(), success: true }
    }

    fn merge(&mut self, other: Outcome) {
        self.lines.extend(other.lines);
        self.warnings.extend(other.warnings);
        self.success &= other.success;
    }

    fn plots(&mut self, out: &OutDir, artifacts: &[Artifact]) -> Result<()> {
        let p = plot::emit_plots(out, artifacts)?;
        self.lines.extend(p.written.iter().map(|w| format!("wrote {}", w.display())));
        self.warnings.extend(p.warnings);
        Ok(())
    }
}

struct Setup {
    model: ModelConfig,
    grid: Grid,
}

fn setup(cfg: &RunConfig) -> Result<Setup> {
    let model = cfg.model()?;
    let grid = build_grid(cfg.grid_n)?;
    Ok(Setup { model, grid })
}

#[derive(Serialize)]
struct EquilibriumEntry<'a> {
    label: String,
    #[serde(flatten)]
    equilibrium: &'a Equilibrium,
    max_abs: f64,
    invariants: InvariantReport,
}

pub fn equilibria(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let Setup { model, grid } = setup(cfg)?;
    let eqs = equilibria::enumerate_equilibria(&model, grid)?;
    let mut summary = Table::new(["label", "mode", "sign", "c", "mu", "residual", "max_abs", "invariants_ok"]);
    let mut entries = Vec::new();
    for eq in &eqs {
        let invariants = eq.check(&model);
        summary.push(vec![
            eq.label().into(),
            eq.mode.into(),
            i64::from(eq.sign).into(),
            eq.c.into(),
            eq.mu.into(),
            eq.residual.into(),
            eq.max_abs().into(),
            invariants.all_ok().into(),
        ]);
        let mut profile = Table::new(["x", "phi"]);
        profile.push(vec![0.0.into(), 0.0.into()]);
        for (x, v) in grid.nodes().zip(eq.phi.values()) {
            profile.push(vec![x.into(), (*v).into()]);
        }
        profile.push(vec![grid.length().into(), 0.0.into()]);
        out.write_table(&plot::profile_file(&eq.label()), &profile)?;
        entries.push(EquilibriumEntry { label: eq.label(), equilibrium: eq, max_abs: eq.max_abs(), invariants });
    }
    out.write_table("equilibria.csv", &summary)?;
    out.write_json("equilibria.json", &entries)?;
    let bad = entries.iter().filter(|e| !e.invariants.all_ok()).count();
    let mut outcome = Outcome::ok(vec![format!(
        "{} equilibria at lambda = {} on n = {} ({} with violated invariants)",
        eqs.len(),
        model.lambda(),
        grid.n(),
        bad
    )]);
    let mut artifacts = vec![Artifact::Profiles];
    if !cfg.lambda_sweep.is_empty() {
        bifurcation(&model, grid, &cfg.lambda_sweep, out)?;
        outcome.lines.push(format!("bifurcation table over {} lambda values", cfg.lambda_sweep.len()));
        artifacts.push(Artifact::Bifurcation);
    }
    outcome.plots(out, &artifacts)?;
    Ok(outcome)
}

fn bifurcation(model: &ModelConfig, grid: Grid, sweep: &[f64], out: &OutDir) -> Result<()> {
    let rows: Vec<Vec<(f64, Equilibrium)>> = sweep
        .par_iter()
        .map(|&lambda| {
            let m = model.with_lambda(lambda)?;
            let eqs = equilibria::enumerate_equilibria(&m, grid)?;
            Ok(eqs.into_iter().map(|e| (lambda, e)).collect())
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(["lambda", "label", "mode", "c", "max_abs"]);
    for (lambda, eq) in rows.into_iter().flatten() {
        table.push(vec![lambda.into(), eq.label().into(), eq.mode.into(), eq.c.into(), eq.max_abs().into()]);
    }
    out.write_table("bifurcation.csv", &table)?;
    Ok(())
}

pub fn spectrum(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let Setup { model, grid } = setup(cfg)?;
    let eqs = equilibria::enumerate_equilibria(&model, grid)?;
    let results: Vec<(String, spectral::Spectrum, StabilityReport)> = eqs
        .par_iter()
        .map(|eq| {
            let op = spectral::assemble(&spectral::linearization(eq, &model));
            let s = spectral::eigenpairs(&op, EigenCount::Top(cfg.spectrum_count))?;
            let report = spectral::classify(eq, &model, cfg.tolerances.margin)?;
            Ok((eq.label(), s, report))
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(["label", "index", "value", "residual", "simple"]);
    let mut lines = Vec::new();
    for (label, s, report) in &results {
        for k in 0..s.len() {
            table.push(vec![
                label.as_str().into(),
                (k + 1).into(),
                s.eigenvalues[k].into(),
                s.residuals[k].into(),
                s.simple[k].into(),
            ]);
        }
        lines.push(format!("{label}: {:?}, gap {:.6e}", report.classification, report.spectral_gap));
    }
    out.write_table("spectrum.csv", &table)?;
    let reports: Vec<&StabilityReport> = results.iter().map(|r| &r.2).collect();
    out.write_json("stability.json", &reports)?;
    Ok(Outcome::ok(lines))
}

#[derive(Serialize)]
struct ScanSummary {
    label: String,
    epsilon_j: f64,
    max_decrease: f64,
    interlacing_violation: f64,
    monotone: bool,
}

pub fn scan(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let Setup { model, grid } = setup(cfg)?;
    let eqs: Vec<Equilibrium> = equilibria::enumerate_equilibria(&model, grid)?
        .into_iter()
        .filter(|e| e.mode >= 2 && e.sign > 0)
        .collect();
    if eqs.is_empty() {
        let mut o = Outcome::ok(Vec::new());
        o.warnings.push(format!("no sign-changing equilibria at lambda = {}", model.lambda()));
        return Ok(o);
    }
    let results: Vec<(String, spectral::EpsilonScan, f64)> = eqs
        .par_iter()
        .map(|eq| {
            let spec = spectral::linearization(eq, &model);
            let eps = match &cfg.scan.epsilons {
                Some(list) => list.clone(),
                None => {
                    let last = (cfg.scan.points - 1) as f64;
                    let (a, b) = if spec.epsilon <= 0.0 { (2.0 * spec.epsilon, 0.0) } else { (0.0, 2.0 * spec.epsilon) };
                    (0..cfg.scan.points).map(|i| a + (b - a) * i as f64 / last).collect()
                }
            };
            let scan = spectral::epsilon_scan(&spec, &eps, cfg.scan.track)?;
            Ok((eq.label(), scan, spec.epsilon))
        })
        .collect::<Result<_>>()?;
    let mut summaries = Vec::new();
    let mut lines = Vec::new();
    for (label, scan, eps_j) in &results {
        let mut header = vec!["epsilon".to_string()];
        header.extend((1..=cfg.scan.track).map(|k| format!("mu_{k}")));
        let mut table = Table::new(header);
        for (e, row) in scan.epsilons.iter().zip(&scan.rows) {
            let mut cells = vec![(*e).into()];
            cells.extend(row.iter().map(|&v| v.into()));
            cells.resize_with(cfg.scan.track + 1, || f64::NAN.into());
            table.push(cells);
        }
        out.write_table(&format!("scan_{}.csv", plot::file_stem(label)), &table)?;
        let s = ScanSummary {
            label: label.clone(),
            epsilon_j: *eps_j,
            max_decrease: scan.max_decrease,
            interlacing_violation: scan.interlacing_violation(),
            monotone: scan.is_monotone(1e-8),
        };
        lines.push(format!("{label}: max decrease {:.3e}, monotone {}", s.max_decrease, s.monotone));
        summaries.push(s);
    }
    out.write_json("scan.json", &summaries)?;
    let mut outcome = Outcome::ok(lines);
    outcome.plots(out, &[Artifact::Scans])?;
    Ok(outcome)
}

fn find_equilibrium<'a>(eqs: &'a [Equilibrium], label: &str) -> Result<&'a Equilibrium> {
    eqs.iter().find(|e| e.label() == label).ok_or_else(|| {
        let known: Vec<String> = eqs.iter().map(Equilibrium::label).collect();
        anyhow!("no equilibrium labelled {label}; available: {}", known.join(", "))
    })
}

fn leading_direction(eq: &Equilibrium, model: &ModelConfig, k: usize) -> Result<Option<GridFunction>> {
    let op = spectral::assemble(&spectral::linearization(eq, model));
    if k > op.dim() {
        return Ok(None);
    }
    let s = spectral::eigenpairs(&op, EigenCount::Top(k))?;
    Ok(s.eigenvectors.into_iter().nth(k - 1))
}

#[derive(Serialize)]
struct FlowSummary {
    formulation: Formulation,
    dt: f64,
    steps: usize,
    samples: usize,
    max_lyapunov_increase: f64,
    final_nearest: String,
    final_distance: f64,
}

pub fn flow(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let Setup { model, grid } = setup(cfg)?;
    let eqs = equilibria::enumerate_equilibria(&model, grid)?;
    let u0 = match &cfg.flow.initial {
        InitialState::Random { amplitude } => dynamics::random_smooth_state(grid, cfg.seed, *amplitude),
        InitialState::Equilibrium { label, delta } => {
            let eq = find_equilibrium(&eqs, label)?;
            let dir = leading_direction(eq, &model, 1)?.context("grid too small for an eigenvector")?;
            eq.phi.axpy(*delta, &dir)?
        }
    };
    let opts = FlowOptions { dt: cfg.flow.dt, stride: cfg.flow.stride };
    let traj = match cfg.flow.formulation.into() {
        Formulation::Semilinear => dynamics::integrate_semilinear(&u0, &model, cfg.flow.t_end, opts)?,
        Formulation::Quasilinear => dynamics::integrate_quasilinear(&u0, &model, cfg.flow.t_end, opts)?,
    };
    let nearest = |u: &GridFunction| -> (String, f64) {
        eqs.iter()
            .map(|e| (e.label(), h1_seminorm_sq(&u.sub(&e.phi).expect("same grid")).sqrt()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("the zero equilibrium always exists")
    };
    let mut table = Table::new(["time", "sup_norm", "lyapunov", "seminorm", "nearest", "distance"]);
    for (i, state) in traj.states.iter().enumerate() {
        let (label, dist) = nearest(state);
        table.push(vec![
            traj.times[i].into(),
            state.sup_norm().into(),
            traj.lyapunov[i].into(),
            traj.seminorms[i].into(),
            label.into(),
            dist.into(),
        ]);
        if cfg.flow.snapshots {
            let mut snap = Table::new(["x", "u"]);
            for (x, v) in grid.nodes().zip(state.values()) {
                snap.push(vec![x.into(), (*v).into()]);
            }
            out.write_table(&format!("snapshot_{i:05}.csv"), &snap)?;
        }
    }
    out.write_table("flow.csv", &table)?;
    let (final_nearest, final_distance) = nearest(traj.final_state());
    let summary = FlowSummary {
        formulation: traj.formulation,
        dt: traj.dt,
        steps: traj.steps,
        samples: traj.len(),
        max_lyapunov_increase: traj.max_lyapunov_increase,
        final_nearest,
        final_distance,
    };
    out.write_json("flow.json", &summary)?;
    debug_assert!((lyapunov(&u0, &model) - traj.lyapunov[0]).abs() <= 1e-12 * (1.0 + traj.lyapunov[0].abs()));
    let mut outcome = Outcome::ok(vec![format!(
        "{:?} flow: {} steps of {:.3e}, final state nearest {} (H1 distance {:.3e}), max Lyapunov increase {:.3e}",
        summary.formulation,
        summary.steps,
        summary.dt,
        summary.final_nearest,
        summary.final_distance,
        summary.max_lyapunov_increase
    )]);
    outcome.plots(out, &[Artifact::Lyapunov])?;
    Ok(outcome)
}

#[derive(Serialize)]
struct Edge {
    from: String,
    to: String,
    direction: usize,
    delta: f64,
    escape_time: Option<f64>,
    settle_time: f64,
    final_distance: f64,
}

#[derive(Serialize)]
struct Unresolved {
    from: String,
    direction: usize,
    delta: f64,
    reason: String,
}

#[derive(Serialize)]
struct ConnectionReport {
    lambda: f64,
    grid_n: usize,
    equilibria: Vec<String>,
    edges: Vec<Edge>,
    unresolved: Vec<Unresolved>,
}

pub fn probe(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let Setup { model, grid } = setup(cfg)?;
    let eqs = equilibria::enumerate_equilibria(&model, grid)?;
    let jobs: Vec<(usize, usize, f64)> = (0..eqs.len())
        .flat_map(|i| {
            cfg.probe.directions.iter().flat_map(move |&k| [(i, k, cfg.probe.delta), (i, k, -cfg.probe.delta)])
        })
        .collect();
    let opts = ProbeOptions {
        t_max: cfg.probe.t_max,
        settle_distance: cfg.tolerances.settle,
        ..ProbeOptions::default()
    };
    let results: Vec<std::result::Result<Edge, Unresolved>> = jobs
        .par_iter()
        .map(|&(i, k, delta)| {
            let eq = &eqs[i];
            let unresolved = |reason: String| Unresolved { from: eq.label(), direction: k, delta, reason };
            let dir = match leading_direction(eq, &model, k) {
                Ok(Some(d)) => d,
                Ok(None) => return Err(unresolved(format!("no eigenvector {k} on this grid"))),
                Err(e) => return Err(unresolved(e.to_string())),
            };
            match dynamics::unstable_probe(eq, &dir, delta, &model, &eqs, opts) {
                Ok(r) => Ok(Edge {
                    from: eq.label(),
                    to: r.target,
                    direction: k,
                    delta,
                    escape_time: r.escape_time,
                    settle_time: r.settle_time,
                    final_distance: r.final_distance,
                }),
                Err(e) => Err(unresolved(e.to_string())),
            }
        })
        .collect();
    let mut report = ConnectionReport {
        lambda: model.lambda(),
        grid_n: grid.n(),
        equilibria: eqs.iter().map(Equilibrium::label).collect(),
        edges: Vec::new(),
        unresolved: Vec::new(),
    };
    for r in results {
        match r {
            Ok(e) => report.edges.push(e),
            Err(u) => report.unresolved.push(u),
        }
    }
    out.write_json("probes.json", &report)?;
    let mut lines: Vec<String> = report
        .edges
        .iter()
        .map(|e| format!("{} ({:+e} along u_{}) -> {}", e.from, e.delta, e.direction, e.to))
        .collect();
    lines.extend(report.unresolved.iter().map(|u| format!("{} ({:+e} along u_{}) unresolved: {}", u.from, u.delta, u.direction, u.reason)));
    Ok(Outcome::ok(lines))
}

pub fn suite_config(cfg: &RunConfig) -> Result<SuiteConfig> {
    Ok(SuiteConfig {
        model: cfg.model()?,
        grid_n: cfg.grid_n,
        seed: cfg.seed,
        det_max_n: cfg.max_n,
        det_max_j: cfg.max_j,
        margin_tol: cfg.tolerances.margin,
    })
}

/// Runs the claims in parallel; the Lyapunov audit runs last.
pub fn run_verify(cfg: &RunConfig) -> Result<VerificationReport> {
    let suite = Suite::new(suite_config(cfg)?);
    let mut claims: Vec<_> = Suite::independent_ids().par_iter().map(|id| suite.run(id)).collect();
    claims.push(suite.run("AC11"));
    Ok(suite.report(claims))
}

pub fn verify(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let report = run_verify(cfg)?;
    out.write_json("verification.json", &report)?;
    let text = report.to_text();
    out.write_bytes("verification.txt", text.as_bytes())?;
    Ok(Outcome { lines: text.lines().map(str::to_string).collect(), warnings: Vec::new(), success: report.passed() })
}

pub fn verify_determinants(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let an = combinatorics::an_table(cfg.max_n)?;
    let l = combinatorics::tridiag_table(cfg.max_j)?;
    let rec = combinatorics::recurrence_table(cfg.max_n)?;
    let mut table = Table::new(["identity", "index", "det", "expected", "ok"]);
    let mut lines = Vec::new();
    for (name, rows) in [("det_A_n", &an), ("det_L", &l), ("recurrence", &rec)] {
        for r in rows {
            table.push(vec![
                name.into(),
                r.index.into(),
                r.det.as_str().into(),
                r.expected.as_str().into(),
                r.ok.into(),
            ]);
            lines.push(format!("{name:<10} {:>3}  {:>8}  {:>8}  {}", r.index, r.det, r.expected, if r.ok { "pass" } else { "FAIL" }));
        }
    }
    out.write_table("determinants.csv", &table)?;
    let success = an.iter().chain(&l).chain(&rec).all(|r| r.ok);
    Ok(Outcome { lines, warnings: Vec::new(), success })
}

/// Every artifact plus the verification report and all plots.
pub fn report(cfg: &RunConfig, out: &OutDir) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    if cfg.lambda_sweep.is_empty() {
        let a0 = cfg.model()?.a0();
        cfg.lambda_sweep = (1..=48).map(|i| 0.25 * i as f64 * a0).collect();
    }
    let mut outcome = Outcome::ok(Vec::new());
    for step in [equilibria, spectrum, scan, flow, probe] {
        outcome.merge(step(&cfg, out)?);
    }
    outcome.merge(verify(&cfg, out)?);
    Ok(outcome)
}

/// Guards the output directory against obviously wrong targets.
pub fn check_out_dir(path: &std::path::Path) -> Result<()> {
    if path.is_file() {
        bail!("output path {} is a file", path.display());
    }
    Ok(())
}
