use std::f64::consts::PI;

use nlci_core::equilibria::{
    enumerate_equilibria, outer_map, shoot, solve_equilibrium, solve_mode, zero_count,
};
use nlci_core::grid::h1_seminorm_sq;
use nlci_core::{build_grid, ModelConfig, NonlinearitySpec};

/// Continuous first half-arch of `φ'' + μ f(φ) = 0` by RK4: returns the
/// first positive zero and `∫ φ'²` up to it.
fn arch(f: &NonlinearitySpec, mu: f64, s: f64, dx: f64) -> (f64, f64) {
    let rhs = |y: [f64; 2]| [y[1], -mu * f.value(y[0])];
    let mut y = [0.0, s];
    let mut x = 0.0;
    let mut energy = 0.0;
    loop {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * dx * k1[0], y[1] + 0.5 * dx * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * dx * k2[0], y[1] + 0.5 * dx * k2[1]]);
        let k4 = rhs([y[0] + dx * k3[0], y[1] + dx * k3[1]]);
        let next = [
            y[0] + dx / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
            y[1] + dx / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
        ];
        if next[0] <= 0.0 && x > 0.0 {
            let frac = y[0] / (y[0] - next[0]);
            let slope = y[1] + frac * (next[1] - y[1]);
            energy += 0.5 * frac * dx * (y[1] * y[1] + slope * slope);
            return (x + frac * dx, energy);
        }
        energy += 0.5 * dx * (y[1] * y[1] + next[1] * next[1]);
        y = next;
        x += dx;
    }
}

/// `‖φ_j'‖²` of the continuous `j`-mode at `μ`.
fn continuous_seminorm(f: &NonlinearitySpec, mu: f64, j: usize, dx: f64) -> f64 {
    let target = PI / j as f64;
    let (mut lo, mut hi) = (1e-6, (mu / 2.0).sqrt() * (1.0 - 1e-12));
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if arch(f, mu, mid, dx).0 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    j as f64 * arch(f, mu, 0.5 * (lo + hi), dx).1
}

/// Continuous fixed point `c = ‖φ_j'‖²` at `μ = λ/a(c)`.
fn continuous_c(cfg: &ModelConfig, j: usize, dx: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, continuous_seminorm(&cfg.nonlinearity, cfg.lambda() / cfg.a0(), j, dx));
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        let mu = cfg.lambda() / cfg.diffusion.value(mid);
        if continuous_seminorm(&cfg.nonlinearity, mu, j, dx) > mid {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn seminorm_agrees_with_continuous_oracle() {
    let cfg = ModelConfig::default_nonlocal(12.0).unwrap();
    let grid = build_grid(1023).unwrap();
    for j in 1..=3 {
        let coarse = continuous_c(&cfg, j, 2e-4);
        let fine = continuous_c(&cfg, j, 1e-4);
        assert!((coarse - fine).abs() < 1e-6 * fine, "oracle not converged for j = {j}");
        let eq = solve_equilibrium(&cfg, j, 1, grid).unwrap();
        let rel = (eq.c - fine).abs() / fine;
        assert!(rel < 1e-3, "j = {j}: discrete c = {}, continuous {fine}", eq.c);
    }
}

#[test]
fn outer_map_has_one_sign_change() {
    let cfg = ModelConfig::default_nonlocal(12.0).unwrap();
    let grid = build_grid(255).unwrap();
    for j in 1..=3 {
        let eq = solve_equilibrium(&cfg, j, 1, grid).unwrap();
        let samples: Vec<f64> =
            (1..=40).map(|i| outer_map(&cfg, j, 0.25 * i as f64, grid).unwrap()).collect();
        let changes = samples.windows(2).filter(|w| w[0] > 0.0 && w[1] <= 0.0).count();
        assert_eq!(changes, 1, "j = {j}");
        assert!(samples.windows(2).all(|w| w[1] < w[0]), "G not decreasing for j = {j}");
        let i = samples.iter().position(|&g| g <= 0.0).unwrap();
        assert!(eq.c > 0.25 * i as f64 && eq.c <= 0.25 * (i + 1) as f64);
    }
}

#[test]
fn higher_modes_are_rescaled_first_modes() {
    let f = NonlinearitySpec::cubic();
    let mu = 12.0;
    let two = solve_mode(&f, mu, 2, build_grid(1023).unwrap()).unwrap();
    let one = solve_mode(&f, mu / 4.0, 1, build_grid(511).unwrap()).unwrap();
    let scale = one.sup_norm();
    for i in 0..511 {
        assert!((two.values()[i] - one.values()[i]).abs() < 1e-8 * scale, "node {i}");
        assert!((two.values()[1022 - i] + one.values()[i]).abs() < 1e-8 * scale, "node {i}");
    }
    assert!(two.values()[511].abs() < 1e-8 * scale);
}

#[test]
fn negative_branch_is_exact_negation() {
    let cfg = ModelConfig::default_nonlocal(12.0).unwrap();
    let eqs = enumerate_equilibria(&cfg, build_grid(255).unwrap()).unwrap();
    assert_eq!(eqs.len(), 7);
    for pair in eqs[1..].chunks(2) {
        assert_eq!(pair[0].mode, pair[1].mode);
        for (a, b) in pair[0].phi.values().iter().zip(pair[1].phi.values()) {
            assert_eq!(a.to_bits(), (-b).to_bits());
        }
        assert_eq!(pair[0].c, pair[1].c);
    }
}

#[test]
fn counts_across_lambda() {
    let grid = build_grid(1023).unwrap();
    for (lambda, count) in [(0.5, 1), (2.0, 3), (6.0, 5), (12.0, 7)] {
        let cfg = ModelConfig::default_nonlocal(lambda).unwrap();
        let eqs = enumerate_equilibria(&cfg, grid).unwrap();
        assert_eq!(eqs.len(), count, "lambda = {lambda}");
        for eq in &eqs {
            let report = eq.check(&cfg);
            assert!(report.all_ok(), "{} at lambda = {lambda}: {report:?}", eq.label());
        }
    }
}

#[test]
fn mode_at_threshold_does_not_exist() {
    let cfg = ModelConfig::default_nonlocal(4.0).unwrap();
    assert!(solve_equilibrium(&cfg, 2, 1, build_grid(255).unwrap()).is_err());
    assert_eq!(cfg.max_mode(), 1);
}

#[test]
fn classical_case_zero_counts() {
    let cfg = ModelConfig::classical(20.0).unwrap();
    let grid = build_grid(511).unwrap();
    for j in 1..=4 {
        let eq = solve_equilibrium(&cfg, j, 1, grid).unwrap();
        assert_eq!(zero_count(&eq.phi), j + 1);
        assert!(eq.check(&cfg).all_ok(), "j = {j}: {:?}", eq.check(&cfg));
        assert!((h1_seminorm_sq(&eq.phi) - eq.c).abs() < 1e-8 * (1.0 + eq.c));
    }
}

#[test]
fn shooting_reports_divergence() {
    let f = NonlinearitySpec::cubic();
    assert!(shoot(&f, 4.0, 10.0, build_grid(255).unwrap()).is_err());
    let ok = shoot(&f, 4.0, 1e-3, build_grid(255).unwrap()).unwrap();
    assert!(ok.zero_count >= 2);
}
