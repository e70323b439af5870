use std::f64::consts::PI;

use nlci_core::dynamics::{
    integrate_quasilinear, integrate_semilinear, random_smooth_state, time_change_map, unstable_probe,
    FlowOptions, ProbeOptions,
};
use nlci_core::equilibria::{enumerate_equilibria, solve_equilibrium};
use nlci_core::model::lyapunov;
use nlci_core::{build_grid, GridFunction, ModelConfig};
use proptest::prelude::*;

#[test]
fn odd_symmetry_is_bitwise() {
    let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
    let g = build_grid(127).unwrap();
    let u0 = random_smooth_state(g, 7, 0.5);
    let opts = FlowOptions::default().stride(50);
    for flow in [integrate_semilinear, integrate_quasilinear] {
        let a = flow(&u0, &cfg, 0.5, opts).unwrap();
        let b = flow(&u0.neg(), &cfg, 0.5, opts).unwrap();
        for (x, y) in a.states.iter().zip(&b.states) {
            for (p, q) in x.values().iter().zip(y.values()) {
                assert_eq!(p.to_bits(), (-q).to_bits());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn flows_stay_bounded_and_descend(seed in 0u64..1000, amplitude in 0.1f64..2.0) {
        let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
        let g = build_grid(127).unwrap();
        let u0 = random_smooth_state(g, seed, amplitude);
        let bound = u0.sup_norm().max(1.0) * (1.0 + 1e-9);
        for flow in [integrate_semilinear, integrate_quasilinear] {
            let traj = flow(&u0, &cfg, 1.0, FlowOptions::default().stride(20)).unwrap();
            prop_assert!(traj.states.iter().all(|s| s.sup_norm() <= bound));
            prop_assert!(traj.max_lyapunov_increase <= 1e-10);
        }
    }
}

fn drift(eq: &nlci_core::equilibria::Equilibrium, cfg: &ModelConfig, t: f64) -> f64 {
    let opts = FlowOptions::default().stride(100);
    [integrate_semilinear, integrate_quasilinear]
        .iter()
        .map(|flow| {
            let traj = flow(&eq.phi, cfg, t, opts).unwrap();
            traj.states.iter().map(|s| s.sub(&eq.phi).unwrap().sup_norm()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

#[test]
fn stable_equilibrium_is_resident() {
    let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
    let eq = solve_equilibrium(&cfg, 1, 1, build_grid(1023).unwrap()).unwrap();
    assert!(drift(&eq, &cfg, 10.0) < 1e-6);
}

#[test]
fn every_equilibrium_is_resident_on_short_horizons() {
    let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
    for eq in enumerate_equilibria(&cfg, build_grid(1023).unwrap()).unwrap() {
        assert!(drift(&eq, &cfg, 1.0) < 1e-6, "{}", eq.label());
    }
}

#[test]
fn lyapunov_converges_at_second_order() {
    let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
    // V(sin) = ½ Q(π/2) − λ (π/4 − 3π/32)
    let exact = 0.5 * cfg.diffusion.antiderivative(PI / 2.0) - 6.0 * (PI / 4.0 - 3.0 * PI / 32.0);
    let mut prev = f64::NAN;
    for n in [1023usize, 2047, 4095, 8191] {
        let g = build_grid(n).unwrap();
        let err = (lyapunov(&GridFunction::from_fn(g, f64::sin), &cfg) - exact).abs() / exact.abs();
        assert!(err <= 20.0 * g.h() * g.h(), "n = {n}: {err}");
        if prev.is_finite() {
            assert!((3.2..=4.8).contains(&(prev / err)), "n = {n}: ratio {}", prev / err);
        }
        prev = err;
    }
}

#[test]
fn time_change_is_monotone_and_bounded() {
    let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
    let g = build_grid(255).unwrap();
    let traj = integrate_semilinear(&random_smooth_state(g, 3, 0.5), &cfg, 1.0, FlowOptions::default()).unwrap();
    let map = time_change_map(&traj, &cfg).unwrap();
    assert!(map.t.windows(2).all(|w| w[1] > w[0]));
    assert!(map.bound_violation(cfg.diffusion.lower(), cfg.diffusion.upper()) <= 1e-12);
    let quasi = integrate_quasilinear(&random_smooth_state(g, 3, 0.5), &cfg, 0.1, FlowOptions::default()).unwrap();
    assert!(time_change_map(&quasi, &cfg).is_err());
}

#[test]
fn probe_rejects_large_perturbations() {
    let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
    let g = build_grid(127).unwrap();
    let eqs = enumerate_equilibria(&cfg, g).unwrap();
    let dir = GridFunction::from_fn(g, f64::sin);
    assert!(unstable_probe(&eqs[0], &dir, 0.1, &cfg, &eqs, ProbeOptions::default()).is_err());
    assert!(unstable_probe(&eqs[0], &dir, 0.0, &cfg, &eqs, ProbeOptions::default()).is_err());
    let report = unstable_probe(&eqs[0], &dir, 1e-3, &cfg, &eqs, ProbeOptions::default()).unwrap();
    assert_eq!(report.target, "phi1+");
}
