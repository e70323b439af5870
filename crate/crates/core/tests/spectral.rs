use nalgebra::{DMatrix, SymmetricEigen};
use nlci_core::equilibria::{solve_equilibrium, Equilibrium};
use nlci_core::grid::inner;
use nlci_core::spectral::{
    assemble, check_symmetric, eigenpairs, eigenvalues, linearization, EigenCount, OperatorSpec,
};
use nlci_core::{build_grid, GridFunction, ModelConfig};
use proptest::prelude::*;

fn random_spec() -> impl Strategy<Value = OperatorSpec> {
    (7usize..40).prop_flat_map(|n| {
        (
            prop::collection::vec(-50.0f64..50.0, n),
            prop::collection::vec(-1.0f64..1.0, n),
            -50.0f64..50.0,
        )
            .prop_map(move |(p, c, eps)| {
                let g = build_grid(n).unwrap();
                OperatorSpec::new(GridFunction::new(g, p).unwrap(), GridFunction::new(g, c).unwrap(), eps)
                    .unwrap()
            })
    })
}

fn dense_eigenvalues(spec: &OperatorSpec) -> Vec<f64> {
    let op = assemble(spec);
    let n = op.dim();
    let m = DMatrix::from_row_slice(n, n, &op.to_dense());
    let mut vals: Vec<f64> = SymmetricEigen::new(m).eigenvalues.iter().copied().collect();
    vals.sort_by(|a, b| b.total_cmp(a));
    vals
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenvalues_match_dense_solver(spec in random_spec()) {
        let op = assemble(&spec);
        let ours = eigenvalues(&op, EigenCount::All).unwrap();
        let dense = dense_eigenvalues(&spec);
        let scale = op.norm_bound();
        for (a, b) in ours.iter().zip(&dense) {
            prop_assert!((a - b).abs() <= 1e-9 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn assembled_operator_is_tridiagonal_plus_rank_one(spec in random_spec()) {
        let op = assemble(&spec);
        let n = op.dim();
        let dense = op.to_dense();
        check_symmetric(&dense, n, 0.0).unwrap();
        let h = spec.grid().h();
        let c = spec.cvec.values();
        for i in 0..n {
            for j in 0..n {
                let mut t = 0.0;
                if i == j {
                    t = spec.p.values()[i] - 2.0 / (h * h);
                } else if i.abs_diff(j) == 1 {
                    t = 1.0 / (h * h);
                }
                let expected = t + spec.epsilon * h * c[i] * c[j];
                prop_assert!((dense[i * n + j] - expected).abs() <= 1e-12 * (1.0 + expected.abs()));
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let y = op.apply(&x);
        for i in 0..n {
            let row: f64 = (0..n).map(|j| dense[i * n + j] * x[j]).sum();
            prop_assert!((y[i] - row).abs() <= 1e-10 * op.norm_bound());
        }
    }

    #[test]
    fn eigenpairs_are_orthonormal_with_small_residuals(spec in random_spec()) {
        let op = assemble(&spec);
        let s = eigenpairs(&op, EigenCount::Top(5)).unwrap();
        for (k, v) in s.eigenvectors.iter().enumerate() {
            prop_assert!(s.residuals[k] <= 1e-8 * s.norm);
            prop_assert!((v.l2_norm() - 1.0).abs() <= 1e-10);
            for w in &s.eigenvectors[..k] {
                prop_assert!(inner(v, w).unwrap().abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn negative_coupling_interlaces(spec in random_spec()) {
        let coupled = spec.with_epsilon(-spec.epsilon.abs());
        let with = dense_eigenvalues(&coupled);
        let without = dense_eigenvalues(&spec.with_epsilon(0.0));
        let tol = 1e-9 * assemble(&coupled).norm_bound();
        for k in 0..with.len() {
            prop_assert!(with[k] <= without[k] + tol);
            if k + 1 < with.len() {
                prop_assert!(without[k + 1] <= with[k] + tol);
            }
        }
    }
}

#[test]
fn zero_equilibrium_spectrum_is_shifted_laplacian() {
    let cfg = ModelConfig::default_nonlocal(6.0).unwrap();
    let g = build_grid(255).unwrap();
    let op = assemble(&linearization(&Equilibrium::zero(&cfg, g), &cfg));
    let s = eigenpairs(&op, EigenCount::Top(6)).unwrap();
    let h = g.h();
    for (k, (mu, v)) in s.eigenvalues.iter().zip(&s.eigenvectors).enumerate() {
        let kk = (k + 1) as f64;
        let discrete = 6.0 - (2.0 / h * (kk * h / 2.0).sin()).powi(2);
        assert!((mu - discrete).abs() < 1e-9, "k = {}", k + 1);
        let parity = if k % 2 == 0 { 1.0 } else { -1.0 };
        let vals = v.values();
        for i in 0..vals.len() {
            assert!((vals[vals.len() - 1 - i] - parity * vals[i]).abs() < 1e-8);
        }
    }
}

#[test]
fn symmetric_eigenpairs_ignore_the_coupling() {
    let cfg = ModelConfig::default_nonlocal(12.0).unwrap();
    let g = build_grid(511).unwrap();
    let eq = solve_equilibrium(&cfg, 2, 1, g).unwrap();
    let spec = linearization(&eq, &cfg);
    assert!(spec.epsilon < 0.0);
    let coupled = eigenpairs(&assemble(&spec), EigenCount::Top(8)).unwrap();
    let free = eigenvalues(&assemble(&spec.with_epsilon(0.0)), EigenCount::Top(8)).unwrap();
    let mut invariant = 0;
    for (mu, v) in coupled.eigenvalues.iter().zip(&coupled.eigenvectors) {
        let vals = v.values();
        let n = vals.len();
        let sym = (0..n).map(|i| (vals[n - 1 - i] - vals[i]).abs()).fold(0.0, f64::max);
        let anti = (0..n).map(|i| (vals[n - 1 - i] + vals[i]).abs()).fold(0.0, f64::max);
        assert!(sym.min(anti) < 1e-7, "eigenvector without parity");
        if sym < 1e-7 {
            invariant += 1;
            assert!(free.iter().any(|g| (g - mu).abs() < 1e-8), "symmetric eigenvalue {mu} moved");
        }
    }
    assert!(invariant >= 3);
}
