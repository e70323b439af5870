use std::f64::consts::PI;

use nlci_core::grid::{h1_seminorm_sq, inner, integral, second_difference};
use nlci_core::{build_grid, GridFunction};
use proptest::prelude::*;

fn values(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, n)
}

#[test]
fn rejects_tiny_grids() {
    assert!(build_grid(2).is_err());
    assert!(build_grid(3).is_ok());
}

#[test]
fn spacing_and_nodes() {
    let g = build_grid(1023).unwrap();
    assert_eq!(g.h(), PI / 1024.0);
    assert!((g.node(511) - PI / 2.0).abs() < 1e-15);
    assert_eq!(g.refined().n(), 2047);
}

#[test]
fn sine_quadratures() {
    let g = build_grid(1023).unwrap();
    let s = GridFunction::from_fn(g, f64::sin);
    assert!((integral(&s) - 2.0).abs() < 1e-5);
    assert!((inner(&s, &s).unwrap() - PI / 2.0).abs() < 1e-12);
    // the discrete sine is an exact eigenvector of the second difference
    let d2 = second_difference(&s);
    let lam = (2.0 / g.h() * (g.h() / 2.0).sin()).powi(2);
    for (a, b) in d2.values().iter().zip(s.values()) {
        assert!((a + lam * b).abs() < 1e-9);
    }
}

proptest! {
    #[test]
    fn second_difference_is_linear(u in values(31), v in values(31), a in -5.0f64..5.0) {
        let g = build_grid(31).unwrap();
        let u = GridFunction::new(g, u).unwrap();
        let v = GridFunction::new(g, v).unwrap();
        let lhs = second_difference(&u.axpy(a, &v).unwrap());
        let rhs = second_difference(&u).axpy(a, &second_difference(&v)).unwrap();
        let scale = 1.0 + lhs.sup_norm();
        prop_assert!(lhs.sub(&rhs).unwrap().sup_norm() <= 1e-12 * scale);
    }

    #[test]
    fn summation_by_parts(u in values(40)) {
        let g = build_grid(40).unwrap();
        let u = GridFunction::new(g, u).unwrap();
        let lhs = -inner(&u, &second_difference(&u)).unwrap();
        let rhs = h1_seminorm_sq(&u);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + rhs));
    }

    #[test]
    fn interpolation_reproduces_nodes(u in values(15), i in 0usize..15) {
        let g = build_grid(15).unwrap();
        let u = GridFunction::new(g, u).unwrap();
        prop_assert!((u.interpolate(g.node(i)) - u.values()[i]).abs() <= 1e-12 * (1.0 + u.sup_norm()));
    }
}
