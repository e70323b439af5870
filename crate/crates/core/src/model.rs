//! Model data `(a, f, λ)`, sample-based checks of the standing hypotheses,
//! and the Lyapunov functional.
//!
//! The hypothesis checks are falsification checks on a finite sample set,
//! not proofs.

use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::grid::{h1_seminorm_sq, integral, GridFunction};
use crate::{Error, Result};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonlocal diffusion coefficient `a: [0, ∞) → [m, M]`.
#[derive(Clone)]
pub struct DiffusionSpec {
    name: String,
    a: ScalarFn,
    a_prime: ScalarFn,
    m: f64,
    upper: f64,
    lipschitz: f64,
}

impl fmt::Debug for DiffusionSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DiffusionSpec")
            .field("name", &self.name)
            .field("m", &self.m)
            .field("M", &self.upper)
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl DiffusionSpec {
    pub fn custom(
        name: impl Into<String>,
        a: impl Fn(f64) -> f64 + Send + Sync + 'static,
        a_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        m: f64,
        upper: f64,
        lipschitz: f64,
    ) -> Result<Self> {
        if !(m > 0.0 && upper >= m && upper.is_finite() && lipschitz >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "diffusion bounds need 0 < m ≤ M and L ≥ 0 (m={m}, M={upper}, L={lipschitz})"
            )));
        }
        Ok(Self { name: name.into(), a: Arc::new(a), a_prime: Arc::new(a_prime), m, upper, lipschitz })
    }

    /// `a ≡ value`. With `value = 1` this is the classical Chafee–Infante case.
    pub fn constant(value: f64) -> Result<Self> {
        Self::custom(format!("constant({value})"), move |_| value, |_| 0.0, value, value, 0.0)
    }

    /// `a(s) = 1 + s/(1+s)`: `m = 1`, `M = 2`, Lipschitz constant 1.
    pub fn saturating() -> Self {
        Self::custom(
            "saturating",
            |s| 1.0 + s / (1.0 + s),
            |s| 1.0 / ((1.0 + s) * (1.0 + s)),
            1.0,
            2.0,
            1.0,
        )
        .expect("static bounds are valid")
    }

    /// Piecewise-linear interpolation of `(s, a)` knots, constant past the
    /// last knot. The first knot must sit at `s = 0`.
    pub fn table(points: &[(f64, f64)]) -> Result<Self> {
        if points.is_empty() || points[0].0 != 0.0 {
            return Err(Error::InvalidArgument("diffusion table must start at s = 0".into()));
        }
        if points.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidArgument("diffusion table abscissae must increase".into()));
        }
        if points.iter().any(|&(s, a)| !(s.is_finite() && a.is_finite() && a > 0.0)) {
            return Err(Error::InvalidArgument("diffusion table values must be finite and positive".into()));
        }
        let m = points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        let upper = points.iter().map(|p| p.1).fold(0.0, f64::max);
        let lipschitz = points
            .windows(2)
            .map(|w| ((w[1].1 - w[0].1) / (w[1].0 - w[0].0)).abs())
            .fold(0.0, f64::max);
        let knots: Arc<[(f64, f64)]> = points.into();
        let k2 = knots.clone();
        Self::custom(
            format!("table({} knots)", points.len()),
            move |s| table_eval(&knots, s).0,
            move |s| table_eval(&k2, s).1,
            m,
            upper,
            lipschitz,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, s: f64) -> f64 {
        (self.a)(s)
    }

    pub fn derivative(&self, s: f64) -> f64 {
        (self.a_prime)(s)
    }

    pub fn lower(&self) -> f64 {
        self.m
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// `Q(r) = ∫₀^r a(s) ds` by adaptive Simpson quadrature.
    pub fn antiderivative(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        adaptive_simpson(&*self.a, 0.0, r, QUADRATURE_TOL)
    }
}

fn table_eval(knots: &[(f64, f64)], s: f64) -> (f64, f64) {
    let s = s.max(0.0);
    let last = knots[knots.len() - 1];
    if s >= last.0 {
        return (last.1, 0.0);
    }
    let k = knots.partition_point(|p| p.0 <= s) - 1;
    let (s0, a0) = knots[k];
    let (s1, a1) = knots[k + 1];
    let slope = (a1 - a0) / (s1 - s0);
    (a0 + slope * (s - s0), slope)
}

/// Absolute tolerance for `Q`; well below the required 1e-10.
const QUADRATURE_TOL: f64 = 1e-12;

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, 48)
}

/// Odd reaction term `f` with `f'(0) = 1` and `f''(u)·u < 0`.
#[derive(Clone)]
pub struct NonlinearitySpec {
    name: String,
    f: ScalarFn,
    f_prime: ScalarFn,
    f_double_prime: ScalarFn,
    antiderivative: ScalarFn,
    dissipativity_witness: f64,
}

impl fmt::Debug for NonlinearitySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonlinearitySpec")
            .field("name", &self.name)
            .field("u*", &self.dissipativity_witness)
            .finish()
    }
}

impl NonlinearitySpec {
    /// `antiderivative` is `F(u) = ∫₀^u f`, required in closed form.
    pub fn custom(
        name: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        f_double_prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        antiderivative: impl Fn(f64) -> f64 + Send + Sync + 'static,
        dissipativity_witness: f64,
    ) -> Result<Self> {
        if !(dissipativity_witness > 0.0 && dissipativity_witness.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "dissipativity witness must be positive, got {dissipativity_witness}"
            )));
        }
        Ok(Self {
            name: name.into(),
            f: Arc::new(f),
            f_prime: Arc::new(f_prime),
            f_double_prime: Arc::new(f_double_prime),
            antiderivative: Arc::new(antiderivative),
            dissipativity_witness,
        })
    }

    /// `f(u) = u − u³`, `u* = 1`.
    pub fn cubic() -> Self {
        Self::custom(
            "cubic",
            |u| u - u * u * u,
            |u| 1.0 - 3.0 * u * u,
            |u| -6.0 * u,
            |u| {
                let u2 = u * u;
                0.5 * u2 - 0.25 * u2 * u2
            },
            1.0,
        )
        .expect("static witness is valid")
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, u: f64) -> f64 {
        (self.f)(u)
    }

    pub fn derivative(&self, u: f64) -> f64 {
        (self.f_prime)(u)
    }

    pub fn second_derivative(&self, u: f64) -> f64 {
        (self.f_double_prime)(u)
    }

    pub fn antiderivative(&self, u: f64) -> f64 {
        (self.antiderivative)(u)
    }

    /// `u*` with `f(u)/u < 0` for `|u| > u*`.
    pub fn witness(&self) -> f64 {
        self.dissipativity_witness
    }
}

#[derive(Debug, Clone)]
pub struct ModelConfig {
    pub diffusion: DiffusionSpec,
    pub nonlinearity: NonlinearitySpec,
    lambda: f64,
}

impl ModelConfig {
    pub fn new(diffusion: DiffusionSpec, nonlinearity: NonlinearitySpec, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { diffusion, nonlinearity, lambda })
    }

    /// Saturating `a` with cubic `f`.
    pub fn default_nonlocal(lambda: f64) -> Result<Self> {
        Self::new(DiffusionSpec::saturating(), NonlinearitySpec::cubic(), lambda)
    }

    /// `a ≡ 1` with cubic `f`: the local Chafee–Infante equation.
    pub fn classical(lambda: f64) -> Result<Self> {
        Self::new(DiffusionSpec::constant(1.0)?, NonlinearitySpec::cubic(), lambda)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        Self::new(self.diffusion.clone(), self.nonlinearity.clone(), lambda)
    }

    /// `a(0)`, which fixes the bifurcation points `λ = a(0) j²`.
    pub fn a0(&self) -> f64 {
        self.diffusion.value(0.0)
    }

    /// Largest `N` with `a(0) N² < λ`.
    pub fn max_mode(&self) -> usize {
        let a0 = self.a0();
        let mut n = 0usize;
        while a0 * (((n + 1) * (n + 1)) as f64) < self.lambda {
            n += 1;
        }
        n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HypothesisCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Sample point(s) exhibiting the first violation.
    pub witness: Option<Vec<f64>>,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<HypothesisCheck>,
}

impl ValidationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&HypothesisCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_BOUNDS: &str = "a in [m, M]";
pub const CHECK_MONOTONE: &str = "a non-decreasing";
pub const CHECK_LIPSCHITZ: &str = "a Lipschitz";
pub const CHECK_ODD: &str = "f odd";
pub const CHECK_SLOPE: &str = "f'(0) = 1";
pub const CHECK_CONCAVITY: &str = "f''(u)u < 0";
pub const CHECK_DISSIPATIVE: &str = "f(u)/u < 0 beyond u*";
pub const CHECK_COVERAGE: &str = "sample coverage";

/// Checks every standing hypothesis on `samples` (used as `u` for `f` and as
/// `s = |u|` for `a`).
pub fn validate_hypotheses(cfg: &ModelConfig, samples: &[f64]) -> Result<ValidationReport> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let a = &cfg.diffusion;
    let f = &cfg.nonlinearity;
    let mut checks = Vec::new();

    let mut s: Vec<f64> = samples.iter().map(|v| v.abs()).chain(std::iter::once(0.0)).collect();
    s.sort_by(f64::total_cmp);
    s.dedup();

    let tol = 1e-12;
    checks.push(first_violation(CHECK_BOUNDS, s.iter().map(|&x| (vec![x], a.value(x))), |&v| {
        v >= a.lower() * (1.0 - tol) && v <= a.upper() * (1.0 + tol)
    }));
    checks.push(first_violation(
        CHECK_MONOTONE,
        s.windows(2).map(|w| (vec![w[0], w[1]], a.value(w[1]) - a.value(w[0]))),
        |&d| d >= -tol,
    ));
    let mut lip = None;
    'outer: for (i, &s1) in s.iter().enumerate() {
        for &s2 in &s[i + 1..] {
            let lhs = (a.value(s2) - a.value(s1)).abs();
            if lhs > a.lipschitz() * (s2 - s1) * (1.0 + tol) + tol {
                lip = Some(vec![s1, s2]);
                break 'outer;
            }
        }
    }
    checks.push(HypothesisCheck {
        name: CHECK_LIPSCHITZ,
        passed: lip.is_none(),
        detail: match &lip {
            Some(w) => format!("|a({}) − a({})| exceeds {}·|Δs|", w[1], w[0], a.lipschitz()),
            None => format!("Lipschitz constant {} holds on samples", a.lipschitz()),
        },
        witness: lip,
    });

    checks.push(first_violation(
        CHECK_ODD,
        samples.iter().map(|&u| (vec![u], (f.value(-u) + f.value(u), f.value(u)))),
        |&(sum, fu)| sum.abs() <= tol * (1.0 + fu.abs()),
    ));
    let slope = f.derivative(0.0);
    checks.push(HypothesisCheck {
        name: CHECK_SLOPE,
        passed: (slope - 1.0).abs() <= tol,
        witness: ((slope - 1.0).abs() > tol).then(|| vec![0.0]),
        detail: format!("f'(0) = {slope}"),
    });
    checks.push(first_violation(
        CHECK_CONCAVITY,
        samples.iter().filter(|&&u| u != 0.0).map(|&u| (vec![u], f.second_derivative(u) * u)),
        |&v| v < 0.0,
    ));
    let u_star = f.witness();
    checks.push(first_violation(
        CHECK_DISSIPATIVE,
        samples.iter().filter(|&&u| u.abs() > u_star).map(|&u| (vec![u], f.value(u) / u)),
        |&v| v < 0.0,
    ));

    let has_pos = samples.iter().any(|&u| u > 0.0);
    let has_neg = samples.iter().any(|&u| u < 0.0);
    let has_far = samples.iter().any(|&u| u.abs() > u_star);
    checks.push(HypothesisCheck {
        name: CHECK_COVERAGE,
        passed: has_pos && has_neg && has_far,
        witness: None,
        detail: format!("positive: {has_pos}, negative: {has_neg}, beyond u* = {u_star}: {has_far}"),
    });

    Ok(ValidationReport { checks })
}

fn first_violation<T: fmt::Debug>(
    name: &'static str,
    mut items: impl Iterator<Item = (Vec<f64>, T)>,
    ok: impl Fn(&T) -> bool,
) -> HypothesisCheck {
    match items.find(|(_, v)| !ok(v)) {
        Some((at, v)) => HypothesisCheck {
            name,
            passed: false,
            detail: format!("violated at {at:?} (value {v:?})"),
            witness: Some(at),
        },
        None => HypothesisCheck { name, passed: true, witness: None, detail: "holds on samples".into() },
    }
}

/// `V(u) = ½ Q(‖u'‖²) − λ ∫ F(u)`.
pub fn lyapunov(u: &GridFunction, cfg: &ModelConfig) -> f64 {
    lyapunov_raw(u.values(), u.grid().h(), cfg)
}

pub(crate) fn lyapunov_raw(values: &[f64], h: f64, cfg: &ModelConfig) -> f64 {
    let s = crate::grid::seminorm_sq_raw(values, h);
    let potential: f64 = values.iter().map(|&v| cfg.nonlinearity.antiderivative(v)).sum::<f64>() * h;
    0.5 * cfg.diffusion.antiderivative(s) - cfg.lambda * potential
}

/// Convenience used by tests and the CLI: `∫ F(u)`.
pub fn potential(u: &GridFunction, cfg: &ModelConfig) -> f64 {
    integral(&u.map(|v| cfg.nonlinearity.antiderivative(v)))
}

/// Diffusion coefficient evaluated at the state, `a(‖u'‖²)`.
pub fn diffusion_at(u: &GridFunction, cfg: &ModelConfig) -> f64 {
    cfg.diffusion.value(h1_seminorm_sq(u))
}
