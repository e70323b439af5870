//! Numerical laboratory for the nonlocal quasilinear Chafee–Infante problem
//!
//! ```text
//! u_t = a(‖u_x‖²) u_xx + λ f(u),   x ∈ (0, π),   u(0) = u(π) = 0
//! ```
//!
//! The crate computes every equilibrium of the problem, the spectrum of the
//! nonlocal (Sturm–Liouville plus rank-one) linearization at each of them,
//! integrates the quasilinear flow together with its semilinear time-changed
//! companion, and checks the exact integer identities behind the
//! hyperbolicity argument.
//!
//! Modules, bottom-up:
//!
//! * [`grid`]: uniform Dirichlet grid on `[0, π]` and discrete calculus.
//! * [`model`]: the data `(a, f, λ)`, hypothesis checks, Lyapunov functional.
//! * [`equilibria`]: shooting plus a fixed point on `c = ‖φ'‖²`.
//! * [`spectral`]: assembly and eigen-solution of the linearized operator.
//! * [`combinatorics`]: exact integer determinants.
//! * [`dynamics`]: IMEX integration, time change, decay rates, probes.
//! * [`verify`]: the verification suite shared by the CLI and the tests.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod combinatorics;
pub mod dynamics;
pub mod equilibria;
mod error;
pub mod grid;
pub mod linalg;
pub mod model;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use grid::{build_grid, Grid, GridFunction};
pub use model::{DiffusionSpec, ModelConfig, NonlinearitySpec};
