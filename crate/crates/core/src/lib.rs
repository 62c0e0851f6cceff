//! Exact static, spherically symmetric solutions of the coupled Einstein and
//! nonlinear spinor field equations, together with the residual suites that
//! check them.
//!
//! The background metric is generated by a closed-form Liouville solution,
//! the spinor amplitudes are hyperbolic rotations driven by the phase
//! functions `N1(S)`, `N2(S)`, and the observables (energy density, current,
//! charge density and their totals) are assembled on top of both.
//!
//! Three self-interaction regimes are supported: `L_N = 0`, `L_N = λS²` and
//! `L_N = λSⁿ` with integer `n > 2`.

pub mod cli;
pub mod error;
pub mod metric;
pub mod model;
pub mod numerics;
pub mod observables;
pub mod spinor;
pub mod verify;

pub use error::{Error, Result};
pub use metric::MetricPoint;
pub use model::{ModelParams, Nonlinearity, ValidationResult};
pub use numerics::QuadResult;
pub use observables::ObservableRecord;
pub use spinor::SpinorAmplitudes;
pub use verify::ResidualReport;
