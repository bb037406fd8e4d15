//! Drift-jump-reset process: exact simulation, closed-form statistics,
//! a Laplace-domain engine and Monte Carlo validation.
//!
//! The position `X(t) >= 0` grows at speed `gamma_drift`, takes positive
//! jumps at rate `lambda_jump` and returns to 0 at rate `lambda_reset`. The
//! observable is `Y = y0 e^{+-X}`.

pub mod analytics;
pub mod checks;
pub mod error;
pub mod model;
pub mod montecarlo;
pub mod paths;
pub mod quadrature;
pub mod transform;

pub use analytics::{Atom, Domain, MetLimit, MixedDensity, TailExponents};
pub use error::{Error, Result, Violation};
pub use model::{CustomLaw, JumpLaw, ModelParams, ObservableSign, ValidatedParams, Warning};
pub use paths::{EventKind, EventLog, ExitCause, ExitRecord};
pub use transform::{InversionConfig, LaplaceFn, Method, Variable};
