// NaN must fail the parameter checks, hence `!(x > 0.0)` throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotics;
pub mod catalog;
pub mod error;
pub mod quadrature;
pub mod saddle;
pub mod transforms;
pub mod special;
pub mod summation;
pub mod types;
pub mod verification;

pub use catalog::{build, AdmissibleFunction, FunctionSpec};
pub use error::{MellinError, Result};
pub use types::{log_surface_pow, Jet, LogSurfacePoint, QuadratureResult, Tolerances, C64};
