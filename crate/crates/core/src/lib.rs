//! Periodic 1-D pseudo-spectral solver for the bipolar quantum hydrodynamic
//! system and its classical, relaxation and combined limits.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod limits;
pub mod models;
pub mod params;
pub mod poisson;
pub mod stepper;

pub use error::{Error, Result};
pub use fields::{make_initial_data, CarrierState, InitScaling, InitSpec, PerturbedCarriers, PlasmaState};
pub use grid::{Field, Grid};
pub use models::{rhs, ModelKind, Tendency};
pub use params::{Carrier, ModelParams};
pub use poisson::solve_efield;
pub use stepper::{integrate, integrate_observed, step, Scheme, SchemeSpec, Stepper, TrajectoryRecord};
