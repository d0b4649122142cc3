//! Fixtures shared by the criterion benches.

use std::f64::consts::PI;
use std::sync::Arc;

use qhd_core::fields::{make_initial_data, InitSpec, PerturbedCarriers};
use qhd_core::{Field, Grid, ModelParams, PlasmaState};

pub const SIZES: [usize; 3] = [64, 256, 1024];

pub fn grid(n: usize) -> Arc<Grid> {
    Grid::new(n, 2.0 * PI).expect("power-of-two grid")
}

pub fn smooth_field(n: usize) -> Field {
    Field::from_fn(&grid(n), |x| x.cos().exp())
}

/// Small perturbation of the default steady state that exercises the field.
pub fn perturbed_state(n: usize) -> (PlasmaState, ModelParams) {
    let p = ModelParams::default();
    let init = InitSpec { amplitude: 1e-2, carriers: PerturbedCarriers::AOnly, ..InitSpec::default() };
    let s = make_initial_data(&init, &p, &grid(n)).expect("valid fixture");
    (s, p)
}
