//! Shared fixtures for the criterion benches.

use flocksim_core::dynamics::{initial_state, Dynamics, Preset, SimConfig, State};

/// Model and preset initial state at the default parameters.
pub fn preset_fixture(dim: usize, n: usize, alpha: f64) -> (Dynamics, State) {
    let cfg = SimConfig::new(dim, n, alpha, 1.0, Preset::PerturbedFlock);
    let model = Dynamics::from_config(&cfg).expect("valid bench config");
    let state = initial_state(&cfg).expect("valid bench config");
    (model, state)
}
