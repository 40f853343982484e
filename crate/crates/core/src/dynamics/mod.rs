//! Semi-discrete Euler-alignment dynamics, the `e`-quantity, RK4 stepping and
//! the main run loop.

mod config;
mod model;
mod run;

pub use config::{initial_state, preset_wavevectors, InitialData, Preset, SimConfig, RNG_ALGORITHM};
pub use model::{Dynamics, ProbeKind, POSITIVITY_FLOOR};
pub use run::{run, run_from, run_observed, RunOutcome, Trajectory};

use crate::error::Result;
use crate::torus_fields::{ScalarField, VectorField};

/// `(ρ, u, t)`.
#[derive(Debug, Clone)]
pub struct State {
    pub rho: ScalarField,
    pub u: VectorField,
    pub t: f64,
}

impl State {
    pub fn new(rho: ScalarField, u: VectorField, t: f64) -> Result<Self> {
        rho.ensure_same_grid(u.component(0))?;
        Ok(State { rho, u, t })
    }

    /// `s + dt·k` (time advanced by `dt`).
    pub fn advanced(&self, dt: f64, k: &Tendency) -> Result<State> {
        let rho = self.rho.axpy(dt, &k.rho)?;
        let u = self.u.try_map_components(|a, ua| ua.axpy(dt, k.u.component(a)))?;
        Ok(State {
            rho,
            u,
            t: self.t + dt,
        })
    }

    pub fn dim(&self) -> usize {
        self.u.dim()
    }
}

/// Time derivative of a [`State`].
#[derive(Debug, Clone)]
pub struct Tendency {
    pub rho: ScalarField,
    pub u: VectorField,
}

/// `e = ∇·u + L_φρ`.
#[derive(Debug, Clone)]
pub struct EvolvedQuantityE {
    pub e: ScalarField,
}

/// Free-function form of [`Dynamics::rhs`], building the model on the fly.
pub fn rhs(s: &State, spec: &crate::KernelSpec, dealias: bool) -> Result<Tendency> {
    Dynamics::new(s.rho.grid().clone(), spec.clone(), dealias)?.rhs(s)
}
