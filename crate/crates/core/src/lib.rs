//! Simulation and verification harness for the fractional Euler-alignment
//! system
//!
//! ```text
//! ρ_t + ∇·(ρu) = 0,
//! u_t + u·∇u  = [L_φ, u](ρ),
//! ```
//!
//! on the periodic torus `T^n`, `n ∈ {1, 2}`, with the singular kernel
//! `φ_α(x) = Σ_k |x + 2πk|^{−(n+α)}`, `0 < α < 2`.
//!
//! The crate is organized bottom-up:
//!
//! * [`torus_fields`]: grids, fields, transforms, lattice finite differences;
//! * [`fractional_kernel`]: `φ_α`, the multiplier of `L_φ`, the commutator and `D_α`;
//! * [`dynamics`]: right-hand side, `e`-quantity, RK4 stepping and the run loop;
//! * [`diagnostics`]: conserved quantities, amplitude, Hölder seminorms, fits;
//! * [`flocking`]: shifted density, limiting flock and the stability sweep;
//! * [`cli_io`]: config files, run directories, `verify` and parameter sweeps.

pub mod cli_io;
pub mod diagnostics;
pub mod dynamics;
mod error;
pub mod flocking;
pub mod fractional_kernel;
pub mod quadrature;
pub mod torus_fields;

pub use error::{Error, Result};
pub use fractional_kernel::{AlignmentOperator, KernelSpec, ShellRule};
pub use torus_fields::{GridShift, ScalarField, TorusGrid, VectorField};
