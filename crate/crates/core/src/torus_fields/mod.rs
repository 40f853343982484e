//! Periodic grids, fields, spectral transforms and lattice finite differences.

mod dump;
mod field;
mod grid;

pub use dump::{format_blocks, parse_blocks, write_block, FieldBlock};
pub use field::{transform_backward, transform_forward, GridShift, ScalarField, VectorField};
pub use grid::{TorusGrid, MAX_DIM};
