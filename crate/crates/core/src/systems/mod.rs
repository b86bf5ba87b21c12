//! Built-in dynamical systems on finite carriers, and the symbolic
//! counterexample family on `ℕ₁ × ℝ`.

pub mod counterexample;
mod group;
mod rotation;
mod tent;

pub use group::{make_group_system, s3_adjacent_transpositions, s3_all_transpositions};
pub use rotation::make_rotation_system;
pub use tent::{make_tent_system, tent_apply, tent_table, DyadicGrid};

use crate::family::FunctionFamily;
use crate::metricspace::FiniteMetricSpace;

/// A metric carrier with a family acting on it and the bound constant `c`.
#[derive(Clone, Debug)]
pub struct System<S> {
    pub name: String,
    pub space: FiniteMetricSpace<S>,
    pub family: FunctionFamily,
    pub c: S,
}
