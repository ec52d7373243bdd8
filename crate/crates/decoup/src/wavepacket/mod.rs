//! Caps on the parabola, dual tubes, packet projections and evolution.

pub mod caps;
pub mod evolve;
pub mod exact;
pub mod real;

pub use caps::{build_caps, Cap};
pub use evolve::{extension_spacetime, schrodinger_evolve, SpacetimeField};
pub use exact::{ExactCap, ExactDecomposition};
pub use real::{RealPartition, Tube};
