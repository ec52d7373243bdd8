//! Exponential sums on the parabola, multiscale square functions, wave packets
//! and refined Strichartz experiments on finite grids.
//!
//! Two frequency geometries share every grid. [`grid::Mode::Exact`] reads bin
//! indices p-adically, so intervals are residue classes, balls and caps are
//! subgroup cosets and packets are constant in modulus on their tubes.
//! [`grid::Mode::Real`] reads bins as signed frequencies and uses raised-cosine
//! cutoffs.

pub mod counting;
pub mod error;
pub mod exp_sum;
pub mod fft;
pub mod field;
pub mod filter;
pub mod grid;
pub mod growth;
pub mod io;
pub mod lab;
pub mod multiscale;
pub mod numeric;
pub mod wavepacket;

pub use error::{Error, Result};
pub use num_complex::Complex64;
