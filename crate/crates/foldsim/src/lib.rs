//! Rotated surface code circuits with mid-cycle fold-transversal S gates.
//!
//! The crate builds syndrome-extraction circuits, derives detectors from
//! stabilizer trajectories, turns circuit noise into a decoding hypergraph,
//! samples shots with a Pauli-frame simulator and decodes them with a
//! correlated Z-then-X matching pipeline.

pub mod aod;
pub mod blossom;
pub mod checks;
pub mod circuit;
pub mod dem;
pub mod detectors;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod geometry;
pub mod gf2;
pub mod layout;
pub mod matching;
pub mod noise;
pub mod pipeline;
pub mod program;
pub mod stats;
pub mod tableau;
pub mod trajectory;

pub use error::{Error, Result};
