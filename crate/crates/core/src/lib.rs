//! Spectral correspondence between the Kirchhoff Laplacian on an equilateral
//! metric graph and the transition operator of the underlying discrete graph.

pub mod cli;
pub mod discrete;
pub mod dots;
pub mod entire;
pub mod error;
pub mod fem;
pub mod gamma;
pub mod graph;
pub mod intertwiner;
pub mod linalg;
pub mod par;
pub mod weyl;

pub use error::{Error, Result};
