//! Quasistatic cloaking toolkit.
//!
//! P1 finite elements on a criss-cross triangulation give Dirichlet-to-Neumann
//! (DtN) matrices. A discrete Hodge splitting of the per-triangle field space
//! turns the same matrices into effective operators of Z-problems. On top of
//! both sits a set of checks for the passive-cloaking bounds: Herglotz
//! structure, transparency-window monotonicity, lossy sum-rule bounds and the
//! dispersive-obstacle extension.

pub mod checks;
pub mod cli;
pub mod cloaking;
pub mod composites;
pub mod config;
pub mod error;
pub mod fem;
pub mod geometry;
pub mod herglotz;
pub mod hodge;
pub mod linalg;
pub mod materials;
pub mod report;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
