//! Numerical laboratory for `-div(A grad u) = sigma u` with form-bounded
//! rough potentials on 1D and radially symmetric meshes.
//!
//! The pieces:
//! - [`mesh`]: P1 geometry, weighted quadrature, ball scans, exhaustions;
//! - [`potential`]: representations of `sigma`, mollification, the catalog;
//! - [`forms`]: discrete forms and the sharp form bounds as pencil eigenvalues;
//! - [`solver`]: the exhaustion scheme, log/Riccati transforms, gauge solver;
//! - [`diagnostics`]: Caccioppoli, reverse Holder, BMO and doubling constants;
//! - [`scenario`]: config-driven runs behind the `formlab` binary.

pub mod diagnostics;
pub mod error;
pub mod forms;
pub mod linalg;
pub mod mesh;
pub mod potential;
pub mod quadrature;
pub mod scenario;
pub mod solver;

pub use error::{Error, Result};
pub use mesh::{Field, Mesh, Weight};
pub use potential::{Potential, Profile};

/// Embedded in every run record.
pub const ARTIFACT_VERSION: &str = concat!("formlab/", env!("CARGO_PKG_VERSION"));
