//! Hyperspherical uniformity: objectives, optimizer, reference optima and
//! statistical tests for finite point sets on the unit sphere `S^(d-1)`.
//!
//! Configurations are `n x d` arrays whose rows are unit vectors. The
//! objectives are
//!
//! - MHE, minimum Riesz energy,
//! - MHS, maximum separation,
//! - MHP and R-MHP, maximum polarization and its mass-center relaxation,
//! - MHC, minimum covering radius, exact or log-sum-exp relaxed,
//! - MGD, maximum log-determinant of a Gaussian Gram matrix.
//!
//! ```
//! use hyperspherical::objectives::{mhe_energy, KernelSpec};
//! use hyperspherical::reference::regular_simplex;
//! use hyperspherical::sphere::Metric;
//!
//! let tetrahedron = regular_simplex(4, 3).unwrap();
//! let e = mhe_energy(&tetrahedron, &KernelSpec::riesz(1.0, Metric::Chordal)).unwrap();
//! assert!((e.value - 7.3484692).abs() < 1e-6);
//! ```

pub mod checks;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod objectives;
pub mod optimizer;
pub mod reference;
pub mod rng;
pub mod sphere;
pub mod uniformity;

pub use error::{Error, Result};
pub use sphere::{Configuration, Metric};
