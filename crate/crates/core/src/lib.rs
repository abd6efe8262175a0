//! Quantum kicked rotor on an odd-dimensional torus: Floquet operators,
//! quasi-energy statistics, random-matrix references, perturbation band
//! profiles and eigenvector component statistics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eigen;
pub mod eigvec;
pub mod error;
pub mod matrix_io;
pub mod model;
pub mod perturbation;
pub mod quadrature;
pub mod rmt;
pub mod rng;
pub mod spectral;
pub mod stats;

pub use error::{QkrError, Result};
pub use faer::c64;
