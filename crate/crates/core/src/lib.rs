//! Ground-state two-site entanglement of open and c-cyclic XY / transverse
//! Ising chains with a z-axis Dzyaloshinskii–Moriya term and Gaussian
//! impurity profiles.
//!
//! The pipeline is exact in the free-fermion picture:
//!
//! ```text
//! ChainConfig -> SiteCouplings -> QuadraticForm (A, B) -> BogoliubovModes
//!             -> GMatrix -> correlators -> TwoSiteRDM -> concurrence
//! ```
//!
//! [`oracle`] diagonalizes the spin Hamiltonian directly for small chains
//! and is the ground truth every stage is checked against. [`sweep`] holds
//! the point evaluator and the curve analysis (derivatives, extrema,
//! critical windows, finite-size fits); the parallel driver and file
//! formats live in the std `xychain` crate.
//!
//! The crate is `no_std` and needs only `alloc`.
#![no_std]
// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;

pub mod correlations;
pub mod entanglement;
pub mod model;
pub mod oracle;
pub mod quadratic;
pub mod sweep;

pub use correlations::{g_matrix, GMatrix};
pub use entanglement::{concurrence, concurrence_xstate, two_site_rdm, TwoSiteRDM};
pub use error::{Error, Result};
pub use model::{build_couplings, gaussian_profile, Boundary, ChainConfig, ProfileShape, SiteCouplings};
pub use quadratic::{assemble_quadratic, diagonalize, ground_energy, BogoliubovModes, QuadraticForm};
