//! Couplings of many probability measures and many Metropolis–Hastings chains.
//!
//! The crate is `no_std` (it needs `alloc`) and holds only the numerical
//! machinery:
//!
//! * [`measures`]: sampleable, density-evaluable measures plus total
//!   variation and hockey-stick divergences.
//! * [`couplings`]: pairwise maximal coupling, maximal list coupling, the
//!   greedy recursive list coupler and the fixed-reference baselines.
//! * [`poisson`]: marked Poisson processes, Poisson functional
//!   representation (PFR) sampling and shared-process matching with the
//!   mixture-barycenter proposal.
//! * [`bounds`]: lower/upper bounds on the optimal expected cluster count and
//!   an exact LP oracle for tiny finite instances.
//! * [`mh`]: Metropolis–Hastings kernels and the lifted proposal–acceptance
//!   measures.
//! * [`grand`]: grand-coupling transition kernels and meeting times.
//! * [`diagnostics`]: coupling-based convergence bounds and weight
//!   harmonization.
//!
//! IO, configuration, timing and the command-line harness live in the
//! companion `grandcouple` crate.
#![cfg_attr(not(any(feature = "std", test)), no_std)]

extern crate alloc;

pub mod bounds;
pub mod couplings;
pub mod diagnostics;
mod error;
pub mod grand;
pub mod linalg;
pub mod measures;
pub mod mh;
pub mod point;
pub mod poisson;
pub mod quadrature;
pub mod rng;
pub mod simplex;
pub mod special;
pub mod stats;

pub use error::{Error, Result};
pub use measures::{Measure, SampleSpace};
pub use point::{CouplingDraw, Point};
pub use rng::RngStream;
