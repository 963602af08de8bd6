//! Parallel totally asymmetric exclusion on a ring with one slow bond.
//!
//! A ring of `2L` sites carries particles that hop one site clockwise. Under
//! the parallel update every particle with an empty site ahead (an *engine*)
//! hops with probability `p = ω / (1 + ω)`, all at once. The bond from the
//! last site back to site 0 is a blockage that an engine crosses only with
//! reduced probability.
//!
//! - [`lattice`]: ring geometry, packed configurations, trains, enumeration.
//! - [`dynamics`]: kernel parameters, seeded random streams, update steps.
//! - [`analytic`]: closed forms, finite-size sums and saddle-point maximisers.
//! - [`oracle`]: exact transition matrices and stationary laws of small rings.
//! - [`montecarlo`]: simulation of currents and density profiles.

pub mod analytic;
mod bits;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod montecarlo;
pub mod oracle;

pub use dynamics::{BlockageSemantics, KernelParams, RandomSource};
pub use error::{Error, Result};
pub use lattice::{Configuration, RingGeometry, Train, TrainDecomposition};
