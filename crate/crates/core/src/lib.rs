//! Spectral-Galerkin simulation of the simplified Bardina model on the unit
//! sphere and the flat square torus, with tools that check the model's
//! energy estimates, Lyapunov exponents and attractor-dimension bounds.
//!
//! The layers build on each other: [`spectral`] (bases and transforms),
//! [`hodge`] (velocity fields and bilinear forms), [`dynamics`] (right-hand
//! sides), [`integrator`] (time stepping), then [`estimates`], [`lyapunov`]
//! and [`bounds`]. [`harness`] holds configuration, snapshots and the
//! command implementations used by the `bardina` binary.

pub mod bounds;
pub mod dynamics;
pub mod error;
pub mod estimates;
pub mod harness;
pub mod hodge;
pub mod integrator;
pub mod lyapunov;
pub mod spectral;

pub use error::{Error, Result};
