//! Self-similar profiles of the critical p-Laplacian Patlak–Keller–Segel system.
//!
//! The radial profile equations are integrated in flux form by [`odecore`];
//! [`backward`] and [`forward`] solve and classify the blow-up and spreading
//! problems, and [`reconstruct`] maps profiles back to density and potential.

pub mod error;
pub mod odecore;
pub mod params;
pub mod quad;

pub use error::{Error, Result};
pub use params::{derive_params, ModelParams, Regime};
pub mod backward;
pub mod forward;
pub mod reconstruct;
pub mod cli;
