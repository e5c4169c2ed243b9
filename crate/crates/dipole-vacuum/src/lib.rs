//! Electromagnetic vacuum of media made of point electric dipoles.
//!
//! The crate evaluates Dyson and polarization propagators, local field
//! factors, emission spectra, polarizability renormalization and vacuum
//! energies of dipolar media, and carries a coupled-dipole Monte-Carlo
//! simulator that checks the analytic relations by brute force.

pub mod cdm;
pub mod emission;
pub mod error;
pub mod quadrature;
pub mod renorm;
pub mod roots;
pub mod medium;
pub mod propagators;
pub mod spectral;
pub mod vacuum;

pub use error::{Error, Result};
pub use spectral::C64;
