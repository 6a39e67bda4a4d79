//! Periodic orbits of magnetic flows on flat tori.
//!
//! The crate is organised around a handful of layers: the torus and its loops
//! ([`torus`]), product magnetic fields and their transport ([`field`]),
//! the twisted Hamiltonian flow ([`dynamics`]), the Fourier loop space and its
//! action functional ([`loopspace`]), and a search-and-audit layer ([`atlas`]).

pub mod atlas;
pub mod commands;
pub mod dynamics;
pub mod error;
pub mod field;
pub mod io;
pub mod loopspace;
pub mod potential;
pub mod seeds;
pub mod spectral;
pub mod torus;
pub mod trig;
pub mod verify;

pub use error::{Error, Result};
pub use field::{certify_nonresonance, MagneticField, NonResCertificate};
pub use potential::Potential;
pub use torus::{PhasePoint, TorusLoop, TorusPoint};
