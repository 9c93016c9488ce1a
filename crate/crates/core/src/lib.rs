//! Cavity QED with a Fano mirror.
//!
//! The crate covers the chain from mirror scattering to photon
//! indistinguishability:
//!
//! * [`scattering`]: coupled-mode S-matrix of the Fano mirror, cavity Green's functions
//! * [`ldos`]: local density of states at the emitter
//! * [`mapping`]: pole/residue extraction and the two-mode network that reproduces the LDOS
//! * [`phonons`]: super-ohmic phonon bath correlation functions
//! * [`dynamics`]: polaron master equation on the single-excitation space
//! * [`observables`]: two-colour spectra, indistinguishability, parameter sweeps
//!
//! Energies are in meV with ħ = 1; times are in 1/meV.

pub mod config;
pub mod dynamics;
pub mod error;
pub mod ldos;
pub mod mapping;
pub mod observables;
pub mod par;
pub mod phonons;
pub mod quad;
pub mod scattering;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64;
