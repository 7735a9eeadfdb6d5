//! Magnonic Casimir energy of antiferromagnetic and ferrimagnetic thin films
//! under lattice regularization.
//!
//! The Casimir energy per surface magnetic unit cell is the zero-point energy
//! of the magnon modes with `k_z a = π n / N_z` minus its continuum
//! counterpart. See [`casimir`] for the evaluation strategy, [`dispersion`]
//! for the magnon energies and [`materials`] for the Cr₂O₃ and YIG presets.

pub mod casimir;
pub mod cli;
pub mod dispersion;
pub mod materials;
pub mod par;
pub mod quadrature;
pub mod sweep;

pub use casimir::{casimir_energy, CasimirQuadrature, CasimirResult};
pub use dispersion::{DispersionModel, ModeIndex, Wavevector};
