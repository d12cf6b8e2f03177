//! Simulation of optically induced dynamic nuclear polarization (DNP) from a
//! nitrogen-vacancy electron spin to surrounding 13C nuclear spins in diamond.
//!
//! The crate models two transfer protocols — NOVEL (Hartmann-Hahn spin
//! locking) and the integrated solid effect (swept-frequency Landau-Zener
//! passages) — together with a sampled nuclear spin bath, rate-equation spin
//! diffusion, and a resonator/laser instrument model. Units everywhere:
//! Hamiltonians in MHz (linear frequency), times in µs unless a name says
//! otherwise, fields in tesla, gyromagnetic ratios in MHz/T. The 2π that
//! converts linear frequency to phase enters only in [`spinops::propagator`].

pub mod bath;
pub mod config;
pub mod error;
pub mod hamiltonian;
pub mod instrument;
pub mod output;
pub mod protocols;
pub mod spinops;

pub use error::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
