//! Steady-state Rydberg excitation of a ladder ensemble driven by a
//! Laguerre-Gaussian vortex control beam, with a mean-field Rydberg shift,
//! localization scans and noise studies.

pub mod bloch;
pub mod cli;
pub mod fields;
pub mod io;
pub mod localization;
pub mod meanfield;
pub mod noise;
pub mod summation;
pub mod units;

pub use units::{AngularFrequency, Position, SystemConfig};
