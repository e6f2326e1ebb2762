//! Rotational dephasing of molecular vibrations.
//!
//! The crate models a vibrational mode (an `n`-level system) coupled to a
//! thermal rotational bath through a centrifugal-distortion term. Each
//! rotational level `J` imposes its own phase velocity on the vibrational
//! coherences; averaging over the thermal occupation produces a dephasing
//! channel whose Kraus operators are diagonal.
//!
//! Modules, bottom-up:
//! - [`operator`]: validated density matrices and observables.
//! - [`channel`]: Kraus sets, dephasing constructions and the process matrix.
//! - [`rovib`]: the concrete vibration-rotation model and its thermal bath.
//! - [`measurement`]: probes, forward predictions, datasets, synthesis.
//! - [`estimator`]: recovery of the bath distribution and coupling from data.
//! - [`wigner`]: phase-space plots of states.
//! - [`matrix_io`]: CSV / JSON matrix interchange.

pub mod channel;
pub mod error;
pub mod estimator;
pub mod matrix_io;
pub mod measurement;
pub mod operator;
pub mod rovib;
pub mod wigner;

pub use error::{Error, Result};
