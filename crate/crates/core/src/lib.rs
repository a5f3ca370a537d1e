//! Simulation and rate analysis for loss-resilient quantum conference key
//! agreement (CKA).
//!
//! The crate is organized bottom-up:
//!
//! - [`fock`]: sparse multimode photon-number states, mode unitaries and
//!   post-selection.
//! - [`sources`]: parametric downconversion (PDC) output and Bell states.
//! - [`optics`]: polarizing beam splitters and post-selected GHZ chains.
//! - [`encoding`]: parity / redundant encoded qubit registers and the encoded
//!   GHZ resource.
//! - [`correction`]: loss as an unread measurement, QND counting, case
//!   classification and the diagonal-basis correction.
//! - [`protocol`]: N-BB84 rounds over the (corrected) resource.
//! - [`rates`]: closed-form probabilities, key rates and parameter sweeps.
//! - [`montecarlo`]: trajectory sampling that cross-checks the closed forms.

pub mod correction;
pub mod encoding;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod montecarlo;
pub mod optics;
pub mod protocol;
pub mod rates;
pub mod rng;
pub mod sources;

pub use error::{CkaError, Result};
pub use num_complex::Complex64;
