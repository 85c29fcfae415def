//! Matter-wave interference under spontaneous collapse models.
//!
//! The crate predicts far-field and Kapitza-Dirac-Talbot-Lau patterns for
//! quantum mechanics and for the CSL, dCSL, cCSL, QMUPL and DP models, and
//! turns fringe data into exclusion maps over the model parameters.

pub mod amplification;
pub mod cli;
pub mod collapse;
pub mod config;
pub mod constants;
pub mod error;
pub mod farfield;
pub mod fitkit;
pub mod localization;
pub mod nearfield;
pub mod optics;
pub mod output;
pub mod quadrature;
pub mod special;
pub mod velocity;

pub use error::{Error, Result};
