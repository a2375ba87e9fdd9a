//! One-shot capacity bounds for sending public and private messages over a
//! quantum wiretap channel, with exact finite-size protocol simulation.
//!
//! The crate is organised bottom-up: [`qmat`] provides labeled dense linear
//! algebra, [`divergences`] the entropic quantities, [`channels`] the channel
//! models and joint wiretap states, [`rates`] the one-shot rate pairs and
//! region sweeps, and [`protosim`] exact simulation of the coding protocol.

pub mod channels;
pub mod classical;
pub mod divergences;
pub mod error;
pub mod exec;
pub mod protosim;
pub mod qmat;
pub mod random;
pub mod rates;

pub use error::{Error, Result};
