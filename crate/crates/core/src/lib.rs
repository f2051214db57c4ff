//! Robustness verification for quantum classifiers.
//!
//! A classifier is a quantum channel followed by a measurement. A correctly
//! classified state `rho` is epsilon-robust when no state `sigma` with
//! `1 - F(rho, sigma) <= epsilon` receives a different label. This crate
//! computes cheap sufficient certificates, exact semidefinite-programming
//! verdicts and optimal robust bounds, and brute-force oracles for small
//! dimensions.

pub mod casestudy;
pub mod classifier;
#[cfg(feature = "cli")]
pub mod cli;
pub mod error;
pub mod formats;
pub mod policy;
pub mod oracle;
pub mod qchannel;
pub mod qstate;
pub mod random;
pub mod sdp;
pub mod verifier;

pub use error::{Error, Result};
