//! Learning reward machines jointly with Q-learning.

pub mod automata;
pub mod baselines;
pub mod environments;
pub mod error;
pub mod harness;
pub mod inference;
pub mod jirp;
pub mod mdp;
pub mod qrm;

pub use error::{Error, Result};
