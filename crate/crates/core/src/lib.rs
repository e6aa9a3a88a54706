//! Mixture-model imputation of incomplete detector data and a neural
//! particle-identification benchmark built on top of it.

pub mod cli;
pub mod em;
pub mod error;
pub mod eval;
pub mod imputers;
pub mod net;
pub mod oracle;
pub mod math;
pub mod pipeline;
pub mod provenance;
pub mod seed;
pub mod sim;
pub mod species;

pub use error::{Error, Result};
