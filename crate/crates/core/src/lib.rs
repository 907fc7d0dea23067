pub mod domain;
pub mod error;
pub mod kb;
pub mod tracker;
pub mod goals;
pub mod simulator;
pub mod critic;
pub mod qnet;
pub mod agents;
pub mod trainer;
pub mod config;

pub use error::{DomainError, Error, KbError, QnetError, Result};
