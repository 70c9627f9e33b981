//! Scenario files, run orchestration and file formats for the Schrödinger–Maxwell solver.

pub mod config;
pub mod error;
pub mod manifest;
pub mod runner;
pub mod series_io;
pub mod snapshot;

pub use error::{exit, SimError};
