//! Configuration parsing, job orchestration, and serialization for the
//! transmission-eigenvalue solver binary.

pub mod config;
pub mod output;
pub mod runner;
