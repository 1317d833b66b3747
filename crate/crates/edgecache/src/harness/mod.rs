//! Reproducible experiment and validation harness behind the `edgecache` CLI.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod table;
pub mod validate;
