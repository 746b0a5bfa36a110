//! Command implementations behind the `boardnet` binary.

pub mod commands;
pub mod config;
