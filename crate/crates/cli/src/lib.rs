//! Command-line front end: TOML-configured analyses, synthetic-trial
//! generation, and oracle-backed self-validation.

pub mod commands;
pub mod config;
pub mod report;
pub mod validate;
