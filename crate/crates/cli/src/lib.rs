//! Command implementations behind the `amgtheta` binary.

pub mod commands;
