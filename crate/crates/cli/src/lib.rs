//! Configuration, output writers and subcommand drivers for `visco-emc`.

pub mod commands;
pub mod config;
pub mod output;
