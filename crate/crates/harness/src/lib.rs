//! Harness around [`varbandit_core`]: JSON configs, CSV traces, parallel
//! sweeps with slope fits, and the `varbandit` CLI.

pub mod cli;
pub mod config;
pub mod error;
pub mod output;
pub mod report;
pub mod run;
pub mod sweep;

pub use error::CliError;
pub use varbandit_core as core;
