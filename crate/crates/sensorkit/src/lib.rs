//! File formats, configuration, paired-sample generation and the command
//! line on top of `sensorkit-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod formats;
pub mod fsio;
pub mod pairgen;
