//! The `crashnet` pipeline: configuration, stages and plot output.

pub mod cli;
pub mod config;
pub mod error;
pub mod stages;
pub mod svg;
pub mod time;
