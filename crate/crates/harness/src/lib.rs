//! Experiment harness for the pbit-forge Ising machine simulator: config
//! files, graph files, campaigns and their on-disk reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod campaign;
pub mod commands;
pub mod config;
pub mod error;
pub mod graph_io;
pub mod output;

pub use error::HarnessError;
