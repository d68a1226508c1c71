//! Simulation core for a hybrid memristor-crossbar / stochastic-MTJ Ising machine.
//!
//! The crate is `no_std` and needs only `alloc`. It covers:
//!
//! - [`ising`]: Ising/QUBO models, energies, local fields and exact Boltzmann tables.
//! - [`device`]: memristor cells and crossbar MAC, program-and-verify, retention
//!   drift, and the stochastic MTJ p-bit with its pulse-width dependent readout.
//! - [`mapping`]: weighted MAX-CUT and graph-coloring encodings, lowering onto
//!   crossbar conductances, and solution decoders.
//! - [`anneal`]: Gibbs sampling through the device chain under a read-voltage ramp.
//! - [`oracle`]: exhaustive ground truth used to certify solutions.
//!
//! Units follow the hardware: conductances in µS, voltages in V, currents in µA,
//! resistances in Ω, times in seconds (hours for retention).

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod anneal;
pub mod device;
mod error;
pub mod ising;
pub mod mapping;
mod math;
pub mod oracle;

pub use error::{Error, Result};
pub use math::sigmoid;
