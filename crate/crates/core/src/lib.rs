//! Sequential Monte Carlo reliability assessment for radially operated
//! distribution networks with stationary batteries and vehicle-to-grid (V2G)
//! capable EV parks.
//!
//! The crate is `no_std` and only needs an allocator. Everything that touches
//! the filesystem, threads or the command line lives in the `gridrel`
//! companion crate.
//!
//! Layout:
//!
//! * [`grid`]: buses, lines, switchgear, fault sectioning and sub-systems.
//! * [`stochastic`]: seeded random streams and every sampling routine.
//! * [`flow`]: forward-backward sweep load flow for radial sub-systems.
//! * [`shed`]: the minimum-cost load-shedding linear program.
//! * [`agents`]: batteries and aggregated EV parks.
//! * [`engine`]: the per-increment procedure and yearly iterations.
//! * [`indices`]: reliability indices and ensemble statistics.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod agents;
pub mod engine;
pub mod flow;
pub mod grid;
pub mod indices;
pub mod profile;
pub mod shed;
pub(crate) mod special;
pub mod stochastic;

pub use agents::{Battery, EvPark};
pub use engine::{IterationHistory, SimulationConfig, Simulator};
pub use grid::{PowerNetwork, SubSystem};
pub use indices::{IndexReport, IndexSummary};

/// Hours in the simulated year.
pub const HOURS_PER_YEAR: f64 = 8760.0;
