//! Datasets, experiment campaigns and result files for `gridrel-core`.
//!
//! * [`format`]: TOML network datasets, including the embedded IEEE 33-bus
//!   reconstruction.
//! * [`config`]: campaign files, case presets and factorial designs.
//! * [`montecarlo`]: thread-count independent parallel iterations.
//! * [`experiments`]: case campaigns and factorial runs.
//! * [`output`]: CSV and JSON result files with a reproducibility manifest.

pub mod config;
pub mod experiments;
pub mod format;
pub mod montecarlo;
pub mod output;

pub use config::{CampaignConfig, CaseSpec, FactorialDesign};
pub use format::{load_network, parse_network, LoadError};
