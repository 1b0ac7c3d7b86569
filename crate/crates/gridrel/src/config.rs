//! Campaign configuration: simulation settings, case presets and the
//! factorial design.

use std::collections::HashSet;
use std::path::PathBuf;

use gridrel_core::stochastic::TruncatedNormal;
use gridrel_core::{PowerNetwork, SimulationConfig};
use serde::{Deserialize, Serialize};

use crate::format::{read_text, LoadError};

/// The campaign shipped with the crate: Cases 1 to 4 and the 18-cell design.
pub const EMBEDDED_CAMPAIGN: &str = include_str!("../data/campaign.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("{0}")]
    Invalid(String),
}

/// Parameter overrides applied on top of the dataset.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Charger power of every EV park, kW.
    pub charger_kw: Option<f64>,
    /// Share of households owning an EV.
    pub ev_share: Option<f64>,
    /// Location of every repair-time model, hours. Bounds are kept.
    pub repair_loc_h: Option<f64>,
    /// Scale of every repair-time model, hours.
    pub repair_scale_h: Option<f64>,
}

impl Overrides {
    pub fn apply(&self, net: &mut PowerNetwork) -> Result<(), ConfigError> {
        if let Some(kw) = self.charger_kw {
            if !(kw > 0.0) {
                return Err(ConfigError::Invalid("charger_kw must be positive".into()));
            }
            for p in &mut net.ev_parks {
                p.charger_kw = kw;
            }
        }
        if let Some(x) = self.ev_share {
            net.availability.ev_share = x;
            net.availability
                .check()
                .map_err(|r| ConfigError::Invalid(format!("ev_share: {r}")))?;
        }
        if self.repair_loc_h.is_some() || self.repair_scale_h.is_some() {
            for m in &mut net.repair_models {
                *m = TruncatedNormal::new(
                    self.repair_loc_h.unwrap_or(m.loc()),
                    self.repair_scale_h.unwrap_or(m.scale()),
                    m.lower(),
                    m.upper(),
                )
                .map_err(|e| ConfigError::Invalid(format!("repair override: {e}")))?;
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseSpec {
    pub name: String,
    #[serde(default)]
    pub v2g: bool,
    #[serde(default)]
    pub batteries: bool,
    #[serde(default)]
    pub overrides: Overrides,
}

impl CaseSpec {
    /// Cases 1 to 4: EV parks without and with V2G, each without and with
    /// the two stationary batteries.
    pub fn presets() -> Vec<CaseSpec> {
        [(false, false), (true, false), (false, true), (true, true)]
            .into_iter()
            .enumerate()
            .map(|(i, (v2g, batteries))| CaseSpec {
                name: format!("case{}", i + 1),
                v2g,
                batteries,
                overrides: Overrides::default(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorialDesign {
    /// Case the cells start from.
    pub base_case: String,
    pub charger_kw: Vec<f64>,
    pub ev_share: Vec<f64>,
    pub repair_loc_h: Vec<f64>,
    pub repair_scale_h: f64,
}

impl Default for FactorialDesign {
    fn default() -> Self {
        Self {
            base_case: "case2".into(),
            charger_kw: vec![3.6, 7.2],
            ev_share: vec![0.46, 0.61, 0.87],
            repair_loc_h: vec![0.5, 1.0, 1.5],
            repair_scale_h: 0.5,
        }
    }
}

/// One cell of a factorial design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cell {
    pub charger_kw: f64,
    pub ev_share: f64,
    pub repair_loc_h: f64,
}

impl FactorialDesign {
    /// Full cross product, charger power outermost and repair loc innermost.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for &charger_kw in &self.charger_kw {
            for &ev_share in &self.ev_share {
                for &repair_loc_h in &self.repair_loc_h {
                    out.push(Cell {
                        charger_kw,
                        ev_share,
                        repair_loc_h,
                    });
                }
            }
        }
        out
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        for (name, levels) in [
            ("charger_kw", &self.charger_kw),
            ("ev_share", &self.ev_share),
            ("repair_loc_h", &self.repair_loc_h),
        ] {
            if levels.is_empty() {
                return Err(ConfigError::Invalid(format!("factor {name} has no levels")));
            }
            let mut seen = HashSet::new();
            if !levels.iter().all(|v| seen.insert(v.to_bits())) {
                return Err(ConfigError::Invalid(format!("factor {name} repeats a level")));
            }
        }
        Ok(())
    }

    pub fn overrides(&self, cell: &Cell) -> Overrides {
        Overrides {
            charger_kw: Some(cell.charger_kw),
            ev_share: Some(cell.ev_share),
            repair_loc_h: Some(cell.repair_loc_h),
            repair_scale_h: Some(self.repair_scale_h),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub iterations: u64,
    pub seed: u64,
    pub increment_minutes: f64,
    #[serde(default = "year")]
    pub horizon_hours: f64,
}

fn year() -> f64 {
    gridrel_core::HOURS_PER_YEAR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CampaignConfig {
    /// Dataset path, relative to the working directory; the embedded 33-bus
    /// network when absent.
    pub network: Option<PathBuf>,
    pub simulation: SimulationSection,
    #[serde(default, rename = "case")]
    pub cases: Vec<CaseSpec>,
    #[serde(default)]
    pub factorial: Option<FactorialDesign>,
}

impl CampaignConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let cfg: CampaignConfig = toml::from_str(text)?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: Option<&std::path::Path>) -> Result<Self, ConfigError> {
        match path {
            None => Self::parse(EMBEDDED_CAMPAIGN),
            Some(p) => Self::parse(&read_text(p)?),
        }
    }

    pub fn check(&self) -> Result<(), ConfigError> {
        let mut names = HashSet::new();
        for c in &self.cases {
            if !names.insert(c.name.as_str()) {
                return Err(ConfigError::Invalid(format!("duplicate case name {:?}", c.name)));
            }
        }
        if let Some(f) = &self.factorial {
            f.check()?;
            if !self.cases.iter().any(|c| c.name == f.base_case) {
                return Err(ConfigError::Invalid(format!(
                    "factorial base case {:?} is not defined",
                    f.base_case
                )));
            }
        }
        Ok(())
    }

    pub fn case(&self, name: &str) -> Option<&CaseSpec> {
        self.cases.iter().find(|c| c.name == name)
    }

    pub fn simulation_config(&self, case: &CaseSpec) -> SimulationConfig {
        SimulationConfig {
            increment_minutes: self.simulation.increment_minutes,
            horizon_hours: self.simulation.horizon_hours,
            iterations: self.simulation.iterations,
            seed: self.simulation.seed,
            v2g: case.v2g,
            batteries: case.batteries,
        }
    }
}
