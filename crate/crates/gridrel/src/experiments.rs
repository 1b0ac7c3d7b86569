//! Case campaigns and the factorial sensitivity runner.

use gridrel_core::engine::EngineError;
use gridrel_core::{IndexSummary, PowerNetwork, Simulator};

use crate::config::{CampaignConfig, CaseSpec, Cell, ConfigError, FactorialDesign, Overrides};
use crate::montecarlo::{run_reports, summarize};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Setup(EngineError),
    #[error("{0}")]
    Runtime(EngineError),
}

impl RunError {
    fn from_engine(e: EngineError) -> Self {
        match e {
            EngineError::Shed { .. } => RunError::Runtime(e),
            _ => RunError::Setup(e),
        }
    }

    /// Configuration problems as opposed to failures during simulation.
    pub fn is_config(&self) -> bool {
        !matches!(self, RunError::Runtime(_))
    }
}

/// Builds the simulator for one case with extra overrides on top.
pub fn prepare(
    base: &PowerNetwork,
    config: &CampaignConfig,
    case: &CaseSpec,
    extra: Option<&Overrides>,
) -> Result<Simulator, RunError> {
    let mut net = base.clone();
    case.overrides.apply(&mut net)?;
    if let Some(o) = extra {
        o.apply(&mut net)?;
    }
    Simulator::new(net, config.simulation_config(case)).map_err(RunError::from_engine)
}

#[derive(Debug, Clone)]
pub struct CaseResult {
    pub spec: CaseSpec,
    pub summary: IndexSummary,
}

/// Outcome of a campaign that stopped early; completed cases are kept.
#[derive(Debug)]
pub struct CampaignFailure {
    pub completed: Vec<CaseResult>,
    pub case: String,
    pub error: RunError,
}

impl std::fmt::Display for CampaignFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "case {}: {}", self.case, self.error)
    }
}

pub fn run_case(
    base: &PowerNetwork,
    config: &CampaignConfig,
    case: &CaseSpec,
    threads: usize,
) -> Result<CaseResult, RunError> {
    let sim = prepare(base, config, case, None)?;
    let reports = run_reports(&sim, threads).map_err(RunError::from_engine)?;
    Ok(CaseResult {
        spec: case.clone(),
        summary: summarize(&reports),
    })
}

/// Runs the cases in order with the campaign seed. The first failure stops
/// the campaign.
pub fn run_cases(
    base: &PowerNetwork,
    config: &CampaignConfig,
    cases: &[CaseSpec],
    threads: usize,
) -> Result<Vec<CaseResult>, CampaignFailure> {
    let mut done = Vec::with_capacity(cases.len());
    for case in cases {
        match run_case(base, config, case, threads) {
            Ok(r) => done.push(r),
            Err(error) => {
                return Err(CampaignFailure {
                    completed: done,
                    case: case.name.clone(),
                    error,
                })
            }
        }
    }
    Ok(done)
}

#[derive(Debug, Clone)]
pub struct CellResult {
    pub cell: Cell,
    pub outcome: Result<IndexSummary, String>,
}

/// Runs every cell of `design` on its base case. A failing cell is recorded
/// and the remaining cells still run.
pub fn run_factorial(
    base: &PowerNetwork,
    config: &CampaignConfig,
    design: &FactorialDesign,
    threads: usize,
) -> Result<Vec<CellResult>, RunError> {
    design.check()?;
    let case = config.case(&design.base_case).ok_or_else(|| {
        ConfigError::Invalid(format!("base case {:?} is not defined", design.base_case))
    })?;
    let mut out = Vec::new();
    for cell in design.cells() {
        let outcome = prepare(base, config, case, Some(&design.overrides(&cell)))
            .and_then(|sim| run_reports(&sim, threads).map_err(RunError::from_engine))
            .map(|r| summarize(&r))
            .map_err(|e| e.to_string());
        out.push(CellResult { cell, outcome });
    }
    Ok(out)
}
