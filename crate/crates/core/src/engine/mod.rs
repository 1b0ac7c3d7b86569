//! Sequential Monte Carlo driver.
//!
//! One iteration simulates a year in fixed increments. Healthy stretches are
//! skipped in one jump: each operational line carries the index of its next
//! failure, drawn from the geometric distribution that per-increment Bernoulli
//! sampling would produce. Only increments with a line out are simulated in
//! full: sectioning, sub-systems, batteries and EV parks, shedding and load flow.

mod history;
mod increment;
mod trace;

use alloc::string::String;
use alloc::vec::Vec;

use crate::grid::{GridError, PowerNetwork, RadialReport};
use crate::indices::{IndexReport, IndexSummary};
use crate::shed::ShedError;
use crate::stochastic::{
    failure_probability, increments_until_failure, repair_increments, ComponentKind, Purpose,
    RandomStream,
};

pub use history::{FaultEvent, IterationHistory, LoadPointHistory, ParkHistory, SHED_EPS_MW};
pub use trace::{IncrementRecord, NoTrace, SubSystemRecord, TraceSink};

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub increment_minutes: f64,
    pub horizon_hours: f64,
    pub iterations: u64,
    pub seed: u64,
    /// EV parks may discharge into the grid.
    pub v2g: bool,
    /// Stationary batteries take part.
    pub batteries: bool,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            increment_minutes: 5.0,
            horizon_hours: crate::HOURS_PER_YEAR,
            iterations: 3000,
            seed: 0,
            v2g: false,
            batteries: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("network is not radial: {0}")]
    NotRadial(RadialReport),
    #[error("iteration {iteration}, increment {increment}: {source}")]
    Shed {
        iteration: u64,
        increment: u64,
        source: ShedError,
    },
}

/// A configured network ready to run iterations.
#[derive(Debug, Clone)]
pub struct Simulator {
    template: PowerNetwork,
    config: SimulationConfig,
    dt: f64,
    increments: u64,
    /// Bus index of each load point.
    load_points: Vec<usize>,
}

impl Simulator {
    /// Applies the case flags to `network`, sizes the EV fleets and checks
    /// everything a run relies on.
    pub fn new(mut network: PowerNetwork, config: SimulationConfig) -> Result<Self, EngineError> {
        if !(config.increment_minutes > 0.0) || !(config.horizon_hours > 0.0) {
            return Err(EngineError::Config("increment and horizon must be positive".into()));
        }
        let steps = config.horizon_hours * 60.0 / config.increment_minutes;
        if (steps - libm::round(steps)).abs() > 1e-9 * steps {
            return Err(EngineError::Config(
                "increment must divide the horizon".into(),
            ));
        }
        if config.iterations == 0 {
            return Err(EngineError::Config("at least one iteration is required".into()));
        }
        if config.batteries && network.batteries.is_empty() {
            return Err(EngineError::Config(
                "batteries requested but the network defines none".into(),
            ));
        }
        network.check()?;
        let report = network.validate_radial();
        if !report.is_ok() {
            return Err(EngineError::NotRadial(report));
        }
        for b in &mut network.batteries {
            b.enabled = config.batteries;
        }
        let availability = network.availability.clone();
        for i in 0..network.ev_parks.len() {
            let households = network.buses[network.ev_parks[i].bus].households;
            let park = &mut network.ev_parks[i];
            park.v2g = config.v2g && park.v2g_capable;
            park.max_fleet = park
                .fixed_fleet
                .unwrap_or_else(|| availability.fleet_size(households));
        }
        network.reset();
        let load_points = (0..network.buses.len())
            .filter(|&b| network.buses[b].is_load_point())
            .collect();
        Ok(Self {
            template: network,
            dt: config.increment_minutes / 60.0,
            increments: libm::round(steps) as u64,
            config,
            load_points,
        })
    }

    pub fn network(&self) -> &PowerNetwork {
        &self.template
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn increment_hours(&self) -> f64 {
        self.dt
    }

    pub fn increments(&self) -> u64 {
        self.increments
    }

    /// Bus indices of the load points, in history order.
    pub fn load_points(&self) -> &[usize] {
        &self.load_points
    }

    pub fn total_customers(&self) -> u64 {
        self.load_points
            .iter()
            .map(|&b| self.template.buses[b].customers as u64)
            .sum()
    }

    fn stream(&self, iteration: u64, kind: ComponentKind, index: usize, purpose: Purpose) -> RandomStream {
        RandomStream::new(self.config.seed, iteration, kind, index as u64, purpose)
    }

    pub fn run_iteration(&self, iteration: u64) -> Result<IterationHistory, EngineError> {
        self.run_iteration_traced(iteration, &mut NoTrace)
    }

    /// Simulates one year. Deterministic in `(seed, iteration)`.
    pub fn run_iteration_traced(
        &self,
        iteration: u64,
        sink: &mut dyn TraceSink,
    ) -> Result<IterationHistory, EngineError> {
        let mut net = self.template.clone();
        net.reset();
        let n_lines = net.lines.len();
        let mut fail_rng: Vec<RandomStream> = (0..n_lines)
            .map(|l| self.stream(iteration, ComponentKind::Line, l, Purpose::Failure))
            .collect();
        let mut repair_rng: Vec<RandomStream> = (0..n_lines)
            .map(|l| self.stream(iteration, ComponentKind::Line, l, Purpose::Repair))
            .collect();
        let mut fleet_rng: Vec<RandomStream> = (0..net.ev_parks.len())
            .map(|p| self.stream(iteration, ComponentKind::EvPark, p, Purpose::Fleet))
            .collect();
        let probability: Vec<f64> = net
            .lines
            .iter()
            .map(|l| failure_probability(l, self.dt))
            .collect();
        // First increment index at or after `from` in which line `l` fails.
        let mut draw_next = |l: usize, from: u64| {
            increments_until_failure(probability[l], &mut fail_rng[l])
                .map_or(u64::MAX, |k| from.saturating_add(k - 1))
        };
        let mut next_fail: Vec<u64> = (0..n_lines).map(|l| draw_next(l, 0)).collect();

        let mut hist = IterationHistory {
            iteration,
            load_points: self
                .load_points
                .iter()
                .map(|&b| LoadPointHistory {
                    bus: b,
                    customers: net.buses[b].customers,
                    ..LoadPointHistory::default()
                })
                .collect(),
            ..IterationHistory::default()
        };
        let mut ctx = increment::Context::new(self, &net);

        let mut t: u64 = 0;
        while t < self.increments {
            if !net.any_failed() {
                let stop = next_fail.iter().copied().min().unwrap_or(u64::MAX).min(self.increments);
                if stop > t {
                    let hours = (stop - t) as f64 * self.dt;
                    for b in net.batteries.iter_mut().filter(|b| b.enabled) {
                        b.idle_recharge(hours);
                    }
                    hist.record_healthy();
                    t = stop;
                }
                if t >= self.increments {
                    break;
                }
            }

            let mut new_fault = false;
            for l in 0..n_lines {
                if next_fail[l] != t {
                    continue;
                }
                next_fail[l] = u64::MAX;
                let model = net.repair_models[net.lines[l].repair_model];
                let hours = model.sample(&mut repair_rng[l]);
                let steps = repair_increments(hours, self.dt);
                net.fail_line(l, steps);
                hist.events.push(FaultEvent {
                    line_id: net.lines[l].id,
                    start_hours: t as f64 * self.dt,
                    duration_hours: steps as f64 * self.dt,
                });
                match net.isolate_fault(l) {
                    Ok(_) | Err(GridError::Unisolatable { .. }) => {}
                    Err(e) => return Err(e.into()),
                }
                new_fault = true;
            }
            if new_fault {
                let hour = (t as f64 * self.dt) % 24.0;
                let p = net.availability.availability(hour);
                for (park, rng) in net.ev_parks.iter_mut().zip(fleet_rng.iter_mut()) {
                    park.draw_fleet(p, rng);
                }
            }

            ctx.process(&mut net, iteration, t, &mut hist, sink)
                .map_err(|source| EngineError::Shed {
                    iteration,
                    increment: t,
                    source,
                })?;
            hist.faulted_increments += 1;

            for l in net.tick_repairs() {
                next_fail[l] = draw_next(l, t + 1);
            }
            if !net.any_failed() {
                for park in &mut net.ev_parks {
                    park.clear_fleet();
                }
            }
            t += 1;
        }

        for park in &mut net.ev_parks {
            park.clear_fleet();
        }
        hist.parks = net
            .ev_parks
            .iter()
            .map(|p| ParkHistory {
                bus: p.bus,
                max_fleet: p.max_fleet,
                acc: p.acc,
            })
            .collect();
        Ok(hist)
    }

    /// Runs every iteration in order on the calling thread, handing each
    /// report to `on_report`, and returns the ensemble summary.
    pub fn run_monte_carlo(
        &self,
        mut on_report: impl FnMut(&IndexReport),
    ) -> Result<IndexSummary, EngineError> {
        let mut summary = IndexSummary::new();
        for i in 0..self.config.iterations {
            let hist = self.run_iteration(i)?;
            let report = IndexReport::from_history(&hist);
            on_report(&report);
            summary.push(&report);
        }
        Ok(summary)
    }
}
