//! Network model: buses, lines, switchgear and generators arranged in
//! hierarchical layers, plus the runtime switching state used while faults
//! are sectioned.

mod isolation;
mod topology;

use alloc::string::String;
use alloc::vec::Vec;

use crate::agents::{Battery, EvPark};
use crate::flow::PerUnitBase;
use crate::profile::LoadProfile;
use crate::stochastic::{EvAvailabilityModel, TruncatedNormal};

pub use isolation::Isolation;
pub use topology::{RadialReport, RadialViolation, SubSystem};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GridError {
    #[error("duplicate {kind} id {id}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("unknown {kind} reference {id}")]
    UnknownReference { kind: &'static str, id: String },
    #[error("{kind} {id}: {reason}")]
    InvalidComponent {
        kind: &'static str,
        id: String,
        reason: &'static str,
    },
    #[error("line {line} is not failed")]
    LineNotFailed { line: u32 },
    #[error("failed line {line} cannot be isolated from the source; section stays de-energized")]
    Unisolatable { line: u32, section: Isolation },
}

/// Layer of the power system hierarchy a bus belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerKind {
    Distribution,
    Microgrid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: u32,
    pub name: String,
    /// Index into [`PowerNetwork::layers`].
    pub layer: usize,
    /// Customers served, used as `N_i` in the customer-weighted indices.
    pub customers: u32,
    /// Households at the bus; sizes the EV park fleet.
    pub households: u32,
    /// Index into [`PowerNetwork::profiles`].
    pub profile: usize,
    pub peak_p_mw: f64,
    pub peak_q_mvar: f64,
    /// Cost of shedding load here, currency per MWh.
    pub shed_cost: f64,
    pub coordinates: Option<(f64, f64)>,
    pub(crate) grounded: u32,
}

impl Bus {
    pub fn new(id: u32, peak_p_mw: f64, peak_q_mvar: f64) -> Self {
        Self {
            id,
            name: alloc::format!("B{id}"),
            layer: 0,
            customers: 0,
            households: 0,
            profile: 0,
            peak_p_mw,
            peak_q_mvar,
            shed_cost: 1.0,
            coordinates: None,
            grounded: 0,
        }
    }

    /// True while the bus sits inside the section of an unswitched fault.
    pub fn is_grounded(&self) -> bool {
        self.grounded > 0
    }

    pub fn is_load_point(&self) -> bool {
        self.peak_p_mw > 0.0 || self.customers > 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineState {
    Operational,
    Failed { remaining_increments: u32 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Line {
    pub id: u32,
    /// Bus indices (not ids).
    pub from: usize,
    pub to: usize,
    pub length_km: f64,
    pub r_ohm: f64,
    pub x_ohm: f64,
    pub capacity_mw: f64,
    /// Failures per year and km.
    pub failure_rate: f64,
    /// Index into [`PowerNetwork::repair_models`].
    pub repair_model: usize,
    pub state: LineState,
    pub(crate) dead: u32,
}

impl Line {
    pub fn new(id: u32, from: usize, to: usize, r_ohm: f64, x_ohm: f64) -> Self {
        Self {
            id,
            from,
            to,
            length_km: 1.0,
            r_ohm,
            x_ohm,
            capacity_mw: f64::INFINITY,
            failure_rate: 0.0,
            repair_model: 0,
            state: LineState::Operational,
            dead: 0,
        }
    }

    pub fn is_operational(&self) -> bool {
        matches!(self.state, LineState::Operational)
    }

    /// Expected failures per year.
    pub fn annual_failures(&self) -> f64 {
        self.failure_rate * self.length_km
    }

    pub fn other_end(&self, bus: usize) -> usize {
        if self.from == bus {
            self.to
        } else {
            self.from
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SwitchKind {
    Disconnector,
    CircuitBreaker,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineEnd {
    From,
    To,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Switchgear {
    pub id: String,
    pub kind: SwitchKind,
    /// Line index.
    pub line: usize,
    pub end: LineEnd,
    /// Normal (pre-fault) position.
    pub normally_closed: bool,
    pub(crate) holds: u32,
}

impl Switchgear {
    pub fn new(id: impl Into<String>, kind: SwitchKind, line: usize, end: LineEnd) -> Self {
        Self {
            id: id.into(),
            kind,
            line,
            end,
            normally_closed: true,
            holds: 0,
        }
    }

    pub fn is_closed(&self) -> bool {
        self.normally_closed && self.holds == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub id: String,
    /// Bus index.
    pub bus: usize,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
    /// Models the connection to the overlying grid.
    pub is_slack: bool,
}

/// A complete network definition together with the data the simulation
/// needs to drive it (profiles, repair models, EV availability).
#[derive(Debug, Clone)]
pub struct PowerNetwork {
    pub name: String,
    pub base: PerUnitBase,
    pub layers: Vec<Layer>,
    pub buses: Vec<Bus>,
    pub lines: Vec<Line>,
    pub switchgear: Vec<Switchgear>,
    pub generators: Vec<Generator>,
    pub batteries: Vec<Battery>,
    pub ev_parks: Vec<EvPark>,
    pub profiles: Vec<LoadProfile>,
    pub repair_models: Vec<TruncatedNormal>,
    pub availability: EvAvailabilityModel,
    pub(crate) isolations: Vec<Option<Isolation>>,
}

impl PowerNetwork {
    /// Empty network with a single distribution layer, a flat load profile and
    /// the default repair model.
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            base: PerUnitBase::default(),
            layers: alloc::vec![Layer {
                name: String::from("distribution"),
                kind: LayerKind::Distribution,
            }],
            buses: Vec::new(),
            lines: Vec::new(),
            switchgear: Vec::new(),
            generators: Vec::new(),
            batteries: Vec::new(),
            ev_parks: Vec::new(),
            profiles: alloc::vec![LoadProfile::flat("flat")],
            repair_models: alloc::vec![TruncatedNormal::default_repair()],
            availability: EvAvailabilityModel::default(),
            isolations: Vec::new(),
        }
    }

    pub fn add_bus(&mut self, bus: Bus) -> usize {
        self.buses.push(bus);
        self.buses.len() - 1
    }

    pub fn add_line(&mut self, line: Line) -> usize {
        self.lines.push(line);
        self.isolations.push(None);
        self.lines.len() - 1
    }

    pub fn add_switch(&mut self, sw: Switchgear) -> usize {
        self.switchgear.push(sw);
        self.switchgear.len() - 1
    }

    pub fn add_generator(&mut self, gen: Generator) -> usize {
        self.generators.push(gen);
        self.generators.len() - 1
    }

    /// Adds a line plus a disconnector at its `from` end, the arrangement the
    /// shipped datasets use everywhere.
    pub fn connect(&mut self, id: u32, from: usize, to: usize, r_ohm: f64, x_ohm: f64) -> usize {
        let idx = self.add_line(Line::new(id, from, to, r_ohm, x_ohm));
        self.add_switch(Switchgear::new(
            alloc::format!("d{id}"),
            SwitchKind::Disconnector,
            idx,
            LineEnd::From,
        ));
        idx
    }

    pub fn bus_index(&self, id: u32) -> Option<usize> {
        self.buses.iter().position(|b| b.id == id)
    }

    pub fn line_index(&self, id: u32) -> Option<usize> {
        self.lines.iter().position(|l| l.id == id)
    }

    pub fn slack(&self) -> Option<usize> {
        self.generators.iter().position(|g| g.is_slack)
    }

    pub fn total_households(&self) -> u64 {
        self.buses.iter().map(|b| b.households as u64).sum()
    }

    pub fn total_customers(&self) -> u64 {
        self.buses.iter().map(|b| b.customers as u64).sum()
    }

    /// Switchgear indices mounted on `line`.
    pub fn switches_on(&self, line: usize) -> impl Iterator<Item = usize> + '_ {
        self.switchgear
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.line == line)
            .map(|(i, _)| i)
    }

    /// True when every switching device on the line is closed.
    pub fn line_closed(&self, line: usize) -> bool {
        self.switches_on(line).all(|s| self.switchgear[s].is_closed())
    }

    /// Energized path: operational, not inside a fault section, all devices closed.
    pub fn line_in_service(&self, line: usize) -> bool {
        let l = &self.lines[line];
        l.is_operational() && l.dead == 0 && self.line_closed(line)
    }

    /// Incident line indices per bus.
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = alloc::vec![Vec::new(); self.buses.len()];
        for (i, l) in self.lines.iter().enumerate() {
            adj[l.from].push(i);
            adj[l.to].push(i);
        }
        adj
    }

    /// Checks component-level invariants and cross references.
    pub fn check(&self) -> Result<(), GridError> {
        use alloc::string::ToString;
        fn invalid(kind: &'static str, id: impl ToString, reason: &'static str) -> GridError {
            GridError::InvalidComponent {
                kind,
                id: id.to_string(),
                reason,
            }
        }
        for (i, b) in self.buses.iter().enumerate() {
            if self.buses[..i].iter().any(|o| o.id == b.id) {
                return Err(GridError::DuplicateId {
                    kind: "bus",
                    id: b.id.to_string(),
                });
            }
            if !(b.shed_cost > 0.0) {
                return Err(invalid("bus", b.id, "shed cost must be positive"));
            }
            if b.peak_p_mw < 0.0 {
                return Err(invalid("bus", b.id, "demand must be nonnegative"));
            }
            if b.layer >= self.layers.len() || b.profile >= self.profiles.len() {
                return Err(invalid("bus", b.id, "dangling layer or profile"));
            }
        }
        for (i, l) in self.lines.iter().enumerate() {
            if self.lines[..i].iter().any(|o| o.id == l.id) {
                return Err(GridError::DuplicateId {
                    kind: "line",
                    id: l.id.to_string(),
                });
            }
            if l.from >= self.buses.len() || l.to >= self.buses.len() || l.from == l.to {
                return Err(invalid("line", l.id, "bad endpoints"));
            }
            if !(l.length_km > 0.0) {
                return Err(invalid("line", l.id, "length must be positive"));
            }
            if !(l.capacity_mw > 0.0) {
                return Err(invalid("line", l.id, "capacity must be positive"));
            }
            if !(l.failure_rate >= 0.0) {
                return Err(invalid("line", l.id, "failure rate must be nonnegative"));
            }
            if l.r_ohm < 0.0 || l.x_ohm < 0.0 {
                return Err(invalid("line", l.id, "impedance must be nonnegative"));
            }
            if l.repair_model >= self.repair_models.len() {
                return Err(invalid("line", l.id, "dangling repair model"));
            }
        }
        for s in &self.switchgear {
            if s.line >= self.lines.len() {
                return Err(invalid("switchgear", &s.id, "dangling line"));
            }
        }
        for g in &self.generators {
            if g.bus >= self.buses.len() {
                return Err(invalid("generator", &g.id, "dangling bus"));
            }
            if !(g.p_min_mw <= g.p_max_mw) {
                return Err(invalid("generator", &g.id, "p_min exceeds p_max"));
            }
        }
        for (i, b) in self.batteries.iter().enumerate() {
            if b.bus >= self.buses.len() {
                return Err(invalid("battery", &b.id, "dangling bus"));
            }
            if self.batteries[..i].iter().any(|o| o.bus == b.bus) {
                return Err(invalid("battery", &b.id, "more than one battery on bus"));
            }
            b.check().map_err(|reason| invalid("battery", &b.id, reason))?;
        }
        for (i, p) in self.ev_parks.iter().enumerate() {
            if p.bus >= self.buses.len() {
                return Err(invalid("ev park", &p.id, "dangling bus"));
            }
            if self.ev_parks[..i].iter().any(|o| o.bus == p.bus) {
                return Err(invalid("ev park", &p.id, "more than one EV park on bus"));
            }
            p.check().map_err(|reason| invalid("ev park", &p.id, reason))?;
        }
        self.availability
            .check()
            .map_err(|reason| invalid("availability", "model", reason))?;
        Ok(())
    }

    /// Resets runtime switching state, line states and agent state to the
    /// intact, fully charged starting point of an iteration.
    pub fn reset(&mut self) {
        for b in &mut self.buses {
            b.grounded = 0;
        }
        for l in &mut self.lines {
            l.state = LineState::Operational;
            l.dead = 0;
        }
        for s in &mut self.switchgear {
            s.holds = 0;
        }
        self.isolations.clear();
        self.isolations.resize(self.lines.len(), None);
        for b in &mut self.batteries {
            b.reset_full();
        }
        for p in &mut self.ev_parks {
            p.reset();
        }
    }
}
