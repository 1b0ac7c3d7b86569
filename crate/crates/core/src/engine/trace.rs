use alloc::vec::Vec;

/// Energy balance of one sub-system in one faulted increment, MW.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSystemRecord {
    /// Lowest bus index in the sub-system.
    pub first_bus: usize,
    pub buses: usize,
    pub island: bool,
    /// Bus index of the source that closed the balance, if a flow was run.
    pub reference: Option<usize>,
    /// Output of the reference source including losses.
    pub generation_mw: f64,
    /// Output of every other source.
    pub discharge_mw: f64,
    /// Charging served to batteries and EV parks.
    pub charge_mw: f64,
    pub demand_mw: f64,
    pub shed_mw: f64,
    pub losses_mw: f64,
    pub flow_iterations: usize,
    pub flow_converged: bool,
    /// LP re-solves needed for the reference source to cover losses.
    pub loss_rounds: usize,
}

impl SubSystemRecord {
    /// generation + discharge − charge − demand + shed − losses, MW.
    pub fn residual_mw(&self) -> f64 {
        self.generation_mw + self.discharge_mw - self.charge_mw - self.demand_mw + self.shed_mw
            - self.losses_mw
    }
}

/// One faulted increment.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementRecord {
    pub iteration: u64,
    pub increment: u64,
    pub time_hours: f64,
    pub failed_lines: Vec<u32>,
    pub sub_systems: Vec<SubSystemRecord>,
    /// (bus id, MW) for every load point with shed.
    pub shed: Vec<(u32, f64)>,
    /// (bus id, MW, positive toward the grid) for every park exchanging power.
    pub ev_exchange: Vec<(u32, f64)>,
}

/// Receives trace records as faulted increments complete.
pub trait TraceSink {
    fn record(&mut self, rec: &IncrementRecord);
}

impl TraceSink for Vec<IncrementRecord> {
    fn record(&mut self, rec: &IncrementRecord) {
        self.push(rec.clone());
    }
}

/// Discards every record.
pub struct NoTrace;

impl TraceSink for NoTrace {
    fn record(&mut self, _: &IncrementRecord) {}
}
