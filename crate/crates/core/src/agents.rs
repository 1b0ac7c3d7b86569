//! Stationary batteries and aggregated EV parks.
//!
//! An EV park represents the plugged-in cars at one bus as a single battery
//! whose capacity and charger power scale with the number of cars drawn at the
//! start of a fault.

use alloc::string::String;

use rand::Rng;

use crate::stochastic::{sample_ev_count, sample_soc, SocSpec};

/// Stationary battery. Power in MW, energy in MWh.
#[derive(Debug, Clone, PartialEq)]
pub struct Battery {
    pub id: String,
    /// Bus index.
    pub bus: usize,
    pub capacity_mwh: f64,
    pub inverter_mw: f64,
    /// Applied on both charge and discharge.
    pub efficiency: f64,
    pub soc_min: f64,
    pub stored_mwh: f64,
    /// Disabled batteries stay in the dataset but take no part in a run.
    pub enabled: bool,
}

impl Battery {
    pub fn new(id: impl Into<String>, bus: usize) -> Self {
        Self {
            id: id.into(),
            bus,
            capacity_mwh: 0.5,
            inverter_mw: 0.25,
            efficiency: 0.95,
            soc_min: 0.1,
            stored_mwh: 0.5,
            enabled: true,
        }
    }

    pub fn check(&self) -> Result<(), &'static str> {
        if !(self.capacity_mwh > 0.0) || !(self.inverter_mw > 0.0) {
            return Err("capacity and inverter rating must be positive");
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err("efficiency outside (0, 1]");
        }
        if !(0.0..1.0).contains(&self.soc_min) {
            return Err("minimum SoC outside [0, 1)");
        }
        Ok(())
    }

    pub fn reset_full(&mut self) {
        self.stored_mwh = self.capacity_mwh;
    }

    pub fn floor_mwh(&self) -> f64 {
        self.soc_min * self.capacity_mwh
    }

    /// Largest power deliverable to the grid for `dt` hours.
    pub fn discharge_limit_mw(&self, dt: f64) -> f64 {
        let energy = (self.stored_mwh - self.floor_mwh()).max(0.0);
        self.inverter_mw.min(energy * self.efficiency / dt)
    }

    /// Largest power the battery can absorb from the grid for `dt` hours.
    pub fn charge_limit_mw(&self, dt: f64) -> f64 {
        let room = (self.capacity_mwh - self.stored_mwh).max(0.0);
        self.inverter_mw.min(room / self.efficiency / dt)
    }

    /// Exchanges power with the grid for `dt` hours; positive requests
    /// discharge, negative ones charge. Requests beyond the inverter rating or
    /// the energy limits are clipped. Returns the power actually exchanged.
    pub fn exchange(&mut self, requested_mw: f64, dt: f64) -> f64 {
        if requested_mw > 0.0 {
            let p = requested_mw.min(self.discharge_limit_mw(dt));
            self.stored_mwh = (self.stored_mwh - p * dt / self.efficiency).max(self.floor_mwh());
            p
        } else if requested_mw < 0.0 {
            let p = (-requested_mw).min(self.charge_limit_mw(dt));
            self.stored_mwh = (self.stored_mwh + p * dt * self.efficiency).min(self.capacity_mwh);
            -p
        } else {
            0.0
        }
    }

    /// Charges at the inverter limit from the grid for `hours` with nothing
    /// else happening, as between faults.
    pub fn idle_recharge(&mut self, hours: f64) {
        self.stored_mwh =
            (self.stored_mwh + self.inverter_mw * self.efficiency * hours).min(self.capacity_mwh);
    }
}

/// Running totals of one EV park over an iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvAccumulators {
    /// Charging the parked cars wanted but did not get, kWh.
    pub unmet_charge_kwh: f64,
    pub charged_kwh: f64,
    pub discharged_kwh: f64,
    /// Hours with unmet charging or discharge.
    pub demand_hours: f64,
    /// Discharge hours weighted by the fraction of present cars used.
    pub v2g_hours: f64,
    /// Discharge activations, each weighted by the largest fraction of the
    /// present cars used during it.
    pub activations: f64,
}

/// Plugged-in EVs at one bus, aggregated into a single battery.
#[derive(Debug, Clone, PartialEq)]
pub struct EvPark {
    pub id: String,
    /// Bus index.
    pub bus: usize,
    /// EVs owned at the bus; sized from households and the EV share unless
    /// pinned by `fixed_fleet`.
    pub max_fleet: u32,
    pub fixed_fleet: Option<u32>,
    pub battery_kwh: f64,
    pub charger_kw: f64,
    /// The chargers can feed back; `v2g` is set per run only where this holds.
    pub v2g_capable: bool,
    pub v2g: bool,
    /// Arrival SoC range; its lower end is also the discharge floor.
    pub soc: SocSpec,
    fleet: u32,
    stored_kwh: f64,
    in_activation: bool,
    activation_peak: f64,
    pub acc: EvAccumulators,
}

impl EvPark {
    pub fn new(id: impl Into<String>, bus: usize, max_fleet: u32) -> Self {
        Self {
            id: id.into(),
            bus,
            max_fleet,
            fixed_fleet: None,
            battery_kwh: 70.0,
            charger_kw: 3.6,
            v2g_capable: true,
            v2g: false,
            soc: SocSpec::default(),
            fleet: 0,
            stored_kwh: 0.0,
            in_activation: false,
            activation_peak: 0.0,
            acc: EvAccumulators::default(),
        }
    }

    pub fn check(&self) -> Result<(), &'static str> {
        if !(self.battery_kwh > 0.0) || !(self.charger_kw > 0.0) {
            return Err("battery capacity and charger power must be positive");
        }
        self.soc.check()
    }

    /// Clears fleet, activation state and accumulators.
    pub fn reset(&mut self) {
        self.fleet = 0;
        self.stored_kwh = 0.0;
        self.in_activation = false;
        self.activation_peak = 0.0;
        self.acc = EvAccumulators::default();
    }

    pub fn fleet(&self) -> u32 {
        self.fleet
    }

    pub fn stored_kwh(&self) -> f64 {
        self.stored_kwh
    }

    pub fn floor_kwh(&self) -> f64 {
        self.fleet as f64 * self.soc.soc_min * self.battery_kwh
    }

    pub fn capacity_kwh(&self) -> f64 {
        self.fleet as f64 * self.battery_kwh
    }

    pub fn power_limit_mw(&self) -> f64 {
        self.fleet as f64 * self.charger_kw / 1000.0
    }

    /// Draws the plugged-in cars and their stored energy at fault onset.
    /// `p_available` is the chance that one car of the fleet is plugged in.
    /// Any activation in progress is closed first.
    pub fn draw_fleet(&mut self, p_available: f64, rng: &mut impl Rng) -> u32 {
        self.close_activation();
        self.fleet = sample_ev_count(self.max_fleet, p_available, rng);
        self.stored_kwh = (0..self.fleet)
            .map(|_| sample_soc(self.soc, self.battery_kwh, rng))
            .sum();
        self.fleet
    }

    /// Forgets the drawn fleet once no fault is active.
    pub fn clear_fleet(&mut self) {
        self.close_activation();
        self.fleet = 0;
        self.stored_kwh = 0.0;
    }

    /// Charging power the parked cars ask for over the next `dt` hours, MW.
    pub fn charge_demand_mw(&self, dt: f64) -> f64 {
        let room = (self.capacity_kwh() - self.stored_kwh).max(0.0);
        (self.fleet as f64 * self.charger_kw).min(room / dt) / 1000.0
    }

    /// Power the park can feed back for `dt` hours, MW; zero without V2G.
    pub fn discharge_offer_mw(&self, dt: f64) -> f64 {
        if !self.v2g || self.fleet == 0 {
            return 0.0;
        }
        let energy = (self.stored_kwh - self.floor_kwh()).max(0.0);
        (self.fleet as f64 * self.charger_kw).min(energy / dt) / 1000.0
    }

    /// One increment of park operation at network balance `balance_mw`
    /// (positive = surplus): charge from surplus, or discharge into a deficit
    /// when V2G is enabled. Returns the exchange, positive toward the grid.
    pub fn step(&mut self, balance_mw: f64, dt: f64) -> f64 {
        if balance_mw > 0.0 {
            let ch = self.charge_demand_mw(dt).min(balance_mw);
            self.apply(ch, 0.0, dt);
            -ch
        } else {
            let dis = self.discharge_offer_mw(dt).min(-balance_mw);
            self.apply(0.0, dis, dt);
            dis
        }
    }

    /// Commits charging `charge_mw` and discharging `discharge_mw` for `dt`
    /// hours and updates the accumulators. Requests are clipped to what the
    /// fleet can do.
    pub fn apply(&mut self, charge_mw: f64, discharge_mw: f64, dt: f64) {
        if self.fleet == 0 {
            return;
        }
        let demand = self.charge_demand_mw(dt);
        let ch = charge_mw.clamp(0.0, demand);
        let dis = discharge_mw.clamp(0.0, self.discharge_offer_mw(dt));
        self.stored_kwh = (self.stored_kwh + (ch - dis) * 1000.0 * dt)
            .clamp(self.floor_kwh().min(self.stored_kwh), self.capacity_kwh());

        let unmet = (demand - ch) * 1000.0 * dt;
        self.acc.unmet_charge_kwh += unmet;
        self.acc.charged_kwh += ch * 1000.0 * dt;
        self.acc.discharged_kwh += dis * 1000.0 * dt;
        if unmet > 1e-9 || dis > 0.0 {
            self.acc.demand_hours += dt;
        }
        if dis > 0.0 {
            let used = libm::ceil(dis * 1000.0 / self.charger_kw - 1e-9);
            let frac = (used / self.fleet as f64).min(1.0);
            self.acc.v2g_hours += frac * dt;
            self.in_activation = true;
            self.activation_peak = self.activation_peak.max(frac);
        } else {
            self.close_activation();
        }
    }

    /// Ends a discharge activation, if one is running, and counts it.
    pub fn close_activation(&mut self) {
        if self.in_activation {
            self.acc.activations += self.activation_peak;
            self.in_activation = false;
            self.activation_peak = 0.0;
        }
    }
}
