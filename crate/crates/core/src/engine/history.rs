use alloc::vec::Vec;

use crate::agents::EvAccumulators;

/// Threshold below which shed power counts as no interruption, MW.
pub const SHED_EPS_MW: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LoadPointHistory {
    /// Bus index.
    pub bus: usize,
    pub customers: u32,
    /// Distinct de-energization episodes.
    pub interruptions: u32,
    pub outage_hours: f64,
    pub energy_shed_mwh: f64,
    pub(crate) shed_last: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ParkHistory {
    /// Bus index.
    pub bus: usize,
    /// EVs owned at the bus, the weight in the fleet-weighted indices.
    pub max_fleet: u32,
    pub acc: EvAccumulators,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaultEvent {
    pub line_id: u32,
    pub start_hours: f64,
    pub duration_hours: f64,
}

/// Everything recorded during one simulated year.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IterationHistory {
    pub iteration: u64,
    pub load_points: Vec<LoadPointHistory>,
    pub parks: Vec<ParkHistory>,
    /// Episodes with shed anywhere in the system.
    pub system_interruptions: u32,
    /// Hours with shed anywhere in the system.
    pub system_outage_hours: f64,
    pub ens_mwh: f64,
    pub events: Vec<FaultEvent>,
    /// Increments in which at least one line was out.
    pub faulted_increments: u64,
    pub(crate) system_shed_last: bool,
}

impl IterationHistory {
    /// Records one increment's shed per load point (same order as
    /// `load_points`).
    pub(crate) fn record_shed(&mut self, shed_mw: &[f64], dt: f64) {
        let mut any = false;
        for (lp, &s) in self.load_points.iter_mut().zip(shed_mw) {
            let on = s > SHED_EPS_MW;
            if on {
                if !lp.shed_last {
                    lp.interruptions += 1;
                }
                lp.outage_hours += dt;
                lp.energy_shed_mwh += s * dt;
                self.ens_mwh += s * dt;
                any = true;
            }
            lp.shed_last = on;
        }
        if any {
            if !self.system_shed_last {
                self.system_interruptions += 1;
            }
            self.system_outage_hours += dt;
        }
        self.system_shed_last = any;
    }

    /// Marks a stretch of healthy increments: ongoing episodes end.
    pub(crate) fn record_healthy(&mut self) {
        for lp in &mut self.load_points {
            lp.shed_last = false;
        }
        self.system_shed_last = false;
    }
}
