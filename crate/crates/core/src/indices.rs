//! Reliability indices per iteration and ensemble statistics.

use alloc::vec::Vec;

use crate::engine::IterationHistory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum IndexError {
    #[error("no customers at any load point")]
    NoCustomers,
    #[error("no EVs at any park")]
    NoEvs,
}

/// Energy not supplied, MWh: shed power times increment, summed.
pub fn compute_ens(history: &IterationHistory) -> f64 {
    history.load_points.iter().map(|lp| lp.energy_shed_mwh).sum()
}

fn customer_weighted(
    history: &IterationHistory,
    value: impl Fn(&crate::engine::LoadPointHistory) -> f64,
) -> Result<f64, IndexError> {
    let total: u64 = history.load_points.iter().map(|lp| lp.customers as u64).sum();
    if total == 0 {
        return Err(IndexError::NoCustomers);
    }
    let sum: f64 = history
        .load_points
        .iter()
        .map(|lp| value(lp) * lp.customers as f64)
        .sum();
    Ok(sum / total as f64)
}

/// Interruptions per customer.
pub fn compute_saifi(history: &IterationHistory) -> Result<f64, IndexError> {
    customer_weighted(history, |lp| lp.interruptions as f64)
}

/// Outage hours per customer.
pub fn compute_saidi(history: &IterationHistory) -> Result<f64, IndexError> {
    customer_weighted(history, |lp| lp.outage_hours)
}

/// Energy the parks wanted but did not get plus energy they gave back, MWh.
pub fn compute_ev_demand(history: &IterationHistory) -> f64 {
    history
        .parks
        .iter()
        .map(|p| (p.acc.unmet_charge_kwh + p.acc.discharged_kwh) / 1000.0)
        .sum()
}

fn fleet_weighted(
    history: &IterationHistory,
    value: impl Fn(&crate::engine::ParkHistory) -> f64,
) -> Result<f64, IndexError> {
    let total: u64 = history.parks.iter().map(|p| p.max_fleet as u64).sum();
    if total == 0 {
        return Err(IndexError::NoEvs);
    }
    let sum: f64 = history
        .parks
        .iter()
        .map(|p| value(p) * p.max_fleet as f64)
        .sum();
    Ok(sum / total as f64)
}

/// V2G activations per EV.
pub fn compute_ev_int(history: &IterationHistory) -> Result<f64, IndexError> {
    fleet_weighted(history, |p| p.acc.activations)
}

/// V2G hours per EV.
pub fn compute_ev_dur(history: &IterationHistory) -> Result<f64, IndexError> {
    fleet_weighted(history, |p| p.acc.v2g_hours)
}

/// The indices of one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IndexReport {
    pub iteration: u64,
    /// System interruption episodes per year.
    pub lambda_s: f64,
    /// Hours per year with shed somewhere.
    pub u_s: f64,
    /// Mean episode duration, hours; `None` without episodes.
    pub r_s: Option<f64>,
    pub ens_mwh: f64,
    pub saifi: f64,
    pub saidi: f64,
    pub ev_demand_mwh: f64,
    pub ev_int: f64,
    pub ev_dur_h: f64,
}

impl IndexReport {
    /// Indices of one history. Systems without customers or EVs report zero
    /// for the indices weighted by them.
    pub fn from_history(history: &IterationHistory) -> Self {
        let lambda_s = history.system_interruptions as f64;
        let u_s = history.system_outage_hours;
        Self {
            iteration: history.iteration,
            lambda_s,
            u_s,
            r_s: (lambda_s > 0.0).then(|| u_s / lambda_s),
            ens_mwh: compute_ens(history),
            saifi: compute_saifi(history).unwrap_or(0.0),
            saidi: compute_saidi(history).unwrap_or(0.0),
            ev_demand_mwh: compute_ev_demand(history),
            ev_int: compute_ev_int(history).unwrap_or(0.0),
            ev_dur_h: compute_ev_dur(history).unwrap_or(0.0),
        }
    }

    pub fn get(&self, index: Index) -> f64 {
        match index {
            Index::LambdaS => self.lambda_s,
            Index::US => self.u_s,
            Index::Ens => self.ens_mwh,
            Index::Saifi => self.saifi,
            Index::Saidi => self.saidi,
            Index::EvDemand => self.ev_demand_mwh,
            Index::EvInt => self.ev_int,
            Index::EvDur => self.ev_dur_h,
        }
    }
}

/// Indices summarized over the ensemble.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Index {
    LambdaS,
    US,
    Ens,
    Saifi,
    Saidi,
    EvDemand,
    EvInt,
    EvDur,
}

impl Index {
    pub const ALL: [Index; 8] = [
        Index::LambdaS,
        Index::US,
        Index::Ens,
        Index::Saifi,
        Index::Saidi,
        Index::EvDemand,
        Index::EvInt,
        Index::EvDur,
    ];

    /// Column name with unit.
    pub fn label(self) -> &'static str {
        match self {
            Index::LambdaS => "lambda_s [1/yr]",
            Index::US => "U_s [h/yr]",
            Index::Ens => "ENS [MWh/yr]",
            Index::Saifi => "SAIFI [1/cust.yr]",
            Index::Saidi => "SAIDI [h/cust.yr]",
            Index::EvDemand => "EV_Demand [MWh/yr]",
            Index::EvInt => "EV_Int [1/EV.yr]",
            Index::EvDur => "EV_Dur [h/EV.yr]",
        }
    }

    pub fn key(self) -> &'static str {
        match self {
            Index::LambdaS => "lambda_s",
            Index::US => "u_s",
            Index::Ens => "ens",
            Index::Saifi => "saifi",
            Index::Saidi => "saidi",
            Index::EvDemand => "ev_demand",
            Index::EvInt => "ev_int",
            Index::EvDur => "ev_dur",
        }
    }
}

/// Welford running mean and variance.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunningStats {
    n: u64,
    mean: f64,
    m2: f64,
}

impl RunningStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two values.
    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }
}

/// Summary statistics of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Stats {
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = libm::floor(pos) as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Mean, unbiased variance and the five-number summary.
pub fn aggregate(values: &[f64]) -> Stats {
    if values.is_empty() {
        return Stats::default();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let variance = if n < 2 {
        0.0
    } else {
        values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64
    };
    Stats {
        count: n,
        mean,
        variance,
        min: sorted[0],
        q1: quantile_sorted(&sorted, 0.25),
        median: quantile_sorted(&sorted, 0.5),
        q3: quantile_sorted(&sorted, 0.75),
        max: sorted[n - 1],
    }
}

/// Accumulates per-iteration reports.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IndexSummary {
    pub reports: Vec<IndexReport>,
    running: [RunningStats; 8],
    r_s: RunningStats,
}

impl IndexSummary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, report: &IndexReport) {
        for (i, idx) in Index::ALL.iter().enumerate() {
            self.running[i].push(report.get(*idx));
        }
        if let Some(r) = report.r_s {
            self.r_s.push(r);
        }
        self.reports.push(*report);
    }

    pub fn len(&self) -> usize {
        self.reports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reports.is_empty()
    }

    pub fn running(&self, index: Index) -> RunningStats {
        let i = Index::ALL.iter().position(|&x| x == index).unwrap();
        self.running[i]
    }

    pub fn mean(&self, index: Index) -> f64 {
        self.running(index).mean()
    }

    /// Mean outage duration over iterations that had an episode.
    pub fn mean_r_s(&self) -> Option<f64> {
        (self.r_s.count() > 0).then(|| self.r_s.mean())
    }

    pub fn values(&self, index: Index) -> Vec<f64> {
        self.reports.iter().map(|r| r.get(index)).collect()
    }

    pub fn stats(&self, index: Index) -> Stats {
        aggregate(&self.values(index))
    }

    /// Cumulative mean of an index after each iteration.
    pub fn cumulative_mean(&self, index: Index) -> Vec<f64> {
        let mut s = RunningStats::default();
        self.reports
            .iter()
            .map(|r| {
                s.push(r.get(index));
                s.mean()
            })
            .collect()
    }
}
