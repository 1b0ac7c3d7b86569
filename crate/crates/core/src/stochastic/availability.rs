use rand::Rng;
use rand_distr::{Binomial, Distribution};

/// Probability that an EV owner charges at home on a given day, built from
/// the charging-frequency survey shares: daily, every other day, weekly and
/// monthly.
pub const DEFAULT_DAILY_CHARGE_FREQUENCY: f64 = 0.45 + 0.28 * 0.5 + 0.16 / 7.0 + 0.03 / 30.0;

/// Synthetic plugged-in share per hour of day, peaking overnight after the
/// evening arrival. User-replaceable; not measured data.
pub const DEFAULT_CHARGING_PROFILE: [f64; 24] = [
    0.34, 0.30, 0.26, 0.22, 0.18, 0.14, 0.10, 0.07, 0.05, 0.05, 0.05, 0.05, 0.06, 0.06, 0.07,
    0.09, 0.14, 0.20, 0.25, 0.29, 0.32, 0.35, 0.37, 0.36,
];

/// How many EVs are expected to sit plugged in at home.
#[derive(Debug, Clone, PartialEq)]
pub struct EvAvailabilityModel {
    /// Fraction of households owning an EV.
    pub ev_share: f64,
    /// Fraction of EVs plugged in, per hour of day.
    pub charging_profile: [f64; 24],
    pub daily_charge_frequency: f64,
}

impl Default for EvAvailabilityModel {
    fn default() -> Self {
        Self {
            ev_share: 0.46,
            charging_profile: DEFAULT_CHARGING_PROFILE,
            daily_charge_frequency: DEFAULT_DAILY_CHARGE_FREQUENCY,
        }
    }
}

impl EvAvailabilityModel {
    pub fn check(&self) -> Result<(), &'static str> {
        let unit = |x: f64| (0.0..=1.0).contains(&x);
        if !unit(self.ev_share) {
            return Err("EV share outside [0, 1]");
        }
        if !unit(self.daily_charge_frequency) {
            return Err("daily charge frequency outside [0, 1]");
        }
        if !self.charging_profile.iter().all(|&c| unit(c)) {
            return Err("charging profile entry outside [0, 1]");
        }
        Ok(())
    }

    pub fn plugged_share(&self, hour_of_day: f64) -> f64 {
        let h = libm::floor(crate::special::wrap(hour_of_day, 24.0)) as usize;
        self.charging_profile[h.min(23)]
    }

    /// Probability that one EV of the fleet is plugged in at home.
    pub fn availability(&self, hour_of_day: f64) -> f64 {
        (self.plugged_share(hour_of_day) * self.daily_charge_frequency).clamp(0.0, 1.0)
    }

    /// Expected number of plugged-in EVs among `customers` households.
    pub fn expected_available_evs(&self, hour_of_day: f64, customers: f64) -> f64 {
        customers * self.ev_share * self.plugged_share(hour_of_day) * self.daily_charge_frequency
    }

    /// EVs owned by `households` households.
    pub fn fleet_size(&self, households: u32) -> u32 {
        libm::round(households as f64 * self.ev_share) as u32
    }
}

/// Binomial draw of the number of plugged-in EVs.
pub fn sample_ev_count(n: u32, p: f64, rng: &mut impl Rng) -> u32 {
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    Binomial::new(n as u64, p).expect("valid binomial").sample(rng) as u32
}

/// Bounds on the state of charge of an EV battery when it arrives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SocSpec {
    pub soc_min: f64,
    pub soc_max: f64,
}

impl Default for SocSpec {
    fn default() -> Self {
        Self {
            soc_min: 0.1,
            soc_max: 1.0,
        }
    }
}

impl SocSpec {
    pub fn check(&self) -> Result<(), &'static str> {
        if !(0.0 <= self.soc_min && self.soc_min <= self.soc_max && self.soc_max <= 1.0) {
            return Err("SoC bounds must satisfy 0 <= min <= max <= 1");
        }
        Ok(())
    }
}

/// Stored energy of one battery drawn uniformly on the SoC range.
pub fn sample_soc(spec: SocSpec, capacity: f64, rng: &mut impl Rng) -> f64 {
    let u: f64 = rng.random();
    (spec.soc_min + u * (spec.soc_max - spec.soc_min)) * capacity
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastic::{ComponentKind, Purpose, RandomStream};

    #[test]
    fn expected_evs_direct_product() {
        let m = EvAvailabilityModel {
            ev_share: 0.46,
            charging_profile: [0.5; 24],
            daily_charge_frequency: 0.61,
        };
        assert!((m.expected_available_evs(13.0, 100.0) - 14.03).abs() < 1e-9);
        let zero = EvAvailabilityModel {
            charging_profile: [0.0; 24],
            ..m
        };
        assert_eq!(zero.expected_available_evs(3.0, 100.0), 0.0);
    }

    #[test]
    fn daily_frequency_default() {
        assert!((DEFAULT_DAILY_CHARGE_FREQUENCY - 0.61).abs() < 0.005);
    }

    #[test]
    fn count_edge_cases() {
        let mut rng = RandomStream::new(0, 0, ComponentKind::EvPark, 0, Purpose::Fleet);
        assert_eq!(sample_ev_count(10, 1.0, &mut rng), 10);
        assert_eq!(sample_ev_count(10, 0.0, &mut rng), 0);
        for _ in 0..1000 {
            assert!(sample_ev_count(10, 0.4, &mut rng) <= 10);
        }
    }

    #[test]
    fn soc_range_and_mean() {
        let mut rng = RandomStream::new(0, 1, ComponentKind::EvPark, 0, Purpose::Fleet);
        let spec = SocSpec::default();
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            let e = sample_soc(spec, 70.0, &mut rng);
            assert!((7.0..=70.0).contains(&e));
            sum += e;
        }
        assert!((sum / n as f64 - 38.5).abs() < 0.2);
        let tight = SocSpec {
            soc_min: 0.5,
            soc_max: 0.5 + 1e-12,
        };
        assert!((sample_soc(tight, 70.0, &mut rng) - 35.0).abs() < 1e-9);
    }
}
