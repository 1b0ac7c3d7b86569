//! Demand profiles: hourly shape times a monthly scaling, interpolated
//! linearly to the simulation increment.

use alloc::string::String;

const MONTH_START_DAY: [u32; 13] = [0, 31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334, 365];

/// Demand relative to the bus peak as a function of time of year.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadProfile {
    pub name: String,
    /// Relative demand at the start of each hour of the day.
    pub hourly: [f64; 24],
    /// Relative demand per calendar month.
    pub monthly: [f64; 12],
}

impl LoadProfile {
    pub fn flat(name: &str) -> Self {
        Self {
            name: name.into(),
            hourly: [1.0; 24],
            monthly: [1.0; 12],
        }
    }

    pub fn check(&self) -> Result<(), &'static str> {
        if self
            .hourly
            .iter()
            .chain(self.monthly.iter())
            .any(|&v| !(v >= 0.0) || !v.is_finite())
        {
            return Err("profile values must be finite and nonnegative");
        }
        Ok(())
    }

    /// Relative demand at `t_hours` after the start of the year.
    pub fn factor(&self, t_hours: f64) -> f64 {
        let t = crate::special::wrap(t_hours, crate::HOURS_PER_YEAR);
        let h = t % 24.0;
        let i = libm::floor(h) as usize % 24;
        let frac = h - libm::floor(h);
        let a = self.hourly[i];
        let b = self.hourly[(i + 1) % 24];
        (a + (b - a) * frac) * self.monthly[month_of(t)]
    }
}

/// Month index (0 = January) of an hour of the year.
pub fn month_of(t_hours: f64) -> usize {
    let day = (crate::special::wrap(t_hours, crate::HOURS_PER_YEAR) / 24.0) as u32;
    MONTH_START_DAY[1..]
        .iter()
        .position(|&end| day < end)
        .unwrap_or(11)
}
