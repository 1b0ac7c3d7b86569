use rand::Rng;

use super::RandomStream;
use crate::special::{normal_cdf, normal_pdf, normal_quantile};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum TruncatedNormalError {
    #[error("scale must be positive and finite")]
    Scale,
    #[error("lower bound must be below the upper bound")]
    Bounds,
    #[error("truncation interval carries no probability mass")]
    EmptyMass,
}

/// Normal distribution restricted to `[lower, upper]` and renormalized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncatedNormal {
    loc: f64,
    scale: f64,
    lower: f64,
    upper: f64,
}

impl TruncatedNormal {
    pub fn new(loc: f64, scale: f64, lower: f64, upper: f64) -> Result<Self, TruncatedNormalError> {
        if !(scale > 0.0) || !scale.is_finite() || !loc.is_finite() {
            return Err(TruncatedNormalError::Scale);
        }
        if !(lower < upper) {
            return Err(TruncatedNormalError::Bounds);
        }
        let d = Self {
            loc,
            scale,
            lower,
            upper,
        };
        if !(d.mass() > 0.0) {
            return Err(TruncatedNormalError::EmptyMass);
        }
        Ok(d)
    }

    /// Repair-time default: loc 1 h, scale 0.5 h, bounded to [0, 2] h.
    pub fn default_repair() -> Self {
        Self::new(1.0, 0.5, 0.0, 2.0).unwrap()
    }

    /// Repair time fixed at `hours` (scale shrunk to a negligible width).
    pub fn degenerate(hours: f64) -> Self {
        Self::new(hours, 1e-9, hours - 1.0, hours + 1.0).unwrap()
    }

    pub fn loc(&self) -> f64 {
        self.loc
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    fn alpha(&self) -> f64 {
        (self.lower - self.loc) / self.scale
    }

    fn beta(&self) -> f64 {
        (self.upper - self.loc) / self.scale
    }

    fn mass(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        if a > 0.0 {
            normal_cdf(-a) - normal_cdf(-b)
        } else {
            normal_cdf(b) - normal_cdf(a)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.lower {
            return 0.0;
        }
        if x >= self.upper {
            return 1.0;
        }
        let (a, b) = (self.alpha(), self.beta());
        let z = (x - self.loc) / self.scale;
        let v = if a > 0.0 {
            (normal_cdf(-a) - normal_cdf(-z)) / (normal_cdf(-a) - normal_cdf(-b))
        } else {
            (normal_cdf(z) - normal_cdf(a)) / (normal_cdf(b) - normal_cdf(a))
        };
        v.clamp(0.0, 1.0)
    }

    pub fn mean(&self) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        self.loc + self.scale * (normal_pdf(a) - normal_pdf(b)) / self.mass()
    }

    /// Inverse-CDF sample. Intervals lying wholly in the upper tail are
    /// sampled through the mirrored distribution to keep precision.
    pub fn sample_with(&self, u: f64) -> f64 {
        let (a, b) = (self.alpha(), self.beta());
        let z = if a > 0.0 {
            let (pa, pb) = (normal_cdf(-b), normal_cdf(-a));
            -normal_quantile(pb - u * (pb - pa))
        } else {
            let (pa, pb) = (normal_cdf(a), normal_cdf(b));
            normal_quantile(pa + u * (pb - pa))
        };
        (self.loc + self.scale * z.clamp(a, b)).clamp(self.lower, self.upper)
    }

    pub fn sample(&self, rng: &mut RandomStream) -> f64 {
        self.sample_with(rng.open01())
    }

    /// Sample from any generator; `u` is kept inside (0, 1).
    pub fn sample_rng(&self, rng: &mut impl Rng) -> f64 {
        let mut u: f64 = rng.random();
        while u <= 0.0 {
            u = rng.random();
        }
        self.sample_with(u)
    }
}
