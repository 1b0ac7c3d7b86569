//! Seeded random streams and every sampling routine used by the simulation.
//!
//! Randomness is split into independent substreams keyed by the iteration,
//! the component and the purpose of the draw, so a run is reproducible
//! regardless of the order iterations execute in and so that changing the
//! response to a fault (V2G on/off, batteries) never shifts the failure draws.

mod availability;
mod truncnorm;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::grid::Line;
use crate::HOURS_PER_YEAR;

pub use availability::{sample_ev_count, sample_soc, EvAvailabilityModel, SocSpec};
pub use truncnorm::{TruncatedNormal, TruncatedNormalError};

/// What a substream is used for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Purpose {
    Failure = 1,
    Repair = 2,
    Fleet = 3,
}

/// Component class in a stream path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum ComponentKind {
    Line = 1,
    EvPark = 2,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// A deterministic random substream addressed by `(seed, iteration, component, purpose)`.
#[derive(Debug, Clone)]
pub struct RandomStream(ChaCha8Rng);

impl RandomStream {
    pub fn new(
        seed: u64,
        iteration: u64,
        kind: ComponentKind,
        index: u64,
        purpose: Purpose,
    ) -> Self {
        let mut h = splitmix64(seed);
        h = splitmix64(h ^ iteration);
        h = splitmix64(h ^ ((kind as u64) << 56 | (purpose as u64) << 48));
        h = splitmix64(h ^ index);
        let mut key = [0u8; 32];
        let mut x = h;
        for chunk in key.chunks_exact_mut(8) {
            x = splitmix64(x);
            chunk.copy_from_slice(&x.to_le_bytes());
        }
        Self(ChaCha8Rng::from_seed(key))
    }

    /// Uniform draw on the open interval (0, 1).
    pub fn open01(&mut self) -> f64 {
        loop {
            let u: f64 = self.0.random();
            if u > 0.0 {
                return u;
            }
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}

/// Per-increment failure probability `λ·L·dt/8760` of an operational line.
pub fn failure_probability(line: &Line, dt_hours: f64) -> f64 {
    (line.annual_failures() * dt_hours / HOURS_PER_YEAR).min(1.0)
}

/// One Bernoulli draw of the line's fail status for an increment.
pub fn sample_line_failure(line: &Line, dt_hours: f64, rng: &mut impl Rng) -> bool {
    let p = failure_probability(line, dt_hours);
    p > 0.0 && rng.random::<f64>() < p
}

/// Number of increments until the next failure (1 = the very next one).
///
/// Distributed exactly as the index of the first success in a sequence of
/// per-increment Bernoulli draws, which lets the engine jump over healthy
/// stretches instead of drawing every increment. `None` when `p` is zero.
pub fn increments_until_failure(p: f64, rng: &mut impl Rng) -> Option<u64> {
    if !(p > 0.0) {
        return None;
    }
    if p >= 1.0 {
        return Some(1);
    }
    let g = Geometric::new(p).expect("probability in (0, 1)");
    Some(g.sample(rng).saturating_add(1))
}

/// Repair duration in whole increments, at least one. Durations within a
/// millionth of an increment above a boundary round down, so a repair fixed
/// at 1 h stays 12 five-minute increments despite sampling noise.
pub fn repair_increments(hours: f64, dt_hours: f64) -> u32 {
    let n = libm::ceil(hours / dt_hours - 1e-6);
    if n < 1.0 {
        1
    } else {
        n as u32
    }
}
