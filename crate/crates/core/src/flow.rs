//! Forward-backward sweep load flow for radial feeders.
//!
//! Works in per unit. The backward sweep accumulates downstream demand plus
//! series losses into branch flows; the forward sweep then updates voltages
//! from the root outward.

use alloc::vec::Vec;

use num_complex::Complex64;

use crate::grid::{PowerNetwork, SubSystem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerUnitBase {
    pub s_base_mva: f64,
    pub v_base_kv: f64,
}

impl Default for PerUnitBase {
    fn default() -> Self {
        Self {
            s_base_mva: 10.0,
            v_base_kv: 12.66,
        }
    }
}

impl PerUnitBase {
    pub fn z_base(&self) -> f64 {
        self.v_base_kv * self.v_base_kv / self.s_base_mva
    }

    pub fn impedance_pu(&self, r_ohm: f64, x_ohm: f64) -> Complex64 {
        Complex64::new(r_ohm, x_ohm) / self.z_base()
    }

    pub fn power_pu(&self, mw: f64, mvar: f64) -> Complex64 {
        Complex64::new(mw, mvar) / self.s_base_mva
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowOptions {
    /// Largest voltage change between sweeps accepted as converged, p.u.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for FlowOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            max_iterations: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FlowError {
    #[error("branches do not form a tree rooted at bus {root}")]
    NotRadial { root: usize },
    #[error("injection vector has {got} entries, feeder has {expected} buses")]
    Length { expected: usize, got: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch {
    pub from: usize,
    pub to: usize,
    /// Series impedance, p.u.
    pub z: Complex64,
}

/// A radial feeder in local bus numbering, ready for repeated solves.
#[derive(Debug, Clone)]
pub struct Feeder {
    pub n_buses: usize,
    pub root: usize,
    pub branches: Vec<Branch>,
    /// Buses in breadth-first order from the root.
    order: Vec<usize>,
    /// Branch feeding each bus (`usize::MAX` for the root).
    parent_branch: Vec<usize>,
    parent_bus: Vec<usize>,
}

impl Feeder {
    pub fn new(n_buses: usize, root: usize, branches: Vec<Branch>) -> Result<Self, FlowError> {
        if root >= n_buses || branches.len() + 1 != n_buses {
            return Err(FlowError::NotRadial { root });
        }
        let mut adj = alloc::vec![Vec::new(); n_buses];
        for (i, b) in branches.iter().enumerate() {
            if b.from >= n_buses || b.to >= n_buses {
                return Err(FlowError::NotRadial { root });
            }
            adj[b.from].push(i);
            adj[b.to].push(i);
        }
        let mut parent_branch = alloc::vec![usize::MAX; n_buses];
        let mut parent_bus = alloc::vec![usize::MAX; n_buses];
        let mut seen = alloc::vec![false; n_buses];
        let mut order = Vec::with_capacity(n_buses);
        seen[root] = true;
        order.push(root);
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &bi in &adj[u] {
                if bi == parent_branch[u] {
                    continue;
                }
                let b = &branches[bi];
                let v = if b.from == u { b.to } else { b.from };
                if seen[v] {
                    return Err(FlowError::NotRadial { root });
                }
                seen[v] = true;
                parent_branch[v] = bi;
                parent_bus[v] = u;
                order.push(v);
            }
        }
        if order.len() != n_buses {
            return Err(FlowError::NotRadial { root });
        }
        Ok(Self {
            n_buses,
            root,
            branches,
            order,
            parent_branch,
            parent_bus,
        })
    }

    /// Builds the feeder of a sub-system rooted at `root_bus`. Returns the
    /// feeder, the network bus index of each local bus and the network line
    /// index of each branch.
    pub fn from_subsystem(
        net: &PowerNetwork,
        sub: &SubSystem,
        root_bus: usize,
    ) -> Result<(Self, Vec<usize>, Vec<usize>), FlowError> {
        let local = |bus: usize| sub.buses.binary_search(&bus).ok();
        let root = local(root_bus).ok_or(FlowError::NotRadial { root: root_bus })?;
        let mut branches = Vec::with_capacity(sub.lines.len());
        for &li in &sub.lines {
            let l = &net.lines[li];
            let (Some(from), Some(to)) = (local(l.from), local(l.to)) else {
                return Err(FlowError::NotRadial { root: root_bus });
            };
            branches.push(Branch {
                from,
                to,
                z: net.base.impedance_pu(l.r_ohm, l.x_ohm),
            });
        }
        let feeder = Self::new(sub.buses.len(), root, branches)?;
        Ok((feeder, sub.buses.clone(), sub.lines.clone()))
    }

    /// Parent bus of `bus`, `None` at the root.
    pub fn parent(&self, bus: usize) -> Option<usize> {
        (bus != self.root).then(|| self.parent_bus[bus])
    }

    /// Solves with net loads `load[b]` (p.u., positive = consumption; sources
    /// enter negative). The root acts as the slack at `v_root`.
    pub fn solve(
        &self,
        load: &[Complex64],
        v_root: Complex64,
        opts: FlowOptions,
    ) -> Result<FlowSolution, FlowError> {
        if load.len() != self.n_buses {
            return Err(FlowError::Length {
                expected: self.n_buses,
                got: load.len(),
            });
        }
        let n = self.n_buses;
        let nb = self.branches.len();
        let mut v = alloc::vec![v_root; n];
        let mut s_recv = alloc::vec![Complex64::new(0.0, 0.0); n];
        let mut send = alloc::vec![Complex64::new(0.0, 0.0); nb];
        let mut loss = alloc::vec![Complex64::new(0.0, 0.0); nb];
        let mut converged = false;
        let mut iterations = 0;

        while iterations < opts.max_iterations {
            iterations += 1;
            // Backward: downstream demand plus losses into each branch.
            s_recv.copy_from_slice(load);
            for &b in self.order.iter().rev() {
                if b == self.root {
                    continue;
                }
                let bi = self.parent_branch[b];
                let z = self.branches[bi].z;
                let vm2 = v[b].norm_sqr();
                loss[bi] = z * (s_recv[b].norm_sqr() / vm2);
                send[bi] = s_recv[b] + loss[bi];
                let p = self.parent_bus[b];
                s_recv[p] += send[bi];
            }
            // Forward: voltage drop along each branch.
            let mut max_dv: f64 = 0.0;
            for &b in self.order.iter().skip(1) {
                let bi = self.parent_branch[b];
                let vp = v[self.parent_bus[b]];
                let current = (send[bi] / vp).conj();
                let nv = vp - self.branches[bi].z * current;
                max_dv = max_dv.max((nv - v[b]).norm());
                v[b] = nv;
            }
            if !v.iter().all(|x| x.re.is_finite() && x.im.is_finite()) {
                break;
            }
            if max_dv < opts.tolerance {
                converged = true;
                break;
            }
        }

        let total_loss = loss.iter().sum();
        Ok(FlowSolution {
            voltage: v,
            branch_flow: send,
            branch_loss: loss,
            root_injection: s_recv[self.root],
            total_loss,
            iterations,
            converged,
        })
    }
}

/// Result of one sweep solve, all in p.u.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowSolution {
    pub voltage: Vec<Complex64>,
    /// Power entering each branch at its upstream end.
    pub branch_flow: Vec<Complex64>,
    pub branch_loss: Vec<Complex64>,
    /// Power the root source supplies: net loads plus losses.
    pub root_injection: Complex64,
    pub total_loss: Complex64,
    pub iterations: usize,
    pub converged: bool,
}

impl FlowSolution {
    pub fn magnitude(&self, bus: usize) -> f64 {
        self.voltage[bus].norm()
    }

    pub fn angle(&self, bus: usize) -> f64 {
        self.voltage[bus].arg()
    }
}

/// Voltage reference bus for an island: the bus of the largest enabled
/// battery inverter, else of the V2G park with the largest aggregate charger
/// power, else of the largest local generator, else `None`. Ties go to the
/// lower bus index.
pub fn island_reference(net: &PowerNetwork, sub: &SubSystem) -> Option<usize> {
    fn best(items: impl Iterator<Item = (usize, f64)>) -> Option<usize> {
        let mut out: Option<(usize, f64)> = None;
        for (bus, cap) in items {
            match out {
                Some((b, c)) if c > cap || (c == cap && b < bus) => {}
                _ => out = Some((bus, cap)),
            }
        }
        out.map(|(b, _)| b)
    }
    best(sub.batteries.iter().map(|&i| {
        let b = &net.batteries[i];
        (b.bus, b.inverter_mw)
    }))
    .or_else(|| {
        best(
            sub.ev_parks
                .iter()
                .map(|&i| &net.ev_parks[i])
                .filter(|p| p.v2g && p.fleet() > 0)
                .map(|p| (p.bus, p.power_limit_mw())),
        )
    })
    .or_else(|| {
        best(sub.generators.iter().map(|&i| {
            let g = &net.generators[i];
            (g.bus, g.p_max_mw)
        }))
    })
}
