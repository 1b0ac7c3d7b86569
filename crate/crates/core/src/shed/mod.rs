//! Minimum-cost load shedding.
//!
//! Each sub-system is posed as a linear program over shed power per node,
//! dispatch per source and active flow per line:
//!
//! ```text
//! minimize   Σ C_k s_k
//! subject to Σ_j∈k g_j − d_k + s_k − Σ_l∈out(k) f_l + Σ_l∈in(k) f_l = 0   for every node k
//!            0 ≤ s_k ≤ d_k,  g_min ≤ g_j ≤ g_max,  −F_l ≤ f_l ≤ F_l
//! ```
//!
//! Losses are left to the load flow. Among optima with equal cost the lowest
//! bus id sheds first.

pub mod oracle;
mod simplex;

use alloc::vec::Vec;

use crate::grid::{PowerNetwork, SubSystem};

pub use simplex::{BoundedLp, LpError, LpSolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShedNode {
    /// Bus id, used for tie-breaking.
    pub id: u32,
    pub demand_mw: f64,
    /// Currency per MWh shed.
    pub cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShedSource {
    /// Node index.
    pub node: usize,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShedLine {
    pub from: usize,
    pub to: usize,
    /// May be infinite.
    pub capacity_mw: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ShedProblem {
    pub nodes: Vec<ShedNode>,
    pub sources: Vec<ShedSource>,
    pub lines: Vec<ShedLine>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShedSolution {
    pub shed: Vec<f64>,
    pub dispatch: Vec<f64>,
    /// Positive from `from` to `to`.
    pub flows: Vec<f64>,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ShedError {
    #[error("no dispatch satisfies the source minimums")]
    Infeasible,
    #[error("simplex failed: {source}")]
    Numerical {
        source: LpError,
        problem: ShedProblem,
    },
    #[error("solution violates a constraint by {violation:e}")]
    Violation { violation: f64, problem: ShedProblem },
    #[error("problem too large for the oracle ({nodes} nodes)")]
    TooLarge { nodes: usize },
}

/// Tolerance for constraint checks on returned solutions.
pub const FEASIBILITY_TOL: f64 = 1e-9;

impl ShedProblem {
    pub fn total_demand(&self) -> f64 {
        self.nodes.iter().map(|n| n.demand_mw).sum()
    }

    pub fn objective(&self, shed: &[f64]) -> f64 {
        self.nodes.iter().zip(shed).map(|(n, s)| n.cost * s).sum()
    }

    /// Largest violation of any constraint by a candidate solution.
    pub fn violation(&self, sol: &ShedSolution) -> f64 {
        let mut worst: f64 = 0.0;
        let mut balance: Vec<f64> = self
            .nodes
            .iter()
            .zip(&sol.shed)
            .map(|(n, s)| s - n.demand_mw)
            .collect();
        for (n, s) in self.nodes.iter().zip(&sol.shed) {
            worst = worst.max(-s).max(s - n.demand_mw);
        }
        for (g, p) in self.sources.iter().zip(&sol.dispatch) {
            worst = worst.max(g.p_min_mw - p).max(p - g.p_max_mw);
            balance[g.node] += p;
        }
        for (l, f) in self.lines.iter().zip(&sol.flows) {
            worst = worst.max(f.abs() - l.capacity_mw);
            balance[l.from] -= f;
            balance[l.to] += f;
        }
        balance.iter().fold(worst, |w, b| w.max(b.abs()))
    }

    /// Net injections can only be routed one way on a tree; returns the line
    /// flows for given per-node injections, or `None` if the lines are not a
    /// spanning tree of the nodes.
    fn tree_flows(&self, injection: &[f64]) -> Option<Vec<f64>> {
        let n = self.nodes.len();
        if n == 0 || self.lines.len() + 1 != n {
            return None;
        }
        let mut adj = alloc::vec![Vec::new(); n];
        for (i, l) in self.lines.iter().enumerate() {
            adj[l.from].push(i);
            adj[l.to].push(i);
        }
        let mut order = alloc::vec![0usize];
        let mut parent_line = alloc::vec![usize::MAX; n];
        let mut seen = alloc::vec![false; n];
        seen[0] = true;
        let mut head = 0;
        while head < order.len() {
            let u = order[head];
            head += 1;
            for &li in &adj[u] {
                let l = &self.lines[li];
                let v = if l.from == u { l.to } else { l.from };
                if li == parent_line[u] {
                    continue;
                }
                if seen[v] {
                    return None;
                }
                seen[v] = true;
                parent_line[v] = li;
                order.push(v);
            }
        }
        if order.len() != n {
            return None;
        }
        let mut sub: Vec<f64> = injection.to_vec();
        let mut flows = alloc::vec![0.0; self.lines.len()];
        for &v in order.iter().skip(1).rev() {
            let li = parent_line[v];
            let l = &self.lines[li];
            // Surplus of the subtree below v leaves it through li.
            flows[li] = if l.from == v { sub[v] } else { -sub[v] };
            let p = if l.from == v { l.to } else { l.from };
            sub[p] += sub[v];
        }
        Some(flows)
    }

    /// Cost-ordered fill ignoring line limits; exact whenever the resulting
    /// tree flows respect every capacity.
    fn solve_merit_order(&self) -> Option<ShedSolution> {
        let g_min: f64 = self.sources.iter().map(|g| g.p_min_mw).sum();
        let g_max: f64 = self.sources.iter().map(|g| g.p_max_mw).sum();
        let total = self.total_demand();
        if g_min > total + FEASIBILITY_TOL {
            return None;
        }
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| {
            let (na, nb) = (&self.nodes[a], &self.nodes[b]);
            nb.cost
                .partial_cmp(&na.cost)
                .unwrap_or(core::cmp::Ordering::Equal)
                .then(nb.id.cmp(&na.id))
        });
        let mut budget = g_max.min(total);
        let mut shed: Vec<f64> = self.nodes.iter().map(|n| n.demand_mw).collect();
        for &k in &order {
            let served = shed[k].min(budget);
            shed[k] -= served;
            budget -= served;
        }
        let served_total = g_max.min(total);
        let mut extra = served_total - g_min;
        let dispatch: Vec<f64> = self
            .sources
            .iter()
            .map(|g| {
                let add = (g.p_max_mw - g.p_min_mw).min(extra).max(0.0);
                extra -= add;
                g.p_min_mw + add
            })
            .collect();
        let mut injection: Vec<f64> = self
            .nodes
            .iter()
            .zip(&shed)
            .map(|(n, s)| s - n.demand_mw)
            .collect();
        for (g, p) in self.sources.iter().zip(&dispatch) {
            injection[g.node] += p;
        }
        let flows = if self.nodes.len() == 1 {
            Vec::new()
        } else {
            self.tree_flows(&injection)?
        };
        if self
            .lines
            .iter()
            .zip(&flows)
            .any(|(l, f)| f.abs() > l.capacity_mw)
        {
            return None;
        }
        let objective = self.objective(&shed);
        Some(ShedSolution {
            shed,
            dispatch,
            flows,
            objective,
        })
    }

    fn solve_simplex(&self) -> Result<ShedSolution, ShedError> {
        let n = self.nodes.len();
        let ng = self.sources.len();
        let nl = self.lines.len();
        // Columns: shed, shifted dispatch, forward flow, reverse flow.
        let cols = n + ng + 2 * nl;
        let mut lp = BoundedLp::new(n, cols);
        let mut ranked: Vec<usize> = (0..n).collect();
        ranked.sort_by_key(|&k| self.nodes[k].id);
        for (rank, &k) in ranked.iter().enumerate() {
            let node = &self.nodes[k];
            lp.cost[k] = node.cost * (1.0 + 1e-9 * rank as f64);
            lp.upper[k] = node.demand_mw;
            lp.a[k][k] = 1.0;
            lp.b[k] += node.demand_mw;
        }
        for (j, g) in self.sources.iter().enumerate() {
            let c = n + j;
            lp.upper[c] = g.p_max_mw - g.p_min_mw;
            lp.a[g.node][c] = 1.0;
            lp.b[g.node] -= g.p_min_mw;
        }
        for (i, l) in self.lines.iter().enumerate() {
            let fwd = n + ng + 2 * i;
            let rev = fwd + 1;
            lp.upper[fwd] = l.capacity_mw;
            lp.upper[rev] = l.capacity_mw;
            lp.a[l.from][fwd] -= 1.0;
            lp.a[l.to][fwd] += 1.0;
            lp.a[l.from][rev] += 1.0;
            lp.a[l.to][rev] -= 1.0;
        }
        let x = match lp.solve() {
            Ok(sol) => sol.x,
            Err(LpError::Infeasible) => return Err(ShedError::Infeasible),
            Err(source) => {
                return Err(ShedError::Numerical {
                    source,
                    problem: self.clone(),
                })
            }
        };
        let shed: Vec<f64> = (0..n).map(|k| x[k].clamp(0.0, self.nodes[k].demand_mw)).collect();
        let dispatch = self
            .sources
            .iter()
            .enumerate()
            .map(|(j, g)| g.p_min_mw + x[n + j])
            .collect();
        let flows = (0..nl)
            .map(|i| x[n + ng + 2 * i] - x[n + ng + 2 * i + 1])
            .collect();
        let objective = self.objective(&shed);
        Ok(ShedSolution {
            shed,
            dispatch,
            flows,
            objective,
        })
    }
}

/// Solves the shedding problem exactly.
///
/// Sub-systems without sources shed everything. When the cost-ordered fill
/// fits within every line capacity it is optimal and returned directly;
/// otherwise the bounded simplex solves the full program.
pub fn solve_shed(problem: &ShedProblem) -> Result<ShedSolution, ShedError> {
    if problem.sources.iter().all(|g| g.p_max_mw <= 0.0 && g.p_min_mw <= 0.0) {
        let shed: Vec<f64> = problem.nodes.iter().map(|n| n.demand_mw).collect();
        let objective = problem.objective(&shed);
        let flows = alloc::vec![0.0; problem.lines.len()];
        let dispatch = alloc::vec![0.0; problem.sources.len()];
        return Ok(ShedSolution {
            shed,
            dispatch,
            flows,
            objective,
        });
    }
    let sol = match problem.solve_merit_order() {
        Some(sol) => sol,
        None => problem.solve_simplex()?,
    };
    let violation = problem.violation(&sol);
    if violation > FEASIBILITY_TOL * (1.0 + problem.total_demand()) {
        return Err(ShedError::Violation {
            violation,
            problem: problem.clone(),
        });
    }
    Ok(sol)
}

/// A dispatchable source offered to the shedding program.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceOffer {
    /// Bus index.
    pub bus: usize,
    pub p_min_mw: f64,
    pub p_max_mw: f64,
}

/// Poses the shedding program for one sub-system. `demand_mw` is indexed by
/// network bus; nodes follow the sub-system's bus order and lines its line
/// order.
pub fn build_problem(
    net: &PowerNetwork,
    sub: &SubSystem,
    demand_mw: &[f64],
    offers: &[SourceOffer],
) -> ShedProblem {
    let local = |bus: usize| sub.buses.binary_search(&bus).expect("bus in sub-system");
    ShedProblem {
        nodes: sub
            .buses
            .iter()
            .map(|&b| ShedNode {
                id: net.buses[b].id,
                demand_mw: demand_mw[b].max(0.0),
                cost: net.buses[b].shed_cost,
            })
            .collect(),
        sources: offers
            .iter()
            .map(|o| ShedSource {
                node: local(o.bus),
                p_min_mw: o.p_min_mw,
                p_max_mw: o.p_max_mw,
            })
            .collect(),
        lines: sub
            .lines
            .iter()
            .map(|&l| {
                let line = &net.lines[l];
                ShedLine {
                    from: local(line.from),
                    to: local(line.to),
                    capacity_mw: line.capacity_mw,
                }
            })
            .collect(),
    }
}
