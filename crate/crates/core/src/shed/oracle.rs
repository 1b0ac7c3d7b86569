//! Brute-force reference solver for small shedding problems, used to check
//! [`solve_shed`](super::solve_shed).
//!
//! Line flows on a tree are fixed by the node injections, so the program is
//! rewritten over shed and dispatch alone. Every vertex of that polytope is
//! the solution of the balance row plus a choice of active bounds; all such
//! choices are enumerated and the cheapest feasible vertex kept.

use alloc::vec::Vec;

use super::{ShedError, ShedProblem, ShedSolution};

/// Largest problem the oracle accepts, in nodes.
pub const MAX_NODES: usize = 6;
/// Largest number of sources the oracle accepts.
pub const MAX_SOURCES: usize = 4;

/// A row `coef·z ≤ rhs`.
#[derive(Clone)]
struct Row {
    coef: Vec<f64>,
    rhs: f64,
}

struct Search<'a> {
    dim: usize,
    groups: &'a [Vec<Row>],
    balance: &'a Row,
    all: &'a [Row],
    cost: &'a [f64],
    tol: f64,
    chosen: Vec<&'a Row>,
    best: Option<(f64, Vec<f64>)>,
}

impl<'a> Search<'a> {
    fn walk(&mut self, g: usize) {
        let need = self.dim - 1 - self.chosen.len();
        if need == 0 {
            self.evaluate();
            return;
        }
        if self.groups.len() - g < need {
            return;
        }
        self.walk(g + 1);
        for row in &self.groups[g] {
            self.chosen.push(row);
            self.walk(g + 1);
            self.chosen.pop();
        }
    }

    fn evaluate(&mut self) {
        let mut m: Vec<Vec<f64>> = Vec::with_capacity(self.dim);
        let mut rhs: Vec<f64> = Vec::with_capacity(self.dim);
        m.push(self.balance.coef.clone());
        rhs.push(self.balance.rhs);
        for r in &self.chosen {
            m.push(r.coef.clone());
            rhs.push(r.rhs);
        }
        let Some(z) = gauss(m, rhs) else {
            return;
        };
        if self
            .all
            .iter()
            .any(|r| dot(&r.coef, &z) > r.rhs + self.tol)
        {
            return;
        }
        let obj = dot(self.cost, &z);
        if self.best.as_ref().map_or(true, |(b, _)| obj < *b) {
            self.best = Some((obj, z));
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Gaussian elimination with partial pivoting; `None` if singular.
fn gauss(mut m: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[piv][col].abs() < 1e-10 {
            return None;
        }
        m.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = m[r][col] / m[col][col];
            if f != 0.0 {
                for c in col..n {
                    m[r][c] -= f * m[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = alloc::vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| m[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / m[r][r];
    }
    Some(x)
}

/// Nodes on the `to` side of each line once it is cut.
fn downstream_sets(p: &ShedProblem) -> Option<Vec<Vec<bool>>> {
    let n = p.nodes.len();
    if p.lines.len() + 1 != n {
        return None;
    }
    let mut adj = alloc::vec![Vec::new(); n];
    for (i, l) in p.lines.iter().enumerate() {
        adj[l.from].push((i, l.to));
        adj[l.to].push((i, l.from));
    }
    let mut sets = Vec::with_capacity(p.lines.len());
    for (cut, l) in p.lines.iter().enumerate() {
        let mut side = alloc::vec![false; n];
        let mut stack = alloc::vec![l.to];
        side[l.to] = true;
        while let Some(u) = stack.pop() {
            for &(li, v) in &adj[u] {
                if li != cut && !side[v] {
                    side[v] = true;
                    stack.push(v);
                }
            }
        }
        if side[l.from] {
            return None;
        }
        sets.push(side);
    }
    // Connectivity: every node must lie on one side of the first cut.
    Some(sets)
}

/// Exhaustive vertex search. Accepts trees with at most [`MAX_NODES`] nodes
/// and [`MAX_SOURCES`] sources.
pub fn oracle_shed(p: &ShedProblem) -> Result<ShedSolution, ShedError> {
    let n = p.nodes.len();
    let k = p.sources.len();
    if n > MAX_NODES || k > MAX_SOURCES || n == 0 {
        return Err(ShedError::TooLarge { nodes: n });
    }
    let sides = downstream_sets(p).ok_or(ShedError::TooLarge { nodes: n })?;
    let dim = n + k;
    let unit = |i: usize, s: f64| {
        let mut c = alloc::vec![0.0; dim];
        c[i] = s;
        c
    };

    let total: f64 = p.nodes.iter().map(|x| x.demand_mw).sum();
    let balance = Row {
        coef: alloc::vec![1.0; dim],
        rhs: total,
    };
    let mut groups: Vec<Vec<Row>> = Vec::new();
    for (i, node) in p.nodes.iter().enumerate() {
        groups.push(alloc::vec![
            Row { coef: unit(i, -1.0), rhs: 0.0 },
            Row { coef: unit(i, 1.0), rhs: node.demand_mw },
        ]);
    }
    for (j, g) in p.sources.iter().enumerate() {
        groups.push(alloc::vec![
            Row { coef: unit(n + j, -1.0), rhs: -g.p_min_mw },
            Row { coef: unit(n + j, 1.0), rhs: g.p_max_mw },
        ]);
    }
    // Flow from→to = demand − shed − dispatch summed over the `to` side.
    let mut flow_rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for side in &sides {
        let mut coef = alloc::vec![0.0; dim];
        let mut c0 = 0.0;
        for (i, node) in p.nodes.iter().enumerate() {
            if side[i] {
                coef[i] = -1.0;
                c0 += node.demand_mw;
            }
        }
        for (j, g) in p.sources.iter().enumerate() {
            if side[g.node] {
                coef[n + j] = -1.0;
            }
        }
        flow_rows.push((coef, c0));
    }
    for ((coef, c0), l) in flow_rows.iter().zip(&p.lines) {
        if l.capacity_mw.is_finite() {
            groups.push(alloc::vec![
                Row { coef: coef.clone(), rhs: l.capacity_mw - c0 },
                Row { coef: coef.iter().map(|c| -c).collect(), rhs: l.capacity_mw + c0 },
            ]);
        }
    }
    let all: Vec<Row> = groups.iter().flatten().cloned().collect();
    let mut cost = alloc::vec![0.0; dim];
    for (i, node) in p.nodes.iter().enumerate() {
        cost[i] = node.cost;
    }
    let scale = 1.0 + total + p.sources.iter().map(|g| g.p_max_mw.abs()).sum::<f64>();

    let mut search = Search {
        dim,
        groups: &groups,
        balance: &balance,
        all: &all,
        cost: &cost,
        tol: 1e-9 * scale,
        chosen: Vec::new(),
        best: None,
    };
    search.walk(0);
    let (objective, z) = search.best.ok_or(ShedError::Infeasible)?;
    let shed: Vec<f64> = z[..n].to_vec();
    let flows = flow_rows.iter().map(|(coef, c0)| c0 + dot(coef, &z)).collect();
    Ok(ShedSolution {
        shed,
        dispatch: z[n..].to_vec(),
        flows,
        objective,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shed::{ShedLine, ShedNode, ShedSource};

    #[test]
    fn matches_hand_solution() {
        let p = ShedProblem {
            nodes: alloc::vec![
                ShedNode { id: 1, demand_mw: 0.0, cost: 1.0 },
                ShedNode { id: 2, demand_mw: 3.0, cost: 1.0 },
                ShedNode { id: 3, demand_mw: 4.0, cost: 2.0 },
            ],
            sources: alloc::vec![ShedSource { node: 0, p_min_mw: 0.0, p_max_mw: 5.0 }],
            lines: alloc::vec![
                ShedLine { from: 0, to: 1, capacity_mw: f64::INFINITY },
                ShedLine { from: 0, to: 2, capacity_mw: f64::INFINITY },
            ],
        };
        let s = oracle_shed(&p).unwrap();
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!((s.shed[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn zero_demand() {
        let p = ShedProblem {
            nodes: alloc::vec![ShedNode { id: 1, demand_mw: 0.0, cost: 1.0 }; 3],
            sources: alloc::vec![ShedSource { node: 2, p_min_mw: 0.0, p_max_mw: 1.0 }],
            lines: alloc::vec![
                ShedLine { from: 0, to: 1, capacity_mw: 1.0 },
                ShedLine { from: 1, to: 2, capacity_mw: 1.0 },
            ],
        };
        assert_eq!(oracle_shed(&p).unwrap().objective, 0.0);
    }

    #[test]
    fn rejects_large() {
        let p = ShedProblem {
            nodes: alloc::vec![ShedNode { id: 1, demand_mw: 0.0, cost: 1.0 }; 7],
            ..ShedProblem::default()
        };
        assert_eq!(oracle_shed(&p), Err(ShedError::TooLarge { nodes: 7 }));
    }
}
