//! Dense two-phase primal simplex for small programs of the form
//! `min c·x  s.t.  A x = b,  0 ≤ x ≤ u` with `u` possibly infinite.
//!
//! Nonbasic variables rest at either bound, so boxed variables never need
//! explicit slack rows. Bland's rule picks entering and leaving variables,
//! which rules out cycling on the degenerate vertices these problems are full of.

use alloc::vec::Vec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("iteration limit reached")]
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundedLp {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub cost: Vec<f64>,
    pub upper: Vec<f64>,
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;

struct Tableau {
    m: usize,
    n: usize,
    /// B⁻¹ [A | diag(sign)], rows × (n + m).
    t: Vec<Vec<f64>>,
    sign: Vec<f64>,
    xb: Vec<f64>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    is_basic: Vec<bool>,
    upper: Vec<f64>,
    iterations: usize,
}

impl BoundedLp {
    pub fn new(rows: usize, cols: usize) -> Self {
        Self {
            a: alloc::vec![alloc::vec![0.0; cols]; rows],
            b: alloc::vec![0.0; rows],
            cost: alloc::vec![0.0; cols],
            upper: alloc::vec![f64::INFINITY; cols],
        }
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        let m = self.b.len();
        let n = self.cost.len();
        let sign: Vec<f64> = self
            .b
            .iter()
            .map(|&r| if r >= 0.0 { 1.0 } else { -1.0 })
            .collect();
        let mut t = alloc::vec![alloc::vec![0.0; n + m]; m];
        for i in 0..m {
            for j in 0..n {
                t[i][j] = sign[i] * self.a[i][j];
            }
            t[i][n + i] = 1.0;
        }
        let mut upper = self.upper.clone();
        upper.extend(core::iter::repeat(f64::INFINITY).take(m));
        let mut is_basic = alloc::vec![false; n + m];
        for flag in &mut is_basic[n..] {
            *flag = true;
        }
        let mut tab = Tableau {
            m,
            n,
            t,
            xb: self.b.iter().map(|r| r.abs()).collect(),
            sign,
            basis: (n..n + m).collect(),
            at_upper: alloc::vec![false; n + m],
            is_basic,
            upper,
            iterations: 0,
        };
        let limit = 200 * (n + m) + 1000;

        let mut phase1 = alloc::vec![0.0; n + m];
        for c in &mut phase1[n..] {
            *c = 1.0;
        }
        tab.run(&phase1, n + m, limit)?;
        tab.refresh(self);
        let scale = 1.0 + self.b.iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let infeasibility: f64 = (0..m)
            .filter(|&i| tab.basis[i] >= n)
            .map(|i| tab.xb[i])
            .sum();
        if infeasibility > 1e-9 * scale {
            return Err(LpError::Infeasible);
        }

        for j in n..n + m {
            tab.upper[j] = 0.0;
        }
        let mut phase2 = self.cost.clone();
        phase2.extend(core::iter::repeat(0.0).take(m));
        tab.run(&phase2, n, limit)?;
        tab.refresh(self);

        let mut x = alloc::vec![0.0; n];
        for (j, xj) in x.iter_mut().enumerate() {
            if tab.at_upper[j] {
                *xj = tab.upper[j];
            }
        }
        for i in 0..m {
            if tab.basis[i] < n {
                x[tab.basis[i]] = tab.xb[i];
            }
        }
        let objective = x.iter().zip(&self.cost).map(|(x, c)| x * c).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations: tab.iterations,
        })
    }
}

impl Tableau {
    /// Primal simplex on `cost`; only columns below `enter_limit` may enter.
    fn run(&mut self, cost: &[f64], enter_limit: usize, limit: usize) -> Result<(), LpError> {
        loop {
            if self.iterations >= limit {
                return Err(LpError::IterationLimit);
            }
            let Some(j) = self.entering(cost, enter_limit) else {
                return Ok(());
            };
            self.iterations += 1;
            let dir = if self.at_upper[j] { -1.0 } else { 1.0 };

            let mut theta = self.upper[j];
            let mut leave: Option<(usize, bool)> = None;
            for i in 0..self.m {
                let alpha = self.t[i][j] * dir;
                let bv = self.basis[i];
                let (limit_i, to_upper) = if alpha > PIVOT_EPS {
                    (self.xb[i].max(0.0) / alpha, false)
                } else if alpha < -PIVOT_EPS && self.upper[bv].is_finite() {
                    ((self.upper[bv] - self.xb[i]).max(0.0) / -alpha, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit_i < theta => true,
                    Some((r, _)) if limit_i == theta => bv < self.basis[r],
                    None if limit_i == theta => true,
                    _ => false,
                };
                if better {
                    theta = limit_i;
                    leave = Some((i, to_upper));
                }
            }
            if !theta.is_finite() {
                return Err(LpError::Unbounded);
            }
            for i in 0..self.m {
                self.xb[i] -= theta * dir * self.t[i][j];
            }
            match leave {
                None => self.at_upper[j] = !self.at_upper[j],
                Some((r, to_upper)) => {
                    let entering_value = if dir > 0.0 { theta } else { self.upper[j] - theta };
                    let out = self.basis[r];
                    self.is_basic[out] = false;
                    self.at_upper[out] = to_upper;
                    self.is_basic[j] = true;
                    self.at_upper[j] = false;
                    self.basis[r] = j;
                    self.pivot(r, j);
                    self.xb[r] = entering_value;
                }
            }
        }
    }

    fn entering(&self, cost: &[f64], enter_limit: usize) -> Option<usize> {
        (0..enter_limit).find(|&j| {
            if self.is_basic[j] || self.upper[j] <= 0.0 {
                return false;
            }
            let d = cost[j]
                - (0..self.m)
                    .map(|i| cost[self.basis[i]] * self.t[i][j])
                    .sum::<f64>();
            if self.at_upper[j] {
                d > COST_EPS
            } else {
                d < -COST_EPS
            }
        })
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        for v in &mut self.t[r] {
            *v /= p;
        }
        let row = self.t[r].clone();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.t[i][j];
            if f != 0.0 {
                for (v, rv) in self.t[i].iter_mut().zip(&row) {
                    *v -= f * rv;
                }
            }
        }
    }

    /// Recomputes basic values from the original data to shed accumulated
    /// rounding: x_B = B⁻¹ (b − Σ A_j u_j over nonbasic columns at upper).
    fn refresh(&mut self, lp: &BoundedLp) {
        let mut rhs = lp.b.clone();
        for j in 0..self.n {
            if !self.is_basic[j] && self.at_upper[j] {
                for (i, r) in rhs.iter_mut().enumerate() {
                    *r -= lp.a[i][j] * self.upper[j];
                }
            }
        }
        for i in 0..self.m {
            self.xb[i] = (0..self.m)
                .map(|k| self.t[i][self.n + k] * self.sign[k] * rhs[k])
                .sum();
        }
    }
}
