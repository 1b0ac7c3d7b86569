use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::PowerNetwork;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RadialViolation {
    /// Bus ids on a cycle, in traversal order.
    Cycle(Vec<u32>),
    Unreachable(u32),
    NoSlack,
    MultipleSlack(Vec<u32>),
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RadialReport {
    pub violations: Vec<RadialViolation>,
}

impl RadialReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl core::fmt::Display for RadialReport {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        if self.is_ok() {
            return f.write_str("radial");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                f.write_str("; ")?;
            }
            match v {
                RadialViolation::Cycle(buses) => write!(f, "cycle through buses {buses:?}")?,
                RadialViolation::Unreachable(b) => write!(f, "bus {b} unreachable from the slack")?,
                RadialViolation::NoSlack => f.write_str("no slack generator")?,
                RadialViolation::MultipleSlack(b) => {
                    write!(f, "slack generators at buses {b:?} in one system")?
                }
            }
        }
        Ok(())
    }
}

/// A connected component over in-service lines.
#[derive(Debug, Clone, PartialEq)]
pub struct SubSystem {
    /// Bus indices, ascending.
    pub buses: Vec<usize>,
    /// Line indices, ascending.
    pub lines: Vec<usize>,
    /// Generator index of the slack, when connected to the overlying grid.
    pub slack: Option<usize>,
    pub generators: Vec<usize>,
    pub batteries: Vec<usize>,
    pub ev_parks: Vec<usize>,
    /// Contains a bus inside an unswitched fault section.
    pub grounded: bool,
}

impl SubSystem {
    pub fn contains_bus(&self, bus: usize) -> bool {
        self.buses.binary_search(&bus).is_ok()
    }

    pub fn has_sources(&self) -> bool {
        self.slack.is_some() || !self.batteries.is_empty() || !self.ev_parks.is_empty()
    }

    pub fn is_island(&self) -> bool {
        self.slack.is_none()
    }
}

struct DisjointSet(Vec<usize>);

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self((0..n).collect())
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.0[x] != x {
            self.0[x] = self.0[self.0[x]];
            x = self.0[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.0[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Path between two buses over the accepted tree edges, as bus indices.
fn tree_path(adj: &[Vec<usize>], from: usize, to: usize) -> Vec<usize> {
    let mut prev = alloc::vec![usize::MAX; adj.len()];
    prev[from] = from;
    let mut queue = VecDeque::from([from]);
    while let Some(u) = queue.pop_front() {
        if u == to {
            break;
        }
        for &v in &adj[u] {
            if prev[v] == usize::MAX {
                prev[v] = u;
                queue.push_back(v);
            }
        }
    }
    let mut path = alloc::vec![to];
    let mut cur = to;
    while cur != from {
        cur = prev[cur];
        path.push(cur);
    }
    path.reverse();
    path
}

impl PowerNetwork {
    /// Checks that the in-service lines form a tree per distribution system
    /// and that every bus is reachable from its slack.
    pub fn validate_radial(&self) -> RadialReport {
        let n = self.buses.len();
        let mut report = RadialReport::default();
        let mut dsu = DisjointSet::new(n);
        let mut tree_adj = alloc::vec![Vec::new(); n];
        for (i, l) in self.lines.iter().enumerate() {
            if !self.line_in_service(i) {
                continue;
            }
            if dsu.union(l.from, l.to) {
                tree_adj[l.from].push(l.to);
                tree_adj[l.to].push(l.from);
            } else {
                let cycle = tree_path(&tree_adj, l.from, l.to)
                    .into_iter()
                    .map(|b| self.buses[b].id)
                    .collect();
                report.violations.push(RadialViolation::Cycle(cycle));
            }
        }

        let slack_buses: Vec<usize> = self
            .generators
            .iter()
            .filter(|g| g.is_slack)
            .map(|g| g.bus)
            .collect();
        if slack_buses.is_empty() {
            report.violations.push(RadialViolation::NoSlack);
            return report;
        }
        let mut roots: Vec<(usize, Vec<u32>)> = Vec::new();
        for &b in &slack_buses {
            let r = dsu.find(b);
            match roots.iter_mut().find(|(root, _)| *root == r) {
                Some((_, ids)) => ids.push(self.buses[b].id),
                None => roots.push((r, alloc::vec![self.buses[b].id])),
            }
        }
        for (_, ids) in &roots {
            if ids.len() > 1 {
                report.violations.push(RadialViolation::MultipleSlack(ids.clone()));
            }
        }
        for b in 0..n {
            let r = dsu.find(b);
            if !roots.iter().any(|(root, _)| *root == r) {
                report
                    .violations
                    .push(RadialViolation::Unreachable(self.buses[b].id));
            }
        }
        report
    }

    /// Connected components over in-service lines, ordered by their lowest
    /// bus index. Every bus appears in exactly one sub-system.
    pub fn find_sub_systems(&self) -> Vec<SubSystem> {
        let n = self.buses.len();
        let mut dsu = DisjointSet::new(n);
        for (i, l) in self.lines.iter().enumerate() {
            if self.line_in_service(i) {
                dsu.union(l.from, l.to);
            }
        }
        let mut slot = alloc::vec![usize::MAX; n];
        let mut subs: Vec<SubSystem> = Vec::new();
        for b in 0..n {
            let r = dsu.find(b);
            if slot[r] == usize::MAX {
                slot[r] = subs.len();
                subs.push(SubSystem {
                    buses: Vec::new(),
                    lines: Vec::new(),
                    slack: None,
                    generators: Vec::new(),
                    batteries: Vec::new(),
                    ev_parks: Vec::new(),
                    grounded: false,
                });
            }
            let s = &mut subs[slot[r]];
            s.buses.push(b);
            s.grounded |= self.buses[b].is_grounded();
        }
        for (i, l) in self.lines.iter().enumerate() {
            if self.line_in_service(i) {
                let r = dsu.find(l.from);
                subs[slot[r]].lines.push(i);
            }
        }
        for (i, g) in self.generators.iter().enumerate() {
            let s = &mut subs[slot[dsu.find(g.bus)]];
            if g.is_slack {
                if s.slack.is_none() {
                    s.slack = Some(i);
                }
            } else {
                s.generators.push(i);
            }
        }
        for (i, b) in self.batteries.iter().enumerate() {
            if b.enabled {
                subs[slot[dsu.find(b.bus)]].batteries.push(i);
            }
        }
        for (i, p) in self.ev_parks.iter().enumerate() {
            subs[slot[dsu.find(p.bus)]].ev_parks.push(i);
        }
        subs
    }
}
