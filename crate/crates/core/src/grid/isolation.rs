use alloc::collections::VecDeque;
use alloc::vec::Vec;

use super::{GridError, LineState, PowerNetwork, SwitchKind};

/// Switching actions taken to section one failed line.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Isolation {
    /// Switchgear indices held open.
    pub opened: Vec<usize>,
    /// Unswitched lines de-energized together with the failed one.
    pub dead_lines: Vec<usize>,
    /// Buses inside the de-energized section.
    pub grounded: Vec<usize>,
    /// The section reached the slack bus, so the feeder breaker stays open.
    pub breaker_lockout: bool,
}

impl Isolation {
    pub fn is_empty(&self) -> bool {
        self.opened.is_empty() && self.dead_lines.is_empty() && self.grounded.is_empty()
    }
}

impl PowerNetwork {
    /// Marks the line failed with the given repair countdown.
    pub fn fail_line(&mut self, line: usize, repair_increments: u32) {
        self.lines[line].state = LineState::Failed {
            remaining_increments: repair_increments.max(1),
        };
    }

    /// Sections a failed line with the nearest switchgear.
    ///
    /// Devices on the line itself are opened when present. Otherwise the
    /// section grows through unswitched lines until switchgear is met on every
    /// side; the buses inside are grounded until repair. If that section
    /// contains the slack bus nothing can be restored and
    /// [`GridError::Unisolatable`] is returned, with the section still applied.
    /// Calling this on a line that is already sectioned opens nothing.
    pub fn isolate_fault(&mut self, line: usize) -> Result<Isolation, GridError> {
        if self.lines[line].is_operational() {
            return Err(GridError::LineNotFailed {
                line: self.lines[line].id,
            });
        }
        if self.isolations[line].is_some() {
            return Ok(Isolation::default());
        }

        let own: Vec<usize> = self.switches_on(line).collect();
        let section = if !own.is_empty() {
            Isolation {
                opened: own,
                ..Isolation::default()
            }
        } else {
            self.grow_section(line)
        };

        for &s in &section.opened {
            self.switchgear[s].holds += 1;
        }
        for &l in &section.dead_lines {
            self.lines[l].dead += 1;
        }
        for &b in &section.grounded {
            self.buses[b].grounded += 1;
        }
        self.isolations[line] = Some(section.clone());

        if section.breaker_lockout {
            Err(GridError::Unisolatable {
                line: self.lines[line].id,
                section,
            })
        } else {
            Ok(section)
        }
    }

    fn grow_section(&self, line: usize) -> Isolation {
        let adj = self.adjacency();
        let n = self.buses.len();
        let mut in_zone = alloc::vec![false; n];
        let mut line_seen = alloc::vec![false; self.lines.len()];
        let mut section = Isolation::default();
        let mut queue = VecDeque::new();
        line_seen[line] = true;
        for b in [self.lines[line].from, self.lines[line].to] {
            in_zone[b] = true;
            queue.push_back(b);
        }
        while let Some(u) = queue.pop_front() {
            for &l in &adj[u] {
                if line_seen[l] {
                    continue;
                }
                line_seen[l] = true;
                let switches: Vec<usize> = self.switches_on(l).collect();
                if !switches.is_empty() {
                    // Already-open devices (ties, other sections) bound the zone
                    // without a new hold.
                    if self.line_closed(l) {
                        section.opened.extend(switches);
                    }
                    continue;
                }
                if !self.lines[l].is_operational() {
                    continue;
                }
                section.dead_lines.push(l);
                let v = self.lines[l].other_end(u);
                if !in_zone[v] {
                    in_zone[v] = true;
                    queue.push_back(v);
                }
            }
        }
        section.grounded = (0..n).filter(|&b| in_zone[b]).collect();
        section.opened.sort_unstable();
        section.dead_lines.sort_unstable();
        section.breaker_lockout = self
            .generators
            .iter()
            .any(|g| g.is_slack && in_zone[g.bus]);
        if section.breaker_lockout {
            // The feeder breaker trips to clear the fault and cannot reclose.
            if let Some(cb) = self
                .switchgear
                .iter()
                .position(|s| s.kind == SwitchKind::CircuitBreaker && s.is_closed())
            {
                if !section.opened.contains(&cb) {
                    section.opened.push(cb);
                }
            }
        }
        section
    }

    /// Undoes the sectioning of a repaired line and returns it to service.
    pub fn restore_line(&mut self, line: usize) {
        if let Some(section) = self.isolations[line].take() {
            for &s in &section.opened {
                self.switchgear[s].holds -= 1;
            }
            for &l in &section.dead_lines {
                self.lines[l].dead -= 1;
            }
            for &b in &section.grounded {
                self.buses[b].grounded -= 1;
            }
        }
        self.lines[line].state = LineState::Operational;
    }

    /// Advances every repair clock by one increment and restores lines whose
    /// repair completed. Returns the restored line indices.
    pub fn tick_repairs(&mut self) -> Vec<usize> {
        let mut done = Vec::new();
        for i in 0..self.lines.len() {
            if let LineState::Failed {
                remaining_increments,
            } = &mut self.lines[i].state
            {
                *remaining_increments -= 1;
                if *remaining_increments == 0 {
                    done.push(i);
                }
            }
        }
        for &i in &done {
            self.restore_line(i);
        }
        done
    }

    pub fn any_failed(&self) -> bool {
        self.lines.iter().any(|l| !l.is_operational())
    }
}
