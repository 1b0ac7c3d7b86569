//! One faulted increment: balance every sub-system, shed, run the load flow
//! and commit the outcome to the agents and the history.

use alloc::vec::Vec;

use num_complex::Complex64;

use super::history::IterationHistory;
use super::trace::{IncrementRecord, SubSystemRecord, TraceSink};
use super::Simulator;
use crate::flow::{island_reference, Feeder, FlowOptions};
use crate::grid::{PowerNetwork, SubSystem};
use crate::shed::{build_problem, solve_shed, ShedError, SourceOffer};

/// Extra LP solves allowed for the reference source to make room for losses.
const LOSS_ROUNDS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq)]
enum SourceRef {
    Generator(usize),
    Battery(usize),
    Park(usize),
}

pub(crate) struct Context<'a> {
    sim: &'a Simulator,
    demand_p: Vec<f64>,
    demand_q: Vec<f64>,
    shed_bus: Vec<f64>,
    lp_shed: Vec<f64>,
    /// Parks per sub-system get visited in ascending bus id.
    park_order: Vec<usize>,
}

impl<'a> Context<'a> {
    pub(crate) fn new(sim: &'a Simulator, net: &PowerNetwork) -> Self {
        let n = net.buses.len();
        let mut park_order: Vec<usize> = (0..net.ev_parks.len()).collect();
        park_order.sort_by_key(|&p| net.buses[net.ev_parks[p].bus].id);
        Self {
            sim,
            demand_p: alloc::vec![0.0; n],
            demand_q: alloc::vec![0.0; n],
            shed_bus: alloc::vec![0.0; n],
            lp_shed: alloc::vec![0.0; sim.load_points.len()],
            park_order,
        }
    }

    pub(crate) fn process(
        &mut self,
        net: &mut PowerNetwork,
        iteration: u64,
        t: u64,
        hist: &mut IterationHistory,
        sink: &mut dyn TraceSink,
    ) -> Result<(), ShedError> {
        let dt = self.sim.dt;
        let time = t as f64 * dt;
        for (b, bus) in net.buses.iter().enumerate() {
            let f = net.profiles[bus.profile].factor(time);
            self.demand_p[b] = bus.peak_p_mw * f;
            self.demand_q[b] = bus.peak_q_mvar * f;
        }
        self.shed_bus.iter_mut().for_each(|s| *s = 0.0);

        let subs = net.find_sub_systems();
        let mut records = Vec::with_capacity(subs.len());
        let mut ev_exchange = Vec::new();
        for sub in &subs {
            let before: Vec<(usize, f64, f64)> = sub
                .ev_parks
                .iter()
                .map(|&p| (p, net.ev_parks[p].acc.charged_kwh, net.ev_parks[p].acc.discharged_kwh))
                .collect();
            records.push(self.process_sub(net, sub)?);
            for (p, ch0, dis0) in before {
                let park = &net.ev_parks[p];
                let mwh = (park.acc.discharged_kwh - dis0) - (park.acc.charged_kwh - ch0);
                if mwh != 0.0 {
                    ev_exchange.push((net.buses[park.bus].id, mwh / 1000.0 / dt));
                }
            }
        }

        for (i, &b) in self.sim.load_points.iter().enumerate() {
            self.lp_shed[i] = self.shed_bus[b];
        }
        hist.record_shed(&self.lp_shed, dt);

        let rec = IncrementRecord {
            iteration,
            increment: t,
            time_hours: time,
            failed_lines: net
                .lines
                .iter()
                .filter(|l| !l.is_operational())
                .map(|l| l.id)
                .collect(),
            sub_systems: records,
            shed: self
                .sim
                .load_points
                .iter()
                .filter(|&&b| self.shed_bus[b] > super::SHED_EPS_MW)
                .map(|&b| (net.buses[b].id, self.shed_bus[b]))
                .collect(),
            ev_exchange,
        };
        sink.record(&rec);
        Ok(())
    }

    /// Sheds everything in the sub-system; parks only accrue unmet charging.
    fn black_out(&mut self, net: &mut PowerNetwork, sub: &SubSystem, converged: bool) -> SubSystemRecord {
        let dt = self.sim.dt;
        let mut demand = 0.0;
        for &b in &sub.buses {
            self.shed_bus[b] = self.demand_p[b];
            demand += self.demand_p[b];
        }
        for &p in &sub.ev_parks {
            net.ev_parks[p].apply(0.0, 0.0, dt);
        }
        SubSystemRecord {
            first_bus: sub.buses[0],
            buses: sub.buses.len(),
            island: sub.is_island(),
            reference: None,
            generation_mw: 0.0,
            discharge_mw: 0.0,
            charge_mw: 0.0,
            demand_mw: demand,
            shed_mw: demand,
            losses_mw: 0.0,
            flow_iterations: 0,
            flow_converged: converged,
            loss_rounds: 0,
        }
    }

    fn process_sub(&mut self, net: &mut PowerNetwork, sub: &SubSystem) -> Result<SubSystemRecord, ShedError> {
        let dt = self.sim.dt;
        if sub.grounded {
            return Ok(self.black_out(net, sub, true));
        }
        let island = sub.is_island();
        let demand: f64 = sub.buses.iter().map(|&b| self.demand_p[b]).sum();

        // Sources and their limits for this increment.
        let mut offers: Vec<SourceOffer> = Vec::new();
        let mut owners: Vec<SourceRef> = Vec::new();
        let mut charge: Vec<(SourceRef, usize, f64)> = Vec::new();
        if let Some(g) = sub.slack {
            let gen = &net.generators[g];
            offers.push(SourceOffer { bus: gen.bus, p_min_mw: gen.p_min_mw, p_max_mw: gen.p_max_mw });
            owners.push(SourceRef::Generator(g));
        }
        for &g in &sub.generators {
            let gen = &net.generators[g];
            offers.push(SourceOffer { bus: gen.bus, p_min_mw: gen.p_min_mw, p_max_mw: gen.p_max_mw });
            owners.push(SourceRef::Generator(g));
        }
        for &i in &sub.batteries {
            let b = &net.batteries[i];
            if island {
                let cap = b.discharge_limit_mw(dt);
                if cap > 0.0 {
                    offers.push(SourceOffer { bus: b.bus, p_min_mw: 0.0, p_max_mw: cap });
                    owners.push(SourceRef::Battery(i));
                }
            } else {
                let ch = b.charge_limit_mw(dt);
                if ch > 0.0 {
                    charge.push((SourceRef::Battery(i), b.bus, ch));
                }
            }
        }
        let supply: f64 = offers.iter().map(|o| o.p_max_mw).sum();
        let mut balance = supply - demand - charge.iter().map(|c| c.2).sum::<f64>();
        for &p in &self.park_order {
            if !sub.ev_parks.contains(&p) {
                continue;
            }
            let park = &net.ev_parks[p];
            if park.fleet() == 0 {
                continue;
            }
            if balance > 0.0 {
                let ch = park.charge_demand_mw(dt).min(balance);
                if ch > 0.0 {
                    balance -= ch;
                    charge.push((SourceRef::Park(p), park.bus, ch));
                }
            } else if balance < 0.0 {
                let dis = park.discharge_offer_mw(dt).min(-balance);
                if dis > 0.0 {
                    balance += dis;
                    offers.push(SourceOffer { bus: park.bus, p_min_mw: 0.0, p_max_mw: dis });
                    owners.push(SourceRef::Park(p));
                }
            }
        }
        if offers.iter().all(|o| o.p_max_mw <= 0.0) {
            return Ok(self.black_out(net, sub, true));
        }

        // The slack is always the first offer; islands follow the reference rule.
        let reference = if sub.slack.is_some() {
            0
        } else {
            let want = island_reference(net, sub);
            let at = |kind: fn(&SourceRef) -> bool| {
                owners
                    .iter()
                    .zip(&offers)
                    .position(|(o, off)| kind(o) && Some(off.bus) == want)
            };
            at(|o| matches!(o, SourceRef::Battery(_)))
                .or_else(|| at(|o| matches!(o, SourceRef::Park(_))))
                .or_else(|| at(|o| matches!(o, SourceRef::Generator(_))))
                .unwrap_or_else(|| {
                    (0..offers.len())
                        .fold(0, |best, j| if offers[j].p_max_mw > offers[best].p_max_mw { j } else { best })
                })
        };
        let ref_bus = offers[reference].bus;
        let ref_limit = offers[reference].p_max_mw;

        let (feeder, _, _) = Feeder::from_subsystem(net, sub, ref_bus)
            .expect("sub-systems are trees");
        let base = net.base;
        let local = |b: usize| sub.buses.binary_search(&b).unwrap();

        let mut node_demand = self.demand_p.clone();
        for &(_, bus, ch) in &charge {
            node_demand[bus] += ch;
        }

        let mut reduction = 0.0;
        let mut rounds = 0;
        loop {
            let mut round_offers = offers.clone();
            round_offers[reference].p_max_mw = (ref_limit - reduction).max(round_offers[reference].p_min_mw);
            let problem = build_problem(net, sub, &node_demand, &round_offers);
            let sol = solve_shed(&problem)?;

            // Shed at a node falls on its charging load first.
            let mut served_charge: Vec<f64> = charge.iter().map(|c| c.2).collect();
            let mut customer_shed = alloc::vec![0.0; sub.buses.len()];
            for (k, &b) in sub.buses.iter().enumerate() {
                let mut s = sol.shed[k];
                for (ci, c) in charge.iter().enumerate().rev() {
                    if c.1 == b && s > 0.0 {
                        let cut = s.min(served_charge[ci]);
                        served_charge[ci] -= cut;
                        s -= cut;
                    }
                }
                customer_shed[k] = s.min(self.demand_p[b]);
            }

            let mut load = alloc::vec![Complex64::new(0.0, 0.0); sub.buses.len()];
            for (k, &b) in sub.buses.iter().enumerate() {
                let p = self.demand_p[b] - customer_shed[k];
                let q = if self.demand_p[b] > 0.0 {
                    self.demand_q[b] * p / self.demand_p[b]
                } else {
                    self.demand_q[b]
                };
                load[k] = base.power_pu(p, q);
            }
            for (ci, c) in charge.iter().enumerate() {
                load[local(c.1)] += base.power_pu(served_charge[ci], 0.0);
            }
            let mut other_output = 0.0;
            for (j, off) in round_offers.iter().enumerate() {
                if j != reference {
                    load[local(off.bus)] -= base.power_pu(sol.dispatch[j], 0.0);
                    other_output += sol.dispatch[j];
                }
            }
            let flow = feeder
                .solve(&load, Complex64::new(1.0, 0.0), FlowOptions::default())
                .expect("load vector sized to the feeder");
            if !flow.converged {
                let mut rec = self.black_out(net, sub, false);
                rec.flow_iterations = flow.iterations;
                return Ok(rec);
            }
            let ref_output = flow.root_injection.re * base.s_base_mva;
            if ref_output > ref_limit + 1e-9 && rounds < LOSS_ROUNDS {
                reduction += ref_output - ref_limit;
                rounds += 1;
                continue;
            }

            // Commit.
            for (j, owner) in owners.iter().enumerate() {
                let out = if j == reference { ref_output } else { sol.dispatch[j] };
                if let SourceRef::Battery(i) = *owner {
                    net.batteries[i].exchange(out, dt);
                }
            }
            for (ci, c) in charge.iter().enumerate() {
                if let SourceRef::Battery(i) = c.0 {
                    net.batteries[i].exchange(-served_charge[ci], dt);
                }
            }
            for &p in &sub.ev_parks {
                let ch: f64 = charge
                    .iter()
                    .zip(&served_charge)
                    .filter(|(c, _)| c.0 == SourceRef::Park(p))
                    .map(|(_, s)| *s)
                    .sum();
                let dis: f64 = owners
                    .iter()
                    .enumerate()
                    .filter(|(_, o)| **o == SourceRef::Park(p))
                    .map(|(j, _)| if j == reference { ref_output } else { sol.dispatch[j] })
                    .sum();
                net.ev_parks[p].apply(ch, dis, dt);
            }
            let mut shed_total = 0.0;
            for (k, &b) in sub.buses.iter().enumerate() {
                self.shed_bus[b] = customer_shed[k];
                shed_total += customer_shed[k];
            }
            return Ok(SubSystemRecord {
                first_bus: sub.buses[0],
                buses: sub.buses.len(),
                island,
                reference: Some(ref_bus),
                generation_mw: ref_output,
                discharge_mw: other_output,
                charge_mw: served_charge.iter().sum(),
                demand_mw: demand,
                shed_mw: shed_total,
                losses_mw: flow.total_loss.re * base.s_base_mva,
                flow_iterations: flow.iterations,
                flow_converged: true,
                loss_rounds: rounds,
            });
        }
    }
}
