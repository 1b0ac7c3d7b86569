//! Property tests over random radial networks and random agent schedules.

use gridrel_core::flow::{Branch, Feeder, FlowOptions};
use gridrel_core::grid::{Bus, Generator, Line};
use gridrel_core::shed::{oracle::oracle_shed, solve_shed, ShedLine, ShedNode, ShedProblem, ShedSource};
use gridrel_core::{Battery, EvPark, PowerNetwork};
use gridrel_core::stochastic::{ComponentKind, Purpose, RandomStream, TruncatedNormal};
use num_complex::Complex64;
use proptest::prelude::*;

/// Parent of every bus after the first, as an index below it.
fn tree(max: usize) -> impl Strategy<Value = Vec<usize>> {
    (2..=max).prop_flat_map(|n| (1..n).map(|i| 0..i).collect::<Vec<_>>())
}

fn network(parents: &[usize], switched: &[bool]) -> PowerNetwork {
    let mut net = PowerNetwork::new("random");
    for i in 0..=parents.len() {
        net.add_bus(Bus::new(i as u32 + 1, 0.1, 0.02));
    }
    for (i, &p) in parents.iter().enumerate() {
        if switched[i] {
            net.connect(i as u32 + 1, p, i + 1, 0.1, 0.1);
        } else {
            net.add_line(Line::new(i as u32 + 1, p, i + 1, 0.1, 0.1));
        }
    }
    net.add_generator(Generator {
        id: "grid".into(),
        bus: 0,
        p_min_mw: 0.0,
        p_max_mw: 10.0,
        is_slack: true,
    });
    net
}

proptest! {
    #[test]
    fn sub_systems_partition_the_buses(
        (parents, switched, failed) in tree(12).prop_flat_map(|p| {
            let n = p.len();
            (Just(p), proptest::collection::vec(any::<bool>(), n), proptest::collection::vec(any::<bool>(), n))
        })
    ) {
        let mut net = network(&parents, &switched);
        prop_assert!(net.validate_radial().is_ok());
        for (l, &f) in failed.iter().enumerate() {
            if f {
                net.fail_line(l, 3);
                let _ = net.isolate_fault(l);
            }
        }
        let subs = net.find_sub_systems();
        let mut seen = vec![0; net.buses.len()];
        let mut last_first = None;
        for s in &subs {
            prop_assert!(last_first < Some(s.buses[0]));
            last_first = Some(s.buses[0]);
            for &b in &s.buses {
                seen[b] += 1;
            }
            // Each sub-system is a tree over its own buses.
            prop_assert_eq!(s.lines.len() + 1, s.buses.len());
            for &l in &s.lines {
                prop_assert!(s.contains_bus(net.lines[l].from) && s.contains_bus(net.lines[l].to));
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        for l in 0..net.lines.len() {
            if failed[l] {
                net.restore_line(l);
            }
        }
        prop_assert_eq!(net.find_sub_systems().len(), 1);
    }

    #[test]
    fn sweep_satisfies_the_bus_equations(
        (parents, loads) in tree(10).prop_flat_map(|p| {
            let n = p.len() + 1;
            (Just(p), proptest::collection::vec((-0.05f64..0.2, -0.02f64..0.1), n))
        })
    ) {
        let n = parents.len() + 1;
        let branches: Vec<Branch> = parents
            .iter()
            .enumerate()
            .map(|(i, &p)| Branch { from: p, to: i + 1, z: Complex64::new(0.01, 0.02) * (1.0 + i as f64 / 7.0) })
            .collect();
        let feeder = Feeder::new(n, 0, branches.clone()).unwrap();
        let mut load: Vec<Complex64> = loads.iter().map(|&(p, q)| Complex64::new(p, q)).collect();
        load[0] = Complex64::new(0.0, 0.0);
        let opts = FlowOptions { tolerance: 1e-12, max_iterations: 200 };
        let sol = feeder.solve(&load, Complex64::new(1.0, 0.0), opts).unwrap();
        prop_assert!(sol.converged);
        // Bus injections from the nodal admittance form, independent of the sweep.
        let mut current = vec![Complex64::new(0.0, 0.0); n];
        for b in &branches {
            let i = (sol.voltage[b.from] - sol.voltage[b.to]) / b.z;
            current[b.from] += i;
            current[b.to] -= i;
        }
        for k in 1..n {
            let s = sol.voltage[k] * current[k].conj();
            prop_assert!((s + load[k]).norm() < 1e-9, "bus {} mismatch {}", k, (s + load[k]).norm());
        }
        let s0 = sol.voltage[0] * current[0].conj();
        prop_assert!((s0 - sol.root_injection).norm() < 1e-9);
        let total: Complex64 = load.iter().sum();
        prop_assert!((sol.root_injection - total - sol.total_loss).norm() < 1e-12);
    }

    #[test]
    fn shed_matches_oracle(
        (parents, demand, cost, caps, srcs) in tree(6).prop_flat_map(|p| {
            let n = p.len() + 1;
            (
                Just(p),
                proptest::collection::vec(0.0f64..2.0, n),
                proptest::collection::vec(1u32..5, n),
                proptest::collection::vec(prop_oneof![Just(f64::INFINITY), 0.05f64..3.0], n - 1),
                proptest::collection::vec((0..n, 0.0f64..0.3, 0.0f64..4.0), 1..=4),
            )
        })
    ) {
        let problem = ShedProblem {
            nodes: demand
                .iter()
                .zip(&cost)
                .enumerate()
                .map(|(i, (&d, &c))| ShedNode { id: i as u32 + 1, demand_mw: d, cost: c as f64 * 1000.0 })
                .collect(),
            sources: srcs
                .iter()
                .map(|&(node, lo, hi)| ShedSource { node, p_min_mw: lo.min(hi), p_max_mw: hi })
                .collect(),
            lines: parents
                .iter()
                .zip(&caps)
                .enumerate()
                .map(|(i, (&p, &c))| ShedLine { from: p, to: i + 1, capacity_mw: c })
                .collect(),
        };
        match (solve_shed(&problem), oracle_shed(&problem)) {
            (Ok(a), Ok(b)) => {
                let scale = b.objective.abs().max(1.0);
                prop_assert!((a.objective - b.objective).abs() <= 1e-6 * scale,
                    "solver {} oracle {}", a.objective, b.objective);
            }
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "disagree: {:?} vs {:?}", a.map(|s| s.objective), b.map(|s| s.objective)),
        }
    }

    #[test]
    fn battery_stays_within_limits(steps in proptest::collection::vec(-0.5f64..0.5, 1..200)) {
        let mut b = Battery::new("b", 0);
        b.reset_full();
        let dt = 1.0 / 12.0;
        for p in steps {
            let before = b.stored_mwh;
            let done = b.exchange(p, dt);
            prop_assert!(done.abs() <= p.abs() + 1e-12);
            prop_assert!(done.abs() <= b.inverter_mw + 1e-12);
            prop_assert!(b.stored_mwh >= b.floor_mwh() - 1e-12);
            prop_assert!(b.stored_mwh <= b.capacity_mwh + 1e-12);
            let expect = if done >= 0.0 { -done * dt / b.efficiency } else { -done * dt * b.efficiency };
            prop_assert!((b.stored_mwh - before - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn park_energy_bookkeeping(
        fleet in 1u32..40,
        seed in any::<u64>(),
        steps in proptest::collection::vec((0.0f64..0.2, 0.0f64..0.2), 1..100),
    ) {
        let mut park = EvPark::new("ev", 0, fleet);
        park.v2g = true;
        let mut rng = RandomStream::new(seed, 0, ComponentKind::EvPark, 0, Purpose::Fleet);
        let drawn = park.draw_fleet(0.7, &mut rng);
        let dt = 1.0 / 12.0;
        let start = park.stored_kwh();
        for (ch, dis) in steps {
            park.apply(ch, dis, dt);
            prop_assert!(park.stored_kwh() <= park.capacity_kwh() + 1e-9);
            prop_assert!(park.stored_kwh() >= park.floor_kwh().min(start) - 1e-9);
        }
        let acc = park.acc;
        prop_assert!((park.stored_kwh() - start - (acc.charged_kwh - acc.discharged_kwh)).abs() < 1e-6);
        if drawn == 0 {
            prop_assert_eq!(acc.charged_kwh + acc.discharged_kwh + acc.unmet_charge_kwh, 0.0);
        }
        park.clear_fleet();
        prop_assert!(park.acc.activations <= acc.v2g_hours / dt + 1e-9);
    }

    #[test]
    fn truncated_normal_respects_bounds(
        loc in -2.0f64..4.0,
        scale in 0.05f64..3.0,
        lower in -1.0f64..1.0,
        width in 0.1f64..3.0,
        seed in any::<u64>(),
    ) {
        let d = match TruncatedNormal::new(loc, scale, lower, lower + width) {
            Ok(d) => d,
            Err(_) => {
                // Only intervals far out in a tail lose all mass to underflow.
                let gap = (lower - loc).max(loc - lower - width) / scale;
                prop_assert!(gap > 30.0, "rejected at {} scales", gap);
                return Ok(());
            }
        };
        let mut rng = RandomStream::new(seed, 0, ComponentKind::Line, 0, Purpose::Repair);
        for _ in 0..200 {
            let x = d.sample(&mut rng);
            prop_assert!(x >= lower && x <= lower + width);
        }
    }
}
