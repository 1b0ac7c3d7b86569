//! End-to-end iterations on small hand-built networks.

use gridrel_core::engine::IncrementRecord;
use gridrel_core::grid::{Bus, Generator};
use gridrel_core::stochastic::TruncatedNormal;
use gridrel_core::{Battery, EvPark, IndexReport, PowerNetwork, SimulationConfig, Simulator};

fn slack(bus: usize) -> Generator {
    Generator {
        id: "grid".into(),
        bus,
        p_min_mw: 0.0,
        p_max_mw: 10.0,
        is_slack: true,
    }
}

/// Slack bus, one switched line, one load bus.
fn single_line(load_mw: f64, rate_per_km: f64, repair_h: f64) -> PowerNetwork {
    let mut net = PowerNetwork::new("single");
    net.repair_models[0] = TruncatedNormal::degenerate(repair_h);
    net.add_bus(Bus::new(1, 0.0, 0.0));
    let mut load = Bus::new(2, load_mw, 0.0);
    load.customers = 10;
    net.add_bus(load);
    let l = net.connect(1, 0, 1, 0.0, 0.0);
    net.lines[l].failure_rate = rate_per_km;
    net.add_generator(slack(0));
    net
}

fn config(iterations: u64) -> SimulationConfig {
    SimulationConfig {
        iterations,
        seed: 11,
        ..SimulationConfig::default()
    }
}

#[test]
fn single_line_outage_matches_expectation() {
    let sim = Simulator::new(single_line(0.3, 1.0, 1.0), config(400)).unwrap();
    let summary = sim.run_monte_carlo(|_| {}).unwrap();
    let saifi = summary.mean(gridrel_core::indices::Index::Saifi);
    let saidi = summary.mean(gridrel_core::indices::Index::Saidi);
    let ens = summary.mean(gridrel_core::indices::Index::Ens);
    // One failure per year on average, each lasting exactly 1 h; the sample
    // mean of 400 Poisson(1) counts has a standard error of 0.05.
    assert!((saifi - 1.0).abs() < 0.2, "{saifi}");
    // Every outage lasts 12 increments of 5 min, except those cut short by
    // the end of the year.
    assert!(saidi <= saifi + 1e-9 && saidi > saifi - 0.01, "{saidi} {saifi}");
    assert!((ens - 0.3 * saidi).abs() < 1e-9, "{ens}");
    let full = summary.reports.iter().filter(|r| r.r_s.is_some_and(|x| (x - 1.0).abs() < 1e-9)).count();
    let any = summary.reports.iter().filter(|r| r.r_s.is_some()).count();
    assert!(full + 3 >= any, "{full} of {any}");
}

#[test]
fn no_failures_means_no_interruptions() {
    let sim = Simulator::new(single_line(0.3, 0.0, 1.0), config(20)).unwrap();
    for i in 0..20 {
        let h = sim.run_iteration(i).unwrap();
        assert!(h.events.is_empty());
        assert_eq!(IndexReport::from_history(&h), IndexReport { iteration: i, ..IndexReport::default() });
    }
}

#[test]
fn iterations_are_reproducible() {
    let sim = Simulator::new(single_line(0.3, 3.0, 1.5), config(10)).unwrap();
    let a: Vec<_> = (0..10).map(|i| sim.run_iteration(i).unwrap()).collect();
    let b: Vec<_> = (0..10).rev().map(|i| sim.run_iteration(i).unwrap()).collect();
    for (x, y) in a.iter().zip(b.iter().rev()) {
        assert_eq!(x, y);
    }
    let other = Simulator::new(single_line(0.3, 3.0, 1.5), SimulationConfig { seed: 12, ..config(10) }).unwrap();
    assert!((0..10).any(|i| other.run_iteration(i).unwrap().events != a[i as usize].events));
}

/// Slack, switched line, load bus with a battery, held out for 3 h.
#[test]
fn battery_carries_island_until_empty() {
    let mut net = single_line(0.2, 4.0, 3.0);
    net.batteries.push(Battery::new("bat", 1));
    let cfg = SimulationConfig { batteries: true, ..config(50) };
    let sim = Simulator::new(net, cfg).unwrap();
    let dt = sim.increment_hours();
    let mut checked = 0;
    for i in 0..50 {
        let mut trace: Vec<IncrementRecord> = Vec::new();
        let h = sim.run_iteration_traced(i, &mut trace).unwrap();
        let Some(first) = h.events.first() else { continue };
        let start = (first.start_hours / dt).round() as u64;
        let outage: Vec<_> = trace
            .iter()
            .filter(|r| r.increment >= start && r.increment < start + 36)
            .collect();
        assert_eq!(outage.len(), 36);
        // Usable energy 0.45 MWh delivers 0.45·0.95 MWh at the terminals.
        let delivered: f64 = outage
            .iter()
            .map(|r| r.sub_systems.iter().filter(|s| s.island).map(|s| s.generation_mw).sum::<f64>() * dt)
            .sum();
        let shed: f64 = outage.iter().flat_map(|r| r.shed.iter().map(|s| s.1 * dt)).sum();
        assert!((delivered - 0.45 * 0.95).abs() < 1e-9, "{delivered}");
        assert!((shed - (0.2 * 3.0 - 0.45 * 0.95)).abs() < 1e-9, "{shed}");
        // Served in full until the battery runs dry 2.1375 h in.
        for r in outage.iter().take(25) {
            assert!(r.shed.is_empty(), "{r:?}");
        }
        checked += 1;
    }
    assert!(checked > 10);
}

#[test]
fn unswitched_feeder_blacks_out_everything() {
    let mut net = PowerNetwork::new("bare");
    net.repair_models[0] = TruncatedNormal::degenerate(1.0);
    for i in 0..3 {
        let mut b = Bus::new(i + 1, if i == 0 { 0.0 } else { 0.1 }, 0.0);
        b.customers = if i == 0 { 0 } else { 5 };
        net.add_bus(b);
    }
    for i in 0..2 {
        let l = net.add_line(gridrel_core::grid::Line::new(i as u32 + 1, i, i + 1, 0.01, 0.01));
        net.lines[l].failure_rate = if i == 1 { 2.0 } else { 0.0 };
    }
    net.add_generator(slack(0));
    let sim = Simulator::new(net, config(30)).unwrap();
    for i in 0..30 {
        let h = sim.run_iteration(i).unwrap();
        let r = IndexReport::from_history(&h);
        // Both load points share every outage, also the healthy-side one.
        assert_eq!(h.load_points[0].interruptions, h.load_points[1].interruptions);
        assert!((r.saifi - h.events.len() as f64).abs() < 1e-12 || events_overlap(&h));
    }
}

fn events_overlap(h: &gridrel_core::IterationHistory) -> bool {
    h.events
        .windows(2)
        .any(|w| w[1].start_hours < w[0].start_hours + w[0].duration_hours + 1e-9)
}

fn parked_network() -> PowerNetwork {
    let mut net = PowerNetwork::new("parks");
    net.add_bus(Bus::new(1, 0.0, 0.0));
    for i in 1..4 {
        let mut b = Bus::new(i + 1, 0.05, 0.01);
        b.customers = 8;
        b.households = 8;
        net.add_bus(b);
        let l = net.connect(i, i as usize - 1, i as usize, 0.05, 0.03);
        net.lines[l].failure_rate = 1.5;
        net.ev_parks.push(EvPark::new(format!("ev{i}"), i as usize, 0));
    }
    net.batteries.push(Battery::new("bat", 3));
    net.add_generator(slack(0));
    net
}

#[test]
fn cases_share_failure_draws() {
    let mut logs = Vec::new();
    for (v2g, batteries) in [(false, false), (true, false), (false, true), (true, true)] {
        let cfg = SimulationConfig { v2g, batteries, ..config(20) };
        let sim = Simulator::new(parked_network(), cfg).unwrap();
        let events: Vec<_> = (0..20).map(|i| sim.run_iteration(i).unwrap().events).collect();
        let reports: Vec<_> = (0..20).map(|i| IndexReport::from_history(&sim.run_iteration(i).unwrap())).collect();
        if !v2g {
            assert!(reports.iter().all(|r| r.ev_int == 0.0 && r.ev_dur_h == 0.0));
        }
        logs.push(events);
    }
    assert!(logs.iter().all(|l| *l == logs[0]));
    assert!(logs[0].iter().any(|e| !e.is_empty()));
}

#[test]
fn batteries_requested_without_any_is_a_config_error() {
    let cfg = SimulationConfig { batteries: true, ..config(1) };
    assert!(Simulator::new(single_line(0.1, 1.0, 1.0), cfg).is_err());
}
