//! TOML network datasets.
//!
//! Components reference each other by id: buses by number, repair models,
//! load profiles and layers by name. A file may omit profiles and repair
//! models; buses then use the built-in `flat` profile and lines the
//! `default` repair model (loc 1 h, scale 0.5 h, bounds [0, 2] h).

use std::collections::HashMap;
use std::path::Path;

use gridrel_core::flow::PerUnitBase;
use gridrel_core::grid::{
    Bus, Generator, GridError, Layer, LayerKind, Line, LineEnd, RadialReport, SwitchKind,
    Switchgear,
};
use gridrel_core::profile::LoadProfile;
use gridrel_core::stochastic::{EvAvailabilityModel, SocSpec, TruncatedNormal};
use gridrel_core::{Battery, EvPark, PowerNetwork};
use serde::Deserialize;

pub const SCHEMA_VERSION: u32 = 1;

/// The IEEE 33-bus reconstruction shipped with the crate.
pub const EMBEDDED_IEEE33: &str = include_str!("../data/ieee33.toml");

#[derive(Debug, thiserror::Error)]
pub enum LoadError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("unsupported schema_version {0} (this build reads {SCHEMA_VERSION})")]
    Schema(u32),
    #[error("{section} {id}: {reason}")]
    Field {
        section: &'static str,
        id: String,
        reason: String,
    },
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("network fails validate_radial: {0}")]
    NotRadial(RadialReport),
}

fn field(section: &'static str, id: impl ToString, reason: impl Into<String>) -> LoadError {
    LoadError::Field {
        section,
        id: id.to_string(),
        reason: reason.into(),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    schema_version: u32,
    name: String,
    #[serde(default)]
    #[allow(dead_code)]
    description: Option<String>,
    #[serde(default)]
    base: Option<BaseDef>,
    #[serde(default)]
    availability: Option<AvailabilityDef>,
    #[serde(default)]
    repair_model: Vec<RepairDef>,
    #[serde(default)]
    load_profile: Vec<ProfileDef>,
    #[serde(default)]
    layer: Vec<LayerDef>,
    #[serde(default)]
    bus: Vec<BusDef>,
    #[serde(default)]
    line: Vec<LineDef>,
    #[serde(default)]
    switchgear: Vec<SwitchDef>,
    #[serde(default)]
    generator: Vec<GeneratorDef>,
    #[serde(default)]
    battery: Vec<BatteryDef>,
    #[serde(default)]
    ev_park: Vec<ParkDef>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BaseDef {
    s_base_mva: f64,
    v_base_kv: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AvailabilityDef {
    ev_share: Option<f64>,
    daily_charge_frequency: Option<f64>,
    charging_profile: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RepairDef {
    id: String,
    loc_h: f64,
    scale_h: f64,
    lower_h: f64,
    upper_h: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileDef {
    id: String,
    hourly: Vec<f64>,
    monthly: Vec<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDef {
    id: String,
    kind: LayerKindDef,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum LayerKindDef {
    Distribution,
    Microgrid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BusDef {
    id: u32,
    name: Option<String>,
    layer: Option<String>,
    profile: Option<String>,
    #[serde(default)]
    p_mw: f64,
    #[serde(default)]
    q_mvar: f64,
    #[serde(default)]
    customers: u32,
    #[serde(default)]
    households: u32,
    shed_cost: f64,
    coordinates: Option<[f64; 2]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LineDef {
    id: u32,
    from: u32,
    to: u32,
    length_km: f64,
    r_ohm: f64,
    x_ohm: f64,
    capacity_mw: Option<f64>,
    #[serde(default)]
    failure_rate: f64,
    repair_model: Option<String>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum SwitchKindDef {
    Disconnector,
    CircuitBreaker,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "snake_case")]
enum EndDef {
    From,
    To,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SwitchDef {
    id: String,
    kind: SwitchKindDef,
    line: u32,
    end: EndDef,
    #[serde(default = "yes")]
    normally_closed: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeneratorDef {
    id: String,
    bus: u32,
    #[serde(default)]
    p_min_mw: f64,
    p_max_mw: f64,
    #[serde(default)]
    slack: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatteryDef {
    id: String,
    bus: u32,
    capacity_mwh: f64,
    inverter_mw: f64,
    efficiency: f64,
    soc_min: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParkDef {
    id: String,
    bus: u32,
    battery_kwh: f64,
    charger_kw: f64,
    soc_min: f64,
    soc_max: f64,
    /// Pins the fleet size instead of deriving it from households.
    fleet: Option<u32>,
    #[serde(default = "yes")]
    v2g: bool,
}

/// Parses and validates a dataset. The result passes `validate_radial`.
pub fn parse_network(text: &str) -> Result<PowerNetwork, LoadError> {
    let file: NetworkFile = toml::from_str(text)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(LoadError::Schema(file.schema_version));
    }
    let mut net = PowerNetwork::new(file.name);
    if let Some(b) = file.base {
        if !(b.s_base_mva > 0.0 && b.v_base_kv > 0.0) {
            return Err(field("base", "", "bases must be positive"));
        }
        net.base = PerUnitBase {
            s_base_mva: b.s_base_mva,
            v_base_kv: b.v_base_kv,
        };
    }
    if let Some(a) = file.availability {
        let mut model = EvAvailabilityModel::default();
        if let Some(x) = a.ev_share {
            model.ev_share = x;
        }
        if let Some(d) = a.daily_charge_frequency {
            model.daily_charge_frequency = d;
        }
        if let Some(c) = a.charging_profile {
            model.charging_profile = c
                .try_into()
                .map_err(|_| field("availability", "charging_profile", "needs 24 values"))?;
        }
        model
            .check()
            .map_err(|r| field("availability", "", r))?;
        net.availability = model;
    }

    let mut repair_ids: HashMap<String, usize> = HashMap::from([("default".into(), 0)]);
    for r in file.repair_model {
        let model = TruncatedNormal::new(r.loc_h, r.scale_h, r.lower_h, r.upper_h)
            .map_err(|e| field("repair_model", &r.id, e.to_string()))?;
        if r.lower_h < 0.0 {
            return Err(field("repair_model", &r.id, "repair times must be nonnegative"));
        }
        if repair_ids.insert(r.id.clone(), net.repair_models.len()).is_some() {
            return Err(field("repair_model", &r.id, "duplicate id"));
        }
        net.repair_models.push(model);
    }

    let mut profile_ids: HashMap<String, usize> = HashMap::from([("flat".into(), 0)]);
    for p in file.load_profile {
        let profile = LoadProfile {
            name: p.id.clone(),
            hourly: p
                .hourly
                .try_into()
                .map_err(|_| field("load_profile", &p.id, "hourly needs 24 values"))?,
            monthly: p
                .monthly
                .try_into()
                .map_err(|_| field("load_profile", &p.id, "monthly needs 12 values"))?,
        };
        profile.check().map_err(|r| field("load_profile", &p.id, r))?;
        if profile_ids.insert(p.id.clone(), net.profiles.len()).is_some() {
            return Err(field("load_profile", &p.id, "duplicate id"));
        }
        net.profiles.push(profile);
    }

    let mut layer_ids: HashMap<String, usize> = HashMap::new();
    if !file.layer.is_empty() {
        net.layers.clear();
        for l in file.layer {
            if layer_ids.insert(l.id.clone(), net.layers.len()).is_some() {
                return Err(field("layer", &l.id, "duplicate id"));
            }
            net.layers.push(Layer {
                name: l.id,
                kind: match l.kind {
                    LayerKindDef::Distribution => LayerKind::Distribution,
                    LayerKindDef::Microgrid => LayerKind::Microgrid,
                },
            });
        }
    } else {
        layer_ids.insert(net.layers[0].name.clone(), 0);
    }

    let mut bus_ids: HashMap<u32, usize> = HashMap::new();
    for b in file.bus {
        let mut bus = Bus::new(b.id, b.p_mw, b.q_mvar);
        if let Some(name) = b.name {
            bus.name = name;
        }
        bus.layer = match b.layer {
            Some(l) => *layer_ids
                .get(&l)
                .ok_or_else(|| field("bus", b.id, format!("unknown layer {l:?}")))?,
            None => 0,
        };
        bus.profile = match b.profile {
            Some(p) => *profile_ids
                .get(&p)
                .ok_or_else(|| field("bus", b.id, format!("unknown load profile {p:?}")))?,
            None => 0,
        };
        bus.customers = b.customers;
        bus.households = b.households;
        bus.shed_cost = b.shed_cost;
        bus.coordinates = b.coordinates.map(|[x, y]| (x, y));
        if bus_ids.insert(b.id, net.buses.len()).is_some() {
            return Err(field("bus", b.id, "duplicate id"));
        }
        net.add_bus(bus);
    }
    let bus_ref = |section: &'static str, id: &dyn ToString, bus: u32| {
        bus_ids
            .get(&bus)
            .copied()
            .ok_or_else(|| field(section, id.to_string(), format!("unknown bus {bus}")))
    };

    let mut line_ids: HashMap<u32, usize> = HashMap::new();
    for l in file.line {
        let mut line = Line::new(
            l.id,
            bus_ref("line", &l.id, l.from)?,
            bus_ref("line", &l.id, l.to)?,
            l.r_ohm,
            l.x_ohm,
        );
        line.length_km = l.length_km;
        if let Some(c) = l.capacity_mw {
            line.capacity_mw = c;
        }
        line.failure_rate = l.failure_rate;
        if let Some(m) = l.repair_model {
            line.repair_model = *repair_ids
                .get(&m)
                .ok_or_else(|| field("line", l.id, format!("unknown repair model {m:?}")))?;
        }
        if line_ids.insert(l.id, net.lines.len()).is_some() {
            return Err(field("line", l.id, "duplicate id"));
        }
        net.add_line(line);
    }

    for s in file.switchgear {
        let line = *line_ids
            .get(&s.line)
            .ok_or_else(|| field("switchgear", &s.id, format!("unknown line {}", s.line)))?;
        let kind = match s.kind {
            SwitchKindDef::Disconnector => SwitchKind::Disconnector,
            SwitchKindDef::CircuitBreaker => SwitchKind::CircuitBreaker,
        };
        let end = match s.end {
            EndDef::From => LineEnd::From,
            EndDef::To => LineEnd::To,
        };
        let mut sw = Switchgear::new(s.id, kind, line, end);
        sw.normally_closed = s.normally_closed;
        net.add_switch(sw);
    }

    for g in file.generator {
        let bus = bus_ref("generator", &g.id, g.bus)?;
        net.add_generator(Generator {
            id: g.id,
            bus,
            p_min_mw: g.p_min_mw,
            p_max_mw: g.p_max_mw,
            is_slack: g.slack,
        });
    }

    for b in file.battery {
        let mut battery = Battery::new(b.id.clone(), bus_ref("battery", &b.id, b.bus)?);
        battery.capacity_mwh = b.capacity_mwh;
        battery.inverter_mw = b.inverter_mw;
        battery.efficiency = b.efficiency;
        battery.soc_min = b.soc_min;
        battery.reset_full();
        net.batteries.push(battery);
    }

    for p in file.ev_park {
        let bus = bus_ref("ev_park", &p.id, p.bus)?;
        let mut park = EvPark::new(p.id, bus, 0);
        park.battery_kwh = p.battery_kwh;
        park.charger_kw = p.charger_kw;
        park.soc = SocSpec {
            soc_min: p.soc_min,
            soc_max: p.soc_max,
        };
        park.fixed_fleet = p.fleet;
        park.v2g_capable = p.v2g;
        net.ev_parks.push(park);
    }

    net.check()?;
    let report = net.validate_radial();
    if !report.is_ok() {
        return Err(LoadError::NotRadial(report));
    }
    Ok(net)
}

/// Loads a dataset from `path`, or the embedded 33-bus network when `None`.
pub fn load_network(path: Option<&Path>) -> Result<PowerNetwork, LoadError> {
    match path {
        None => parse_network(EMBEDDED_IEEE33),
        Some(p) => parse_network(&read_text(p)?),
    }
}

pub(crate) fn read_text(path: &Path) -> Result<String, LoadError> {
    std::fs::read_to_string(path).map_err(|source| LoadError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = r#"
schema_version = 1
name = "tiny"

[[bus]]
id = 1
shed_cost = 1.0

[[bus]]
id = 2
p_mw = 0.5
customers = 3
shed_cost = 1.0

[[line]]
id = 1
from = 1
to = 2
length_km = 1.0
r_ohm = 0.1
x_ohm = 0.1
failure_rate = 1.0

[[generator]]
id = "grid"
bus = 1
p_max_mw = 10.0
slack = true
"#;

    #[test]
    fn tiny_uses_defaults() {
        let net = parse_network(TINY).unwrap();
        assert_eq!(net.buses.len(), 2);
        assert_eq!(net.lines[0].repair_model, 0);
        assert_eq!(net.buses[1].profile, 0);
        assert!(net.lines[0].capacity_mw.is_infinite());
    }

    #[test]
    fn unknown_field_names_its_location() {
        let text = TINY.replace("failure_rate = 1.0", "failure_rat = 1.0");
        let err = parse_network(&text).unwrap_err().to_string();
        assert!(err.contains("failure_rat"), "{err}");
        assert!(err.contains("line"), "{err}");
    }

    #[test]
    fn dangling_bus_reference() {
        let text = TINY.replace("to = 2", "to = 7");
        match parse_network(&text) {
            Err(LoadError::Field { section, reason, .. }) => {
                assert_eq!(section, "line");
                assert!(reason.contains("unknown bus 7"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn wrong_schema_version() {
        let text = TINY.replace("schema_version = 1", "schema_version = 9");
        assert!(matches!(parse_network(&text), Err(LoadError::Schema(9))));
    }
}
