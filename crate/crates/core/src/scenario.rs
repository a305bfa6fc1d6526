//! Scenario files: parsing, validation and canonical serialization.
//!
//! A scenario is one JSON document. Every numeric key carries its unit as a
//! suffix (`_m`, `_dbm`, `_db`, `_hz`, `_s`, `_deg`, `_mps`, `_wl`) and
//! unknown keys are rejected. The key-by-key reference with defaults lives
//! in `docs/scenario-schema.md`.
//!
//! [`parse_scenario`] is strict: besides the structural checks it enforces
//! the cheap cell-pair rules (distinct adjacent sites, similar boresight).
//! [`parse_scenario_lenient`] leaves those to [`crate::network::validate_pair`]
//! so a validator can report them instead of refusing the file.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::antenna::AntennaConfig;
use crate::coverage::{bcs_filtered_grid, best_server_grid, CoverageGrid, GridBounds};
use crate::error::{Error, Result, ScenarioError};
use crate::geometry::Point3;
use crate::handover::{HandoverPolicy, PolicyKind};
use crate::mobility::{Trajectory, UeConfig};
use crate::network::{
    build_standard_network, pair_layout_violations, AerialCoverageGroup, Cell, CellId, CellRole, Network,
    PairValidationConfig,
};
use crate::propagation::LinkBudgetConfig;

const DEFAULT_PREDEFINED_HEIGHT_M: f64 = 300.0;
const DEFAULT_EXPLICIT_ISD_M: f64 = 500.0;
const DEFAULT_GRID_RESOLUTION_M: f64 = 10.0;
const SIGNIFICANT_DIGITS: usize = 9;

/// How the cells of a scenario were described.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NetworkLayout {
    /// Hexagonal rings of three-sector sites built from the shared antenna.
    /// The cells in [`Scenario::network`] are regenerated on load, so edits
    /// to them are not serialized.
    Standard { rings: u32, isd: f64, antenna_height: f64 },
    /// Cells listed one by one.
    Explicit,
}

/// Which cells compete for best server on a grid.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum GridFilter {
    #[default]
    None,
    /// BCS-filtered map of one aerial-coverage group.
    Group(String),
    Cells(BTreeSet<CellId>),
}

impl fmt::Display for GridFilter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GridFilter::None => write!(f, "none"),
            GridFilter::Group(g) => write!(f, "group:{g}"),
            GridFilter::Cells(ids) => {
                let ids: Vec<String> = ids.iter().map(|id| id.to_string()).collect();
                write!(f, "cells:{}", ids.join(","))
            }
        }
    }
}

impl FromStr for GridFilter {
    type Err = String;

    /// Accepts `none`, `group:<id>` and `cells:<id>,<id>,...`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "none" {
            return Ok(GridFilter::None);
        }
        if let Some(g) = s.strip_prefix("group:") {
            if g.is_empty() {
                return Err("group filter needs a group id".into());
            }
            return Ok(GridFilter::Group(g.to_string()));
        }
        if let Some(list) = s.strip_prefix("cells:") {
            let ids = list
                .split(',')
                .map(|t| t.trim().parse::<u32>().map(CellId))
                .collect::<std::result::Result<BTreeSet<_>, _>>()
                .map_err(|e| format!("bad cell id in `{s}`: {e}"))?;
            if ids.is_empty() {
                return Err("cell filter needs at least one id".into());
            }
            return Ok(GridFilter::Cells(ids));
        }
        Err(format!(
            "unknown filter `{s}`, expected none, group:<id> or cells:<ids>"
        ))
    }
}

/// Parses `baseline` or `bcs:<group>`.
pub fn parse_policy(s: &str, predefined_height: f64) -> std::result::Result<HandoverPolicy, String> {
    match s {
        "baseline" => Ok(HandoverPolicy::baseline(predefined_height)),
        _ => match s.strip_prefix("bcs:") {
            Some(g) if !g.is_empty() => Ok(HandoverPolicy::bcs(g, predefined_height)),
            _ => Err(format!("unknown policy `{s}`, expected baseline or bcs:<group>")),
        },
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridRequest {
    pub height: f64,
    pub bounds: GridBounds,
    pub resolution: f64,
    pub filter: GridFilter,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlightRequest {
    pub trajectory: Trajectory,
    /// Overrides the scenario policy for this flight.
    pub policy: Option<HandoverPolicy>,
    /// Cell to start on; the strongest allowed cell when unset.
    pub initial_cell: Option<CellId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub network: Network,
    pub layout: NetworkLayout,
    /// Antenna shared by all cells that do not carry their own.
    pub antenna: AntennaConfig,
    pub pair_validation: PairValidationConfig,
    pub ue: UeConfig,
    pub policy: HandoverPolicy,
    pub grids: Vec<GridRequest>,
    pub flights: Vec<FlightRequest>,
}

impl Scenario {
    /// Policy a flight runs under.
    pub fn flight_policy(&self, flight: &FlightRequest) -> HandoverPolicy {
        flight.policy.clone().unwrap_or_else(|| self.policy.clone())
    }

    /// Computes the map a grid request describes.
    pub fn compute_grid(&self, request: &GridRequest) -> Result<CoverageGrid> {
        let net = &self.network;
        match &request.filter {
            GridFilter::None => best_server_grid(net, request.height, &request.bounds, request.resolution, None),
            GridFilter::Cells(ids) => {
                best_server_grid(net, request.height, &request.bounds, request.resolution, Some(ids))
            }
            GridFilter::Group(g) => {
                bcs_filtered_grid(net, net.group(g)?, request.height, &request.bounds, request.resolution)
            }
        }
    }
}

// ---------------------------------------------------------------------------
// File representation

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    network: RawNetwork,
    #[serde(default)]
    antenna: AntennaConfig,
    #[serde(default)]
    link_budget: LinkBudgetConfig,
    #[serde(default = "default_predefined_height")]
    predefined_height_m: f64,
    #[serde(default)]
    groups: Vec<AerialCoverageGroup>,
    #[serde(default)]
    pair_validation: PairValidationConfig,
    #[serde(default)]
    ue: UeConfig,
    #[serde(default = "default_policy")]
    policy: String,
    #[serde(default)]
    grids: Vec<RawGrid>,
    #[serde(default)]
    flights: Vec<RawFlight>,
}

fn default_predefined_height() -> f64 {
    DEFAULT_PREDEFINED_HEIGHT_M
}

fn default_policy() -> String {
    "baseline".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetwork {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    standard: Option<RawStandard>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    isd_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cells: Option<Vec<RawCell>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStandard {
    rings: u32,
    isd_m: f64,
    antenna_height_m: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCell {
    id: CellId,
    site_id: u32,
    position_m: [f64; 3],
    boresight_azimuth_deg: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    tx_power_dbm: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    role: Option<CellRole>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    antenna: Option<AntennaConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    height_m: f64,
    #[serde(default)]
    bounds: GridBounds,
    #[serde(default = "default_resolution")]
    resolution_m: f64,
    #[serde(default = "default_filter")]
    filter: String,
}

fn default_resolution() -> f64 {
    DEFAULT_GRID_RESOLUTION_M
}

fn default_filter() -> String {
    "none".into()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlight {
    trajectory: Trajectory,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    initial_cell: Option<CellId>,
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Clone, Copy, PartialEq)]
enum Strictness {
    Strict,
    Lenient,
}

/// Parses and fully validates a scenario, filling in every default.
pub fn parse_scenario(text: &[u8]) -> Result<Scenario> {
    parse_with(text, Strictness::Strict)
}

/// Like [`parse_scenario`] but accepts pairs that break the site,
/// adjacency or boresight rules. Cross references must still resolve.
pub fn parse_scenario_lenient(text: &[u8]) -> Result<Scenario> {
    parse_with(text, Strictness::Lenient)
}

fn parse_with(text: &[u8], strictness: Strictness) -> Result<Scenario> {
    let raw = deserialize(text)?;
    build(raw, strictness).map_err(Error::from)
}

fn deserialize(text: &[u8]) -> std::result::Result<RawScenario, ScenarioError> {
    let syntax = |e: &serde_json::Error| ScenarioError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    };
    let mut de = serde_json::Deserializer::from_slice(text);
    let raw: RawScenario = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => ScenarioError::semantic(path, inner.to_string()),
            _ => syntax(&inner),
        }
    })?;
    de.end().map_err(|e| syntax(&e))?;
    Ok(raw)
}

fn check_field(
    path: &str,
    r: std::result::Result<(), (&'static str, String)>,
) -> std::result::Result<(), ScenarioError> {
    r.map_err(|(key, msg)| ScenarioError::semantic(format!("{path}.{key}"), msg))
}

fn require(ok: bool, path: impl Into<String>, msg: &str) -> std::result::Result<(), ScenarioError> {
    if ok {
        Ok(())
    } else {
        Err(ScenarioError::semantic(path, msg))
    }
}

fn build(raw: RawScenario, strictness: Strictness) -> std::result::Result<Scenario, ScenarioError> {
    check_field("antenna", raw.antenna.validate())?;
    let lb = raw.link_budget;
    require(lb.tx_power.is_finite(), "link_budget.tx_power_dbm", "must be finite")?;
    require(
        lb.noise_floor.is_finite(),
        "link_budget.noise_floor_dbm",
        "must be finite",
    )?;
    require(
        lb.min_distance.is_finite() && lb.min_distance > 0.0,
        "link_budget.min_distance_m",
        "must be positive",
    )?;
    check_field("ue", raw.ue.validate())?;
    let pv = raw.pair_validation;
    require(
        pv.boresight_tolerance.is_finite() && pv.boresight_tolerance >= 0.0,
        "pair_validation.boresight_tolerance_deg",
        "must be non-negative",
    )?;
    require(
        pv.adjacency_factor.is_finite() && pv.adjacency_factor > 0.0,
        "pair_validation.adjacency_factor",
        "must be positive",
    )?;

    let (mut network, layout) = build_network(&raw)?;
    let h = raw.predefined_height_m;
    require(h.is_finite(), "predefined_height_m", "must be finite")?;
    if h <= network.max_antenna_height() {
        return Err(ScenarioError::semantic(
            "predefined_height_m",
            format!("must be above the highest antenna ({} m)", network.max_antenna_height()),
        ));
    }
    network.predefined_height = h;

    check_groups(&network, &raw.groups, &pv, strictness)?;
    network.groups = raw.groups;

    let policy = resolve_policy(&network, &raw.policy, "policy")?;

    let mut grids = Vec::with_capacity(raw.grids.len());
    for (i, g) in raw.grids.iter().enumerate() {
        let path = format!("grids[{i}]");
        require(
            g.height_m.is_finite() && g.height_m >= 0.0,
            format!("{path}.height_m"),
            "must be non-negative",
        )?;
        require(
            g.resolution_m.is_finite() && g.resolution_m > 0.0,
            format!("{path}.resolution_m"),
            "must be positive",
        )?;
        let b = g.bounds;
        require(
            [b.x_min_m, b.x_max_m, b.y_min_m, b.y_max_m]
                .iter()
                .all(|v| v.is_finite())
                && b.x_min_m <= b.x_max_m
                && b.y_min_m <= b.y_max_m,
            format!("{path}.bounds"),
            "must be finite with min <= max",
        )?;
        let filter: GridFilter = g
            .filter
            .parse()
            .map_err(|m: String| ScenarioError::semantic(format!("{path}.filter"), m))?;
        match &filter {
            GridFilter::None => {}
            GridFilter::Group(id) => {
                let group = network
                    .group(id)
                    .map_err(|e| ScenarioError::semantic(format!("{path}.filter"), e.to_string()))?;
                if group.pairs.is_empty() {
                    return Err(ScenarioError::semantic(
                        format!("{path}.filter"),
                        format!("group `{id}` has no pairs"),
                    ));
                }
            }
            GridFilter::Cells(ids) => {
                for id in ids {
                    network
                        .cell(*id)
                        .map_err(|e| ScenarioError::semantic(format!("{path}.filter"), e.to_string()))?;
                }
            }
        }
        grids.push(GridRequest {
            height: g.height_m,
            bounds: b,
            resolution: g.resolution_m,
            filter,
        });
    }

    let mut flights = Vec::with_capacity(raw.flights.len());
    for (i, f) in raw.flights.iter().enumerate() {
        let path = format!("flights[{i}]");
        f.trajectory
            .validate()
            .map_err(|e| ScenarioError::semantic(format!("{path}.trajectory"), e.to_string()))?;
        let policy = match &f.policy {
            Some(p) => Some(resolve_policy(&network, p, &format!("{path}.policy"))?),
            None => None,
        };
        if let Some(id) = f.initial_cell {
            network
                .cell(id)
                .map_err(|e| ScenarioError::semantic(format!("{path}.initial_cell"), e.to_string()))?;
        }
        flights.push(FlightRequest {
            trajectory: f.trajectory.clone(),
            policy,
            initial_cell: f.initial_cell,
        });
    }

    Ok(Scenario {
        network,
        layout,
        antenna: raw.antenna,
        pair_validation: pv,
        ue: raw.ue,
        policy,
        grids,
        flights,
    })
}

fn resolve_policy(network: &Network, text: &str, path: &str) -> std::result::Result<HandoverPolicy, ScenarioError> {
    let policy = parse_policy(text, network.predefined_height).map_err(|m| ScenarioError::semantic(path, m))?;
    if policy.kind == PolicyKind::Bcs {
        let group = policy
            .group(network)
            .map_err(|e| ScenarioError::semantic(path, e.to_string()))?;
        if group.is_some_and(|g| g.pairs.is_empty()) {
            return Err(ScenarioError::semantic(
                path,
                "the bcs policy needs a group with at least one pair",
            ));
        }
    }
    Ok(policy)
}

fn build_network(raw: &RawScenario) -> std::result::Result<(Network, NetworkLayout), ScenarioError> {
    let n = &raw.network;
    match (&n.standard, &n.cells) {
        (Some(_), Some(_)) => Err(ScenarioError::semantic(
            "network",
            "give either `standard` or `cells`, not both",
        )),
        (None, None) => Err(ScenarioError::semantic("network", "needs `standard` or `cells`")),
        (Some(std), None) => {
            if n.isd_m.is_some() {
                return Err(ScenarioError::semantic(
                    "network.isd_m",
                    "only used with explicit cells; put it under `standard`",
                ));
            }
            require(
                std.antenna_height_m.is_finite() && std.antenna_height_m >= 0.0,
                "network.standard.antenna_height_m",
                "must be non-negative",
            )?;
            require(
                std.isd_m.is_finite() && std.isd_m > 0.0,
                "network.standard.isd_m",
                "must be positive",
            )?;
            require(
                std.rings <= 20,
                "network.standard.rings",
                "at most 20 rings are supported",
            )?;
            let net = build_standard_network(
                std.rings,
                std.isd_m,
                std.antenna_height_m,
                &raw.antenna,
                raw.link_budget,
            )
            .map_err(|e| ScenarioError::semantic("network.standard", e.to_string()))?;
            let layout = NetworkLayout::Standard {
                rings: std.rings,
                isd: std.isd_m,
                antenna_height: std.antenna_height_m,
            };
            Ok((net, layout))
        }
        (None, Some(raw_cells)) => {
            let isd = n.isd_m.unwrap_or(DEFAULT_EXPLICIT_ISD_M);
            require(isd.is_finite() && isd > 0.0, "network.isd_m", "must be positive")?;
            require(!raw_cells.is_empty(), "network.cells", "needs at least one cell")?;
            let mut seen = BTreeSet::new();
            let mut cells = Vec::with_capacity(raw_cells.len());
            for (i, c) in raw_cells.iter().enumerate() {
                let path = format!("network.cells[{i}]");
                if !seen.insert(c.id) {
                    return Err(ScenarioError::semantic(
                        format!("{path}.id"),
                        format!("duplicate cell id {}", c.id),
                    ));
                }
                let [x, y, z] = c.position_m;
                require(
                    x.is_finite() && y.is_finite() && z.is_finite() && z >= 0.0,
                    format!("{path}.position_m"),
                    "must be finite with a non-negative height",
                )?;
                require(
                    c.boresight_azimuth_deg.is_finite(),
                    format!("{path}.boresight_azimuth_deg"),
                    "must be finite",
                )?;
                if let Some(p) = c.tx_power_dbm {
                    require(p.is_finite(), format!("{path}.tx_power_dbm"), "must be finite")?;
                }
                if let Some(a) = &c.antenna {
                    check_field(&format!("{path}.antenna"), a.validate())?;
                }
                cells.push(Cell {
                    id: c.id,
                    site_id: c.site_id,
                    position: Point3::new(x, y, z),
                    boresight_azimuth: c.boresight_azimuth_deg,
                    antenna: c.antenna.clone().unwrap_or_else(|| raw.antenna.clone()),
                    tx_power: c.tx_power_dbm.unwrap_or(raw.link_budget.tx_power),
                    role: c.role.unwrap_or(CellRole::Conventional),
                });
            }
            let net = Network {
                cells,
                groups: Vec::new(),
                isd,
                predefined_height: DEFAULT_PREDEFINED_HEIGHT_M,
                link_budget: raw.link_budget,
            };
            Ok((net, NetworkLayout::Explicit))
        }
    }
}

fn check_groups(
    network: &Network,
    groups: &[AerialCoverageGroup],
    pv: &PairValidationConfig,
    strictness: Strictness,
) -> std::result::Result<(), ScenarioError> {
    let mut ids = BTreeSet::new();
    for (g, group) in groups.iter().enumerate() {
        let gpath = format!("groups[{g}]");
        require(
            !group.group_id.is_empty(),
            format!("{gpath}.group_id"),
            "must not be empty",
        )?;
        if !ids.insert(group.group_id.as_str()) {
            return Err(ScenarioError::semantic(
                format!("{gpath}.group_id"),
                format!("duplicate group id `{}`", group.group_id),
            ));
        }
        for (p, pair) in group.pairs.iter().enumerate() {
            let ppath = format!("{gpath}.pairs[{p}]");
            for (key, id) in [
                ("aerial_coverage_cell", pair.aerial_coverage_cell),
                ("mainlobe_indication_cell", pair.mainlobe_indication_cell),
            ] {
                if network.cell(id).is_err() {
                    return Err(ScenarioError::semantic(
                        format!("{ppath}.{key}"),
                        format!("unknown cell {id}"),
                    ));
                }
            }
            if pair.aerial_coverage_cell == pair.mainlobe_indication_cell {
                return Err(ScenarioError::semantic(
                    format!("{ppath}.mainlobe_indication_cell"),
                    "a cell-pair needs two different cells",
                ));
            }
        }
        if let Some((p, msg)) = network.check_group(group).errors.into_iter().next() {
            return Err(ScenarioError::semantic(format!("{gpath}.pairs[{p}]"), msg));
        }
        if strictness == Strictness::Strict {
            for (p, pair) in group.pairs.iter().enumerate() {
                let violations = pair_layout_violations(network, pair, pv)
                    .map_err(|e| ScenarioError::semantic(format!("{gpath}.pairs[{p}]"), e.to_string()))?;
                if let Some(v) = violations.first() {
                    return Err(ScenarioError::semantic(
                        format!("{gpath}.pairs[{p}]"),
                        format!("cell-pair rule broken: {v}"),
                    ));
                }
            }
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Serialization

/// Canonical bytes of a scenario: sorted keys, default values left out,
/// floats rounded to nine significant digits, two-space indentation and a
/// trailing newline.
pub fn serialize_scenario(s: &Scenario) -> Vec<u8> {
    let raw = to_raw(s);
    let mut value = serde_json::to_value(&raw).expect("scenario values are always representable");
    let defaults = serde_json::json!({
        "antenna": AntennaConfig::default(),
        "link_budget": LinkBudgetConfig::default(),
        "predefined_height_m": DEFAULT_PREDEFINED_HEIGHT_M,
        "groups": [],
        "pair_validation": PairValidationConfig::default(),
        "ue": UeConfig::default(),
        "policy": "baseline",
        "grids": [],
        "flights": [],
    });
    prune_defaults(&mut value, &defaults);
    let grid_defaults = serde_json::json!({
        "bounds": GridBounds::default(),
        "resolution_m": DEFAULT_GRID_RESOLUTION_M,
        "filter": "none",
    });
    let antenna_defaults = serde_json::to_value(AntennaConfig::default()).expect("plain struct");
    let trajectory_defaults = serde_json::json!({ "sample_interval_s": 0.01 });
    if let Some(grids) = value.get_mut("grids").and_then(Value::as_array_mut) {
        grids.iter_mut().for_each(|g| prune_defaults(g, &grid_defaults));
    }
    if let Some(flights) = value.get_mut("flights").and_then(Value::as_array_mut) {
        for f in flights {
            if let Some(t) = f.get_mut("trajectory") {
                prune_defaults(t, &trajectory_defaults);
            }
        }
    }
    if let Some(cells) = value.pointer_mut("/network/cells").and_then(Value::as_array_mut) {
        for c in cells {
            if let Some(a) = c.get_mut("antenna") {
                prune_defaults(a, &antenna_defaults);
            }
        }
    }
    round_numbers(&mut value);
    let mut out = serde_json::to_vec_pretty(&value).expect("json values always serialize");
    out.push(b'\n');
    out
}

fn to_raw(s: &Scenario) -> RawScenario {
    let net = &s.network;
    let network = match s.layout {
        NetworkLayout::Standard {
            rings,
            isd,
            antenna_height,
        } => RawNetwork {
            standard: Some(RawStandard {
                rings,
                isd_m: isd,
                antenna_height_m: antenna_height,
            }),
            isd_m: None,
            cells: None,
        },
        NetworkLayout::Explicit => RawNetwork {
            standard: None,
            isd_m: (net.isd != DEFAULT_EXPLICIT_ISD_M).then_some(net.isd),
            cells: Some(
                net.cells
                    .iter()
                    .map(|c| RawCell {
                        id: c.id,
                        site_id: c.site_id,
                        position_m: [c.position.x, c.position.y, c.position.z],
                        boresight_azimuth_deg: c.boresight_azimuth,
                        tx_power_dbm: (c.tx_power != net.link_budget.tx_power).then_some(c.tx_power),
                        role: (c.role != CellRole::Conventional).then_some(c.role),
                        antenna: (c.antenna != s.antenna).then(|| c.antenna.clone()),
                    })
                    .collect(),
            ),
        },
    };
    RawScenario {
        network,
        antenna: s.antenna.clone(),
        link_budget: net.link_budget,
        predefined_height_m: net.predefined_height,
        groups: net.groups.clone(),
        pair_validation: s.pair_validation,
        ue: s.ue,
        policy: s.policy.to_string(),
        grids: s
            .grids
            .iter()
            .map(|g| RawGrid {
                height_m: g.height,
                bounds: g.bounds,
                resolution_m: g.resolution,
                filter: g.filter.to_string(),
            })
            .collect(),
        flights: s
            .flights
            .iter()
            .map(|f| RawFlight {
                trajectory: f.trajectory.clone(),
                policy: f.policy.as_ref().map(|p| p.to_string()),
                initial_cell: f.initial_cell,
            })
            .collect(),
    }
}

/// Removes keys whose value equals the default. Nested objects are pruned
/// key by key and dropped once empty.
fn prune_defaults(value: &mut Value, defaults: &Value) {
    let (Some(obj), Some(defs)) = (value.as_object_mut(), defaults.as_object()) else {
        return;
    };
    let keys: Vec<String> = obj.keys().cloned().collect();
    for key in keys {
        let Some(def) = defs.get(&key) else { continue };
        let v = obj.get_mut(&key).expect("key listed above");
        if numbers_equal(v, def) || v == def {
            obj.remove(&key);
        } else if v.is_object() && def.is_object() {
            prune_defaults(v, def);
            if v.as_object().is_some_and(Map::is_empty) {
                obj.remove(&key);
            }
        }
    }
}

fn numbers_equal(a: &Value, b: &Value) -> bool {
    match (a.as_f64(), b.as_f64()) {
        (Some(x), Some(y)) => a.is_number() && b.is_number() && x == y,
        _ => false,
    }
}

fn round_numbers(value: &mut Value) {
    match value {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("checked f64");
            let rounded = round_significant(x);
            if let Some(num) = serde_json::Number::from_f64(rounded) {
                *n = num;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_numbers),
        Value::Object(map) => map.values_mut().for_each(round_numbers),
        _ => {}
    }
}

fn round_significant(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x).parse().unwrap_or(x)
}
