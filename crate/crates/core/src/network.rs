//! Cells, cell-pairs and aerial-coverage groups.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::antenna::AntennaConfig;
use crate::error::{Error, Result};
use crate::geometry::{
    angle_difference, footprint_intervals, hex_layout, FootprintLobe, LobeCone, LobeId, LobeKind, Point3,
};
use crate::propagation::LinkBudgetConfig;

/// Boresight azimuths of the three sectors of a standard site.
pub const SECTOR_AZIMUTHS: [f64; 3] = [90.0, 210.0, 330.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CellId(pub u32);

impl fmt::Display for CellId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellRole {
    AerialCoverage,
    MainlobeIndication,
    Conventional,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub id: CellId,
    pub site_id: u32,
    /// Antenna phase center; `z` is the antenna height.
    pub position: Point3,
    pub boresight_azimuth: f64,
    pub antenna: AntennaConfig,
    pub tx_power: f64,
    /// Standalone role; group membership may assign other roles.
    pub role: CellRole,
}

impl Cell {
    /// The cell's lobes as circular cones: the mainlobe with the configured
    /// cone angle followed by the configured sidelobes.
    pub fn lobe_cones(&self) -> Result<Vec<FootprintLobe>> {
        let a = &self.antenna;
        let mut lobes = vec![FootprintLobe {
            id: LobeId {
                cell: self.id,
                kind: LobeKind::Mainlobe,
            },
            cone: LobeCone::new(
                self.position,
                self.boresight_azimuth,
                a.boresight_elevation(),
                a.cone_apex_angle,
            )?,
        }];
        for (i, s) in a.sidelobes.iter().enumerate() {
            let index = u8::try_from(i + 1).map_err(|_| Error::InvalidParameter("too many sidelobes".into()))?;
            lobes.push(FootprintLobe {
                id: LobeId {
                    cell: self.id,
                    kind: LobeKind::Sidelobe(index),
                },
                cone: LobeCone::new(
                    self.position,
                    self.boresight_azimuth,
                    s.elevation - a.electrical_tilt,
                    s.apex_angle,
                )?,
            });
        }
        Ok(lobes)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellPair {
    pub aerial_coverage_cell: CellId,
    pub mainlobe_indication_cell: CellId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AerialCoverageGroup {
    pub group_id: String,
    pub pairs: Vec<CellPair>,
    /// Free-form service intent carried through untouched.
    #[serde(default, skip_serializing_if = "serde_json::Value::is_null")]
    pub qos_profile: serde_json::Value,
}

impl AerialCoverageGroup {
    pub fn aerial_cells(&self) -> BTreeSet<CellId> {
        self.pairs.iter().map(|p| p.aerial_coverage_cell).collect()
    }

    pub fn is_aerial_cell(&self, id: CellId) -> bool {
        self.pairs.iter().any(|p| p.aerial_coverage_cell == id)
    }

    /// Indication cell paired with `aerial` in this group.
    pub fn indication_for(&self, aerial: CellId) -> Option<CellId> {
        self.pairs
            .iter()
            .find(|p| p.aerial_coverage_cell == aerial)
            .map(|p| p.mainlobe_indication_cell)
    }

    pub fn role_of(&self, id: CellId) -> Option<CellRole> {
        self.pairs.iter().find_map(|p| {
            if p.aerial_coverage_cell == id {
                Some(CellRole::AerialCoverage)
            } else if p.mainlobe_indication_cell == id {
                Some(CellRole::MainlobeIndication)
            } else {
                None
            }
        })
    }
}

/// Structural problems and remarks about a group's membership.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GroupCheck {
    /// `(pair index, message)` for each rule violation.
    pub errors: Vec<(usize, String)>,
    pub notices: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub cells: Vec<Cell>,
    pub groups: Vec<AerialCoverageGroup>,
    pub isd: f64,
    /// Height above which the aerial handling path applies.
    pub predefined_height: f64,
    pub link_budget: LinkBudgetConfig,
}

impl Network {
    pub fn cell(&self, id: CellId) -> Result<&Cell> {
        self.cells.iter().find(|c| c.id == id).ok_or(Error::UnknownCell(id))
    }

    pub fn group(&self, group_id: &str) -> Result<&AerialCoverageGroup> {
        self.groups
            .iter()
            .find(|g| g.group_id == group_id)
            .ok_or_else(|| Error::UnknownGroup(group_id.to_string()))
    }

    pub fn site_count(&self) -> usize {
        self.cells.iter().map(|c| c.site_id).collect::<BTreeSet<_>>().len()
    }

    pub fn max_antenna_height(&self) -> f64 {
        self.cells
            .iter()
            .map(|c| c.position.z)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Membership rules of a group: every id resolves, an aerial cell is
    /// listed once, and no cell holds both roles. Indication cells shared
    /// by several pairs are allowed and reported as notices.
    pub fn check_group(&self, group: &AerialCoverageGroup) -> GroupCheck {
        let mut check = GroupCheck::default();
        let aerial = group.aerial_cells();
        let mut seen = BTreeSet::new();
        let mut indication_uses: BTreeMap<CellId, usize> = BTreeMap::new();
        for (i, pair) in group.pairs.iter().enumerate() {
            for id in [pair.aerial_coverage_cell, pair.mainlobe_indication_cell] {
                if self.cell(id).is_err() {
                    check.errors.push((i, format!("unknown cell {id}")));
                }
            }
            if !seen.insert(pair.aerial_coverage_cell) {
                check.errors.push((
                    i,
                    format!(
                        "aerial-coverage cell {} appears more than once",
                        pair.aerial_coverage_cell
                    ),
                ));
            }
            if aerial.contains(&pair.mainlobe_indication_cell) {
                check.errors.push((
                    i,
                    format!(
                        "cell {} is both an aerial-coverage cell and an indication cell",
                        pair.mainlobe_indication_cell
                    ),
                ));
            }
            *indication_uses.entry(pair.mainlobe_indication_cell).or_default() += 1;
        }
        for (id, uses) in indication_uses {
            if uses > 1 {
                check.notices.push(format!(
                    "indication cell {id} is shared by {uses} pairs in group `{}`",
                    group.group_id
                ));
            }
        }
        check
    }
}

/// The standard layout: `rings` of three-sector sites, cell `3 s + k` being
/// sector `k` of site `s`, all cells conventional.
pub fn build_standard_network(
    rings: u32,
    isd: f64,
    antenna_height: f64,
    antenna: &AntennaConfig,
    link_budget: LinkBudgetConfig,
) -> Result<Network> {
    if !(antenna_height.is_finite() && antenna_height >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "antenna height must be non-negative, got {antenna_height}"
        )));
    }
    let sites = hex_layout(rings, isd)?;
    let mut cells = Vec::with_capacity(sites.len() * 3);
    for (s, site) in sites.iter().enumerate() {
        for (k, az) in SECTOR_AZIMUTHS.iter().enumerate() {
            let site_id = s as u32;
            cells.push(Cell {
                id: CellId(3 * site_id + k as u32),
                site_id,
                position: Point3::new(site.x, site.y, antenna_height),
                boresight_azimuth: *az,
                antenna: antenna.clone(),
                tx_power: link_budget.tx_power,
                role: CellRole::Conventional,
            });
        }
    }
    Ok(Network {
        cells,
        groups: Vec::new(),
        isd,
        predefined_height: 300.0,
        link_budget,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PairValidationConfig {
    #[serde(rename = "boresight_tolerance_deg")]
    pub boresight_tolerance: f64,
    pub adjacency_factor: f64,
}

impl Default for PairValidationConfig {
    fn default() -> Self {
        PairValidationConfig {
            boresight_tolerance: 15.0,
            adjacency_factor: 1.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "kebab-case")]
pub enum PairViolation {
    SameSite { site_id: u32 },
    NotAdjacent { distance_m: f64, limit_m: f64 },
    BoresightMismatch { difference_deg: f64, tolerance_deg: f64 },
    MainlobesDisjoint { height_m: f64 },
    SidelobesOverlap { height_m: f64 },
}

impl fmt::Display for PairViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PairViolation::SameSite { site_id } => write!(f, "both cells are on site {site_id}"),
            PairViolation::NotAdjacent { distance_m, limit_m } => {
                write!(f, "sites are {distance_m:.1} m apart, limit {limit_m:.1} m")
            }
            PairViolation::BoresightMismatch {
                difference_deg,
                tolerance_deg,
            } => write!(
                f,
                "boresights differ by {difference_deg:.1} deg, tolerance {tolerance_deg:.1} deg"
            ),
            PairViolation::MainlobesDisjoint { height_m } => {
                write!(f, "mainlobe footprints do not overlap at {height_m} m")
            }
            PairViolation::SidelobesOverlap { height_m } => write!(f, "sidelobe footprints overlap at {height_m} m"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairReport {
    pub pair: CellPair,
    pub violations: Vec<PairViolation>,
}

impl PairReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

const PAIR_SCAN_STEP_DEG: f64 = 0.1;
const PAIR_SCAN_RANGE_M: f64 = 10_000.0;

/// The site, adjacency and boresight rules of a pair. These need no
/// footprint geometry and are cheap enough to run on every scenario load.
pub fn pair_layout_violations(
    network: &Network,
    pair: &CellPair,
    config: &PairValidationConfig,
) -> Result<Vec<PairViolation>> {
    let a = network.cell(pair.aerial_coverage_cell)?;
    let b = network.cell(pair.mainlobe_indication_cell)?;
    let mut violations = Vec::new();
    if a.site_id == b.site_id {
        violations.push(PairViolation::SameSite { site_id: a.site_id });
    } else {
        let distance = a.position.horizontal_distance(&b.position);
        let limit = config.adjacency_factor * network.isd;
        if distance > limit {
            violations.push(PairViolation::NotAdjacent {
                distance_m: distance,
                limit_m: limit,
            });
        }
    }
    let difference = angle_difference(a.boresight_azimuth, b.boresight_azimuth).abs();
    if difference > config.boresight_tolerance {
        violations.push(PairViolation::BoresightMismatch {
            difference_deg: difference,
            tolerance_deg: config.boresight_tolerance,
        });
    }
    Ok(violations)
}

/// Checks the layout rules of a pair, then scans the cone footprints of both
/// cells at the predefined height along rays from the midpoint of the two
/// sites: the mainlobes must meet somewhere and no sidelobe of one cell may
/// touch a sidelobe of the other.
pub fn validate_pair(network: &Network, pair: &CellPair, config: &PairValidationConfig) -> Result<PairReport> {
    let mut violations = pair_layout_violations(network, pair, config)?;
    let a = network.cell(pair.aerial_coverage_cell)?;
    let b = network.cell(pair.mainlobe_indication_cell)?;

    let height = network.predefined_height;
    let mut lobes = a.lobe_cones()?;
    lobes.extend(b.lobe_cones()?);
    let origin = [0.5 * (a.position.x + b.position.x), 0.5 * (a.position.y + b.position.y)];
    let is_main = |id: &LobeId, cell: CellId| id.cell == cell && id.kind == LobeKind::Mainlobe;
    let is_side = |id: &LobeId, cell: CellId| id.cell == cell && id.kind != LobeKind::Mainlobe;
    let (mut mainlobes_meet, mut sidelobes_touch) = (false, false);
    let rays = (360.0 / PAIR_SCAN_STEP_DEG).round() as u32;
    for i in 0..rays {
        let fp = footprint_intervals(
            &lobes,
            height,
            origin,
            f64::from(i) * PAIR_SCAN_STEP_DEG,
            PAIR_SCAN_RANGE_M,
        )?;
        for iv in &fp.intervals {
            let has = |pred: &dyn Fn(&LobeId) -> bool| iv.label.iter().any(pred);
            if has(&|l| is_main(l, a.id)) && has(&|l| is_main(l, b.id)) {
                mainlobes_meet = true;
            }
            if a.id != b.id && has(&|l| is_side(l, a.id)) && has(&|l| is_side(l, b.id)) {
                sidelobes_touch = true;
            }
        }
    }
    if !mainlobes_meet {
        violations.push(PairViolation::MainlobesDisjoint { height_m: height });
    }
    if sidelobes_touch {
        violations.push(PairViolation::SidelobesOverlap { height_m: height });
    }

    Ok(PairReport {
        pair: *pair,
        violations,
    })
}

/// Share of all cells that serve as aerial-coverage cells in `group`.
pub fn capacity_fraction(network: &Network, group: &AerialCoverageGroup) -> f64 {
    if network.cells.is_empty() {
        return 0.0;
    }
    group.aerial_cells().len() as f64 / network.cells.len() as f64
}
