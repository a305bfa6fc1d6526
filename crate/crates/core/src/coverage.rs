//! Best-server maps on horizontal grids and their fragmentation.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::network::{AerialCoverageGroup, Cell, CellId, Network};
use crate::propagation::{path_gain, rss};

/// Inclusive rectangular extent of a grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridBounds {
    pub x_min_m: f64,
    pub x_max_m: f64,
    pub y_min_m: f64,
    pub y_max_m: f64,
}

impl GridBounds {
    /// Square of side `side` centered at the origin.
    pub fn centered(side: f64) -> Self {
        GridBounds {
            x_min_m: -side / 2.0,
            x_max_m: side / 2.0,
            y_min_m: -side / 2.0,
            y_max_m: side / 2.0,
        }
    }
}

impl Default for GridBounds {
    fn default() -> Self {
        GridBounds::centered(5000.0)
    }
}

/// Point lattice shared by every grid type. Points are row-major with `y`
/// as the outer index; both edges of the bounds are included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridShape {
    pub origin: [f64; 2],
    pub nx: usize,
    pub ny: usize,
    pub resolution: f64,
}

impl GridShape {
    pub fn new(bounds: &GridBounds, resolution: f64) -> Result<Self> {
        if !(resolution.is_finite() && resolution > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "grid resolution must be positive, got {resolution}"
            )));
        }
        let count = |lo: f64, hi: f64| {
            if hi < lo {
                0
            } else {
                ((hi - lo) / resolution + 1e-9).floor() as usize + 1
            }
        };
        Ok(GridShape {
            origin: [bounds.x_min_m, bounds.y_min_m],
            nx: count(bounds.x_min_m, bounds.x_max_m),
            ny: count(bounds.y_min_m, bounds.y_max_m),
            resolution,
        })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn x(&self, i: usize) -> f64 {
        self.origin[0] + i as f64 * self.resolution
    }

    pub fn y(&self, j: usize) -> f64 {
        self.origin[1] + j as f64 * self.resolution
    }

    /// Coordinates of the flat index `k`.
    pub fn xy(&self, k: usize) -> (f64, f64) {
        (self.x(k % self.nx), self.y(k / self.nx))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageGrid {
    pub height: f64,
    pub shape: GridShape,
    /// Serving cell per point, `None` where nothing is usable.
    pub best_cell: Vec<Option<CellId>>,
    /// Strongest considered RSS per point; `-inf` where no cell was
    /// considered at all.
    pub best_rss: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FragmentationReport {
    pub per_cell_components: BTreeMap<CellId, usize>,
    pub total_components: usize,
    pub covered_fraction: f64,
}

fn resolve_cells<'a>(network: &'a Network, ids: &BTreeSet<CellId>) -> Result<Vec<&'a Cell>> {
    ids.iter().map(|id| network.cell(*id)).collect()
}

fn sorted_cells(network: &Network) -> Vec<&Cell> {
    let mut cells: Vec<&Cell> = network.cells.iter().collect();
    cells.sort_by_key(|c| c.id);
    cells
}

/// Strongest-cell map at `height`. Ties go to the lowest cell id and points
/// where every considered cell is under the noise floor stay uncovered.
pub fn best_server_grid(
    network: &Network,
    height: f64,
    bounds: &GridBounds,
    resolution: f64,
    cell_filter: Option<&BTreeSet<CellId>>,
) -> Result<CoverageGrid> {
    let shape = GridShape::new(bounds, resolution)?;
    let cells = match cell_filter {
        Some(ids) if ids.is_empty() => {
            return Err(Error::InvalidParameter("cell filter is empty".into()));
        }
        Some(ids) => resolve_cells(network, ids)?,
        None if network.cells.is_empty() => {
            return Err(Error::InvalidParameter("network has no cells".into()));
        }
        None => sorted_cells(network),
    };
    let floor = network.link_budget.noise_floor;
    let link = &network.link_budget;
    let mut best_cell = Vec::with_capacity(shape.len());
    let mut best_rss = Vec::with_capacity(shape.len());
    for k in 0..shape.len() {
        let (x, y) = shape.xy(k);
        let p = Point3::new(x, y, height);
        let mut best: Option<(CellId, f64)> = None;
        for cell in &cells {
            let v = rss(cell, &p, link);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((cell.id, v));
            }
        }
        let (id, v) = best.expect("at least one cell considered");
        best_cell.push((v >= floor).then_some(id));
        best_rss.push(v);
    }
    Ok(CoverageGrid {
        height,
        shape,
        best_cell,
        best_rss,
    })
}

/// Map seen by a UAV whose handovers are restricted to `group`: a point is
/// served by the strongest aerial-coverage cell of the group whose own
/// signal and whose indication cell's signal both reach the noise floor.
pub fn bcs_filtered_grid(
    network: &Network,
    group: &AerialCoverageGroup,
    height: f64,
    bounds: &GridBounds,
    resolution: f64,
) -> Result<CoverageGrid> {
    if group.pairs.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "group `{}` has no pairs",
            group.group_id
        )));
    }
    if height < network.predefined_height {
        return Err(Error::InvalidParameter(format!(
            "height {height} m is below the predefined height {} m",
            network.predefined_height
        )));
    }
    let shape = GridShape::new(bounds, resolution)?;
    let mut pairs = Vec::with_capacity(group.pairs.len());
    for pair in &group.pairs {
        pairs.push((
            network.cell(pair.aerial_coverage_cell)?,
            network.cell(pair.mainlobe_indication_cell)?,
        ));
    }
    pairs.sort_by_key(|(aerial, _)| aerial.id);
    let floor = network.link_budget.noise_floor;
    let link = &network.link_budget;
    let mut best_cell = Vec::with_capacity(shape.len());
    let mut best_rss = Vec::with_capacity(shape.len());
    for k in 0..shape.len() {
        let (x, y) = shape.xy(k);
        let p = Point3::new(x, y, height);
        let mut best: Option<(CellId, f64)> = None;
        for (aerial, indication) in &pairs {
            let v = rss(aerial, &p, link);
            if v < floor || rss(indication, &p, link) < floor {
                continue;
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((aerial.id, v));
            }
        }
        best_cell.push(best.map(|(id, _)| id));
        best_rss.push(best.map_or(f64::NEG_INFINITY, |(_, v)| v));
    }
    Ok(CoverageGrid {
        height,
        shape,
        best_cell,
        best_rss,
    })
}

/// Counts 4-connected regions of equal serving cell. Uncovered points
/// belong to no region.
pub fn fragmentation(grid: &CoverageGrid) -> FragmentationReport {
    let shape = &grid.shape;
    let mut per_cell_components: BTreeMap<CellId, usize> = BTreeMap::new();
    let mut visited = vec![false; shape.len()];
    let mut stack = Vec::new();
    let mut covered = 0usize;
    for start in 0..shape.len() {
        let Some(cell) = grid.best_cell[start] else {
            continue;
        };
        covered += 1;
        if visited[start] {
            continue;
        }
        *per_cell_components.entry(cell).or_default() += 1;
        visited[start] = true;
        stack.push(start);
        while let Some(k) = stack.pop() {
            let (i, j) = (k % shape.nx, k / shape.nx);
            let mut visit = |n: usize| {
                if !visited[n] && grid.best_cell[n] == Some(cell) {
                    visited[n] = true;
                    stack.push(n);
                }
            };
            if i > 0 {
                visit(k - 1);
            }
            if i + 1 < shape.nx {
                visit(k + 1);
            }
            if j > 0 {
                visit(k - shape.nx);
            }
            if j + 1 < shape.ny {
                visit(k + shape.nx);
            }
        }
    }
    let total_components = per_cell_components.values().sum();
    FragmentationReport {
        per_cell_components,
        total_components,
        covered_fraction: if shape.is_empty() {
            0.0
        } else {
            covered as f64 / shape.len() as f64
        },
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathGainGrid {
    pub height: f64,
    pub shape: GridShape,
    pub cells: Vec<CellId>,
    pub path_gain: Vec<f64>,
}

/// Per-point maximum path gain over `cells`, every other cell being
/// treated as switched off.
pub fn path_gain_grid(
    network: &Network,
    cells: &BTreeSet<CellId>,
    height: f64,
    bounds: &GridBounds,
    resolution: f64,
) -> Result<PathGainGrid> {
    let shape = GridShape::new(bounds, resolution)?;
    let active = resolve_cells(network, cells)?;
    let values = (0..shape.len())
        .map(|k| {
            let (x, y) = shape.xy(k);
            let p = Point3::new(x, y, height);
            active
                .iter()
                .map(|c| path_gain(c, &p, &network.link_budget))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect();
    Ok(PathGainGrid {
        height,
        shape,
        cells: cells.iter().copied().collect(),
        path_gain: values,
    })
}

/// Whether `(x, y)` lies in the hexagon whose corners are the six
/// first-ring sites of a layout with inter-site distance `isd`.
pub fn in_central_hexagon(isd: f64, x: f64, y: f64) -> bool {
    let apothem = isd * 30f64.to_radians().cos();
    (0..6).all(|k| {
        let a = (30.0 + 60.0 * f64::from(k)).to_radians();
        x * a.cos() + y * a.sin() <= apothem + 1e-9
    })
}

/// Fraction of grid points satisfying `region` that are covered.
pub fn covered_fraction_in(grid: &CoverageGrid, region: impl Fn(f64, f64) -> bool) -> f64 {
    let (mut inside, mut covered) = (0usize, 0usize);
    for k in 0..grid.shape.len() {
        let (x, y) = grid.shape.xy(k);
        if region(x, y) {
            inside += 1;
            if grid.best_cell[k].is_some() {
                covered += 1;
            }
        }
    }
    if inside == 0 {
        0.0
    } else {
        covered as f64 / inside as f64
    }
}

/// Renders a coordinate or level with at most micrometer precision so that
/// accumulated float noise never reaches the output.
fn fmt_num(v: f64) -> String {
    let r = (v * 1e6).round() / 1e6;
    if r == 0.0 {
        "0".into()
    } else {
        format!("{r}")
    }
}

/// Writes `x_m,y_m,best_cell,rss_dbm` rows. `best_cell` is empty for
/// uncovered points and `rss_dbm` is empty where no cell was considered.
pub fn write_grid_csv<W: Write>(grid: &CoverageGrid, mut out: W) -> io::Result<()> {
    writeln!(out, "x_m,y_m,best_cell,rss_dbm")?;
    for k in 0..grid.shape.len() {
        let (x, y) = grid.shape.xy(k);
        let cell = grid.best_cell[k].map(|c| c.to_string()).unwrap_or_default();
        let v = grid.best_rss[k];
        let level = if v.is_finite() { fmt_num(v) } else { String::new() };
        writeln!(out, "{},{},{},{}", fmt_num(x), fmt_num(y), cell, level)?;
    }
    Ok(())
}

/// Metadata written next to a grid CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSidecar {
    pub height_m: f64,
    pub origin_x_m: f64,
    pub origin_y_m: f64,
    pub nx: usize,
    pub ny: usize,
    pub resolution_m: f64,
    pub noise_floor_dbm: f64,
    pub filter: String,
    pub covered_fraction: f64,
}

impl CoverageGrid {
    pub fn sidecar(&self, noise_floor: f64, filter: impl Into<String>) -> GridSidecar {
        let covered = self.best_cell.iter().filter(|c| c.is_some()).count();
        GridSidecar {
            height_m: self.height,
            origin_x_m: self.shape.origin[0],
            origin_y_m: self.shape.origin[1],
            nx: self.shape.nx,
            ny: self.shape.ny,
            resolution_m: self.shape.resolution,
            noise_floor_dbm: noise_floor,
            filter: filter.into(),
            covered_fraction: if self.shape.is_empty() {
                0.0
            } else {
                covered as f64 / self.shape.len() as f64
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::AntennaConfig;
    use crate::network::{build_standard_network, CellPair, CellRole};
    use crate::propagation::LinkBudgetConfig;

    fn one_cell(antenna: AntennaConfig) -> Network {
        Network {
            cells: vec![Cell {
                id: CellId(4),
                site_id: 0,
                position: Point3::new(0.0, 0.0, 75.0),
                boresight_azimuth: 0.0,
                antenna,
                tx_power: 44.0,
                role: CellRole::Conventional,
            }],
            groups: Vec::new(),
            isd: 500.0,
            predefined_height: 300.0,
            link_budget: LinkBudgetConfig::default(),
        }
    }

    fn grid_of(cells: &[Option<u32>], nx: usize) -> CoverageGrid {
        CoverageGrid {
            height: 0.0,
            shape: GridShape {
                origin: [0.0, 0.0],
                nx,
                ny: cells.len() / nx,
                resolution: 1.0,
            },
            best_cell: cells.iter().map(|c| c.map(CellId)).collect(),
            best_rss: vec![0.0; cells.len()],
        }
    }

    #[test]
    fn shape_is_inclusive() {
        let s = GridShape::new(&GridBounds::centered(5000.0), 10.0).unwrap();
        assert_eq!((s.nx, s.ny), (501, 501));
        assert_eq!(s.x(500), 2500.0);
        let empty = GridShape::new(
            &GridBounds {
                x_min_m: 1.0,
                x_max_m: 0.0,
                y_min_m: 0.0,
                y_max_m: 1.0,
            },
            1.0,
        )
        .unwrap();
        assert!(empty.is_empty());
        assert!(GridShape::new(&GridBounds::default(), 0.0).is_err());
    }

    #[test]
    fn single_cell_owns_every_covered_point() {
        let n = one_cell(AntennaConfig::default());
        let g = best_server_grid(&n, 300.0, &GridBounds::centered(2000.0), 100.0, None).unwrap();
        assert!(g.best_cell.iter().flatten().all(|c| *c == CellId(4)));
        assert!(g.best_cell.iter().any(|c| c.is_some()));
    }

    #[test]
    fn ties_go_to_lowest_id() {
        let mut n = one_cell(AntennaConfig::default());
        let mut twin = n.cells[0].clone();
        twin.id = CellId(2);
        n.cells.push(twin);
        let g = best_server_grid(&n, 100.0, &GridBounds::centered(1000.0), 50.0, None).unwrap();
        assert!(g.best_cell.iter().flatten().all(|c| *c == CellId(2)));
    }

    #[test]
    fn empty_filter_rejected() {
        let n = one_cell(AntennaConfig::default());
        assert!(matches!(
            best_server_grid(&n, 0.0, &GridBounds::default(), 10.0, Some(&BTreeSet::new())),
            Err(Error::InvalidParameter(_))
        ));
        let unknown = BTreeSet::from([CellId(99)]);
        assert_eq!(
            best_server_grid(&n, 0.0, &GridBounds::default(), 10.0, Some(&unknown)),
            Err(Error::UnknownCell(CellId(99)))
        );
    }

    #[test]
    fn fragmentation_examples() {
        let uniform = grid_of(&[Some(1); 12], 4);
        assert_eq!(fragmentation(&uniform).total_components, 1);
        let checker: Vec<Option<u32>> = (0..16).map(|k| Some(((k % 4 + k / 4) % 2) as u32)).collect();
        let report = fragmentation(&grid_of(&checker, 4));
        assert_eq!(report.total_components, 16);
        assert_eq!(report.per_cell_components[&CellId(0)], 8);
        let holes = grid_of(&[Some(1), None, Some(1), Some(1), None, Some(1)], 3);
        let report = fragmentation(&holes);
        assert_eq!(report.total_components, 2);
        assert!((report.covered_fraction - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn cone_path_gain_grid() {
        let n = one_cell(AntennaConfig::cone());
        let bounds = GridBounds {
            x_min_m: 0.0,
            x_max_m: 1500.0,
            y_min_m: 0.0,
            y_max_m: 0.0,
        };
        let g = path_gain_grid(&n, &BTreeSet::from([CellId(4)]), 300.0, &bounds, 100.0).unwrap();
        // beyond the minimum range the mainlobe is finite
        assert!(g.path_gain[10] > -150.0);
        // 300 m out sits between the sidelobe footprints
        assert!(g.path_gain[3] <= -300.0);
        let empty = GridBounds {
            x_max_m: -1.0,
            ..bounds
        };
        assert!(path_gain_grid(&n, &BTreeSet::from([CellId(4)]), 300.0, &empty, 100.0)
            .unwrap()
            .path_gain
            .is_empty());
    }

    #[test]
    fn filtered_grid_requires_indication_cell() {
        let mut n = one_cell(AntennaConfig::cone());
        let mut indication = n.cells[0].clone();
        indication.id = CellId(7);
        indication.site_id = 1;
        indication.position.x = 500.0;
        n.cells.push(indication);
        let group = AerialCoverageGroup {
            group_id: "g".into(),
            pairs: vec![CellPair {
                aerial_coverage_cell: CellId(4),
                mainlobe_indication_cell: CellId(7),
            }],
            qos_profile: serde_json::Value::Null,
        };
        let bounds = GridBounds {
            x_min_m: 0.0,
            x_max_m: 1500.0,
            y_min_m: 0.0,
            y_max_m: 0.0,
        };
        let g = bcs_filtered_grid(&n, &group, 300.0, &bounds, 50.0).unwrap();
        // 1400 m is in both mainlobes
        assert_eq!(g.best_cell[28], Some(CellId(4)));
        // 1200 m is in the aerial cell's mainlobe but falls in the gap
        // between the indication cell's upper sidelobe and its mainlobe
        assert_eq!(g.best_cell[24], None);
        assert!(bcs_filtered_grid(&n, &group, 200.0, &bounds, 50.0).is_err());
    }

    #[test]
    fn central_hexagon() {
        assert!(in_central_hexagon(500.0, 0.0, 0.0));
        assert!(in_central_hexagon(500.0, 499.0, 0.0));
        assert!(!in_central_hexagon(500.0, 0.0, 440.0));
        assert!(in_central_hexagon(500.0, 0.0, 432.0));
    }

    #[test]
    fn csv_layout() {
        let n = build_standard_network(0, 500.0, 75.0, &AntennaConfig::default(), LinkBudgetConfig::default()).unwrap();
        let bounds = GridBounds {
            x_min_m: 0.0,
            x_max_m: 10.0,
            y_min_m: 0.0,
            y_max_m: 10.0,
        };
        let g = best_server_grid(&n, 0.0, &bounds, 10.0, None).unwrap();
        let mut buf = Vec::new();
        write_grid_csv(&g, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x_m,y_m,best_cell,rss_dbm");
        assert_eq!(lines.len(), 5);
        assert!(lines[2].starts_with("10,0,"));
        assert!(lines[3].starts_with("0,10,"));
    }
}
