//! Hexagonal site layout and cone/plane geometry.
//!
//! Azimuths are in degrees, 0° = east, counterclockwise positive, and are
//! normalized to `[0, 360)`. Elevations are degrees above the horizontal
//! plane. All coordinates are flat-earth Cartesian meters.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::CellId;

/// Position in meters: `x` east, `y` north, `z` height above ground.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn distance(&self, other: &Point3) -> f64 {
        let (dx, dy, dz) = (other.x - self.x, other.y - self.y, other.z - self.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn horizontal_distance(&self, other: &Point3) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Azimuth (degrees, `[0, 360)`) and elevation (degrees) of `target`
    /// as seen from `self`. Coincident points give `(0, 0)`.
    pub fn direction_to(&self, target: &Point3) -> (f64, f64) {
        let (dx, dy, dz) = (target.x - self.x, target.y - self.y, target.z - self.z);
        let horizontal = dx.hypot(dy);
        let azimuth = normalize_azimuth(dy.atan2(dx).to_degrees());
        let elevation = dz.atan2(horizontal).to_degrees();
        (azimuth, elevation)
    }
}

/// Maps any angle in degrees onto `[0, 360)`.
pub fn normalize_azimuth(deg: f64) -> f64 {
    let a = deg.rem_euclid(360.0);
    if a >= 360.0 {
        0.0
    } else {
        a
    }
}

/// Signed circular difference `a - b` in degrees, in `[-180, 180)`.
pub fn angle_difference(a: f64, b: f64) -> f64 {
    (a - b + 180.0).rem_euclid(360.0) - 180.0
}

/// Unit vector for an (azimuth, elevation) pair in degrees.
pub fn unit_vector(azimuth_deg: f64, elevation_deg: f64) -> [f64; 3] {
    let (az, el) = (azimuth_deg.to_radians(), elevation_deg.to_radians());
    [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Site positions of a hexagonal grid with `rings` rings around a center
/// site at the origin.
///
/// Sites are ordered ring by ring. Within ring `r` the walk starts at the
/// corner `(r * isd, 0)` and proceeds counterclockwise.
pub fn hex_layout(rings: u32, isd: f64) -> Result<Vec<Point3>> {
    if !(isd.is_finite() && isd > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "inter-site distance must be positive, got {isd}"
        )));
    }
    let mut sites = vec![Point3::default()];
    for ring in 1..=rings {
        let r = f64::from(ring);
        let corner = |k: u32| {
            let a = (60.0 * f64::from(k % 6)).to_radians();
            (r * isd * a.cos(), r * isd * a.sin())
        };
        for k in 0..6 {
            let (ax, ay) = corner(k);
            let (bx, by) = corner(k + 1);
            for j in 0..ring {
                let t = f64::from(j) / r;
                sites.push(Point3::new(ax + (bx - ax) * t, ay + (by - ay) * t, 0.0));
            }
        }
    }
    Ok(sites)
}

/// Minimum horizontal range at `target_height` from which a UAV sees the
/// mainlobe of an untilted antenna mounted at `antenna_height`.
pub fn bcs_min_range(antenna_height: f64, target_height: f64, apex_full_angle: f64) -> Result<f64> {
    if !(apex_full_angle > 0.0 && apex_full_angle < 180.0) {
        return Err(Error::InvalidParameter(format!(
            "apex angle must be in (0, 180), got {apex_full_angle}"
        )));
    }
    if target_height < antenna_height {
        return Err(Error::BelowCone {
            antenna_height,
            target_height,
        });
    }
    Ok((target_height - antenna_height) / (apex_full_angle / 2.0).to_radians().tan())
}

/// A circular lobe cone. Only the nappe opening along the axis direction
/// belongs to the lobe; the boundary counts as inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LobeCone {
    pub apex: Point3,
    pub axis_azimuth: f64,
    pub axis_elevation: f64,
    pub apex_full_angle: f64,
}

impl LobeCone {
    pub fn new(apex: Point3, axis_azimuth: f64, axis_elevation: f64, apex_full_angle: f64) -> Result<Self> {
        if !(apex_full_angle > 0.0 && apex_full_angle < 180.0) {
            return Err(Error::InvalidParameter(format!(
                "cone apex angle must be in (0, 180), got {apex_full_angle}"
            )));
        }
        if !(-90.0..=90.0).contains(&axis_elevation) {
            return Err(Error::InvalidParameter(format!(
                "cone axis elevation must be in [-90, 90], got {axis_elevation}"
            )));
        }
        if !(axis_azimuth.is_finite() && apex.x.is_finite() && apex.y.is_finite() && apex.z.is_finite()) {
            return Err(Error::InvalidParameter("cone geometry must be finite".into()));
        }
        Ok(LobeCone {
            apex,
            axis_azimuth: normalize_azimuth(axis_azimuth),
            axis_elevation,
            apex_full_angle,
        })
    }

    pub fn axis(&self) -> [f64; 3] {
        unit_vector(self.axis_azimuth, self.axis_elevation)
    }

    pub fn half_angle_rad(&self) -> f64 {
        (self.apex_full_angle / 2.0).to_radians()
    }

    /// Half-angle test: the angle between `p - apex` and the axis is at
    /// most half the apex angle.
    pub fn contains(&self, p: &Point3) -> bool {
        let q = [p.x - self.apex.x, p.y - self.apex.y, p.z - self.apex.z];
        let norm = dot(q, q).sqrt();
        if norm == 0.0 {
            return true;
        }
        dot(q, self.axis()) >= norm * self.half_angle_rad().cos()
    }

    /// Points `(x, y)` on the boundary of the lobe footprint in the plane
    /// `z = cut_height`, obtained by walking the cone generators. Generators
    /// that never reach the plane are skipped, so hyperbolic footprints only
    /// yield their near part.
    pub fn section_points(&self, cut_height: f64, samples: usize) -> Vec<(f64, f64)> {
        let w = cut_height - self.apex.z;
        if w == 0.0 {
            return vec![(self.apex.x, self.apex.y)];
        }
        let (alpha, beta, phi) = (
            self.half_angle_rad(),
            self.axis_elevation.to_radians(),
            self.axis_azimuth.to_radians(),
        );
        let a = self.axis();
        let e1 = [-beta.sin() * phi.cos(), -beta.sin() * phi.sin(), beta.cos()];
        let e2 = [-phi.sin(), phi.cos(), 0.0];
        let mut points = Vec::with_capacity(samples);
        for i in 0..samples {
            let psi = std::f64::consts::TAU * i as f64 / samples as f64;
            let g: Vec<f64> = (0..3)
                .map(|k| alpha.cos() * a[k] + alpha.sin() * (psi.cos() * e1[k] + psi.sin() * e2[k]))
                .collect();
            // the generator must head toward the plane and not be near-horizontal
            if g[2] * w.signum() <= 1e-6 {
                continue;
            }
            let t = w / g[2];
            points.push((self.apex.x + t * g[0], self.apex.y + t * g[1]));
        }
        points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConicKind {
    Ellipse,
    Parabola,
    Hyperbola,
    DegenerateEmpty,
    DegeneratePoint,
}

/// Intersection of a lobe cone with a horizontal plane.
///
/// `coefficients` are `(A, B, C, D, E, F)` of
/// `A u² + B uv + C v² + D u + E v + F = 0`, with `u = x - apex.x` and
/// `v = y - apex.y`. The quadratic describes the full double cone; `kind`
/// and `apex_range` describe the lobe's own nappe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConicSection {
    pub kind: ConicKind,
    /// Distance from the antenna's vertical axis to the nearest curve
    /// point; `None` when the lobe never reaches the plane.
    pub apex_range: Option<f64>,
    pub coefficients: [f64; 6],
    pub cut_height: f64,
    pub plane_origin: [f64; 2],
}

const ANGLE_EPS: f64 = 1e-12;

pub fn conic_section(cone: &LobeCone, cut_height: f64) -> ConicSection {
    let w = cut_height - cone.apex.z;
    let a = cone.axis();
    let c2 = cone.half_angle_rad().cos().powi(2);
    let coefficients = [
        a[0] * a[0] - c2,
        2.0 * a[0] * a[1],
        a[1] * a[1] - c2,
        2.0 * a[0] * a[2] * w,
        2.0 * a[1] * a[2] * w,
        (a[2] * a[2] - c2) * w * w,
    ];
    let alpha = cone.half_angle_rad();
    let beta = cone.axis_elevation.to_radians();
    let plane_origin = [cone.apex.x, cone.apex.y];

    let (kind, apex_range) = if w.abs() < 1e-9 {
        (ConicKind::DegeneratePoint, Some(0.0))
    } else {
        // Mirror a cut below the apex onto one above it.
        let beta = if w > 0.0 { beta } else { -beta };
        let (low, high) = (beta - alpha, beta + alpha);
        if high <= ANGLE_EPS {
            (ConicKind::DegenerateEmpty, None)
        } else {
            let kind = if low.abs() <= ANGLE_EPS {
                ConicKind::Parabola
            } else if low > 0.0 {
                ConicKind::Ellipse
            } else {
                ConicKind::Hyperbola
            };
            // The steepest generator lands closest to the antenna axis.
            let range = w.abs() * high.cos().abs() / high.sin();
            (kind, Some(range))
        }
    };

    ConicSection {
        kind,
        apex_range,
        coefficients,
        cut_height,
        plane_origin,
    }
}

impl ConicSection {
    /// Value of the implicit quadratic at absolute plane coordinates.
    pub fn evaluate(&self, x: f64, y: f64) -> f64 {
        let (u, v) = (x - self.plane_origin[0], y - self.plane_origin[1]);
        let [a, b, c, d, e, f] = self.coefficients;
        a * u * u + b * u * v + c * v * v + d * u + e * v + f
    }
}

/// Which lobe of a cell's antenna a cone stands for. Sidelobes are
/// numbered from 1 in configuration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LobeKind {
    Mainlobe,
    Sidelobe(u8),
}

impl fmt::Display for LobeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LobeKind::Mainlobe => write!(f, "mainlobe"),
            LobeKind::Sidelobe(i) => write!(f, "sidelobe-{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LobeId {
    pub cell: CellId,
    pub kind: LobeKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FootprintLobe {
    pub id: LobeId,
    pub cone: LobeCone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintInterval {
    pub start_range: f64,
    pub end_range: f64,
    pub label: BTreeSet<LobeId>,
}

/// Partition of a horizontal ray into maximal ranges covered by the same
/// set of lobes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FootprintIntervals {
    pub height: f64,
    pub origin: [f64; 2],
    pub azimuth_ray: f64,
    pub intervals: Vec<FootprintInterval>,
}

impl FootprintIntervals {
    /// The label covering range `r`, if `r` lies on the ray.
    pub fn label_at(&self, r: f64) -> Option<&BTreeSet<LobeId>> {
        self.intervals
            .iter()
            .find(|iv| r >= iv.start_range && r < iv.end_range)
            .map(|iv| &iv.label)
    }
}

/// Cone membership along the ray `origin + r * d` expressed as
/// `s(r) = s0 + s1 r >= 0` and `f(r) = fa r² + fb r + fc >= 0`.
struct RayCone {
    s0: f64,
    s1: f64,
    fa: f64,
    fb: f64,
    fc: f64,
}

impl RayCone {
    fn new(cone: &LobeCone, origin: [f64; 3], dir: [f64; 3]) -> Self {
        let q0 = [
            origin[0] - cone.apex.x,
            origin[1] - cone.apex.y,
            origin[2] - cone.apex.z,
        ];
        let a = cone.axis();
        let c2 = cone.half_angle_rad().cos().powi(2);
        let (s0, s1) = (dot(q0, a), dot(dir, a));
        let (qq, qd) = (dot(q0, q0), dot(q0, dir));
        RayCone {
            s0,
            s1,
            fa: s1 * s1 - c2,
            fb: 2.0 * (s0 * s1 - c2 * qd),
            fc: s0 * s0 - c2 * qq,
        }
    }

    fn contains(&self, r: f64) -> bool {
        self.s0 + self.s1 * r >= 0.0 && (self.fa * r + self.fb) * r + self.fc >= 0.0
    }

    fn breakpoints(&self, out: &mut Vec<f64>) {
        out.extend(quadratic_roots(self.fa, self.fb, self.fc));
        if self.s1 != 0.0 {
            out.push(-self.s0 / self.s1);
        }
    }
}

/// Real roots of `a x² + b x + c`, using the cancellation-free form.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<f64> {
    let scale = a.abs().max(b.abs()).max(c.abs());
    if scale == 0.0 {
        return Vec::new();
    }
    if a.abs() <= 1e-15 * scale {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum().max(0.0).mul_add(2.0, -1.0) * disc.sqrt());
    let mut roots = vec![q / a];
    if q != 0.0 {
        roots.push(c / q);
    }
    roots
}

/// Splits the ray from `origin` along `azimuth_ray` at `height` into
/// maximal intervals labeled with the lobes covering them. Breakpoints are
/// the exact roots of each cone's quadratic along the ray.
pub fn footprint_intervals(
    lobes: &[FootprintLobe],
    height: f64,
    origin: [f64; 2],
    azimuth_ray: f64,
    max_range: f64,
) -> Result<FootprintIntervals> {
    if !(max_range.is_finite() && max_range > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "max_range must be positive, got {max_range}"
        )));
    }
    let dir = unit_vector(azimuth_ray, 0.0);
    let start = [origin[0], origin[1], height];
    let rays: Vec<RayCone> = lobes.iter().map(|l| RayCone::new(&l.cone, start, dir)).collect();

    let mut cuts = vec![0.0, max_range];
    for ray in &rays {
        ray.breakpoints(&mut cuts);
    }
    cuts.retain(|r| r.is_finite() && *r >= 0.0 && *r <= max_range);
    cuts.sort_by(|a, b| a.total_cmp(b));
    cuts.dedup_by(|a, b| (*a - *b).abs() <= 1e-9);

    let mut intervals: Vec<FootprintInterval> = Vec::new();
    for pair in cuts.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if hi - lo <= 1e-9 {
            continue;
        }
        let mid = 0.5 * (lo + hi);
        let label: BTreeSet<LobeId> = lobes
            .iter()
            .zip(&rays)
            .filter(|(_, ray)| ray.contains(mid))
            .map(|(lobe, _)| lobe.id)
            .collect();
        match intervals.last_mut() {
            Some(last) if last.label == label => last.end_range = hi,
            _ => intervals.push(FootprintInterval {
                start_range: lo,
                end_range: hi,
                label,
            }),
        }
    }
    if let Some(first) = intervals.first_mut() {
        first.start_range = 0.0;
    }
    if let Some(last) = intervals.last_mut() {
        last.end_range = max_range;
    }

    Ok(FootprintIntervals {
        height,
        origin,
        azimuth_ray: normalize_azimuth(azimuth_ray),
        intervals,
    })
}
