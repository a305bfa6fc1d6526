//! Sector antenna radiation patterns.
//!
//! Two backends share one [`AntennaConfig`]. The array model multiplies a
//! parabolic-in-dB sector element by a uniform vertical array factor, which
//! produces the upward sidelobes seen by aircraft. The cone model replaces
//! the pattern with hard-edged circular cones so that footprints can be
//! reasoned about exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angle_difference, unit_vector};

/// Gain reported outside every cone of the cone model.
pub const NO_LOBE_GAIN_DBI: f64 = -300.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AntennaModel {
    Cone,
    Array,
}

/// An upward sidelobe of the cone model, pointing along the boresight
/// azimuth at `elevation` degrees above the electrical boresight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SidelobeCone {
    #[serde(rename = "elevation_deg")]
    pub elevation: f64,
    #[serde(rename = "apex_angle_deg")]
    pub apex_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AntennaConfig {
    pub model: AntennaModel,
    #[serde(rename = "element_hpbw_az_deg")]
    pub element_hpbw_az: f64,
    #[serde(rename = "element_hpbw_el_deg")]
    pub element_hpbw_el: f64,
    #[serde(rename = "element_max_attenuation_db")]
    pub element_max_attenuation: f64,
    pub n_vertical_elements: u32,
    #[serde(rename = "element_spacing_wl")]
    pub element_spacing: f64,
    /// Positive values tilt the beam below the horizon.
    #[serde(rename = "electrical_tilt_deg")]
    pub electrical_tilt: f64,
    #[serde(rename = "max_gain_dbi")]
    pub max_gain: f64,
    #[serde(rename = "carrier_frequency_hz")]
    pub carrier_frequency: f64,
    /// Full apex angle of the cone model's mainlobe.
    #[serde(rename = "cone_apex_angle_deg")]
    pub cone_apex_angle: f64,
    pub sidelobes: Vec<SidelobeCone>,
    /// Gain of the cone model's sidelobes relative to `max_gain`.
    #[serde(rename = "sidelobe_offset_db")]
    pub sidelobe_offset: f64,
}

impl Default for AntennaConfig {
    fn default() -> Self {
        AntennaConfig {
            model: AntennaModel::Array,
            element_hpbw_az: 120.0,
            element_hpbw_el: 150.0,
            element_max_attenuation: 30.0,
            n_vertical_elements: 2,
            element_spacing: 1.0,
            electrical_tilt: 0.0,
            max_gain: 8.0,
            carrier_frequency: 3.5e9,
            cone_apex_angle: 30.0,
            sidelobes: vec![
                SidelobeCone {
                    elevation: 25.0,
                    apex_angle: 10.0,
                },
                SidelobeCone {
                    elevation: 50.0,
                    apex_angle: 10.0,
                },
            ],
            sidelobe_offset: -8.0,
        }
    }
}

impl AntennaConfig {
    /// The cone-model variant of the default configuration.
    pub fn cone() -> Self {
        AntennaConfig {
            model: AntennaModel::Cone,
            ..AntennaConfig::default()
        }
    }

    /// Checks every field invariant, naming the first offending field.
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let in_beam_range = |v: f64| v > 0.0 && v <= 180.0;
        let cone_angle = |v: f64| v > 0.0 && v < 180.0;
        if !in_beam_range(self.element_hpbw_az) {
            return Err(("element_hpbw_az_deg", "must be in (0, 180]".into()));
        }
        if !in_beam_range(self.element_hpbw_el) {
            return Err(("element_hpbw_el_deg", "must be in (0, 180]".into()));
        }
        if !(self.element_max_attenuation.is_finite() && self.element_max_attenuation >= 0.0) {
            return Err(("element_max_attenuation_db", "must be finite and non-negative".into()));
        }
        if self.n_vertical_elements < 1 {
            return Err(("n_vertical_elements", "must be at least 1".into()));
        }
        if !(self.element_spacing.is_finite() && self.element_spacing > 0.0) {
            return Err(("element_spacing_wl", "must be positive".into()));
        }
        if !(-90.0..=90.0).contains(&self.electrical_tilt) {
            return Err(("electrical_tilt_deg", "must be in [-90, 90]".into()));
        }
        if !self.max_gain.is_finite() {
            return Err(("max_gain_dbi", "must be finite".into()));
        }
        if !(self.carrier_frequency.is_finite() && self.carrier_frequency > 0.0) {
            return Err(("carrier_frequency_hz", "must be positive".into()));
        }
        if !cone_angle(self.cone_apex_angle) {
            return Err(("cone_apex_angle_deg", "must be in (0, 180)".into()));
        }
        for (i, s) in self.sidelobes.iter().enumerate() {
            if !cone_angle(s.apex_angle) {
                return Err(("sidelobes", format!("entry {i}: apex_angle_deg must be in (0, 180)")));
            }
            if !(-90.0..=90.0).contains(&(s.elevation - self.electrical_tilt)) {
                return Err(("sidelobes", format!("entry {i}: axis elevation leaves [-90, 90]")));
            }
        }
        if !self.sidelobe_offset.is_finite() {
            return Err(("sidelobe_offset_db", "must be finite".into()));
        }
        Ok(())
    }

    /// Elevation of the pattern peak (the electrical boresight).
    pub fn boresight_elevation(&self) -> f64 {
        -self.electrical_tilt
    }
}

/// Sector element response relative to its peak.
pub fn element_gain(azimuth_off: f64, elevation_off: f64, config: &AntennaConfig) -> f64 {
    let az = azimuth_off / config.element_hpbw_az;
    let el = elevation_off / config.element_hpbw_el;
    -(12.0 * az * az + 12.0 * el * el).min(config.element_max_attenuation)
}

/// Uniform vertical array response at `elevation` relative to its peak at
/// the steering elevation `steer`. Exact nulls are reported as -300 dB.
pub fn array_factor(elevation: f64, n: u32, spacing: f64, steer: f64) -> f64 {
    if n <= 1 {
        return 0.0;
    }
    let psi = std::f64::consts::TAU * spacing * (elevation.to_radians().sin() - steer.to_radians().sin());
    let den = (psi / 2.0).sin();
    let n = f64::from(n);
    let ratio = if den.abs() < 1e-12 {
        1.0
    } else {
        ((n * psi / 2.0).sin() / (n * den)).abs()
    };
    20.0 * ratio.max(1e-15).log10()
}

/// Absolute antenna gain toward a direction, given the cell's boresight
/// azimuth.
pub fn composite_gain(
    direction_azimuth: f64,
    direction_elevation: f64,
    cell_boresight_azimuth: f64,
    config: &AntennaConfig,
) -> f64 {
    let az_off = angle_difference(direction_azimuth, cell_boresight_azimuth);
    match config.model {
        AntennaModel::Array => {
            let el_off = direction_elevation - config.boresight_elevation();
            config.max_gain
                + element_gain(az_off, el_off, config)
                + array_factor(
                    direction_elevation,
                    config.n_vertical_elements,
                    config.element_spacing,
                    config.boresight_elevation(),
                )
        }
        AntennaModel::Cone => {
            let dir = unit_vector(direction_azimuth, direction_elevation);
            let within = |elevation: f64, apex_angle: f64| {
                let axis = unit_vector(cell_boresight_azimuth, elevation);
                let cos = dir[0] * axis[0] + dir[1] * axis[1] + dir[2] * axis[2];
                cos >= (apex_angle / 2.0).to_radians().cos()
            };
            if within(config.boresight_elevation(), config.cone_apex_angle) {
                config.max_gain
            } else if config
                .sidelobes
                .iter()
                .any(|s| within(s.elevation - config.electrical_tilt, s.apex_angle))
            {
                config.max_gain + config.sidelobe_offset
            } else {
                NO_LOBE_GAIN_DBI
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatternPlane {
    Azimuth,
    Elevation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSample {
    pub azimuth_off: f64,
    pub elevation_off: f64,
    pub gain: f64,
}

/// Samples the pattern in one principal plane through the electrical
/// boresight, at offsets `-span..=span` with the given step.
pub fn pattern_cut(config: &AntennaConfig, plane: PatternPlane, span: f64, step: f64) -> Vec<PatternSample> {
    let n = (span / step).round() as i64;
    (-n..=n)
        .map(|i| {
            let off = i as f64 * step;
            let (azimuth_off, elevation_off) = match plane {
                PatternPlane::Azimuth => (off, 0.0),
                PatternPlane::Elevation => (0.0, off),
            };
            PatternSample {
                azimuth_off,
                elevation_off,
                gain: composite_gain(azimuth_off, config.boresight_elevation() + elevation_off, 0.0, config),
            }
        })
        .collect()
}

const HPBW_STEP_DEG: f64 = 0.01;

/// Full -3 dB width of the pattern around its peak in one plane, scanned
/// at 0.01° with linear interpolation between samples.
pub fn measure_hpbw(config: &AntennaConfig, plane: PatternPlane) -> Result<f64> {
    let gain_at = |off: f64| match plane {
        PatternPlane::Azimuth => composite_gain(off, config.boresight_elevation(), 0.0, config),
        PatternPlane::Elevation => composite_gain(0.0, config.boresight_elevation() + off, 0.0, config),
    };
    let peak = gain_at(0.0);
    let level = peak - 3.0;
    let steps = (90.0 / HPBW_STEP_DEG).round() as i64;
    let edge = |sign: f64| -> Option<f64> {
        let mut prev = peak;
        for i in 1..=steps {
            let off = i as f64 * HPBW_STEP_DEG;
            let g = gain_at(sign * off);
            if g < level {
                let frac = (prev - level) / (prev - g);
                return Some(off - HPBW_STEP_DEG + frac * HPBW_STEP_DEG);
            }
            prev = g;
        }
        None
    };
    match (edge(1.0), edge(-1.0)) {
        (Some(right), Some(left)) => Ok(right + left),
        _ => Err(Error::Unmeasurable),
    }
}
