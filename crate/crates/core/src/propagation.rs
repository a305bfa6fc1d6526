//! Line-of-sight link budget: free-space path loss, path gain and RSS.

use serde::{Deserialize, Serialize};

use crate::antenna::composite_gain;
use crate::geometry::Point3;
use crate::network::Cell;

/// Free-space constant `20 log10(4π / c)` in dB, SI units.
const FRIIS_CONSTANT_DB: f64 = -147.55;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkBudgetConfig {
    /// Default transmit power for cells that do not set their own.
    #[serde(rename = "tx_power_dbm")]
    pub tx_power: f64,
    /// Weakest signal a UE can report.
    #[serde(rename = "noise_floor_dbm")]
    pub noise_floor: f64,
    #[serde(rename = "min_distance_m")]
    pub min_distance: f64,
}

impl Default for LinkBudgetConfig {
    fn default() -> Self {
        LinkBudgetConfig {
            tx_power: 44.0,
            noise_floor: -120.0,
            min_distance: 10.0,
        }
    }
}

/// Free-space path loss in dB, with the distance clamped to `min_distance`.
pub fn fspl(distance: f64, frequency: f64, min_distance: f64) -> f64 {
    20.0 * distance.max(min_distance).log10() + 20.0 * frequency.log10() + FRIIS_CONSTANT_DB
}

/// Antenna gain toward `point` minus the free-space loss to it.
pub fn path_gain(cell: &Cell, point: &Point3, link: &LinkBudgetConfig) -> f64 {
    let (azimuth, elevation) = cell.position.direction_to(point);
    let gain = composite_gain(azimuth, elevation, cell.boresight_azimuth, &cell.antenna);
    gain - fspl(
        cell.position.distance(point),
        cell.antenna.carrier_frequency,
        link.min_distance,
    )
}

/// Received signal strength in dBm. Values under the noise floor are
/// returned unchanged.
pub fn rss(cell: &Cell, point: &Point3, link: &LinkBudgetConfig) -> f64 {
    cell.tx_power + path_gain(cell, point, link)
}
