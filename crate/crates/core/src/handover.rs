//! Measurement-report evaluation: the strongest-cell baseline and the BCS
//! filter with group restriction.
//!
//! Above the predefined height the BCS policy only hands a UAV over to an
//! aerial-coverage cell of its group, and only when that cell's
//! mainlobe-indication cell is audible in the same report. A sidelobe of
//! the aerial-coverage cell is heard without the indication cell, so
//! sidelobe-driven reports are ignored.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{AerialCoverageGroup, CellId, Network};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Baseline,
    Bcs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoverPolicy {
    pub kind: PolicyKind,
    /// Group whose aerial-coverage cells are the only targets above the
    /// predefined height. Required by the BCS policy.
    pub group_id: Option<String>,
    pub predefined_height: f64,
}

impl HandoverPolicy {
    pub fn baseline(predefined_height: f64) -> Self {
        HandoverPolicy {
            kind: PolicyKind::Baseline,
            group_id: None,
            predefined_height,
        }
    }

    pub fn bcs(group_id: impl Into<String>, predefined_height: f64) -> Self {
        HandoverPolicy {
            kind: PolicyKind::Bcs,
            group_id: Some(group_id.into()),
            predefined_height,
        }
    }

    /// The group the policy is bound to, or `None` for the baseline.
    pub fn group<'a>(&self, network: &'a Network) -> Result<Option<&'a AerialCoverageGroup>> {
        match (self.kind, &self.group_id) {
            (PolicyKind::Baseline, _) => Ok(None),
            (PolicyKind::Bcs, Some(id)) => network.group(id).map(Some),
            (PolicyKind::Bcs, None) => Err(Error::InvalidParameter("bcs policy needs a group".into())),
        }
    }
}

impl fmt::Display for HandoverPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.kind, &self.group_id) {
            (PolicyKind::Bcs, Some(g)) => write!(f, "bcs:{g}"),
            (PolicyKind::Bcs, None) => write!(f, "bcs"),
            (PolicyKind::Baseline, _) => write!(f, "baseline"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    A3,
    H1,
    H2,
    Periodic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub time: f64,
    pub ue_height: f64,
    pub above_threshold: bool,
    pub serving_cell: CellId,
    pub serving_rsrp: f64,
    /// Audible neighbors, strongest first, ties broken by lower id.
    pub neighbors: Vec<(CellId, f64)>,
    pub trigger: Trigger,
}

impl MeasurementReport {
    fn check(&self, network: &Network) -> Result<()> {
        network.cell(self.serving_cell)?;
        let floor = network.link_budget.noise_floor;
        for (i, (id, rsrp)) in self.neighbors.iter().enumerate() {
            network.cell(*id)?;
            if *id == self.serving_cell {
                return Err(Error::MalformedReport(format!(
                    "serving cell {id} listed as a neighbor"
                )));
            }
            if rsrp.is_nan() || *rsrp < floor {
                return Err(Error::MalformedReport(format!(
                    "neighbor {id} is below the noise floor"
                )));
            }
            if let Some((prev_id, prev)) = i.checked_sub(1).map(|j| self.neighbors[j]) {
                if prev < *rsrp || (prev == *rsrp && prev_id >= *id) {
                    return Err(Error::MalformedReport("neighbors are not sorted".into()));
                }
            }
        }
        Ok(())
    }

    /// Whether `id` is heard in the report, as a neighbor or as the
    /// serving cell.
    pub fn includes(&self, id: CellId, noise_floor: f64) -> bool {
        (id == self.serving_cell && self.serving_rsrp >= noise_floor) || self.neighbors.iter().any(|(n, _)| *n == id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecisionReason {
    BelowHeightPassthrough,
    BestNotAerialCoverageCell,
    IndicationCellMissing,
    NotInGroup,
    ServingIsBest,
}

impl fmt::Display for DecisionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DecisionReason::BelowHeightPassthrough => "below-height-passthrough",
            DecisionReason::BestNotAerialCoverageCell => "best-not-aerial-coverage-cell",
            DecisionReason::IndicationCellMissing => "indication-cell-missing",
            DecisionReason::NotInGroup => "not-in-group",
            DecisionReason::ServingIsBest => "serving-is-best",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Execute,
    Ignore,
}

/// `target` is set exactly for executions. Ignores always carry a reason;
/// executions carry one only when the BCS policy passes a low UE through.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandoverDecision {
    pub outcome: Outcome,
    pub target: Option<CellId>,
    pub reason: Option<DecisionReason>,
}

impl HandoverDecision {
    pub fn execute(target: CellId, reason: Option<DecisionReason>) -> Self {
        HandoverDecision {
            outcome: Outcome::Execute,
            target: Some(target),
            reason,
        }
    }

    pub fn ignore(reason: DecisionReason) -> Self {
        HandoverDecision {
            outcome: Outcome::Ignore,
            target: None,
            reason: Some(reason),
        }
    }
}

fn strongest_beats_serving(report: &MeasurementReport) -> Option<CellId> {
    report
        .neighbors
        .first()
        .filter(|(_, rsrp)| *rsrp > report.serving_rsrp)
        .map(|(id, _)| *id)
}

/// Why the BCS filter would refuse `candidate` as a target, if it would.
fn bcs_rejection(
    candidate: CellId,
    report: &MeasurementReport,
    network: &Network,
    group: &AerialCoverageGroup,
) -> Option<DecisionReason> {
    match group.indication_for(candidate) {
        Some(indication) if report.includes(indication, network.link_budget.noise_floor) => None,
        Some(_) => Some(DecisionReason::IndicationCellMissing),
        None if network.groups.iter().any(|g| g.is_aerial_cell(candidate)) => Some(DecisionReason::NotInGroup),
        None => Some(DecisionReason::BestNotAerialCoverageCell),
    }
}

pub fn evaluate_mr(report: &MeasurementReport, network: &Network, policy: &HandoverPolicy) -> Result<HandoverDecision> {
    report.check(network)?;
    let group = policy.group(network)?;
    let best = strongest_beats_serving(report);
    let Some(group) = group else {
        return Ok(match best {
            Some(b) => HandoverDecision::execute(b, None),
            None => HandoverDecision::ignore(DecisionReason::ServingIsBest),
        });
    };
    if !report.above_threshold {
        return Ok(match best {
            Some(b) => HandoverDecision::execute(b, Some(DecisionReason::BelowHeightPassthrough)),
            None => HandoverDecision::ignore(DecisionReason::ServingIsBest),
        });
    }
    let Some(b) = best else {
        return Ok(HandoverDecision::ignore(DecisionReason::ServingIsBest));
    };
    Ok(match bcs_rejection(b, report, network, group) {
        Some(reason) => HandoverDecision::ignore(reason),
        None => HandoverDecision::execute(b, None),
    })
}

/// Neighbors that would be executed if they were the strongest one,
/// strongest first. The baseline accepts every neighbor.
pub fn eligible_targets(report: &MeasurementReport, network: &Network, policy: &HandoverPolicy) -> Result<Vec<CellId>> {
    report.check(network)?;
    let neighbors = report.neighbors.iter().map(|(id, _)| *id);
    Ok(match policy.group(network)? {
        Some(group) if report.above_threshold => neighbors
            .filter(|id| bcs_rejection(*id, report, network, group).is_none())
            .collect(),
        _ => neighbors.collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::AntennaConfig;
    use crate::network::{build_standard_network, CellPair};
    use crate::propagation::LinkBudgetConfig;

    fn network() -> Network {
        let mut n =
            build_standard_network(1, 500.0, 75.0, &AntennaConfig::default(), LinkBudgetConfig::default()).unwrap();
        n.groups = vec![
            AerialCoverageGroup {
                group_id: "a".into(),
                pairs: vec![CellPair {
                    aerial_coverage_cell: CellId(5),
                    mainlobe_indication_cell: CellId(4),
                }],
                qos_profile: serde_json::Value::Null,
            },
            AerialCoverageGroup {
                group_id: "b".into(),
                pairs: vec![CellPair {
                    aerial_coverage_cell: CellId(8),
                    mainlobe_indication_cell: CellId(7),
                }],
                qos_profile: serde_json::Value::Null,
            },
        ];
        n
    }

    fn report(serving: u32, neighbors: &[(u32, f64)], above: bool) -> MeasurementReport {
        MeasurementReport {
            time: 0.0,
            ue_height: if above { 300.0 } else { 100.0 },
            above_threshold: above,
            serving_cell: CellId(serving),
            serving_rsrp: -90.0,
            neighbors: neighbors.iter().map(|&(id, r)| (CellId(id), r)).collect(),
            trigger: Trigger::A3,
        }
    }

    #[test]
    fn baseline_takes_strongest() {
        let n = network();
        let p = HandoverPolicy::baseline(300.0);
        let d = evaluate_mr(&report(2, &[(3, -80.0), (5, -85.0)], true), &n, &p).unwrap();
        assert_eq!(d, HandoverDecision::execute(CellId(3), None));
        let d = evaluate_mr(&report(2, &[(3, -95.0)], true), &n, &p).unwrap();
        assert_eq!(d, HandoverDecision::ignore(DecisionReason::ServingIsBest));
        let d = evaluate_mr(&report(2, &[], true), &n, &p).unwrap();
        assert_eq!(d, HandoverDecision::ignore(DecisionReason::ServingIsBest));
    }

    #[test]
    fn bcs_reasons() {
        let n = network();
        let p = HandoverPolicy::bcs("a", 300.0);
        let eval = |r: MeasurementReport| evaluate_mr(&r, &n, &p).unwrap();
        assert_eq!(
            eval(report(2, &[(3, -80.0), (4, -85.0)], true)),
            HandoverDecision::ignore(DecisionReason::BestNotAerialCoverageCell)
        );
        assert_eq!(
            eval(report(2, &[(5, -80.0), (3, -85.0)], true)),
            HandoverDecision::ignore(DecisionReason::IndicationCellMissing)
        );
        assert_eq!(
            eval(report(2, &[(5, -80.0), (4, -85.0)], true)),
            HandoverDecision::execute(CellId(5), None)
        );
        assert_eq!(
            eval(report(2, &[(8, -80.0), (7, -85.0)], true)),
            HandoverDecision::ignore(DecisionReason::NotInGroup)
        );
        // serving as indication cell counts as included
        assert_eq!(
            eval(report(4, &[(5, -80.0)], true)),
            HandoverDecision::execute(CellId(5), None)
        );
        assert_eq!(
            eval(report(2, &[(3, -80.0)], false)),
            HandoverDecision::execute(CellId(3), Some(DecisionReason::BelowHeightPassthrough))
        );
    }

    #[test]
    fn eligible_lists() {
        let n = network();
        let r = report(2, &[(3, -80.0), (5, -82.0), (4, -85.0), (8, -86.0)], true);
        assert_eq!(
            eligible_targets(&r, &n, &HandoverPolicy::bcs("a", 300.0)).unwrap(),
            vec![CellId(5)]
        );
        assert_eq!(
            eligible_targets(&r, &n, &HandoverPolicy::baseline(300.0)).unwrap(),
            vec![CellId(3), CellId(5), CellId(4), CellId(8)]
        );
        let conventional_only = report(2, &[(3, -80.0), (6, -82.0)], true);
        assert!(
            eligible_targets(&conventional_only, &n, &HandoverPolicy::bcs("a", 300.0))
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn malformed_reports() {
        let n = network();
        let p = HandoverPolicy::baseline(300.0);
        assert_eq!(
            evaluate_mr(&report(2, &[(99, -80.0)], true), &n, &p),
            Err(Error::UnknownCell(CellId(99)))
        );
        assert!(matches!(
            evaluate_mr(&report(2, &[(3, -85.0), (4, -80.0)], true), &n, &p),
            Err(Error::MalformedReport(_))
        ));
        assert!(matches!(
            evaluate_mr(&report(2, &[(2, -80.0)], true), &n, &p),
            Err(Error::MalformedReport(_))
        ));
        assert!(matches!(
            evaluate_mr(&report(2, &[(3, -130.0)], true), &n, &p),
            Err(Error::MalformedReport(_))
        ));
        assert_eq!(
            evaluate_mr(&report(2, &[], true), &n, &HandoverPolicy::bcs("zzz", 300.0)),
            Err(Error::UnknownGroup("zzz".into()))
        );
    }
}
