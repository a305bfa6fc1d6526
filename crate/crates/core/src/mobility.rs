//! Fixed-step UAV flight simulation with A3 measurement reports, handover
//! execution, handover failure (HOF) and radio link failure (RLF).
//!
//! Each step samples the RSRP of every cell, then in order: height events,
//! completion or failure of a pending handover, reattachment of a detached
//! UE, the T310 timer, and finally A3 evaluation. A3 is suspended while a
//! handover is executing.

use std::collections::BTreeMap;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point3;
use crate::handover::{evaluate_mr, HandoverDecision, HandoverPolicy, MeasurementReport, Outcome, Trigger};
use crate::network::{CellId, Network};
use crate::propagation::rss;

const TIME_EPS: f64 = 1e-9;

mod waypoint_arrays {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    use crate::geometry::Point3;

    pub fn serialize<S: Serializer>(points: &[Point3], s: S) -> Result<S::Ok, S::Error> {
        let arrays: Vec<[f64; 3]> = points.iter().map(|p| [p.x, p.y, p.z]).collect();
        arrays.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Point3>, D::Error> {
        let arrays = Vec::<[f64; 3]>::deserialize(d)?;
        Ok(arrays.into_iter().map(|[x, y, z]| Point3::new(x, y, z)).collect())
    }
}

/// Piecewise-linear path flown at constant speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trajectory {
    #[serde(rename = "waypoints_m", with = "waypoint_arrays")]
    pub waypoints: Vec<Point3>,
    #[serde(rename = "speed_mps")]
    pub speed: f64,
    #[serde(rename = "sample_interval_s", default = "default_sample_interval")]
    pub sample_interval: f64,
}

fn default_sample_interval() -> f64 {
    0.01
}

impl Trajectory {
    pub fn validate(&self) -> Result<()> {
        if self.waypoints.len() < 2 {
            return Err(Error::InvalidParameter(
                "a trajectory needs at least two waypoints".into(),
            ));
        }
        if self
            .waypoints
            .iter()
            .any(|p| !(p.x.is_finite() && p.y.is_finite() && p.z >= 0.0))
        {
            return Err(Error::InvalidParameter("waypoints must be finite with z >= 0".into()));
        }
        if !(self.speed.is_finite() && self.speed > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "speed must be positive, got {}",
                self.speed
            )));
        }
        if !(self.sample_interval.is_finite() && self.sample_interval > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sample interval must be positive, got {}",
                self.sample_interval
            )));
        }
        Ok(())
    }

    pub fn length(&self) -> f64 {
        self.waypoints.windows(2).map(|w| w[0].distance(&w[1])).sum()
    }

    pub fn duration(&self) -> f64 {
        self.length() / self.speed
    }

    /// Position after flying for `t` seconds, held at the last waypoint
    /// once the path is complete.
    pub fn position_at(&self, t: f64) -> Point3 {
        let mut remaining = (t * self.speed).max(0.0);
        for w in self.waypoints.windows(2) {
            let len = w[0].distance(&w[1]);
            if remaining <= len && len > 0.0 {
                let f = remaining / len;
                return Point3::new(
                    w[0].x + f * (w[1].x - w[0].x),
                    w[0].y + f * (w[1].y - w[0].y),
                    w[0].z + f * (w[1].z - w[0].z),
                );
            }
            remaining -= len;
        }
        *self.waypoints.last().expect("validated trajectory")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct UeConfig {
    #[serde(rename = "a3_offset_db")]
    pub a3_offset: f64,
    #[serde(rename = "hysteresis_db")]
    pub hysteresis: f64,
    #[serde(rename = "time_to_trigger_s")]
    pub time_to_trigger: f64,
    /// Height for H1/H2; the network's predefined height when unset.
    #[serde(rename = "height_threshold_m", skip_serializing_if = "Option::is_none")]
    pub height_threshold: Option<f64>,
    #[serde(rename = "rsrp_qout_dbm")]
    pub rsrp_qout: f64,
    #[serde(rename = "t310_s")]
    pub t310: f64,
    #[serde(rename = "ho_execution_time_s")]
    pub ho_execution_time: f64,
    /// Minimum time before the same neighbor is reported again while it
    /// keeps satisfying the entering condition.
    #[serde(rename = "report_interval_s")]
    pub report_interval: f64,
}

impl Default for UeConfig {
    fn default() -> Self {
        UeConfig {
            a3_offset: 3.0,
            hysteresis: 1.0,
            time_to_trigger: 0.16,
            height_threshold: None,
            rsrp_qout: -110.0,
            t310: 1.0,
            ho_execution_time: 0.15,
            report_interval: 0.48,
        }
    }
}

impl UeConfig {
    pub fn validate(&self) -> std::result::Result<(), (&'static str, String)> {
        let durations = [
            ("time_to_trigger_s", self.time_to_trigger),
            ("t310_s", self.t310),
            ("ho_execution_time_s", self.ho_execution_time),
            ("report_interval_s", self.report_interval),
        ];
        for (key, v) in durations {
            if !(v.is_finite() && v >= 0.0) {
                return Err((key, "must be a non-negative duration".into()));
            }
        }
        if !(self.a3_offset.is_finite() && self.a3_offset >= 0.0) {
            return Err(("a3_offset_db", "must be non-negative".into()));
        }
        if !(self.hysteresis.is_finite() && self.hysteresis >= 0.0) {
            return Err(("hysteresis_db", "must be non-negative".into()));
        }
        if !self.rsrp_qout.is_finite() {
            return Err(("rsrp_qout_dbm", "must be finite".into()));
        }
        if let Some(h) = self.height_threshold {
            if !(h.is_finite() && h >= 0.0) {
                return Err(("height_threshold_m", "must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlightSample {
    pub time: f64,
    pub position: Point3,
    pub serving_cell: Option<CellId>,
    pub serving_rsrp: Option<f64>,
    /// Strongest audible cell other than the serving one.
    pub strongest_neighbor_rsrp: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    #[serde(rename = "MR")]
    Mr,
    #[serde(rename = "HO_DECISION")]
    HoDecision,
    #[serde(rename = "HO_COMPLETE")]
    HoComplete,
    #[serde(rename = "HOF")]
    Hof,
    #[serde(rename = "RLF")]
    Rlf,
    #[serde(rename = "REATTACH")]
    Reattach,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EventDetail {
    /// A measurement report and, for A3 reports, the policy's verdict.
    Report {
        report: MeasurementReport,
        #[serde(skip_serializing_if = "Option::is_none")]
        decision: Option<HandoverDecision>,
    },
    Handover {
        source: CellId,
        target: CellId,
    },
    Failure {
        serving: CellId,
        serving_rsrp_dbm: f64,
    },
    Attach {
        cell: CellId,
        initial: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        previous: Option<CellId>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightEvent {
    pub time: f64,
    pub kind: EventKind,
    pub detail: EventDetail,
}

/// One policy evaluation, as written to the decision log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecisionRecord {
    pub time: f64,
    pub serving: CellId,
    pub best: Option<CellId>,
    pub decision: HandoverDecision,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlightTrace {
    pub sample_interval: f64,
    pub rsrp_qout: f64,
    pub samples: Vec<FlightSample>,
    pub events: Vec<FlightEvent>,
    pub decisions: Vec<DecisionRecord>,
}

#[derive(Debug, Clone, Copy)]
struct PendingHandover {
    target: CellId,
    decided_at: f64,
    completes_at: f64,
}

struct Simulator<'a> {
    network: &'a Network,
    ue: UeConfig,
    policy: &'a HandoverPolicy,
    threshold: f64,
    floor: f64,
    serving: Option<CellId>,
    pending: Option<PendingHandover>,
    t310_started: Option<f64>,
    /// Start of the current run of samples meeting the A3 entering
    /// condition, per neighbor.
    entering_since: BTreeMap<CellId, f64>,
    /// Time of the last A3 report on the current serving cell. One timer
    /// covers all neighbors, so neighbors that trigger a few samples apart
    /// share a report instead of producing one each.
    last_report: Option<f64>,
    events: Vec<FlightEvent>,
    decisions: Vec<DecisionRecord>,
}

impl Simulator<'_> {
    fn push(&mut self, time: f64, kind: EventKind, detail: EventDetail) {
        self.events.push(FlightEvent { time, kind, detail });
    }

    fn reset_radio_state(&mut self) {
        self.pending = None;
        self.t310_started = None;
        self.clear_a3();
    }

    /// Strongest cell the policy allows the UE to attach to. Above the
    /// height threshold a BCS policy only accepts aerial-coverage cells of
    /// its group whose indication cell is audible.
    fn attach_candidate(&self, rsrp: &BTreeMap<CellId, f64>, above: bool) -> Result<Option<CellId>> {
        let group = if above { self.policy.group(self.network)? } else { None };
        let mut best: Option<(CellId, f64)> = None;
        for (&id, &v) in rsrp {
            if v < self.floor {
                continue;
            }
            if let Some(g) = group {
                let heard = g
                    .indication_for(id)
                    .and_then(|ind| rsrp.get(&ind))
                    .is_some_and(|r| *r >= self.floor);
                if !heard {
                    continue;
                }
            }
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((id, v));
            }
        }
        Ok(best.map(|(id, _)| id))
    }

    fn reattach(
        &mut self,
        time: f64,
        rsrp: &BTreeMap<CellId, f64>,
        above: bool,
        previous: Option<CellId>,
    ) -> Result<()> {
        self.reset_radio_state();
        self.serving = self.attach_candidate(rsrp, above)?;
        if let Some(cell) = self.serving {
            self.push(
                time,
                EventKind::Reattach,
                EventDetail::Attach {
                    cell,
                    initial: false,
                    previous,
                },
            );
        }
        Ok(())
    }

    fn report(
        &self,
        time: f64,
        height: f64,
        above: bool,
        serving: CellId,
        rsrp: &BTreeMap<CellId, f64>,
        trigger: Trigger,
    ) -> MeasurementReport {
        let mut neighbors: Vec<(CellId, f64)> = rsrp
            .iter()
            .filter(|(id, v)| **id != serving && **v >= self.floor)
            .map(|(id, v)| (*id, *v))
            .collect();
        neighbors.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        MeasurementReport {
            time,
            ue_height: height,
            above_threshold: above,
            serving_cell: serving,
            serving_rsrp: rsrp[&serving],
            neighbors,
            trigger,
        }
    }

    fn clear_a3(&mut self) {
        self.entering_since.clear();
        self.last_report = None;
    }

    /// Updates the A3 entering timers and tells whether a report is due:
    /// some neighbor has met the entering condition for the time-to-trigger
    /// and the report interval has passed since the previous report.
    fn a3_due(&mut self, time: f64, serving: CellId, rsrp: &BTreeMap<CellId, f64>) -> bool {
        let enter = rsrp[&serving] + self.ue.a3_offset + self.ue.hysteresis;
        let mut triggered = false;
        for (&id, &v) in rsrp {
            if id == serving || v < self.floor || v <= enter {
                self.entering_since.remove(&id);
                continue;
            }
            let since = *self.entering_since.entry(id).or_insert(time);
            triggered |= time - since + TIME_EPS >= self.ue.time_to_trigger;
        }
        let rested = self
            .last_report
            .is_none_or(|last| time - last + TIME_EPS >= self.ue.report_interval);
        triggered && rested
    }
}

/// Flies `trajectory` through `network` and records every sample, event
/// and policy decision.
pub fn simulate_flight(
    network: &Network,
    trajectory: &Trajectory,
    ue: &UeConfig,
    policy: &HandoverPolicy,
    initial_cell: Option<CellId>,
) -> Result<FlightTrace> {
    trajectory.validate()?;
    ue.validate()
        .map_err(|(key, msg)| Error::InvalidParameter(format!("{key}: {msg}")))?;
    policy.group(network)?;
    if let Some(id) = initial_cell {
        network.cell(id)?;
    }
    let mut cells: Vec<_> = network.cells.iter().collect();
    cells.sort_by_key(|c| c.id);

    let mut sim = Simulator {
        network,
        ue: *ue,
        policy,
        threshold: ue.height_threshold.unwrap_or(network.predefined_height),
        floor: network.link_budget.noise_floor,
        serving: None,
        pending: None,
        t310_started: None,
        entering_since: BTreeMap::new(),
        last_report: None,
        events: Vec::new(),
        decisions: Vec::new(),
    };

    let dt = trajectory.sample_interval;
    let steps = (trajectory.duration() / dt + TIME_EPS).floor() as u64;
    let mut samples = Vec::with_capacity(steps as usize + 1);
    let mut was_above: Option<bool> = None;

    for k in 0..=steps {
        let time = k as f64 * dt;
        let position = trajectory.position_at(time);
        let rsrp: BTreeMap<CellId, f64> = cells
            .iter()
            .map(|c| (c.id, rss(c, &position, &network.link_budget)))
            .collect();
        let above = position.z >= sim.threshold;

        if k == 0 {
            let start = match initial_cell {
                Some(id) if rsrp[&id] >= sim.floor => Some(id),
                Some(id) => {
                    return Err(Error::InvalidParameter(format!("initial cell {id} is not audible")));
                }
                None => sim.attach_candidate(&rsrp, above)?,
            };
            if rsrp.values().all(|v| *v < sim.floor) {
                return Err(Error::CannotAttach);
            }
            sim.serving = start;
            if let Some(cell) = start {
                sim.push(
                    time,
                    EventKind::Reattach,
                    EventDetail::Attach {
                        cell,
                        initial: true,
                        previous: None,
                    },
                );
            }
        }

        if let (Some(prev), Some(serving)) = (was_above, sim.serving) {
            if prev != above {
                let trigger = if above { Trigger::H1 } else { Trigger::H2 };
                let report = sim.report(time, position.z, above, serving, &rsrp, trigger);
                sim.push(time, EventKind::Mr, EventDetail::Report { report, decision: None });
            }
        }
        was_above = Some(above);

        if let (Some(pending), Some(source)) = (sim.pending, sim.serving) {
            if time + TIME_EPS >= pending.completes_at {
                sim.push(
                    pending.completes_at,
                    EventKind::HoComplete,
                    EventDetail::Handover {
                        source,
                        target: pending.target,
                    },
                );
                sim.reset_radio_state();
                sim.serving = Some(pending.target);
            } else if time > pending.decided_at && rsrp[&source] < ue.rsrp_qout {
                sim.push(
                    time,
                    EventKind::Hof,
                    EventDetail::Failure {
                        serving: source,
                        serving_rsrp_dbm: rsrp[&source],
                    },
                );
                sim.reattach(time, &rsrp, above, Some(source))?;
            }
        }

        if sim.serving.is_none() {
            sim.reattach(time, &rsrp, above, None)?;
        }

        if let Some(serving) = sim.serving {
            if rsrp[&serving] < ue.rsrp_qout {
                let started = *sim.t310_started.get_or_insert(time);
                if time - started + TIME_EPS >= ue.t310 {
                    sim.push(
                        time,
                        EventKind::Rlf,
                        EventDetail::Failure {
                            serving,
                            serving_rsrp_dbm: rsrp[&serving],
                        },
                    );
                    sim.reattach(time, &rsrp, above, Some(serving))?;
                }
            } else {
                sim.t310_started = None;
            }
        }

        if let (Some(serving), None) = (sim.serving, sim.pending) {
            if sim.a3_due(time, serving, &rsrp) {
                let report = sim.report(time, position.z, above, serving, &rsrp, Trigger::A3);
                let decision = evaluate_mr(&report, network, policy)?;
                sim.decisions.push(DecisionRecord {
                    time,
                    serving,
                    best: report.neighbors.first().map(|(id, _)| *id),
                    decision,
                });
                sim.push(
                    time,
                    EventKind::Mr,
                    EventDetail::Report {
                        report,
                        decision: Some(decision),
                    },
                );
                match (decision.outcome, decision.target) {
                    (Outcome::Execute, Some(target)) => {
                        sim.push(
                            time,
                            EventKind::HoDecision,
                            EventDetail::Handover {
                                source: serving,
                                target,
                            },
                        );
                        sim.clear_a3();
                        sim.pending = Some(PendingHandover {
                            target,
                            decided_at: time,
                            completes_at: time + ue.ho_execution_time,
                        });
                    }
                    _ => sim.last_report = Some(time),
                }
            }
        }

        let serving_rsrp = sim.serving.map(|s| rsrp[&s]);
        let strongest_neighbor_rsrp = rsrp
            .iter()
            .filter(|(id, v)| Some(**id) != sim.serving && **v >= sim.floor)
            .map(|(_, v)| *v)
            .reduce(f64::max);
        samples.push(FlightSample {
            time,
            position,
            serving_cell: sim.serving,
            serving_rsrp,
            strongest_neighbor_rsrp,
        });
    }

    Ok(FlightTrace {
        sample_interval: dt,
        rsrp_qout: ue.rsrp_qout,
        samples,
        events: sim.events,
        decisions: sim.decisions,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MobilityMetrics {
    /// Handover attempts, one per HO_DECISION.
    pub handover_count: usize,
    pub handover_successes: usize,
    pub hof_count: usize,
    pub rlf_count: usize,
    pub hof_rate: f64,
    /// Seconds spent detached or with serving RSRP under Qout.
    pub time_in_outage: f64,
    pub reattach_count: usize,
    pub ignored_reports: usize,
}

pub fn mobility_metrics(trace: &FlightTrace) -> MobilityMetrics {
    let count = |kind: EventKind| trace.events.iter().filter(|e| e.kind == kind).count();
    let handover_count = count(EventKind::HoDecision);
    let hof_count = count(EventKind::Hof);
    let reattach_count = trace
        .events
        .iter()
        .filter(|e| matches!(e.detail, EventDetail::Attach { initial: false, .. }))
        .count();
    let outage_samples = trace
        .samples
        .iter()
        .take(trace.samples.len().saturating_sub(1))
        .filter(|s| s.serving_rsrp.is_none_or(|r| r < trace.rsrp_qout))
        .count();
    MobilityMetrics {
        handover_count,
        handover_successes: count(EventKind::HoComplete),
        hof_count,
        rlf_count: count(EventKind::Rlf),
        hof_rate: hof_count as f64 / handover_count.max(1) as f64,
        time_in_outage: outage_samples as f64 * trace.sample_interval,
        reattach_count,
        ignored_reports: trace
            .decisions
            .iter()
            .filter(|d| d.decision.outcome == Outcome::Ignore)
            .count(),
    }
}

fn json_line<W: Write, T: Serialize>(out: &mut W, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value).map_err(io::Error::other)?;
    out.write_all(b"\n")
}

/// JSON-lines trace: one object per sample and per event, in time order,
/// a sample preceding the events stamped with the same time.
pub fn write_trace_jsonl<W: Write>(trace: &FlightTrace, mut out: W) -> io::Result<()> {
    #[derive(Serialize)]
    struct SampleLine<'a> {
        t: f64,
        kind: &'static str,
        #[serde(flatten)]
        sample: &'a FlightSample,
    }
    #[derive(Serialize)]
    struct EventLine<'a> {
        t: f64,
        kind: EventKind,
        #[serde(flatten)]
        detail: &'a EventDetail,
    }
    let mut events = trace.events.iter().peekable();
    for sample in &trace.samples {
        json_line(
            &mut out,
            &SampleLine {
                t: sample.time,
                kind: "SAMPLE",
                sample,
            },
        )?;
        while let Some(e) = events.next_if(|e| e.time <= sample.time + TIME_EPS) {
            json_line(
                &mut out,
                &EventLine {
                    t: e.time,
                    kind: e.kind,
                    detail: &e.detail,
                },
            )?;
        }
    }
    for e in events {
        json_line(
            &mut out,
            &EventLine {
                t: e.time,
                kind: e.kind,
                detail: &e.detail,
            },
        )?;
    }
    Ok(())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{}", (v * 1e6).round() / 1e6)).unwrap_or_default()
}

/// CSV time series with header
/// `t_s,x_m,y_m,z_m,serving_cell,serving_rsrp_dbm,best_neighbor_rsrp_dbm`.
pub fn write_timeseries_csv<W: Write>(trace: &FlightTrace, mut out: W) -> io::Result<()> {
    writeln!(
        out,
        "t_s,x_m,y_m,z_m,serving_cell,serving_rsrp_dbm,best_neighbor_rsrp_dbm"
    )?;
    for s in &trace.samples {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            fmt_opt(Some(s.time)),
            fmt_opt(Some(s.position.x)),
            fmt_opt(Some(s.position.y)),
            fmt_opt(Some(s.position.z)),
            s.serving_cell.map(|c| c.to_string()).unwrap_or_default(),
            fmt_opt(s.serving_rsrp),
            fmt_opt(s.strongest_neighbor_rsrp),
        )?;
    }
    Ok(())
}

/// Decision log with one `{"t","serving","best","outcome","target","reason"}`
/// object per evaluated report.
pub fn write_decision_log<W: Write>(trace: &FlightTrace, mut out: W) -> io::Result<()> {
    #[derive(Serialize)]
    struct Line {
        t: f64,
        serving: CellId,
        best: Option<CellId>,
        outcome: Outcome,
        target: Option<CellId>,
        reason: Option<String>,
    }
    for d in &trace.decisions {
        json_line(
            &mut out,
            &Line {
                t: d.time,
                serving: d.serving,
                best: d.best,
                outcome: d.decision.outcome,
                target: d.decision.target,
                reason: d.decision.reason.map(|r| r.to_string()),
            },
        )?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::antenna::AntennaConfig;
    use crate::network::{Cell, CellRole};
    use crate::propagation::LinkBudgetConfig;

    fn cell(id: u32, x: f64, azimuth: f64) -> Cell {
        Cell {
            id: CellId(id),
            site_id: id,
            position: Point3::new(x, 0.0, 75.0),
            boresight_azimuth: azimuth,
            antenna: AntennaConfig::default(),
            tx_power: 44.0,
            role: CellRole::Conventional,
        }
    }

    fn network(cells: Vec<Cell>) -> Network {
        Network {
            cells,
            groups: Vec::new(),
            isd: 500.0,
            predefined_height: 300.0,
            link_budget: LinkBudgetConfig::default(),
        }
    }

    fn line(x0: f64, x1: f64, z: f64) -> Trajectory {
        Trajectory {
            waypoints: vec![Point3::new(x0, 0.0, z), Point3::new(x1, 0.0, z)],
            speed: 20.0,
            sample_interval: 0.01,
        }
    }

    #[test]
    fn trajectory_positions() {
        let t = Trajectory {
            waypoints: vec![
                Point3::new(0.0, 0.0, 0.0),
                Point3::new(100.0, 0.0, 0.0),
                Point3::new(100.0, 50.0, 0.0),
            ],
            speed: 10.0,
            sample_interval: 0.1,
        };
        assert_eq!(t.length(), 150.0);
        assert_eq!(t.position_at(12.0), Point3::new(100.0, 20.0, 0.0));
        assert_eq!(t.position_at(99.0), Point3::new(100.0, 50.0, 0.0));
        let bad = Trajectory {
            waypoints: vec![Point3::default()],
            ..t
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn stationary_uav_only_attaches() {
        let n = network(vec![cell(0, 0.0, 0.0)]);
        let hover = Trajectory {
            waypoints: vec![Point3::new(1000.0, 0.0, 300.0), Point3::new(1000.0, 0.0, 300.0)],
            speed: 1.0,
            sample_interval: 0.01,
        };
        let trace = simulate_flight(&n, &hover, &UeConfig::default(), &HandoverPolicy::baseline(300.0), None).unwrap();
        assert_eq!(trace.events.len(), 1);
        assert_eq!(trace.events[0].kind, EventKind::Reattach);
        assert_eq!(mobility_metrics(&trace), MobilityMetrics::default());
    }

    #[test]
    fn handover_between_facing_cells() {
        let n = network(vec![cell(0, 0.0, 0.0), cell(1, 2000.0, 180.0)]);
        let trace = simulate_flight(
            &n,
            &line(200.0, 1800.0, 75.0),
            &UeConfig::default(),
            &HandoverPolicy::baseline(300.0),
            None,
        )
        .unwrap();
        let m = mobility_metrics(&trace);
        assert_eq!(m.handover_count, 1);
        assert_eq!(m.handover_successes, 1);
        let decision = trace.events.iter().find(|e| e.kind == EventKind::HoDecision).unwrap();
        let complete = trace.events.iter().find(|e| e.kind == EventKind::HoComplete).unwrap();
        assert!((complete.time - decision.time - 0.15).abs() < 1e-9);
        // the A3 margin of offset plus hysteresis held for the whole TTT
        let mr = trace.events.iter().find(|e| e.kind == EventKind::Mr).unwrap();
        let first_enter = trace
            .samples
            .iter()
            .find(|s| {
                let p = s.position;
                rss(&n.cells[1], &p, &n.link_budget) > rss(&n.cells[0], &p, &n.link_budget) + 4.0
            })
            .unwrap();
        assert!(mr.time - first_enter.time >= 0.16 - 1e-9);
        assert_eq!(trace.samples.last().unwrap().serving_cell, Some(CellId(1)));
    }

    #[test]
    fn height_events() {
        let n = network(vec![cell(0, 0.0, 0.0)]);
        let climb = Trajectory {
            waypoints: vec![
                Point3::new(1000.0, 0.0, 250.0),
                Point3::new(1000.0, 0.0, 350.0),
                Point3::new(1000.0, 0.0, 250.0),
            ],
            speed: 50.0,
            sample_interval: 0.01,
        };
        let trace = simulate_flight(&n, &climb, &UeConfig::default(), &HandoverPolicy::baseline(300.0), None).unwrap();
        let triggers: Vec<Trigger> = trace
            .events
            .iter()
            .filter_map(|e| match &e.detail {
                EventDetail::Report { report, .. } => Some(report.trigger),
                _ => None,
            })
            .collect();
        assert_eq!(triggers, vec![Trigger::H1, Trigger::H2]);
        assert!(trace.decisions.is_empty());
    }

    #[test]
    fn cannot_attach_in_silence() {
        let mut n = network(vec![cell(0, 0.0, 0.0)]);
        n.cells[0].antenna = AntennaConfig::cone();
        let err = simulate_flight(
            &n,
            &line(-500.0, -400.0, 75.0),
            &UeConfig::default(),
            &HandoverPolicy::baseline(300.0),
            None,
        );
        assert_eq!(err.unwrap_err(), Error::CannotAttach);
    }

    #[test]
    fn rlf_after_t310() {
        let mut n = network(vec![cell(0, 0.0, 0.0)]);
        n.cells[0].tx_power = -10.0;
        let ue = UeConfig {
            rsrp_qout: -100.0,
            ..UeConfig::default()
        };
        // far out on boresight the lone cell fades below Qout
        let trace = simulate_flight(
            &n,
            &line(100.0, 3000.0, 75.0),
            &ue,
            &HandoverPolicy::baseline(300.0),
            None,
        )
        .unwrap();
        let m = mobility_metrics(&trace);
        assert!(m.rlf_count >= 1, "{m:?}");
        assert!(m.time_in_outage > 0.0);
        let first_low = trace
            .samples
            .iter()
            .find(|s| s.serving_rsrp.is_some_and(|r| r < -100.0))
            .unwrap();
        let rlf = trace.events.iter().find(|e| e.kind == EventKind::Rlf).unwrap();
        assert!((rlf.time - first_low.time - 1.0).abs() < 1e-6);
    }

    #[test]
    fn metrics_arithmetic() {
        let trace = FlightTrace {
            sample_interval: 0.01,
            rsrp_qout: -110.0,
            samples: Vec::new(),
            events: [
                EventKind::HoDecision,
                EventKind::HoDecision,
                EventKind::Hof,
                EventKind::HoDecision,
            ]
            .into_iter()
            .map(|kind| FlightEvent {
                time: 0.0,
                kind,
                detail: EventDetail::Handover {
                    source: CellId(0),
                    target: CellId(1),
                },
            })
            .collect(),
            decisions: Vec::new(),
        };
        let m = mobility_metrics(&trace);
        assert_eq!(m.handover_count, 3);
        assert!((m.hof_rate - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn exports_have_headers() {
        let n = network(vec![cell(0, 0.0, 0.0), cell(1, 2000.0, 180.0)]);
        let trace = simulate_flight(
            &n,
            &line(200.0, 1800.0, 75.0),
            &UeConfig::default(),
            &HandoverPolicy::baseline(300.0),
            None,
        )
        .unwrap();
        let mut csv = Vec::new();
        write_timeseries_csv(&trace, &mut csv).unwrap();
        let csv = String::from_utf8(csv).unwrap();
        assert!(csv.starts_with("t_s,x_m,y_m,z_m,serving_cell,serving_rsrp_dbm,best_neighbor_rsrp_dbm\n0,200,0,75,0,"));
        let mut log = Vec::new();
        write_decision_log(&trace, &mut log).unwrap();
        let first: serde_json::Value = serde_json::from_slice(log.split(|b| *b == b'\n').next().unwrap()).unwrap();
        assert_eq!(first["outcome"], "execute");
        assert_eq!(first["target"], 1);
        let mut jsonl = Vec::new();
        write_trace_jsonl(&trace, &mut jsonl).unwrap();
        let kinds: Vec<String> = String::from_utf8(jsonl)
            .unwrap()
            .lines()
            .map(|l| {
                serde_json::from_str::<serde_json::Value>(l).unwrap()["kind"]
                    .as_str()
                    .unwrap()
                    .to_string()
            })
            .filter(|k| k != "SAMPLE")
            .collect();
        assert_eq!(kinds, vec!["REATTACH", "MR", "HO_DECISION", "HO_COMPLETE"]);
    }
}
