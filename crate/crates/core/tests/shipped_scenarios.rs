//! End-to-end checks on the scenarios shipped in `scenarios/`.

use aerocov::mobility::{mobility_metrics, simulate_flight, EventKind, FlightTrace};
use aerocov::{parse_scenario, FlightRequest, Scenario};

const STANDARD: &str = include_str!("../../../scenarios/standard.json");
const WALKTHROUGH: &str = include_str!("../../../scenarios/walkthrough.json");
const SIDELOBE_DROP: &str = include_str!("../../../scenarios/sidelobe-drop.json");

fn load(text: &str) -> Scenario {
    parse_scenario(text.as_bytes()).unwrap()
}

fn fly(s: &Scenario, f: &FlightRequest) -> FlightTrace {
    simulate_flight(&s.network, &f.trajectory, &s.ue, &s.flight_policy(f), f.initial_cell).unwrap()
}

/// Halving the sample interval keeps the sequence of event kinds, and each
/// event moves by less than one coarse sample interval.
fn assert_refinement_stable(s: &Scenario, index: usize) {
    let coarse_req = &s.flights[index];
    let mut fine_req = coarse_req.clone();
    fine_req.trajectory.sample_interval /= 2.0;
    let (coarse, fine) = (fly(s, coarse_req), fly(s, &fine_req));
    let kinds = |t: &FlightTrace| t.events.iter().map(|e| e.kind).collect::<Vec<_>>();
    assert_eq!(kinds(&coarse), kinds(&fine), "flight {index}");
    for (a, b) in coarse.events.iter().zip(&fine.events) {
        assert!(
            (a.time - b.time).abs() <= coarse_req.trajectory.sample_interval + 1e-9,
            "{:?} moved from {} to {}",
            a.kind,
            a.time,
            b.time
        );
    }
}

#[test]
fn event_sequences_survive_a_finer_time_step() {
    let walkthrough = load(WALKTHROUGH);
    assert_refinement_stable(&walkthrough, 0);
    let standard = load(STANDARD);
    assert_refinement_stable(&standard, 0);
    assert_refinement_stable(&standard, 1);
}

#[test]
fn walkthrough_baseline_hands_over_more_often() {
    let s = load(WALKTHROUGH);
    let bcs = mobility_metrics(&fly(&s, &s.flights[0]));
    let mut baseline = s.flights[0].clone();
    baseline.policy = Some(aerocov::HandoverPolicy::baseline(s.network.predefined_height));
    let base = mobility_metrics(&fly(&s, &baseline));
    assert_eq!(bcs.handover_count, 1);
    assert_eq!((base.handover_count, base.hof_count), (5, 2));
}

#[test]
fn sidelobe_drop_ends_in_a_handover_failure() {
    let s = load(SIDELOBE_DROP);
    let trace = fly(&s, &s.flights[0]);
    let hofs: Vec<f64> = trace
        .events
        .iter()
        .filter(|e| e.kind == EventKind::Hof)
        .map(|e| e.time)
        .collect();
    assert_eq!(hofs.len(), 1, "{hofs:?}");
    let hof = hofs[0];

    // find a >20 dB fall within 2 s on one serving cell, then follow that
    // cell until it stops serving
    let window = (2.0 / trace.sample_interval).round() as usize;
    let samples = &trace.samples;
    let episode = samples.iter().enumerate().find_map(|(i, a)| {
        let (cell, start_rsrp) = (a.serving_cell?, a.serving_rsrp?);
        let deep = samples[i + 1..]
            .iter()
            .take(window)
            .take_while(|b| b.serving_cell == Some(cell))
            .any(|b| b.serving_rsrp.is_some_and(|r| start_rsrp - r > 20.0));
        if !deep {
            return None;
        }
        let end = samples[i..]
            .iter()
            .find(|b| b.serving_cell != Some(cell))
            .map_or(f64::INFINITY, |b| b.time);
        Some((a.time, end))
    });
    let (start, end) = episode.expect("a deep drop on one serving cell");
    assert!(
        hof > start && hof <= end,
        "HOF at {hof} outside the drop episode {start}..{end}"
    );
}
