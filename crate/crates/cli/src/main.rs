//! `aerocov` command-line frontend.
//!
//! Every command reads one scenario file. `coverage` and `fly` write data
//! files plus a `manifest.json` into the output directory, `geometry` and
//! `validate` print JSON to stdout.
//!
//! Exit codes: 0 success, 1 input error, 2 computation error, 3 pair
//! validation failure.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use aerocov::coverage::{fragmentation, write_grid_csv};
use aerocov::geometry::{bcs_min_range, conic_section, footprint_intervals, normalize_azimuth};
use aerocov::mobility::{
    mobility_metrics, simulate_flight, write_decision_log, write_timeseries_csv, write_trace_jsonl,
};
use aerocov::network::validate_pair;
use aerocov::scenario::{parse_policy, parse_scenario_lenient};
use aerocov::{parse_scenario, serialize_scenario, CellId, GridBounds, GridFilter, GridRequest, Scenario};
use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

const FOOTPRINT_RANGE_M: f64 = 10_000.0;

#[derive(Debug, Parser)]
#[command(name = "aerocov", version, about = "Aerial coverage and UAV handover simulator")]
struct Cli {
    /// Reserved for stochastic extensions; the simulator is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Compute best-server maps and their fragmentation.
    Coverage {
        scenario: PathBuf,
        /// Compute a single map at this height instead of the scenario's grids.
        #[arg(long)]
        height: Option<f64>,
        /// `none`, `group:<id>` or `cells:<id>,<id>,...`; used with --height.
        #[arg(long, default_value = "none", requires = "height")]
        filter: String,
        /// Grid spacing for --height maps.
        #[arg(long, default_value_t = 10.0, requires = "height")]
        resolution: f64,
        #[arg(long, env = "AEROCOV_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Simulate one flight of the scenario.
    Fly {
        scenario: PathBuf,
        #[arg(long, default_value_t = 0)]
        flight: usize,
        /// `baseline` or `bcs:<group>`; defaults to the flight's own policy.
        #[arg(long)]
        policy: Option<String>,
        #[arg(long, env = "AEROCOV_OUT_DIR", default_value = "out")]
        out: PathBuf,
    },
    /// Print the mainlobe conic section, BCS range and footprint of a cell.
    Geometry {
        scenario: PathBuf,
        /// Defaults to the lowest cell id.
        #[arg(long)]
        cell: Option<u32>,
        /// Defaults to the predefined height.
        #[arg(long)]
        height: Option<f64>,
        /// Ray azimuth in degrees; defaults to the cell boresight.
        #[arg(long)]
        ray: Option<f64>,
    },
    /// Check every aerial-coverage pair of the scenario.
    Validate { scenario: PathBuf },
}

/// A failure carrying its exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

fn input(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 1,
        error: error.into(),
    }
}

fn compute(error: impl Into<anyhow::Error>) -> Failure {
    Failure {
        code: 2,
        error: error.into(),
    }
}

type Outcome = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let _ = cli.seed;
    let result = match cli.command {
        Command::Coverage {
            scenario,
            height,
            filter,
            resolution,
            out,
        } => cmd_coverage(&scenario, height, &filter, resolution, &out),
        Command::Fly {
            scenario,
            flight,
            policy,
            out,
        } => cmd_fly(&scenario, flight, policy.as_deref(), &out),
        Command::Geometry {
            scenario,
            cell,
            height,
            ray,
        } => cmd_geometry(&scenario, cell, height, ray),
        Command::Validate { scenario } => cmd_validate(&scenario),
    };
    match result {
        Ok(code) => code,
        Err(Failure { code, error }) => {
            eprintln!("error: {error:#}");
            ExitCode::from(code)
        }
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(input)
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = read_file(path)?;
    parse_scenario(&text)
        .with_context(|| format!("invalid scenario {}", path.display()))
        .map_err(input)
}

/// Files written by one run, recorded in the manifest.
struct Outputs {
    dir: PathBuf,
    files: Vec<(String, String)>,
}

impl Outputs {
    fn create(dir: &Path) -> Result<Self, Failure> {
        fs::create_dir_all(dir)
            .with_context(|| format!("cannot create output directory {}", dir.display()))
            .map_err(compute)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    fn write(
        &mut self,
        kind: &str,
        name: &str,
        body: impl FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
    ) -> Result<(), Failure> {
        let path = self.dir.join(name);
        let file = fs::File::create(&path)
            .with_context(|| format!("cannot create {}", path.display()))
            .map_err(compute)?;
        let mut out = BufWriter::new(file);
        body(&mut out)
            .and_then(|_| out.flush())
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(compute)?;
        self.files.push((kind.to_string(), name.to_string()));
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, kind: &str, name: &str, value: &T) -> Result<(), Failure> {
        self.write(kind, name, |out| {
            serde_json::to_writer_pretty(&mut *out, value)?;
            out.write_all(b"\n")
        })
    }

    fn finish(mut self, scenario: &Scenario, started: Instant) -> Result<(), Failure> {
        let outputs: Vec<_> = self
            .files
            .iter()
            .map(|(kind, path)| json!({"kind": kind, "path": path}))
            .collect();
        let manifest = json!({
            "scenario_hash": hex::encode(Sha256::digest(serialize_scenario(scenario))),
            "tool_version": env!("CARGO_PKG_VERSION"),
            "outputs": outputs,
            "wall_time": started.elapsed().as_secs_f64(),
        });
        self.write_json("manifest", "manifest.json", &manifest)
    }
}

fn height_tag(height: f64) -> String {
    let s = format!("{height}");
    s.replace('.', "p").replace('-', "m")
}

fn cmd_coverage(path: &Path, height: Option<f64>, filter: &str, resolution: f64, out: &Path) -> Outcome {
    let started = Instant::now();
    let scenario = load(path)?;
    let requests = match height {
        Some(height) => {
            let filter: GridFilter = filter.parse().map_err(|e: String| input(anyhow!("--filter: {e}")))?;
            if let GridFilter::Group(g) = &filter {
                scenario.network.group(g).map_err(input)?;
            }
            vec![GridRequest {
                height,
                bounds: GridBounds::default(),
                resolution,
                filter,
            }]
        }
        None if scenario.grids.is_empty() => {
            return Err(input(anyhow!("scenario defines no grids; pass --height")));
        }
        None => scenario.grids.clone(),
    };

    let mut outputs = Outputs::create(out)?;
    for (i, request) in requests.iter().enumerate() {
        let grid = scenario.compute_grid(request).map_err(compute)?;
        let stem = format!("grid_{i}_h{}", height_tag(request.height));
        let sidecar = grid.sidecar(scenario.network.link_budget.noise_floor, request.filter.to_string());
        let report = fragmentation(&grid);
        outputs.write("grid", &format!("{stem}.csv"), |w| write_grid_csv(&grid, w))?;
        outputs.write_json("grid-metadata", &format!("{stem}.json"), &sidecar)?;
        outputs.write_json("fragmentation", &format!("{stem}_fragmentation.json"), &report)?;
        eprintln!(
            "{stem}: {} components, {:.1}% covered",
            report.total_components,
            100.0 * report.covered_fraction
        );
    }
    outputs.finish(&scenario, started)?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_fly(path: &Path, index: usize, policy: Option<&str>, out: &Path) -> Outcome {
    let started = Instant::now();
    let scenario = load(path)?;
    let flight = scenario.flights.get(index).ok_or_else(|| {
        input(anyhow!(
            "--flight {index}: scenario defines {} flight(s)",
            scenario.flights.len()
        ))
    })?;
    let policy = match policy {
        Some(p) => parse_policy(p, scenario.network.predefined_height).map_err(|e| input(anyhow!("--policy: {e}")))?,
        None => scenario.flight_policy(flight),
    };
    policy.group(&scenario.network).context("--policy").map_err(input)?;

    let trace = simulate_flight(
        &scenario.network,
        &flight.trajectory,
        &scenario.ue,
        &policy,
        flight.initial_cell,
    )
    .map_err(compute)?;
    let metrics = mobility_metrics(&trace);

    let stem = format!("flight_{index}");
    let mut outputs = Outputs::create(out)?;
    outputs.write("trace", &format!("{stem}_trace.jsonl"), |w| {
        write_trace_jsonl(&trace, w)
    })?;
    outputs.write("timeseries", &format!("{stem}_timeseries.csv"), |w| {
        write_timeseries_csv(&trace, w)
    })?;
    outputs.write("decisions", &format!("{stem}_decisions.log"), |w| {
        write_decision_log(&trace, w)
    })?;
    outputs.write_json("metrics", &format!("{stem}_metrics.json"), &metrics)?;
    outputs.finish(&scenario, started)?;
    eprintln!(
        "{stem}: {} handovers, {} HOF, {} RLF",
        metrics.handover_count, metrics.hof_count, metrics.rlf_count
    );
    Ok(ExitCode::SUCCESS)
}

fn print_json(value: &serde_json::Value) -> Result<(), Failure> {
    let mut stdout = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, value)
        .map_err(anyhow::Error::from)
        .and_then(|_| writeln!(stdout).map_err(anyhow::Error::from))
        .map_err(compute)
}

fn cmd_geometry(path: &Path, cell: Option<u32>, height: Option<f64>, ray: Option<f64>) -> Outcome {
    let scenario = load(path)?;
    let net = &scenario.network;
    let cell = match cell {
        Some(id) => net.cell(CellId(id)).map_err(input)?,
        None => net
            .cells
            .iter()
            .min_by_key(|c| c.id)
            .ok_or_else(|| input(anyhow!("scenario has no cells")))?,
    };
    let height = height.unwrap_or(net.predefined_height);
    let ray = normalize_azimuth(ray.unwrap_or(cell.boresight_azimuth));

    let min_range = bcs_min_range(cell.position.z, height, cell.antenna.cone_apex_angle).map_err(compute)?;
    let lobes = cell.lobe_cones().map_err(compute)?;
    let section = conic_section(&lobes[0].cone, height);
    let footprint = footprint_intervals(
        &lobes,
        height,
        [cell.position.x, cell.position.y],
        ray,
        FOOTPRINT_RANGE_M,
    )
    .map_err(compute)?;
    print_json(&json!({
        "cell": cell.id,
        "height_m": height,
        "mainlobe_section": section,
        "bcs_min_range_m": min_range,
        "footprint": footprint,
    }))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_validate(path: &Path) -> Outcome {
    let text = read_file(path)?;
    let scenario = parse_scenario_lenient(&text)
        .with_context(|| format!("invalid scenario {}", path.display()))
        .map_err(input)?;
    let net = &scenario.network;
    if net.groups.is_empty() {
        eprintln!("notice: scenario defines no aerial-coverage groups");
    }

    let mut failed = false;
    let mut groups = Vec::new();
    for group in &net.groups {
        let check = net.check_group(group);
        for notice in &check.notices {
            eprintln!("notice: {notice}");
        }
        let mut pairs = Vec::new();
        for pair in &group.pairs {
            let report = validate_pair(net, pair, &scenario.pair_validation).map_err(compute)?;
            for v in &report.violations {
                eprintln!(
                    "{}: pair {} <- {}: {v}",
                    group.group_id, pair.aerial_coverage_cell, pair.mainlobe_indication_cell
                );
            }
            failed |= !report.is_ok();
            pairs.push(json!({
                "aerial_coverage_cell": pair.aerial_coverage_cell,
                "mainlobe_indication_cell": pair.mainlobe_indication_cell,
                "valid": report.is_ok(),
                "violations": report.violations,
            }));
        }
        groups.push(json!({
            "group_id": group.group_id,
            "notices": check.notices,
            "pairs": pairs,
        }));
    }
    print_json(&json!({ "groups": groups }))?;
    Ok(if failed { ExitCode::from(3) } else { ExitCode::SUCCESS })
}
