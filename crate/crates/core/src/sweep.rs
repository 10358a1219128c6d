//! Sweeps over schemes, TTT/CTT values, seeds and routes, with per-cell
//! artifacts and an aggregate table.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::handover::{simulate_route, EventLog, Scheme, TriggerConfig};
use crate::metrics::{report, MetricsReport};
use crate::scenario::{load_scenario_file, Route, Scenario};

pub const DEFAULT_VALUES: [u32; 6] = [0, 2, 4, 8, 16, 32];
pub const DEFAULT_OFFSETS_DB: [f64; 2] = [1.0, 3.0];

/// One scheme column of a sweep; A3 appears once per RSRP offset.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeSpec {
    pub label: String,
    pub scheme: Scheme,
    pub rsrp_offset_db: f64,
}

impl SchemeSpec {
    pub fn expand(schemes: &[Scheme], offsets_db: &[f64]) -> Vec<SchemeSpec> {
        let mut out = Vec::new();
        for &scheme in schemes {
            if scheme == Scheme::A3 {
                for &offset in offsets_db {
                    out.push(SchemeSpec { label: format!("a3-{offset}dB"), scheme, rsrp_offset_db: offset });
                }
            } else {
                out.push(SchemeSpec {
                    label: scheme.to_string(),
                    scheme,
                    rsrp_offset_db: TriggerConfig::default().rsrp_offset_db,
                });
            }
        }
        out
    }

    pub fn trigger(&self, value: u32) -> TriggerConfig {
        match self.scheme {
            Scheme::A3 => TriggerConfig::a3(self.rsrp_offset_db, value),
            Scheme::Distance => TriggerConfig::distance(value),
            Scheme::Probability => TriggerConfig::probability(value),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum RouteSelection {
    /// One route per seed, drawn uniformly.
    #[default]
    Random,
    All,
    Id(String),
}

impl FromStr for RouteSelection {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim() {
            "" => Err("empty route selection".into()),
            "random" => Ok(RouteSelection::Random),
            "all" => Ok(RouteSelection::All),
            id => Ok(RouteSelection::Id(id.to_string())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub scenario: PathBuf,
    pub schemes: Vec<SchemeSpec>,
    pub values: Vec<u32>,
    pub seeds: Vec<u64>,
    pub routes: RouteSelection,
    pub out: PathBuf,
}

impl RunSpec {
    fn validate(&self) -> Result<()> {
        if self.schemes.is_empty() {
            return Err(Error::Config("no schemes given".into()));
        }
        if self.values.is_empty() {
            return Err(Error::Config("no TTT/CTT values given".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("no seeds given".into()));
        }
        Ok(())
    }
}

/// One (scheme, value, seed, route) combination.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub scheme: SchemeSpec,
    pub value: u32,
    pub seed: u64,
    pub route: String,
}

impl Cell {
    pub fn stem(&self) -> String {
        let route: String =
            self.route.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect();
        format!("{}_v{}_s{}_{}", self.scheme.label, self.value, self.seed, route)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub cell: Cell,
    pub report: MetricsReport,
}

/// The route a seed runs on when routes are drawn at random.
pub fn route_for_seed(scenario: &Scenario, seed: u64) -> &Route {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    scenario.pick_route(&mut rng)
}

pub fn cells(
    scenario: &Scenario,
    schemes: &[SchemeSpec],
    values: &[u32],
    seeds: &[u64],
    routes: &RouteSelection,
) -> Result<Vec<Cell>> {
    let mut out = Vec::new();
    for scheme in schemes {
        for &value in values {
            for &seed in seeds {
                let ids: Vec<String> = match routes {
                    RouteSelection::Random => vec![route_for_seed(scenario, seed).id.clone()],
                    RouteSelection::All => scenario.routes.iter().map(|r| r.id.clone()).collect(),
                    RouteSelection::Id(id) => {
                        scenario.route(id).ok_or_else(|| Error::UnknownRoute(id.clone()))?;
                        vec![id.clone()]
                    }
                };
                out.extend(ids.into_iter().map(|route| Cell { scheme: scheme.clone(), value, seed, route }));
            }
        }
    }
    Ok(out)
}

pub fn run_cell(scenario: &Scenario, cell: &Cell) -> Result<EventLog> {
    let route = scenario.route(&cell.route).ok_or_else(|| Error::UnknownRoute(cell.route.clone()))?;
    simulate_route(scenario, route, &cell.scheme.trigger(cell.value), cell.seed)
}

/// Runs every cell in memory and returns the per-cell reports in cell order.
pub fn run_in_memory(scenario: &Scenario, cells: &[Cell]) -> Result<Vec<CellResult>> {
    cells
        .par_iter()
        .map(|cell| {
            let log = run_cell(scenario, cell)?;
            Ok(CellResult { cell: cell.clone(), report: report(&log)? })
        })
        .collect()
}

const AGGREGATE_HEADER: [&str; 13] = [
    "scheme",
    "value",
    "seed",
    "route",
    "handovers",
    "ho_rate",
    "interruption_ms_mean",
    "interruption_percent",
    "outage_los",
    "outage_ber2",
    "outage_ber3",
    "ber_mean",
    "throughput_rel",
];

pub fn aggregate_csv(results: &[CellResult]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(AGGREGATE_HEADER)?;
    for r in results {
        let m = &r.report;
        w.write_record([
            r.cell.scheme.label.clone(),
            r.cell.value.to_string(),
            r.cell.seed.to_string(),
            r.cell.route.clone(),
            m.handovers.to_string(),
            m.ho_rate.to_string(),
            m.interruption_ms_mean.to_string(),
            m.interruption_percent.to_string(),
            m.outage_los.to_string(),
            m.outage_ber2.to_string(),
            m.outage_ber3.to_string(),
            m.ber_mean.to_string(),
            m.throughput_rel.to_string(),
        ])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::io("<aggregate>", e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (0.0, 0.0);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Mean and sample standard deviation over seeds and routes, one row per
/// (scheme, value).
pub fn summary_csv(results: &[CellResult]) -> String {
    let mut keys: Vec<(String, u32)> = Vec::new();
    for r in results {
        let key = (r.cell.scheme.label.clone(), r.cell.value);
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    let mut out = String::from(
        "scheme,value,cells,ho_rate_mean,ho_rate_std,interruption_percent_mean,interruption_percent_std,\
         outage_los_mean,outage_ber2_mean,outage_ber3_mean,ber_mean,throughput_rel_mean\n",
    );
    for (label, value) in keys {
        let group: Vec<&MetricsReport> = results
            .iter()
            .filter(|r| r.cell.scheme.label == label && r.cell.value == value)
            .map(|r| &r.report)
            .collect();
        let col = |f: fn(&MetricsReport) -> f64| group.iter().map(|m| f(m)).collect::<Vec<f64>>();
        let (rate, rate_sd) = mean_std(&col(|m| m.ho_rate));
        let (intr, intr_sd) = mean_std(&col(|m| m.interruption_percent));
        let los = mean_std(&col(|m| m.outage_los)).0;
        let b2 = mean_std(&col(|m| m.outage_ber2)).0;
        let b3 = mean_std(&col(|m| m.outage_ber3)).0;
        let ber = mean_std(&col(|m| m.ber_mean)).0;
        let thr = mean_std(&col(|m| m.throughput_rel)).0;
        let _ = writeln!(
            out,
            "{label},{value},{},{rate},{rate_sd},{intr},{intr_sd},{los},{b2},{b3},{ber},{thr}",
            group.len()
        );
    }
    out
}

fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    fs::write(&tmp, contents).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub cells: usize,
    pub aggregate: PathBuf,
    pub summary: PathBuf,
}

pub fn events_path(out: &Path, cell: &Cell) -> PathBuf {
    out.join("cells").join(format!("{}.events.csv", cell.stem()))
}

pub fn report_path(out: &Path, cell: &Cell) -> PathBuf {
    out.join("cells").join(format!("{}.report.json", cell.stem()))
}

fn report_json(report: &MetricsReport) -> Result<String> {
    Ok(serde_json::to_string_pretty(report)? + "\n")
}

/// Runs a sweep and writes `cells/*.events.csv`, `cells/*.report.json`,
/// `aggregate.csv` and `summary.csv` under `spec.out`. On failure every file
/// of this run is removed again.
pub fn cmd_run(spec: &RunSpec) -> Result<RunSummary> {
    spec.validate()?;
    let scenario = load_scenario_file(&spec.scenario)?;
    let cells = cells(&scenario, &spec.schemes, &spec.values, &spec.seeds, &spec.routes)?;
    let created_out = !spec.out.exists();
    let cells_dir = spec.out.join("cells");
    fs::create_dir_all(&cells_dir).map_err(|e| Error::io(&cells_dir, e))?;

    let result = (|| -> Result<RunSummary> {
        let results: Vec<CellResult> = cells
            .par_iter()
            .map(|cell| {
                let log = run_cell(&scenario, cell)?;
                let report = report(&log)?;
                write_atomic(&events_path(&spec.out, cell), log.to_csv_string()?.as_bytes())?;
                write_atomic(&report_path(&spec.out, cell), report_json(&report)?.as_bytes())?;
                Ok(CellResult { cell: cell.clone(), report })
            })
            .collect::<Result<_>>()?;
        let aggregate = spec.out.join("aggregate.csv");
        write_atomic(&aggregate, aggregate_csv(&results)?.as_bytes())?;
        let summary = spec.out.join("summary.csv");
        write_atomic(&summary, summary_csv(&results).as_bytes())?;
        Ok(RunSummary { cells: results.len(), aggregate, summary })
    })();

    if result.is_err() {
        if created_out {
            let _ = fs::remove_dir_all(&spec.out);
        } else {
            for cell in &cells {
                for p in [events_path(&spec.out, cell), report_path(&spec.out, cell)] {
                    let _ = fs::remove_file(&p);
                    let mut tmp = p.into_os_string();
                    tmp.push(".tmp");
                    let _ = fs::remove_file(PathBuf::from(tmp));
                }
            }
            for name in ["aggregate.csv", "summary.csv", "aggregate.csv.tmp", "summary.csv.tmp"] {
                let _ = fs::remove_file(spec.out.join(name));
            }
            let _ = fs::remove_dir(&cells_dir);
        }
    }
    result
}

/// Recomputes the metrics of a logged run.
pub fn cmd_replay(log_path: impl AsRef<Path>) -> Result<MetricsReport> {
    report(&EventLog::read_path(log_path)?)
}

pub fn replay_json(report: &MetricsReport) -> Result<String> {
    report_json(report)
}

/// Loads and validates a scenario file, returning a one-paragraph summary.
pub fn cmd_validate(path: impl AsRef<Path>) -> Result<String> {
    let scenario = load_scenario_file(path)?;
    let mut out = format!("valid: {scenario}\n");
    for r in &scenario.routes {
        let _ = writeln!(
            out,
            "  route {}: {:.1} m, {:.2} s, {} turn(s)",
            r.id,
            r.length(),
            r.duration(),
            r.maneuver_labels.iter().filter(|m| m.is_turn()).count()
        );
    }
    let _ = writeln!(out, "  horizon: {} s", scenario.params.t_max_s);
    Ok(out)
}
