use std::fs;

use v2i_handover::handover::{Breakdown, EventKind, EventLog, HandoverDetail, Scheme, StartDetail};
use v2i_handover::metrics::MetricsReport;
use v2i_handover::scenario::load_scenario_file;
use v2i_handover::sweep::{cells, cmd_replay, cmd_run, events_path, report_path, RouteSelection, RunSpec, SchemeSpec};

const CITY: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../../scenarios/city.json");

fn spec(out: std::path::PathBuf, routes: RouteSelection) -> RunSpec {
    RunSpec {
        scenario: CITY.into(),
        schemes: SchemeSpec::expand(&[Scheme::A3, Scheme::Distance, Scheme::Probability], &[1.0, 3.0]),
        values: vec![0, 8],
        seeds: vec![5, 6],
        routes,
        out,
    }
}

#[test]
fn sweep_writes_one_row_per_cell_and_replays_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let spec = spec(dir.path().join("all"), RouteSelection::All);
    let summary = cmd_run(&spec).unwrap();
    assert_eq!(summary.cells, 4 * 2 * 2 * 6);

    let aggregate = fs::read_to_string(&summary.aggregate).unwrap();
    assert_eq!(aggregate.lines().count(), 1 + summary.cells);
    let summary_rows = fs::read_to_string(&summary.summary).unwrap().lines().count();
    assert_eq!(summary_rows, 1 + 4 * 2);

    let scenario = load_scenario_file(CITY).unwrap();
    let grid = cells(&scenario, &spec.schemes, &spec.values, &spec.seeds, &spec.routes).unwrap();
    for cell in &grid {
        let stored: MetricsReport =
            serde_json::from_str(&fs::read_to_string(report_path(&spec.out, cell)).unwrap()).unwrap();
        let replayed = cmd_replay(events_path(&spec.out, cell)).unwrap();
        assert_eq!(replayed, stored, "{}", cell.stem());
    }
}

#[test]
fn random_routes_give_one_cell_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let first = cmd_run(&spec(dir.path().join("a"), RouteSelection::Random)).unwrap();
    let second = cmd_run(&spec(dir.path().join("b"), RouteSelection::Random)).unwrap();
    assert_eq!(first.cells, 4 * 2 * 2);
    assert_eq!(fs::read(&first.aggregate).unwrap(), fs::read(&second.aggregate).unwrap());
}

#[test]
fn unknown_route_leaves_no_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing");
    assert!(cmd_run(&spec(out.clone(), RouteSelection::Id("nowhere".into()))).is_err());
    assert!(!out.exists());
}

#[test]
fn three_handovers_over_forty_seconds() {
    let mut log = EventLog::default();
    let start = StartDetail {
        route: "r".into(),
        seed: 0,
        value: 4,
        rsrp_offset_db: 1.0,
        ctt: 4,
        ttt_periods: 0,
        duration_s: 40.0,
        dt_s: 0.02,
        bits_per_block: 8448,
    };
    log.push(0.0, EventKind::Start, Scheme::Probability, "g1", "", &start).unwrap();
    for (k, t) in [5.0, 15.0, 25.0].into_iter().enumerate() {
        let detail = HandoverDetail {
            trigger_time: t,
            command_time: t,
            interruption_start: t,
            interruption_end: t + 0.043,
            breakdown_ms: Breakdown { rrc_processing: 43.0, ..Breakdown::default() },
            dominant_maneuver: None,
        };
        log.push(t, EventKind::Handover, Scheme::Probability, &format!("g{}", k + 1), &format!("g{}", k + 2), &detail)
            .unwrap();
    }
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("three.events.csv");
    fs::write(&path, log.to_csv_string().unwrap()).unwrap();
    let report = cmd_replay(&path).unwrap();
    assert_eq!(report.handovers, 3);
    assert!((report.ho_rate - 0.075).abs() < 1e-12);
    assert!((report.interruption_percent - 0.3225).abs() < 1e-9);
}
