//! Scenario documents, ground-truth vehicle motion and line-of-sight tests.
//!
//! A scenario is a JSON document with four top-level keys:
//!
//! ```text
//! {
//!   "gnbs":     [{"id": "g1", "position": [x, y, z], "array": {"nx": 4, "ny": 4}}],
//!   "blockers": [{"min": [x, y, z], "max": [x, y, z]}],
//!   "routes":   [{"id": "r1", "waypoints": [[x, y, z], ...],
//!                 "segment_speeds": [15.0, ...], "maneuver_labels": ["left", ...]}],
//!   "params":   {"carrier_hz": 35e9, "dt_s": 0.02, "t_max_s": 40.0, ...}
//! }
//! ```
//!
//! Lengths are meters, speeds m/s, frequencies Hz, times seconds. Unknown keys
//! are rejected. `blockers` may be omitted; `params` must be present but every
//! field inside it has a default.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{LinkBudget, NoiseConfig};
use crate::geometry::UpaGeometry;
use crate::handover::{FrameTiming, TimingConfig, TrackerConfig};
use crate::tracking::Maneuver;
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("parse error at line {line}, column {column} (at `{path}`): {message}")]
    Parse { path: String, line: usize, column: usize, message: String },
    #[error("invalid scenario: {}", .violations.join("; "))]
    Invalid { violations: Vec<String> },
    #[error("time {t} s outside route `{route}` (duration {duration} s)")]
    TimeOutOfRange { route: String, t: f64, duration: f64 },
    #[error("cannot read {path}: {message}")]
    Read { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GnbNode {
    pub id: String,
    pub position: Vec3,
    #[serde(default = "default_gnb_array")]
    pub array: UpaGeometry,
}

fn default_gnb_array() -> UpaGeometry {
    UpaGeometry::new(4, 4)
}

/// Axis-aligned box that blocks line of sight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Blocker {
    pub min: Vec3,
    pub max: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteSpec {
    pub id: String,
    pub waypoints: Vec<Vec3>,
    pub segment_speeds: Option<Vec<f64>>,
    #[serde(default)]
    pub maneuver_labels: Vec<Maneuver>,
}

/// Global simulation parameters. Defaults follow the reference deployment:
/// 35 GHz carrier, 120 kHz subcarrier spacing, 208 RBs, 16-QAM, 20 ms
/// prediction interval and a 40 s horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimParams {
    pub carrier_hz: f64,
    pub subcarrier_spacing_hz: f64,
    pub dt_s: f64,
    pub t_max_s: f64,
    pub n_rb: u32,
    pub modulation_order: u32,
    pub ue_array: UpaGeometry,
    pub codebook_beams: usize,
    /// Half-width of the ground-truth maneuver window around each corner.
    pub turn_window_m: f64,
    pub bits_per_block: u32,
    pub noise: NoiseConfig,
    pub link: LinkBudget,
    pub timing: TimingConfig,
    pub frame: FrameTiming,
    pub tracker: TrackerConfig,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            carrier_hz: 35e9,
            subcarrier_spacing_hz: 120e3,
            dt_s: 0.02,
            t_max_s: 40.0,
            n_rb: 208,
            modulation_order: 4,
            ue_array: UpaGeometry::new(2, 2),
            codebook_beams: 8,
            turn_window_m: 10.0,
            bits_per_block: 8448,
            noise: NoiseConfig::default(),
            link: LinkBudget::default(),
            timing: TimingConfig::default(),
            frame: FrameTiming::default(),
            tracker: TrackerConfig::default(),
        }
    }
}

impl SimParams {
    /// Occupied bandwidth `N_RB · 12 · Δf`.
    pub fn bandwidth_hz(&self) -> f64 {
        self.n_rb as f64 * 12.0 * self.subcarrier_spacing_hz
    }

    /// Slot length for the configured numerology (`1 ms · 15 kHz / Δf`).
    pub fn slot_duration_s(&self) -> f64 {
        1e-3 * 15e3 / self.subcarrier_spacing_hz
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioDoc {
    gnbs: Vec<GnbNode>,
    #[serde(default)]
    blockers: Vec<Blocker>,
    routes: Vec<RouteSpec>,
    params: SimParams,
}

/// Ground-truth kinematics at one instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub active_maneuver: Maneuver,
}

/// A validated waypoint route with precomputed segment timing.
#[derive(Debug, Clone, PartialEq)]
pub struct Route {
    pub id: String,
    pub waypoints: Vec<Vec3>,
    pub segment_speeds: Vec<f64>,
    pub maneuver_labels: Vec<Maneuver>,
    /// Cumulative path length at each waypoint.
    arc: Vec<f64>,
    /// Cumulative time at each waypoint.
    time: Vec<f64>,
}

impl Route {
    /// Builds a route; all waypoints are flattened onto the altitude of the
    /// first one.
    pub fn new(
        id: impl Into<String>,
        waypoints: Vec<Vec3>,
        segment_speeds: Vec<f64>,
        maneuver_labels: Vec<Maneuver>,
    ) -> Result<Self, ScenarioError> {
        let id = id.into();
        let mut violations = Vec::new();
        if waypoints.len() < 2 {
            violations.push(format!("route `{id}`: needs at least 2 waypoints"));
        }
        let segments = waypoints.len().saturating_sub(1);
        if segment_speeds.len() != segments {
            violations.push(format!("route `{id}`: expected {segments} segment speeds, got {}", segment_speeds.len()));
        }
        if segment_speeds.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            violations.push(format!("route `{id}`: segment speeds must be positive"));
        }
        if maneuver_labels.len() != segments.saturating_sub(1) {
            violations.push(format!(
                "route `{id}`: expected {} maneuver labels, got {}",
                segments.saturating_sub(1),
                maneuver_labels.len()
            ));
        }
        if waypoints.iter().any(|w| !w.iter().all(|c| c.is_finite())) {
            violations.push(format!("route `{id}`: waypoints must be finite"));
        }
        if !violations.is_empty() {
            return Err(ScenarioError::Invalid { violations });
        }

        let z = waypoints[0].z;
        let waypoints: Vec<Vec3> = waypoints.into_iter().map(|w| Vec3::new(w.x, w.y, z)).collect();
        let mut arc = vec![0.0];
        let mut time = vec![0.0];
        for (k, pair) in waypoints.windows(2).enumerate() {
            let len = (pair[1] - pair[0]).norm();
            if len == 0.0 {
                violations.push(format!("route `{id}`: zero-length segment {k}"));
            }
            arc.push(arc[k] + len);
            time.push(time[k] + len / segment_speeds[k]);
        }
        for (k, label) in maneuver_labels.iter().enumerate() {
            if violations.is_empty() {
                let geometric = turn_direction(&waypoints[k], &waypoints[k + 1], &waypoints[k + 2]);
                if geometric != Maneuver::Straight && geometric != *label {
                    violations
                        .push(format!("route `{id}`: waypoint {} is labelled {label} but turns {geometric}", k + 1));
                }
            }
        }
        if !violations.is_empty() {
            return Err(ScenarioError::Invalid { violations });
        }
        Ok(Self { id, waypoints, segment_speeds, maneuver_labels, arc, time })
    }

    /// Route with every interior corner labelled from its geometry.
    pub fn with_geometric_labels(
        id: impl Into<String>,
        waypoints: Vec<Vec3>,
        speed: f64,
    ) -> Result<Self, ScenarioError> {
        let labels = waypoints.windows(3).map(|w| turn_direction(&w[0], &w[1], &w[2])).collect();
        let speeds = vec![speed; waypoints.len().saturating_sub(1)];
        Self::new(id, waypoints, speeds, labels)
    }

    pub fn duration(&self) -> f64 {
        *self.time.last().unwrap()
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().unwrap()
    }

    /// Time at which the vehicle reaches interior waypoint `k` (1-based into
    /// `waypoints`).
    pub fn corner_time(&self, k: usize) -> f64 {
        self.time[k]
    }

    /// Ground truth at time `t`. Turns are instantaneous at the waypoints;
    /// the maneuver label of a corner is active from `turn_window` meters
    /// before it to `turn_window` meters after it.
    pub fn sample(&self, t: f64, turn_window: f64) -> Result<TruthState, ScenarioError> {
        let duration = self.duration();
        if !(0.0..=duration).contains(&t) {
            return Err(ScenarioError::TimeOutOfRange { route: self.id.clone(), t, duration });
        }
        // segment k covers [time[k], time[k+1])
        let seg = match self.time.iter().rposition(|&tk| tk <= t) {
            Some(k) => k.min(self.segment_speeds.len() - 1),
            None => 0,
        };
        let a = self.waypoints[seg];
        let b = self.waypoints[seg + 1];
        let dir = (b - a) / (b - a).norm();
        let speed = self.segment_speeds[seg];
        let along = (t - self.time[seg]) * speed;
        let position = a + dir * along;
        let s = self.arc[seg] + along;

        let mut active = Maneuver::Straight;
        for (k, label) in self.maneuver_labels.iter().enumerate() {
            if (s - self.arc[k + 1]).abs() <= turn_window {
                active = *label;
                break;
            }
        }
        Ok(TruthState { t, position, velocity: dir * speed, active_maneuver: active })
    }
}

/// Classifies the corner `b` of the polyline `a → b → c` for a ground vehicle
/// (x east, y north, z up). Direction changes below 30° count as straight.
pub fn turn_direction(a: &Vec3, b: &Vec3, c: &Vec3) -> Maneuver {
    let u = b - a;
    let w = c - b;
    let cross = u.x * w.y - u.y * w.x;
    let dot = u.x * w.x + u.y * w.y;
    let angle = cross.atan2(dot);
    if angle.abs() < 30f64.to_radians() {
        Maneuver::Straight
    } else if angle > 0.0 {
        Maneuver::Left
    } else {
        Maneuver::Right
    }
}

/// Sample the trajectory of `route` at `t` with the default turn window.
pub fn sample_trajectory(route: &Route, t: f64) -> Result<TruthState, ScenarioError> {
    route.sample(t, SimParams::default().turn_window_m)
}

/// True iff the open segment `(a, b)` passes through any blocker.
pub fn los_blocked(a: &Vec3, b: &Vec3, blockers: &[Blocker]) -> bool {
    blockers.iter().any(|bx| segment_hits_box(a, b, bx))
}

fn segment_hits_box(a: &Vec3, b: &Vec3, bx: &Blocker) -> bool {
    let d = b - a;
    let mut t_enter = 0.0f64;
    let mut t_exit = 1.0f64;
    for axis in 0..3 {
        let (lo, hi) = (bx.min[axis], bx.max[axis]);
        if d[axis] == 0.0 {
            if a[axis] <= lo || a[axis] >= hi {
                return false;
            }
            continue;
        }
        let t0 = (lo - a[axis]) / d[axis];
        let t1 = (hi - a[axis]) / d[axis];
        let (t0, t1) = if t0 <= t1 { (t0, t1) } else { (t1, t0) };
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter >= t_exit {
            return false;
        }
    }
    true
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub gnbs: Vec<GnbNode>,
    pub blockers: Vec<Blocker>,
    pub routes: Vec<Route>,
    pub params: SimParams,
}

impl Scenario {
    pub fn new(
        gnbs: Vec<GnbNode>,
        blockers: Vec<Blocker>,
        routes: Vec<Route>,
        params: SimParams,
    ) -> Result<Self, ScenarioError> {
        let scenario = Self { gnbs, blockers, routes, params };
        let violations = scenario.violations();
        if violations.is_empty() {
            Ok(scenario)
        } else {
            Err(ScenarioError::Invalid { violations })
        }
    }

    fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.gnbs.is_empty() {
            v.push("gnbs: at least one gNB is required".to_string());
        }
        if self.routes.is_empty() {
            v.push("routes: at least one route is required".to_string());
        }
        let mut ids = HashSet::new();
        for g in &self.gnbs {
            if !ids.insert(g.id.as_str()) {
                v.push(format!("gnbs: duplicate id `{}`", g.id));
            }
            if !g.position.iter().all(|c| c.is_finite()) {
                v.push(format!("gnbs: `{}` has a non-finite position", g.id));
            }
            if g.array.nx == 0 || g.array.ny == 0 {
                v.push(format!("gnbs: `{}` array needs nx, ny >= 1", g.id));
            }
        }
        let mut route_ids = HashSet::new();
        for r in &self.routes {
            if !route_ids.insert(r.id.as_str()) {
                v.push(format!("routes: duplicate id `{}`", r.id));
            }
        }
        for (k, b) in self.blockers.iter().enumerate() {
            if (0..3).any(|i| b.min[i] > b.max[i]) {
                v.push(format!("blockers[{k}]: min must not exceed max"));
            }
        }
        let p = &self.params;
        if !(p.dt_s > 0.0) {
            v.push("params.dt_s: must be positive".into());
        }
        if !(p.t_max_s > 0.0) {
            v.push("params.t_max_s: must be positive".into());
        }
        if !(p.carrier_hz > 0.0) {
            v.push("params.carrier_hz: must be positive".into());
        }
        if !(p.subcarrier_spacing_hz > 0.0) {
            v.push("params.subcarrier_spacing_hz: must be positive".into());
        }
        if p.n_rb == 0 {
            v.push("params.n_rb: must be positive".into());
        }
        if ![2, 4, 6].contains(&p.modulation_order) {
            v.push("params.modulation_order: must be 2, 4 or 6".into());
        }
        if p.codebook_beams == 0 {
            v.push("params.codebook_beams: must be positive".into());
        }
        if !(p.turn_window_m >= 0.0) {
            v.push("params.turn_window_m: must be non-negative".into());
        }
        if p.ue_array.nx == 0 || p.ue_array.ny == 0 {
            v.push("params.ue_array: nx, ny must be >= 1".into());
        }
        v.extend(p.noise.violations().into_iter().map(|m| format!("params.noise.{m}")));
        v.extend(p.link.violations().into_iter().map(|m| format!("params.link.{m}")));
        v.extend(p.timing.violations().into_iter().map(|m| format!("params.timing.{m}")));
        v.extend(p.frame.violations().into_iter().map(|m| format!("params.frame.{m}")));
        v.extend(p.tracker.violations().into_iter().map(|m| format!("params.tracker.{m}")));
        v
    }

    pub fn gnb(&self, id: &str) -> Option<&GnbNode> {
        self.gnbs.iter().find(|g| g.id == id)
    }

    pub fn gnb_index(&self, id: &str) -> Option<usize> {
        self.gnbs.iter().position(|g| g.id == id)
    }

    pub fn route(&self, id: &str) -> Option<&Route> {
        self.routes.iter().find(|r| r.id == id)
    }

    /// Uniform choice over routes.
    pub fn pick_route<R: Rng + ?Sized>(&self, rng: &mut R) -> &Route {
        &self.routes[rng.random_range(0..self.routes.len())]
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} gNBs, {} routes", self.gnbs.len(), self.routes.len())
    }
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: ScenarioDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = match e.path().to_string() {
            p if p == "." => "document root".to_string(),
            p => p,
        };
        let inner = e.into_inner();
        ScenarioError::Parse {
            path,
            line: inner.line(),
            column: inner.column(),
            message: strip_position(&inner.to_string()),
        }
    })?;

    let mut violations = Vec::new();
    let mut routes = Vec::new();
    for spec in doc.routes {
        let Some(speeds) = spec.segment_speeds else {
            violations.push(format!("route `{}`: missing segment_speeds", spec.id));
            continue;
        };
        match Route::new(spec.id, spec.waypoints, speeds, spec.maneuver_labels) {
            Ok(r) => routes.push(r),
            Err(ScenarioError::Invalid { violations: v }) => violations.extend(v),
            Err(e) => violations.push(e.to_string()),
        }
    }
    let scenario = Scenario { gnbs: doc.gnbs, blockers: doc.blockers, routes, params: doc.params };
    violations.extend(scenario.violations());
    if violations.is_empty() {
        Ok(scenario)
    } else {
        Err(ScenarioError::Invalid { violations })
    }
}

pub fn load_scenario_file(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ScenarioError::Read { path: path.display().to_string(), message: e.to_string() })?;
    load_scenario(&text)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Small programmatic scenarios used by tests and examples.
pub mod synthetic {
    use super::*;

    /// Straight east-west road at `y = 0` with gNBs every `spacing` meters,
    /// `offset` meters north of the road at `height`.
    pub fn straight_road(n_gnbs: usize, spacing: f64, offset: f64, height: f64, speed: f64, length: f64) -> Scenario {
        let gnbs = (0..n_gnbs)
            .map(|k| GnbNode {
                id: format!("g{}", k + 1),
                position: Vec3::new(k as f64 * spacing, offset, height),
                array: UpaGeometry::new(4, 4),
            })
            .collect();
        let route = Route::new(
            "straight",
            vec![Vec3::new(-20.0, 0.0, 1.5), Vec3::new(length - 20.0, 0.0, 1.5)],
            vec![speed],
            vec![],
        )
        .expect("valid straight route");
        let params = SimParams { t_max_s: route.duration(), ..SimParams::default() };
        Scenario::new(gnbs, vec![], vec![route], params).expect("valid synthetic scenario")
    }

    /// Four-way intersection at the origin. The vehicle approaches from the
    /// east heading west, passes the serving gNB and takes `maneuver` at the
    /// corner. Candidates sit on each exit road.
    pub fn intersection(maneuver: Maneuver, speed: f64) -> Scenario {
        let gnbs = vec![
            GnbNode { id: "s".into(), position: Vec3::new(40.0, -12.0, 8.0), array: UpaGeometry::new(4, 4) },
            GnbNode { id: "west".into(), position: Vec3::new(-120.0, -12.0, 8.0), array: UpaGeometry::new(4, 4) },
            GnbNode { id: "north".into(), position: Vec3::new(-12.0, 120.0, 8.0), array: UpaGeometry::new(4, 4) },
            GnbNode { id: "south".into(), position: Vec3::new(12.0, -120.0, 8.0), array: UpaGeometry::new(4, 4) },
        ];
        let exit = match maneuver {
            Maneuver::Straight => Vec3::new(-150.0, 0.0, 1.5),
            Maneuver::Right => Vec3::new(0.0, 150.0, 1.5),
            Maneuver::Left => Vec3::new(0.0, -150.0, 1.5),
        };
        let route = Route::new(
            "crossing",
            vec![Vec3::new(150.0, 0.0, 1.5), Vec3::zeros() + Vec3::new(0.0, 0.0, 1.5), exit],
            vec![speed, speed],
            vec![maneuver],
        )
        .expect("valid intersection route");
        let params = SimParams { t_max_s: route.duration(), ..SimParams::default() };
        Scenario::new(gnbs, vec![], vec![route], params).expect("valid synthetic scenario")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const MINIMAL: &str = r#"{
        "gnbs": [{"id": "g1", "position": [0, 0, 10]}],
        "routes": [{"id": "r1", "waypoints": [[0, 0, 1.5], [100, 0, 1.5]], "segment_speeds": [15]}],
        "params": {}
    }"#;

    #[test]
    fn minimal_document_gets_defaults() {
        let s = load_scenario(MINIMAL).unwrap();
        assert_eq!(s.gnbs.len(), 1);
        assert_eq!(s.gnbs[0].array, UpaGeometry::new(4, 4));
        assert_eq!(s.params, SimParams::default());
        assert_relative_eq!(s.routes[0].duration(), 100.0 / 15.0);
    }

    #[test]
    fn missing_speed_names_route() {
        let doc = MINIMAL.replace(r#", "segment_speeds": [15]"#, "");
        match load_scenario(&doc) {
            Err(ScenarioError::Invalid { violations }) => {
                assert!(violations.iter().any(|v| v.contains("r1") && v.contains("segment_speeds")), "{violations:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_key_is_parse_error_with_locus() {
        let doc = MINIMAL.replace(r#""params": {}"#, r#""params": {"dt_s": 0.02, "bogus": 1}"#);
        match load_scenario(&doc) {
            Err(ScenarioError::Parse { path, line, message, .. }) => {
                assert!(path.starts_with("params"), "{path}");
                assert_eq!(line, 4);
                assert!(message.contains("bogus"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn missing_params_is_named() {
        let doc = r#"{"gnbs": [{"id": "g1", "position": [0, 0, 10]}],
            "routes": [{"id": "r1", "waypoints": [[0, 0, 0], [1, 0, 0]], "segment_speeds": [1]}]}"#;
        let err = load_scenario(doc).unwrap_err();
        assert!(err.to_string().contains("missing field `params`"), "{err}");
    }

    #[test]
    fn invalid_values_are_collected() {
        let doc = MINIMAL.replace(r#""params": {}"#, r#""params": {"dt_s": -1, "t_max_s": 0}"#);
        match load_scenario(&doc) {
            Err(ScenarioError::Invalid { violations }) => assert_eq!(violations.len(), 2, "{violations:?}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mislabelled_turn_rejected() {
        let r = Route::new(
            "l",
            vec![Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0), Vec3::new(100.0, 100.0, 0.0)],
            vec![10.0, 10.0],
            vec![Maneuver::Right],
        );
        assert!(matches!(r, Err(ScenarioError::Invalid { .. })));
    }

    #[test]
    fn trajectory_examples() {
        let r = Route::new("a", vec![Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0)], vec![10.0], vec![]).unwrap();
        let s0 = r.sample(0.0, 10.0).unwrap();
        assert_eq!(s0.position, Vec3::zeros());
        assert_eq!(s0.velocity, Vec3::new(10.0, 0.0, 0.0));
        let s = r.sample(5.0, 10.0).unwrap();
        assert_relative_eq!(s.position, Vec3::new(50.0, 0.0, 0.0));

        let l = Route::with_geometric_labels(
            "l",
            vec![Vec3::zeros(), Vec3::new(100.0, 0.0, 0.0), Vec3::new(100.0, 100.0, 0.0)],
            10.0,
        )
        .unwrap();
        assert_eq!(l.maneuver_labels, vec![Maneuver::Left]);
        let s = l.sample(12.0, 10.0).unwrap();
        assert_relative_eq!(s.position, Vec3::new(100.0, 20.0, 0.0), epsilon = 1e-12);
        assert_relative_eq!(s.velocity, Vec3::new(0.0, 10.0, 0.0));
        assert_eq!(s.active_maneuver, Maneuver::Straight);
        assert_eq!(l.sample(9.5, 10.0).unwrap().active_maneuver, Maneuver::Left);
        assert_eq!(l.sample(10.9, 10.0).unwrap().active_maneuver, Maneuver::Left);
        assert_eq!(l.sample(8.9, 10.0).unwrap().active_maneuver, Maneuver::Straight);
        assert!(matches!(l.sample(20.5, 10.0), Err(ScenarioError::TimeOutOfRange { .. })));
        assert!(l.sample(20.0, 10.0).is_ok());
    }

    #[test]
    fn altitude_follows_first_waypoint() {
        let r = Route::new("z", vec![Vec3::new(0.0, 0.0, 1.5), Vec3::new(10.0, 0.0, 7.0)], vec![1.0], vec![]).unwrap();
        assert_eq!(r.sample(5.0, 0.0).unwrap().position.z, 1.5);
    }

    #[test]
    fn los_examples() {
        let b = Blocker { min: Vec3::new(4.0, -1.0, -1.0), max: Vec3::new(6.0, 1.0, 1.0) };
        let a = Vec3::zeros();
        let far = Vec3::new(10.0, 0.0, 0.0);
        assert!(!los_blocked(&a, &far, &[]));
        assert!(los_blocked(&a, &far, &[b]));
        assert!(!los_blocked(&Vec3::new(0.0, 5.0, 0.0), &Vec3::new(10.0, 5.0, 0.0), &[b]));
        // segment ending before the box
        assert!(!los_blocked(&a, &Vec3::new(3.9, 0.0, 0.0), &[b]));
        // diagonal through a corner region
        assert!(los_blocked(&Vec3::new(0.0, -3.0, 0.0), &Vec3::new(10.0, 3.0, 0.0), &[b]));
    }

    #[test]
    fn synthetic_builders_are_valid() {
        for m in [Maneuver::Straight, Maneuver::Left, Maneuver::Right] {
            let s = synthetic::intersection(m, 15.0);
            assert_eq!(s.routes[0].maneuver_labels, vec![m]);
        }
        let s = synthetic::straight_road(2, 200.0, 10.0, 8.0, 15.0, 240.0);
        assert_eq!(s.gnbs.len(), 2);
    }
}
