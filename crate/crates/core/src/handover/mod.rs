//! Handover triggering engines, protocol timing and the simulation loop.

mod log;
mod sim;
mod timing;
mod tracker;
mod trigger;

use std::fmt;
use std::str::FromStr;

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

pub use log::{EventKind, EventLog, EventRecord, HandoverDetail, StartDetail, StepDetail};
pub use sim::{simulate, simulate_route};
pub use timing::{
    classic_breakdown, classic_interruption, next_slot_start, sensing_breakdown, sensing_interruption, Breakdown,
    SlotKind,
};
pub use tracker::{BlockOutput, MeasurementOutput, SensingTracker};
pub use trigger::{a3_step, align_candidates, distance_step, probability_step, ProbabilityOutcome, TriggerCounters};

use crate::tracking::{ImmConfig, Maneuver};

/// Handover triggering scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    A3,
    Distance,
    Probability,
}

impl Scheme {
    pub const ALL: [Scheme; 3] = [Scheme::A3, Scheme::Distance, Scheme::Probability];

    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::A3 => "a3",
            Scheme::Distance => "distance",
            Scheme::Probability => "probability",
        }
    }

    pub fn is_sensing(self) -> bool {
        self != Scheme::A3
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a3" => Ok(Scheme::A3),
            "distance" => Ok(Scheme::Distance),
            "probability" => Ok(Scheme::Probability),
            other => Err(format!("unknown scheme `{other}` (expected a3, distance or probability)")),
        }
    }
}

/// Frame structure: DRX, SS bursts, TDD pattern and the radar measurement
/// cadence inside each DRX on-duration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FrameTiming {
    pub drx_cycle_ms: f64,
    pub on_duration_ms: f64,
    pub ss_burst_period_ms: f64,
    pub tdd_pattern: String,
    pub measurements_per_block: u8,
    pub measurement_spacing_ms: f64,
}

impl Default for FrameTiming {
    fn default() -> Self {
        Self {
            drx_cycle_ms: 10.0,
            on_duration_ms: 5.0,
            ss_burst_period_ms: 20.0,
            tdd_pattern: "DDDDDDDSUU".into(),
            measurements_per_block: 4,
            measurement_spacing_ms: 1.25,
        }
    }
}

impl FrameTiming {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.drx_cycle_ms > 0.0) {
            v.push("drx_cycle_ms: must be positive".into());
        }
        if !(self.on_duration_ms > 0.0 && self.on_duration_ms <= self.drx_cycle_ms) {
            v.push("on_duration_ms: must be positive and at most drx_cycle_ms".into());
        }
        if !(self.ss_burst_period_ms > 0.0) {
            v.push("ss_burst_period_ms: must be positive".into());
        }
        let p = &self.tdd_pattern;
        if p.len() != 10 || p.matches('S').count() != 1 || !p.chars().all(|c| matches!(c, 'D' | 'S' | 'U')) {
            v.push("tdd_pattern: must be 10 slots of D/S/U with exactly one S".into());
        }
        if !p.contains('U') || !p.contains('D') {
            v.push("tdd_pattern: needs at least one D and one U slot".into());
        }
        if self.measurements_per_block == 0 {
            v.push("measurements_per_block: must be at least 1".into());
        }
        let span = self.measurement_spacing_ms * (self.measurements_per_block.max(1) - 1) as f64;
        if !(self.measurement_spacing_ms >= 0.0 && span <= self.on_duration_ms) {
            v.push("measurement_spacing_ms: measurements must fit inside the on-duration".into());
        }
        v
    }

    pub fn slot_kind(&self, slot: u64) -> SlotKind {
        let c = self.tdd_pattern.as_bytes()[(slot % self.tdd_pattern.len() as u64) as usize];
        match c {
            b'D' => SlotKind::Downlink,
            b'U' => SlotKind::Uplink,
            _ => SlotKind::Special,
        }
    }
}

/// Durations of the handover protocol steps.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingConfig {
    pub rrc_processing_ms: f64,
    pub smtc_period_ms: f64,
    pub ue_processing_ms: f64,
    pub prach_period_ms: f64,
    /// PRACH configuration index, carried as metadata.
    pub prach_config_index: u32,
    pub msg_a_slots: u32,
    pub msg_b_slots: u32,
    pub msg_b_response_window_slots: u32,
    pub rrc_complete_slots: u32,
    /// Inter-gNB handover request/acknowledge before the A3 command.
    pub network_decision_ms: f64,
}

impl Default for TimingConfig {
    fn default() -> Self {
        Self {
            rrc_processing_ms: 10.0,
            smtc_period_ms: 20.0,
            ue_processing_ms: 5.0,
            prach_period_ms: 10.0,
            prach_config_index: 70,
            msg_a_slots: 1,
            msg_b_slots: 1,
            msg_b_response_window_slots: 4,
            rrc_complete_slots: 8,
            network_decision_ms: 2.0,
        }
    }
}

impl TimingConfig {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, x) in [
            ("rrc_processing_ms", self.rrc_processing_ms),
            ("smtc_period_ms", self.smtc_period_ms),
            ("ue_processing_ms", self.ue_processing_ms),
            ("prach_period_ms", self.prach_period_ms),
        ] {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("{name}: must be positive"));
            }
        }
        if !(self.network_decision_ms >= 0.0 && self.network_decision_ms.is_finite()) {
            v.push("network_decision_ms: must be non-negative".into());
        }
        for (name, x) in [
            ("msg_a_slots", self.msg_a_slots),
            ("msg_b_slots", self.msg_b_slots),
            ("msg_b_response_window_slots", self.msg_b_response_window_slots),
            ("rrc_complete_slots", self.rrc_complete_slots),
        ] {
            if x == 0 {
                v.push(format!("{name}: must be positive"));
            }
        }
        v
    }
}

/// Filter tuning shared by the sensing schemes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackerConfig {
    /// Kalman process covariance as a multiple of the measurement covariance.
    pub kf_process_scale: f64,
    /// IMM process covariance as a multiple of the first observation covariance.
    pub imm_process_scale: f64,
    /// IMM process covariance scale for the velocity components.
    pub imm_velocity_process_scale: f64,
    /// Initial covariance as a multiple of the measurement covariance.
    pub init_scale: f64,
    /// Span of recent position estimates used to fix the IMM heading frame.
    pub heading_window_s: f64,
    /// Largest angle between a candidate's bearing and a maneuver's exit
    /// heading for the candidate to count as aligned.
    pub max_alignment_deg: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            kf_process_scale: 0.1,
            imm_process_scale: 0.003,
            imm_velocity_process_scale: 0.1,
            init_scale: 10.0,
            heading_window_s: 1.0,
            max_alignment_deg: 45.0,
        }
    }
}

impl TrackerConfig {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.kf_process_scale >= 0.0) {
            v.push("kf_process_scale: must be non-negative".into());
        }
        if !(self.imm_process_scale >= 0.0) {
            v.push("imm_process_scale: must be non-negative".into());
        }
        if !(self.imm_velocity_process_scale >= 0.0) {
            v.push("imm_velocity_process_scale: must be non-negative".into());
        }
        if !(self.init_scale > 0.0) {
            v.push("init_scale: must be positive".into());
        }
        if !(self.heading_window_s > 0.0) {
            v.push("heading_window_s: must be positive".into());
        }
        if !(self.max_alignment_deg > 0.0 && self.max_alignment_deg <= 180.0) {
            v.push("max_alignment_deg: must be in (0, 180]".into());
        }
        v
    }
}

/// Trigger parameters for one simulation run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TriggerConfig {
    pub scheme: Scheme,
    pub rsrp_offset_db: f64,
    /// Time to trigger in SS-burst periods.
    pub ttt_periods: u32,
    pub d_offset_m: f64,
    /// Counts to trigger for the sensing schemes.
    pub ctt: u32,
    pub p0: [f64; 3],
    pub varpi: [[f64; 3]; 3],
}

impl Default for TriggerConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::A3,
            rsrp_offset_db: 1.0,
            ttt_periods: 0,
            d_offset_m: 3.0,
            ctt: 0,
            p0: [0.75, 0.125, 0.125],
            varpi: [[0.90, 0.05, 0.05], [0.05, 0.90, 0.05], [0.05, 0.05, 0.90]],
        }
    }
}

impl TriggerConfig {
    pub fn a3(rsrp_offset_db: f64, ttt_periods: u32) -> Self {
        Self { scheme: Scheme::A3, rsrp_offset_db, ttt_periods, ..Self::default() }
    }

    pub fn distance(ctt: u32) -> Self {
        Self { scheme: Scheme::Distance, ctt, ..Self::default() }
    }

    pub fn probability(ctt: u32) -> Self {
        Self { scheme: Scheme::Probability, ctt, ..Self::default() }
    }

    /// The TTT (A3) or CTT (sensing) value of this configuration.
    pub fn value(&self) -> u32 {
        match self.scheme {
            Scheme::A3 => self.ttt_periods,
            _ => self.ctt,
        }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.rsrp_offset_db >= 0.0) {
            v.push("rsrp_offset_db: must be non-negative".into());
        }
        if !(self.d_offset_m >= 0.0) {
            v.push("d_offset_m: must be non-negative".into());
        }
        if self.p0.iter().any(|&p| !(p >= 0.0)) || (self.p0.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            v.push("p0: must lie on the probability simplex".into());
        }
        for (r, row) in self.varpi.iter().enumerate() {
            if row.iter().any(|&p| !(p >= 0.0)) || (row.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                v.push(format!("varpi[{r}]: row must be stochastic"));
            }
        }
        v
    }

    pub fn imm_config(&self, tracker: &TrackerConfig, dt: f64) -> ImmConfig<f64> {
        let w = &self.varpi;
        ImmConfig {
            p0: Vector3::from(self.p0),
            transition: Matrix3::new(w[0][0], w[0][1], w[0][2], w[1][0], w[1][1], w[1][2], w[2][0], w[2][1], w[2][2]),
            process_scale: tracker.imm_process_scale,
            velocity_process_scale: tracker.imm_velocity_process_scale,
            init_scale: tracker.init_scale,
            dt,
        }
    }
}

/// One executed handover.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandoverEvent {
    pub trigger_time: f64,
    pub command_time: f64,
    pub interruption_start: f64,
    pub interruption_end: f64,
    pub breakdown: Breakdown,
    pub source_gnb: String,
    pub target_gnb: String,
    pub scheme: Scheme,
    pub dominant_maneuver: Option<Maneuver>,
}

impl HandoverEvent {
    pub fn interruption_s(&self) -> f64 {
        self.interruption_end - self.interruption_start
    }
}
