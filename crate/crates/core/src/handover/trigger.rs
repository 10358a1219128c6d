//! Event A3, distance-triggering and probability-triggering state machines.

use nalgebra::Vector3;

use super::TriggerConfig;
use crate::geometry::wrap_angle;
use crate::scenario::GnbNode;
use crate::tracking::{HeadingFrame, Maneuver};
use crate::Vec3;

/// Consecutive-confirmation counters of all three schemes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TriggerCounters {
    /// Time-to-trigger timers per gNB, in SS-burst periods.
    pub a3: Vec<u32>,
    /// Distance-triggering counters per gNB.
    pub dtc: Vec<u32>,
    /// Probability-triggering counters per maneuver.
    pub ptc: [u32; 3],
}

impl TriggerCounters {
    pub fn new(n_gnbs: usize) -> Self {
        Self { a3: vec![0; n_gnbs], dtc: vec![0; n_gnbs], ptc: [0; 3] }
    }

    pub fn reset(&mut self) {
        self.a3.iter_mut().for_each(|c| *c = 0);
        self.dtc.iter_mut().for_each(|c| *c = 0);
        self.ptc = [0; 3];
    }
}

fn threshold(count: u32) -> u32 {
    count.max(1)
}

/// One SS-burst sample of Event A3. `candidates` pairs gNB indices with
/// their RSRP (dBm) in scenario order; returns the first candidate whose
/// timer reaches the time to trigger.
pub fn a3_step(
    serving_rsrp: f64,
    candidates: &[(usize, f64)],
    cfg: &TriggerConfig,
    counters: &mut TriggerCounters,
) -> Option<usize> {
    let mut fired = None;
    for &(k, rsrp) in candidates {
        if rsrp > serving_rsrp + cfg.rsrp_offset_db {
            counters.a3[k] += 1;
            if fired.is_none() && counters.a3[k] >= threshold(cfg.ttt_periods) {
                fired = Some(k);
            }
        } else {
            counters.a3[k] = 0;
        }
    }
    fired
}

/// One measurement of the distance scheme. `candidates` pairs gNB indices
/// with the estimated candidate-to-UE distance.
pub fn distance_step(
    serving_distance: f64,
    candidates: &[(usize, f64)],
    cfg: &TriggerConfig,
    counters: &mut TriggerCounters,
) -> Option<usize> {
    let mut fired = None;
    for &(k, d) in candidates {
        if d + cfg.d_offset_m < serving_distance {
            counters.dtc[k] += 1;
            if fired.is_none() && counters.dtc[k] >= threshold(cfg.ctt) {
                fired = Some(k);
            }
        } else {
            counters.dtc[k] = 0;
        }
    }
    fired
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityOutcome {
    pub dominant: Maneuver,
    pub trigger: Option<usize>,
    pub warning: Option<String>,
}

/// One measurement of the probability scheme.
///
/// `aligned[m]` is the candidate aligned with maneuver `m` and its estimated
/// distance to the UE. Counters hold while the vehicle is not receding.
pub fn probability_step(
    probabilities: &Vector3<f64>,
    aligned: &[Option<(usize, f64)>; 3],
    serving_distance: f64,
    cfg: &TriggerConfig,
    counters: &mut TriggerCounters,
    receding: bool,
) -> ProbabilityOutcome {
    let dominant = Maneuver::from_index(probabilities.imax()).unwrap_or_default();
    let mut out = ProbabilityOutcome { dominant, trigger: None, warning: None };
    if !receding {
        return out;
    }
    let idx = dominant.index();
    if dominant.is_turn() {
        for m in Maneuver::ALL {
            if m != dominant {
                counters.ptc[m.index()] = 0;
            }
        }
        counters.ptc[idx] += 1;
    } else {
        counters.ptc[Maneuver::Left.index()] = 0;
        counters.ptc[Maneuver::Right.index()] = 0;
        match aligned[idx] {
            Some((_, d)) if d + cfg.d_offset_m < serving_distance => counters.ptc[idx] += 1,
            _ => counters.ptc[idx] = 0,
        }
    }
    if counters.ptc[idx] >= threshold(cfg.ctt) {
        match aligned[idx] {
            Some((k, _)) => out.trigger = Some(k),
            None => {
                counters.ptc[idx] = 0;
                out.warning = Some(format!("no candidate aligned with the {dominant} maneuver"));
            }
        }
    }
    out
}

/// Candidate per maneuver: the nearest gNB whose horizontal bearing from the
/// estimated UE position lies within `max_angle` radians of the maneuver's
/// exit heading.
pub fn align_candidates(
    ue_estimate: &Vec3,
    frame: &HeadingFrame<f64>,
    gnbs: &[GnbNode],
    serving: usize,
    max_angle: f64,
) -> [Option<usize>; 3] {
    Maneuver::ALL.map(|m| {
        let heading = frame.heading_after(m);
        gnbs.iter()
            .enumerate()
            .filter(|&(k, _)| k != serving)
            .filter_map(|(k, g)| {
                let rel = g.position - ue_estimate;
                if rel.x == 0.0 && rel.y == 0.0 {
                    return None;
                }
                let angle = wrap_angle(rel.y.atan2(rel.x) - heading).abs();
                (angle <= max_angle).then_some((k, rel.x.hypot(rel.y)))
            })
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|(k, _)| k)
    })
}
