//! Time-stepped simulation of one vehicle run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::log::{EventKind, EventLog, HandoverDetail, StartDetail, StepDetail};
use super::timing::{classic_interruption, next_slot_start, sensing_interruption, SlotKind};
use super::tracker::SensingTracker;
use super::trigger::{a3_step, align_candidates, distance_step, probability_step, TriggerCounters};
use super::{HandoverEvent, Scheme, TriggerConfig};
use crate::channel::{rsrp_with_shadowing, snr_to_ber, synthesize_measurement, Measurement};
use crate::error::{Error, Result};
use crate::geometry::{beam_gain, candidate_distance, cartesian_to_spherical, SphericalObs};
use crate::scenario::{los_blocked, Route, Scenario, TruthState};
use crate::tracking::Maneuver;
use crate::Vec3;

const STREAM_MEASUREMENT: u64 = 1;
const STREAM_SHADOWING: u64 = 2;
const STREAM_TIMING: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Beam directions of the gNB codebook: `n` beams uniform in `sin θ`, at
/// zero elevation.
pub fn codebook(n: usize) -> Vec<SphericalObs<f64>> {
    (0..n)
        .map(|k| {
            let u = -1.0 + (2 * k + 1) as f64 / n as f64;
            SphericalObs::direction(u.asin(), 0.0)
        })
        .collect()
}

struct Link<'a> {
    scenario: &'a Scenario,
    codebook: Vec<SphericalObs<f64>>,
    shadowing: Vec<f64>,
}

impl Link<'_> {
    fn rsrp(&self, k: usize, position: &Vec3, beam: &SphericalObs<f64>) -> Result<(f64, bool)> {
        let gnb = &self.scenario.gnbs[k];
        let p = &self.scenario.params;
        let blocked = los_blocked(&gnb.position, position, &self.scenario.blockers);
        let rsrp = rsrp_with_shadowing(gnb, position, beam, blocked, &p.link, p.carrier_hz, self.shadowing[k])?;
        Ok((rsrp, blocked))
    }

    fn best_beam(&self, k: usize, position: &Vec3) -> Result<usize> {
        let gnb = &self.scenario.gnbs[k];
        let los = cartesian_to_spherical(&gnb.position, position)?;
        let gains: Vec<f64> = self.codebook.iter().map(|b| beam_gain(gnb.array, b, &los)).collect();
        Ok((0..gains.len()).fold(0, |best, i| if gains[i] > gains[best] { i } else { best }))
    }

    fn codebook_rsrp(&self, k: usize, position: &Vec3) -> Result<(f64, bool, usize)> {
        let beam = self.best_beam(k, position)?;
        let (rsrp, blocked) = self.rsrp(k, position, &self.codebook[beam])?;
        Ok((rsrp, blocked, beam))
    }

    fn advance_shadowing<R: Rng>(&mut self, moved: f64, rng: &mut R) {
        let link = &self.scenario.params.link;
        let rho = (-moved / link.shadowing_decorrelation_m).exp();
        let innovation = (1.0 - rho * rho).max(0.0).sqrt() * link.shadowing_sigma_db;
        for s in &mut self.shadowing {
            let z: f64 = rng.sample(StandardNormal);
            *s = rho * *s + innovation * z;
        }
    }
}

struct Pending {
    event: HandoverEvent,
    target: usize,
}

/// Simulates `route_id` of `scenario` under `trigger`, fully determined by
/// `seed`.
pub fn simulate(scenario: &Scenario, route_id: &str, trigger: &TriggerConfig, seed: u64) -> Result<EventLog> {
    let route = scenario.route(route_id).ok_or_else(|| Error::UnknownRoute(route_id.to_string()))?;
    simulate_route(scenario, route, trigger, seed)
}

pub fn simulate_route(scenario: &Scenario, route: &Route, trigger: &TriggerConfig, seed: u64) -> Result<EventLog> {
    let violations = trigger.violations();
    if !violations.is_empty() {
        return Err(Error::Config(violations.join("; ")));
    }
    let p = &scenario.params;
    let frame = &p.frame;
    let scheme = trigger.scheme;
    let dt = p.dt_s;
    let duration = p.t_max_s.min(route.duration());
    let n_blocks = ((duration / dt) - 1e-9).ceil().max(1.0) as u64;
    let slot_s = p.slot_duration_s();
    let slot_ms = slot_s * 1e3;
    let ss_period = frame.ss_burst_period_ms * 1e-3;
    let spacing = frame.measurement_spacing_ms * 1e-3;
    let ue_gain_db = 10.0 * (p.ue_array.elements() as f64).log10();
    let noise_floor = p.link.noise_floor_dbm(p.bandwidth_hz());

    let mut meas_rng = stream(seed, STREAM_MEASUREMENT);
    let mut shadow_rng = stream(seed, STREAM_SHADOWING);
    let mut timing_rng = stream(seed, STREAM_TIMING);

    let sigma = p.link.shadowing_sigma_db;
    let shadowing = (0..scenario.gnbs.len()).map(|_| sigma * shadow_rng.sample::<f64, _>(StandardNormal)).collect();
    let mut link = Link { scenario, codebook: codebook(p.codebook_beams), shadowing };

    let start_truth = route.sample(0.0, p.turn_window_m)?;
    let mut serving = 0;
    let mut best = f64::NEG_INFINITY;
    for k in 0..scenario.gnbs.len() {
        let (rsrp, _, _) = link.codebook_rsrp(k, &start_truth.position)?;
        if rsrp > best {
            best = rsrp;
            serving = k;
        }
    }

    let mut log = EventLog::default();
    let start = StartDetail {
        route: route.id.clone(),
        seed,
        value: trigger.value(),
        rsrp_offset_db: trigger.rsrp_offset_db,
        ctt: trigger.ctt,
        ttt_periods: trigger.ttt_periods,
        duration_s: duration,
        dt_s: dt,
        bits_per_block: p.bits_per_block,
    };
    log.push(0.0, EventKind::Start, scheme, &scenario.gnbs[serving].id, "", &start)?;

    let imm_cfg = (scheme == Scheme::Probability).then(|| trigger.imm_config(&p.tracker, dt));
    let mut tracker = scheme
        .is_sensing()
        .then(|| SensingTracker::new(scenario.gnbs[serving].position, p.noise, p.tracker.clone(), imm_cfg, dt));
    let mut counters = TriggerCounters::new(scenario.gnbs.len());
    let mut pending: Option<Pending> = None;
    let mut holdoff_until = f64::NEG_INFINITY;
    let mut last_position = start_truth.position;
    let mut warned = false;
    let max_alignment = p.tracker.max_alignment_deg.to_radians();

    for l in 0..n_blocks {
        let t = l as f64 * dt;
        let truth = route.sample(t, p.turn_window_m)?;

        if let Some(done) = pending.take_if(|h| t >= h.event.interruption_end) {
            serving = done.target;
            counters.reset();
            holdoff_until = done.event.interruption_end + ss_period;
            if let Some(tr) = tracker.as_mut() {
                tr.reset(scenario.gnbs[serving].position);
            }
        }
        let moved = (truth.position - last_position).norm();
        last_position = truth.position;
        if l > 0 {
            link.advance_shadowing(moved, &mut shadow_rng);
        }

        let steered = tracker.as_ref().and_then(|tr| tr.predicted_direction());
        let (beam, codebook_beam) = match steered {
            Some((theta, phi)) => (SphericalObs::direction(theta, phi), None),
            None => {
                let k = link.best_beam(serving, &truth.position)?;
                (link.codebook[k], Some(k))
            }
        };
        let (rsrp, blocked) = link.rsrp(serving, &truth.position, &beam)?;
        let snr_db = rsrp + ue_gain_db - noise_floor;
        let ber = snr_to_ber(snr_db, p.modulation_order, p.link.coding_gain_db)?;

        let can_trigger = scenario.gnbs.len() > 1 && pending.is_none() && t >= holdoff_until;
        let mut fired: Option<(f64, usize, Option<Maneuver>)> = None;
        let mut probabilities = None;
        let mut warning = None;

        match scheme {
            Scheme::A3 => {
                if can_trigger {
                    let serving_rsrp = link.codebook_rsrp(serving, &truth.position)?.0;
                    let mut candidates = Vec::with_capacity(scenario.gnbs.len() - 1);
                    for k in (0..scenario.gnbs.len()).filter(|&k| k != serving) {
                        candidates.push((k, link.codebook_rsrp(k, &truth.position)?.0));
                    }
                    if let Some(k) = a3_step(serving_rsrp, &candidates, trigger, &mut counters) {
                        fired = Some((t, k, None));
                    }
                }
            }
            Scheme::Distance | Scheme::Probability => {
                let anchor = scenario.gnbs[serving].position;
                let block = measure_block(route, &anchor, p, l, t, spacing, &mut meas_rng)?;
                let tr = tracker.as_mut().expect("sensing tracker");
                let out = tr.process_block(&block)?;
                if out.imm_dropped {
                    warning = Some("IMM restarted after a numerical failure".to_string());
                }
                probabilities = out.outputs.last().and_then(|o| o.probabilities).map(|p| [p[0], p[1], p[2]]);
                for o in &out.outputs {
                    if !can_trigger || fired.is_some() {
                        break;
                    }
                    let serving_distance = o.kf.range();
                    if scheme == Scheme::Distance {
                        let candidates: Vec<(usize, f64)> = (0..scenario.gnbs.len())
                            .filter(|&k| k != serving)
                            .map(|k| (k, candidate_distance(&scenario.gnbs[k].position, &o.ue_estimate)))
                            .collect();
                        if let Some(k) = distance_step(serving_distance, &candidates, trigger, &mut counters) {
                            fired = Some((o.t, k, None));
                        }
                    } else if let (Some(probs), Some(frame)) = (o.probabilities, out.frame) {
                        let aligned = align_candidates(&o.ue_estimate, &frame, &scenario.gnbs, serving, max_alignment)
                            .map(|c| c.map(|k| (k, candidate_distance(&scenario.gnbs[k].position, &o.ue_estimate))));
                        let step =
                            probability_step(&probs, &aligned, serving_distance, trigger, &mut counters, o.receding);
                        if let Some(k) = step.trigger {
                            fired = Some((o.t, k, Some(step.dominant)));
                        }
                        if step.warning.is_some() && warning.is_none() {
                            warning = step.warning;
                        }
                    }
                }
            }
        }

        let step = StepDetail {
            blocked,
            rsrp_dbm: rsrp,
            snr_db,
            ber,
            beam_theta: beam.theta,
            beam_phi: beam.phi,
            codebook_beam,
            truth_maneuver: truth.active_maneuver,
            probabilities,
        };
        log.push(t, EventKind::Step, scheme, &scenario.gnbs[serving].id, "", &step)?;

        match warning {
            Some(message) if !warned => {
                log.push(
                    t,
                    EventKind::Warning,
                    scheme,
                    &scenario.gnbs[serving].id,
                    "",
                    &serde_json::json!({ "message": message }),
                )?;
                warned = true;
            }
            Some(_) => {}
            None => warned = false,
        }

        if let Some((t_trigger, target, dominant)) = fired {
            let (command_time, breakdown) = match scheme {
                Scheme::A3 => {
                    let report = next_slot_start(frame, slot_s, t_trigger, SlotKind::Uplink);
                    let decided = report + p.timing.network_decision_ms * 1e-3;
                    let command = next_slot_start(frame, slot_s, decided, SlotKind::Downlink);
                    (command, classic_interruption(&p.timing, slot_ms, &mut timing_rng))
                }
                _ => {
                    let decided = t_trigger + p.timing.network_decision_ms * 1e-3;
                    let command = next_slot_start(frame, slot_s, decided, SlotKind::Downlink);
                    (command, sensing_interruption(&p.timing, slot_ms, &mut timing_rng))
                }
            };
            let event = HandoverEvent {
                trigger_time: t_trigger,
                command_time,
                interruption_start: command_time,
                interruption_end: command_time + breakdown.total_ms() * 1e-3,
                breakdown,
                source_gnb: scenario.gnbs[serving].id.clone(),
                target_gnb: scenario.gnbs[target].id.clone(),
                scheme,
                dominant_maneuver: dominant,
            };
            let detail = HandoverDetail {
                trigger_time: event.trigger_time,
                command_time: event.command_time,
                interruption_start: event.interruption_start,
                interruption_end: event.interruption_end,
                breakdown_ms: breakdown.rounded(),
                dominant_maneuver: dominant,
            };
            log.push(t_trigger, EventKind::Handover, scheme, &event.source_gnb, &event.target_gnb, &detail)?;
            pending = Some(Pending { event, target });
        }
    }
    Ok(log)
}

fn measure_block(
    route: &Route,
    anchor: &Vec3,
    p: &crate::scenario::SimParams,
    l: u64,
    t: f64,
    spacing: f64,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Measurement>> {
    (0..p.frame.measurements_per_block)
        .map(|i| {
            let ti = t + i as f64 * spacing;
            let truth: TruthState = route.sample(ti.min(route.duration()), p.turn_window_m)?;
            Ok(synthesize_measurement(anchor, &truth, &p.noise, l, i + 1, rng)?)
        })
        .collect()
}
