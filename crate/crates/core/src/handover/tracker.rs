//! Per-serving-gNB sensing pipeline: Kalman filter over `[θ, φ, d, v]` and,
//! for the probability scheme, the IMM in a heading-aligned frame.

use std::collections::VecDeque;

use nalgebra::{Matrix4, Vector3, Vector4};

use super::TrackerConfig;
use crate::channel::{Measurement, NoiseConfig};
use crate::tracking::{
    estimate_ue_position, imm_step_block, kf_predict, kf_predict_over, kf_update, HeadingFrame, ImmConfig,
    ImmDiagnostics, ImmObservation, ImmState, KfState, Maneuver, TrackingError,
};
use crate::Vec3;

const SIGMA_FLOOR: [f64; 4] = [1e-4, 1e-4, 1e-3, 1e-3];
const MIN_HEADING_BASELINE_M: f64 = 1.0;

/// Filter output after one measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementOutput {
    pub t: f64,
    pub kf: KfState<f64>,
    pub ue_estimate: Vec3,
    pub receding: bool,
    /// Maneuver probabilities after this measurement, once the IMM runs.
    pub probabilities: Option<Vector3<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockOutput {
    pub outputs: Vec<MeasurementOutput>,
    pub imm: Option<ImmDiagnostics<f64>>,
    pub frame: Option<HeadingFrame<f64>>,
    /// The IMM was started or restarted in this block.
    pub imm_started: bool,
    /// The IMM was dropped after a numerical failure.
    pub imm_dropped: bool,
}

#[derive(Debug, Clone)]
pub struct SensingTracker {
    anchor: Vec3,
    noise: NoiseConfig,
    cfg: TrackerConfig,
    imm_cfg: Option<ImmConfig<f64>>,
    dt: f64,
    kf: Option<KfState<f64>>,
    last_t: f64,
    imm: Option<(HeadingFrame<f64>, ImmState<f64>)>,
    history: VecDeque<(f64, Vec3)>,
    was_receding: bool,
}

impl SensingTracker {
    /// `imm_cfg = None` runs the Kalman filter only.
    pub fn new(anchor: Vec3, noise: NoiseConfig, cfg: TrackerConfig, imm_cfg: Option<ImmConfig<f64>>, dt: f64) -> Self {
        Self {
            anchor,
            noise,
            cfg,
            imm_cfg,
            dt,
            kf: None,
            last_t: 0.0,
            imm: None,
            history: VecDeque::new(),
            was_receding: false,
        }
    }

    /// Restart all filters for a new serving gNB.
    pub fn reset(&mut self, anchor: Vec3) {
        self.anchor = anchor;
        self.kf = None;
        self.imm = None;
        self.history.clear();
        self.was_receding = false;
    }

    pub fn anchor(&self) -> &Vec3 {
        &self.anchor
    }

    pub fn kf(&self) -> Option<&KfState<f64>> {
        self.kf.as_ref()
    }

    pub fn imm(&self) -> Option<&ImmState<f64>> {
        self.imm.as_ref().map(|(_, s)| s)
    }

    pub fn frame(&self) -> Option<HeadingFrame<f64>> {
        self.imm.as_ref().map(|(f, _)| *f)
    }

    /// One-block-ahead azimuth and elevation of the vehicle, for steering.
    pub fn predicted_direction(&self) -> Option<(f64, f64)> {
        self.kf.as_ref().map(|kf| {
            let p = kf_predict(kf);
            (p.theta(), p.phi())
        })
    }

    /// Measurement standard deviations assumed by the filters at this range.
    pub fn sigma(&self, m: &Measurement) -> Vector4<f64> {
        let k = self.noise.range_factor(m.d);
        let raw = [self.noise.sigma_theta, self.noise.sigma_phi, self.noise.sigma_d, self.noise.sigma_v];
        Vector4::from_fn(|i, _| (k * raw[i]).max(SIGMA_FLOOR[i]))
    }

    fn heading_estimate(&self) -> Option<f64> {
        let (t0, first) = self.history.front()?;
        let (t1, last) = self.history.back()?;
        if t1 - t0 < 0.9 * self.cfg.heading_window_s {
            return None;
        }
        let delta = last - first;
        (delta.xy().norm() >= MIN_HEADING_BASELINE_M).then(|| delta.y.atan2(delta.x))
    }

    fn start_imm(
        &self,
        first: &Measurement,
        sigma: &Vector4<f64>,
    ) -> Result<Option<(HeadingFrame<f64>, ImmState<f64>)>, TrackingError> {
        let (Some(cfg), Some(heading)) = (self.imm_cfg.as_ref(), self.heading_estimate()) else {
            return Ok(None);
        };
        let frame = HeadingFrame::new(heading);
        let obs = frame.observe(&raw(first), sigma);
        Ok(Some((frame, ImmState::new(&obs, cfg)?)))
    }

    /// Runs one block of measurements through the filters.
    pub fn process_block(&mut self, block: &[Measurement]) -> Result<BlockOutput, TrackingError> {
        if block.is_empty() {
            return Err(TrackingError::EmptyBlock);
        }
        let mut outputs = Vec::with_capacity(block.len());
        let sigmas: Vec<Vector4<f64>> = block.iter().map(|m| self.sigma(m)).collect();
        for (m, sigma) in block.iter().zip(&sigmas) {
            let z = raw(m);
            let r = Matrix4::from_diagonal(&sigma.component_mul(sigma));
            let kf = match self.kf.take() {
                None => KfState::from_measurement(&z, r, self.cfg.kf_process_scale, self.cfg.init_scale, self.dt),
                Some(prev) => {
                    let elapsed = m.t - self.last_t;
                    let mut prior = if elapsed > 0.0 { kf_predict_over(&prev, elapsed) } else { prev };
                    prior.measurement = r;
                    kf_update(&prior, &z)?
                }
            };
            self.last_t = m.t;
            outputs.push(MeasurementOutput {
                t: m.t,
                ue_estimate: estimate_ue_position(&kf, &self.anchor),
                receding: kf.radial_velocity() < 0.0,
                kf: kf.clone(),
                probabilities: None,
            });
            self.kf = Some(kf);
        }

        let last = outputs.last().expect("non-empty block");
        self.history.push_back((block[0].t, last.ue_estimate));
        let horizon = block[0].t - self.cfg.heading_window_s - 1e-9;
        while self.history.front().is_some_and(|(t, _)| *t < horizon) {
            self.history.pop_front();
        }
        let receding = last.receding;
        let receding_edge = receding && !self.was_receding;
        self.was_receding = receding;

        let mut out = BlockOutput { outputs, imm: None, frame: None, imm_started: false, imm_dropped: false };
        if self.imm_cfg.is_none() {
            return Ok(out);
        }
        let restart = match &self.imm {
            None => receding,
            Some((_, s)) => receding_edge && s.dominant() == Maneuver::Straight,
        };
        if restart {
            if let Some(started) = self.start_imm(&block[0], &sigmas[0])? {
                self.imm = Some(started);
                out.imm_started = true;
            }
        }
        if let Some((frame, state)) = &self.imm {
            out.frame = Some(*frame);
            if out.imm_started {
                for o in &mut out.outputs {
                    o.probabilities = Some(state.probabilities);
                }
            } else {
                let obs: Vec<ImmObservation<f64>> =
                    block.iter().zip(&sigmas).map(|(m, s)| frame.observe(&raw(m), s)).collect();
                match imm_step_block(state, &obs) {
                    Ok((next, diag)) => {
                        for (o, p) in out.outputs.iter_mut().zip(&diag.per_observation) {
                            o.probabilities = Some(*p);
                        }
                        out.imm = Some(diag);
                        self.imm = Some((*frame, next));
                    }
                    Err(_) => {
                        self.imm = None;
                        out.imm_dropped = true;
                    }
                }
            }
        }
        Ok(out)
    }
}

fn raw(m: &Measurement) -> Vector4<f64> {
    Vector4::new(m.theta, m.phi, m.d, m.v)
}
