//! Evaluation metrics derived from event logs.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::handover::EventLog;

pub const BER_THRESHOLD_HIGH: f64 = 1e-2;
pub const BER_THRESHOLD_LOW: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub duration_s: f64,
    pub handovers: usize,
    /// Handovers per second.
    pub ho_rate: f64,
    pub interruption_ms_mean: f64,
    pub interruption_percent: f64,
    pub outage_los: f64,
    pub outage_ber2: f64,
    pub outage_ber3: f64,
    pub ber_mean: f64,
    pub throughput_rel: f64,
}

/// Per-step link state as seen by the metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkSample {
    pub blocked: bool,
    pub ber: f64,
    pub interrupted: bool,
}

pub fn handover_rate(handovers: usize, duration_s: f64) -> f64 {
    if duration_s > 0.0 {
        handovers as f64 / duration_s
    } else {
        0.0
    }
}

/// `100 · Σ interruptions / duration`, with each interval clipped to the run.
pub fn interruption_percentage(intervals: &[(f64, f64)], duration_s: f64) -> f64 {
    if duration_s <= 0.0 {
        return 0.0;
    }
    let total: f64 = intervals.iter().map(|&(a, b)| (b.min(duration_s) - a.max(0.0)).max(0.0)).sum();
    (100.0 * total / duration_s).clamp(0.0, 100.0)
}

/// Outage fractions: blocked serving link, BER above 1e-2, BER above 1e-3.
/// Interrupted steps count as outage under every definition.
pub fn outage(samples: &[LinkSample]) -> (f64, f64, f64) {
    if samples.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let n = samples.len() as f64;
    let frac = |f: &dyn Fn(&LinkSample) -> bool| samples.iter().filter(|s| s.interrupted || f(s)).count() as f64 / n;
    (frac(&|s| s.blocked), frac(&|s| s.ber > BER_THRESHOLD_HIGH), frac(&|s| s.ber > BER_THRESHOLD_LOW))
}

/// Probability that a block of `bits` bits contains an error.
pub fn block_error_proxy(ber: f64, bits: u32) -> f64 {
    1.0 - (1.0 - ber.clamp(0.0, 1.0)).powi(bits as i32)
}

/// Mean of `1 − BLER` over non-interrupted steps, scaled by
/// `1 − interruption_fraction`.
pub fn throughput_rel(samples: &[LinkSample], interruption_fraction: f64, bits: u32) -> f64 {
    let active: Vec<f64> =
        samples.iter().filter(|s| !s.interrupted).map(|s| 1.0 - block_error_proxy(s.ber, bits)).collect();
    if active.is_empty() {
        return 0.0;
    }
    let mean = active.iter().sum::<f64>() / active.len() as f64;
    (mean * (1.0 - interruption_fraction.clamp(0.0, 1.0))).clamp(0.0, 1.0)
}

/// Full report from a log; a pure function of the log contents.
pub fn report(log: &EventLog) -> Result<MetricsReport> {
    let start = log.start()?;
    let duration = start.duration_s;
    let intervals: Vec<(f64, f64)> =
        log.handovers()?.iter().map(|(_, h)| (h.interruption_start, h.interruption_end)).collect();
    let samples: Vec<LinkSample> = log
        .steps()?
        .into_iter()
        .map(|(t, s)| LinkSample {
            blocked: s.blocked,
            ber: s.ber,
            interrupted: intervals.iter().any(|&(a, b)| t >= a && t < b),
        })
        .collect();
    let (outage_los, outage_ber2, outage_ber3) = outage(&samples);
    let interruption_percent = interruption_percentage(&intervals, duration);
    let interruption_ms_mean = if intervals.is_empty() {
        0.0
    } else {
        intervals.iter().map(|&(a, b)| (b - a) * 1e3).sum::<f64>() / intervals.len() as f64
    };
    let active: Vec<f64> = samples.iter().filter(|s| !s.interrupted).map(|s| s.ber).collect();
    let ber_mean = if active.is_empty() { 0.0 } else { active.iter().sum::<f64>() / active.len() as f64 };
    Ok(MetricsReport {
        duration_s: duration,
        handovers: intervals.len(),
        ho_rate: handover_rate(intervals.len(), duration),
        interruption_ms_mean,
        interruption_percent,
        outage_los,
        outage_ber2,
        outage_ber3,
        ber_mean,
        throughput_rel: throughput_rel(&samples, interruption_percent / 100.0, start.bits_per_block),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn clear(n: usize, ber: f64) -> Vec<LinkSample> {
        vec![LinkSample { blocked: false, ber, interrupted: false }; n]
    }

    #[test]
    fn rate_examples() {
        assert_eq!(handover_rate(0, 40.0), 0.0);
        assert_relative_eq!(handover_rate(3, 40.0), 0.075);
        assert_relative_eq!(handover_rate(8, 40.0), 0.2);
    }

    #[test]
    fn interruption_examples() {
        assert_eq!(interruption_percentage(&[], 40.0), 0.0);
        assert_relative_eq!(interruption_percentage(&[(1.0, 1.02)], 40.0), 0.05, epsilon = 1e-9);
        let three = [(1.0, 1.043), (10.0, 10.043), (20.0, 20.043)];
        assert_relative_eq!(interruption_percentage(&three, 40.0), 0.3225, epsilon = 1e-9);
    }

    #[test]
    fn outage_examples() {
        assert_eq!(outage(&clear(10, 1e-9)), (0.0, 0.0, 0.0));
        let mut half = clear(10, 1e-9);
        half.iter_mut().take(5).for_each(|s| s.blocked = true);
        assert_eq!(outage(&half).0, 0.5);
        let (_, b2, b3) = outage(&clear(10, 5e-3));
        assert_eq!((b2, b3), (0.0, 1.0));
    }

    #[test]
    fn interrupted_steps_are_outage() {
        let mut s = clear(4, 0.0);
        s[0].interrupted = true;
        assert_eq!(outage(&s), (0.25, 0.25, 0.25));
    }

    #[test]
    fn throughput_examples() {
        assert_eq!(throughput_rel(&clear(10, 0.0), 0.0, 8448), 1.0);
        assert_relative_eq!(throughput_rel(&clear(10, 0.0), 0.1, 8448), 0.9);
        let s = clear(10, 1e-5);
        assert!(throughput_rel(&s, 0.02, 8448) < throughput_rel(&s, 0.01, 8448));
    }
}
