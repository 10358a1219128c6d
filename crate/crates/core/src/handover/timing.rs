//! Interruption-time model and TDD slot alignment.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{FrameTiming, TimingConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotKind {
    Downlink,
    Special,
    Uplink,
}

/// Per-step durations of one handover interruption, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Breakdown {
    pub rrc_processing: f64,
    pub sync_acquisition: f64,
    pub ue_processing: f64,
    pub prach_wait: f64,
    pub msg_a: f64,
    pub rar_wait: f64,
    pub msg_b: f64,
    pub rrc_complete: f64,
}

impl Breakdown {
    pub fn total_ms(&self) -> f64 {
        self.rrc_processing
            + self.sync_acquisition
            + self.ue_processing
            + self.prach_wait
            + self.msg_a
            + self.rar_wait
            + self.msg_b
            + self.rrc_complete
    }

    /// Copy with every component rounded to 3 decimals.
    pub fn rounded(&self) -> Self {
        let r = |x: f64| (x * 1e3).round() / 1e3;
        Self {
            rrc_processing: r(self.rrc_processing),
            sync_acquisition: r(self.sync_acquisition),
            ue_processing: r(self.ue_processing),
            prach_wait: r(self.prach_wait),
            msg_a: r(self.msg_a),
            rar_wait: r(self.rar_wait),
            msg_b: r(self.msg_b),
            rrc_complete: r(self.rrc_complete),
        }
    }
}

/// Classic handover: full SMTC wait for the target SSB, then a PRACH
/// occasion wait `t_iu_ms` before 2-step random access.
pub fn classic_breakdown(cfg: &TimingConfig, slot_ms: f64, t_iu_ms: f64, rar_wait_ms: f64) -> Breakdown {
    Breakdown {
        rrc_processing: cfg.rrc_processing_ms,
        sync_acquisition: cfg.smtc_period_ms,
        ue_processing: cfg.ue_processing_ms,
        prach_wait: t_iu_ms,
        msg_a: cfg.msg_a_slots as f64 * slot_ms,
        rar_wait: rar_wait_ms,
        msg_b: cfg.msg_b_slots as f64 * slot_ms,
        rrc_complete: cfg.rrc_complete_slots as f64 * slot_ms,
    }
}

/// Sensing-assisted handover: the target sends a beamformed SSB in the next
/// slot and the preamble goes out right after it.
pub fn sensing_breakdown(cfg: &TimingConfig, slot_ms: f64, rar_wait_ms: f64) -> Breakdown {
    Breakdown {
        rrc_processing: cfg.rrc_processing_ms,
        sync_acquisition: slot_ms,
        ue_processing: cfg.ue_processing_ms,
        prach_wait: 0.0,
        msg_a: cfg.msg_a_slots as f64 * slot_ms,
        rar_wait: rar_wait_ms,
        msg_b: cfg.msg_b_slots as f64 * slot_ms,
        rrc_complete: cfg.rrc_complete_slots as f64 * slot_ms,
    }
}

fn draw_rar_wait<R: Rng + ?Sized>(cfg: &TimingConfig, slot_ms: f64, rng: &mut R) -> f64 {
    let hi = cfg.msg_b_response_window_slots.max(1) as f64 * slot_ms;
    rng.random_range(slot_ms..=hi.max(slot_ms))
}

/// Classic interruption with `T_IU ~ U[0, prach_period)` and
/// `RAR wait ~ U[1 slot, response window]`.
pub fn classic_interruption<R: Rng + ?Sized>(cfg: &TimingConfig, slot_ms: f64, rng: &mut R) -> Breakdown {
    let t_iu = rng.random_range(0.0..cfg.prach_period_ms);
    let rar = draw_rar_wait(cfg, slot_ms, rng);
    classic_breakdown(cfg, slot_ms, t_iu, rar)
}

pub fn sensing_interruption<R: Rng + ?Sized>(cfg: &TimingConfig, slot_ms: f64, rng: &mut R) -> Breakdown {
    let rar = draw_rar_wait(cfg, slot_ms, rng);
    sensing_breakdown(cfg, slot_ms, rar)
}

/// Start of the first slot of `kind` beginning at or after `t` (seconds).
pub fn next_slot_start(frame: &FrameTiming, slot_s: f64, t: f64, kind: SlotKind) -> f64 {
    let mut k = (t / slot_s - 1e-9).ceil().max(0.0) as u64;
    let period = frame.tdd_pattern.len() as u64;
    for _ in 0..=period {
        if frame.slot_kind(k) == kind {
            return k as f64 * slot_s;
        }
        k += 1;
    }
    k as f64 * slot_s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SLOT_MS: f64 = 0.125;

    #[test]
    fn classic_example_sum() {
        let b = classic_breakdown(&TimingConfig::default(), SLOT_MS, 5.0, 0.25);
        assert_relative_eq!(b.total_ms(), 41.5, epsilon = 1e-12);
    }

    #[test]
    fn sensing_example_sum() {
        let b = sensing_breakdown(&TimingConfig::default(), SLOT_MS, 0.25);
        assert_relative_eq!(b.total_ms(), 16.625, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_waits() {
        let cfg = TimingConfig { smtc_period_ms: 0.0, ..TimingConfig::default() };
        let b = classic_breakdown(&cfg, SLOT_MS, 0.0, 0.3);
        assert_relative_eq!(b.total_ms(), 16.25 + 0.3, epsilon = 1e-12);
    }

    #[test]
    fn sensing_never_slower_on_common_draws() {
        let cfg = TimingConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let t_iu = rng.random_range(0.0..cfg.prach_period_ms);
            let rar = draw_rar_wait(&cfg, SLOT_MS, &mut rng);
            assert!(
                sensing_breakdown(&cfg, SLOT_MS, rar).total_ms()
                    < classic_breakdown(&cfg, SLOT_MS, t_iu, rar).total_ms()
            );
        }
    }

    #[test]
    fn draws_stay_in_range() {
        let cfg = TimingConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let b = classic_interruption(&cfg, SLOT_MS, &mut rng);
            assert!((0.0..10.0).contains(&b.prach_wait));
            assert!((0.125..=0.5).contains(&b.rar_wait));
        }
    }

    #[test]
    fn slot_alignment() {
        let frame = FrameTiming::default();
        let slot = 0.125e-3;
        assert_relative_eq!(next_slot_start(&frame, slot, 0.0, SlotKind::Uplink), 8.0 * slot);
        assert_relative_eq!(next_slot_start(&frame, slot, 0.0, SlotKind::Downlink), 0.0);
        assert_relative_eq!(next_slot_start(&frame, slot, 8.5 * slot, SlotKind::Downlink), 10.0 * slot);
        assert_relative_eq!(next_slot_start(&frame, slot, 9.0 * slot, SlotKind::Uplink), 9.0 * slot);
        assert_relative_eq!(next_slot_start(&frame, slot, 7.0 * slot, SlotKind::Special), 7.0 * slot);
    }

    #[test]
    fn rounded_breakdown() {
        let b = Breakdown { rar_wait: 0.123456, ..Breakdown::default() }.rounded();
        assert_eq!(b.rar_wait, 0.123);
    }
}
