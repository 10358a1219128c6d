//! Link-budget abstraction: RSRP, SNR, a BER proxy and noisy radar
//! measurements of the vehicle's kinematics.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::geometry::{beam_gain, cartesian_to_spherical, GeometryError, SphericalObs, SPEED_OF_LIGHT};
use crate::scenario::{GnbNode, TruthState};
use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("unsupported modulation order {0} (expected 2, 4 or 6)")]
    UnsupportedModulation(u32),
    #[error("zero distance between gNB and vehicle")]
    ZeroDistance,
}

impl From<GeometryError> for ChannelError {
    fn from(_: GeometryError) -> Self {
        ChannelError::ZeroDistance
    }
}

/// Standard deviations of the radar measurement errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseConfig {
    pub sigma_theta: f64,
    pub sigma_phi: f64,
    pub sigma_d: f64,
    pub sigma_v: f64,
    /// Relative growth of every σ per 100 m of range.
    pub range_scaling: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            sigma_theta: 1f64.to_radians(),
            sigma_phi: 1f64.to_radians(),
            sigma_d: 0.5,
            sigma_v: 0.5,
            range_scaling: 0.0,
        }
    }
}

impl NoiseConfig {
    pub fn noiseless() -> Self {
        Self { sigma_theta: 0.0, sigma_phi: 0.0, sigma_d: 0.0, sigma_v: 0.0, range_scaling: 0.0 }
    }

    /// Multiplier applied to every σ at range `d`.
    pub fn range_factor(&self, d: f64) -> f64 {
        1.0 + self.range_scaling * d / 100.0
    }

    pub(crate) fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        for (name, s) in [
            ("sigma_theta", self.sigma_theta),
            ("sigma_phi", self.sigma_phi),
            ("sigma_d", self.sigma_d),
            ("sigma_v", self.sigma_v),
            ("range_scaling", self.range_scaling),
        ] {
            if !(s >= 0.0 && s.is_finite()) {
                v.push(format!("{name}: must be a finite value >= 0"));
            }
        }
        v
    }
}

/// Parameters of the RSRP / SNR model. Bandwidth is derived from the
/// scenario numerology, see [`crate::scenario::SimParams::bandwidth_hz`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub noise_figure_db: f64,
    pub pathloss_exponent_los: f64,
    pub pathloss_exponent_nlos: f64,
    pub nlos_penalty_db: f64,
    pub shadowing_sigma_db: f64,
    /// Distance over which shadowing decorrelates to `1/e`.
    pub shadowing_decorrelation_m: f64,
    /// Offset added to the SNR before the uncoded BER curve.
    pub coding_gain_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_dbm: 20.0,
            noise_figure_db: 9.0,
            pathloss_exponent_los: 2.0,
            pathloss_exponent_nlos: 3.0,
            nlos_penalty_db: 20.0,
            shadowing_sigma_db: 4.0,
            shadowing_decorrelation_m: 10.0,
            coding_gain_db: 6.0,
        }
    }
}

impl LinkBudget {
    pub(crate) fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        if !(self.pathloss_exponent_los >= 2.0) {
            v.push("pathloss_exponent_los: must be >= 2".into());
        }
        if !(self.pathloss_exponent_nlos >= self.pathloss_exponent_los) {
            v.push("pathloss_exponent_nlos: must be >= pathloss_exponent_los".into());
        }
        if !(self.nlos_penalty_db >= 0.0) {
            v.push("nlos_penalty_db: must be >= 0".into());
        }
        if !(self.shadowing_sigma_db >= 0.0) {
            v.push("shadowing_sigma_db: must be >= 0".into());
        }
        if !(self.shadowing_decorrelation_m > 0.0) {
            v.push("shadowing_decorrelation_m: must be positive".into());
        }
        for (name, x) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("noise_figure_db", self.noise_figure_db),
            ("coding_gain_db", self.coding_gain_db),
        ] {
            if !x.is_finite() {
                v.push(format!("{name}: must be finite"));
            }
        }
        v
    }

    /// Thermal noise floor over `bandwidth_hz`, dBm.
    pub fn noise_floor_dbm(&self, bandwidth_hz: f64) -> f64 {
        -174.0 + 10.0 * bandwidth_hz.log10() + self.noise_figure_db
    }
}

/// Log-distance path loss referenced to free space at 1 m. With exponent 2
/// this is the Friis loss `20·log₁₀(4πd·fc/c)`.
pub fn pathloss_db(d: f64, fc: f64, exponent: f64) -> f64 {
    20.0 * (4.0 * std::f64::consts::PI * fc / SPEED_OF_LIGHT).log10() + 10.0 * exponent * d.log10()
}

/// RSRP in dBm with an explicit shadowing term.
pub fn rsrp_with_shadowing(
    gnb: &GnbNode,
    ue_position: &Vec3,
    beam: &SphericalObs<f64>,
    blocked: bool,
    budget: &LinkBudget,
    fc: f64,
    shadowing_db: f64,
) -> Result<f64, ChannelError> {
    let los = cartesian_to_spherical(&gnb.position, ue_position)?;
    let gain = beam_gain(gnb.array, beam, &los);
    let (exponent, penalty) = if blocked {
        (budget.pathloss_exponent_nlos, budget.nlos_penalty_db)
    } else {
        (budget.pathloss_exponent_los, 0.0)
    };
    Ok(budget.tx_power_dbm + 10.0 * gain.log10() - pathloss_db(los.d, fc, exponent) - penalty + shadowing_db)
}

/// RSRP in dBm for a beam steered at `beam`, with an independent shadowing
/// draw of σ = `budget.shadowing_sigma_db`.
pub fn rsrp<R: Rng + ?Sized>(
    gnb: &GnbNode,
    truth: &TruthState,
    beam: &SphericalObs<f64>,
    blocked: bool,
    budget: &LinkBudget,
    fc: f64,
    rng: &mut R,
) -> Result<f64, ChannelError> {
    let z: f64 = rng.sample(StandardNormal);
    rsrp_with_shadowing(gnb, &truth.position, beam, blocked, budget, fc, budget.shadowing_sigma_db * z)
}

/// One radar observation of the vehicle by a gNB. `v` is the radial
/// velocity, positive while the vehicle approaches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Measurement {
    /// Block (DRX on-duration) index.
    pub l: u64,
    /// Measurement index inside the block, 1..=4.
    pub i: u8,
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
    pub d: f64,
    pub v: f64,
}

impl Measurement {
    pub fn spherical(&self) -> SphericalObs<f64> {
        SphericalObs::new(self.d, self.theta, self.phi)
    }
}

/// Radial velocity of the vehicle relative to `anchor`, approach-positive.
pub fn radial_velocity(anchor: &Vec3, truth: &TruthState) -> Result<f64, ChannelError> {
    let los = truth.position - anchor;
    let d = los.norm();
    if d == 0.0 {
        return Err(ChannelError::ZeroDistance);
    }
    Ok(-(los / d).dot(&truth.velocity))
}

/// Ground truth seen from `gnb` plus independent zero-mean Gaussian errors.
/// Four standard-normal draws are consumed regardless of the configured σ.
pub fn synthesize_measurement<R: Rng + ?Sized>(
    gnb: &Vec3,
    truth: &TruthState,
    noise: &NoiseConfig,
    l: u64,
    i: u8,
    rng: &mut R,
) -> Result<Measurement, ChannelError> {
    let obs = cartesian_to_spherical(gnb, &truth.position)?;
    let v = radial_velocity(gnb, truth)?;
    let k = noise.range_factor(obs.d);
    let mut draw = || -> f64 { rng.sample(StandardNormal) };
    let (e_theta, e_phi, e_d, e_v) = (draw(), draw(), draw(), draw());
    Ok(Measurement {
        l,
        i,
        t: truth.t,
        theta: crate::geometry::wrap_angle(obs.theta + k * noise.sigma_theta * e_theta),
        phi: (obs.phi + k * noise.sigma_phi * e_phi).clamp(-std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2),
        d: (obs.d + k * noise.sigma_d * e_d).max(0.0),
        v: v + k * noise.sigma_v * e_v,
    })
}

fn q_function(x: f64) -> f64 {
    0.5 * erfc(x / std::f64::consts::SQRT_2)
}

/// Gray-coded square-QAM bit error approximation at `snr_db + coding_gain_db`
/// (SNR per symbol), clamped to `[0, 0.5]`.
pub fn snr_to_ber(snr_db: f64, modulation_order: u32, coding_gain_db: f64) -> Result<f64, ChannelError> {
    if ![2, 4, 6].contains(&modulation_order) {
        return Err(ChannelError::UnsupportedModulation(modulation_order));
    }
    let eff_db = snr_db + coding_gain_db;
    if eff_db == f64::NEG_INFINITY || eff_db.is_nan() {
        return Ok(0.5);
    }
    let snr = 10f64.powf(eff_db / 10.0);
    let m = (1u32 << modulation_order) as f64;
    let q = modulation_order as f64;
    let ber = (4.0 / q) * (1.0 - 1.0 / m.sqrt()) * q_function((3.0 * snr / (m - 1.0)).sqrt());
    Ok(ber.clamp(0.0, 0.5))
}
