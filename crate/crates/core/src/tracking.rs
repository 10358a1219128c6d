//! Kalman filter over `[θ, φ, d, v]` and the three-model IMM-EKF over
//! `[θ, φ, dˣ, dʸ, vˣ, vʸ]`.

use std::fmt;

use nalgebra::{Matrix3, Matrix4, Matrix6, Vector3, Vector4, Vector6};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{lit, spherical_to_cartesian, wrap_angle, SphericalObs, Vec3};
use crate::Real;

/// Maneuver hypothesis, in the order used for probability vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Maneuver {
    #[default]
    Straight,
    Left,
    Right,
}

impl Maneuver {
    pub const ALL: [Maneuver; 3] = [Maneuver::Straight, Maneuver::Left, Maneuver::Right];

    pub fn index(self) -> usize {
        match self {
            Maneuver::Straight => 0,
            Maneuver::Left => 1,
            Maneuver::Right => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn is_turn(self) -> bool {
        self != Maneuver::Straight
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Maneuver::Straight => "straight",
            Maneuver::Left => "left",
            Maneuver::Right => "right",
        }
    }
}

impl fmt::Display for Maneuver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrackingError {
    #[error("residual covariance is not positive definite")]
    SingularResidual,
    #[error("straight-model propagation is singular (cos θ or horizontal range near zero)")]
    StraightSingularity,
    #[error("empty measurement block")]
    EmptyBlock,
    #[error("invalid tracker configuration: {0}")]
    InvalidConfig(String),
}

/// State of the distance-scheme filter over `[θ, φ, d, v]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KfState<T: Real> {
    pub mean: Vector4<T>,
    pub cov: Matrix4<T>,
    pub process: Matrix4<T>,
    pub measurement: Matrix4<T>,
    pub dt: T,
}

impl<T: Real> KfState<T> {
    pub fn new(mean: Vector4<T>, cov: Matrix4<T>, process: Matrix4<T>, measurement: Matrix4<T>, dt: T) -> Self {
        Self { mean, cov, process, measurement, dt }
    }

    /// Track start from a single measurement: covariance `init_scale · Qm`,
    /// process noise `process_scale · Qm`.
    pub fn from_measurement(z: &Vector4<T>, measurement: Matrix4<T>, process_scale: T, init_scale: T, dt: T) -> Self {
        Self { mean: *z, cov: measurement * init_scale, process: measurement * process_scale, measurement, dt }
    }

    pub fn theta(&self) -> T {
        self.mean[0]
    }

    pub fn phi(&self) -> T {
        self.mean[1]
    }

    pub fn range(&self) -> T {
        self.mean[2]
    }

    pub fn radial_velocity(&self) -> T {
        self.mean[3]
    }
}

fn kf_transition<T: Real>(dt: T) -> Matrix4<T> {
    let mut f = Matrix4::identity();
    f[(2, 3)] = -dt;
    f
}

fn symmetrize<T: Real, const N: usize>(m: &nalgebra::SMatrix<T, N, N>) -> nalgebra::SMatrix<T, N, N> {
    (m + m.transpose()) * lit::<T>(0.5)
}

/// Joseph-form posterior covariance for `H = I`.
fn joseph<T: Real, const N: usize>(
    gain: &nalgebra::SMatrix<T, N, N>,
    prior: &nalgebra::SMatrix<T, N, N>,
    measurement: &nalgebra::SMatrix<T, N, N>,
) -> nalgebra::SMatrix<T, N, N> {
    let keep = nalgebra::SMatrix::<T, N, N>::identity() - gain;
    symmetrize(&(keep * prior * keep.transpose() + gain * measurement * gain.transpose()))
}

pub fn kf_predict<T: Real>(s: &KfState<T>) -> KfState<T> {
    kf_predict_over(s, s.dt)
}

/// Prediction over an arbitrary `elapsed` time; the process covariance is
/// scaled by `elapsed / dt`.
pub fn kf_predict_over<T: Real>(s: &KfState<T>, elapsed: T) -> KfState<T> {
    let f = kf_transition(elapsed);
    let q = if s.dt > T::zero() { s.process * (elapsed / s.dt) } else { s.process };
    KfState { mean: f * s.mean, cov: symmetrize(&(f * s.cov * f.transpose() + q)), ..s.clone() }
}

/// Measurement update with `H = I`; the azimuth residual is wrapped.
pub fn kf_update<T: Real>(s: &KfState<T>, z: &Vector4<T>) -> Result<KfState<T>, TrackingError> {
    let mut r = z - s.mean;
    r[0] = wrap_angle(r[0]);
    let innovation = s.cov + s.measurement;
    let chol = innovation.cholesky().ok_or(TrackingError::SingularResidual)?;
    let gain = s.cov * chol.inverse();
    let mut mean = s.mean + gain * r;
    mean[0] = wrap_angle(mean[0]);
    let cov = joseph(&gain, &s.cov, &s.measurement);
    Ok(KfState { mean, cov, ..s.clone() })
}

/// UE position implied by the filtered range and angles.
pub fn estimate_ue_position<T: Real>(s: &KfState<T>, gnb: &Vec3<T>) -> Vec3<T> {
    spherical_to_cartesian(gnb, &SphericalObs::new(s.range(), s.theta(), s.phi()))
}

/// Decomposed observation in Ξ space with its (diagonal) covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmObservation<T: Real> {
    pub z: Vector6<T>,
    pub cov: Option<Matrix6<T>>,
}

/// Splits a `[θ, φ, d, v]` measurement into horizontal range and velocity
/// components.
pub fn decompose_to_imm<T: Real>(m: &Vector4<T>) -> Vector6<T> {
    let (theta, phi, d, v) = (m[0], m[1], m[2], m[3]);
    let (ct, st, cp) = (theta.cos(), theta.sin(), phi.cos());
    Vector6::new(theta, phi, d * cp * ct, d * cp * st, -v * cp * ct, -v * cp * st)
}

fn decompose_jacobian<T: Real>(m: &Vector4<T>) -> nalgebra::SMatrix<T, 6, 4> {
    let (theta, phi, d, v) = (m[0], m[1], m[2], m[3]);
    let (ct, st, cp, sp) = (theta.cos(), theta.sin(), phi.cos(), phi.sin());
    let mut j = nalgebra::SMatrix::<T, 6, 4>::zeros();
    j[(0, 0)] = T::one();
    j[(1, 1)] = T::one();
    j[(2, 0)] = -d * cp * st;
    j[(2, 1)] = -d * sp * ct;
    j[(2, 2)] = cp * ct;
    j[(3, 0)] = d * cp * ct;
    j[(3, 1)] = -d * sp * st;
    j[(3, 2)] = cp * st;
    j[(4, 0)] = v * cp * st;
    j[(4, 1)] = v * sp * ct;
    j[(4, 3)] = -cp * ct;
    j[(5, 0)] = -v * cp * ct;
    j[(5, 1)] = v * sp * st;
    j[(5, 3)] = -cp * st;
    j
}

/// Diagonal Ξ-space covariance by first-order propagation of independent
/// measurement errors with standard deviations `sigma`.
pub fn imm_observation_cov<T: Real>(m: &Vector4<T>, sigma: &Vector4<T>) -> Matrix6<T> {
    let j = decompose_jacobian(m);
    let raw = Matrix4::from_diagonal(&sigma.component_mul(sigma));
    let full = j * raw * j.transpose();
    let floor = lit::<T>(1e-9);
    Matrix6::from_diagonal(&full.diagonal().map(|x| x + floor))
}

/// Track frame rotated so that the reference heading points along −x.
///
/// The IMM runs in this frame: a right turn moves the vehicle towards +y and
/// a left turn towards −y. The lateral velocity observation is unsigned, so
/// the direction of lateral motion is carried by the model alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeadingFrame<T: Real> {
    pub heading: T,
}

impl<T: Real> HeadingFrame<T> {
    pub fn new(heading: T) -> Self {
        Self { heading }
    }

    fn offset(&self) -> T {
        self.heading - T::pi()
    }

    pub fn to_local(&self, global_azimuth: T) -> T {
        wrap_angle(global_azimuth - self.offset())
    }

    pub fn to_global(&self, local_azimuth: T) -> T {
        wrap_angle(local_azimuth + self.offset())
    }

    /// Heading after completing `maneuver`.
    pub fn heading_after(&self, maneuver: Maneuver) -> T {
        let quarter = T::frac_pi_2();
        match maneuver {
            Maneuver::Straight => self.heading,
            Maneuver::Left => wrap_angle(self.heading + quarter),
            Maneuver::Right => wrap_angle(self.heading - quarter),
        }
    }

    pub fn observe(&self, m: &Vector4<T>, sigma: &Vector4<T>) -> ImmObservation<T> {
        let mut local = *m;
        local[0] = self.to_local(m[0]);
        let mut z = decompose_to_imm(&local);
        z[5] = z[5].abs();
        ImmObservation { z, cov: Some(imm_observation_cov(&local, sigma)) }
    }
}

/// One maneuver hypothesis with its process and measurement covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct ManeuverModel<T: Real> {
    pub kind: Maneuver,
    pub process: Matrix6<T>,
    pub measurement: Matrix6<T>,
}

const STRAIGHT_COS_MIN: f64 = 1e-3;
const STRAIGHT_RANGE_MIN: f64 = 1e-6;

fn straight_terms<T: Real>(xi: &Vector6<T>) -> Result<(T, T, T), TrackingError> {
    let (theta, dx, dy) = (xi[0], xi[2], xi[3]);
    let (c, s) = (theta.cos(), theta.sin());
    let den = dx * c + dy * s;
    if c.abs() < lit(STRAIGHT_COS_MIN) || den.abs() < lit(STRAIGHT_RANGE_MIN) {
        return Err(TrackingError::StraightSingularity);
    }
    Ok((c, s, den))
}

fn turn_sign<T: Real>(kind: Maneuver) -> T {
    if kind == Maneuver::Left {
        -T::one()
    } else {
        T::one()
    }
}

/// State transition of one maneuver model over `dt`.
///
/// The straight model advances the range along the line of sight and moves
/// the azimuth by the matching bearing rate; the turning models move the
/// horizontal position by `(vˣ, ±vʸ)` and take the azimuth of the new
/// position.
pub fn model_propagate<T: Real>(kind: Maneuver, xi: &Vector6<T>, dt: T) -> Result<Vector6<T>, TrackingError> {
    let mut out = *xi;
    match kind {
        Maneuver::Straight => {
            let (c, s, den) = straight_terms(xi)?;
            let vx = xi[4];
            out[0] = wrap_angle(xi[0] - vx * dt * s / (c * c * den));
            out[2] = xi[2] + vx * dt / (c * c);
        }
        Maneuver::Left | Maneuver::Right => {
            let sign = turn_sign::<T>(kind);
            let dy = xi[3] + sign * xi[5] * dt;
            let dx = xi[2] + xi[4] * dt;
            if dx * dx + dy * dy > T::zero() {
                out[0] = dy.atan2(dx);
            }
            out[2] = dx;
            out[3] = dy;
        }
    }
    Ok(out)
}

/// Linear fallback for the straight model where its transition is singular.
pub fn straight_fallback<T: Real>(xi: &Vector6<T>, dt: T) -> (Vector6<T>, Matrix6<T>) {
    let mut out = *xi;
    out[2] = xi[2] + xi[4] * dt;
    let mut g = Matrix6::identity();
    g[(2, 4)] = dt;
    (out, g)
}

/// Analytic Jacobian of [`model_propagate`] at `xi`.
pub fn model_jacobian<T: Real>(kind: Maneuver, xi: &Vector6<T>, dt: T) -> Result<Matrix6<T>, TrackingError> {
    let mut g = Matrix6::identity();
    match kind {
        Maneuver::Straight => {
            let (c, s, den) = straight_terms(xi)?;
            let (dx, dy, vx) = (xi[2], xi[3], xi[4]);
            let (c2, c3, den2) = (c * c, c * c * c, den * den);
            let two = lit::<T>(2.0);
            let d_den_dtheta = -dx * s + dy * c;
            let f_theta = vx * dt * ((T::one() / c + two * s * s / c3) / den - s / c2 * d_den_dtheta / den2);
            let f_dx = -vx * dt * s / (c * den2);
            let f_dy = -vx * dt * s * s / (c2 * den2);
            let f_vx = dt * s / (c2 * den);
            g[(0, 0)] = T::one() - f_theta;
            g[(0, 2)] = -f_dx;
            g[(0, 3)] = -f_dy;
            g[(0, 4)] = -f_vx;
            g[(2, 0)] = vx * dt * two * s / c3;
            g[(2, 4)] = dt / c2;
        }
        Maneuver::Left | Maneuver::Right => {
            let sign = turn_sign::<T>(kind);
            let n = xi[3] + sign * xi[5] * dt;
            let d = xi[2] + xi[4] * dt;
            let r2 = n * n + d * d;
            if r2 > T::zero() {
                g[(0, 0)] = T::zero();
                g[(0, 2)] = -n / r2;
                g[(0, 3)] = d / r2;
                g[(0, 4)] = -n * dt / r2;
                g[(0, 5)] = sign * dt * d / r2;
            }
            g[(2, 4)] = dt;
            g[(3, 5)] = sign * dt;
        }
    }
    Ok(g)
}

/// IMM tuning: initial probabilities, transition matrix and covariance scales.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmConfig<T: Real> {
    pub p0: Vector3<T>,
    pub transition: Matrix3<T>,
    /// Process covariance as a multiple of the first observation covariance.
    pub process_scale: T,
    /// Same, for the two velocity components.
    pub velocity_process_scale: T,
    /// Initial state covariance as a multiple of the first observation covariance.
    pub init_scale: T,
    pub dt: T,
}

impl<T: Real> ImmConfig<T> {
    pub fn validate(&self) -> Result<(), TrackingError> {
        let tol = lit::<T>(1e-9);
        if self.p0.iter().any(|&p| p < T::zero()) || (self.p0.sum() - T::one()).abs() > tol {
            return Err(TrackingError::InvalidConfig("p0 must lie on the probability simplex".into()));
        }
        for r in 0..3 {
            let row = self.transition.row(r);
            if row.iter().any(|&p| p < T::zero()) || (row.sum() - T::one()).abs() > tol {
                return Err(TrackingError::InvalidConfig(format!("transition row {r} is not stochastic")));
            }
        }
        if self.process_scale < T::zero()
            || self.velocity_process_scale < T::zero()
            || self.init_scale <= T::zero()
            || self.dt < T::zero()
        {
            return Err(TrackingError::InvalidConfig("covariance scales and dt must be positive".into()));
        }
        Ok(())
    }
}

/// Per-block IMM diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmDiagnostics<T: Real> {
    /// Log-likelihood of each model, summed over the block.
    pub log_likelihoods: Vector3<T>,
    /// Euclidean norm of each model's last residual.
    pub residual_norms: Vector3<T>,
    pub probabilities: Vector3<T>,
    /// Mixed probabilities after each observation, before block averaging.
    pub per_observation: Vec<Vector3<T>>,
    pub straight_fallback: bool,
    pub likelihood_fallback: bool,
}

/// Three-model IMM-EKF state.
///
/// `probabilities` and `means` hold the block-averaged values of the last
/// completed block; covariances carry over from the last measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmState<T: Real> {
    pub models: [ManeuverModel<T>; 3],
    pub means: [Vector6<T>; 3],
    pub covs: [Matrix6<T>; 3],
    pub probabilities: Vector3<T>,
    pub transition: Matrix3<T>,
    pub dt: T,
}

impl<T: Real> ImmState<T> {
    /// Track start from the first observation of a block.
    pub fn new(first: &ImmObservation<T>, config: &ImmConfig<T>) -> Result<Self, TrackingError> {
        config.validate()?;
        let qm = first.cov.unwrap_or_else(Matrix6::identity);
        let mut process = qm * config.process_scale;
        for i in 4..6 {
            process[(i, i)] = qm[(i, i)] * config.velocity_process_scale;
        }
        let model = |kind| ManeuverModel { kind, process, measurement: qm };
        Ok(Self {
            models: Maneuver::ALL.map(model),
            means: [first.z; 3],
            covs: [qm * config.init_scale; 3],
            probabilities: config.p0,
            transition: config.transition,
            dt: config.dt,
        })
    }

    pub fn dominant(&self) -> Maneuver {
        Maneuver::from_index(self.probabilities.imax()).unwrap_or_default()
    }

    pub fn probability(&self, m: Maneuver) -> T {
        self.probabilities[m.index()]
    }

    /// Probability-weighted state estimate; the azimuth is averaged on the
    /// circle.
    pub fn combined(&self) -> Vector6<T> {
        weighted_state(&self.means, self.probabilities.as_slice())
    }
}

fn weighted_state<T: Real>(states: &[Vector6<T>], weights: &[T]) -> Vector6<T> {
    let mut out = Vector6::zeros();
    let (mut sin_sum, mut cos_sum) = (T::zero(), T::zero());
    for (x, &w) in states.iter().zip(weights) {
        out += x * w;
        sin_sum += w * x[0].sin();
        cos_sum += w * x[0].cos();
    }
    out[0] = sin_sum.atan2(cos_sum);
    out
}

/// Mixed probability update: prior `ϖᵀ p` weighted by the model likelihoods
/// and normalized. Returns the new probabilities and whether the likelihoods
/// could not be normalized (non-finite), in which case only the mixing prior
/// is used. Likelihoods are shifted by their maximum, so uniformly tiny
/// values do not underflow.
pub fn mix_probabilities<T: Real>(
    p: &Vector3<T>,
    transition: &Matrix3<T>,
    log_likelihoods: &Vector3<T>,
) -> (Vector3<T>, bool) {
    let prior = transition.transpose() * p;
    let prior = prior / prior.sum();
    let max = log_likelihoods.max();
    let shifted = log_likelihoods.map(|l| l - max);
    if !max.is_finite() || shifted.iter().all(|&l| !(l >= lit(-700.0))) {
        return (prior, true);
    }
    let weighted = Vector3::from_fn(|i, _| prior[i] * shifted[i].exp());
    let total = weighted.sum();
    if total > T::zero() && total.is_finite() {
        (weighted / total, false)
    } else {
        (prior, true)
    }
}

/// Arithmetic mean of per-measurement probabilities and per-model states.
pub fn block_average<T: Real>(
    probabilities: &[Vector3<T>],
    states: &[[Vector6<T>; 3]],
) -> Result<(Vector3<T>, [Vector6<T>; 3]), TrackingError> {
    if probabilities.is_empty() || states.len() != probabilities.len() {
        return Err(TrackingError::EmptyBlock);
    }
    let n = lit::<T>(probabilities.len() as f64);
    let p = probabilities.iter().fold(Vector3::zeros(), |acc, x| acc + x) / n;
    let weights = vec![T::one() / n; states.len()];
    let means = [0, 1, 2].map(|k| {
        let per_model: Vec<Vector6<T>> = states.iter().map(|s| s[k]).collect();
        weighted_state(&per_model, &weights)
    });
    Ok((p, means))
}

fn gaussian_log_likelihood<T: Real>(r: &Vector6<T>, chol: &nalgebra::Cholesky<T, nalgebra::Const<6>>) -> T {
    let solved = chol.solve(r);
    let log_det = chol.l().diagonal().iter().fold(T::zero(), |acc, &x| acc + x.ln()) * lit::<T>(2.0);
    let two_pi = T::two_pi();
    -(r.dot(&solved) + log_det + lit::<T>(6.0) * two_pi.ln()) * lit::<T>(0.5)
}

/// One block of the IMM-EKF: a prediction per model followed by sequential
/// updates with each observation, probability mixing per observation, and
/// block averaging.
pub fn imm_step_block<T: Real>(
    s: &ImmState<T>,
    observations: &[ImmObservation<T>],
) -> Result<(ImmState<T>, ImmDiagnostics<T>), TrackingError> {
    if observations.is_empty() {
        return Err(TrackingError::EmptyBlock);
    }
    let mut next = s.clone();
    let mut used_fallback = false;
    for (k, model) in s.models.iter().enumerate() {
        let (mean, g) =
            match (model_propagate(model.kind, &s.means[k], s.dt), model_jacobian(model.kind, &s.means[k], s.dt)) {
                (Ok(m), Ok(g)) => (m, g),
                _ => {
                    used_fallback = true;
                    straight_fallback(&s.means[k], s.dt)
                }
            };
        next.means[k] = mean;
        next.covs[k] = symmetrize(&(g * s.covs[k] * g.transpose() + model.process));
    }

    let mut probs = Vec::with_capacity(observations.len());
    let mut states = Vec::with_capacity(observations.len());
    let mut log_sum = Vector3::zeros();
    let mut residual_norms = Vector3::zeros();
    let mut likelihood_fallback = false;
    for obs in observations {
        let mut log_l = Vector3::zeros();
        let mut posterior = next.means;
        for k in 0..3 {
            if let Some(cov) = obs.cov {
                next.models[k].measurement = cov;
            }
            let qm = next.models[k].measurement;
            let mut r = obs.z - next.means[k];
            r[0] = wrap_angle(r[0]);
            let innovation = symmetrize(&(next.covs[k] + qm));
            let chol = innovation.cholesky().ok_or(TrackingError::SingularResidual)?;
            let gain = next.covs[k] * chol.inverse();
            let mut x = next.means[k] + gain * r;
            x[0] = wrap_angle(x[0]);
            posterior[k] = x;
            next.covs[k] = joseph(&gain, &next.covs[k], &qm);
            log_l[k] = gaussian_log_likelihood(&r, &chol);
            residual_norms[k] = r.norm();
        }
        next.means = posterior;
        let (p, fallback) = mix_probabilities(&s.probabilities, &s.transition, &log_l);
        likelihood_fallback |= fallback;
        log_sum += log_l;
        probs.push(p);
        states.push(posterior);
    }
    let (p, means) = block_average(&probs, &states)?;
    next.probabilities = p;
    next.means = means;
    let diag = ImmDiagnostics {
        log_likelihoods: log_sum,
        residual_norms,
        probabilities: p,
        per_observation: probs,
        straight_fallback: used_fallback,
        likelihood_fallback,
    };
    Ok((next, diag))
}

/// Single-observation block.
pub fn imm_step<T: Real>(
    s: &ImmState<T>,
    obs: &ImmObservation<T>,
) -> Result<(ImmState<T>, ImmDiagnostics<T>), TrackingError> {
    imm_step_block(s, std::slice::from_ref(obs))
}

/// Standard deviations of the raw `[θ, φ, d, v]` measurement as a vector.
pub fn sigma_vector<T: Real>(sigma_theta: T, sigma_phi: T, sigma_d: T, sigma_v: T) -> Vector4<T> {
    Vector4::new(sigma_theta, sigma_phi, sigma_d, sigma_v)
}
