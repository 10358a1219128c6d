//! Coordinate transforms, UPA steering vectors and array gain.
//!
//! Angles follow the radar convention used throughout the crate: azimuth `θ`
//! in the horizontal plane measured from +x towards +y, wrapped to
//! `(−π, π]`, and elevation `φ` above the horizontal plane in `[−π/2, π/2]`.

use nalgebra::Vector3;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::Real;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Cartesian point in the fixed world frame, meters.
pub type Vec3<T> = Vector3<T>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("zero range between anchor and point")]
    ZeroRange,
}

/// Range / azimuth / elevation of a point seen from an anchor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SphericalObs<T> {
    pub d: T,
    pub theta: T,
    pub phi: T,
}

impl<T: Real> SphericalObs<T> {
    pub fn new(d: T, theta: T, phi: T) -> Self {
        Self { d, theta, phi }
    }

    /// Direction only; range set to one.
    pub fn direction(theta: T, phi: T) -> Self {
        Self { d: T::one(), theta, phi }
    }
}

/// Uniform planar array dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpaGeometry {
    pub nx: usize,
    pub ny: usize,
}

impl UpaGeometry {
    pub fn new(nx: usize, ny: usize) -> Self {
        assert!(nx >= 1 && ny >= 1, "UPA needs at least one element per axis");
        Self { nx, ny }
    }

    pub fn elements(&self) -> usize {
        self.nx * self.ny
    }
}

/// Unit-norm array response. Element `(p, q)` lives at index `p * ny + q`.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringVector<T> {
    pub geom: UpaGeometry,
    pub elements: Vec<Complex<T>>,
}

impl<T: Real> SteeringVector<T> {
    pub fn norm(&self) -> T {
        self.elements.iter().fold(T::zero(), |acc, e| acc + e.norm_sqr()).sqrt()
    }

    /// Conjugate inner product `selfᴴ · other`.
    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.elements
            .iter()
            .zip(&other.elements)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| acc + a.conj() * b)
    }
}

pub(crate) fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Wraps an angle to `(−π, π]`.
pub fn wrap_angle<T: Real>(a: T) -> T {
    let two_pi = T::two_pi();
    let mut w = a - two_pi * ((a + T::pi()) / two_pi).floor();
    // floor maps exactly −π to −π; the half-open range wants +π
    if w <= -T::pi() {
        w += two_pi;
    }
    if w > T::pi() {
        w -= two_pi;
    }
    w
}

/// Array response of a UPA towards `(θ, φ)`:
/// `a[p, q] = exp(jπ(p·sinθ·cosφ + q·sinφ)) / √(nx·ny)`.
pub fn steering_vector<T: Real>(theta: T, phi: T, geom: UpaGeometry) -> SteeringVector<T> {
    let scale = T::one() / lit::<T>(geom.elements() as f64).sqrt();
    let ux = theta.sin() * phi.cos();
    let uy = phi.sin();
    let mut elements = Vec::with_capacity(geom.elements());
    for p in 0..geom.nx {
        for q in 0..geom.ny {
            let phase = T::pi() * (lit::<T>(p as f64) * ux + lit::<T>(q as f64) * uy);
            elements.push(Complex::new(scale * phase.cos(), scale * phase.sin()));
        }
    }
    SteeringVector { geom, elements }
}

/// Linear power gain `N·|a(target)ᴴ a(steer)|²` of a beam steered at `steer`
/// seen from direction `target`. Peaks at `N = nx·ny` when aligned.
pub fn beam_gain<T: Real>(geom: UpaGeometry, steer: &SphericalObs<T>, target: &SphericalObs<T>) -> T {
    let w = steering_vector(steer.theta, steer.phi, geom);
    let a = steering_vector(target.theta, target.phi, geom);
    lit::<T>(geom.elements() as f64) * a.inner(&w).norm_sqr()
}

/// Point at range `d` along `(θ, φ)` from `anchor`.
pub fn spherical_to_cartesian<T: Real>(anchor: &Vec3<T>, obs: &SphericalObs<T>) -> Vec3<T> {
    let (sp, cp) = obs.phi.sin_cos();
    let (st, ct) = obs.theta.sin_cos();
    Vec3::new(anchor.x + obs.d * cp * ct, anchor.y + obs.d * cp * st, anchor.z + obs.d * sp)
}

/// Inverse of [`spherical_to_cartesian`]. At the zenith (no horizontal
/// offset) the azimuth is undefined and reported as `0`.
pub fn cartesian_to_spherical<T: Real>(anchor: &Vec3<T>, point: &Vec3<T>) -> Result<SphericalObs<T>, GeometryError> {
    let delta = point - anchor;
    let d = delta.norm();
    if d == T::zero() {
        return Err(GeometryError::ZeroRange);
    }
    let horizontal = delta.x.hypot(delta.y);
    let theta = if horizontal == T::zero() { T::zero() } else { wrap_angle(delta.y.atan2(delta.x)) };
    let phi = delta.z.atan2(horizontal).clamp(-T::frac_pi_2(), T::frac_pi_2());
    Ok(SphericalObs { d, theta, phi })
}

/// Euclidean distance between a candidate gNB and the estimated UE position.
pub fn candidate_distance<T: Real>(candidate: &Vec3<T>, ue_est: &Vec3<T>) -> T {
    (candidate - ue_est).norm()
}

/// Two-way Doppler shift (Hz) and round-trip delay (s) for radial velocity
/// `v`, range `d` and carrier `fc`.
pub fn doppler_and_delay<T: Real>(v: T, d: T, fc: T) -> (T, T) {
    let c = lit::<T>(SPEED_OF_LIGHT);
    let two = lit::<T>(2.0);
    (two * v * fc / c, two * d / c)
}
