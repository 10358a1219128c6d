//! Link-abstraction simulator for handover in NR vehicle-to-infrastructure
//! networks.
//!
//! Three triggering schemes are modelled side by side:
//!
//! * classic Event A3 on RSRP with a time-to-trigger,
//! * a sensing-assisted distance scheme driven by a Kalman filter over
//!   `[θ, φ, d, v]`,
//! * a sensing-assisted probability scheme driven by an IMM-EKF over
//!   `[θ, φ, dˣ, dʸ, vˣ, vʸ]` with straight / left / right maneuver models.
//!
//! The math modules ([`geometry`], [`tracking`]) are generic over the scalar
//! type; the simulation layers run in `f64`. Concrete `f64` aliases for the
//! generic types are exported at the crate root.

pub mod channel;
pub mod error;
pub mod geometry;
pub mod handover;
pub mod metrics;
pub mod scenario;
pub mod sweep;
pub mod tracking;

pub use error::{Error, Result};

/// Scalar types accepted by the generic math modules (`f32`, `f64`).
pub trait Real: nalgebra::RealField + Copy + num_traits::FromPrimitive {}

impl<T: nalgebra::RealField + Copy + num_traits::FromPrimitive> Real for T {}

pub type Vec3 = geometry::Vec3<f64>;
pub type SphericalObs = geometry::SphericalObs<f64>;
pub type SteeringVector = geometry::SteeringVector<f64>;
pub type KfState = tracking::KfState<f64>;
pub type ImmState = tracking::ImmState<f64>;
pub type ManeuverModel = tracking::ManeuverModel<f64>;
pub type ImmObservation = tracking::ImmObservation<f64>;
