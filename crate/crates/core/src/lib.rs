//! Optomechanically induced transparency (OMIT) toolkit for nanomechanical
//! mass sensing.
//!
//! The crate models a driven optomechanical cavity in the mean-field
//! approximation: steady states and their bistability, the linear pump-probe
//! response (Stokes and homodyne sidebands), the Stokes-referenced relative
//! intensity K_st and its dependence on deposited mass, and a time-domain
//! integrator that reproduces the full sensing experiment.
//!
//! All numerics are generic over [`Real`] (`f32`/`f64`); the `*64` aliases at
//! the crate root fix the scalar to `f64`, which is what every documented
//! tolerance assumes.

// `!(x > 0)` is deliberate throughout: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// generic scalars need not implement the assign operators
#![allow(clippy::assign_op_pattern)]

pub mod config;
pub mod cubic;
pub mod error;
pub mod linear_response;
pub mod mass_sensing;
pub mod ode;
pub mod params;
pub mod scalar;
pub mod steady_state;
pub mod time_domain;
pub mod units;

pub use config::{ConfigDocument, ConfigError};
pub use error::OmitError;
pub use params::{build_params, drive_amplitude, DriveFields, SystemParams};
pub use scalar::{Cx, Real};
pub use units::PhysicalConstants;

pub type SystemParams64 = params::SystemParams<f64>;
pub type SystemParams32 = params::SystemParams<f32>;
pub type DriveFields64 = params::DriveFields<f64>;
pub type SteadyState64 = steady_state::SteadyState<f64>;
pub type BistabilityCurve64 = steady_state::BistabilityCurve<f64>;
pub type SidebandSolution64 = linear_response::SidebandSolution<f64>;
pub type ResponseSpectrum64 = linear_response::ResponseSpectrum<f64>;
pub type SensingCurve64 = mass_sensing::SensingCurve<f64>;
pub type SensitivityMap64 = mass_sensing::SensitivityMap<f64>;
pub type SimulationConfig64 = time_domain::SimulationConfig<f64>;
pub type Trajectory64 = time_domain::Trajectory<f64>;
pub type FieldSpectrum64 = time_domain::FieldSpectrum<f64>;
pub type SensingReport64 = time_domain::SensingReport<f64>;
