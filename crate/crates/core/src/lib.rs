//! Deterministic simulator and controller library for a two-stage
//! single-phase grid-connected photovoltaic system.
//!
//! The chain is: single-diode PV array -> boost converter -> DC link ->
//! H-bridge inverter -> L filter -> stiff grid. Control has three loops:
//! a P&O MPPT reference generator feeding a fractional-order backstepping
//! PV-voltage loop (boost duty), a fractional-order PI DC-link regulator
//! producing the grid current scale, and a fractional-order backstepping
//! grid-current loop (inverter modulation). Setting every fractional order
//! to one recovers the integer-order baseline controller.
//!
//! All numerics are generic over the scalar type ([`scalar::Real`]); the
//! aliases below fix `f64`, which the engine and CLI use.

pub mod error;
pub mod frac;
pub mod checks;
pub mod control;
pub mod metrics;
pub mod plant;
pub mod pv;
pub mod scenario;
pub mod sim;
pub mod scalar;
pub mod special;

pub use error::{FracError, MetricsError, PvError, ScenarioError, SimError, SizingError};

/// f64 GL differintegrator (the runtime operator realization).
pub type GlDifferintegrator = frac::GlDifferintegrator<f64>;
/// f64 Oustaloup approximation (the cross-validation realization).
pub type OustaloupApprox = frac::OustaloupApprox<f64>;
/// f64 PV array.
pub type PvArray = pv::PvArray<f64>;
/// f64 panel parameters.
pub type PvPanelParams = pv::PvPanelParams<f64>;
/// f64 environment input.
pub type EnvironmentInput = pv::EnvironmentInput<f64>;
