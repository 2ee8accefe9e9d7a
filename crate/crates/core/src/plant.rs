//! Averaged and switched models of the two-stage power circuit, converter
//! sizing relations, and the grid voltage source.
//!
//! States: `x1` PV capacitor voltage, `x2` boost inductor current, `x3`
//! DC-link voltage, `x4` grid filter current. The averaged model replaces
//! the discrete switch states by the continuous duties `u1` (boost) and `u2`
//! (inverter modulation):
//!
//! ```text
//! C_pv x1' = i_pv - x2
//! L_o  x2' = x1 - (1 - u1) x3            - r_boost x2
//! C_dc x3' = (1 - u1) x2 - u2 x4
//! L_g  x4' = u2 x3 - v_g                 - r_grid x4
//! ```
//!
//! The resistive terms are optional conduction parasitics (zero in ideal
//! configurations). The switched realization drives the same right-hand
//! side with `mu1 in {0,1}` from a 100 kHz triangle comparison and
//! `mu2 in {-1,0,1}` from 10 kHz unipolar sine PWM.

use serde::{Deserialize, Serialize};

use crate::error::SizingError;
use crate::scalar::Real;

/// Circuit constants. Defaults are the reference system values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlantParams<T: Real> {
    /// PV output capacitor, F.
    pub c_pv: T,
    /// Boost inductor, H.
    pub l_o: T,
    /// DC-link capacitor, F.
    pub c_dc: T,
    /// Grid filter inductor, H.
    pub l_g: T,
    /// Grid RMS voltage, V.
    pub grid_v_rms: T,
    /// Grid frequency, Hz.
    pub grid_freq: T,
    /// Boost PWM carrier frequency, Hz.
    pub f_sw_boost: T,
    /// Inverter PWM carrier frequency, Hz.
    pub f_sw_inv: T,
    /// Boost inductor series resistance, ohm.
    pub r_lo: T,
    /// Grid inductor series resistance, ohm.
    pub r_lg: T,
    /// Switch on-resistance, ohm (one device in the boost path, two
    /// conducting devices in the H-bridge path).
    pub r_sw: T,
    /// Equivalent conduction/dead-time voltage drop of the H-bridge path,
    /// V, applied against the grid current direction. This is the usual
    /// crossover-distortion source of low-order odd harmonics.
    pub v_drop_inv: T,
    /// Diode/switch forward drop in the boost path, V.
    pub v_drop_boost: T,
}

impl<T: Real> Default for PlantParams<T> {
    fn default() -> Self {
        Self {
            c_pv: T::of(0.2e-3),
            l_o: T::of(100e-3),
            c_dc: T::of(5e-3),
            l_g: T::of(9e-3),
            grid_v_rms: T::of(220.0),
            grid_freq: T::of(50.0),
            f_sw_boost: T::of(100e3),
            f_sw_inv: T::of(10e3),
            r_lo: T::of(0.4),
            r_lg: T::of(0.3),
            r_sw: T::of(0.1),
            v_drop_inv: T::of(7.0),
            v_drop_boost: T::of(1.0),
        }
    }
}

impl<T: Real> PlantParams<T> {
    /// Zero conduction parasitics (the ideal, energy-conserving model).
    pub fn lossless(mut self) -> Self {
        self.r_lo = T::zero();
        self.r_lg = T::zero();
        self.r_sw = T::zero();
        self.v_drop_inv = T::zero();
        self.v_drop_boost = T::zero();
        self
    }

    pub fn grid_omega(&self) -> T {
        T::of(2.0) * T::PI() * self.grid_freq
    }
}

/// Circuit state vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantState<T> {
    /// PV terminal voltage, V.
    pub x1: T,
    /// Boost inductor current, A.
    pub x2: T,
    /// DC-link voltage, V.
    pub x3: T,
    /// Grid filter current, A.
    pub x4: T,
}

impl<T: Real> PlantState<T> {
    pub fn new(x1: T, x2: T, x3: T, x4: T) -> Self {
        Self { x1, x2, x3, x4 }
    }

    /// Stored energy: 0.5 (C_pv x1^2 + L_o x2^2 + C_dc x3^2 + L_g x4^2).
    pub fn stored_energy(&self, p: &PlantParams<T>) -> T {
        let half = T::of(0.5);
        half * (p.c_pv * self.x1 * self.x1
            + p.l_o * self.x2 * self.x2
            + p.c_dc * self.x3 * self.x3
            + p.l_g * self.x4 * self.x4)
    }
}

/// Continuous control commands, saturated before use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlInputs<T> {
    /// Boost duty in [0, 1].
    pub u1: T,
    /// Inverter modulation in [-1, 1].
    pub u2: T,
}

impl<T: Real> ControlInputs<T> {
    pub fn saturated(u1: T, u2: T) -> Self {
        Self {
            u1: u1.max(T::zero()).min(T::one()),
            u2: u2.max(-T::one()).min(T::one()),
        }
    }
}

/// Realized switch states of one simulation instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwitchStates<T> {
    /// Boost switch: 0 or 1.
    pub mu1: T,
    /// Inverter output level: -1, 0 or 1.
    pub mu2: T,
}

/// State derivatives of the averaged (or switched, via realized `mu`)
/// model.
pub fn plant_derivatives<T: Real>(
    s: &PlantState<T>,
    u: &ControlInputs<T>,
    i_pv: T,
    v_g: T,
    p: &PlantParams<T>,
) -> [T; 4] {
    let one = T::one();
    let two = T::of(2.0);
    [
        (i_pv - s.x2) / p.c_pv,
        (s.x1 - (one - u.u1) * s.x3 - (p.r_lo + p.r_sw) * s.x2 - p.v_drop_boost * s.x2.signum_or_zero())
            / p.l_o,
        ((one - u.u1) * s.x2 - u.u2 * s.x4) / p.c_dc,
        (u.u2 * s.x3 - v_g - (p.r_lg + two * p.r_sw) * s.x4 - p.v_drop_inv * s.x4.signum_or_zero())
            / p.l_g,
    ]
}

trait SignumOrZero {
    fn signum_or_zero(self) -> Self;
}

impl<T: Real> SignumOrZero for T {
    fn signum_or_zero(self) -> Self {
        if self > T::zero() {
            T::one()
        } else if self < T::zero() {
            -T::one()
        } else {
            T::zero()
        }
    }
}

/// PWM comparators: boost triangle at `f_sw_boost` against `u1`, unipolar
/// sine PWM at `f_sw_inv` for `u2` (two half-bridge comparisons against one
/// triangle, three output levels).
pub fn pwm_switch_states<T: Real>(
    u: &ControlInputs<T>,
    t: T,
    p: &PlantParams<T>,
) -> SwitchStates<T> {
    let mu1 = if u.u1 > triangle01(t * p.f_sw_boost) {
        T::one()
    } else {
        T::zero()
    };
    let car = T::of(2.0) * triangle01(t * p.f_sw_inv) - T::one();
    let leg_a = if u.u2 > car { T::one() } else { T::zero() };
    let leg_b = if -u.u2 > car { T::one() } else { T::zero() };
    SwitchStates {
        mu1,
        mu2: leg_a - leg_b,
    }
}

/// Symmetric triangle in [0, 1] with unit period, starting at 0.
fn triangle01<T: Real>(phase: T) -> T {
    let p = phase.fract();
    let p = if p < T::zero() { p + T::one() } else { p };
    if p < T::of(0.5) {
        p + p
    } else {
        T::of(2.0) - (p + p)
    }
}

/// Instantaneous grid voltage: `sqrt(2) * V_rms * sin(2 pi f t)`.
pub fn grid_voltage<T: Real>(t: T, p: &PlantParams<T>) -> T {
    T::SQRT_2() * p.grid_v_rms * (p.grid_omega() * t).sin()
}

/// Time derivative of [`grid_voltage`], used by reference feedforward.
pub fn grid_voltage_derivative<T: Real>(t: T, p: &PlantParams<T>) -> T {
    let w = p.grid_omega();
    T::SQRT_2() * p.grid_v_rms * w * (w * t).cos()
}

/// Boost converter sizing record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostSizing<T> {
    /// Input (PV) voltage, V.
    pub v_in: T,
    /// Output (DC-link) voltage, V.
    pub v_out: T,
    /// Allowed inductor ripple current, A.
    pub delta_i: T,
    /// Allowed DC-link ripple, as a fraction of `v_out`.
    pub delta_v: T,
    /// Switching frequency, Hz.
    pub f_s: T,
    /// Transferred power, W.
    pub p_g: T,
    /// Grid angular frequency, rad/s.
    pub omega: T,
}

impl<T: Real> BoostSizing<T> {
    /// Duty required for the voltage ratio: `D = 1 - v_in/v_out`.
    pub fn duty(&self) -> T {
        T::one() - self.v_in / self.v_out
    }

    /// Switch on-time per period: `t_on = D / f_s`.
    pub fn t_on(&self) -> T {
        self.duty() / self.f_s
    }
}

/// Minimum boost inductance for the given ripple:
/// `L_min = v_in (v_out - v_in) / (delta_i * v_out * f_s)`.
pub fn boost_min_inductance<T: Real>(z: &BoostSizing<T>) -> Result<T, SizingError> {
    if !(z.v_in > T::zero()) || !(z.v_in < z.v_out) {
        return Err(SizingError::VoltageHeadroom {
            v_in: z.v_in.to_f64().unwrap_or(f64::NAN),
            v_out: z.v_out.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(z.v_in * (z.v_out - z.v_in) / (z.delta_i * z.v_out * z.f_s))
}

/// Ideal boost output voltage `v_in / (1 - duty)`; duties at or above 0.95
/// are rejected as beyond the practical ceiling.
pub fn boost_output_voltage<T: Real>(v_in: T, duty: T) -> Result<T, SizingError> {
    if duty >= T::of(0.95) {
        return Err(SizingError::DutyCeiling(duty.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(v_in / (T::one() - duty))
}

/// DC-link capacitance for a ripple fraction of the link voltage:
/// `C = p_g / (delta_v_frac * v_dc^2 * omega)`.
pub fn dc_link_capacitance<T: Real>(p_g: T, delta_v_frac: T, v_dc: T, omega: T) -> T {
    p_g / (delta_v_frac * v_dc * v_dc * omega)
}
