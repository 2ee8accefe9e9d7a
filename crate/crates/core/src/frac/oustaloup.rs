//! Oustaloup recursive band-limited rational approximation of `s^alpha`.
//!
//! Inside the band `[omega_b, omega_h]` the magnitude of
//!
//! ```text
//! H(s) = K * prod_{k=1..N} (s + w'_k) / (s + w_k)
//! ```
//!
//! tracks `omega^alpha` (slope `20*alpha` dB/decade) and the phase sits near
//! `alpha * 90` degrees. Zeros and poles interlace geometrically:
//!
//! ```text
//! w'_k = omega_b * (omega_h/omega_b)^((2k-1-alpha)/(2N))
//! w_k  = omega_b * (omega_h/omega_b)^((2k-1+alpha)/(2N))
//! ```
//!
//! The gain is normalized so `|H| = omega^alpha` at the geometric band
//! center. This realization exists to cross-validate the GL operators; the
//! controllers themselves run on GL.

use crate::error::FracError;
use crate::scalar::Real;

/// Band-limited rational approximation of a fractional differintegrator,
/// with a bilinear-discretized cascade for sample-by-sample evaluation.
#[derive(Debug, Clone)]
pub struct OustaloupApprox<T> {
    alpha: T,
    omega_b: T,
    omega_h: T,
    /// Zero corner frequencies (rad/s); the actual zeros sit at `-zeros[k]`.
    zeros: Vec<T>,
    /// Pole corner frequencies (rad/s); the actual poles sit at `-poles[k]`.
    poles: Vec<T>,
    gain: T,
    discrete: Option<Discrete<T>>,
}

#[derive(Debug, Clone)]
struct Discrete<T> {
    h: T,
    /// Per-section Tustin coefficients (b0, b1, a1).
    coeff: Vec<(T, T, T)>,
    /// Per-section previous input/output.
    state: Vec<(T, T)>,
}

impl<T: Real> OustaloupApprox<T> {
    /// Design an N-cell approximation of `s^alpha` over `[omega_b, omega_h]`.
    ///
    /// Requires `0 < omega_b < omega_h`, `n_cells >= 1` and `0 < |alpha| <= 1`;
    /// `alpha = 0` is rejected (the identity needs no approximation).
    pub fn design(alpha: T, omega_b: T, omega_h: T, n_cells: usize) -> Result<Self, FracError> {
        if !(omega_b > T::zero()) || !(omega_h > omega_b) {
            return Err(FracError::InvalidBand {
                omega_b: omega_b.to_f64().unwrap_or(f64::NAN),
                omega_h: omega_h.to_f64().unwrap_or(f64::NAN),
            });
        }
        if n_cells == 0 {
            return Err(FracError::NoCells);
        }
        if alpha == T::zero() || alpha.abs() > T::one() {
            return Err(FracError::InvalidOustaloupOrder(
                alpha.to_f64().unwrap_or(f64::NAN),
            ));
        }
        let ratio = omega_h / omega_b;
        let two_n = T::of_usize(2 * n_cells);
        let mut zeros = Vec::with_capacity(n_cells);
        let mut poles = Vec::with_capacity(n_cells);
        for k in 1..=n_cells {
            let kk = T::of_usize(2 * k - 1);
            zeros.push(omega_b * ratio.powf((kk - alpha) / two_n));
            poles.push(omega_b * ratio.powf((kk + alpha) / two_n));
        }
        let mut approx = Self {
            alpha,
            omega_b,
            omega_h,
            zeros,
            poles,
            gain: T::one(),
            discrete: None,
        };
        // Normalize so the magnitude is exact at the geometric band center.
        let w_center = (omega_b * omega_h).sqrt();
        let (mag, _) = approx.response(w_center);
        approx.gain = w_center.powf(alpha) / mag;
        Ok(approx)
    }

    pub fn order(&self) -> T {
        self.alpha
    }

    pub fn band(&self) -> (T, T) {
        (self.omega_b, self.omega_h)
    }

    pub fn zeros(&self) -> &[T] {
        &self.zeros
    }

    pub fn poles(&self) -> &[T] {
        &self.poles
    }

    pub fn gain(&self) -> T {
        self.gain
    }

    /// Continuous-time frequency response `(magnitude, phase_rad)` at
    /// `omega` rad/s.
    pub fn response(&self, omega: T) -> (T, T) {
        let mut mag = self.gain;
        let mut phase = T::zero();
        for (&z, &p) in self.zeros.iter().zip(&self.poles) {
            mag = mag * ((omega * omega + z * z) / (omega * omega + p * p)).sqrt();
            phase = phase + omega.atan2(z) - omega.atan2(p);
        }
        (mag, phase)
    }

    /// Magnitudes of the bilinear-discretized poles for sample period `h`.
    pub fn discrete_pole_magnitudes(&self, h: T) -> Vec<T> {
        let two_over_h = T::of(2.0) / h;
        self.poles
            .iter()
            .map(|&p| ((p - two_over_h) / (p + two_over_h)).abs())
            .collect()
    }

    /// Advance the discretized filter by one input sample.
    ///
    /// The cascade is (re)discretized with the Tustin transform whenever `h`
    /// changes. Requires `omega_h < pi/h` so the band fits under Nyquist.
    pub fn step(&mut self, x: T, h: T) -> Result<T, FracError> {
        if !x.is_finite() {
            return Err(FracError::NonFiniteInput);
        }
        if !(h > T::zero()) || self.omega_h >= T::PI() / h {
            return Err(FracError::BandRateMismatch {
                h: h.to_f64().unwrap_or(f64::NAN),
                omega_h: self.omega_h.to_f64().unwrap_or(f64::NAN),
            });
        }
        let rebuild = match &self.discrete {
            Some(d) => d.h != h,
            None => true,
        };
        if rebuild {
            let two_over_h = T::of(2.0) / h;
            let coeff = self
                .zeros
                .iter()
                .zip(&self.poles)
                .map(|(&z, &p)| {
                    let den = two_over_h + p;
                    ((two_over_h + z) / den, (z - two_over_h) / den, (p - two_over_h) / den)
                })
                .collect::<Vec<_>>();
            let state = vec![(T::zero(), T::zero()); coeff.len()];
            self.discrete = Some(Discrete { h, coeff, state });
        }
        let d = self.discrete.as_mut().expect("just built");
        let mut u = x;
        for (i, &(b0, b1, a1)) in d.coeff.iter().enumerate() {
            let (x_prev, y_prev) = d.state[i];
            let y = b0 * u + b1 * x_prev - a1 * y_prev;
            d.state[i] = (u, y);
            u = y;
        }
        Ok(self.gain * u)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frac::gl::GlDifferintegrator;

    fn db(x: f64) -> f64 {
        20.0 * x.log10()
    }

    #[test]
    fn design_validates_inputs() {
        assert!(matches!(
            OustaloupApprox::design(0.5_f64, 10.0, 1.0, 5),
            Err(FracError::InvalidBand { .. })
        ));
        assert!(matches!(
            OustaloupApprox::design(0.0_f64, 0.01, 1e4, 5),
            Err(FracError::InvalidOustaloupOrder(_))
        ));
        assert!(matches!(
            OustaloupApprox::design(0.5_f64, 0.01, 1e4, 0),
            Err(FracError::NoCells)
        ));
    }

    #[test]
    fn zeros_and_poles_interlace_in_band() {
        let f = OustaloupApprox::design(0.5_f64, 0.01, 1e4, 5).unwrap();
        let mut prev = 0.0;
        for (&z, &p) in f.zeros().iter().zip(f.poles()) {
            assert!(z > prev && p > z, "interlacing broken: z={z} p={p}");
            assert!(z >= 0.01 && p <= 1e4);
            prev = p;
        }
    }

    #[test]
    fn magnitude_tracks_fractional_slope() {
        // |H(j w)| within +-1 dB of w^0.5 over the central two decades
        let f = OustaloupApprox::design(0.5_f64, 0.01, 1e4, 5).unwrap();
        let mut w = 1.0;
        while w <= 100.0 {
            let (mag, _) = f.response(w);
            let err_db = db(mag) - db(w.powf(0.5));
            assert!(err_db.abs() <= 1.0, "at w={w}: {err_db} dB off ideal");
            w *= 1.25;
        }
        // spot check the example: |H(j*1)| within +-1 dB of 0 dB
        let (mag1, _) = f.response(1.0);
        assert!(db(mag1).abs() <= 1.0);
    }

    #[test]
    fn phase_near_alpha_90_at_center() {
        let f = OustaloupApprox::design(0.5_f64, 0.01, 1e4, 5).unwrap();
        let w_center = (0.01_f64 * 1e4).sqrt();
        let (_, ph) = f.response(w_center);
        let deg = ph.to_degrees();
        assert!((deg - 45.0).abs() <= 5.0, "center phase {deg} deg");
    }

    #[test]
    fn discretized_poles_inside_unit_circle() {
        for &alpha in &[0.5_f64, -0.5, 0.875, -0.95] {
            let f = OustaloupApprox::design(alpha, 0.01, 1e4, 5).unwrap();
            for m in f.discrete_pole_magnitudes(1e-4) {
                assert!(m < 1.0, "unstable discrete pole: {m}");
            }
        }
    }

    #[test]
    fn step_rejects_band_rate_mismatch() {
        let mut f = OustaloupApprox::design(0.5_f64, 0.01, 1e4, 5).unwrap();
        assert!(matches!(
            f.step(1.0, 1e-3),
            Err(FracError::BandRateMismatch { .. })
        ));
    }

    #[test]
    fn integrator_design_step_response_is_ramp() {
        // alpha = -1 reduces to an integrator inside the band: unit-step
        // response slope ~1 between the band corner time scales.
        let mut f = OustaloupApprox::design(-1.0_f64, 0.01, 1e4, 5).unwrap();
        let h = 1e-4;
        let mut y_at = |t_end: f64, y0: &mut f64, t0: &mut f64| {
            while *t0 < t_end {
                *y0 = f.step(1.0, h).unwrap();
                *t0 += h;
            }
            *y0
        };
        let (mut y, mut t) = (0.0, 0.0);
        let y1 = y_at(0.2, &mut y, &mut t);
        let y2 = y_at(1.0, &mut y, &mut t);
        let slope = (y2 - y1) / 0.8;
        assert!((slope - 1.0).abs() < 0.1, "ramp slope {slope}");
    }

    /// Steady-state sinusoid gain of the discretized filter at mid-band.
    fn sine_gain(f: &mut OustaloupApprox<f64>, omega: f64, h: f64) -> f64 {
        let period = 2.0 * std::f64::consts::PI / omega;
        let n_settle = (20.0 * period / h) as usize;
        let n_meas = (4.0 * period / h) as usize;
        let mut peak = 0.0_f64;
        for k in 0..(n_settle + n_meas) {
            let t = k as f64 * h;
            let y = f.step((omega * t).sin(), h).unwrap();
            if k >= n_settle {
                peak = peak.max(y.abs());
            }
        }
        peak
    }

    #[test]
    fn sinusoid_gain_matches_omega_alpha() {
        let mut f = OustaloupApprox::design(0.5_f64, 0.01, 1e4, 5).unwrap();
        let omega = 10.0; // geometric mean of the band
        let gain = sine_gain(&mut f, omega, 1e-4);
        let ideal = omega.powf(0.5);
        assert!(
            ((gain - ideal) / ideal).abs() < 0.12,
            "gain {gain} vs ideal {ideal}"
        );
    }

    #[test]
    fn gl_and_oustaloup_agree_on_midband_sinusoid() {
        let omega = 10.0;
        let h = 1e-4;
        let mut oust = OustaloupApprox::design(0.5_f64, 0.01, 1e4, 5).unwrap();
        let mut gl = GlDifferintegrator::new(0.5_f64, h, 40_000).unwrap();
        let period = 2.0 * std::f64::consts::PI / omega;
        let n_settle = (4.0 * period / h) as usize;
        let n_meas = (2.0 * period / h) as usize;
        let (mut pk_o, mut pk_g) = (0.0_f64, 0.0_f64);
        for k in 0..(n_settle + n_meas) {
            let t = k as f64 * h;
            let x = (omega * t).sin();
            let yo = oust.step(x, h).unwrap();
            let yg = gl.step(x).unwrap();
            if k >= n_settle {
                pk_o = pk_o.max(yo.abs());
                pk_g = pk_g.max(yg.abs());
            }
        }
        assert!(
            ((pk_o - pk_g) / pk_g).abs() < 0.15,
            "cross-realization gap: oustaloup {pk_o} vs gl {pk_g}"
        );
    }
}
