//! Single-diode photovoltaic source model.
//!
//! Terminal current solves the implicit diode equation
//!
//! ```text
//! I = I_ph - I_0 * (exp((V + I*Rs)/(Ns*A*k*T/q)) - 1) - (V + I*Rs)/Rp
//! ```
//!
//! at panel scale; arrays chain `n_series` identical panels and `n_parallel`
//! strings. Environment dependence follows the usual single-diode
//! conventions: photocurrent linear in irradiance with a temperature
//! coefficient, saturation current with the cubic-temperature/bandgap law.
//!
//! `fit_single_diode` extracts the five model parameters from datasheet
//! values (V_oc, I_sc, V_mpp, P_max) by pinning the short-circuit,
//! open-circuit and maximum-power conditions, and `mpp_oracle` provides a
//! brute-force maximum-power ground truth for MPPT tests.

use serde::{Deserialize, Serialize};

use crate::error::PvError;
use crate::scalar::Real;

/// Boltzmann constant, J/K.
const K_BOLTZMANN: f64 = 1.380_649e-23;
/// Elementary charge, C.
const Q_ELECTRON: f64 = 1.602_176_634e-19;
/// STC cell temperature, degrees C.
const T_STC_C: f64 = 25.0;
/// STC irradiance, W/m^2.
const G_STC: f64 = 1000.0;

/// Single-diode parameters of one panel at STC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvPanelParams<T> {
    /// Light-generated current at STC, A.
    pub i_ph_stc: T,
    /// Diode reverse saturation current at STC, A.
    pub i_0_stc: T,
    /// Series resistance, ohm.
    pub r_s: T,
    /// Shunt resistance, ohm.
    pub r_p: T,
    /// Diode ideality constant.
    pub a: T,
    /// Series cells per panel.
    pub n_s_cells: usize,
    /// Short-circuit current temperature coefficient, A/degC.
    pub k_i: T,
    /// Effective bandgap used by the i_0(T) law, eV.
    pub e_g: T,
}

/// Irradiance / temperature operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvironmentInput<T> {
    /// W/m^2, in [0, 1500].
    pub irradiance: T,
    /// Cell temperature, degrees C, in [-40, 90].
    pub temperature: T,
}

impl<T: Real> EnvironmentInput<T> {
    pub fn new(irradiance: T, temperature: T) -> Self {
        Self {
            irradiance,
            temperature,
        }
    }

    /// Standard test conditions: 1000 W/m^2, 25 degC.
    pub fn stc() -> Self {
        Self::new(T::of(G_STC), T::of(T_STC_C))
    }
}

/// Environment-adjusted diode quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveDiode<T> {
    pub i_ph: T,
    pub i_0: T,
}

/// Datasheet operating points of one panel at STC.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvDatasheet<T> {
    pub v_oc: T,
    pub i_sc: T,
    pub v_mpp: T,
    pub p_max: T,
}

impl<T: Real> PvDatasheet<T> {
    /// Table values for the Soltech 1STH-215-P module (60 cells, 215 W).
    pub fn soltech_1sth_215p() -> Self {
        Self {
            v_oc: T::of(36.4),
            i_sc: T::of(7.84),
            v_mpp: T::of(29.0),
            p_max: T::of(215.0),
        }
    }
}

/// Maximum-power point located by the brute-force oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mpp<T> {
    pub v_mpp: T,
    pub p_mpp: T,
}

impl<T: Real> PvPanelParams<T> {
    /// Ideal single-diode limit (r_s = 0, r_p = inf) reproducing `v_oc` and
    /// `i_sc` exactly.
    pub fn ideal(v_oc: T, i_sc: T, a: T, n_s_cells: usize) -> Self {
        let vt = thermal_voltage(a, n_s_cells, T::of(T_STC_C));
        let i_0 = i_sc / ((v_oc / vt).exp() - T::one());
        Self {
            i_ph_stc: i_sc,
            i_0_stc: i_0,
            r_s: T::zero(),
            r_p: T::infinity(),
            a,
            n_s_cells,
            k_i: T::zero(),
            e_g: T::of(1.12),
        }
    }

    /// Photocurrent and saturation current at the given environment.
    ///
    /// `i_ph = (G/1000) * (i_ph_stc + k_i * (T - 25))`;
    /// `i_0 = i_0_stc * (Tk/Tk_stc)^3 * exp(q*E_g/(a*k) * (1/Tk_stc - 1/Tk))`.
    pub fn apply_environment(&self, env: EnvironmentInput<T>) -> EffectiveDiode<T> {
        let g_ratio = env.irradiance / T::of(G_STC);
        let i_ph = g_ratio * (self.i_ph_stc + self.k_i * (env.temperature - T::of(T_STC_C)));
        let tk = env.temperature + T::of(273.15);
        let tk_stc = T::of(T_STC_C + 273.15);
        let band = T::of(Q_ELECTRON / K_BOLTZMANN) * self.e_g / self.a;
        let i_0 = self.i_0_stc
            * (tk / tk_stc).powi(3)
            * (band * (T::one() / tk_stc - T::one() / tk)).exp();
        EffectiveDiode { i_ph, i_0 }
    }

    /// Terminal current of one panel at voltage `v` under `env`.
    pub fn current(&self, v: T, env: EnvironmentInput<T>) -> Result<T, PvError> {
        let eff = self.apply_environment(env);
        let vt = thermal_voltage(self.a, self.n_s_cells, env.temperature);
        solve_implicit_current(v, eff, self.r_s, self.r_p, vt)
    }
}

/// Thermal voltage of `n_cells` series cells with ideality `a` at `t_c` degC.
fn thermal_voltage<T: Real>(a: T, n_cells: usize, t_c: T) -> T {
    let tk = t_c + T::of(273.15);
    T::of_usize(n_cells) * a * T::of(K_BOLTZMANN / Q_ELECTRON) * tk
}

/// Solve `I = i_ph - i_0 (exp((v + I r_s)/vt) - 1) - (v + I r_s)/r_p` by
/// damped Newton iteration with a bisection fallback.
///
/// The residual is strictly decreasing in `I`, so the root is unique; the
/// solve brackets it first and never leaves the bracket.
fn solve_implicit_current<T: Real>(
    v: T,
    eff: EffectiveDiode<T>,
    r_s: T,
    r_p: T,
    vt: T,
) -> Result<T, PvError> {
    let exp_cap = T::max_value().ln() * T::of(0.9);
    let f = |i: T| -> T {
        let arg = ((v + i * r_s) / vt).min(exp_cap);
        eff.i_ph - eff.i_0 * (arg.exp() - T::one()) - (v + i * r_s) / r_p - i
    };
    let df = |i: T| -> T {
        let arg = ((v + i * r_s) / vt).min(exp_cap);
        -eff.i_0 * r_s / vt * arg.exp() - r_s / r_p - T::one()
    };

    // Bracket the root: f is decreasing, so expand down for f>0 and up for f<0.
    let mut lo = -eff.i_ph.abs() - T::one();
    let mut hi = eff.i_ph.abs() + T::one();
    for _ in 0..64 {
        if f(lo) > T::zero() {
            break;
        }
        lo = lo * T::of(2.0) - T::one();
    }
    for _ in 0..64 {
        if f(hi) < T::zero() {
            break;
        }
        hi = hi * T::of(2.0) + T::one();
    }

    let tol = T::of(1e-9);
    let mut i = (eff.i_ph - (v + eff.i_ph * r_s) / r_p).max(lo).min(hi);
    let mut residual = f(i);
    for _ in 0..100 {
        if residual.abs() < tol {
            return Ok(i);
        }
        if residual > T::zero() {
            lo = lo.max(i);
        } else {
            hi = hi.min(i);
        }
        let d = df(i);
        let newton = i - residual / d;
        // Fall back to bisection when Newton leaves the bracket.
        i = if newton > lo && newton < hi {
            newton
        } else {
            (lo + hi) * T::of(0.5)
        };
        residual = f(i);
    }
    if residual.abs() < T::of(1e-6) {
        // Close enough for f32 round-off; report convergence.
        return Ok(i);
    }
    Err(PvError::NoConvergence {
        iters: 100,
        residual: residual.to_f64().unwrap_or(f64::NAN),
    })
}

/// Series/parallel arrangement of identical panels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PvArray<T> {
    pub panel: PvPanelParams<T>,
    pub n_series_panels: usize,
    pub n_parallel_strings: usize,
}

impl<T: Real> PvArray<T> {
    pub fn new(panel: PvPanelParams<T>, n_series_panels: usize, n_parallel_strings: usize) -> Self {
        Self {
            panel,
            n_series_panels,
            n_parallel_strings,
        }
    }

    /// Array terminal current at array voltage `v` under `env`.
    pub fn current(&self, v: T, env: EnvironmentInput<T>) -> Result<T, PvError> {
        let v_panel = v / T::of_usize(self.n_series_panels);
        let i = self.panel.current(v_panel, env)?;
        Ok(i * T::of_usize(self.n_parallel_strings))
    }

    /// Array open-circuit voltage under `env`, solved by bisection on I(V)=0.
    pub fn open_circuit_voltage(&self, env: EnvironmentInput<T>) -> Result<T, PvError> {
        let eff = self.panel.apply_environment(env);
        if eff.i_ph <= T::of(1e-12) {
            return Ok(T::zero());
        }
        let vt = thermal_voltage(self.panel.a, self.panel.n_s_cells, env.temperature);
        let v_hi_panel = vt * (eff.i_ph / eff.i_0 + T::one()).ln() * T::of(1.1);
        let scale = T::of_usize(self.n_series_panels);
        let mut lo = T::zero();
        let mut hi = v_hi_panel * scale;
        for _ in 0..200 {
            let mid = (lo + hi) * T::of(0.5);
            if self.current(mid, env)? > T::zero() {
                lo = mid;
            } else {
                hi = mid;
            }
            if (hi - lo) < T::of(1e-9) {
                break;
            }
        }
        Ok((lo + hi) * T::of(0.5))
    }

    /// Brute-force maximum power point: 0.01 V scan over [0, V_oc] followed
    /// by golden-section refinement of the bracketed peak.
    pub fn mpp_oracle(&self, env: EnvironmentInput<T>) -> Result<Mpp<T>, PvError> {
        let voc = self.open_circuit_voltage(env)?;
        if voc <= T::zero() {
            return Ok(Mpp {
                v_mpp: T::zero(),
                p_mpp: T::zero(),
            });
        }
        let power = |v: T| -> Result<T, PvError> { Ok(v * self.current(v, env)?) };
        let step = T::of(0.01);
        let n = (voc / step).to_usize().unwrap_or(0) + 1;
        let mut best_v = T::zero();
        let mut best_p = T::zero();
        for k in 0..=n {
            let v = (step * T::of_usize(k)).min(voc);
            let p = power(v)?;
            if p > best_p {
                best_p = p;
                best_v = v;
            }
        }
        // Golden-section refinement inside one scan step on each side.
        let mut a = (best_v - step).max(T::zero());
        let mut b = (best_v + step).min(voc);
        let phi = T::of(0.618_033_988_749_894_9);
        let mut c = b - phi * (b - a);
        let mut d = a + phi * (b - a);
        let mut pc = power(c)?;
        let mut pd = power(d)?;
        for _ in 0..60 {
            if pc > pd {
                b = d;
                d = c;
                pd = pc;
                c = b - phi * (b - a);
                pc = power(c)?;
            } else {
                a = c;
                c = d;
                pc = pd;
                d = a + phi * (b - a);
                pd = power(d)?;
            }
            if (b - a) < T::of(1e-7) {
                break;
            }
        }
        let v_ref = (a + b) * T::of(0.5);
        Ok(Mpp {
            v_mpp: v_ref,
            p_mpp: power(v_ref)?.max(best_p),
        })
    }
}

/// Extract single-diode parameters from datasheet values at STC.
///
/// For a trial ideality constant, `i_ph`, `i_0`, `r_s`, `r_p` follow from
/// the short-circuit, open-circuit and maximum-power conditions plus
/// `dP/dV = 0` at the MPP; the inner 2x2 system in `(r_s, ln r_p)` is solved
/// by damped Newton seeded from a coarse grid search. The ideality constant
/// starts at 1.3 and is refined by an outer scan so the MPP conditions are
/// met exactly (the fixed-ideality system is not always feasible).
pub fn fit_single_diode<T: Real>(
    ds: &PvDatasheet<T>,
    n_s_cells: usize,
    k_i: T,
    e_g: T,
) -> Result<PvPanelParams<T>, PvError> {
    if !(ds.v_mpp < ds.v_oc) {
        return Err(PvError::InfeasibleDatasheet(
            "v_mpp must be below v_oc".into(),
        ));
    }
    if !(ds.p_max / ds.v_mpp < ds.i_sc) {
        return Err(PvError::InfeasibleDatasheet(
            "p_max/v_mpp must be below i_sc".into(),
        ));
    }
    let mut best: Option<(T, FitInner<T>)> = None;
    let try_a = |a: T, best: &mut Option<(T, FitInner<T>)>| {
        if let Ok(inner) = fit_inner(ds, a, n_s_cells) {
            let better = match best {
                Some((_, b)) => inner.residual < b.residual,
                None => true,
            };
            if better {
                *best = Some((a, inner));
            }
        }
    };
    // Coarse scan (1.3 first as the conventional starting guess), then a
    // golden refinement around the best cell.
    try_a(T::of(1.3), &mut best);
    let mut k = 0;
    while k <= 24 {
        try_a(T::of(0.85 + 0.05 * k as f64), &mut best);
        k += 1;
    }
    let Some((a_seed, _)) = best else {
        return Err(PvError::InfeasibleDatasheet(
            "no ideality constant admits the datasheet".into(),
        ));
    };
    let mut lo = a_seed - T::of(0.05);
    let mut hi = a_seed + T::of(0.05);
    for _ in 0..40 {
        let m1 = lo + (hi - lo) * T::of(0.382);
        let m2 = lo + (hi - lo) * T::of(0.618);
        let r1 = fit_inner(ds, m1, n_s_cells).map(|f| f.residual);
        let r2 = fit_inner(ds, m2, n_s_cells).map(|f| f.residual);
        match (r1, r2) {
            (Ok(a1), Ok(a2)) => {
                if a1 < a2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            (Ok(_), Err(_)) => hi = m2,
            (Err(_), Ok(_)) => lo = m1,
            (Err(_), Err(_)) => break,
        }
    }
    let a = (lo + hi) * T::of(0.5);
    try_a(a, &mut best);
    let (a, inner) = best.expect("at least one candidate succeeded");

    let params = PvPanelParams {
        i_ph_stc: inner.i_ph,
        i_0_stc: inner.i_0,
        r_s: inner.r_s,
        r_p: inner.r_p,
        a,
        n_s_cells,
        k_i,
        e_g,
    };

    // Verify the three datasheet points within 2%.
    let i_at = |v: T| params.current(v, EnvironmentInput::stc());
    let i0 = i_at(T::zero())?;
    let ioc = i_at(ds.v_oc)?;
    let p_mpp = ds.v_mpp * i_at(ds.v_mpp)?;
    let ok = (i0 - ds.i_sc).abs() / ds.i_sc < T::of(0.02)
        && ioc.abs() / ds.i_sc < T::of(0.02)
        && (p_mpp - ds.p_max).abs() / ds.p_max < T::of(0.02);
    if !ok {
        return Err(PvError::InfeasibleDatasheet(format!(
            "extraction did not reproduce datasheet: I(0)={}, I(Voc)={}, P(Vmpp)={}",
            i0, ioc, p_mpp
        )));
    }
    Ok(params)
}

#[derive(Debug, Clone, Copy)]
struct FitInner<T> {
    i_ph: T,
    i_0: T,
    r_s: T,
    r_p: T,
    residual: T,
}

/// Solve (r_s, r_p) for one trial ideality constant.
fn fit_inner<T: Real>(
    ds: &PvDatasheet<T>,
    a: T,
    n_s_cells: usize,
) -> Result<FitInner<T>, PvError> {
    let i_mpp = ds.p_max / ds.v_mpp;
    let vt = thermal_voltage(a, n_s_cells, T::of(T_STC_C));
    let r_p_cap = T::of(1e7);

    // i_0 and i_ph in closed form given (r_s, r_p), from I(0)=I_sc and
    // I(V_oc)=0.
    let diode_from = |r_s: T, r_p: T| -> EffectiveDiode<T> {
        let e_oc = (ds.v_oc / vt).exp() - T::one();
        let e_sc = (ds.i_sc * r_s / vt).exp() - T::one();
        let i_0 = (ds.i_sc + (ds.i_sc * r_s - ds.v_oc) / r_p) / (e_oc - e_sc);
        let i_ph = i_0 * e_oc + ds.v_oc / r_p;
        EffectiveDiode { i_ph, i_0 }
    };

    // Residuals: current error at the MPP and dP/dV at the MPP.
    let residuals = |r_s: T, r_p: T| -> Result<(T, T), PvError> {
        let eff = diode_from(r_s, r_p);
        if eff.i_0 <= T::zero() || eff.i_ph <= T::zero() {
            return Ok((T::of(1e6), T::of(1e6)));
        }
        let i = solve_implicit_current(ds.v_mpp, eff, r_s, r_p, vt)?;
        let e = ((ds.v_mpp + i * r_s) / vt).exp();
        let didv = -(eff.i_0 * e / vt + T::one() / r_p)
            / (T::one() + eff.i_0 * r_s * e / vt + r_s / r_p);
        Ok((i - i_mpp, i + ds.v_mpp * didv))
    };

    // Coarse grid seed.
    let mut best = (T::of(0.2), T::of(500.0), T::max_value());
    for irs in 0..24 {
        let r_s = T::of(0.01) + T::of_usize(irs) * T::of(0.025);
        for irp in 0..24 {
            let r_p = T::of(40.0) * T::of(1.35).powi(irp as i32);
            if let Ok((r1, r2)) = residuals(r_s, r_p) {
                let norm = r1.abs() + r2.abs() * T::of(0.1);
                if norm < best.2 {
                    best = (r_s, r_p, norm);
                }
            }
        }
    }

    // Damped Newton in (r_s, ln r_p) with a numeric Jacobian.
    let (mut r_s, mut r_p, _) = best;
    let mut lrp = r_p.min(r_p_cap).ln();
    for _ in 0..80 {
        let (f1, f2) = residuals(r_s, lrp.exp())?;
        let norm = f1.abs() + f2.abs();
        if norm < T::of(1e-12) {
            break;
        }
        let d1 = T::of(1e-6);
        let d2 = T::of(1e-6);
        let (g1, g2) = residuals(r_s + d1, lrp.exp())?;
        let (h1, h2) = residuals(r_s, (lrp + d2).exp())?;
        let j11 = (g1 - f1) / d1;
        let j21 = (g2 - f2) / d1;
        let j12 = (h1 - f1) / d2;
        let j22 = (h2 - f2) / d2;
        let det = j11 * j22 - j12 * j21;
        if det.abs() < T::of(1e-30) {
            break;
        }
        let mut step_rs = -(f1 * j22 - f2 * j12) / det;
        let mut step_lrp = -(j11 * f2 - j21 * f1) / det;
        // Damp until the residual norm improves (or give up on this step).
        let mut improved = false;
        for _ in 0..20 {
            let rs_new = (r_s + step_rs).max(T::zero());
            let lrp_new = (lrp + step_lrp).min(r_p_cap.ln());
            if let Ok((t1, t2)) = residuals(rs_new, lrp_new.exp()) {
                if t1.abs() + t2.abs() < norm {
                    r_s = rs_new;
                    lrp = lrp_new;
                    improved = true;
                    break;
                }
            }
            step_rs = step_rs * T::of(0.5);
            step_lrp = step_lrp * T::of(0.5);
        }
        if !improved {
            break;
        }
    }
    r_p = lrp.exp();

    let eff = diode_from(r_s, r_p);
    let (f1, f2) = residuals(r_s, r_p)?;
    if eff.i_0 <= T::zero() || eff.i_ph <= T::zero() || r_s < T::zero() {
        return Err(PvError::InfeasibleDatasheet(
            "extraction produced non-physical parameters".into(),
        ));
    }
    Ok(FitInner {
        i_ph: eff.i_ph,
        i_0: eff.i_0,
        r_s,
        r_p,
        residual: f1.abs() + f2.abs() * T::of(0.1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn soltech_array() -> PvArray<f64> {
        let ds = PvDatasheet::soltech_1sth_215p();
        let panel = fit_single_diode(&ds, 60, 0.005, 0.9).expect("fit");
        PvArray::new(panel, 7, 1)
    }

    #[test]
    fn fit_reproduces_datasheet_points() {
        let ds = PvDatasheet::<f64>::soltech_1sth_215p();
        let panel = fit_single_diode(&ds, 60, 0.005, 0.9).unwrap();
        let stc = EnvironmentInput::stc();
        let isc = panel.current(0.0, stc).unwrap();
        let ioc = panel.current(ds.v_oc, stc).unwrap();
        let pmp = ds.v_mpp * panel.current(ds.v_mpp, stc).unwrap();
        assert!((isc - 7.84).abs() / 7.84 < 0.02, "I_sc {isc}");
        assert!(ioc.abs() / 7.84 < 0.02, "I(V_oc) {ioc}");
        assert!((pmp - 215.0).abs() / 215.0 < 0.02, "P_mpp {pmp}");
    }

    #[test]
    fn array_scale_matches_table_values() {
        let arr = soltech_array();
        let stc = EnvironmentInput::stc();
        // short circuit ~7.84 A at array scale (1 string)
        let isc = arr.current(0.0, stc).unwrap();
        assert!((isc - 7.84).abs() < 0.16, "array I_sc {isc}");
        // open circuit ~7 * 36.4
        let ioc = arr.current(7.0 * 36.4, stc).unwrap();
        assert!(ioc.abs() < 0.16, "array I(V_oc) {ioc}");
        // 203 V draws ~1492 W (7 * 215 = 1505 within the 30 W band)
        let p = 203.0 * arr.current(203.0, stc).unwrap();
        assert!((p - 1492.0).abs() < 30.0, "P(203) = {p}");
    }

    #[test]
    fn mpp_oracle_stc() {
        let arr = soltech_array();
        let mpp = arr.mpp_oracle(EnvironmentInput::stc()).unwrap();
        assert!((mpp.v_mpp - 203.0).abs() < 4.0, "v_mpp {}", mpp.v_mpp);
        assert!((mpp.p_mpp - 1492.0).abs() < 30.0, "p_mpp {}", mpp.p_mpp);
    }

    #[test]
    fn mpp_oracle_case_powers() {
        let arr = soltech_array();
        let p2 = arr
            .mpp_oracle(EnvironmentInput::new(800.0, 30.0))
            .unwrap()
            .p_mpp;
        assert!((p2 - 1202.0).abs() / 1202.0 < 0.03, "case-2 MPP {p2}");
        let p3 = arr
            .mpp_oracle(EnvironmentInput::new(700.0, 35.0))
            .unwrap()
            .p_mpp;
        assert!((p3 - 1050.5).abs() / 1050.5 < 0.03, "case-3 MPP {p3}");
    }

    #[test]
    fn zero_irradiance_means_zero_power() {
        let arr = soltech_array();
        let mpp = arr.mpp_oracle(EnvironmentInput::new(0.0, 25.0)).unwrap();
        assert_eq!(mpp.p_mpp, 0.0);
    }

    #[test]
    fn environment_identity_at_stc() {
        let arr = soltech_array();
        let eff = arr.panel.apply_environment(EnvironmentInput::stc());
        assert!((eff.i_ph - arr.panel.i_ph_stc).abs() < 1e-12);
        assert!((eff.i_0 - arr.panel.i_0_stc).abs() / arr.panel.i_0_stc < 1e-12);
    }

    #[test]
    fn current_monotonic_in_voltage_and_irradiance() {
        let arr = soltech_array();
        let stc = EnvironmentInput::stc();
        let mut prev = f64::INFINITY;
        for k in 0..=100 {
            let v = 254.8 * k as f64 / 100.0;
            let i = arr.current(v, stc).unwrap();
            assert!(i <= prev + 1e-9, "I not non-increasing at v={v}");
            prev = i;
            let i_low = arr.current(v, EnvironmentInput::new(600.0, 25.0)).unwrap();
            assert!(i_low <= i + 1e-9, "I not non-decreasing in G at v={v}");
        }
    }

    #[test]
    fn power_curve_unimodal() {
        let arr = soltech_array();
        for env in [
            EnvironmentInput::new(1000.0, 25.0),
            EnvironmentInput::new(800.0, 30.0),
            EnvironmentInput::new(700.0, 35.0),
            EnvironmentInput::new(400.0, 15.0),
        ] {
            let voc = arr.open_circuit_voltage(env).unwrap();
            let n = 400;
            let mut sign_changes = 0;
            let mut prev_dp = 0.0;
            for k in 0..n {
                let v1 = voc * k as f64 / n as f64;
                let v2 = voc * (k + 1) as f64 / n as f64;
                let p1 = v1 * arr.current(v1, env).unwrap();
                let p2 = v2 * arr.current(v2, env).unwrap();
                let dp = p2 - p1;
                if k > 0 && dp * prev_dp < 0.0 {
                    sign_changes += 1;
                }
                if dp != 0.0 {
                    prev_dp = dp;
                }
            }
            assert_eq!(sign_changes, 1, "P(V) not unimodal under {env:?}");
        }
    }

    #[test]
    fn newton_agrees_with_pure_bisection() {
        let arr = soltech_array();
        let stc = EnvironmentInput::stc();
        let eff = arr.panel.apply_environment(stc);
        let vt = thermal_voltage(arr.panel.a, arr.panel.n_s_cells, stc.temperature);
        for k in 0..=100 {
            let v_arr = 254.0 * k as f64 / 100.0;
            let v = v_arr / 7.0;
            let newton = arr.panel.current(v, stc).unwrap();
            // independent bisection on the same residual
            let f = |i: f64| {
                eff.i_ph - eff.i_0 * (((v + i * arr.panel.r_s) / vt).exp() - 1.0)
                    - (v + i * arr.panel.r_s) / arr.panel.r_p
                    - i
            };
            let (mut lo, mut hi) = (-1.0, 10.0);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if f(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let bisect = 0.5 * (lo + hi);
            assert!(
                (newton - bisect).abs() < 1e-6,
                "v={v}: newton {newton} vs bisect {bisect}"
            );
        }
    }

    #[test]
    fn ideal_params_hit_voc_isc_exactly() {
        let p = PvPanelParams::ideal(36.4_f64, 7.84, 1.3, 60);
        let stc = EnvironmentInput::stc();
        assert!((p.current(0.0, stc).unwrap() - 7.84).abs() < 1e-7);
        assert!(p.current(36.4, stc).unwrap().abs() < 1e-7);
    }

    #[test]
    fn infeasible_datasheets_rejected() {
        let bad = PvDatasheet {
            v_oc: 29.0_f64,
            i_sc: 7.84,
            v_mpp: 29.0,
            p_max: 215.0,
        };
        assert!(matches!(
            fit_single_diode(&bad, 60, 0.005, 0.9),
            Err(PvError::InfeasibleDatasheet(_))
        ));
        let bad2 = PvDatasheet {
            v_oc: 36.4_f64,
            i_sc: 7.0,
            v_mpp: 29.0,
            p_max: 215.0,
        };
        assert!(matches!(
            fit_single_diode(&bad2, 60, 0.005, 0.9),
            Err(PvError::InfeasibleDatasheet(_))
        ));
    }
}
