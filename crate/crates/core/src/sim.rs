//! Fixed-step closed-loop simulation engine.
//!
//! One run advances the plant (RK4 on the averaged model, forward Euler on
//! the switched one), invokes the controller loops on their own rate grids
//! with zero-order hold between invocations, applies the environment
//! schedule stepwise, and records the time series. Runs are fully
//! deterministic: identical scenarios produce identical logs.

use crate::control::{ControlEvents, ControlStack, ControllerConfig, GridFeedforward};
use crate::error::{ScenarioError, SimError};
use crate::metrics::{summarize_window, AnalysisWindow, CaseSummary, DEFAULT_THD_HARMONICS};
use crate::plant::{
    grid_voltage, grid_voltage_derivative, plant_derivatives, pwm_switch_states, ControlInputs,
    PlantParams, PlantState,
};
use crate::pv::{fit_single_diode, EnvironmentInput, Mpp, PvArray};
use crate::scalar::Real;
use crate::scenario::{Fidelity, Mode, Scenario};

/// Settling band around the DC-link reference (fraction of the reference).
pub const SETTLE_BAND: f64 = 0.02;

/// Divergence guard on every state component.
const STATE_LIMIT: f64 = 1e6;

/// Per-case bookkeeping: environment, the steady-state tail at full
/// resolution, the Lyapunov series over the tail, and the MPP ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseRecord<T> {
    pub case_id: usize,
    pub t_start: f64,
    pub t_end: f64,
    pub irradiance: f64,
    pub temperature: f64,
    /// First time x3 stayed within the settle band for one grid period.
    pub settled_at: Option<f64>,
    /// Sample period of the tail arrays, s (the integration step).
    pub tail_dt: f64,
    pub tail_vg: Vec<T>,
    pub tail_ig: Vec<T>,
    pub tail_ppv: Vec<T>,
    /// V1 over the tail at the voltage-loop cadence.
    pub tail_v1: Vec<T>,
    pub tail_v1_h: f64,
    /// V3 over the tail at the current-loop cadence.
    pub tail_v3: Vec<T>,
    pub tail_v3_h: f64,
    /// Brute-force MPP for this case's environment.
    pub mpp: Mpp<T>,
    /// Mean PV power over the tail window.
    pub mean_ppv_tail: T,
}

/// Recorded time series of one run (decimated) plus per-case tails.
#[derive(Debug, Clone, PartialEq)]
pub struct SimLog<T: Real> {
    pub dt: f64,
    pub decimation: usize,
    pub mode: Mode,
    pub fidelity: Fidelity,
    pub plant: PlantParams<T>,
    pub controller: ControllerConfig<T>,
    pub t: Vec<f64>,
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    pub x3: Vec<T>,
    pub x4: Vec<T>,
    pub u1: Vec<T>,
    pub u2: Vec<T>,
    pub beta: Vec<T>,
    pub x1ref: Vec<T>,
    pub x4ref: Vec<T>,
    pub ipv: Vec<T>,
    pub ppv: Vec<T>,
    pub vg: Vec<T>,
    pub v1: Vec<T>,
    pub v2: Vec<T>,
    pub v3: Vec<T>,
    pub cases: Vec<CaseRecord<T>>,
    pub events: ControlEvents,
}

impl<T: Real> SimLog<T> {
    fn with_capacity(n: usize) -> Self
    where
        SimLog<T>: Default,
    {
        let mut log = SimLog::default();
        log.t.reserve(n);
        log.x1.reserve(n);
        log.x2.reserve(n);
        log.x3.reserve(n);
        log.x4.reserve(n);
        log.u1.reserve(n);
        log.u2.reserve(n);
        log.beta.reserve(n);
        log.x1ref.reserve(n);
        log.x4ref.reserve(n);
        log.ipv.reserve(n);
        log.ppv.reserve(n);
        log.vg.reserve(n);
        log.v1.reserve(n);
        log.v2.reserve(n);
        log.v3.reserve(n);
        log
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }
}

impl<T: Real> Default for SimLog<T> {
    fn default() -> Self {
        Self {
            dt: 0.0,
            decimation: 1,
            mode: Mode::Fo,
            fidelity: Fidelity::Averaged,
            plant: PlantParams::default(),
            controller: ControllerConfig::default(),
            t: vec![],
            x1: vec![],
            x2: vec![],
            x3: vec![],
            x4: vec![],
            u1: vec![],
            u2: vec![],
            beta: vec![],
            x1ref: vec![],
            x4ref: vec![],
            ipv: vec![],
            ppv: vec![],
            vg: vec![],
            v1: vec![],
            v2: vec![],
            v3: vec![],
            cases: vec![],
            events: ControlEvents::default(),
        }
    }
}

fn lower_plant<T: Real>(p: &PlantParams<f64>) -> PlantParams<T> {
    PlantParams {
        c_pv: T::of(p.c_pv),
        l_o: T::of(p.l_o),
        c_dc: T::of(p.c_dc),
        l_g: T::of(p.l_g),
        grid_v_rms: T::of(p.grid_v_rms),
        grid_freq: T::of(p.grid_freq),
        f_sw_boost: T::of(p.f_sw_boost),
        f_sw_inv: T::of(p.f_sw_inv),
        r_lo: T::of(p.r_lo),
        r_lg: T::of(p.r_lg),
        r_sw: T::of(p.r_sw),
        v_drop_inv: T::of(p.v_drop_inv),
        v_drop_boost: T::of(p.v_drop_boost),
    }
}

fn lower_controller<T: Real>(c: &ControllerConfig<f64>) -> ControllerConfig<T> {
    ControllerConfig {
        c1: T::of(c.c1),
        c2: T::of(c.c2),
        c3: T::of(c.c3),
        kp: T::of(c.kp),
        ki: T::of(c.ki),
        alpha1: T::of(c.alpha1),
        alpha2: T::of(c.alpha2),
        alpha_pi: T::of(c.alpha_pi),
        mppt_step: T::of(c.mppt_step),
        mppt_period: T::of(c.mppt_period),
        v_dc_ref: T::of(c.v_dc_ref),
        rate_voltage_loop: T::of(c.rate_voltage_loop),
        rate_current_loop: T::of(c.rate_current_loop),
        scale_e1: T::of(c.scale_e1),
        scale_e2: T::of(c.scale_e2),
        scale_e3: T::of(c.scale_e3),
        mem_len: c.mem_len,
        x3_floor: T::of(c.x3_floor),
        deriv_filter_hz: T::of(c.deriv_filter_hz),
        filter_reference: c.filter_reference,
        beta_max: T::of(c.beta_max),
        fopi_prefilter: c.fopi_prefilter,
        v_ref_min: T::of(c.v_ref_min),
        v_ref_max: T::of(c.v_ref_max),
    }
}

/// Execute one scenario.
pub fn run<T: Real>(sc: &Scenario) -> Result<SimLog<T>, SimError> {
    sc.validate()?;
    let dt = sc.dt();
    let decim = sc.log_decimation;

    // Loop cadences in integration steps.
    let n_v = (1.0 / (sc.controller.rate_voltage_loop * dt)).round().max(1.0) as usize;
    let n_i = (1.0 / (sc.controller.rate_current_loop * dt)).round().max(1.0) as usize;
    let n_m = (sc.controller.mppt_period / dt).round().max(1.0) as usize;
    let h_i = T::of(n_i as f64 * dt);

    // PV source.
    let panel = fit_single_diode::<T>(
        &crate::pv::PvDatasheet {
            v_oc: T::of(sc.pv.datasheet.v_oc),
            i_sc: T::of(sc.pv.datasheet.i_sc),
            v_mpp: T::of(sc.pv.datasheet.v_mpp),
            p_max: T::of(sc.pv.datasheet.p_max),
        },
        sc.pv.n_s_cells,
        T::of(sc.pv.k_i),
        T::of(sc.pv.e_g),
    )?;
    let array = PvArray::new(panel, sc.pv.n_series_panels, sc.pv.n_parallel_strings);
    let voc_stc = array.open_circuit_voltage(EnvironmentInput::stc())?;

    // Controller configuration, with the MPPT clamp derived from the array.
    let mut cfg = lower_controller::<T>(&sc.controller);
    cfg.v_ref_max = voc_stc;
    cfg.v_ref_min = T::of(0.5) * voc_stc;
    if sc.mode == Mode::Io {
        cfg = cfg.with_integer_orders();
    }
    let plant = lower_plant::<T>(&sc.plant);
    let v_dc_ref = cfg.v_dc_ref;

    let mut state = match sc.initial_state {
        Some(s) => PlantState::new(T::of(s.x1), T::of(s.x2), T::of(s.x3), T::of(s.x4)),
        None => PlantState::new(T::of(0.9) * voc_stc, T::zero(), v_dc_ref, T::zero()),
    };
    let v_init = T::of(sc.mppt_v_init_frac) * voc_stc;
    let mut stack =
        ControlStack::new(cfg, plant, v_init).map_err(|e| SimError::Scenario(ScenarioError::Invalid {
            field: "controller".into(),
            reason: e.to_string(),
        }))?;

    // Schedule in steps.
    let mut case_bounds = Vec::with_capacity(sc.schedule.len());
    let mut acc_steps = 0usize;
    for seg in &sc.schedule {
        let steps = (seg.duration / dt).round() as usize;
        case_bounds.push((acc_steps, acc_steps + steps, seg));
        acc_steps += steps;
    }
    let total_steps = acc_steps;

    // Metric tail length per case, in steps.
    let n_tail = ((sc.metric_periods as f64) / (sc.plant.grid_freq * dt)).round() as usize;
    let steps_per_period = (1.0 / (sc.plant.grid_freq * dt)).round() as usize;

    let mut log = SimLog::<T>::with_capacity(total_steps / decim + 2);
    log.dt = dt;
    log.decimation = decim;
    log.mode = sc.mode;
    log.fidelity = sc.fidelity;
    log.plant = plant;
    log.controller = stack.cfg;

    let mut u = ControlInputs {
        u1: T::zero(),
        u2: T::zero(),
    };
    let mut beta = T::zero();
    let mut x1ref = v_init;

    for (case_idx, &(k_start, k_end, seg)) in case_bounds.iter().enumerate() {
        let env = EnvironmentInput::new(T::of(seg.irradiance), T::of(seg.temperature));
        let tail_start = k_end.saturating_sub(n_tail).max(k_start);
        let mut rec = CaseRecord {
            case_id: case_idx + 1,
            t_start: k_start as f64 * dt,
            t_end: k_end as f64 * dt,
            irradiance: seg.irradiance,
            temperature: seg.temperature,
            settled_at: None,
            tail_dt: dt,
            tail_vg: Vec::with_capacity(k_end - tail_start),
            tail_ig: Vec::with_capacity(k_end - tail_start),
            tail_ppv: Vec::with_capacity(k_end - tail_start),
            tail_v1: vec![],
            tail_v1_h: n_v as f64 * dt,
            tail_v3: vec![],
            tail_v3_h: n_i as f64 * dt,
            mpp: array.mpp_oracle(env)?,
            mean_ppv_tail: T::zero(),
        };
        let mut in_band_count = 0usize;

        for k in k_start..k_end {
            let t = k as f64 * dt;
            let t_s = T::of(t);
            let x1_clamped = state.x1.max(T::zero());
            let i_pv = array.current(x1_clamped, env)?;

            // Controller ticks on their rate grids (MPPT, voltage loop,
            // DC-link loop, current loop, in that order).
            if k % n_m == 0 {
                x1ref = stack.mppt_update(state.x1, i_pv);
            }
            if k % n_v == 0 {
                u.u1 = stack
                    .voltage_loop_update(&state, i_pv, x1ref)
                    .map_err(|e| diverged_from(e, t))?;
                if k >= tail_start {
                    rec.tail_v1.push(stack.vloop.v1);
                }
            }
            if k % n_i == 0 {
                beta = stack.dclink_update(state.x3).map_err(|e| diverged_from(e, t))?;
                let mid = T::of(t) + h_i * T::of(0.5);
                let grid = GridFeedforward {
                    v_g: grid_voltage(t_s, &plant),
                    v_g_mid: grid_voltage(mid, &plant),
                    v_g_dot_mid: grid_voltage_derivative(mid, &plant),
                };
                u.u2 = stack
                    .current_loop_update(&state, grid, beta)
                    .map_err(|e| diverged_from(e, t))?;
                if k >= tail_start {
                    rec.tail_v3.push(stack.iloop.v3);
                }
            }

            // Log the pre-step sample.
            let vg_now = grid_voltage(t_s, &plant);
            if k % decim == 0 {
                log.t.push(t);
                log.x1.push(state.x1);
                log.x2.push(state.x2);
                log.x3.push(state.x3);
                log.x4.push(state.x4);
                log.u1.push(u.u1);
                log.u2.push(u.u2);
                log.beta.push(beta);
                log.x1ref.push(x1ref);
                log.x4ref.push(stack.iloop.x4_ref);
                log.ipv.push(i_pv);
                log.ppv.push(state.x1 * i_pv);
                log.vg.push(vg_now);
                log.v1.push(stack.vloop.v1);
                log.v2.push(stack.vloop.v2);
                log.v3.push(stack.iloop.v3);
            }
            if k >= tail_start {
                rec.tail_vg.push(vg_now);
                rec.tail_ig.push(state.x4);
                rec.tail_ppv.push(state.x1 * i_pv);
            }

            // Advance the plant over [t, t+dt] with held controls.
            state = match sc.fidelity {
                Fidelity::Averaged => rk4_step(&state, &u, t_s, T::of(dt), env, &array, &plant)?,
                Fidelity::Switched => {
                    let sw = pwm_switch_states(&u, t_s, &plant);
                    let u_sw = ControlInputs {
                        u1: sw.mu1,
                        u2: sw.mu2,
                    };
                    let d = plant_derivatives(&state, &u_sw, i_pv, vg_now, &plant);
                    PlantState::new(
                        state.x1 + T::of(dt) * d[0],
                        state.x2 + T::of(dt) * d[1],
                        state.x3 + T::of(dt) * d[2],
                        state.x4 + T::of(dt) * d[3],
                    )
                }
            };
            state.x1 = state.x1.max(T::zero());
            state.x3 = state.x3.max(T::zero());
            check_divergence(&state, t)?;

            // Settling detector: x3 inside the band for one full grid period.
            if rec.settled_at.is_none() {
                let band = T::of(SETTLE_BAND) * v_dc_ref;
                if (state.x3 - v_dc_ref).abs() <= band {
                    in_band_count += 1;
                    if in_band_count >= steps_per_period {
                        rec.settled_at = Some((k + 1) as f64 * dt);
                    }
                } else {
                    in_band_count = 0;
                }
            }
        }

        if !rec.tail_ppv.is_empty() {
            rec.mean_ppv_tail = rec.tail_ppv.iter().copied().sum::<T>()
                / T::of_usize(rec.tail_ppv.len());
        }
        log.cases.push(rec);
    }

    log.events = stack.events;
    Ok(log)
}

fn diverged_from(e: crate::error::FracError, t: f64) -> SimError {
    SimError::Diverged {
        t,
        signal: format!("controller ({e})"),
        value: f64::NAN,
    }
}

fn check_divergence<T: Real>(s: &PlantState<T>, t: f64) -> Result<(), SimError> {
    for (name, v) in [("x1", s.x1), ("x2", s.x2), ("x3", s.x3), ("x4", s.x4)] {
        let vf = v.to_f64().unwrap_or(f64::NAN);
        if !vf.is_finite() || vf.abs() > STATE_LIMIT {
            return Err(SimError::Diverged {
                t,
                signal: name.to_string(),
                value: vf,
            });
        }
    }
    Ok(())
}

/// One RK4 step of the averaged model with held controls.
#[allow(clippy::too_many_arguments)]
fn rk4_step<T: Real>(
    s: &PlantState<T>,
    u: &ControlInputs<T>,
    t: T,
    dt: T,
    env: EnvironmentInput<T>,
    array: &PvArray<T>,
    plant: &PlantParams<T>,
) -> Result<PlantState<T>, SimError> {
    let f = |s: &PlantState<T>, t: T| -> Result<[T; 4], SimError> {
        let i_pv = array.current(s.x1.max(T::zero()), env)?;
        Ok(plant_derivatives(s, u, i_pv, grid_voltage(t, plant), plant))
    };
    let half = T::of(0.5);
    let k1 = f(s, t)?;
    let s2 = advance(s, &k1, dt * half);
    let k2 = f(&s2, t + dt * half)?;
    let s3 = advance(s, &k2, dt * half);
    let k3 = f(&s3, t + dt * half)?;
    let s4 = advance(s, &k3, dt);
    let k4 = f(&s4, t + dt)?;
    let sixth = T::of(1.0 / 6.0);
    let two = T::of(2.0);
    Ok(PlantState::new(
        s.x1 + dt * sixth * (k1[0] + two * k2[0] + two * k3[0] + k4[0]),
        s.x2 + dt * sixth * (k1[1] + two * k2[1] + two * k3[1] + k4[1]),
        s.x3 + dt * sixth * (k1[2] + two * k2[2] + two * k3[2] + k4[2]),
        s.x4 + dt * sixth * (k1[3] + two * k2[3] + two * k3[3] + k4[3]),
    ))
}

fn advance<T: Real>(s: &PlantState<T>, d: &[T; 4], dt: T) -> PlantState<T> {
    PlantState::new(
        s.x1 + dt * d[0],
        s.x2 + dt * d[1],
        s.x3 + dt * d[2],
        s.x4 + dt * d[3],
    )
}

/// Steady-state summaries of every case in the log.
pub fn summarize<T: Real>(log: &SimLog<T>) -> Result<Vec<CaseSummary<T>>, crate::MetricsError> {
    let fs = T::of(1.0 / log.dt);
    let f0 = log.plant.grid_freq;
    log.cases
        .iter()
        .map(|c| {
            let n_periods = (c.tail_vg.len() as f64 * log.dt * log.plant.grid_freq.to_f64().unwrap())
                .round() as usize;
            let v = AnalysisWindow::new(c.tail_vg.clone(), fs, f0, n_periods)?;
            let i = AnalysisWindow::new(c.tail_ig.clone(), fs, f0, n_periods)?;
            summarize_window(
                c.case_id,
                &v,
                &i,
                c.mean_ppv_tail,
                DEFAULT_THD_HARMONICS,
                c.settled_at.is_some(),
            )
        })
        .collect()
}

/// Paired fractional-order / integer-order execution of one scenario.
#[derive(Debug)]
pub struct Comparison<T: Real> {
    pub fo: SimLog<T>,
    pub io: SimLog<T>,
    pub fo_summaries: Vec<CaseSummary<T>>,
    pub io_summaries: Vec<CaseSummary<T>>,
}

/// Run the scenario in both controller modes and summarize each case.
pub fn run_comparison<T: Real>(sc: &Scenario) -> Result<Comparison<T>, SimError> {
    let mut fo_sc = sc.clone();
    fo_sc.mode = Mode::Fo;
    let mut io_sc = sc.clone();
    io_sc.mode = Mode::Io;
    let fo = run::<T>(&fo_sc)?;
    let io = run::<T>(&io_sc)?;
    let fo_summaries = summarize(&fo).map_err(metrics_to_sim)?;
    let io_summaries = summarize(&io).map_err(metrics_to_sim)?;
    Ok(Comparison {
        fo,
        io,
        fo_summaries,
        io_summaries,
    })
}

fn metrics_to_sim(e: crate::MetricsError) -> SimError {
    SimError::Scenario(ScenarioError::Invalid {
        field: "metrics".into(),
        reason: e.to_string(),
    })
}

/// First time per case at which x3 stays within `band_frac` of the
/// reference for one full grid period, from the decimated log.
pub fn settle_detect<T: Real>(log: &SimLog<T>, band_frac: f64) -> Vec<Option<f64>> {
    let v_ref = log.controller.v_dc_ref;
    let band = T::of(band_frac) * v_ref;
    let log_dt = log.dt * log.decimation as f64;
    let samples_per_period = (1.0 / (log.plant.grid_freq.to_f64().unwrap() * log_dt)).round()
        as usize;
    log.cases
        .iter()
        .map(|c| {
            let mut count = 0usize;
            for (idx, &t) in log.t.iter().enumerate() {
                if t < c.t_start || t >= c.t_end {
                    continue;
                }
                if (log.x3[idx] - v_ref).abs() <= band {
                    count += 1;
                    if count >= samples_per_period.max(1) {
                        return Some(t);
                    }
                } else {
                    count = 0;
                }
            }
            None
        })
        .collect()
}

/// Per-grid-period residuals of the lossless energy balance:
/// `|dE_stored - int (p_pv - p_grid) dt|` relative to the per-period energy
/// throughput. Uses trapezoidal integration on the decimated log.
pub fn energy_balance_residuals<T: Real>(log: &SimLog<T>) -> Vec<f64> {
    let log_dt = log.dt * log.decimation as f64;
    let n_per = (1.0 / (log.plant.grid_freq.to_f64().unwrap() * log_dt)).round() as usize;
    if n_per == 0 || log.len() < 2 * n_per {
        return vec![];
    }
    let energy = |idx: usize| -> f64 {
        let s = PlantState::new(log.x1[idx], log.x2[idx], log.x3[idx], log.x4[idx]);
        s.stored_energy(&log.plant).to_f64().unwrap()
    };
    let mut out = vec![];
    let mut start = 0usize;
    while start + n_per < log.len() {
        let end = start + n_per;
        let mut net = 0.0; // integral of (p_in - p_out)
        let mut throughput = 0.0;
        for i in start..end {
            let p_in_a = (log.ppv[i]).to_f64().unwrap();
            let p_in_b = (log.ppv[i + 1]).to_f64().unwrap();
            let p_out_a = (log.vg[i] * log.x4[i]).to_f64().unwrap();
            let p_out_b = (log.vg[i + 1] * log.x4[i + 1]).to_f64().unwrap();
            net += 0.5 * ((p_in_a - p_out_a) + (p_in_b - p_out_b)) * log_dt;
            throughput += 0.5 * (p_in_a.abs() + p_in_b.abs()) * log_dt;
        }
        let de = energy(end) - energy(start);
        out.push((de - net).abs() / throughput.max(1e-9));
        start = end;
    }
    out
}
