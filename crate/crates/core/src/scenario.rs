//! Scenario configuration: the schedule, plant, PV source and controller
//! setup of one simulation run, loadable from a TOML file. Every field has
//! a default, and the defaults reproduce the reference system, so an empty
//! scenario file runs the built-in setup.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::control::ControllerConfig;
use crate::error::ScenarioError;
use crate::plant::{PlantParams, PlantState};
use crate::pv::PvDatasheet;

/// One piecewise-constant environment segment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSegment {
    /// Segment length, s.
    pub duration: f64,
    /// W/m^2.
    pub irradiance: f64,
    /// Cell temperature, degrees C.
    pub temperature: f64,
}

/// Controller family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Fractional orders as configured.
    Fo,
    /// Every fractional order forced to one.
    Io,
}

/// Plant realization selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fidelity {
    /// Continuous duties, RK4 integration.
    Averaged,
    /// PWM switch states, forward Euler integration.
    Switched,
}

/// PV source configuration: datasheet plus array arrangement and the
/// environment-law coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PvConfig {
    pub datasheet: PvDatasheet<f64>,
    pub n_s_cells: usize,
    pub n_series_panels: usize,
    pub n_parallel_strings: usize,
    /// Short-circuit current temperature coefficient, A/degC.
    pub k_i: f64,
    /// Effective bandgap for the saturation-current law, eV.
    pub e_g: f64,
}

impl Default for PvConfig {
    fn default() -> Self {
        Self {
            datasheet: PvDatasheet::soltech_1sth_215p(),
            n_s_cells: 60,
            n_series_panels: 7,
            n_parallel_strings: 1,
            k_i: 0.005,
            e_g: 0.9,
        }
    }
}

/// A full simulation request. Deterministic: no random state anywhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Scenario {
    pub schedule: Vec<ScheduleSegment>,
    pub plant: PlantParams<f64>,
    pub controller: ControllerConfig<f64>,
    pub pv: PvConfig,
    pub mode: Mode,
    pub fidelity: Fidelity,
    /// Integration step, s. `None` picks the fidelity default
    /// (1e-6 averaged, 1e-7 switched).
    pub dt: Option<f64>,
    /// Initial plant state. `None` starts from the pre-charged default:
    /// x1 = 0.9 Voc, x2 = 0, x3 = v_dc_ref, x4 = 0.
    pub initial_state: Option<PlantState<f64>>,
    /// Initial MPPT reference as a fraction of the array Voc at STC.
    pub mppt_v_init_frac: f64,
    /// Store every Nth integration step in the log.
    pub log_decimation: usize,
    /// Grid periods in each case's steady-state metric window.
    pub metric_periods: usize,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            schedule: paper_schedule(),
            plant: PlantParams::default(),
            controller: ControllerConfig::default(),
            pv: PvConfig::default(),
            mode: Mode::Fo,
            fidelity: Fidelity::Averaged,
            dt: None,
            initial_state: None,
            mppt_v_init_frac: 0.70,
            log_decimation: 10,
            metric_periods: 5,
        }
    }
}

/// The three-case schedule: 0.5 s at (1000, 25), 0.3 s at (800, 30),
/// 0.2 s at (700, 35).
fn paper_schedule() -> Vec<ScheduleSegment> {
    vec![
        ScheduleSegment {
            duration: 0.5,
            irradiance: 1000.0,
            temperature: 25.0,
        },
        ScheduleSegment {
            duration: 0.3,
            irradiance: 800.0,
            temperature: 30.0,
        },
        ScheduleSegment {
            duration: 0.2,
            irradiance: 700.0,
            temperature: 35.0,
        },
    ]
}

impl Scenario {
    /// Built-in scenarios: `paper` (three-case schedule with conduction
    /// losses) and `ideal-stc` (constant STC, lossless plant).
    pub fn builtin(name: &str) -> Result<Self, ScenarioError> {
        match name {
            "paper" => Ok(Self::default()),
            "ideal-stc" => {
                let mut sc = Self::default();
                sc.schedule = vec![ScheduleSegment {
                    duration: 0.3,
                    irradiance: 1000.0,
                    temperature: 25.0,
                }];
                sc.plant = sc.plant.lossless();
                Ok(sc)
            }
            other => Err(ScenarioError::UnknownBuiltin(other.to_string())),
        }
    }

    /// Parse a TOML scenario, falling back to the builtin when the argument
    /// names one.
    pub fn load(path_or_builtin: &str) -> Result<Self, ScenarioError> {
        if matches!(path_or_builtin, "paper" | "ideal-stc") {
            return Self::builtin(path_or_builtin);
        }
        let path = Path::new(path_or_builtin);
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path_or_builtin.to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ScenarioError> {
        let sc: Scenario = toml::from_str(text)?;
        sc.validate()?;
        Ok(sc)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("scenario serializes")
    }

    /// Resolved integration step.
    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(match self.fidelity {
            Fidelity::Averaged => 1e-6,
            Fidelity::Switched => 1e-7,
        })
    }

    /// Total simulated time, s.
    pub fn total_duration(&self) -> f64 {
        self.schedule.iter().map(|s| s.duration).sum()
    }

    /// Check every structural invariant, naming the offending field.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |field: &str, reason: String| {
            Err(ScenarioError::Invalid {
                field: field.to_string(),
                reason,
            })
        };
        // an empty schedule is a degenerate-but-valid scenario (empty run)
        for (i, seg) in self.schedule.iter().enumerate() {
            if !(seg.duration > 0.0) {
                return bad(
                    &format!("schedule[{i}].duration"),
                    format!("must be positive, got {}", seg.duration),
                );
            }
            if !(0.0..=1500.0).contains(&seg.irradiance) {
                return bad(
                    &format!("schedule[{i}].irradiance"),
                    format!("must be in [0, 1500], got {}", seg.irradiance),
                );
            }
            if !(-40.0..=90.0).contains(&seg.temperature) {
                return bad(
                    &format!("schedule[{i}].temperature"),
                    format!("must be in [-40, 90], got {}", seg.temperature),
                );
            }
        }
        let p = &self.plant;
        for (name, v) in [
            ("plant.c_pv", p.c_pv),
            ("plant.l_o", p.l_o),
            ("plant.c_dc", p.c_dc),
            ("plant.l_g", p.l_g),
            ("plant.grid_v_rms", p.grid_v_rms),
            ("plant.grid_freq", p.grid_freq),
            ("plant.f_sw_boost", p.f_sw_boost),
            ("plant.f_sw_inv", p.f_sw_inv),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("plant.r_lo", p.r_lo),
            ("plant.r_lg", p.r_lg),
            ("plant.r_sw", p.r_sw),
            ("plant.v_drop_inv", p.v_drop_inv),
            ("plant.v_drop_boost", p.v_drop_boost),
        ] {
            if v < 0.0 || !v.is_finite() {
                return bad(name, format!("must be non-negative, got {v}"));
            }
        }
        if !(p.f_sw_boost > p.f_sw_inv && p.f_sw_inv > p.grid_freq) {
            return bad(
                "plant.f_sw_boost",
                "switching frequencies must satisfy f_sw_boost > f_sw_inv > grid_freq".into(),
            );
        }
        let c = &self.controller;
        for (name, v) in [
            ("controller.c1", c.c1),
            ("controller.c2", c.c2),
            ("controller.c3", c.c3),
            ("controller.mppt_step", c.mppt_step),
            ("controller.mppt_period", c.mppt_period),
            ("controller.v_dc_ref", c.v_dc_ref),
            ("controller.rate_voltage_loop", c.rate_voltage_loop),
            ("controller.rate_current_loop", c.rate_current_loop),
            ("controller.scale_e1", c.scale_e1),
            ("controller.scale_e2", c.scale_e2),
            ("controller.scale_e3", c.scale_e3),
            ("controller.beta_max", c.beta_max),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return bad(name, format!("must be positive, got {v}"));
            }
        }
        for (name, v) in [
            ("controller.alpha1", c.alpha1),
            ("controller.alpha2", c.alpha2),
            ("controller.alpha_pi", c.alpha_pi),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return bad(name, format!("order must be in (0, 1], got {v}"));
            }
        }
        if c.mem_len == 0 {
            return bad("controller.mem_len", "must be at least 1".into());
        }
        let dt = self.dt();
        if !(dt > 0.0) {
            return bad("dt", format!("must be positive, got {dt}"));
        }
        let dt_max = match self.fidelity {
            Fidelity::Averaged => 1.0 / (10.0 * p.f_sw_inv),
            Fidelity::Switched => 1.0 / (10.0 * p.f_sw_boost),
        };
        if dt > dt_max * (1.0 + 1e-12) {
            return bad(
                "dt",
                format!("must be at most {dt_max:e} for this fidelity, got {dt:e}"),
            );
        }
        if self.log_decimation == 0 {
            return bad("log_decimation", "must be at least 1".into());
        }
        if self.metric_periods < 5 {
            return bad("metric_periods", "at least 5 periods required".into());
        }
        if !(self.mppt_v_init_frac > 0.0 && self.mppt_v_init_frac < 1.0) {
            return bad(
                "mppt_v_init_frac",
                format!("must be in (0, 1), got {}", self.mppt_v_init_frac),
            );
        }
        if self.pv.n_series_panels == 0 || self.pv.n_parallel_strings == 0 {
            return bad("pv.n_series_panels", "array arrangement must be non-zero".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_paper_schedule() {
        let sc = Scenario::builtin("paper").unwrap();
        assert_eq!(sc.schedule.len(), 3);
        assert_eq!(sc.schedule[0].duration, 0.5);
        assert_eq!(sc.schedule[1].duration, 0.3);
        assert_eq!(sc.schedule[2].duration, 0.2);
        assert_eq!(sc.schedule[2].irradiance, 700.0);
        sc.validate().unwrap();
        assert!(Scenario::builtin("nope").is_err());
    }

    #[test]
    fn empty_toml_is_paper_setup() {
        let sc = Scenario::from_toml("").unwrap();
        assert_eq!(sc, Scenario::builtin("paper").unwrap());
    }

    #[test]
    fn roundtrip_through_toml() {
        let mut sc = Scenario::builtin("ideal-stc").unwrap();
        sc.controller.ki = 3.3e-4;
        sc.dt = Some(2e-6);
        let text = sc.to_toml();
        let back = Scenario::from_toml(&text).unwrap();
        assert_eq!(sc, back);
    }

    #[test]
    fn validation_names_fields() {
        let mut sc = Scenario::default();
        sc.plant.c_pv = -1.0;
        match sc.validate() {
            Err(ScenarioError::Invalid { field, .. }) => assert_eq!(field, "plant.c_pv"),
            other => panic!("expected invalid c_pv, got {other:?}"),
        }
        let mut sc = Scenario::default();
        sc.schedule[1].duration = 0.0;
        assert!(matches!(
            sc.validate(),
            Err(ScenarioError::Invalid { field, .. }) if field == "schedule[1].duration"
        ));
        let mut sc = Scenario::default();
        sc.controller.alpha1 = 1.5;
        assert!(sc.validate().is_err());
        let mut sc = Scenario::default();
        sc.dt = Some(1e-3);
        assert!(sc.validate().is_err());
    }

    #[test]
    fn dt_defaults_follow_fidelity() {
        let mut sc = Scenario::default();
        assert_eq!(sc.dt(), 1e-6);
        sc.fidelity = Fidelity::Switched;
        assert_eq!(sc.dt(), 1e-7);
    }
}
