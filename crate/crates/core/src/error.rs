//! Error types shared across the library.

use thiserror::Error;

/// Errors from fractional-operator construction and stepping.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum FracError {
    #[error("fractional order {0} outside supported range [-2, 2]")]
    OrderOutOfRange(f64),
    #[error("non-finite input sample fed to operator")]
    NonFiniteInput,
    #[error("invalid Oustaloup band: omega_b={omega_b}, omega_h={omega_h}")]
    InvalidBand { omega_b: f64, omega_h: f64 },
    #[error("Oustaloup order must satisfy 0 < |alpha| < 1, got {0}")]
    InvalidOustaloupOrder(f64),
    #[error("Oustaloup cell count must be >= 1")]
    NoCells,
    #[error("sample period {h} too coarse for band edge omega_h={omega_h} (need omega_h < pi/h)")]
    BandRateMismatch { h: f64, omega_h: f64 },
}

/// Errors from the photovoltaic source model.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum PvError {
    #[error("implicit I-V solve failed to converge after {iters} iterations (residual {residual} A)")]
    NoConvergence { iters: usize, residual: f64 },
    #[error("datasheet infeasible for single-diode extraction: {0}")]
    InfeasibleDatasheet(String),
}

/// Errors from converter sizing formulas.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SizingError {
    #[error("boost sizing requires 0 < v_in < v_out (v_in={v_in}, v_out={v_out})")]
    VoltageHeadroom { v_in: f64, v_out: f64 },
    #[error("duty {0} at or beyond the 0.95 practical ceiling")]
    DutyCeiling(f64),
}

/// Errors from signal metrics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("window length {len} does not hold {n_periods} integer periods at fs={fs}, f0={f0}")]
    BadWindow {
        len: usize,
        fs: f64,
        f0: f64,
        n_periods: usize,
    },
    #[error("fundamental magnitude below noise floor; THD undefined")]
    UndefinedThd,
    #[error("zero-RMS signal; power factor undefined")]
    UndefinedPowerFactor,
    #[error("windows must be aligned: lengths {0} and {1}")]
    MisalignedWindows(usize, usize),
    #[error("sample rate too low to resolve harmonic {harmonic} of {f0} Hz at fs={fs}")]
    Unresolvable { harmonic: usize, f0: f64, fs: f64 },
    #[error("power undefined for non-positive PV power {0}")]
    NonPositivePv(f64),
}

/// Errors from scenario loading and validation.
#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("unknown builtin scenario '{0}' (known: paper, ideal-stc)")]
    UnknownBuiltin(String),
    #[error("failed to read scenario file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario parse error: {0}")]
    Parse(#[from] toml::de::Error),
    #[error("scenario invariant violated: {field}: {reason}")]
    Invalid { field: String, reason: String },
}

/// Errors from a simulation run.
#[derive(Debug, Error)]
pub enum SimError {
    #[error("state diverged at t={t} s: |{signal}| = {value}")]
    Diverged { t: f64, signal: String, value: f64 },
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Pv(#[from] PvError),
}
