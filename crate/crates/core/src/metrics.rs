//! Steady-state power-quality metrics: THD, power factor, real/reactive
//! power, efficiency, and per-case summaries.
//!
//! Harmonic magnitudes come from single-bin correlations of a windowless
//! DFT over an integer number of fundamental periods, which makes every
//! harmonic land exactly on a bin (no leakage for periodic signals):
//!
//! ```text
//! a_k = 2/N sum x[n] cos(2 pi k n_p n / N)
//! b_k = 2/N sum x[n] sin(2 pi k n_p n / N)
//! THD = sqrt(sum_{k=2..H} a_k^2 + b_k^2) / sqrt(a_1^2 + b_1^2) * 100
//! ```

use serde::{Deserialize, Serialize};

use crate::error::MetricsError;
use crate::scalar::Real;

/// Default harmonic ceiling for THD (IEEE-style, through the 50th).
pub const DEFAULT_THD_HARMONICS: usize = 50;

/// An integer-period window of uniformly sampled data.
#[derive(Debug, Clone)]
pub struct AnalysisWindow<T> {
    samples: Vec<T>,
    fs: T,
    f0: T,
    n_periods: usize,
}

impl<T: Real> AnalysisWindow<T> {
    /// A measurement window: at least 5 fundamental periods, with the
    /// sample count matching `round(n_periods * fs / f0)`.
    pub fn new(samples: Vec<T>, fs: T, f0: T, n_periods: usize) -> Result<Self, MetricsError> {
        if n_periods < 5 {
            return Err(MetricsError::BadWindow {
                len: samples.len(),
                fs: fs.to_f64().unwrap_or(f64::NAN),
                f0: f0.to_f64().unwrap_or(f64::NAN),
                n_periods,
            });
        }
        Self::with_periods(samples, fs, f0, n_periods)
    }

    /// Relaxed constructor for per-period trend series (p/q/pf traces); the
    /// THD measurement path uses [`AnalysisWindow::new`].
    pub fn with_periods(
        samples: Vec<T>,
        fs: T,
        f0: T,
        n_periods: usize,
    ) -> Result<Self, MetricsError> {
        let expect = (T::of_usize(n_periods) * fs / f0)
            .round()
            .to_usize()
            .unwrap_or(0);
        if n_periods < 1 || samples.is_empty() || samples.len() != expect {
            return Err(MetricsError::BadWindow {
                len: samples.len(),
                fs: fs.to_f64().unwrap_or(f64::NAN),
                f0: f0.to_f64().unwrap_or(f64::NAN),
                n_periods,
            });
        }
        Ok(Self {
            samples,
            fs,
            f0,
            n_periods,
        })
    }

    pub fn samples(&self) -> &[T] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn rms(&self) -> T {
        (self
            .samples
            .iter()
            .map(|&x| x * x)
            .fold(T::zero(), |a, b| a + b)
            / T::of_usize(self.len()))
        .sqrt()
    }

    /// Peak-amplitude phasor of harmonic `k` as `(cos_component,
    /// sin_component)` in the `a cos + b sin` decomposition.
    pub fn harmonic_phasor(&self, k: usize) -> Result<(T, T), MetricsError> {
        let freq = T::of_usize(k) * self.f0;
        if freq * T::of(2.0) > self.fs {
            return Err(MetricsError::Unresolvable {
                harmonic: k,
                f0: self.f0.to_f64().unwrap_or(f64::NAN),
                fs: self.fs.to_f64().unwrap_or(f64::NAN),
            });
        }
        let n = self.len();
        let w = T::of(2.0) * T::PI() * T::of_usize(k * self.n_periods) / T::of_usize(n);
        let mut a = T::zero();
        let mut b = T::zero();
        for (idx, &x) in self.samples.iter().enumerate() {
            let th = w * T::of_usize(idx);
            a += x * th.cos();
            b += x * th.sin();
        }
        let scale = T::of(2.0) / T::of_usize(n);
        Ok((a * scale, b * scale))
    }

    fn harmonic_amplitude(&self, k: usize) -> Result<T, MetricsError> {
        let (a, b) = self.harmonic_phasor(k)?;
        Ok((a * a + b * b).sqrt())
    }
}

/// Ratio of harmonic RMS (2..=n_harmonics) to fundamental RMS, percent.
pub fn thd<T: Real>(w: &AnalysisWindow<T>, n_harmonics: usize) -> Result<T, MetricsError> {
    let fund = w.harmonic_amplitude(1)?;
    let floor = w.rms() * T::of(1e-9) + T::of(1e-30);
    if fund < floor {
        return Err(MetricsError::UndefinedThd);
    }
    let mut acc = T::zero();
    for k in 2..=n_harmonics {
        let amp = w.harmonic_amplitude(k)?;
        acc += amp * amp;
    }
    Ok(acc.sqrt() / fund * T::of(100.0))
}

/// `mean(v*i) / (rms(v) * rms(i))`, clamped to [-1, 1].
pub fn power_factor<T: Real>(
    v: &AnalysisWindow<T>,
    i: &AnalysisWindow<T>,
) -> Result<T, MetricsError> {
    if v.len() != i.len() {
        return Err(MetricsError::MisalignedWindows(v.len(), i.len()));
    }
    let rv = v.rms();
    let ri = i.rms();
    if rv <= T::zero() || ri <= T::zero() {
        return Err(MetricsError::UndefinedPowerFactor);
    }
    let p = mean_product(v.samples(), i.samples());
    Ok((p / (rv * ri)).max(-T::one()).min(T::one()))
}

/// Real and reactive power of the pair of windows.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerPair<T> {
    /// Mean instantaneous power, W.
    pub p: T,
    /// Fundamental reactive power, VAR; negative = capacitive (current
    /// leading voltage).
    pub q: T,
}

/// P from the full waveforms, Q from the fundamental phasors (90-degree
/// shifted correlation).
pub fn real_reactive_power<T: Real>(
    v: &AnalysisWindow<T>,
    i: &AnalysisWindow<T>,
) -> Result<PowerPair<T>, MetricsError> {
    if v.len() != i.len() {
        return Err(MetricsError::MisalignedWindows(v.len(), i.len()));
    }
    if v.rms() <= T::zero() || i.rms() <= T::zero() {
        return Err(MetricsError::UndefinedPowerFactor);
    }
    let p = mean_product(v.samples(), i.samples());
    let (av, bv) = v.harmonic_phasor(1)?;
    let (ai, bi) = i.harmonic_phasor(1)?;
    // With x = a cos + b sin, the phase lead over the sin basis is
    // atan2(a, b); Q > 0 when current lags voltage.
    let q = (av * bi - bv * ai) * T::of(0.5);
    Ok(PowerPair { p, q })
}

fn mean_product<T: Real>(v: &[T], i: &[T]) -> T {
    v.iter()
        .zip(i)
        .map(|(&a, &b)| a * b)
        .fold(T::zero(), |x, y| x + y)
        / T::of_usize(v.len())
}

/// Grid-to-PV efficiency in percent.
pub fn efficiency<T: Real>(p_grid: T, p_pv: T) -> Result<T, MetricsError> {
    if p_pv <= T::zero() {
        return Err(MetricsError::NonPositivePv(p_pv.to_f64().unwrap_or(f64::NAN)));
    }
    Ok(T::of(100.0) * p_grid / p_pv)
}

/// Per-case steady-state metric summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseSummary<T> {
    pub case_id: usize,
    pub thd_pct: T,
    pub pf: T,
    pub p_real: T,
    pub q_reactive: T,
    pub p_pv: T,
    pub efficiency_pct: T,
    pub loss_pct: T,
    /// False when the settling detector never released the metric window.
    pub settled: bool,
}

/// Aggregate one case's steady-state window into a summary row.
pub fn summarize_window<T: Real>(
    case_id: usize,
    v_grid: &AnalysisWindow<T>,
    i_grid: &AnalysisWindow<T>,
    p_pv_mean: T,
    n_harmonics: usize,
    settled: bool,
) -> Result<CaseSummary<T>, MetricsError> {
    let thd_pct = thd(i_grid, n_harmonics)?;
    let pf = power_factor(v_grid, i_grid)?;
    let pq = real_reactive_power(v_grid, i_grid)?;
    let eff = efficiency(pq.p, p_pv_mean)?;
    Ok(CaseSummary {
        case_id,
        thd_pct,
        pf,
        p_real: pq.p,
        q_reactive: pq.q,
        p_pv: p_pv_mean,
        efficiency_pct: eff,
        loss_pct: T::of(100.0) - eff,
        settled,
    })
}
