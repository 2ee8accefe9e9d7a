//! Output writers: per-signal CSV, figure SVGs, and the comparison report.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

use fopv_core::metrics::{power_factor, real_reactive_power, AnalysisWindow, CaseSummary};
use fopv_core::scenario::Mode;
use fopv_core::sim::SimLog;

use crate::svg::{decimate, Chart, Series};

/// Fixed CSV column schema (order is part of the interface).
pub const CSV_COLUMNS: &str =
    "time_s,x1_v,x2_a,x3_v,x4_a,u1,u2,beta,x1ref_v,x4ref_a,ipv_a,ppv_w,vg_v,V1,V2,V3";

pub fn write_csv(log: &SimLog<f64>, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(log.len() * 160 + 128);
    out.push_str(CSV_COLUMNS);
    out.push('\n');
    for i in 0..log.len() {
        use std::fmt::Write as _;
        let _ = writeln!(
            out,
            "{:.7},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.7e},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6e},{:.6e},{:.6e}",
            log.t[i],
            log.x1[i],
            log.x2[i],
            log.x3[i],
            log.x4[i],
            log.u1[i],
            log.u2[i],
            log.beta[i],
            log.x1ref[i],
            log.x4ref[i],
            log.ipv[i],
            log.ppv[i],
            log.vg[i],
            log.v1[i],
            log.v2[i],
            log.v3[i],
        );
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::Fo => "FO",
        Mode::Io => "IO",
    }
}

fn mode_color(mode: Mode) -> &'static str {
    match mode {
        Mode::Fo => "#c02020",
        Mode::Io => "#2040c0",
    }
}

fn signal_series<'a>(log: &SimLog<f64>, ys: &[f64], label: &'a str, color: &'a str) -> Series<'a> {
    let pts: Vec<(f64, f64)> = log.t.iter().copied().zip(ys.iter().copied()).collect();
    Series {
        label,
        color,
        points: decimate(&pts, 2400),
    }
}

/// Per-grid-period trend of (t_mid, P, Q, PF, efficiency).
fn per_period_trends(log: &SimLog<f64>) -> Vec<(f64, f64, f64, f64, f64)> {
    let log_dt = log.dt * log.decimation as f64;
    let f0 = log.plant.grid_freq;
    let rows_per_period = (1.0 / (f0 * log_dt)).round() as usize;
    if rows_per_period < 8 {
        return vec![];
    }
    let fs = 1.0 / log_dt;
    let mut out = vec![];
    let mut start = 0usize;
    while start + rows_per_period <= log.len() {
        let end = start + rows_per_period;
        let v: Vec<f64> = log.vg[start..end].to_vec();
        let i: Vec<f64> = log.x4[start..end].to_vec();
        let ppv = log.ppv[start..end].iter().sum::<f64>() / rows_per_period as f64;
        if let (Ok(vw), Ok(iw)) = (
            AnalysisWindow::with_periods(v, fs, f0, 1),
            AnalysisWindow::with_periods(i, fs, f0, 1),
        ) {
            let t_mid = log.t[start] + 0.5 / f0;
            let pf = power_factor(&vw, &iw).unwrap_or(f64::NAN);
            if let Ok(pq) = real_reactive_power(&vw, &iw) {
                let eff = if ppv > 0.0 { 100.0 * pq.p / ppv } else { f64::NAN };
                out.push((t_mid, pq.p, pq.q, pf, eff));
            }
        }
        start = end;
    }
    out
}

/// Write the nine figure counterparts for the available runs.
pub fn write_plots(logs: &[&SimLog<f64>], dir: &Path) -> Result<()> {
    let figures: [(&str, &str, &str, fn(&SimLog<f64>) -> &[f64]); 4] = [
        (
            "fig08_mppt_reference.svg",
            "P&O reference voltage",
            "x1* (V)",
            |l| &l.x1ref,
        ),
        ("fig09_pv_power.svg", "PV output power", "P_pv (W)", |l| &l.ppv),
        (
            "fig10_boost_current.svg",
            "Boost inductor current",
            "x2 (A)",
            |l| &l.x2,
        ),
        ("fig11_pv_voltage.svg", "PV voltage", "x1 (V)", |l| &l.x1),
    ];
    for (file, title, ylab, pick) in figures {
        let chart = Chart {
            title,
            x_label: "t (s)",
            y_label: ylab,
            series: logs
                .iter()
                .map(|l| signal_series(l, pick(l), mode_name(l.mode), mode_color(l.mode)))
                .collect(),
        };
        fs::write(dir.join(file), chart.render())?;
    }

    // fig 12: grid current against its reference, zoomed on the last
    // periods of the first case (or the log tail).
    {
        let mut series = vec![];
        for l in logs {
            let t_end = l.cases.first().map(|c| c.t_end).unwrap_or_else(|| {
                l.t.last().copied().unwrap_or(0.0)
            });
            let t_from = t_end - 3.0 / l.plant.grid_freq;
            let pts: Vec<(f64, f64)> = l
                .t
                .iter()
                .copied()
                .zip(l.x4.iter().copied())
                .filter(|(t, _)| *t >= t_from && *t < t_end)
                .collect();
            series.push(Series {
                label: mode_name(l.mode),
                color: mode_color(l.mode),
                points: pts,
            });
        }
        if let Some(l) = logs.first() {
            let t_end = l.cases.first().map(|c| c.t_end).unwrap_or(0.0);
            let t_from = t_end - 3.0 / l.plant.grid_freq;
            let pts: Vec<(f64, f64)> = l
                .t
                .iter()
                .copied()
                .zip(l.x4ref.iter().copied())
                .filter(|(t, _)| *t >= t_from && *t < t_end)
                .collect();
            series.push(Series {
                label: "reference",
                color: "#20a020",
                points: pts,
            });
        }
        let chart = Chart {
            title: "Grid current and reference",
            x_label: "t (s)",
            y_label: "x4 (A)",
            series,
        };
        fs::write(dir.join("fig12_grid_current.svg"), chart.render())?;
    }

    // figs 13-16: per-period trends
    let trends: Vec<(Mode, Vec<(f64, f64, f64, f64, f64)>)> = logs
        .iter()
        .map(|l| (l.mode, per_period_trends(l)))
        .collect();
    let trend_figures: [(&str, &str, &str, usize); 4] = [
        ("fig13_real_power.svg", "Real power", "P (W)", 1),
        ("fig14_reactive_power.svg", "Reactive power", "Q (VAR)", 2),
        ("fig15_power_factor.svg", "Power factor", "PF", 3),
        ("fig16_efficiency.svg", "System efficiency", "efficiency (%)", 4),
    ];
    for (file, title, ylab, idx) in trend_figures {
        let chart = Chart {
            title,
            x_label: "t (s)",
            y_label: ylab,
            series: trends
                .iter()
                .map(|(mode, rows)| Series {
                    label: mode_name(*mode),
                    color: mode_color(*mode),
                    points: rows
                        .iter()
                        .map(|r| {
                            (
                                r.0,
                                match idx {
                                    1 => r.1,
                                    2 => r.2,
                                    3 => r.3,
                                    _ => r.4,
                                },
                            )
                        })
                        .collect(),
                })
                .collect(),
        };
        fs::write(dir.join(file), chart.render())?;
    }
    Ok(())
}

/// Comparison table, text and CSV forms.
pub fn write_report(
    fo: &[CaseSummary<f64>],
    io: Option<&[CaseSummary<f64>]>,
    dir: &Path,
) -> Result<String> {
    let mut text = String::new();
    let mut csv = String::from(
        "case,controller,thd_pct,ieee_pass,paper_matched,pf,p_real_w,q_var,p_pv_w,efficiency_pct,loss_pct,settled\n",
    );
    use std::fmt::Write as _;
    let _ = writeln!(
        text,
        "{:<6}{:<6}{:>9}{:>7}{:>9}{:>9}{:>10}{:>9}{:>10}{:>8}{:>8}{:>9}",
        "case", "ctrl", "THD(%)", "IEEE", "matched", "PF", "P(W)", "Q(VAR)", "Ppv(W)", "eff(%)", "loss(%)", "settled"
    );
    let refs = fopv_core::checks::THD_PAPER_VALUES;
    let band = fopv_core::checks::THD_PAPER_BAND;
    let mut emit_row = |s: &CaseSummary<f64>, ctrl: &str, reference: f64| {
        let ieee = s.thd_pct < fopv_core::checks::THD_IEEE_LIMIT;
        let matched = (s.thd_pct - reference).abs() <= band;
        let _ = writeln!(
            text,
            "{:<6}{:<6}{:>9.3}{:>7}{:>9}{:>9.4}{:>10.1}{:>9.1}{:>10.1}{:>8.2}{:>8.2}{:>9}",
            s.case_id,
            ctrl,
            s.thd_pct,
            if ieee { "pass" } else { "FAIL" },
            if matched { "yes" } else { "no" },
            s.pf,
            s.p_real,
            s.q_reactive,
            s.p_pv,
            s.efficiency_pct,
            s.loss_pct,
            s.settled,
        );
        let _ = writeln!(
            csv,
            "{},{},{:.4},{},{},{:.6},{:.2},{:.2},{:.2},{:.3},{:.3},{}",
            s.case_id, ctrl, s.thd_pct, ieee, matched, s.pf, s.p_real, s.q_reactive, s.p_pv,
            s.efficiency_pct, s.loss_pct, s.settled,
        );
    };
    for (i, s) in fo.iter().enumerate() {
        emit_row(s, "FO", refs.get(i).map(|r| r.0).unwrap_or(f64::NAN));
        if let Some(io) = io {
            if let Some(o) = io.get(i) {
                emit_row(o, "IO", refs.get(i).map(|r| r.1).unwrap_or(f64::NAN));
            }
        }
    }
    fs::write(dir.join("report.txt"), &text)?;
    fs::write(dir.join("report.csv"), &csv)?;
    Ok(text)
}
