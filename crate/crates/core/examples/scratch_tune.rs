//! Scratch closed-loop tuning harness. Not part of the deliverable.

use fopv_core::scenario::{Mode, Scenario};
use fopv_core::sim::{run, settle_detect, summarize, SETTLE_BAND};

fn stats(name: &str, xs: &[f64]) {
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut sum = 0.0;
    for &x in xs {
        lo = lo.min(x);
        hi = hi.max(x);
        sum += x;
    }
    println!(
        "  {name}: min {lo:.4} max {hi:.4} mean {:.4}",
        sum / xs.len() as f64
    );
}

fn grid_search() {
    let args: Vec<String> = std::env::args().collect();
    let s3: f64 = args
        .iter()
        .find_map(|a| a.strip_prefix("s3=").map(|v| v.parse().unwrap()))
        .unwrap_or(0.01);
    let vdrop: f64 = args
        .iter()
        .find_map(|a| a.strip_prefix("vdrop=").map(|v| v.parse().unwrap()))
        .unwrap_or(7.0);
    let full = args.iter().any(|a| a == "fullsched");
    // FO vs IO behavior across FOPI gains
    println!("kp       ki       | mode | settle  clamp  x3exc   THD%     PF       loss%");
    for &kp in &[5e-7, 7e-7, 1e-6] {
        for &ki in &[1e-5, 2e-5, 3e-5] {
            for mode in [Mode::Fo, Mode::Io] {
                let mut sc = Scenario::builtin("paper").unwrap();
                sc.mode = mode;
                if !full {
                    sc.schedule.truncate(1);
                }
                sc.controller.kp = kp;
                sc.controller.ki = ki;
                sc.controller.scale_e3 = s3;
                sc.plant.v_drop_inv = vdrop;
                let Ok(log) = run::<f64>(&sc) else {
                    println!("{kp:8.1e} {ki:8.1e} | {mode:?} | DIVERGED");
                    continue;
                };
                let sums = summarize(&log).unwrap();
                for (ci, s) in sums.iter().enumerate() {
                    let c = &log.cases[ci];
                    let x3_tail: Vec<f64> = log
                        .t
                        .iter()
                        .zip(&log.x3)
                        .filter(|(t, _)| **t >= c.t_end - 0.1 && **t < c.t_end)
                        .map(|(_, x)| *x)
                        .collect();
                    let exc = x3_tail
                        .iter()
                        .fold(0.0_f64, |m, &x| m.max((x - 400.0).abs()));
                    println!(
                        "{kp:8.1e} {ki:8.1e} | {:?} c{} | {:7}  {:5}  {exc:6.2}  {:7.4}  {:7.5}  {:6.2}  P {:6.1}/{:6.1}",
                        mode,
                        s.case_id,
                        c.settled_at
                            .map(|t| format!("{t:.3}"))
                            .unwrap_or("never".into()),
                        log.events.beta_clamped,
                        s.thd_pct,
                        s.pf,
                        s.loss_pct,
                        s.p_real,
                        s.p_pv,
                    );
                }
            }
        }
    }
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "grid") {
        grid_search();
        return;
    }
    let mode = if args.iter().any(|a| a == "io") {
        Mode::Io
    } else {
        Mode::Fo
    };
    let dur: f64 = args
        .iter()
        .find_map(|a| a.strip_prefix("dur=").map(|v| v.parse().unwrap()))
        .unwrap_or(0.5);

    let mut sc = Scenario::builtin("paper").unwrap();
    sc.mode = mode;
    // shorten: keep case 1 only at the requested duration
    sc.schedule.truncate(1);
    sc.schedule[0].duration = dur;

    for arg in &args {
        if let Some(v) = arg.strip_prefix("kp=") {
            sc.controller.kp = v.parse().unwrap();
        }
        if let Some(v) = arg.strip_prefix("ki=") {
            sc.controller.ki = v.parse().unwrap();
        }
        if let Some(v) = arg.strip_prefix("s1=") {
            sc.controller.scale_e1 = v.parse().unwrap();
        }
        if let Some(v) = arg.strip_prefix("s3=") {
            sc.controller.scale_e3 = v.parse().unwrap();
        }
        if let Some(v) = arg.strip_prefix("ma=") {
            sc.controller.fopi_prefilter = v.parse::<i32>().unwrap() != 0;
        }
        if let Some(v) = arg.strip_prefix("step=") {
            sc.controller.mppt_step = v.parse().unwrap();
        }
        if arg == "full" {
            sc = Scenario::builtin("paper").unwrap();
            sc.mode = mode;
        }
    }

    let t0 = std::time::Instant::now();
    let log = match run::<f64>(&sc) {
        Ok(l) => l,
        Err(e) => {
            println!("RUN FAILED: {e}");
            return;
        }
    };
    println!(
        "run ok: {} log rows, {:.2} s wall, mode {:?}",
        log.len(),
        t0.elapsed().as_secs_f64(),
        mode
    );
    println!("events: {:?}", log.events);
    println!("settle: {:?}", settle_detect(&log, SETTLE_BAND));

    // trajectory overview: sample every 10 ms
    let log_dt = log.dt * log.decimation as f64;
    let every = (0.01 / log_dt) as usize;
    print!("t/x1/x1ref/x2/x3/beta:");
    for i in (0..log.len()).step_by(every.max(1) * 5) {
        print!(
            " [{:.2}: {:.1} {:.1} {:.2} {:.1} {:.4}]",
            log.t[i], log.x1[i], log.x1ref[i], log.x2[i], log.x3[i], log.beta[i]
        );
    }
    println!();

    for c in &log.cases {
        println!(
            "case {}: env ({}, {}), mpp ({:.2} V, {:.1} W), tail mean ppv {:.1}, settled {:?}",
            c.case_id, c.irradiance, c.temperature, c.mpp.v_mpp, c.mpp.p_mpp, c.mean_ppv_tail,
            c.settled_at
        );
        stats("tail x3->", &c.tail_v1.iter().map(|v| *v).collect::<Vec<_>>());
        // V-dot sign fractions
        let frac_le = |vs: &[f64]| {
            if vs.len() < 2 {
                return f64::NAN;
            }
            let neg = vs.windows(2).filter(|w| w[1] <= w[0]).count();
            neg as f64 / (vs.len() - 1) as f64
        };
        println!(
            "  V1dot<=0: {:.4}  V3dot<=0: {:.4}  (n={} / {})",
            frac_le(&c.tail_v1),
            frac_le(&c.tail_v3),
            c.tail_v1.len(),
            c.tail_v3.len()
        );
        // stroboscopic V3 (one grid period stride)
        let per = (c.tail_v3.len() as f64 / 5.0).round() as usize;
        let strobe: Vec<f64> = c.tail_v3.iter().copied().collect();
        let neg = strobe
            .windows(per + 1)
            .step_by(1)
            .filter(|w| w[per] <= w[0])
            .count();
        let tot = strobe.len().saturating_sub(per);
        println!("  V3 strobe<=0: {:.4}", neg as f64 / tot.max(1) as f64);
    }

    match summarize(&log) {
        Ok(sums) => {
            for s in sums {
                println!(
                    "case {}: THD {:.3}% PF {:.5} P {:.1} W Q {:.1} VAR Ppv {:.1} W eff {:.2}% loss {:.2}% settled {}",
                    s.case_id, s.thd_pct, s.pf, s.p_real, s.q_reactive, s.p_pv,
                    s.efficiency_pct, s.loss_pct, s.settled
                );
            }
        }
        Err(e) => println!("summary failed: {e}"),
    }
}
