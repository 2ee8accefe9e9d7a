//! Probe V1/V3 micro-behavior in the case-1 tail.
use fopv_core::scenario::Scenario;
use fopv_core::sim::run;

fn main() {
    let mut sc = Scenario::builtin("paper").unwrap();
    sc.schedule.truncate(1);
    let log = run::<f64>(&sc).unwrap();
    let c = &log.cases[0];
    // V1 at 100 kHz over 3 ms around a P&O event (tail starts 0.4 s; events at 10 ms grid)
    let v1 = &c.tail_v1;
    println!("n_v1 = {}", v1.len());
    // print consecutive diffs stats in three 1ms chunks at different offsets
    for (name, a, b) in [("pre-event", 800, 1000), ("post-event", 1000, 1200), ("mid", 5300, 5700)] {
        let mut pos = 0;
        let mut zero = 0;
        let mut neg = 0;
        let mut max_up: f64 = 0.0;
        for k in a + 1..b {
            let d = v1[k] - v1[k - 1];
            if d > 0.0 { pos += 1; max_up = max_up.max(d); } else if d == 0.0 { zero += 1 } else { neg += 1 }
        }
        println!("{name}: pos {pos} zero {zero} neg {neg}, max_up {max_up:.3e}, v1 range {:.3e}..{:.3e}",
            v1[a..b].iter().cloned().fold(f64::INFINITY, f64::min),
            v1[a..b].iter().cloned().fold(0.0, f64::max));
    }
    // sample raw v1 sequence
    print!("v1[1000..1040]:");
    for k in 1000..1040 { print!(" {:.4e}", v1[k]); }
    println!();
    let v3 = &c.tail_v3;
    print!("v3[500..540]:");
    for k in 500..540 { print!(" {:.4e}", v3[k]); }
    println!();
    let mut pos = 0; let mut neg = 0; let mut zero = 0;
    for k in 1..v3.len() { let d = v3[k] - v3[k-1]; if d > 0.0 {pos+=1} else if d < 0.0 {neg+=1} else {zero+=1} }
    println!("v3 diffs: pos {pos} zero {zero} neg {neg} of {}", v3.len()-1);
}
