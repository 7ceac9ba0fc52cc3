//! Acceptance run: every criterion on its default configuration, one
//! PASS/FAIL line each. Run with `--nocapture` to see the lines.
//!
//! Two criteria cannot hold as stated (see the positivity and strip-measure
//! notes below). Their lines print FAIL; the test pins the measured values
//! that explain why instead of asserting a pass.

use std::time::{Duration, Instant};

use carleman_lab::config::{Experiment, ExperimentConfig};
use carleman_lab::experiments::{execute, Item, Outcome};

fn run(e: Experiment) -> (Outcome, Duration) {
    let cfg = ExperimentConfig::defaults(e).resolve().expect("defaults resolve");
    let start = Instant::now();
    let out = execute(&cfg).unwrap_or_else(|err| panic!("{}: {err}", e.name()));
    (out, start.elapsed())
}

fn budget_line(item: &Item, elapsed: Duration, limit: Option<Duration>) -> Item {
    let mut item = item.clone();
    item.summary = format!("{}; {:.1} s", item.summary, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        item.summary.push_str(&format!(" of {} s", limit.as_secs()));
        item.pass &= elapsed <= limit;
    }
    item
}

fn report(out: &Outcome, key: &str) -> f64 {
    let v = key.split('.').fold(&out.report, |v, k| &v[k]);
    v.as_f64().unwrap_or_else(|| panic!("{key} missing from report"))
}

#[test]
fn acceptance() {
    let secs = Duration::from_secs;
    let plan = [
        (Experiment::Identity, Some(secs(30))),
        (Experiment::Carleman, None),
        (Experiment::Subelliptic, Some(secs(120))),
        (Experiment::Multipliers, None),
        (Experiment::Wave, Some(secs(30))),
        (Experiment::Ledger, None),
        (Experiment::Stability, Some(secs(300))),
    ];
    let mut lines = Vec::new();
    let mut outcomes = Vec::new();
    for (e, limit) in plan {
        let (out, elapsed) = run(e);
        for item in &out.items {
            lines.push(budget_line(item, elapsed, limit));
        }
        outcomes.push((e, out));
    }
    lines.sort_by_key(|i| i.criterion);
    for l in &lines {
        println!("{}", l.line());
    }
    let ids: Vec<u8> = lines.iter().map(|l| l.criterion).collect();
    assert_eq!(ids, (1..=10).collect::<Vec<u8>>());

    let out = |e: Experiment| &outcomes.iter().find(|(x, _)| *x == e).expect("experiment ran").1;
    for l in &lines {
        match l.criterion {
            // Q+ + tau|v_t|^2 equals tau(-5/2 v_t^2 + 7/2 v_r^2) at a = 3 tau / 2,
            // negative wherever v_r = 0 and v_t != 0. The time-compensated
            // spatial form holds with ratio 7/2.
            3 => {
                assert!(!l.pass);
                let c = out(Experiment::Carleman);
                assert!((report(c, "min_ratio_full") + 2.5).abs() < 1e-6);
                assert!((report(c, "min_ratio_compensated") - 3.5).abs() < 1e-4);
            }
            // The strip measure is 4 delta^2 log(1/delta) + O(delta^2): the
            // logarithm pulls the fitted power to about 1.64 on this sweep,
            // while the log-corrected law converges.
            10 => {
                assert!(!l.pass);
                let s = out(Experiment::Stability);
                let e = report(s, "strip.exponent_exact");
                assert!((1.55..1.75).contains(&e), "exponent {e}");
                let law = s.report["strip"]["log_law"].as_array().expect("log law");
                let last = law.last().and_then(|v| v.as_f64()).expect("log law entry");
                assert!((last / 2.0 - 1.0).abs() < 0.1, "log law {law:?}");
            }
            _ => assert!(l.pass, "{}", l.line()),
        }
    }
}
