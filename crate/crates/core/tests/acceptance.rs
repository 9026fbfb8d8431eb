//! Acceptance criteria, one line each. Thresholds are fixed; a criterion that
//! the model cannot meet is reported as FAIL, never relaxed.

mod common;

use std::time::{Duration, Instant};

use alpha_bridge::experiments::run_experiment;
use alpha_bridge::model::{covariance, rescaled_qv, transition_moments, variance};
use alpha_bridge::samplers::euler_variance;
use alpha_bridge::{BridgeParams, ExperimentSummary, TimeGrid};
use common::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Verdict {
    Verdict { passed, detail }
}

fn run(name: &str) -> ExperimentSummary {
    run_experiment(&preset(name)).unwrap()
}

fn checks<'a>(s: &'a ExperimentSummary, name: &'a str) -> Vec<&'a alpha_bridge::experiments::Check> {
    s.check(name).collect()
}

fn all_pass(s: &ExperimentSummary, names: &[&str]) -> bool {
    names.iter().all(|n| {
        let c = checks(s, n);
        !c.is_empty() && c.iter().all(|c| c.passed)
    })
}

fn within_budget(start: Instant, budget: Duration) -> (bool, String) {
    let took = start.elapsed();
    (
        took <= budget,
        format!("{:.2}s of {}s", took.as_secs_f64(), budget.as_secs()),
    )
}

fn c1_covariance() -> Verdict {
    let start = Instant::now();
    let s = run("covariance-check");
    let z: Vec<String> = checks(&s, "covariance-max-z")
        .iter()
        .map(|c| format!("{} {:.2}", c.cell.split(',').next().unwrap_or(""), c.value))
        .collect();
    // budget is per alpha; the preset holds five
    let (fast, t) = within_budget(start, Duration::from_secs(5 * 60));
    verdict(
        all_pass(&s, &["covariance-max-z"]) && fast,
        format!("max z <= 4: {} [{t}]", z.join(" ")),
    )
}

fn c2_bridge_reduction() -> Verdict {
    let pts: Vec<f64> = (1..=50).map(|k| k as f64 / 51.0).collect();
    let mut worst: f64 = 0.0;
    for &s in &pts {
        for &t in &pts {
            let want = s.min(t) * (1.0 - s.max(t));
            let got = covariance(1.0, 1.0, s, t, 1.0).unwrap();
            worst = worst.max(((got - want) / want).abs());
        }
    }
    verdict(worst <= 1e-12, format!("max relative error {worst:.2e} <= 1e-12"))
}

fn c3_branch_continuity() -> Verdict {
    let mut worst: f64 = 0.0;
    for &(s, t) in &[(0.2, 0.6), (0.5, 0.5), (0.9, 0.99), (0.999, 0.3)] {
        for &a in &[-2.0, 0.0, 0.5, 1.5] {
            let base = covariance(a, 1.0 - a, s, t, 1.0).unwrap();
            for d in [1e-9, -1e-9] {
                let v = covariance(a, 1.0 - a + d, s, t, 1.0).unwrap();
                worst = worst.max(((v - base) / base).abs());
            }
        }
        let base = variance(0.5, t, 1.0).unwrap();
        for d in [1e-9, -1e-9] {
            worst = worst.max(((variance(0.5 + d, t, 1.0).unwrap() - base) / base).abs());
        }
    }
    verdict(worst <= 1e-6, format!("max relative jump {worst:.2e} <= 1e-6"))
}

fn c4_quadrature_agreement() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let rel = |a: f64, b: f64| {
        if b == 0.0 {
            a.abs()
        } else {
            ((a - b) / b).abs()
        }
    };
    let mut worst = [0.0f64; 4];
    for _ in 0..200 {
        let big_t = rng.random_range(0.5..3.0);
        let a = rng.random_range(-3.0..3.0);
        let b = rng.random_range(-3.0..3.0);
        let s = big_t * rng.random_range(0.001..0.99);
        let t = big_t * rng.random_range(0.001..0.99);
        let sigma = rng.random_range(0.1..3.0);
        worst[0] = worst[0].max(rel(
            covariance(a, b, s, t, big_t).unwrap(),
            covariance_oracle(a, b, s, t, big_t),
        ));
        worst[1] = worst[1].max(rel(variance(a, t, big_t).unwrap(), variance_oracle(a, t, big_t)));
        worst[2] = worst[2].max(rel(rescaled_qv(a, t, big_t).unwrap(), rescaled_qv_oracle(a, t, big_t)));
        let p = BridgeParams::new(a, sigma, big_t).unwrap();
        let (lo, hi) = (s.min(t), s.max(t));
        let (_, var) = transition_moments(&p, lo, hi, 0.0).unwrap();
        worst[3] = worst[3].max(rel(var, transition_variance_oracle(&p, lo, hi)));
    }
    let (fast, t) = within_budget(start, Duration::from_secs(10));
    let ok = worst.iter().all(|w| *w <= 1e-9) && fast;
    verdict(
        ok,
        format!(
            "cov {:.1e}, var {:.1e}, qv {:.1e}, transition {:.1e} <= 1e-9 [{t}]",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn c5_euler_bias() -> Verdict {
    let start = Instant::now();
    let p = BridgeParams::standard(1.0, 1.0).unwrap();
    let at = |n: usize| {
        *euler_variance(&p, &TimeGrid::uniform(0.5, n).unwrap())
            .unwrap()
            .last()
            .unwrap()
    };
    // the closed form at (1, 0.5, 1) is t(T - t)/T = 0.25
    let want = variance(1.0, 0.5, 1.0).unwrap();
    let e1 = (at(5_000) - want).abs();
    let e2 = (at(10_000) - want).abs();
    let factor = e1 / e2;
    let (fast, t) = within_budget(start, Duration::from_secs(1));
    verdict(
        e1 / want <= 0.005 && (1.7..=2.3).contains(&factor) && fast,
        format!(
            "relative error {:.2e} <= 5e-3 vs variance(1,0.5,1) = {want}, halving factor {factor:.3} in [1.7, 2.3] [{t}]",
            e1 / want
        ),
    )
}

fn c6_consistency() -> Verdict {
    let start = Instant::now();
    let s = run("consistency-sweep");
    let med = &s.cells[0].series["median_abs_error"];
    let (fast, t) = within_budget(start, Duration::from_secs(120));
    verdict(
        all_pass(&s, &["median-error-decreasing", "final-median-error"]) && fast,
        format!("median |alpha_hat - 1| by horizon {med:.4?}; strictly decreasing, last <= 0.15 [{t}]"),
    )
}

fn c7_classification() -> Verdict {
    let start = Instant::now();
    let s = run("classification");
    let acc = checks(&s, "accuracy")[0].value;
    let rows: Vec<&Vec<u64>> = s.cells.iter().map(|c| &c.counts["confusion_row"]).collect();
    let (fast, t) = within_budget(start, Duration::from_secs(180));
    verdict(
        all_pass(&s, &["accuracy", "confusion-row-conserved"]) && fast,
        format!("accuracy {acc:.4} >= 0.95, confusion rows {rows:?} [{t}]"),
    )
}

fn c8_qv_dichotomy() -> Verdict {
    let start = Instant::now();
    let s = run("qv-dichotomy");
    let sig = s.cells[0].series["median_sigma2"].last().copied().unwrap();
    let inc = checks(&s, "error-increases")[0].value;
    let (fast, t) = within_budget(start, Duration::from_secs(120));
    verdict(
        all_pass(&s, &["final-relative-error", "error-increases"]) && fast,
        format!("median sigma2 at 2^16 = {sig:.5} (within 3% of 4), {inc} increases of 8 (<= 1) [{t}]"),
    )
}

fn c9_terminal() -> Verdict {
    let start = Instant::now();
    let bridge = run("terminal-bridge");
    let div = run("terminal-divergence");
    let p99 = checks(&bridge, "terminal-abs-p99")[0].value;
    let stats = &div.cells[0].stats;
    let (fast, t) = within_budget(start, Duration::from_secs(60));
    verdict(
        all_pass(&bridge, &["terminal-abs-p99"]) && all_pass(&div, &["frac-small", "frac-plus"]) && fast,
        format!(
            "(a) p99 |X| = {p99:.4} <= 0.06; (b) frac_small = {:.3} <= 0.01, frac_plus = {:.3} in [0.44, 0.56] [{t}]",
            stats["frac_small"], stats["frac_plus"]
        ),
    )
}

fn c10_rescaled_limit() -> Verdict {
    let start = Instant::now();
    let s = run("rescaled-limit");
    let ks = checks(&s, "ks-distance")[0].value;
    let (fast, t) = within_budget(start, Duration::from_secs(60));
    verdict(
        all_pass(&s, &["ks-distance"]) && fast,
        format!("KS to N(0, 2) = {ks:.4} <= 0.03 [{t}]"),
    )
}

fn c11_energy_divergence() -> Verdict {
    let start = Instant::now();
    let s = run("energy-divergence");
    let detail: Vec<String> = s
        .cells
        .iter()
        .map(|c| {
            let e = &c.series["median_energy"];
            format!(
                "alpha={}: {:.3e} < {:.3e} < {:.3e}",
                c.params.unwrap().alpha,
                e[0],
                e[1],
                e[2]
            )
        })
        .collect();
    let (fast, t) = within_budget(start, Duration::from_secs(60));
    verdict(
        all_pass(&s, &["energy-increasing"]) && fast,
        format!("{} [{t}]", detail.join("; ")),
    )
}

fn c12_lil() -> Verdict {
    let s = run("lil-diagnostic");
    let m = checks(&s, "median-sup-ratio")[0].value;
    verdict(
        all_pass(&s, &["median-sup-ratio"]),
        format!("soft: median sup ratio {m:.4} in [0.5, 1.3]"),
    )
}

fn c13_determinism() -> Verdict {
    let mut mismatched = Vec::new();
    for (name, _) in PRESET_CRITERIA {
        let spec = preset(name);
        let bytes = |threads: usize| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| run_experiment(&spec).unwrap().to_canonical_json().unwrap())
        };
        let reference = bytes(1);
        if [1, 2, 8].iter().any(|&n| bytes(n) != reference) {
            mismatched.push(*name);
        }
    }
    verdict(
        mismatched.is_empty(),
        format!(
            "{} presets at 1, 1, 2 and 8 threads; mismatched: {mismatched:?}",
            PRESET_CRITERIA.len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("covariance verification", c1_covariance),
        ("Brownian-bridge reduction", c2_bridge_reduction),
        ("branch continuity", c3_branch_continuity),
        ("quadrature oracle agreement", c4_quadrature_agreement),
        ("Euler variance bias", c5_euler_bias),
        ("MLE consistency", c6_consistency),
        ("classification accuracy", c7_classification),
        ("QV dichotomy", c8_qv_dichotomy),
        ("terminal behavior", c9_terminal),
        ("rescaled limit", c10_rescaled_limit),
        ("energy divergence", c11_energy_divergence),
        ("LIL soft diagnostic", c12_lil),
        ("determinism", c13_determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let id = format!("{}", i + 1);
        if !filter.is_empty() && !filter.iter().any(|q| *q == id || name.contains(q.as_str())) {
            continue;
        }
        ran += 1;
        let v = f();
        if !v.passed {
            failed += 1;
        }
        println!(
            "{} criterion {:>2} {name}: {}",
            if v.passed { "PASS" } else { "FAIL" },
            i + 1,
            v.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
