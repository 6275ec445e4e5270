//! One line per acceptance criterion. Exits nonzero on any failure that is
//! not the recorded spillover counterexample class.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use kemplab::group::make_cyclic;
use kemplab::suites::{run_suite, Suite, SuiteConfig, SuiteOutcome};
use kemplab::sumset::{fast_product_set, product_set};
use kemplab::Subset;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;

fn run(s: Suite) -> (SuiteOutcome, Duration) {
    let t = Instant::now();
    let o = run_suite(s, &SuiteConfig { seed: SEED, instances: None }).unwrap_or_else(|e| panic!("{s}: {e}"));
    (o, t.elapsed())
}

fn fact(o: &SuiteOutcome, k: &str) -> String {
    o.facts.get(k).cloned().unwrap_or_default()
}

struct Report {
    unexpected: Vec<usize>,
}

impl Report {
    fn line(&mut self, n: usize, pass: bool, expected_fail: bool, msg: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {n} {verdict}: {msg}");
        if !pass && !expected_fail {
            self.unexpected.push(n);
        }
    }
}

/// Naive double loop against the FFT path on Z_65536 with |A|, |B| near 10^4.
fn kernel_speedup() -> (f64, Duration, Duration, bool) {
    let n = 1 << 16;
    let g = make_cyclic(n);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let p = 10_000.0 / n as f64;
    let a = Subset::from_fn(n, |_| rng.gen_bool(p));
    let b = Subset::from_fn(n, |_| rng.gen_bool(p));
    let t = Instant::now();
    let naive = product_set(&g, &a, &b).unwrap();
    let slow = t.elapsed();
    let mut fast = Duration::MAX;
    let mut same = true;
    for _ in 0..3 {
        let t = Instant::now();
        let f = fast_product_set(&g, &a, &b).unwrap();
        fast = fast.min(t.elapsed());
        same &= f == naive;
    }
    (slow.as_secs_f64() / fast.as_secs_f64(), slow, fast, same)
}

fn main() -> ExitCode {
    let mut r = Report { unexpected: Vec::new() };

    let (cd, t) = run(Suite::CauchyDavenport);
    r.line(1, cd.pass && t < Duration::from_secs(60), false, format!("{} pairs checked in {:.1}s, {} violations", cd.checked, t.as_secs_f64(), cd.violations));

    let (vo, t) = run(Suite::Vosper);
    r.line(
        2,
        vo.pass && t < Duration::from_secs(300),
        false,
        format!("{} equality cases, {} misses, {:.1}s", fact(&vo, "equality_cases"), vo.violations, t.as_secs_f64()),
    );

    let (sm, _) = run(Suite::Submodularity);
    let (sp, _) = run(Suite::Spillover);
    // The spillover inequality fails only when an upper level set is empty;
    // that class is recorded as a counterexample, anything else is a bug.
    let explained = fact(&sp, "violations_with_both_upper_levels") == "0"
        && fact(&sp, "violations_with_empty_upper_level") == sp.violations.to_string();
    r.line(
        3,
        sm.pass && sp.pass,
        sm.pass && explained,
        format!(
            "submodularity {}/{} clean; spillover {} violations in {} (all with an empty upper level: {explained}); raw counting model {} of {}",
            sm.checked - sm.violations,
            sm.checked,
            sp.violations,
            sp.checked,
            fact(&sp, "raw_model_violations"),
            fact(&sp, "raw_model_instances"),
        ),
    );

    let (tr, _) = run(Suite::Transfer);
    r.line(
        4,
        tr.pass,
        false,
        format!(
            "{} pairs with 0 < δ ≤ 1/50, {} certificate failures, max gap/δ = {}, max quotient deficit/δ = {}",
            tr.checked,
            tr.violations,
            fact(&tr, "max_gap_over_delta"),
            fact(&tr, "max_quotient_deficit_over_delta")
        ),
    );

    let start = Instant::now();
    let (sa, _) = run(Suite::SignAlgebra);
    let (sq, _) = run(Suite::Sequences);
    let (bg, _) = run(Suite::BallGrowth);
    let t = start.elapsed();
    r.line(
        5,
        sa.pass && sq.pass && bg.pass && t < Duration::from_secs(120),
        false,
        format!(
            "sign identities {}, sequence checks {}, ball growth {} (|N(λ)| = {}, |N(4λ)| = {} at λ = 5/360), violations {}, {:.1}s",
            sa.checked,
            sq.checked,
            bg.checked,
            fact(&bg, "n_lambda_5"),
            fact(&bg, "n_4lambda_5"),
            sa.violations + sq.violations + bg.violations,
            t.as_secs_f64()
        ),
    );

    let (al, _) = run(Suite::Alpha);
    r.line(
        6,
        al.pass,
        false,
        format!(
            "α = 1 on Z_36 (witness {}) and Z_360 (bracket [{}, {}], witness {}), {} loops quantized",
            fact(&al, "z36_witness_len"),
            fact(&al, "z360_lower"),
            fact(&al, "z360_upper"),
            fact(&al, "z360_witness_len"),
            fact(&al, "loops_sampled")
        ),
    );

    let (pl, _) = run(Suite::Pipeline);
    let eps: Vec<String> = (1..=4).map(|k| format!("{}@{}", fact(&pl, &format!("noise{k}_epsilon")), fact(&pl, &format!("noise{k}_delta")))).collect();
    r.line(7, pl.pass, false, format!("exact pair recovered with ε = 0; noise 1..4 ε@δ: {}", eps.join(", ")));

    let (ke, _) = run(Suite::KernelEquivalence);
    let (ratio, slow, fast, same) = kernel_speedup();
    r.line(
        8,
        ke.pass && same && ratio >= 5.0,
        false,
        format!(
            "{} random instances bit-exact; n = 65536 naive {:.1} ms vs FFT {:.2} ms, speedup {ratio:.0}x (target 20x, gate 5x)",
            ke.checked,
            slow.as_secs_f64() * 1e3,
            fast.as_secs_f64() * 1e3
        ),
    );

    let (pr, _) = run(Suite::Probe);
    r.line(
        9,
        pr.pass,
        false,
        format!(
            "seed {SEED}, budget {}: smallest toric 2-nonexpander Z_60×Z_60 {}, S_3×Z_20 {}",
            fact(&pr, "budget"),
            fact(&pr, "z60xz60_best_measure"),
            fact(&pr, "s3xz20_best_measure")
        ),
    );

    if r.unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        eprintln!("unexpected failures: {:?}", r.unexpected);
        ExitCode::FAILURE
    }
}
