//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//! Runs without the libtest harness so the lines always print.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use martingale_safety::bounds::{freedman_bound, freedman_kernel, hlip_delta_sigma, SafetySpec};
use martingale_safety::dynamics::Disturbance;
use martingale_safety::experiments::properties::*;
use martingale_safety::experiments::{
    hlip_case, issf_compare, HlipCaseParams, IssfCompareParams, Linspace, PropertyOutcome, ResultTable,
};
use martingale_safety::montecarlo::Engine;

const SEED: u64 = 20_240_917;

/// Exiting trajectories audited for containment, and failures among them.
#[derive(Default)]
struct Corpus {
    exits: u64,
    failures: u64,
}

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict {
        pass,
        detail: detail.into(),
    }
}

fn summarize(outcomes: &[PropertyOutcome]) -> Verdict {
    let pass = outcomes.iter().all(PropertyOutcome::passed);
    let detail = outcomes
        .iter()
        .map(|o| format!("{} {}/{} bad (worst {:.2e})", o.name, o.violations, o.samples, o.worst_margin))
        .collect::<Vec<_>>()
        .join("; ");
    verdict(pass, detail)
}

struct Suite {
    results: Vec<(String, bool)>,
}

impl Suite {
    fn run(&mut self, name: &str, limit: Duration, f: impl FnOnce() -> Result<Verdict, String>) {
        let start = Instant::now();
        let v = f().unwrap_or_else(|e| verdict(false, format!("error: {e}")));
        let took = start.elapsed();
        let in_time = took < limit;
        let pass = v.pass && in_time;
        let timing = if in_time {
            format!("{:.2}s", took.as_secs_f64())
        } else {
            format!("{:.2}s, over the {:.0}s limit", took.as_secs_f64(), limit.as_secs_f64())
        };
        println!("{} {name} [{timing}] {}", if pass { "PASS" } else { "FAIL" }, v.detail);
        self.results.push((name.to_string(), pass));
    }
}

fn f64_col(t: &ResultTable, row: usize, name: &str) -> f64 {
    t.get(row, name).and_then(|c| c.as_f64()).unwrap_or(f64::NAN)
}

fn i64_col(t: &ResultTable, row: usize, name: &str) -> i64 {
    t.get(row, name).and_then(|c| c.as_i64()).unwrap_or(-1)
}

/// `α^K h0 − δ Σ_{i<K} α^i` by direct summation.
fn floor_by_summation(alpha: f64, delta: f64, h0: f64, k: u32) -> f64 {
    let mut h = h0;
    for _ in 0..k {
        h = alpha * h - delta;
    }
    h
}

fn kernel_identities_check() -> Result<Verdict, String> {
    let zeros = [0.1, 1.0, 10.0]
        .iter()
        .all(|&xi| freedman_kernel(0.0, xi).ok() == Some(1.0));
    let h11 = freedman_kernel(1.0, 1.0).map_err(|e| e.to_string())?;
    let e4 = std::f64::consts::E / 4.0;
    let rel = (h11 - e4).abs() / e4;
    let grid = kernel_identities();
    Ok(verdict(
        zeros && rel <= 1e-14 && grid.passed(),
        format!("H(0,xi)=1 for xi in {{0.1,1,10}}: {zeros}; |H(1,1)-e/4|/(e/4) = {rel:.1e}; identity grid {}/{} bad", grid.violations, grid.samples),
    ))
}

fn martingale_check(engine: &Engine, corpus: &mut Corpus) -> Result<Verdict, String> {
    let out = scalar_martingale_suite(
        engine,
        SEED,
        10_000,
        0.99,
        Disturbance::unit_truncated_gaussian(1.0 / 3.0),
        1.0 / 3.0,
        100,
        1.0,
    )
    .map_err(|e| e.to_string())?;
    let containment = &out[5];
    corpus.exits += containment.samples;
    corpus.failures += containment.violations;
    Ok(summarize(&out[..5]))
}

/// The same checks with a standard normal truncated at ±1, whose variance
/// (0.291) exceeds σ² = 1/9. Reported, not scored.
fn martingale_standard_normal_info(engine: &Engine) {
    match scalar_martingale_suite(
        engine,
        SEED,
        10_000,
        0.99,
        Disturbance::unit_truncated_gaussian(1.0),
        1.0 / 3.0,
        100,
        1.0,
    ) {
        Ok(out) => println!("INFO martingale_machinery with N(0,1) truncated to [-1,1]: {}", summarize(&out[..5]).detail),
        Err(e) => println!("INFO martingale_machinery with N(0,1) truncated to [-1,1]: error {e}"),
    }
}

fn fig3_check(engine: &Engine, corpus: &mut Corpus) -> Result<Verdict, String> {
    let p = IssfCompareParams {
        horizons: vec![1, 100, 400],
        epsilon: Linspace::new(0.0, 95.0, 20),
        ..Default::default()
    };
    let (t, audit) = issf_compare("fig3", &p, 2000, SEED, engine).map_err(|e| e.to_string())?;
    corpus.exits += audit.exits;
    corpus.failures += audit.containment_failures;
    let mut dominance_bad = 0;
    let mut indicator_bad = 0;
    let mut not_ok = 0;
    for r in 0..t.len() {
        if t.get(r, "status").and_then(|c| c.as_str()) != Some("ok") {
            not_ok += 1;
        }
        if !(f64_col(&t, r, "ci_lo") <= f64_col(&t, r, "cor1_bound")) {
            dominance_bad += 1;
        }
        let k = i64_col(&t, r, "horizon") as u32;
        let eps = f64_col(&t, r, "epsilon");
        let want = i64::from(-eps >= floor_by_summation(p.alpha, p.delta, p.h0, k));
        if i64_col(&t, r, "issf_indicator") != want {
            indicator_bad += 1;
        }
    }
    Ok(verdict(
        t.len() == 3 * 20 * 3 && dominance_bad == 0 && indicator_bad == 0 && not_ok == 0,
        format!(
            "{} cells, ci_lo > bound in {dominance_bad}, indicator mismatches {indicator_bad}, failed cells {not_ok}, {} exits audited",
            t.len(),
            audit.exits
        ),
    ))
}

fn hlip_check(engine: &Engine, corpus: &mut Corpus) -> Result<Verdict, String> {
    let p = HlipCaseParams::default();
    let (t, _, audit) = hlip_case("hlip", &p, 500, SEED, engine).map_err(|e| e.to_string())?;
    corpus.exits += audit.exits;
    corpus.failures += audit.containment_failures;
    let mut exits_at_zero = 0;
    let mut dominance_bad = 0;
    let mut bound_mismatch = 0;
    let mut worst_violation = 0.0f64;
    let mut failures = 0;
    for r in 0..t.len() {
        let d = f64_col(&t, r, "d_max");
        let a = f64_col(&t, r, "alpha");
        let k = i64_col(&t, r, "horizon") as u32;
        let h0 = f64_col(&t, r, "h0");
        let bound = f64_col(&t, r, "thm3_bound");
        if d == 0.0 {
            exits_at_zero += i64_col(&t, r, "n_exits");
        } else {
            let (delta, s2) = hlip_delta_sigma(d).map_err(|e| e.to_string())?;
            let spec = SafetySpec::dtcbf(a, k, h0, delta, s2.sqrt()).map_err(|e| e.to_string())?;
            let want = freedman_bound(&spec).map_err(|e| e.to_string())?.clamped;
            if (want - bound).abs() > 1e-12 {
                bound_mismatch += 1;
            }
        }
        if !(f64_col(&t, r, "ci_lo") <= bound) {
            dominance_bad += 1;
        }
        worst_violation = worst_violation.max(f64_col(&t, r, "max_constraint_violation"));
        failures += i64_col(&t, r, "n_controller_failures");
    }
    Ok(verdict(
        t.len() == 6
            && exits_at_zero == 0
            && dominance_bad == 0
            && bound_mismatch == 0
            && worst_violation <= 1e-9,
        format!(
            "K = {}, exits at d_max=0: {exits_at_zero}, ci_lo > bound in {dominance_bad} cells, bound recomputation mismatches {bound_mismatch}, worst filter constraint violation {worst_violation:.1e}, controller failures {failures}",
            i64_col(&t, 0, "horizon")
        ),
    ))
}

fn run_cli(config: &Path, out: &Path, workers: &str) -> Result<(), String> {
    let mut stdout = Vec::new();
    let mut stderr = Vec::new();
    let rc = martingale_safety::cli::run(
        [
            "martingale-safety",
            "run",
            config.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ],
        &mut stdout,
        &mut stderr,
    );
    if rc == 0 {
        Ok(())
    } else {
        Err(format!("exit {rc}: {}", String::from_utf8_lossy(&stderr)))
    }
}

fn containment_from_outputs(dir: &Path, corpus: &mut Corpus) -> Result<(), String> {
    for (file, exits_col) in [("issf_compare.csv", "n_exits"), ("hlip_case.csv", "n_exits")] {
        let mut r = csv::Reader::from_path(dir.join(file)).map_err(|e| e.to_string())?;
        let h = r.headers().map_err(|e| e.to_string())?.clone();
        let fi = h.iter().position(|c| c == "containment_failures").ok_or("no column")?;
        let ei = h.iter().position(|c| c == exits_col).ok_or("no column")?;
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            corpus.failures += rec[fi].parse::<u64>().unwrap_or(0);
            corpus.exits += rec[ei].parse::<u64>().unwrap_or(0);
        }
    }
    let mut r = csv::Reader::from_path(dir.join("property_suite.csv")).map_err(|e| e.to_string())?;
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        if &rec[0] == "containment" {
            corpus.exits += rec[2].parse::<u64>().unwrap_or(0);
            corpus.failures += rec[3].parse::<u64>().unwrap_or(0);
        }
    }
    Ok(())
}

fn determinism_check(corpus: &mut Corpus) -> Result<Verdict, String> {
    let config = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    run_cli(&config, &a, "1")?;
    run_cli(&config, &b, "4")?;
    let mut names: Vec<String> = fs::read_dir(&a)
        .map_err(|e| e.to_string())?
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    let mut differing = Vec::new();
    for n in &names {
        if fs::read(a.join(n)).ok() != fs::read(b.join(n)).ok() {
            differing.push(n.clone());
        }
    }
    containment_from_outputs(&a, corpus)?;
    Ok(verdict(
        differing.is_empty() && names.len() >= 5,
        format!("{} files compared between 1 and 4 workers, differing: {differing:?}", names.len()),
    ))
}

fn main() {
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let engine = Engine::new(None).expect("thread pool");
    let mut corpus = Corpus::default();
    let mut s = Suite { results: Vec::new() };
    let secs = Duration::from_secs;

    s.run("kernel_identities", secs(1), kernel_identities_check);
    s.run("prop1_dominance", secs(5), || {
        let lambdas: Vec<f64> = Linspace::new(0.0, 10.0, 101).values();
        let sigmas: Vec<f64> = Linspace::new(0.01, 1.0, 100).values();
        Ok(summarize(&[
            prop1_dominance_grid(10.0, 100, 1.0, &lambdas, &sigmas),
            prop1_dominance_random(SEED, 10_000),
        ]))
    });
    s.run("derivative_factorization", secs(5), || Ok(summarize(&[derivative_factorization()])));
    s.run("mgf_lemma", secs(5), || {
        Ok(summarize(&[mgf_lemma(SEED, 10_000), optimal_gamma_consistency(SEED, 1_000)]))
    });
    s.run("martingale_machinery", secs(30), || martingale_check(&engine, &mut corpus));
    martingale_standard_normal_info(&engine);
    s.run("fig3_dominance", secs(180), || fig3_check(&engine, &mut corpus));
    s.run("ville_empirical", secs(60), || {
        ville_empirical(&engine, SEED, 5_000).map(|o| summarize(&[o])).map_err(|e| e.to_string())
    });
    s.run("hlip_desk_scale", secs(300), || hlip_check(&engine, &mut corpus));
    s.run("determinism", secs(300), || determinism_check(&mut corpus));
    s.run("lambert_w", secs(1), || Ok(summarize(&[lambert_checks(SEED)])));
    // last, so it covers every Monte Carlo run above
    s.run("containment_audit", secs(1), || {
        Ok(verdict(
            corpus.failures == 0 && corpus.exits > 0,
            format!("{} exiting trajectories, {} without max M >= lambda", corpus.exits, corpus.failures),
        ))
    });

    let failed: Vec<&str> = s.results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    println!("{} of {} criteria passed", s.results.len() - failed.len(), s.results.len());
    if !failed.is_empty() {
        println!("failed: {}", failed.join(", "));
        std::process::exit(1);
    }
}
