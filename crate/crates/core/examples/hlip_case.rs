//! Filtered HLIP walk past an obstacle: empirical exit frequencies against
//! the Freedman bound over a `(d_max, α)` grid.
//!
//!     cargo run --release --example hlip_case [trials] [out.csv]

use martingale_safety::experiments::{hlip_case, HlipCaseParams};
use martingale_safety::montecarlo::Engine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map(|s| s.parse()).transpose()?.unwrap_or(500);
    let out = args.next();
    let params = HlipCaseParams::default();
    let engine = Engine::new(None)?;
    let started = std::time::Instant::now();
    let (table, paths, audit) = hlip_case("hlip_case", &params, trials, 11, &engine)?;

    println!(
        "{:>5} {:>5} {:>3} {:>7} {:>8} {:>8} {:>8} {:>6} {:>10}",
        "d_max", "alpha", "K", "h0", "bound", "p_hat", "ci_hi", "first", "max_viol"
    );
    for row in 0..table.len() {
        let f = |c: &str| table.get(row, c).and_then(|v| v.as_f64());
        println!(
            "{:>5} {:>5} {:>3} {:>7.3} {:>8.4} {:>8.4} {:>8.4} {:>6} {:>10.2e}",
            f("d_max").unwrap_or(f64::NAN),
            f("alpha").unwrap_or(f64::NAN),
            f("horizon").unwrap_or(f64::NAN),
            f("h0").unwrap_or(f64::NAN),
            f("thm3_bound").unwrap_or(f64::NAN),
            f("p_hat").unwrap_or(f64::NAN),
            f("ci_hi").unwrap_or(f64::NAN),
            f("worst_case_first_violation").map_or("-".into(), |k| k.to_string()),
            f("max_constraint_violation").unwrap_or(f64::NAN),
        );
    }
    println!(
        "{} retained path points, {} containment failures over {} audited trials ({:.1?})",
        paths.len(),
        audit.containment_failures,
        audit.audited,
        started.elapsed()
    );
    if let Some(path) = out {
        paths.write_csv(std::fs::File::create(path)?)?;
    }
    Ok(())
}
