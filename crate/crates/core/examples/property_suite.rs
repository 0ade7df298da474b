//! Run every executable invariant and print one line per property.
//!
//!     cargo run --release --example property_suite [seed]

use martingale_safety::experiments::{property_suite, PropertySuiteParams};
use martingale_safety::montecarlo::Engine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2024);
    let engine = Engine::new(None)?;
    let started = std::time::Instant::now();
    let outcomes = property_suite(&PropertySuiteParams::default(), seed, &engine)?;
    let mut failed = 0;
    for o in &outcomes {
        println!(
            "{:<32} {:<4} samples={:<9} violations={:<5} worst_margin={:.3e}",
            o.name,
            if o.passed() { "ok" } else { "FAIL" },
            o.samples,
            o.violations,
            o.worst_margin
        );
        failed += usize::from(!o.passed());
    }
    eprintln!("{} properties, {failed} failed, {:.1?}", outcomes.len(), started.elapsed());
    if failed > 0 {
        std::process::exit(1);
    }
    Ok(())
}
