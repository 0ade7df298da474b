//! ε-expanded exit probabilities of the scalar model `x⁺ = 0.99x + d`
//! against the tightened Freedman bound and the almost-sure ISSf indicator.
//!
//!     cargo run --release --example issf_compare [trials]

use martingale_safety::experiments::{issf_compare, IssfCompareParams};
use martingale_safety::montecarlo::Engine;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let trials = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(2000);
    let params = IssfCompareParams {
        horizons: vec![1, 100, 400],
        ..IssfCompareParams::default()
    };
    let engine = Engine::new(None)?;
    let started = std::time::Instant::now();
    let (table, audit) = issf_compare("issf_compare", &params, trials, 7, &engine)?;

    println!("{:>4} {:>5} {:<18} {:>9} {:>5} {:>8} {:>8}", "K", "eps", "distribution", "cor1", "issf", "p_hat", "ci_lo");
    let mut dominated = 0;
    for row in 0..table.len() {
        let f = |c: &str| table.get(row, c).and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
        let bound = f("cor1_bound");
        dominated += usize::from(f("ci_lo") <= bound);
        let eps = f("epsilon");
        // print a few ε values per horizon
        if eps == 0.0 || eps == 5.0 || eps == 30.0 || eps == 90.0 {
            println!(
                "{:>4} {:>5} {:<18} {:>9.4} {:>5} {:>8.4} {:>8.4}",
                f("horizon"),
                eps,
                table.get(row, "distribution").and_then(|v| v.as_str()).unwrap_or("?"),
                bound,
                f("issf_indicator"),
                f("p_hat"),
                f("ci_lo"),
            );
        }
    }
    println!(
        "{dominated}/{} cells with ci_lo <= bound; {} exits audited, {} containment failures ({:.1?})",
        table.len(),
        audit.exits,
        audit.containment_failures,
        started.elapsed()
    );
    Ok(())
}
