//! Ville and Freedman bounds for the same DTCBF as the horizon grows.
//!
//!     cargo run --example bound_eval [alpha] [h0] [sigma]

use martingale_safety::bounds::{freedman_bound, lambda_threshold, ville_bound, SafetySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>());
    let alpha = args.next().transpose()?.unwrap_or(0.99);
    let h0 = args.next().transpose()?.unwrap_or(5.0);
    let sigma = args.next().transpose()?.unwrap_or(0.2);
    let (delta, b) = (1.0, 10.0);

    println!("alpha = {alpha}, h0 = {h0}, delta = {delta}, sigma = {sigma}, B = {b}");
    println!("{:>5} {:>10} {:>10} {:>10}", "K", "lambda", "ville", "freedman");
    for k in [1, 10, 25, 50, 100, 200, 400] {
        let spec = SafetySpec::dtcbf(alpha, k, h0, delta, sigma)?.with_upper_bound(b)?;
        let v = ville_bound(&spec)?;
        let f = freedman_bound(&spec)?;
        let mark = |vac: bool| if vac { "*" } else { " " };
        println!(
            "{k:>5} {:>10.4} {:>9.4}{} {:>9.4}{}",
            lambda_threshold(&spec),
            v.clamped,
            mark(v.vacuous),
            f.clamped,
            mark(f.vacuous)
        );
    }
    println!("* vacuous (raw bound >= 1)");
    Ok(())
}
