//! Where does Freedman beat Ville? Coarse text map of the default
//! (lambda, sigma) grid with B = 10, K = 100, delta = 1.
//!
//!     cargo run --example bound_grid [out.csv]

use martingale_safety::experiments::{bound_grid, BoundGridParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let params = BoundGridParams::default();
    let table = bound_grid("bound_grid", &params)?;
    let lambdas = params.lambda.values();
    let sigmas = params.sigma.values();

    // '+' both conditions hold, '.' Freedman tighter anyway, 'v' Ville tighter
    println!("sigma \\ lambda 0 .. 10");
    for j in (0..sigmas.len()).step_by(9).rev() {
        let mut line = String::new();
        for i in (0..lambdas.len()).step_by(2) {
            let row = i * sigmas.len() + j;
            let get = |c: &str| table.get(row, c).cloned();
            let both = get("cond1").and_then(|v| v.as_bool()).unwrap_or(false)
                && get("cond2").and_then(|v| v.as_bool()).unwrap_or(false);
            let gap = get("gap").and_then(|v| v.as_f64()).unwrap_or(f64::NAN);
            line.push(if both {
                '+'
            } else if gap >= 0.0 {
                '.'
            } else {
                'v'
            });
        }
        println!("{:>5.2} {line}", sigmas[j]);
    }
    let tighter = (0..table.len())
        .filter(|&r| table.get(r, "gap").and_then(|v| v.as_f64()).is_some_and(|g| g > 0.0))
        .count();
    println!("Freedman strictly tighter in {tighter} of {} cells", table.len());

    if let Some(path) = std::env::args().nth(1) {
        table.write_csv(std::fs::File::create(&path)?)?;
        println!("wrote {path}");
    }
    Ok(())
}
