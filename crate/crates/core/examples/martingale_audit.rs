//! Build the candidate supermartingale along one scalar trajectory, split it
//! into martingale and predictable parts, and check the event containment.
//!
//!     cargo run --example martingale_audit [seed]

use martingale_safety::dynamics::{Disturbance, ScalarLinearSystem, StochasticSystem};
use martingale_safety::martingale::{build_candidate, containment_witness, doob_decompose};
use martingale_safety::montecarlo::trial_rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(3);
    let (alpha, delta, horizon, h0) = (0.95, 1.0, 40, 1.0);
    let sys = ScalarLinearSystem::new(alpha, Disturbance::skewed_two_point())?;
    let mut rng = trial_rng(seed, 0);

    let mut x = h0;
    let mut eta = vec![sys.barrier(&x) / delta];
    let (mut means, mut vars) = (Vec::new(), Vec::new());
    for _ in 0..horizon {
        let t = sys.transition(&x, &mut rng)?;
        means.push(t.cond_mean_h / delta);
        vars.push(t.cond_var_h / (delta * delta));
        x = t.next;
        eta.push(sys.barrier(&x) / delta);
    }

    let trace = build_candidate(&eta, &means, &vars, alpha, 0.0, delta)?;
    let parts = doob_decompose(&trace);
    let lambda = alpha.powi(horizon) * h0 / delta;
    let h: Vec<f64> = eta.iter().map(|e| e * delta).collect();
    let witness = containment_witness(&h, &parts, lambda)?;

    println!("{:>3} {:>9} {:>9} {:>9} {:>9}", "k", "h", "W", "M", "A");
    for k in (0..=horizon as usize).step_by(4) {
        println!(
            "{k:>3} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            h[k], trace.values()[k], parts.martingale[k], parts.predictable[k]
        );
    }
    println!("max predictable increment {:.2e}", parts.max_predictable_increment());
    println!("max martingale difference {:.4} (must stay <= 1)", parts.max_martingale_difference());
    println!("<M>_K = {:.4}", parts.pqv()?.last());
    println!("reconstruction error {:.1e}", parts.reconstruction_error(&trace));
    println!(
        "exited: {}, max M - lambda = {:.4}, containment holds: {}",
        witness.exited,
        witness.margin,
        witness.holds()
    );
    Ok(())
}
