//! The lower Lambert-W branch and the zero of `Psi_phi(B) = 1/B - e^{(B-1)phi}`
//! that marks where the Ville comparison switches.
//!
//!     cargo run --example lambert

use martingale_safety::bounds::{lambert_w_minus1, psi, psi_threshold, PHI};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!("{:>10} {:>14} {:>10}", "x", "W_-1(x)", "residual");
    for x in [-(-1.0f64).exp(), -0.3, -0.1, -1e-3, -1e-10] {
        let w = lambert_w_minus1(x)?;
        println!("{x:>10.4e} {w:>14.9} {:>10.1e}", w * w.exp() - x);
    }
    for phi in [-PHI, -0.5, -1.0, -2.0] {
        let b0 = psi_threshold(phi)?;
        println!(
            "phi = {phi:.4}: Psi vanishes at B = {b0:.6}; Psi(B+1) = {:.4}",
            psi(phi, b0 + 1.0)
        );
    }
    Ok(())
}
