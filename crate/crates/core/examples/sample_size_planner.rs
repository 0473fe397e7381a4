//! Plans the Monte-Carlo sample count for a target accuracy and shows how it
//! scales with the accuracy and the score constants.

use pfdist::pfd::hoeffding_halfwidth;
use pfdist::{gronwall_gap_bound, sample_size_bound, LipschitzProfile};

fn main() -> pfdist::Result<()> {
    let eta = 0.05;
    for (l, eps) in [(0.5, 0.1), (1.0, 0.1), (1.0, 0.5), (2.0, 0.5)] {
        let prof = LipschitzProfile::new(l, eps, 0.05, 1.0)?;
        let kappa = gronwall_gap_bound(&prof);
        print!("L={l:<4} eps={eps:<4} kappa={kappa:.4}  M:");
        for gamma in [0.2, 0.1, 0.05] {
            let m = sample_size_bound(&prof, gamma, eta)?;
            print!("  gamma={gamma} -> {m}");
            debug_assert!(hoeffding_halfwidth(kappa, m as usize, eta) <= gamma);
        }
        println!();
    }
    Ok(())
}
