//! Probability of a closed dual path across the annulus B*_{2N} \ B*_N.

use cdperc::environment::ConstraintLaw;
use cdperc::renorm::estimate_pstar;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for rho in [[0.0, 0.0, 1.0, 0.0], [0.0, 0.0, 0.0, 1.0]] {
        let law = ConstraintLaw::new(&rho)?;
        println!("rho = {rho:?}, t = 1");
        for n_box in [2u32, 4, 8] {
            let est = estimate_pstar(5, &law, 1.0, n_box, None, 1000)?;
            println!(
                "  N = {n_box:>2}  pad {:>2}: P* = {:.4} ± {:.4}   doubled pad shift {:+.4} ± {:.4} ({})",
                est.pad,
                est.estimate.p_hat,
                est.estimate.se,
                est.pad_check.shift,
                est.pad_check.se,
                if est.pad_check.consistent() { "consistent" } else { "INCONSISTENT" }
            );
        }
    }
    Ok(())
}
