//! Rare crossing probabilities by fixed-level splitting, checked against
//! direct sampling where the latter still resolves them.

use cdperc::environment::ConstraintLaw;
use cdperc::rare::{splitting_estimate, CrossingSpan, SplittingParams};
use cdperc::renorm::crossing_probability;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let law = ConstraintLaw::point_mass(2, 2)?;
    let params = SplittingParams::default();
    for l in [12u32, 16, 24, 32] {
        let split = splitting_estimate(8, &CrossingSpan::new(&law, 1.0, l)?, &params)?;
        let direct = crossing_probability(8, &law, 1.0, l, 4000)?;
        println!(
            "L = {l:>2}: splitting {:.3e} ± {:.1e} ({} levels, acceptance {:.2})   direct {:.3e} ± {:.1e}",
            split.mean,
            split.se,
            split.levels.len(),
            split.acceptance,
            direct.p_hat,
            direct.se
        );
    }
    Ok(())
}
