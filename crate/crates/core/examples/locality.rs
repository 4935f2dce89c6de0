//! Resampling everything outside B_{r+1}(Λ) never changes the edges of Λ
//! once the influence set of Λ stays within distance r.

use cdperc::environment::ConstraintLaw;
use cdperc::influence::locality_batch;
use cdperc::lattice::{Point, VertexSet};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let law = ConstraintLaw::new(&[0.0, 0.0, 0.5, 0.5])?;
    let square: VertexSet = [(0, 0), (1, 0), (0, 1), (1, 1)]
        .into_iter()
        .map(|(x, y)| Point::xy(x, y))
        .collect();
    for (t, r) in [(0.3, 2), (0.8, 6), (1.0, 10)] {
        let b = locality_batch(9, &law, &square, t, r, 500)?;
        println!(
            "t = {t}, r = {r:>2}: {:>3} applicable, {:>3} pass, {} fail, {:>3} not applicable",
            b.passes + b.fails,
            b.passes,
            b.fails,
            b.not_applicable
        );
    }
    Ok(())
}
