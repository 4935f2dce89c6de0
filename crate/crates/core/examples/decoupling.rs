//! Covariance of "edge open" events at growing separation.

use cdperc::dynamics::LocalEvent;
use cdperc::environment::ConstraintLaw;
use cdperc::influence::decoupling_estimate;
use cdperc::lattice::{Edge, Point, VertexSet};

fn endpoints(e: &Edge) -> VertexSet {
    let (u, v) = e.endpoints();
    [u, v].into_iter().collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let law = ConstraintLaw::new(&[0.0, 0.0, 0.5, 0.5])?;
    let a = Edge::new(Point::xy(0, 0), 0);
    for delta in [1, 2, 5, 10] {
        let b = Edge::new(Point::xy(1 + delta, 0), 0);
        let r = decoupling_estimate(
            2,
            &law,
            0.8,
            &endpoints(&a),
            &endpoints(&b),
            &LocalEvent::edge_open(a),
            &LocalEvent::edge_open(b),
            20_000,
            20,
        )?;
        println!(
            "δ = {:>2}: cov = {:+.2e} ± {:.1e}   bound {:.2e}",
            r.separation, r.cov_hat, r.se, r.bound
        );
    }
    Ok(())
}
