//! Sample an environment, run the dynamics once and read off every time slice.

use cdperc::dynamics::{evolve, CausalEvaluator};
use cdperc::environment::{ConstraintLaw, EnvironmentField, LazyEnvironment, SeedSpec};
use cdperc::lattice::{Edge, Point, Window};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let law = ConstraintLaw::new(&[0.0, 0.0, 0.5, 0.5])?;
    let window = Window::cube(Point::xy(0, 0), 50);
    let seed = SeedSpec::new(7, 0);
    let env = EnvironmentField::sample(&seed, &window, &law);
    let traj = evolve(&env);
    let edges = window.edges().count();
    println!(
        "window of {} vertices, {edges} edges",
        window.vertex_count()
    );
    for t in [0.25, 0.5, 0.75, 1.0] {
        let cfg = traj.config_at(t)?;
        let open = cfg.open_count();
        println!(
            "t = {t:.2}: {open:>6} open ({:.3} of edges, Bernoulli would give {t:.3})",
            open as f64 / edges as f64
        );
    }

    // A single edge resolved by recursing only into earlier neighbouring clocks.
    let lazy = LazyEnvironment::new(&seed, &window, &law);
    let mut causal = CausalEvaluator::new(&lazy);
    let e = Edge::new(Point::xy(0, 0), 0);
    let open = causal.is_open_at(&e, 1.0);
    println!(
        "edge {e} open at t = 1: {open} (resolved {} edges causally)",
        causal.resolved()
    );
    assert_eq!(open, traj.config_at(1.0)?.is_open(&e));
    Ok(())
}
