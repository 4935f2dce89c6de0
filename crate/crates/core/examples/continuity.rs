//! One shared (X, U) draw per replicate across a (ρ, t) grid: neighbouring
//! cells rarely disagree, which is how continuity in (ρ, t) shows up.

use cdperc::dynamics::LocalEvent;
use cdperc::environment::{coupled_event_grid, ConstraintLaw, GridCell};
use cdperc::lattice::{Edge, Point, Window};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let e = Edge::new(Point::xy(0, 0), 0);
    let window = Window::cube(Point::xy(0, 0), 20);
    let cells: Vec<GridCell> = (0..=10)
        .map(|i| {
            let lam = f64::from(i) / 10.0;
            let law = ConstraintLaw::new(&[0.0, 0.0, 1.0 - lam, lam]).expect("valid law");
            GridCell { law, t: 0.8 }
        })
        .collect();
    let grid = coupled_event_grid(4, &window, &cells, &LocalEvent::edge_open(e), 5000, 19)?;
    for (i, cell) in cells.iter().enumerate() {
        let flip = grid
            .flip_rates
            .get(i)
            .map_or(String::new(), |f| format!("{f:.4}"));
        println!(
            "rho3 = {:.1}: P(open) = {:.4}   flip to next {flip}",
            cell.law.rho()[3],
            grid.means[i]
        );
    }
    Ok(())
}
