//! Survival function of the influence radius of a vertex, with its log-linear fit.

use cdperc::bounds;
use cdperc::influence::radius_tail;
use cdperc::lattice::Point;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tail = radius_tail(11, Point::xy(0, 0), 30, 20_000)?;
    println!(
        "{:>3} {:>9} {:>12} {:>12}",
        "r", "survivors", "P(rad > r)", "bound"
    );
    for row in tail.rows.iter().take(16) {
        println!(
            "{:>3} {:>9} {:>12.3e} {:>12.3e}",
            row.r, row.survivors, row.survival, row.bound
        );
    }
    if let Some((_, slope)) = tail.fit {
        println!(
            "fitted slope {slope:.4} over {:?}; required ≤ {:.4}",
            tail.fit_range,
            -4.0 * bounds::psi(2)
        );
    }
    println!(
        "mean |I_1(v)| = {:.2}, {} samples clipped by the window",
        tail.mean_size, tail.clipped
    );
    Ok(())
}
