//! Left–right crossing curves for several box sizes and where they intersect.
//!
//! `cargo run --release --example crossing_curves -- 500` sets the replicate count.

use cdperc::environment::ConstraintLaw;
use cdperc::renorm::{crossing_curve, crossing_times, curve_intersection};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n: u64 = std::env::args().nth(1).map_or(Ok(500), |s| s.parse())?;
    let law = ConstraintLaw::new(&[0.0, 0.0, 0.5, 0.5])?;
    let grid: Vec<f64> = (0..=40).map(|i| 0.6 + 0.005 * f64::from(i)).collect();
    let sizes = [16u32, 32, 64];
    let curves: Vec<Vec<f64>> = sizes
        .iter()
        .map(|&l| {
            let times = crossing_times(3, &law, l, n)?;
            Ok(crossing_curve(&times, &grid)
                .iter()
                .map(|e| e.p_hat)
                .collect())
        })
        .collect::<Result<_, cdperc::error::Error>>()?;
    println!(
        "{:>6} {}",
        "t",
        sizes.map(|l| format!("{:>8}", format!("L={l}"))).join("")
    );
    for (i, t) in grid.iter().enumerate().step_by(4) {
        println!(
            "{t:>6.3} {}",
            curves
                .iter()
                .map(|c| format!("{:>8.3}", c[i]))
                .collect::<String>()
        );
    }
    for (a, b) in [(0, 1), (0, 2), (1, 2)] {
        let x = curve_intersection(&grid, &curves[a], &curves[b]);
        println!(
            "L={} vs L={}: curves cross near t = {x:.3?}",
            sizes[a], sizes[b]
        );
    }
    Ok(())
}
