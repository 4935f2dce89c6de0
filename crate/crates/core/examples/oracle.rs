//! Exact event probabilities on tiny graphs against Monte Carlo.
//!
//! Run with `cargo run --example oracle`.

use cdperc::oracle::{
    builtin_cases, exact_event_probability, exact_event_probability_rational, TinyInstance,
};
use num_rational::Ratio;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    println!(
        "{:<14} {:<20} {:>5} {:>10} {:>10} {:>9}",
        "graph", "event", "t", "exact", "mc", "se"
    );
    for (i, case) in builtin_cases().iter().enumerate() {
        let t = 0.5;
        let exact = case.exact(t)?;
        let mc = case.monte_carlo(t, i as u64, 20_000)?;
        println!(
            "{:<14} {:<20} {t:>5} {exact:>10.6} {:>10.6} {:>9.2e}",
            case.name, case.event_label, mc.p_hat, mc.se
        );
    }

    // The same text format the CLI reads with `oracle --graph`.
    let inst = TinyInstance::parse("vertices 3\nedge 0 1\nedge 1 2\nkappa 3 1 3\n")?;
    let first = |s: &[bool]| s[0];
    let p = exact_event_probability_rational(&inst.graph, &inst.kappa, Ratio::new(1, 2), &first)?;
    let f = exact_event_probability(&inst.graph, &inst.kappa, 0.5, &first)?;
    println!("\npath with middle constraint 1: P(first edge open at t = 1/2) = {p} = {f}");
    Ok(())
}
