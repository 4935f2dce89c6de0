//! Constants of the argument, the multiscale ladder and how far it is from
//! the rigorous thresholds.

use cdperc::bounds::{self, constants};
use cdperc::renorm::{induction_rhs, scale_plan};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let table = constants(2, None)?;
    println!("{}", serde_json::to_string_pretty(&table)?);
    println!(
        "root limit at n = 1e5: {:.5} (target {:.5})",
        bounds::root_limit(100_000)?,
        bounds::root_limit_target(table.s)
    );

    let plan = scale_plan(25, 4, None)?;
    for row in &plan.conditions {
        let step = induction_rhs(row.l, (row.l as f64).powi(-4), table.c3, table.psi)?;
        println!(
            "L = {:>6}: C-1 {:<5} C-2 {:<5} C-3 {:<5}  next scale ln rhs {:>10.2} vs ln target {:>8.2}",
            row.l,
            row.c1,
            row.c2,
            row.c3,
            step.ln_rhs,
            step.target.ln()
        );
    }
    println!(
        "smallest scales meeting each condition: C-1 {}, C-2 {}, C-3 {}",
        plan.minimal.c1, plan.minimal.c2, plan.minimal.c3
    );
    Ok(())
}
