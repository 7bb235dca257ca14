// Checks the no-resonance condition for the standard `(n, N)` pairs at
// `D = 0.2`, `a = 0.4` and prints the smallest gap for each.

use kpp_carleman::harness::{no_resonance_table, NO_RESONANCE_PAIRS};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rows = no_resonance_table(0.2, 0.4, &NO_RESONANCE_PAIRS)?;
    println!("{:>3} {:>3} {:>6} {:>12}", "n", "N", "holds", "min gap");
    for r in &rows {
        println!("{:>3} {:>3} {:>6} {:>12.4e}", r.n, r.order, r.holds, r.min_gap);
    }
    if rows.iter().any(|r| !r.holds) {
        return Err("resonance found".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
