// Forward Euler and truncated-Taylor stepping of the Carleman system for
// truncation orders 1..3, compared with the nonlinear reference.

use kpp_carleman::harness::{sweep, Scenario, SweepParam};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for scenario in [Scenario::EulerFigure, Scenario::TaylorFigure] {
        let config = scenario.config();
        println!("{} ({} steps)", scenario.name(), config.solver.steps);
        for p in sweep(&config, SweepParam::Order, &[1, 2, 3])? {
            println!("  N={} max error {:.3e}", p.value, p.max_error);
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
