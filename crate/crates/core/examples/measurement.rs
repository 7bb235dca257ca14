// Success probability of reading out the first Carleman block at the final
// time, and the amplification rounds it implies.

use kpp_carleman::harness::RunConfig;
use kpp_carleman::solvers::SolverKind;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    for horizon in [1.0, 3.0] {
        let mut config = RunConfig::default();
        config.problem.horizon = horizon;
        config.solver.kind = SolverKind::Matexp;
        let report = kpp_carleman::harness::simulate(&config)?;
        let m = &report.measurement;
        println!(
            "T={horizon}: ‖y1‖={:.4e} ‖y‖={:.4e} p={:.6} rounds={} bound holds={:?}",
            m.y1_norm, m.y_norm, m.probability, m.rounds, m.bound_ok
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
