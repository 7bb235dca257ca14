// Query and gate scaling shapes for the four time-integration routes, with κ
// and ‖u(T)‖ measured on the default problem.

use kpp_carleman::harness::{estimate_resources, measured_resources, RunConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let e = measured_resources(&RunConfig::default())?;
    println!("κ = {:.3}, ‖u(T)‖ = {:.4e}", e.inputs.kappa, e.inputs.u_final_norm);
    println!("inner factor {:.3e}, queries {:.3e}, gates {:.3e}", e.inner_factor, e.query_count, e.gate_count);
    println!("note: {}", e.label);
    for r in &e.rows {
        println!("  {:<9} {:<12} leading {:.3e} total {:.3e}", r.method, r.time_shape, r.leading, r.total);
    }
    let twice = estimate_resources(&e.inputs.with_horizon(2.0 * e.inputs.horizon))?;
    println!("at 2T the inner factor is {:.3}×", twice.inner_factor / e.inner_factor);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
