// Propagates the lifted state with a Chebyshev expansion of `e^{At}` in the
// eigenbasis and compares the first block with an adaptive Runge-Kutta solve.

use kpp_carleman::harness::{prepare, GammaPolicy};
use kpp_carleman::linalg::distance;
use kpp_carleman::pde::FisherKppProblem;
use kpp_carleman::solvers::{propagate_matexp, solve_reference, truncation_order, Dopri5Options};
use kpp_carleman::spectrum::iterative_diagonalize;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let problem = FisherKppProblem::desk();
    let n = 8;
    let prep = prepare(&problem, n, 3, GammaPolicy::Auto)?;
    let diag = iterative_diagonalize(&prep.system)?;
    let y0 = prep.y_in();
    let times = [0.5, 1.0, 2.0, 3.0];
    let reference = solve_reference(&prep.ode, problem.horizon, &times, &Dopri5Options::default())?;

    for eps in [1e-4, 1e-8] {
        println!("ε = {eps:.0e}, order for t=1: {}", truncation_order(1.0, eps)?.order);
        for (t, u) in times.iter().zip(&reference.states) {
            let r = propagate_matexp(&diag, &y0, *t, eps)?;
            let u_c: Vec<f64> = r.y[..n].iter().map(|v| prep.gamma() * v).collect();
            println!("  t={t:<4} order={:<3} error={:.3e}", r.order, distance(&u_c, u));
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
