// Chebyshev collocation on the diagonalized system, with and without the
// quadratic term, against the closed-form linear solution.

use kpp_carleman::carleman::CarlemanSystem;
use kpp_carleman::linalg::norm2;
use kpp_carleman::pde::{discretize, FisherKppProblem};
use kpp_carleman::solvers::{
    collocation_error_bound, default_intervals, solve_collocation, solve_reference, uniform_grid,
    CollocationOptions, Dopri5Options,
};
use kpp_carleman::spectrum::iterative_diagonalize;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 8;
    for b in [0.0, -1.0] {
        let problem = FisherKppProblem::desk().with_quadratic(b);
        let ode = discretize(&problem, n)?;
        let sys = CarlemanSystem::build(&ode, 3)?;
        let diag = iterative_diagonalize(&sys)?;
        let y0 = sys.lift(&ode.u_in);
        let grid = uniform_grid(problem.horizon, 30);
        let reference = solve_reference(&ode, problem.horizon, &grid, &Dopri5Options::default())?;
        for order in [4, 8, 12] {
            let opts = CollocationOptions { order, intervals: None };
            let traj = solve_collocation(&diag, sys.norm_bound(), &y0, problem.horizon, &grid, &opts)?;
            let m = default_intervals(sys.norm_bound(), problem.horizon);
            let bound = collocation_error_bound(m, diag.kappa_direct.unwrap_or(1.0), norm2(&y0), order);
            println!(
                "b={b:<4} r={order:<3} intervals={m:<4} error={:.3e} a-priori={bound:.1e}",
                traj.max_error_against(&reference, n)
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
