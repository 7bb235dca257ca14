// A cubic nonlinearity `u' = F1 u + F3 u⊗u⊗u`: the Carleman blocks couple
// `j` to `j+2`, and the spectrum is the same as for the quadratic system.

use kpp_carleman::carleman::{build_general_degree, CarlemanSystem};
use kpp_carleman::linalg::SparseMatrix;
use kpp_carleman::pde::{discretize, FisherKppProblem};
use kpp_carleman::spectrum::iterative_diagonalize;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let n = 3;
    let order = 4;
    let problem = FisherKppProblem::desk();
    let ode = discretize(&problem, n)?;
    let f3 = SparseMatrix::from_triplets(n, n * n * n, (0..n).map(|j| (j, j * n * n + j * n + j, -1.0)).collect())?;
    let cubic = build_general_degree(&ode.f1, ode.eigen.clone(), &f3, 3, order, ode.norm_f1, 1.0)?;
    let quad = CarlemanSystem::build(&ode, order)?;
    for b in &cubic.off_blocks {
        println!("block {} -> {} ({}×{})", b.row, b.col, b.matrix.rows(), b.matrix.cols());
    }
    let dc = iterative_diagonalize(&cubic)?;
    let dq = iterative_diagonalize(&quad)?;
    println!("dim {} residual {:.1e} κ {:.3}", dc.dim(), dc.residual, dc.kappa_direct.unwrap_or(f64::NAN));
    println!("spectra identical: {}", dc.lambda == dq.lambda);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
