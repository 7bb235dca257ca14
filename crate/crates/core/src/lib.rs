pub mod error;
pub mod linalg;
pub mod pde;
pub mod carleman;
pub mod spectrum;
pub mod solvers;
pub mod harness;
