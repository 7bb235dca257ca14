//! Configuration, experiment drivers, error bounds, cost estimates and
//! CSV/SVG output.

mod bounds;
mod config;
mod estimate;
mod experiment;
mod output;

pub use bounds::{
    bound_carleman_truncation, bound_discretization, bound_euler, bound_taylor, taylor_order_for,
    ErrorBudget, EulerBound,
};
pub use config::{
    default_output_dir, CarlemanConfig, GammaPolicy, OutputConfig, RunConfig, SolverConfig,
    OUTPUT_DIR_ENV,
};
pub use estimate::{estimate_resources, ResourceEstimate, ResourceParams, ScalingRow, POLYLOG_LABEL};
pub use experiment::{
    diagonalize_with_retry, measured_resources, no_resonance_csv, no_resonance_table, prepare,
    run_carleman, run_experiment, simulate, simulate_prepared, sweep, sweep_table, Artifacts,
    NoResonanceRow, Prepared, Scenario, SimulationReport, SweepParam, SweepPoint,
    NO_RESONANCE_PAIRS,
};
pub use output::{diagnostics_table, fmt_f64, trajectory_table, LinePlot, Series, Table};
