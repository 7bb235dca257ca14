use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::bounds::{bound_carleman_truncation, bound_discretization, bound_euler, bound_taylor, ErrorBudget};
use super::config::{GammaPolicy, RunConfig};
use super::estimate::{estimate_resources, ResourceEstimate, ResourceParams};
use super::output::{diagnostics_table, fmt_f64, trajectory_table, LinePlot, Series, Table};
use crate::carleman::CarlemanSystem;
use crate::error::{Error, Result};
use crate::linalg::{distance, norm2};
use crate::pde::{compute_r, discretize, f1_spectrum, rescale, FisherKppProblem, QuadraticOde, RescaleInfo};
use crate::solvers::{
    collocation_error_bound, default_intervals, measurement_report, propagate_matexp,
    propagate_matexp_stepped, solve_collocation, solve_euler, solve_reference, solve_taylor,
    uniform_grid, CollocationOptions, Dopri5Options, MeasurementReport, Recording, SolverKind,
    Trajectory,
};
use crate::spectrum::{
    check_no_resonance, iterative_diagonalize_with, Diagonalization, DiagonalizeOptions,
    DEFAULT_RESONANCE_TOLERANCE,
};

/// The `(n, N)` pairs of the published no-resonance table (D = 0.2, a = 0.4).
pub const NO_RESONANCE_PAIRS: [(usize, usize); 7] = [(4, 5), (8, 3), (8, 4), (8, 5), (16, 3), (16, 4), (32, 3)];

/// Discretized problem, its rescaled copy and the Carleman system built from the latter.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub problem: FisherKppProblem,
    pub n: usize,
    pub ode: QuadraticOde,
    pub scaled: QuadraticOde,
    pub rescale: RescaleInfo,
    pub system: CarlemanSystem,
}

impl Prepared {
    pub fn gamma(&self) -> f64 {
        self.rescale.gamma
    }

    /// Lifted initial state in rescaled coordinates.
    pub fn y_in(&self) -> Vec<f64> {
        self.system.lift(&self.scaled.u_in)
    }
}

pub fn prepare(problem: &FisherKppProblem, n: usize, order: usize, gamma: GammaPolicy) -> Result<Prepared> {
    let ode = discretize(problem, n).map_err(|e| e.at("discretize"))?;
    let g = match gamma {
        GammaPolicy::Auto if compute_r(&ode)? == 0.0 => Some(1.0),
        other => other.value(),
    };
    let (scaled, info) = rescale(&ode, g).map_err(|e| e.at("rescale"))?;
    let system = CarlemanSystem::build(&scaled, order).map_err(|e| e.at("carleman"))?;
    Ok(Prepared {
        problem: problem.clone(),
        n,
        ode,
        scaled,
        rescale: info,
        system,
    })
}

/// Prepares and diagonalizes; a resonance failure is retried with `n + 1`
/// grid points up to `retries` times.
pub fn diagonalize_with_retry(
    problem: &FisherKppProblem,
    n: usize,
    order: usize,
    gamma: GammaPolicy,
    retries: usize,
    options: &DiagonalizeOptions,
) -> Result<(Prepared, Diagonalization)> {
    let mut n = n;
    for attempt in 0..=retries {
        let prep = prepare(problem, n, order, gamma)?;
        match iterative_diagonalize_with(&prep.system, options) {
            Ok(d) => return Ok((prep, d)),
            Err(Error::Resonance { .. }) if attempt < retries => n += 1,
            Err(e) => return Err(e.at("diagonalize")),
        }
    }
    unreachable!("loop returns on its last attempt")
}

fn recording_every(steps: usize, samples: usize) -> Recording {
    Recording::history().every((steps / samples.max(1)).max(1))
}

/// Runs the configured Carleman propagator and returns full lifted states (rescaled coordinates).
pub fn run_carleman(config: &RunConfig, prep: &Prepared, diag: Option<&Diagonalization>) -> Result<Trajectory> {
    let s = &config.solver;
    let horizon = config.problem.horizon;
    let y0 = prep.y_in();
    let need_diag = || diag.ok_or(Error::Precondition("solver needs a diagonalization".into()));
    let traj = match s.kind {
        SolverKind::Euler => solve_euler(&prep.system, &y0, s.steps, horizon, recording_every(s.steps, s.samples)),
        SolverKind::Taylor => solve_taylor(
            &prep.system,
            &y0,
            s.taylor_order,
            s.steps,
            horizon,
            recording_every(s.steps, s.samples),
        ),
        SolverKind::Matexp if s.chebyshev_order > 0 => propagate_matexp_stepped(
            need_diag()?,
            &y0,
            horizon,
            s.steps,
            s.chebyshev_order,
            recording_every(s.steps, s.samples),
        ),
        SolverKind::Matexp => {
            let d = need_diag()?;
            let mut tr = Trajectory::new(SolverKind::Matexp);
            for t in uniform_grid(horizon, s.samples) {
                tr.push(t, propagate_matexp(d, &y0, t, s.eps)?.y);
            }
            Ok(tr)
        }
        SolverKind::Collocation => solve_collocation(
            need_diag()?,
            prep.system.norm_bound(),
            &y0,
            horizon,
            &uniform_grid(horizon, s.samples),
            &collocation_options(config),
        ),
        SolverKind::Reference => Err(Error::Precondition("reference is not a Carleman solver".into())),
    };
    traj.map_err(|e| e.at("propagate"))
}

fn collocation_options(config: &RunConfig) -> CollocationOptions {
    CollocationOptions {
        order: config.solver.collocation_order,
        intervals: (config.solver.intervals > 0).then_some(config.solver.intervals),
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SimulationReport {
    pub n: usize,
    pub order: usize,
    pub dim: usize,
    pub gamma: f64,
    pub r: f64,
    pub solver: SolverKind,
    pub times: Vec<f64>,
    /// Reference `u(t)`.
    #[serde(skip)]
    pub reference: Trajectory,
    /// `γ y_1(t)`, back in the original variables.
    #[serde(skip)]
    pub carleman: Trajectory,
    /// Per-block norms of the rescaled lifted state.
    pub block_norms: Vec<Vec<f64>>,
    pub errors: Vec<f64>,
    pub max_error: f64,
    pub kappa: Option<f64>,
    pub budget: ErrorBudget,
    pub measurement: MeasurementReport,
}

fn needs_diagonalization(kind: SolverKind) -> bool {
    matches!(kind, SolverKind::Matexp | SolverKind::Collocation)
}

/// Reference run, Carleman run, error-vs-time series, bounds and the final measurement report.
pub fn simulate(config: &RunConfig) -> Result<SimulationReport> {
    config.validate()?;
    let c = &config.carleman;
    let (prep, diag) = if needs_diagonalization(config.solver.kind) {
        let (p, d) = diagonalize_with_retry(
            &config.problem,
            c.n,
            c.order,
            c.gamma,
            c.resonance_retries,
            &DiagonalizeOptions::default(),
        )?;
        (p, Some(d))
    } else {
        (prepare(&config.problem, c.n, c.order, c.gamma)?, None)
    };
    simulate_prepared(config, &prep, diag.as_ref())
}

pub fn simulate_prepared(config: &RunConfig, prep: &Prepared, diag: Option<&Diagonalization>) -> Result<SimulationReport> {
    let horizon = config.problem.horizon;
    let lifted = run_carleman(config, prep, diag)?;
    let reference = solve_reference(&prep.ode, horizon, &lifted.times, &Dopri5Options::default())
        .map_err(|e| e.at("reference"))?;
    let g = prep.gamma();
    let n = prep.n;
    let mut carleman = Trajectory::new(lifted.kind);
    let mut block_norms = Vec::with_capacity(lifted.len());
    for (t, y) in lifted.times.iter().zip(&lifted.states) {
        carleman.push(*t, y[..n].iter().map(|v| g * v).collect());
        block_norms.push(prep.system.split(y).block_norms());
    }
    let errors: Vec<f64> = reference
        .states
        .iter()
        .zip(&carleman.states)
        .map(|(a, b)| distance(a, b))
        .collect();
    let max_error = errors.iter().cloned().fold(0.0, f64::max);
    let measurement = measurement_report(&prep.system.split(lifted.last_state())).map_err(|e| e.at("measurement"))?;
    let kappa = diag.map(|d| d.kappa_direct.unwrap_or_else(|| d.kappa_guggenheimer()));
    let max_y = lifted.norms().into_iter().fold(0.0, f64::max);
    let budget = error_budget(config, prep, kappa, max_y, max_error);
    Ok(SimulationReport {
        n,
        order: prep.system.order,
        dim: prep.system.dim,
        gamma: g,
        r: prep.rescale.r,
        solver: config.solver.kind,
        times: lifted.times.clone(),
        reference,
        carleman,
        block_norms,
        errors,
        max_error,
        kappa,
        budget,
        measurement,
    })
}

fn error_budget(config: &RunConfig, prep: &Prepared, kappa: Option<f64>, max_y: f64, observed: f64) -> ErrorBudget {
    let p = &config.problem;
    let s = &config.solver;
    let order = prep.system.order;
    let g = prep.gamma();
    let horizon = p.horizon;
    let u_in = prep.ode.u_in_norm();
    let y0 = norm2(&prep.y_in());
    let mut notes = Vec::new();
    let carleman_bound = match bound_carleman_truncation(u_in, prep.rescale.r, order, prep.ode.lambda_1(), horizon) {
        Ok(v) => Some(v),
        Err(e) => {
            notes.push(format!("carleman bound: {e}"));
            None
        }
    };
    let h = horizon / s.steps as f64;
    let (name, time_bound) = match s.kind {
        SolverKind::Euler => {
            let b = bound_euler(order, horizon, h, prep.scaled.norm_f1, prep.scaled.norm_f2, max_y);
            if !b.step_ok {
                notes.push("euler bound: step exceeds 1/(N^2 |F1|)".into());
            }
            ("euler", Some(g * b.value))
        }
        SolverKind::Taylor => (
            "taylor",
            Some(g * s.steps as f64 * bound_taylor(prep.system.norm_bound(), h, s.taylor_order, y0)),
        ),
        SolverKind::Matexp => ("chebyshev_eps", kappa.map(|k| g * k * y0 * s.eps)),
        SolverKind::Collocation => {
            let m = collocation_options(config)
                .intervals
                .unwrap_or_else(|| default_intervals(prep.system.norm_bound(), horizon));
            (
                "collocation",
                kappa.map(|k| g * collocation_error_bound(m, k, y0, s.collocation_order)),
            )
        }
        SolverKind::Reference => ("none", None),
    };
    let discretization_bound = bound_discretization(
        prep.n,
        p.linear,
        p.quadratic,
        u_in,
        horizon,
        p.profile.third_derivative_sup(),
    );
    if discretization_bound.is_none() {
        notes.push("discretization bound: needs a < 0 and |a| > |b| |u_in|".into());
    }
    ErrorBudget {
        carleman_bound,
        time_bound_name: name.into(),
        time_bound,
        discretization_bound,
        observed_max_error: observed,
        notes,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoResonanceRow {
    pub n: usize,
    pub order: usize,
    pub diffusion: f64,
    pub linear: f64,
    pub holds: bool,
    pub min_gap: f64,
}

/// One row per `(n, N)`, computed in parallel, in input order.
pub fn no_resonance_table(diffusion: f64, linear: f64, pairs: &[(usize, usize)]) -> Result<Vec<NoResonanceRow>> {
    pairs
        .par_iter()
        .map(|&(n, order)| {
            let lambda = f1_spectrum(n, diffusion, linear);
            let r = check_no_resonance(&lambda, order, DEFAULT_RESONANCE_TOLERANCE)?;
            Ok(NoResonanceRow {
                n,
                order,
                diffusion,
                linear,
                holds: r.holds,
                min_gap: r.min_gap,
            })
        })
        .collect()
}

pub fn no_resonance_csv(rows: &[NoResonanceRow]) -> Table {
    let mut t = Table::new(["n", "N", "D", "a", "holds", "min_gap"]);
    for r in rows {
        t.push(vec![
            r.n.to_string(),
            r.order.to_string(),
            fmt_f64(r.diffusion),
            fmt_f64(r.linear),
            r.holds.to_string(),
            fmt_f64(r.min_gap),
        ]);
    }
    t
}

/// Parameter varied by [`sweep`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParam {
    /// Truncation order `N`.
    Order,
    /// Taylor order `K`.
    TaylorOrder,
    /// Fixed Chebyshev order of the stepped propagator.
    ChebyshevOrder,
    /// Collocation degree `r`.
    CollocationOrder,
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "order" | "N" => Ok(SweepParam::Order),
            "taylor-order" | "K" => Ok(SweepParam::TaylorOrder),
            "chebyshev-order" => Ok(SweepParam::ChebyshevOrder),
            "collocation-order" | "r" => Ok(SweepParam::CollocationOrder),
            _ => Err(format!("unknown sweep parameter {s:?}")),
        }
    }
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Order => "N",
            SweepParam::TaylorOrder => "K",
            SweepParam::ChebyshevOrder => "chebyshev_order",
            SweepParam::CollocationOrder => "r",
        }
    }

    fn apply(&self, config: &RunConfig, v: usize) -> RunConfig {
        let mut c = config.clone();
        match self {
            SweepParam::Order => c.carleman.order = v,
            SweepParam::TaylorOrder => {
                c.solver.kind = SolverKind::Taylor;
                c.solver.taylor_order = v;
            }
            SweepParam::ChebyshevOrder => {
                c.solver.kind = SolverKind::Matexp;
                c.solver.chebyshev_order = v;
            }
            SweepParam::CollocationOrder => {
                c.solver.kind = SolverKind::Collocation;
                c.solver.collocation_order = v;
            }
        }
        c
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepPoint {
    pub value: usize,
    pub max_error: f64,
    #[serde(skip)]
    pub report: SimulationReport,
}

/// Runs [`simulate`] for each value in parallel; results keep input order.
pub fn sweep(config: &RunConfig, param: SweepParam, values: &[usize]) -> Result<Vec<SweepPoint>> {
    values
        .par_iter()
        .map(|&v| {
            let report = simulate(&param.apply(config, v))?;
            Ok(SweepPoint {
                value: v,
                max_error: report.max_error,
                report,
            })
        })
        .collect()
}

pub fn sweep_table(param: SweepParam, points: &[SweepPoint]) -> Table {
    let mut t = Table::new([param.name(), "max_error"]);
    for p in points {
        t.push(vec![p.value.to_string(), fmt_f64(p.max_error)]);
    }
    t
}

/// Resource estimate with `κ` and `‖u(T)‖` measured on a matrix-exponential run.
pub fn measured_resources(config: &RunConfig) -> Result<ResourceEstimate> {
    let mut c = config.clone();
    c.solver.kind = SolverKind::Matexp;
    c.solver.chebyshev_order = 0;
    let report = simulate(&c)?;
    let p = &c.problem;
    estimate_resources(&ResourceParams {
        kappa: report.kappa.unwrap_or(1.0).max(1.0),
        order: report.order,
        n: report.n,
        diffusion: p.diffusion,
        linear: p.linear,
        quadratic: p.quadratic,
        horizon: p.horizon,
        u_in_norm: report.reference.states[0].iter().map(|v| v * v).sum::<f64>().sqrt(),
        u_final_norm: norm2(report.reference.last_state()),
        eps: c.solver.eps,
    })
}

/// Named reproductions of the published experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Single run of the configured solver.
    Simulate,
    NoResonanceTable,
    /// Error vs `N` under forward Euler, `m = 5000`.
    EulerFigure,
    /// Error vs `N` under Taylor `K = 4`, 2000 steps.
    TaylorFigure,
    /// Error vs Chebyshev order `K = 1, 2, 3` at `N = 3`.
    ChebFigure,
    /// Reference solution over `[0, T]`.
    Decay,
}

impl std::str::FromStr for Scenario {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "simulate" => Ok(Scenario::Simulate),
            "no-resonance-table" => Ok(Scenario::NoResonanceTable),
            "euler-figure" => Ok(Scenario::EulerFigure),
            "taylor-figure" => Ok(Scenario::TaylorFigure),
            "cheb-figure" => Ok(Scenario::ChebFigure),
            "decay" => Ok(Scenario::Decay),
            _ => Err(format!("unknown scenario {s:?}")),
        }
    }
}

impl Scenario {
    pub const ALL: [Scenario; 6] = [
        Scenario::Simulate,
        Scenario::NoResonanceTable,
        Scenario::EulerFigure,
        Scenario::TaylorFigure,
        Scenario::ChebFigure,
        Scenario::Decay,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Simulate => "simulate",
            Scenario::NoResonanceTable => "no-resonance-table",
            Scenario::EulerFigure => "euler-figure",
            Scenario::TaylorFigure => "taylor-figure",
            Scenario::ChebFigure => "cheb-figure",
            Scenario::Decay => "decay",
        }
    }

    /// Desk-problem configuration used by the scenario (n = 8, T = 3).
    pub fn config(&self) -> RunConfig {
        let mut c = RunConfig::default();
        match self {
            Scenario::EulerFigure => {
                c.solver.kind = SolverKind::Euler;
                c.solver.steps = 5000;
            }
            Scenario::TaylorFigure => {
                c.solver.kind = SolverKind::Taylor;
                c.solver.taylor_order = 4;
                c.solver.steps = 2000;
            }
            Scenario::ChebFigure => {
                c.solver.kind = SolverKind::Matexp;
                c.solver.steps = 64;
                c.carleman.order = 3;
            }
            _ => {}
        }
        c
    }
}

#[derive(Clone, Debug, Default)]
pub struct Artifacts {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

impl Artifacts {
    fn table(&mut self, dir: &Path, name: &str, t: &Table) -> Result<()> {
        let p = dir.join(name);
        t.write(&p)?;
        self.files.push(p);
        Ok(())
    }

    fn plot(&mut self, config: &RunConfig, dir: &Path, name: &str, plot: &LinePlot) -> Result<()> {
        if config.output.svg {
            let p = dir.join(name);
            plot.write(&p)?;
            self.files.push(p);
        }
        Ok(())
    }
}

fn error_plot(title: &str, series: impl IntoIterator<Item = (String, Vec<f64>, Vec<f64>)>) -> LinePlot {
    let mut p = LinePlot::new(title, "t", "error").log_y();
    for (label, xs, ys) in series {
        p = p.with_series(Series::new(label, &xs, &ys));
    }
    p
}

fn error_series_table(points: &[SweepPoint], label: &str) -> Table {
    let times = &points[0].report.times;
    let mut t = Table::new(std::iter::once("t".to_string()).chain(points.iter().map(|p| format!("error_{label}{}", p.value))));
    for (k, time) in times.iter().enumerate() {
        let mut row = vec![*time];
        row.extend(points.iter().map(|p| p.report.errors[k]));
        t.push_numbers(&row);
    }
    t
}

/// Runs a scenario and writes its CSV (and SVG) files into `dir`.
pub fn run_experiment(config: &RunConfig, scenario: Scenario, dir: &Path) -> Result<Artifacts> {
    config.validate()?;
    std::fs::create_dir_all(dir)?;
    let mut art = Artifacts::default();
    match scenario {
        Scenario::Simulate => {
            let r = simulate(config)?;
            art.table(dir, "reference.csv", &trajectory_table(&r.reference))?;
            art.table(dir, "carleman.csv", &trajectory_table(&r.carleman))?;
            art.table(dir, "diagnostics.csv", &diagnostics_table(&r.times, &r.block_norms))?;
            let mut e = Table::new(["t", "error"]);
            for (t, v) in r.times.iter().zip(&r.errors) {
                e.push_numbers(&[*t, *v]);
            }
            art.table(dir, "error.csv", &e)?;
            art.plot(
                config,
                dir,
                "error.svg",
                &error_plot(&format!("{} error, N = {}", r.solver, r.order), [(r.solver.to_string(), r.times.clone(), r.errors.clone())]),
            )?;
            art.summary.push(format!(
                "solver={} n={} N={} d={} gamma={:.6} max_error={:.3e} p_success={:.6}",
                r.solver, r.n, r.order, r.dim, r.gamma, r.max_error, r.measurement.probability
            ));
        }
        Scenario::NoResonanceTable => {
            let rows = no_resonance_table(config.problem.diffusion, config.problem.linear, &NO_RESONANCE_PAIRS)?;
            art.table(dir, "no_resonance.csv", &no_resonance_csv(&rows))?;
            for r in &rows {
                art.summary.push(format!(
                    "n={:<3} N={} holds={} min_gap={:.3e}",
                    r.n,
                    r.order,
                    if r.holds { "yes" } else { "no" },
                    r.min_gap
                ));
            }
        }
        Scenario::EulerFigure | Scenario::TaylorFigure | Scenario::ChebFigure => {
            let (param, values, label, file) = match scenario {
                Scenario::ChebFigure => (SweepParam::ChebyshevOrder, vec![1, 2, 3], "K", "cheb"),
                Scenario::EulerFigure => (SweepParam::Order, vec![1, 2, 3], "N", "euler"),
                _ => (SweepParam::Order, vec![1, 2, 3], "N", "taylor"),
            };
            let points = sweep(config, param, &values)?;
            art.table(dir, &format!("{file}_sweep.csv"), &sweep_table(param, &points))?;
            art.table(dir, &format!("{file}_errors.csv"), &error_series_table(&points, label))?;
            art.plot(
                config,
                dir,
                &format!("{file}_errors.svg"),
                &error_plot(
                    &format!("{file}: error vs time"),
                    points
                        .iter()
                        .map(|p| (format!("{label}={}", p.value), p.report.times.clone(), p.report.errors.clone())),
                ),
            )?;
            for p in &points {
                art.summary.push(format!("{label}={} max_error={:.6e}", p.value, p.max_error));
            }
        }
        Scenario::Decay => {
            let c = &config.carleman;
            let prep = prepare(&config.problem, c.n, 1, GammaPolicy::Fixed(1.0))?;
            let times = uniform_grid(config.problem.horizon, config.solver.samples);
            let r = solve_reference(&prep.ode, config.problem.horizon, &times, &Dopri5Options::default())
                .map_err(|e| e.at("reference"))?;
            art.table(dir, "decay.csv", &trajectory_table(&r))?;
            let norms = r.norms();
            art.plot(
                config,
                dir,
                "decay.svg",
                &LinePlot::new("solution norm", "t", "|u(t)|").with_series(Series::new("|u|", &times, &norms)),
            )?;
            art.summary.push(format!(
                "|u(0)|={:.6e} |u(T)|={:.6e}",
                norms[0],
                norms.last().copied().unwrap_or(0.0)
            ));
        }
    }
    Ok(art)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prepare_auto_gamma() {
        let p = prepare(&FisherKppProblem::desk(), 8, 3, GammaPolicy::Auto).unwrap();
        assert!((p.gamma() - p.ode.u_in_norm() / p.rescale.r).abs() < 1e-12);
        assert!(p.rescale.r < 1.0);
        let lin = prepare(&FisherKppProblem::desk().with_quadratic(0.0), 4, 2, GammaPolicy::Auto).unwrap();
        assert_eq!(lin.gamma(), 1.0);
    }

    #[test]
    fn resonance_retry_moves_to_next_grid() {
        // D = 1, a = 0, n = 2: λ = −9, −27 and 3·(−9) = −27
        let p = FisherKppProblem::new(1.0, 0.0, -1.0, 1.0, Default::default()).unwrap();
        let lambda = f1_spectrum(2, p.diffusion, 0.0);
        assert!(!check_no_resonance(&lambda, 3, 1e-9).unwrap().holds);
        let (prep, d) = diagonalize_with_retry(&p, 2, 3, GammaPolicy::Auto, 3, &DiagonalizeOptions::default()).unwrap();
        assert!(prep.n > 2);
        assert!(d.residual <= 1e-8);
        let err = diagonalize_with_retry(&p, 2, 3, GammaPolicy::Auto, 0, &DiagonalizeOptions::default()).unwrap_err();
        assert_eq!(err.exit_code(), 3);
    }

    #[test]
    fn table_rows_in_order() {
        let rows = no_resonance_table(0.2, 0.4, &[(8, 3), (4, 5)]).unwrap();
        assert_eq!((rows[0].n, rows[0].order), (8, 3));
        assert_eq!((rows[1].n, rows[1].order), (4, 5));
        let t = no_resonance_csv(&rows);
        assert_eq!(t.header, ["n", "N", "D", "a", "holds", "min_gap"]);
    }

    #[test]
    fn simulate_small_runs() {
        let mut c = RunConfig::default();
        c.carleman.n = 4;
        c.problem.horizon = 1.0;
        c.solver.samples = 10;
        for kind in [SolverKind::Euler, SolverKind::Taylor, SolverKind::Matexp, SolverKind::Collocation] {
            c.solver.kind = kind;
            c.solver.steps = 1000;
            let r = simulate(&c).unwrap();
            assert_eq!(r.times.len(), 11, "{kind}");
            assert!(r.max_error < 1e-3, "{kind}: {}", r.max_error);
            assert!(r.measurement.probability > 0.9);
            assert!(r.budget.carleman_bound.is_some());
        }
    }

    #[test]
    fn scenario_names_round_trip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
    }

    #[test]
    fn experiment_writes_reparseable_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut c = RunConfig::default();
        c.carleman.n = 4;
        c.problem.horizon = 0.5;
        c.solver.steps = 200;
        c.solver.samples = 20;
        let a = run_experiment(&c, Scenario::Simulate, dir.path()).unwrap();
        assert!(a.files.iter().any(|f| f.ends_with("error.svg")));
        for f in a.files.iter().filter(|f| f.extension().is_some_and(|e| e == "csv")) {
            let t = Table::read(f).unwrap();
            assert_eq!(Table::from_csv_str(&t.to_csv_string().unwrap()).unwrap(), t);
            assert_eq!(std::fs::read_to_string(f).unwrap(), t.to_csv_string().unwrap());
        }
        let b = run_experiment(&c, Scenario::Simulate, &dir.path().join("again")).unwrap();
        for (x, y) in a.files.iter().zip(&b.files) {
            assert_eq!(std::fs::read(x).unwrap(), std::fs::read(y).unwrap());
        }
    }
}
