use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use kpp_carleman::error::{Error, Result};
use kpp_carleman::harness::{
    bound_carleman_truncation, diagonalize_with_retry, fmt_f64, measured_resources, no_resonance_csv,
    no_resonance_table, run_experiment, simulate, sweep, sweep_table, GammaPolicy, RunConfig, Scenario,
    SweepParam, Table, NO_RESONANCE_PAIRS, OUTPUT_DIR_ENV, POLYLOG_LABEL,
};
use kpp_carleman::solvers::SolverKind;
use kpp_carleman::spectrum::DiagonalizeOptions;

/// Carleman linearization of the Fisher-KPP equation u_t = D u_xx + a u + b u².
#[derive(Parser)]
#[command(name = "kpp-carleman", version)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory [default: $KPP_CARLEMAN_OUT, else ./out].
    #[arg(long, global = true, env = OUTPUT_DIR_ENV)]
    out: Option<PathBuf>,
    /// Diffusion coefficient D [default: 0.2]
    #[arg(long, global = true)]
    diffusion: Option<f64>,
    /// Linear coefficient a [default: 0.4]
    #[arg(long, global = true, allow_hyphen_values = true)]
    linear: Option<f64>,
    /// Quadratic coefficient b [default: -1]
    #[arg(long, global = true, allow_hyphen_values = true)]
    quadratic: Option<f64>,
    /// Horizon T [default: 3]
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Interior grid points n [default: 8]
    #[arg(short = 'n', long = "grid", global = true)]
    n: Option<usize>,
    /// Carleman truncation order N [default: 3]
    #[arg(short = 'N', long, global = true)]
    order: Option<usize>,
    /// Rescaling: "auto", "none" or a positive number [default: auto]
    #[arg(long, global = true)]
    gamma: Option<GammaPolicy>,
    /// euler | taylor | matexp | collocation [default: euler]
    #[arg(long, global = true, value_parser = parse_solver)]
    solver: Option<SolverKind>,
    /// Time steps (Euler, Taylor, stepped Chebyshev) [default: 5000]
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Taylor order K [default: 4]
    #[arg(long, global = true)]
    taylor_order: Option<usize>,
    /// Fixed Chebyshev order; 0 derives it from eps [default: 0]
    #[arg(long, global = true)]
    chebyshev_order: Option<usize>,
    /// Target accuracy of the Chebyshev series [default: 1e-8]
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Collocation degree r [default: 12]
    #[arg(long, global = true)]
    collocation_order: Option<usize>,
    /// Collocation intervals; 0 means ceil(|A| T / 2) [default: 0]
    #[arg(long, global = true)]
    intervals: Option<usize>,
    /// Points on the error-vs-time grid [default: 100]
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Skip SVG plots.
    #[arg(long, global = true)]
    no_svg: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Reference and Carleman runs, error series, bounds and measurement report.
    Simulate,
    /// No-resonance check for a list of (n, N) pairs.
    NoResonance {
        /// Comma-separated n:N pairs [default: the seven published pairs]
        #[arg(long, value_delimiter = ',', value_parser = parse_pair)]
        pairs: Vec<(usize, usize)>,
    },
    /// Iterative diagonalization A = V Λ V⁻¹ with residuals and condition numbers.
    Diagonalize,
    /// Error vs a discrete parameter, or one of the figure scenarios.
    Sweep {
        /// euler-figure | taylor-figure | cheb-figure | decay | no-resonance-table | simulate
        #[arg(long, conflicts_with_all = ["param", "values"])]
        scenario: Option<Scenario>,
        /// N | K | chebyshev-order | r
        #[arg(long, default_value = "N")]
        param: SweepParam,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        values: Vec<usize>,
    },
    /// Observed error against the truncation and time-stepping bounds.
    Bounds,
    /// Cost formulas with the measured condition number plugged in.
    Estimate,
}

fn parse_solver(s: &str) -> std::result::Result<SolverKind, String> {
    match s {
        "euler" => Ok(SolverKind::Euler),
        "taylor" => Ok(SolverKind::Taylor),
        "matexp" => Ok(SolverKind::Matexp),
        "collocation" => Ok(SolverKind::Collocation),
        _ => Err(format!("unknown solver {s:?}")),
    }
}

fn parse_pair(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected n:N, got {s:?}"))?;
    Ok((
        a.trim().parse().map_err(|_| format!("bad n in {s:?}"))?,
        b.trim().parse().map_err(|_| format!("bad N in {s:?}"))?,
    ))
}

impl Common {
    fn config(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let p = &mut c.problem;
        set(&mut p.diffusion, self.diffusion);
        set(&mut p.linear, self.linear);
        set(&mut p.quadratic, self.quadratic);
        set(&mut p.horizon, self.horizon);
        set(&mut c.carleman.n, self.n);
        set(&mut c.carleman.order, self.order);
        set(&mut c.carleman.gamma, self.gamma);
        let s = &mut c.solver;
        set(&mut s.kind, self.solver);
        set(&mut s.steps, self.steps);
        set(&mut s.taylor_order, self.taylor_order);
        set(&mut s.chebyshev_order, self.chebyshev_order);
        set(&mut s.eps, self.eps);
        set(&mut s.collocation_order, self.collocation_order);
        set(&mut s.intervals, self.intervals);
        set(&mut s.samples, self.samples);
        if let Some(o) = &self.out {
            c.output.dir = o.clone();
        }
        if self.no_svg {
            c.output.svg = false;
        }
        c.validate()?;
        Ok(c)
    }
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = cli.common.config()?;
    let dir = config.output_dir();
    match cli.command {
        Command::Simulate => report(run_experiment(&config, Scenario::Simulate, &dir)?),
        Command::NoResonance { pairs } => {
            let pairs = if pairs.is_empty() { NO_RESONANCE_PAIRS.to_vec() } else { pairs };
            let rows = no_resonance_table(config.problem.diffusion, config.problem.linear, &pairs)?;
            println!("{:>4} {:>3} {:>6} {:>12}", "n", "N", "holds", "min_gap");
            for r in &rows {
                println!("{:>4} {:>3} {:>6} {:>12.4e}", r.n, r.order, if r.holds { "yes" } else { "no" }, r.min_gap);
            }
            let path = dir.join("no_resonance.csv");
            no_resonance_csv(&rows).write(&path)?;
            println!("wrote {}", path.display());
        }
        Command::Diagonalize => {
            let c = &config.carleman;
            let options = DiagonalizeOptions::default();
            let (prep, d) = diagonalize_with_retry(&config.problem, c.n, c.order, c.gamma, c.resonance_retries, &options)?;
            println!("n = {}, N = {}, d = {}, gamma = {:.6}", prep.n, prep.system.order, d.dim(), prep.gamma());
            println!("lambda in [{:.6}, {:.6}]", d.lambda_min(), d.lambda_max());
            println!("|AV - VL|_F / |A|_F = {:.3e}", d.residual);
            println!("|V V^-1 - I|_F      = {:.3e}", d.inverse_residual);
            match d.kappa_direct {
                Some(k) => println!("kappa (direct)       = {k:.6e}"),
                None => println!("kappa (direct)       = not estimated"),
            }
            println!("kappa (Guggenheimer) = exp({:.6})", d.ln_kappa_guggenheimer);
            let mut t = Table::new(["index", "lambda"]);
            for (i, l) in d.lambda.iter().enumerate() {
                t.push(vec![i.to_string(), fmt_f64(*l)]);
            }
            let path = dir.join("eigenvalues.csv");
            t.write(&path)?;
            println!("wrote {}", path.display());
        }
        Command::Sweep { scenario, param, values } => match scenario {
            Some(s) => report(run_experiment(&merge_scenario(s, &config), s, &dir)?),
            None => {
                let points = sweep(&config, param, &values)?;
                for p in &points {
                    println!("{}={} max_error={:.6e}", param.name(), p.value, p.max_error);
                }
                let path = dir.join("sweep.csv");
                sweep_table(param, &points).write(&path)?;
                println!("wrote {}", path.display());
            }
        },
        Command::Bounds => {
            let r = simulate(&config)?;
            let b = &r.budget;
            println!("observed max error   = {:.6e}", b.observed_max_error);
            print_opt("carleman bound (T)", b.carleman_bound);
            print_opt(&format!("{} bound", b.time_bound_name), b.time_bound);
            print_opt("discretization bound", b.discretization_bound);
            for note in &b.notes {
                println!("note: {note}");
            }
            let u_in = r.reference.states[0].iter().map(|v| v * v).sum::<f64>().sqrt();
            let lambda_1 = kpp_carleman::pde::f1_spectrum(r.n, config.problem.diffusion, config.problem.linear)[0];
            let mut t = Table::new(["t", "observed", "carleman_bound"]);
            for (time, e) in r.times.iter().zip(&r.errors) {
                let bound = bound_carleman_truncation(u_in, r.r, r.order, lambda_1, *time).unwrap_or(f64::NAN);
                t.push_numbers(&[*time, *e, bound]);
            }
            let path = dir.join("bounds.csv");
            t.write(&path)?;
            println!("wrote {}", path.display());
        }
        Command::Estimate => {
            let e = measured_resources(&config)?;
            println!("kappa = {:.6e}, |u_in| = {:.6e}, |u(T)| = {:.6e}", e.inputs.kappa, e.inputs.u_in_norm, e.inputs.u_final_norm);
            println!("inner factor = {:.6e}", e.inner_factor);
            println!("queries ~ {:.6e}, gates ~ {:.6e} [{}]", e.query_count, e.gate_count, POLYLOG_LABEL);
            let mut t = Table::new(["method", "time", "error", "order", "leading", "time_extra", "accuracy", "polylog", "total"]);
            for r in &e.rows {
                println!("{:<9} leading={:.4e} total={:.4e}  ({}, {}, {})", r.method, r.leading, r.total, r.time_shape, r.error_shape, r.order_shape);
                t.push(vec![
                    r.method.into(),
                    r.time_shape.into(),
                    r.error_shape.into(),
                    r.order_shape.into(),
                    fmt_f64(r.leading),
                    fmt_f64(r.time_extra),
                    fmt_f64(r.accuracy),
                    fmt_f64(r.polylog),
                    fmt_f64(r.total),
                ]);
            }
            let path = dir.join("estimate.csv");
            t.write(&path)?;
            println!("wrote {}", path.display());
        }
    }
    Ok(())
}

/// Scenario presets, with any explicitly configured output settings kept.
fn merge_scenario(s: Scenario, config: &RunConfig) -> RunConfig {
    let mut c = s.config();
    c.problem = config.problem.clone();
    c.output = config.output.clone();
    c
}

fn print_opt(name: &str, v: Option<f64>) {
    match v {
        Some(v) => println!("{name:<20} = {v:.6e}"),
        None => println!("{name:<20} = n/a"),
    }
}

fn report(a: kpp_carleman::harness::Artifacts) {
    for line in &a.summary {
        println!("{line}");
    }
    for f in &a.files {
        println!("wrote {}", f.display());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    e.exit_code() as u8
}
