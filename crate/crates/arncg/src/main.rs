use std::path::PathBuf;
use std::process::ExitCode;

use arncg::bench::{run_batch, save_rows};
use arncg::formats::{load_json, save_json, Manifest};
use arncg::order::order_study;
use arncg::run::execute_and_save;
use arncg::spec::{RunSpec, ScheduleName, StartPoint, StepOverrides};
use arncg::{exit_code, CliError, EXIT_CONVERGED, EXIT_NOT_CONVERGED};
use arncg_core::DEFAULT_ORDER_WINDOW;
use clap::{Args, Parser, Subcommand};

/// Adaptive regularized Newton-CG for smooth nonconvex minimization.
#[derive(Parser)]
#[command(name = "arncg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one registry problem.
    Solve {
        #[command(flatten)]
        solver: SolverArgs,
        /// Rate exponent θ.
        #[arg(long)]
        theta: Option<f64>,
        /// Write the per-iteration trace as CSV.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        /// Write the run report as JSON.
        #[arg(long)]
        report_out: Option<PathBuf>,
    },
    /// Measure the local convergence order for several values of θ.
    Order {
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated θ values.
        #[arg(long, value_delimiter = ',', default_value = "0,0.5,1,1.5")]
        theta: Vec<f64>,
        /// Lower end of the gradient-norm window.
        #[arg(long, default_value_t = DEFAULT_ORDER_WINDOW.0)]
        lo: f64,
        /// Upper end of the gradient-norm window.
        #[arg(long, default_value_t = DEFAULT_ORDER_WINDOW.1)]
        hi: f64,
        /// Write (log g_k, log g_k+1) pairs as CSV instead of printing them.
        #[arg(long)]
        pairs_out: Option<PathBuf>,
    },
    /// Run every spec of a JSON manifest in parallel.
    Bench {
        /// Manifest file: {"runs": [RunSpec, ...]}.
        #[arg(long)]
        manifest: PathBuf,
        /// Aggregate JSON document.
        #[arg(long)]
        out: Option<PathBuf>,
        /// One CSV row per run.
        #[arg(long)]
        rows_out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    /// Registry problem: quad, scalar_quad, scaled_quad, rosenbrock, indef_quad, nc_well.
    #[arg(long)]
    problem: Option<String>,
    #[arg(long)]
    n: Option<usize>,
    /// default, ones, random, or a comma-separated point.
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<String>,
    /// Seed for --x0 random.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    schedule: Option<ScheduleName>,
    /// Fallback relaxation λ in [0, 1]; 0 disables the fallback step.
    #[arg(long)]
    lambda: Option<f64>,
    /// Target gradient norm.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    m_max: Option<u32>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    tau_minus: Option<f64>,
    #[arg(long)]
    tau_plus: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    eta: Option<f64>,
    /// Initial Lipschitz estimate.
    #[arg(long)]
    m0: Option<f64>,
    /// Abort once the Lipschitz estimate reaches this value.
    #[arg(long)]
    max_m: Option<f64>,
    /// Wall-clock limit in seconds.
    #[arg(long)]
    time_limit: Option<f64>,
}

impl SolverArgs {
    fn into_spec(self, mut spec: RunSpec) -> Result<RunSpec, CliError> {
        if let Some(p) = self.problem {
            spec.problem = p;
        }
        spec.n = self.n.or(spec.n);
        match self.x0 {
            Some(text) => spec.x0 = StartPoint::parse(&text, self.seed)?,
            None if self.seed.is_some() => {
                return Err(CliError::Usage("--seed requires --x0 random".into()))
            }
            None => {}
        }
        spec.schedule = self.schedule.unwrap_or(spec.schedule);
        spec.lambda = self.lambda.unwrap_or(spec.lambda);
        spec.eps = self.eps.unwrap_or(spec.eps);
        spec.max_iterations = self.max_iters.unwrap_or(spec.max_iterations);
        spec.step = StepOverrides {
            mu: self.mu,
            beta: self.beta,
            m_max: self.m_max,
            tau: self.tau,
            tau_minus: self.tau_minus,
            tau_plus: self.tau_plus,
            gamma: self.gamma,
            eta: self.eta,
        };
        spec.m0 = self.m0;
        spec.max_m = self.max_m;
        spec.time_limit_secs = self.time_limit;
        Ok(spec)
    }
}

fn run(cli: Cli) -> Result<i32, CliError> {
    match cli.command {
        Command::Solve {
            solver,
            theta,
            trace_out,
            report_out,
        } => {
            if solver.problem.is_none() {
                return Err(CliError::Usage("solve requires --problem".into()));
            }
            let mut spec = solver.into_spec(RunSpec::default())?;
            spec.theta = theta.unwrap_or(spec.theta);
            spec.trace_out = trace_out;
            spec.report_out = report_out;
            let result = execute_and_save(&spec)?;
            let r = &result.report;
            let c = r.counters;
            println!(
                "{} problem={} n={} iterations={} g_final={:.3e} value={:.6e} evals: f={} grad={} hvp={} hess={}",
                r.outcome.as_str(),
                spec.problem,
                result.n,
                r.iterations,
                r.final_gradient_norm,
                r.final_value,
                c.value_evals,
                c.gradient_evals,
                c.hvp_evals,
                c.hessian_points,
            );
            if let Some(detail) = arncg::formats::failure_detail(&r.outcome) {
                eprintln!("numerical failure: {detail}");
            }
            Ok(exit_code(&r.outcome))
        }
        Command::Order {
            solver,
            theta,
            lo,
            hi,
            pairs_out,
        } => {
            let base = RunSpec {
                problem: "scalar_quad".into(),
                eps: 1e-20,
                ..RunSpec::default()
            };
            let spec = solver.into_spec(base)?;
            let rows = order_study(&spec, &theta, lo, hi)?;
            println!(
                "{:>6} {:>10} {:>10} {:>6} {:>11}  outcome",
                "theta", "predicted", "measured", "pairs", "iterations"
            );
            for row in &rows {
                let measured = row.measured.map_or("-".to_owned(), |s| format!("{s:.4}"));
                println!(
                    "{:>6} {:>10.4} {:>10} {:>6} {:>11}  {}",
                    row.theta,
                    row.predicted,
                    measured,
                    row.pairs.len(),
                    row.iterations,
                    row.outcome.as_str()
                );
                if row.measured.is_none() {
                    eprintln!(
                        "warning: theta={}: fewer than 3 consecutive iterates with g_k in [{lo:e}, {hi:e}]; no slope estimate",
                        row.theta
                    );
                }
            }
            let mut csv = String::from("theta,log_g_k,log_g_next\n");
            for row in &rows {
                for (a, b) in &row.pairs {
                    csv.push_str(&format!("{},{a},{b}\n", row.theta));
                }
            }
            match pairs_out {
                Some(path) => {
                    std::fs::write(&path, csv).map_err(|source| CliError::Io { path, source })?
                }
                None => print!("\n{csv}"),
            }
            Ok(EXIT_CONVERGED)
        }
        Command::Bench {
            manifest,
            out,
            rows_out,
        } => {
            let manifest: Manifest = load_json(&manifest)?;
            let aggregate = run_batch(&manifest)?;
            for row in &aggregate.rows {
                println!(
                    "{:>4} {:<12} n={:<4} {:<5} theta={:<4} lambda={:<4} {}{}",
                    row.index,
                    row.problem,
                    row.n,
                    format!("{:?}", row.schedule).to_lowercase(),
                    row.theta,
                    row.lambda,
                    row.outcome,
                    row.failure
                        .as_deref()
                        .map_or(String::new(), |f| format!(" ({f})")),
                );
            }
            println!(
                "{} runs: {} converged, {} not converged, {} numerical failures, {} errors",
                aggregate.total,
                aggregate.converged,
                aggregate.not_converged,
                aggregate.numerical_failures,
                aggregate.errors
            );
            if let Some(path) = rows_out {
                save_rows(&path, &aggregate.rows)?;
            }
            if let Some(path) = out {
                save_json(&path, &aggregate)?;
            }
            Ok(if aggregate.converged == aggregate.total {
                EXIT_CONVERGED
            } else {
                EXIT_NOT_CONVERGED
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let code = run(cli).unwrap_or_else(|e| {
        eprintln!("error: {e}");
        e.exit_code()
    });
    ExitCode::from(code as u8)
}
