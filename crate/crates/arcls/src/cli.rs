//! Command-line benchmark driver: parse a (problems × solvers) request, run
//! the matrix, print a summary table, and export records and profiles.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;

use crate::config::SolverConfig;
use crate::harness::{
    performance_profile, profiles_to_csv, records_to_csv, records_to_json, run_matrix, write_text,
    Metric, ProblemSpec, SolverKind,
};
use crate::record::{RunRecord, Status};

const USAGE_EXIT: i32 = 2;
const RUN_ERROR_EXIT: i32 = 1;

#[derive(Parser, Debug)]
#[command(
    name = "arcls",
    version,
    about = "Benchmark scaled-norm line-search cubic-regularization and trust-region solvers \
             against classical baselines, with Dolan-More performance profiles."
)]
struct Cli {
    /// Problem instances, each `family:n` or `family:n:seed`.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "rosenbrock:100,powell:100,tridia:100,trig:100,quad_spd:100"
    )]
    problems: Vec<String>,

    /// Solvers to run.
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "ls-arc,ls-arc-s,ls-tr,armijo,arc-l2,tr-l2"
    )]
    solvers: Vec<String>,

    /// Gradient-norm convergence tolerance (default: solver default).
    #[arg(long)]
    gtol: Option<f64>,

    /// Outer-iteration cap (default: solver default).
    #[arg(long)]
    max_iter: Option<usize>,

    /// Angle-condition threshold on the inner direction (default: solver default).
    #[arg(long)]
    eps_d: Option<f64>,

    /// Relative residual tolerance of the inner Krylov solve (default: solver default).
    #[arg(long)]
    inner_rtol: Option<f64>,

    /// Seed applied to problem specs that do not carry their own.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Keep per-iteration traces in the JSON export.
    #[arg(long)]
    trace: bool,

    /// Metrics to profile (with --profile).
    #[arg(long, value_delimiter = ',', default_value = "f_evals,g_evals")]
    metric: Vec<String>,

    /// Output directory for CSV/JSON exports.
    #[arg(long, default_value = "arcls-out")]
    out: PathBuf,

    /// Also write one performance-profile CSV per metric.
    #[arg(long)]
    profile: bool,
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}");
    eprintln!("run with --help for usage");
    USAGE_EXIT
}

/// Validated form of the request.
struct Plan {
    specs: Vec<ProblemSpec>,
    kinds: Vec<SolverKind>,
    metrics: Vec<Metric>,
    config: SolverConfig,
}

fn build_plan(cli: &Cli) -> Result<Plan, String> {
    let mut kinds = Vec::new();
    for s in &cli.solvers {
        let kind: SolverKind = s.parse().map_err(|e| format!("{e}"))?;
        if kinds.contains(&kind) {
            return Err(format!("solver {s:?} listed twice"));
        }
        kinds.push(kind);
    }
    if kinds.is_empty() {
        return Err("no solvers requested".to_string());
    }

    let mut specs: Vec<ProblemSpec> = Vec::new();
    for raw in &cli.problems {
        let mut spec: ProblemSpec = raw.parse().map_err(|e| format!("{e}"))?;
        // a spec written without its own seed inherits the global one
        if raw.matches(':').count() == 1 {
            spec.seed = cli.seed;
        }
        // catch unknown families and unsupported dimensions before running
        spec.build().map_err(|e| format!("{e}"))?;
        if specs.contains(&spec) {
            return Err(format!("problem {} listed twice", spec.display_name()));
        }
        specs.push(spec);
    }
    if specs.is_empty() {
        return Err("no problems requested".to_string());
    }

    let mut metrics = Vec::new();
    for m in &cli.metric {
        let metric: Metric = m.parse().map_err(|e| format!("{e}"))?;
        if metrics.contains(&metric) {
            return Err(format!("metric {m:?} listed twice"));
        }
        metrics.push(metric);
    }
    if cli.profile && metrics.is_empty() {
        return Err("--profile needs at least one metric".to_string());
    }

    let mut config = SolverConfig::default();
    if let Some(v) = cli.gtol {
        config.gtol = v;
    }
    if let Some(v) = cli.max_iter {
        config.max_iter = v;
    }
    if let Some(v) = cli.eps_d {
        config.eps_d = v;
    }
    if let Some(v) = cli.inner_rtol {
        config.inner_rtol = v;
    }
    config.keep_trace = cli.trace;
    config.validate().map_err(|e| format!("{e}"))?;

    Ok(Plan {
        specs,
        kinds,
        metrics,
        config,
    })
}

fn summary_table(records: &[RunRecord]) -> String {
    let mut out = String::new();
    let pw = records
        .iter()
        .map(|r| r.problem.len())
        .max()
        .unwrap_or(7)
        .max("problem".len());
    out.push_str(&format!(
        "{:<pw$}  {:<8}  {:<15}  {:>7}  {:>8}  {:>8}  {:>12}  {:>9}\n",
        "problem", "solver", "status", "iters", "f_evals", "g_evals", "final_gnorm", "ms"
    ));
    for r in records {
        out.push_str(&format!(
            "{:<pw$}  {:<8}  {:<15}  {:>7}  {:>8}  {:>8}  {:>12.3e}  {:>9.2}\n",
            r.problem,
            r.solver,
            r.status.as_str(),
            r.outer_iters,
            r.f_evals,
            r.g_evals,
            r.final_gnorm,
            r.wall_time_ms,
        ));
    }
    out
}

/// Run the benchmark described by `args` (argv-style, program name first).
/// Returns the process exit code: 0 on success, 1 if any run ended in an
/// error status, 2 on a usage problem.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            // clap renders --help/--version as non-error output
            let code = if e.use_stderr() { USAGE_EXIT } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let plan = match build_plan(&cli) {
        Ok(plan) => plan,
        Err(msg) => return usage_error(&msg),
    };

    let records = run_matrix(&plan.specs, &plan.kinds, &plan.config);
    print!("{}", summary_table(&records));

    if let Err(e) = std::fs::create_dir_all(&cli.out) {
        eprintln!("error: cannot create {}: {e}", cli.out.display());
        return RUN_ERROR_EXIT;
    }
    let mut written = Vec::new();
    let mut export = |name: &str, content: String| -> Result<(), i32> {
        let path = cli.out.join(name);
        if let Err(e) = write_text(&path, &content) {
            eprintln!("error: {e}");
            return Err(RUN_ERROR_EXIT);
        }
        written.push(name.to_string());
        Ok(())
    };
    if let Err(code) = export("records.csv", records_to_csv(&records)) {
        return code;
    }
    let json = match records_to_json(&records) {
        Ok(json) => json,
        Err(e) => {
            eprintln!("error: {e}");
            return RUN_ERROR_EXIT;
        }
    };
    if let Err(code) = export("records.json", json) {
        return code;
    }
    if cli.profile {
        for &metric in &plan.metrics {
            let curves = match performance_profile(&records, metric) {
                Ok(curves) => curves,
                Err(e) => {
                    eprintln!("error: {e}");
                    return RUN_ERROR_EXIT;
                }
            };
            if let Err(code) = export(&format!("profile_{metric}.csv"), profiles_to_csv(&curves)) {
                return code;
            }
        }
    }

    let errors = records.iter().filter(|r| r.status == Status::Error).count();
    let converged = records.iter().filter(|r| r.converged()).count();
    println!(
        "{} runs, {} converged, {} errors -> {}/{{{}}}",
        records.len(),
        converged,
        errors,
        cli.out.display(),
        written.join(", ")
    );
    for r in records.iter().filter(|r| r.status == Status::Error) {
        eprintln!(
            "error: {}/{}: {}",
            r.problem,
            r.solver,
            r.error.as_deref().unwrap_or("unknown")
        );
    }
    if errors > 0 {
        RUN_ERROR_EXIT
    } else {
        0
    }
}
