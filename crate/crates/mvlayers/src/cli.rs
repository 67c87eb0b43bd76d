//! Command-line front end: `solve`, `compare`, `gen` and `validate`
//! subcommands with distinct exit codes per failure class.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::distortion::DistortionOracle;
use crate::model::{BudgetMode, ScenarioSpec};
use crate::report::{BatchError, Report, ReportOptions, RunRecord};
use crate::scenario::{
    gen_synthetic, load_scenario, preset, save_scenario, scenario_to_string, BudgetSchedule,
    GenDistortion, GeneratorConfig, PopularityModel, PresetId, ScenarioError,
};
use crate::solver::{solve, SolveError, SolverId, SolverLimits};

pub const EXIT_OK: i32 = 0;
pub const EXIT_GENERAL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_PARSE: i32 = 3;
pub const EXIT_VALIDATION: i32 = 4;
pub const EXIT_INFEASIBLE: i32 = 5;
pub const EXIT_SIZE_GUARD: i32 = 6;

#[derive(Debug, Parser)]
#[command(
    name = "mvlayers",
    about = "Joint view selection and rate allocation for layered interactive multiview streaming",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Table,
    Csv,
}

#[derive(Debug, Args)]
struct CommonRunArgs {
    /// Scenario file to load.
    #[arg(long)]
    scenario: PathBuf,
    /// Override the scenario's budget mode.
    #[arg(long, value_enum)]
    budget_mode: Option<BudgetMode>,
    /// State-space cap for the optimal solver.
    #[arg(long)]
    cap: Option<f64>,
    /// Assignment cap for the exhaustive solver.
    #[arg(long)]
    brute_cap: Option<u64>,
    /// Peak sample value for PSNR reporting.
    #[arg(long, default_value_t = 255.0)]
    peak: f64,
    /// Zero out wall-clock fields for byte-reproducible output.
    #[arg(long)]
    zero_time: bool,
    #[arg(long, value_enum, default_value = "table")]
    output: OutputFormat,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load a scenario file and check every invariant.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Run one solver on a scenario.
    Solve {
        #[command(flatten)]
        common: CommonRunArgs,
        #[arg(long, value_enum)]
        solver: SolverId,
    },
    /// Run several solvers head-to-head, optionally over a seeded batch.
    Compare {
        #[command(flatten)]
        common: CommonRunArgs,
        /// Two or more solvers, comma separated.
        #[arg(long, value_enum, value_delimiter = ',')]
        solver: Vec<SolverId>,
        /// Number of reseeded scenario variants (0 = run the file as-is).
        #[arg(long, default_value_t = 0)]
        seeds: u64,
        /// Write the per-cluster PSNR CSV to this path.
        #[arg(long)]
        cluster_csv: Option<PathBuf>,
        /// Evaluate batch seeds sequentially instead of in parallel.
        #[arg(long)]
        sequential: bool,
    },
    /// Emit a scenario file: a bundled preset or a synthetic instance.
    Gen {
        #[command(flatten)]
        args: GenArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PopularityArg {
    Uniform,
    Exponential,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Emit a bundled dataset preset instead of a synthetic scenario.
    #[arg(long, value_enum)]
    preset: Option<PresetId>,
    #[arg(long, default_value = "synthetic")]
    name: String,
    /// Number of captured views.
    #[arg(long, default_value_t = 5)]
    views: usize,
    /// Number of rendered positions in the navigation window.
    #[arg(long, default_value_t = 9)]
    positions: usize,
    /// Distance between neighboring cameras, scene units.
    #[arg(long, default_value_t = 1.0)]
    spacing: f64,
    #[arg(long, default_value_t = 2)]
    layers: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    popularity: PopularityArg,
    /// Decay ratio of the exponential popularity model.
    #[arg(long, default_value_t = 0.7)]
    decay: f64,
    /// Explicit per-layer budgets in Mb, comma separated.
    #[arg(long, value_delimiter = ',')]
    budgets: Option<Vec<f64>>,
    /// Linear budget schedule slope x in `B_c = x*c + y` Mb.
    #[arg(long, default_value_t = 2.0)]
    budget_x: f64,
    /// Linear budget schedule offset y in `B_c = x*c + y` Mb.
    #[arg(long, default_value_t = 2.0)]
    budget_y: f64,
    /// Client proportions, comma separated (default: uniform).
    #[arg(long, value_delimiter = ',')]
    proportions: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1.0)]
    quantum: f64,
    /// Rate levels in Mb, comma separated, starting at 0.
    #[arg(long, value_delimiter = ',', default_value = "0.0,1.0,2.0")]
    levels: Vec<f64>,
    #[arg(long, value_enum, default_value = "cumulative")]
    budget_mode: BudgetMode,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Texture-rate decay constant per Mb.
    #[arg(long, default_value_t = 2.3)]
    kappa: f64,
    /// Mean MSE of inpainted areas.
    #[arg(long, default_value_t = 900.0)]
    inpaint: f64,
    /// Write to this path instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn scenario_exit(err: &ScenarioError) -> i32 {
    match err {
        ScenarioError::Io { .. } => EXIT_GENERAL,
        ScenarioError::Parse { .. } => EXIT_PARSE,
        ScenarioError::Validation(_) => EXIT_VALIDATION,
    }
}

fn solve_exit(err: &SolveError) -> i32 {
    match err {
        SolveError::Infeasible(_) => EXIT_INFEASIBLE,
        SolveError::SizeGuardExceeded { .. } | SolveError::CapExceeded { .. } => EXIT_SIZE_GUARD,
    }
}

fn load_with_overrides(common: &CommonRunArgs) -> Result<ScenarioSpec, i32> {
    let mut spec = load_scenario(&common.scenario).map_err(|e| {
        eprintln!("error: {e}");
        scenario_exit(&e)
    })?;
    if let Some(mode) = common.budget_mode {
        spec.budget_mode = mode;
    }
    Ok(spec)
}

fn limits_from(common: &CommonRunArgs) -> SolverLimits {
    let mut limits = SolverLimits::default();
    if let Some(cap) = common.cap {
        limits.optimal_state_cap = cap;
    }
    if let Some(cap) = common.brute_cap {
        limits.brute_assignment_cap = cap;
    }
    limits
}

fn report_options(common: &CommonRunArgs) -> ReportOptions {
    ReportOptions {
        peak: common.peak,
        deterministic_timing: common.zero_time,
    }
}

fn cmd_validate(path: &PathBuf) -> i32 {
    match load_scenario(path) {
        Ok(spec) => {
            println!(
                "ok: {} views, {} rendered positions, {} layers, budget mode {}",
                spec.view_count(),
                spec.window.count(),
                spec.layer_count(),
                spec.budget_mode
            );
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            scenario_exit(&e)
        }
    }
}

fn emit_report(report: &Report, format: OutputFormat, cluster_path: Option<&PathBuf>) -> i32 {
    match format {
        OutputFormat::Table => print!("{}", report.table()),
        OutputFormat::Csv => print!("{}", report.detail_csv()),
    }
    if let Some(path) = cluster_path {
        if let Err(e) = std::fs::write(path, report.cluster_csv()) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return EXIT_GENERAL;
        }
    }
    EXIT_OK
}

fn cmd_solve(common: &CommonRunArgs, solver: SolverId) -> i32 {
    let spec = match load_with_overrides(common) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let oracle = match DistortionOracle::new(&spec) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_VALIDATION;
        }
    };
    let limits = limits_from(common);
    match solve(solver, &spec, &oracle, &limits) {
        Ok(result) => {
            let record = RunRecord {
                scenario_id: spec.name.clone(),
                seed: 0,
                solver,
                result,
            };
            let report = Report::new(spec, vec![record], report_options(common));
            emit_report(&report, common.output, None)
        }
        Err(e) => {
            eprintln!("error: {e}");
            solve_exit(&e)
        }
    }
}

fn cmd_compare(
    common: &CommonRunArgs,
    solvers: &[SolverId],
    seeds: u64,
    cluster_path: Option<&PathBuf>,
    sequential: bool,
) -> i32 {
    if solvers.len() < 2 {
        eprintln!("error: compare needs at least two solvers");
        return EXIT_USAGE;
    }
    let spec = match load_with_overrides(common) {
        Ok(s) => s,
        Err(code) => return code,
    };
    let limits = limits_from(common);
    let records = match crate::report::run_batch(&spec, solvers, seeds, &limits, !sequential) {
        Ok(r) => r,
        Err(BatchError::NotReseedable) => {
            eprintln!("error: {}", BatchError::NotReseedable);
            return EXIT_VALIDATION;
        }
        Err(BatchError::Solve {
            scenario_id,
            solver,
            source,
        }) => {
            eprintln!("error: {scenario_id} / {solver}: {source}");
            return solve_exit(&source);
        }
    };
    let report = Report::new(spec, records, report_options(common));
    emit_report(&report, common.output, cluster_path)
}

fn cmd_gen(args: &GenArgs) -> i32 {
    let spec = if let Some(id) = args.preset {
        preset(id)
    } else {
        let cfg = GeneratorConfig {
            name: args.name.clone(),
            views: args.views,
            window_positions: args.positions,
            spacing: args.spacing,
            layers: args.layers,
            popularity: match args.popularity {
                PopularityArg::Uniform => PopularityModel::Uniform,
                PopularityArg::Exponential => PopularityModel::Exponential { decay: args.decay },
            },
            budgets: match &args.budgets {
                Some(list) => BudgetSchedule::ExplicitMb(list.clone()),
                None => BudgetSchedule::Linear {
                    x: args.budget_x,
                    y: args.budget_y,
                },
            },
            proportions: args.proportions.clone(),
            quantum_mb: args.quantum,
            levels_mb: args.levels.clone(),
            budget_mode: args.budget_mode,
            distortion: GenDistortion {
                kappa_per_mb: args.kappa,
                inpaint_mse: args.inpaint,
                ..Default::default()
            },
            seed: args.seed,
        };
        match gen_synthetic(&cfg) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("error: {e}");
                return EXIT_VALIDATION;
            }
        }
    };
    match &args.out {
        Some(path) => match save_scenario(&spec, path) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                eprintln!("error: {e}");
                EXIT_GENERAL
            }
        },
        None => {
            print!("{}", scenario_to_string(&spec));
            EXIT_OK
        }
    }
}

/// Parses arguments and runs the selected subcommand, returning the process
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.exit_code() == 0 {
                EXIT_OK
            } else {
                EXIT_USAGE
            };
            let _ = e.print();
            return code;
        }
    };
    match &cli.command {
        Command::Validate { scenario } => cmd_validate(scenario),
        Command::Solve { common, solver } => cmd_solve(common, *solver),
        Command::Compare {
            common,
            solver,
            seeds,
            cluster_csv,
            sequential,
        } => cmd_compare(common, solver, *seeds, cluster_csv.as_ref(), *sequential),
        Command::Gen { args } => cmd_gen(args),
    }
}
