//! Result reporting: solver-run summaries, per-cluster quality, per-layer
//! rate vectors in dense `{r_1, ..., r_V}` form, and schema-stable CSV
//! output for batch comparisons.

use rayon::prelude::*;

use crate::distortion::{DistortionConfig, DistortionOracle};
use crate::model::{LayerAssignment, ScenarioSpec};
use crate::solver::{solve, SolveError, SolveResult, SolverId, SolverLimits};

/// Fixed column set of the detail CSV.
pub const CSV_HEADER: &str =
    "scenario,solver,layer,view,rate_mb,layer_mse,layer_db,objective_db,wall_ms";

/// Fixed column set of the per-cluster quality CSV.
pub const CLUSTER_CSV_HEADER: &str = "scenario,solver,cluster,psnr_db";

/// Reporting knobs: luma peak for PSNR and whether wall-clock fields are
/// zeroed for reproducible output.
#[derive(Debug, Clone, Copy)]
pub struct ReportOptions {
    pub peak: f64,
    pub deterministic_timing: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self {
            peak: 255.0,
            deterministic_timing: false,
        }
    }
}

/// `10 log10(peak^2 / mse)`; infinite for zero distortion.
pub fn mse_to_db(mse: f64, peak: f64) -> f64 {
    if mse <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (peak * peak / mse).log10()
    }
}

fn fmt_db(db: f64) -> String {
    if db.is_infinite() {
        "inf".to_string()
    } else {
        format!("{db:.6}")
    }
}

/// Expected Y-PSNR per client cluster: entry c is the quality experienced by
/// clients receiving layers 1..=c. Nondecreasing in c for every feasible
/// assignment.
pub fn cluster_quality_report(result: &SolveResult, peak: f64) -> Vec<(usize, f64)> {
    result
        .layer_distortions
        .iter()
        .enumerate()
        .map(|(i, &d)| (i + 1, mse_to_db(d, peak)))
        .collect()
}

/// Per-layer rates in megabits as a dense vector over all views, zero
/// meaning the view is not transmitted in that layer.
pub fn layer_rate_vector_mb(spec: &ScenarioSpec, a: &LayerAssignment, c: usize) -> Vec<f64> {
    (0..spec.view_count())
        .map(|v| {
            a.layers[c - 1]
                .get(&v)
                .map_or(0.0, |&units| spec.grid.units_to_mb(units))
        })
        .collect()
}

/// One solver run on one (possibly reseeded) scenario.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario_id: String,
    pub seed: u64,
    pub solver: SolverId,
    pub result: SolveResult,
}

fn wall_ms(result: &SolveResult, opts: &ReportOptions) -> u128 {
    if opts.deterministic_timing {
        0
    } else {
        result.wall.as_millis()
    }
}

/// Detail CSV rows for one run: one row per transmitted view, carrying its
/// layer's distortion and the run objective. No header.
pub fn csv_rows(
    scenario_id: &str,
    spec: &ScenarioSpec,
    result: &SolveResult,
    opts: &ReportOptions,
) -> String {
    let mut out = String::new();
    let objective_db = fmt_db(mse_to_db(result.objective, opts.peak));
    let ms = wall_ms(result, opts);
    for c in 1..=spec.layer_count() {
        let layer_mse = result.layer_distortions[c - 1];
        let layer_db = fmt_db(mse_to_db(layer_mse, opts.peak));
        for (&view, &units) in &result.assignment.layers[c - 1] {
            out.push_str(&format!(
                "{scenario_id},{},{c},{},{:.6},{layer_mse:.6},{layer_db},{objective_db},{ms}\n",
                result.solver,
                view + 1,
                spec.grid.units_to_mb(units),
            ));
        }
    }
    out
}

/// Complete detail CSV for a batch, header included. Reseeding never
/// changes the rate grid or layer structure, so the base spec serves every
/// record for unit conversion.
pub fn batch_csv(records: &[RunRecord], spec: &ScenarioSpec, opts: &ReportOptions) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&csv_rows(&r.scenario_id, spec, &r.result, opts));
    }
    out
}

/// Per-cluster PSNR CSV for a batch, header included: C rows per run,
/// nondecreasing within a run.
pub fn cluster_csv(records: &[RunRecord], opts: &ReportOptions) -> String {
    let mut out = String::from(CLUSTER_CSV_HEADER);
    out.push('\n');
    for r in records {
        for (c, db) in cluster_quality_report(&r.result, opts.peak) {
            out.push_str(&format!(
                "{},{},{c},{}\n",
                r.scenario_id,
                r.solver,
                fmt_db(db)
            ));
        }
    }
    out
}

/// A complete report over one or more solver runs on (seed variants of)
/// one scenario: per-run results plus every rendering the CLI exposes.
#[derive(Debug, Clone)]
pub struct Report {
    pub scenario: ScenarioSpec,
    pub options: ReportOptions,
    pub records: Vec<RunRecord>,
}

impl Report {
    pub fn new(scenario: ScenarioSpec, records: Vec<RunRecord>, options: ReportOptions) -> Self {
        Self {
            scenario,
            options,
            records,
        }
    }

    /// Detail CSV in the fixed nine-column schema, header included.
    pub fn detail_csv(&self) -> String {
        batch_csv(&self.records, &self.scenario, &self.options)
    }

    /// Per-cluster PSNR CSV, header included.
    pub fn cluster_csv(&self) -> String {
        cluster_csv(&self.records, &self.options)
    }

    pub fn mean_objectives(&self) -> Vec<(SolverId, f64)> {
        mean_objectives(&self.records)
    }

    /// Human-readable rendering: one block per run, with mean objectives
    /// appended when the report covers more than one run.
    pub fn table(&self) -> String {
        let mut out = format!(
            "scenario: {} (budget mode: {})\n",
            self.scenario.name, self.scenario.budget_mode
        );
        for r in &self.records {
            if self.records.len() > 1 {
                out.push_str(&format!("=== {} / {}\n", r.scenario_id, r.solver));
            }
            out.push_str(&render_table(&self.scenario, &r.result, &self.options));
        }
        if self.records.len() > 1 {
            out.push_str("--- mean objective per solver\n");
            for (solver, mean) in self.mean_objectives() {
                out.push_str(&format!(
                    "{solver}: {mean:.6} MSE = {} dB\n",
                    fmt_db(mse_to_db(mean, self.options.peak))
                ));
            }
        }
        out
    }
}

/// Human-readable block for one run.
pub fn render_table(spec: &ScenarioSpec, result: &SolveResult, opts: &ReportOptions) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "solver: {}   states: {}   wall: {} ms\n",
        result.solver,
        result.states_expanded,
        wall_ms(result, opts)
    ));
    out.push_str(&format!(
        "objective: {:.6} MSE = {} dB\n",
        result.objective,
        fmt_db(mse_to_db(result.objective, opts.peak))
    ));
    for c in 1..=spec.layer_count() {
        let rates = layer_rate_vector_mb(spec, &result.assignment, c);
        let rendered: Vec<String> = rates.iter().map(|r| format!("{r}")).collect();
        out.push_str(&format!(
            "L{c} = {{{}}} Mb   D_{c} = {:.6} MSE ({} dB)\n",
            rendered.join(" "),
            result.layer_distortions[c - 1],
            fmt_db(mse_to_db(result.layer_distortions[c - 1], opts.peak))
        ));
    }
    out.push_str("per-cluster PSNR:");
    for (c, db) in cluster_quality_report(result, opts.peak) {
        out.push_str(&format!("  L1..{c}: {} dB", fmt_db(db)));
    }
    out.push('\n');
    out
}

/// Rebuilds a scenario with a different disocclusion-noise seed. Only
/// parametric scenarios can be reseeded.
pub fn reseed_scenario(spec: &ScenarioSpec, seed: u64) -> Option<ScenarioSpec> {
    let mut out = spec.clone();
    match &mut out.distortion {
        DistortionConfig::Parametric(p) => {
            p.noise_seed = seed;
            out.name = format!("{}#{seed}", spec.name);
            Some(out)
        }
        DistortionConfig::Tabulated(_) => None,
    }
}

/// Error from a batch comparison run.
#[derive(Debug, thiserror::Error)]
pub enum BatchError {
    #[error("scenario uses a tabulated distortion table and cannot be reseeded")]
    NotReseedable,
    #[error("{scenario_id} / {solver}: {source}")]
    Solve {
        scenario_id: String,
        solver: SolverId,
        #[source]
        source: SolveError,
    },
}

/// Runs every solver on every seed variant of the base scenario. With
/// `seeds == 0` the base scenario is run exactly once per solver. Records
/// come back sorted by (seed, solver name); the parallel and sequential
/// paths produce identical output.
pub fn run_batch(
    base: &ScenarioSpec,
    solvers: &[SolverId],
    seeds: u64,
    limits: &SolverLimits,
    parallel: bool,
) -> Result<Vec<RunRecord>, BatchError> {
    let variants: Vec<(u64, ScenarioSpec)> = if seeds == 0 {
        vec![(0, base.clone())]
    } else {
        (0..seeds)
            .map(|s| {
                reseed_scenario(base, s)
                    .ok_or(BatchError::NotReseedable)
                    .map(|v| (s, v))
            })
            .collect::<Result<_, _>>()?
    };

    let run_one = |(seed, spec): &(u64, ScenarioSpec)| -> Result<Vec<RunRecord>, BatchError> {
        let oracle = DistortionOracle::new(spec).expect("validated scenario");
        solvers
            .iter()
            .map(|&solver| {
                let result =
                    solve(solver, spec, &oracle, limits).map_err(|source| BatchError::Solve {
                        scenario_id: spec.name.clone(),
                        solver,
                        source,
                    })?;
                Ok(RunRecord {
                    scenario_id: spec.name.clone(),
                    seed: *seed,
                    solver,
                    result,
                })
            })
            .collect()
    };

    let nested: Result<Vec<Vec<RunRecord>>, BatchError> = if parallel {
        variants.par_iter().map(run_one).collect()
    } else {
        variants.iter().map(run_one).collect()
    };
    let mut records: Vec<RunRecord> = nested?.into_iter().flatten().collect();
    records.sort_by(|a, b| {
        a.seed
            .cmp(&b.seed)
            .then_with(|| a.solver.to_string().cmp(&b.solver.to_string()))
    });
    Ok(records)
}

/// Mean objective per solver over a batch, sorted by solver name.
pub fn mean_objectives(records: &[RunRecord]) -> Vec<(SolverId, f64)> {
    let mut by_solver: Vec<(SolverId, f64, u64)> = Vec::new();
    for r in records {
        match by_solver.iter_mut().find(|(s, _, _)| *s == r.solver) {
            Some((_, sum, n)) => {
                *sum += r.result.objective;
                *n += 1;
            }
            None => by_solver.push((r.solver, r.result.objective, 1)),
        }
    }
    by_solver.sort_by_key(|(s, _, _)| s.to_string());
    by_solver
        .into_iter()
        .map(|(s, sum, n)| (s, sum / n as f64))
        .collect()
}
