//! Solver library for layered interactive multiview streaming: given a set
//! of captured camera views, a navigation window of renderable positions,
//! a discrete rate grid and per-cluster layer budgets, compute the joint
//! assignment of views to layers and coding rates to views that minimizes
//! the expected navigation distortion across heterogeneous clients.
//!
//! The crate ships four solvers over a shared synthesis-distortion model:
//!
//! - [`solver::solve_optimal`] — exact dynamic program over reference
//!   spans, endpoint rates and residual budget vectors;
//! - [`solver::solve_greedy`] — near-optimal per-layer dynamic program,
//!   exponentially cheaper in the number of layers;
//! - [`solver::solve_baseline`] — distance-based view placement with
//!   uniform per-layer rates;
//! - [`solver::solve_bruteforce`] — exhaustive oracle for verification on
//!   small instances.
//!
//! Scenario files, bundled dataset presets and a deterministic synthetic
//! generator live in [`scenario`]; reporting (PSNR, per-cluster quality,
//! CSV) in [`report`].
//!
//! ```
//! use mvlayers::{preset, solve_greedy, DistortionOracle, PresetId};
//!
//! let spec = preset(PresetId::Statue);
//! let oracle = DistortionOracle::new(&spec).unwrap();
//! let result = solve_greedy(&spec, &oracle).unwrap();
//!
//! assert!(spec.feasible(&result.assignment).ok());
//! // Quality never degrades as clients receive more layers.
//! assert!(result.layer_distortions[0] >= result.layer_distortions[1]);
//! ```

pub mod cli;
pub mod distortion;
pub mod model;
pub mod report;
pub mod scenario;
pub mod solver;

pub use distortion::{
    layer_distortion, layer_distortion_direct, objective, segment_distortion, synth_distortion,
    DistortionConfig, DistortionOracle, SynthesisParams, ViewRdCurve,
};
pub use model::{
    prefix_views, BudgetMode, ClientProfile, Feasibility, LayerAssignment, NavigationWindow,
    RateGrid, ScenarioSpec, ValidationError, ViewSet,
};
pub use report::{cluster_quality_report, mse_to_db, run_batch, Report, ReportOptions, RunRecord};
pub use scenario::{
    gen_synthetic, load_scenario, parse_scenario_str, preset, save_scenario, scenario_to_string,
    GeneratorConfig, PresetId, ScenarioError,
};
pub use solver::{
    solve, solve_baseline, solve_bruteforce, solve_greedy, solve_optimal, SolveError, SolveResult,
    SolverId, SolverLimits,
};
