//! The four allocation algorithms: exact dynamic program, per-layer greedy
//! dynamic program, distance-based baseline and the exhaustive oracle.
//!
//! Every solver is a pure function of an immutable spec and oracle: results
//! are bit-identical across runs and thread counts. Ties are always broken
//! toward the first candidate in a fixed iteration order, and a candidate
//! only replaces the incumbent when it improves by more than
//! [`crate::model::TIE_EPS`].

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::distortion::{layer_distortion, layer_distortion_direct, objective, DistortionOracle};
use crate::model::{LayerAssignment, ScenarioSpec};

pub mod baseline;
pub mod brute;
pub mod greedy;
pub mod optimal;

pub use baseline::solve_baseline;
pub use brute::solve_bruteforce;
pub use greedy::solve_greedy;
pub use optimal::solve_optimal;
pub use optimal::{DpState, DpTable};

/// Solver selector, as spelled on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
#[clap(rename_all = "lower")]
pub enum SolverId {
    Optimal,
    Greedy,
    Baseline,
    Bruteforce,
}

impl std::fmt::Display for SolverId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolverId::Optimal => write!(f, "optimal"),
            SolverId::Greedy => write!(f, "greedy"),
            SolverId::Baseline => write!(f, "baseline"),
            SolverId::Bruteforce => write!(f, "bruteforce"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SolveError {
    /// No feasible assignment exists (both window endpoints must fit the
    /// first layer budget).
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// The optimal solver refused the instance: the state-space estimate
    /// exceeds the configured cap.
    #[error("size guard: estimated {estimate:.3e} DP states exceed cap {cap:.3e}")]
    SizeGuardExceeded { estimate: f64, cap: f64 },
    /// The exhaustive oracle refused the instance.
    #[error("cap exceeded: {count:.3e} assignments exceed cap {cap}")]
    CapExceeded { count: f64, cap: u64 },
}

/// Instance-size limits for the exact solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverLimits {
    /// Cap on the optimal DP state-space estimate `V^2 * B_max^(C+2)`.
    pub optimal_state_cap: f64,
    /// Cap on the number of assignments the exhaustive oracle enumerates.
    pub brute_assignment_cap: u64,
}

impl Default for SolverLimits {
    fn default() -> Self {
        Self {
            optimal_state_cap: 1e8,
            brute_assignment_cap: 2_000_000,
        }
    }
}

/// A solver's answer: the assignment, its per-layer distortions, the
/// objective value and run metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub solver: SolverId,
    pub assignment: LayerAssignment,
    /// `D_c` for c = 1..=C.
    pub layer_distortions: Vec<f64>,
    /// `sum_c p(c) * D_c`.
    pub objective: f64,
    pub states_expanded: u64,
    pub wall: Duration,
}

/// Runs the selected solver.
pub fn solve(
    id: SolverId,
    spec: &ScenarioSpec,
    oracle: &DistortionOracle,
    limits: &SolverLimits,
) -> Result<SolveResult, SolveError> {
    match id {
        SolverId::Optimal => solve_optimal(spec, oracle, limits),
        SolverId::Greedy => solve_greedy(spec, oracle),
        SolverId::Baseline => solve_baseline(spec, oracle),
        SolverId::Bruteforce => solve_bruteforce(spec, oracle, limits),
    }
}

/// Both window endpoints must be coded in layer 1, so a feasible assignment
/// exists iff twice the cheapest nonzero level fits the first budget.
pub(crate) fn check_endpoint_budget(spec: &ScenarioSpec) -> Result<(), SolveError> {
    let min = spec
        .grid
        .min_nonzero()
        .expect("validated grid has a nonzero level") as u64;
    let b1 = spec.clients.budgets[0] as u64;
    if 2 * min > b1 {
        return Err(SolveError::Infeasible(format!(
            "endpoints need {} units in layer 1, budget is {b1}",
            2 * min
        )));
    }
    Ok(())
}

/// Assembles a [`SolveResult`], recomputing the per-layer distortions and
/// objective through the segment route.
pub(crate) fn finish(
    solver: SolverId,
    spec: &ScenarioSpec,
    oracle: &DistortionOracle,
    assignment: LayerAssignment,
    states_expanded: u64,
    started: Instant,
) -> SolveResult {
    let layer_distortions: Vec<f64> = (1..=spec.layer_count())
        .map(|c| {
            layer_distortion(oracle, spec, &assignment, c)
                .expect("solver emitted an infeasible assignment")
        })
        .collect();
    let objective =
        objective(oracle, spec, &assignment).expect("solver emitted an infeasible assignment");
    SolveResult {
        solver,
        assignment,
        layer_distortions,
        objective,
        states_expanded,
        wall: started.elapsed(),
    }
}

/// Same as [`finish`], but evaluated through the direct per-position route;
/// used by the exhaustive oracle so its reported value stays independent of
/// the segment decomposition the dynamic programs rely on.
pub(crate) fn finish_direct(
    solver: SolverId,
    spec: &ScenarioSpec,
    oracle: &DistortionOracle,
    assignment: LayerAssignment,
    states_expanded: u64,
    started: Instant,
) -> SolveResult {
    let layer_distortions: Vec<f64> = (1..=spec.layer_count())
        .map(|c| {
            layer_distortion_direct(oracle, spec, &assignment, c)
                .expect("solver emitted an infeasible assignment")
        })
        .collect();
    let objective = layer_distortions
        .iter()
        .zip(&spec.clients.proportions)
        .map(|(d, p)| p * d)
        .sum();
    SolveResult {
        solver,
        assignment,
        layer_distortions,
        objective,
        states_expanded,
        wall: started.elapsed(),
    }
}
