//! Exhaustive oracle: enumerates every assignment of each view to a
//! (layer, nonzero rate) pair or "absent", filters by feasibility and
//! returns the exact minimum. Used to verify the exact DP on small
//! instances; refuses anything larger than the assignment cap.

use std::time::Instant;

use crate::distortion::{layer_distortion_direct, DistortionOracle};
use crate::model::{LayerAssignment, ScenarioSpec};
use crate::solver::{
    check_endpoint_budget, finish_direct, SolveError, SolveResult, SolverId, SolverLimits,
};

/// Decodes one per-view code into (layer index 0-based, level index).
/// Code 0 is "absent"; nonzero codes enumerate layers slowest, levels
/// fastest, so the all-absent assignment is lexicographically first.
fn decode(code: u64, nonzero_levels: u64) -> Option<(usize, usize)> {
    if code == 0 {
        return None;
    }
    let c = (code - 1) / nonzero_levels;
    let l = (code - 1) % nonzero_levels;
    Some((c as usize, l as usize + 1))
}

pub fn solve_bruteforce(
    spec: &ScenarioSpec,
    oracle: &DistortionOracle,
    limits: &SolverLimits,
) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    check_endpoint_budget(spec)?;

    let v = spec.view_count();
    let layers = spec.layer_count() as u64;
    let nonzero = (spec.grid.levels.len() - 1) as u64;
    let codes_per_view = layers * nonzero + 1;
    let count = (codes_per_view as f64).powi(v as i32);
    if count > limits.brute_assignment_cap as f64 {
        return Err(SolveError::CapExceeded {
            count,
            cap: limits.brute_assignment_cap,
        });
    }

    let mut codes = vec![0u64; v];
    let mut enumerated: u64 = 0;
    let mut best: Option<(f64, LayerAssignment)> = None;
    loop {
        enumerated += 1;
        let mut a = LayerAssignment::empty(spec.layer_count());
        for (view, &code) in codes.iter().enumerate() {
            if let Some((layer, level)) = decode(code, nonzero) {
                a.layers[layer].insert(view, spec.grid.levels[level]);
            }
        }
        if spec.feasible(&a).ok() {
            let mut obj = 0.0;
            for c in 1..=spec.layer_count() {
                obj += spec.clients.proportions[c - 1]
                    * layer_distortion_direct(oracle, spec, &a, c)
                        .expect("assignment checked feasible");
            }
            // Strict improvement keeps the first (lexicographically
            // smallest) encoding among exact ties.
            if best.as_ref().is_none_or(|(b, _)| obj < *b) {
                best = Some((obj, a));
            }
        }
        // Advance the odometer; the last view is the fastest digit so the
        // scan order is lexicographic in the encoding.
        let mut pos = v;
        let wrapped = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            codes[pos] += 1;
            if codes[pos] < codes_per_view {
                break false;
            }
            codes[pos] = 0;
        };
        if wrapped {
            break;
        }
    }

    match best {
        Some((_, assignment)) => Ok(finish_direct(
            SolverId::Bruteforce,
            spec,
            oracle,
            assignment,
            enumerated,
            started,
        )),
        None => Err(SolveError::Infeasible(
            "no feasible assignment in exhaustive scan".to_string(),
        )),
    }
}
