//! Distance-based baseline: per layer, pick the (view count, uniform rate)
//! pair that uses the most of the remaining budget, then place the views so
//! the mean distance from each rendered position to its nearest transmitted
//! reference is smallest. Ignores popularity and scene content; layers are
//! filled in successive order like the greedy solver.

use std::time::Instant;

use crate::distortion::DistortionOracle;
use crate::model::{BudgetMode, LayerAssignment, ScenarioSpec, TIE_EPS};
use crate::solver::{check_endpoint_budget, finish, SolveError, SolveResult, SolverId};

/// Mean over rendered positions of the distance to the nearest reference.
fn mean_reference_distance(spec: &ScenarioSpec, refs: &[usize]) -> f64 {
    let total: f64 = spec
        .window
        .positions
        .iter()
        .map(|&pu| {
            refs.iter()
                .map(|&v| (spec.views.positions[v] - pu).abs())
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / spec.window.count() as f64
}

/// Visits all sorted index subsets of `pool` of size `n` in lexicographic
/// order.
fn for_each_combination(pool: &[usize], n: usize, mut visit: impl FnMut(&[usize])) {
    if n > pool.len() {
        return;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    loop {
        let subset: Vec<usize> = idx.iter().map(|&i| pool[i]).collect();
        visit(&subset);
        // Advance to the next combination.
        let mut i = n;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + pool.len() - n {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..n {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

pub fn solve_baseline(
    spec: &ScenarioSpec,
    oracle: &DistortionOracle,
) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    check_endpoint_budget(spec)?;

    let last = spec.last_view();
    let mut assignment = LayerAssignment::empty(spec.layer_count());
    let mut selected: Vec<usize> = Vec::new();
    let mut selected_units: u64 = 0;
    let mut placements_scored: u64 = 0;

    for c in 1..=spec.layer_count() {
        let residual = match spec.budget_mode {
            BudgetMode::Cumulative => spec.clients.budgets[c - 1] as u64 - selected_units,
            BudgetMode::PerLayer => spec.clients.budgets[c - 1] as u64,
        };
        let available: Vec<usize> = (0..spec.view_count())
            .filter(|v| !selected.contains(v))
            .collect();
        let min_views = if c == 1 { 2 } else { 1 };
        if available.len() < min_views {
            continue;
        }

        // Use as much of the layer budget as possible: maximize n * rate,
        // ties toward more views, then the lower rate.
        let mut plan: Option<(u64, usize, usize)> = None; // (product, n, level)
        for n in min_views..=available.len() {
            for (level, units) in spec.grid.nonzero_levels() {
                let product = n as u64 * units as u64;
                if product > residual {
                    continue;
                }
                let better = match plan {
                    None => true,
                    Some((bp, bn, bl)) => {
                        product > bp
                            || (product == bp && n > bn)
                            || (product == bp && n == bn && units < spec.grid.levels[bl])
                    }
                };
                if better {
                    plan = Some((product, n, level));
                }
            }
        }
        let Some((_, n, level)) = plan else {
            if c == 1 {
                return Err(SolveError::Infeasible(
                    "layer 1 cannot afford both endpoints".to_string(),
                ));
            }
            continue;
        };
        if c == 1 && (2 * spec.grid.levels[level] as u64) > residual {
            return Err(SolveError::Infeasible(
                "layer 1 cannot afford both endpoints".to_string(),
            ));
        }

        // Choose which n views to send: exhaustive over placements,
        // smallest mean distance wins, ties toward the lexicographically
        // smallest index set.
        let mut best: Option<(f64, Vec<usize>)> = None;
        let mut consider = |subset: &[usize]| {
            let mut refs = selected.clone();
            refs.extend_from_slice(subset);
            let score = mean_reference_distance(spec, &refs);
            placements_scored += 1;
            if best.as_ref().is_none_or(|(b, _)| score < *b - TIE_EPS) {
                best = Some((score, subset.to_vec()));
            }
        };
        if c == 1 {
            // Both endpoints are mandatory in the first layer.
            let interior: Vec<usize> = available
                .iter()
                .copied()
                .filter(|&v| v != 0 && v != last)
                .collect();
            for_each_combination(&interior, n - 2, |subset| {
                let mut full = vec![0];
                full.extend_from_slice(subset);
                full.push(last);
                full.sort_unstable();
                consider(&full);
            });
        } else {
            for_each_combination(&available, n, &mut consider);
        }
        let (_, chosen) = best.expect("at least one placement exists");

        let units = spec.grid.levels[level];
        for &v in &chosen {
            assignment.layers[c - 1].insert(v, units);
            selected.push(v);
            selected_units += units as u64;
        }
        selected.sort_unstable();
    }

    Ok(finish(
        SolverId::Baseline,
        spec,
        oracle,
        assignment,
        placements_scored,
        started,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{gen_synthetic, BudgetSchedule, GeneratorConfig};

    #[test]
    fn equally_spaced_selection_under_symmetry() {
        // 5 equally spaced views, budget for exactly 3 at the single rate:
        // the distance-minimizing pick is the ends plus the middle.
        let spec = gen_synthetic(&GeneratorConfig {
            views: 5,
            window_positions: 9,
            layers: 1,
            levels_mb: vec![0.0, 1.0],
            budgets: BudgetSchedule::ExplicitMb(vec![3.0]),
            ..Default::default()
        })
        .unwrap();
        let oracle = DistortionOracle::new(&spec).unwrap();
        let r = solve_baseline(&spec, &oracle).unwrap();
        let views: Vec<usize> = r.assignment.layers[0].keys().copied().collect();
        assert_eq!(views, vec![0, 2, 4]);
    }

    #[test]
    fn rate_count_tie_prefers_more_views() {
        // Budget 4 with rates {1, 2}: (n=4, r=1) and (n=2, r=2) both use
        // the full budget; more views win.
        let spec = gen_synthetic(&GeneratorConfig {
            views: 5,
            window_positions: 9,
            layers: 1,
            levels_mb: vec![0.0, 1.0, 2.0],
            budgets: BudgetSchedule::ExplicitMb(vec![4.0]),
            ..Default::default()
        })
        .unwrap();
        let oracle = DistortionOracle::new(&spec).unwrap();
        let r = solve_baseline(&spec, &oracle).unwrap();
        assert_eq!(r.assignment.layers[0].len(), 4);
        assert!(r.assignment.layers[0].values().all(|&u| u == 1));
    }

    #[test]
    fn fills_successive_layers_with_uniform_rates() {
        let spec = gen_synthetic(&GeneratorConfig {
            views: 6,
            window_positions: 9,
            layers: 2,
            levels_mb: vec![0.0, 1.0, 2.0],
            budgets: BudgetSchedule::ExplicitMb(vec![4.0, 8.0]),
            ..Default::default()
        })
        .unwrap();
        let oracle = DistortionOracle::new(&spec).unwrap();
        let r = solve_baseline(&spec, &oracle).unwrap();
        assert!(spec.feasible(&r.assignment).ok());
        for layer in &r.assignment.layers {
            let rates: Vec<u32> = layer.values().copied().collect();
            assert!(rates.windows(2).all(|w| w[0] == w[1]), "uniform per layer");
        }
    }
}
