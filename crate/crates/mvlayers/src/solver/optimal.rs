//! Exact solver: memoized recursion over (reference span, endpoint rates,
//! residual budget vector) states.
//!
//! `phi(left, right, rl, rr, b)` is the minimum expected distortion
//! contributed by rendered positions in `[left, right)` for client clusters
//! c..=C, where c is implied by the length of the residual vector `b`, the
//! span endpoints are already coded at levels rl, rr, and `b[i]` is the
//! budget still available to new views placed inside the span at layers
//! c+i and below. Each state decides between:
//!
//! - stop: no further layer-c view in the span; pay the layer-c segment
//!   between the endpoints and recurse into layer c+1, or
//! - insert the leftmost new layer-c view `v_i` at some nonzero level,
//!   paying the layer-c segment `[left, v_i)`, a layer-(c+1..C) subproblem
//!   on `[left, v_i]` with a budget split chosen here, and a layer-(c..C)
//!   subproblem on `[v_i, right)` with the remainder.
//!
//! Budget accounting under cumulative budgets: a view placed at layer c
//! consumes from the residual of every layer c..=C, because its rate counts
//! against each cumulative constraint from its own layer up. Under
//! per-layer budgets only the residual of layer c is consumed. Cumulative
//! residual vectors are normalized to their suffix minima: a layer cannot
//! usefully spend more than any later layer allows, so states that differ
//! only above that envelope are equivalent.

use std::collections::HashMap;
use std::time::Instant;

use crate::distortion::{segment_distortion, DistortionOracle};
use crate::model::{BudgetMode, LayerAssignment, ScenarioSpec, TIE_EPS};
use crate::solver::{
    check_endpoint_budget, finish, SolveError, SolveResult, SolverId, SolverLimits,
};

/// One subproblem key. The layer index is implied: a residual vector of
/// length k addresses layers (C - k + 1)..=C.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct DpState {
    pub left: u32,
    pub right: u32,
    /// Level indices into the rate grid, nonzero.
    pub rate_left: u32,
    pub rate_right: u32,
    /// Residual budgets in quantum units for layers c..=C.
    pub residual: Vec<u32>,
}

#[derive(Debug, Clone)]
enum Decision {
    Stop,
    Insert {
        view: u32,
        level: u32,
        /// Budget vectors of the two child subproblems, already normalized.
        left_budget: Vec<u32>,
        right_budget: Vec<u32>,
    },
}

struct Entry {
    value: f64,
    decision: Decision,
}

/// Memoization store. Entries are written exactly once.
#[derive(Default)]
pub struct DpTable {
    entries: HashMap<DpState, Entry>,
}

impl DpTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    fn insert(&mut self, state: DpState, entry: Entry) {
        let prev = self.entries.insert(state, entry);
        debug_assert!(prev.is_none(), "DP entry overwritten");
    }
}

/// Suffix-minimum envelope; identity under per-layer budgets.
fn normalize(mode: BudgetMode, mut b: Vec<u32>) -> Vec<u32> {
    if mode == BudgetMode::Cumulative {
        for i in (0..b.len().saturating_sub(1)).rev() {
            b[i] = b[i].min(b[i + 1]);
        }
    }
    b
}

struct Solver<'a> {
    spec: &'a ScenarioSpec,
    oracle: &'a DistortionOracle,
    /// Nonzero rate levels as (level index, quantum units), ascending.
    nonzero: Vec<(u32, u32)>,
    table: DpTable,
    /// Segment distortion cache keyed (left, rate_left, right, rate_right).
    segments: HashMap<(u32, u32, u32, u32), f64>,
}

impl<'a> Solver<'a> {
    fn layer_count(&self) -> usize {
        self.spec.layer_count()
    }

    fn proportion(&self, c: usize) -> f64 {
        self.spec.clients.proportions[c - 1]
    }

    fn segment(&mut self, left: u32, rate_left: u32, right: u32, rate_right: u32) -> f64 {
        let key = (left, rate_left, right, rate_right);
        if let Some(&v) = self.segments.get(&key) {
            return v;
        }
        let v = segment_distortion(
            self.oracle,
            &self.spec.window,
            left as usize,
            rate_left as usize,
            right as usize,
            rate_right as usize,
        );
        self.segments.insert(key, v);
        v
    }

    fn phi(&mut self, state: DpState) -> f64 {
        if let Some(e) = self.table.entries.get(&state) {
            return e.value;
        }
        let c = self.layer_count() - state.residual.len() + 1;
        let seg_full = self.segment(state.left, state.rate_left, state.right, state.rate_right);

        // Stop branch: endpoints stay adjacent at layer c.
        let stop_tail = if c < self.layer_count() {
            self.phi(DpState {
                residual: state.residual[1..].to_vec(),
                ..state.clone()
            })
        } else {
            0.0
        };
        let mut best = self.proportion(c) * seg_full + stop_tail;
        let mut decision = Decision::Stop;

        let nonzero = self.nonzero.clone();
        for view in (state.left + 1)..state.right {
            for &(level, units) in &nonzero {
                if units > state.residual[0] {
                    continue;
                }
                let post: Vec<u32> = match self.spec.budget_mode {
                    BudgetMode::Cumulative => {
                        // Nondecreasing residuals make b[0] the binding one.
                        state.residual.iter().map(|&b| b - units).collect()
                    }
                    BudgetMode::PerLayer => {
                        let mut p = state.residual.clone();
                        p[0] -= units;
                        p
                    }
                };
                let seg_left = self.segment(state.left, state.rate_left, view, level);
                let mut split = vec![0u32; post.len() - 1];
                loop {
                    let left_budget = normalize(self.spec.budget_mode, split.clone());
                    let right_budget = normalize(self.spec.budget_mode, {
                        let mut r = post.clone();
                        for (i, &s) in split.iter().enumerate() {
                            r[i + 1] -= s;
                        }
                        r
                    });
                    let mut value = self.proportion(c) * seg_left;
                    if c < self.layer_count() {
                        value += self.phi(DpState {
                            left: state.left,
                            right: view,
                            rate_left: state.rate_left,
                            rate_right: level,
                            residual: left_budget.clone(),
                        });
                    }
                    value += self.phi(DpState {
                        left: view,
                        right: state.right,
                        rate_left: level,
                        rate_right: state.rate_right,
                        residual: right_budget.clone(),
                    });
                    if value < best - TIE_EPS {
                        best = value;
                        decision = Decision::Insert {
                            view,
                            level,
                            left_budget,
                            right_budget,
                        };
                    }
                    // Next split, lexicographic with the last layer fastest.
                    let mut pos = split.len();
                    let wrapped = loop {
                        if pos == 0 {
                            break true;
                        }
                        pos -= 1;
                        split[pos] += 1;
                        if split[pos] <= post[pos + 1] {
                            break false;
                        }
                        split[pos] = 0;
                    };
                    if wrapped {
                        break;
                    }
                }
            }
        }

        self.table.insert(
            state,
            Entry {
                value: best,
                decision,
            },
        );
        best
    }

    /// Replays stored decisions, collecting (layer, view, level).
    fn extract(&self, state: &DpState, out: &mut Vec<(usize, u32, u32)>) {
        let c = self.layer_count() - state.residual.len() + 1;
        let entry = &self.table.entries[state];
        match &entry.decision {
            Decision::Stop => {
                if c < self.layer_count() {
                    self.extract(
                        &DpState {
                            residual: state.residual[1..].to_vec(),
                            ..state.clone()
                        },
                        out,
                    );
                }
            }
            Decision::Insert {
                view,
                level,
                left_budget,
                right_budget,
            } => {
                out.push((c, *view, *level));
                if c < self.layer_count() {
                    self.extract(
                        &DpState {
                            left: state.left,
                            right: *view,
                            rate_left: state.rate_left,
                            rate_right: *level,
                            residual: left_budget.clone(),
                        },
                        out,
                    );
                }
                self.extract(
                    &DpState {
                        left: *view,
                        right: state.right,
                        rate_left: *level,
                        rate_right: state.rate_right,
                        residual: right_budget.clone(),
                    },
                    out,
                );
            }
        }
    }
}

/// State-space estimate used by the size guard.
pub fn state_space_estimate(spec: &ScenarioSpec) -> f64 {
    let v = spec.view_count() as f64;
    let b_max = *spec.clients.budgets.iter().max().unwrap() as f64;
    v * v * b_max.powi(spec.layer_count() as i32 + 2)
}

pub fn solve_optimal(
    spec: &ScenarioSpec,
    oracle: &DistortionOracle,
    limits: &SolverLimits,
) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    check_endpoint_budget(spec)?;
    let estimate = state_space_estimate(spec);
    if estimate > limits.optimal_state_cap {
        return Err(SolveError::SizeGuardExceeded {
            estimate,
            cap: limits.optimal_state_cap,
        });
    }

    let mut solver = Solver {
        spec,
        oracle,
        nonzero: spec
            .grid
            .nonzero_levels()
            .map(|(l, u)| (l as u32, u))
            .collect(),
        table: DpTable::default(),
        segments: HashMap::new(),
    };
    let last = spec.last_view() as u32;
    let b1 = spec.clients.budgets[0];

    // The mandatory endpoints are layer-1 views: their rates consume every
    // cumulative budget (only the first one under per-layer accounting).
    let mut best: Option<(f64, u32, u32)> = None;
    for (l1, u1) in spec.grid.nonzero_levels() {
        for (lv, uv) in spec.grid.nonzero_levels() {
            let used = u1 + uv;
            if used > b1 {
                continue;
            }
            let residual: Vec<u32> = match spec.budget_mode {
                BudgetMode::Cumulative => spec
                    .clients
                    .budgets
                    .iter()
                    .map(|&b| b - used) // budgets nondecreasing, b >= b1 >= used
                    .collect(),
                BudgetMode::PerLayer => {
                    let mut r = spec.clients.budgets.clone();
                    r[0] -= used;
                    r
                }
            };
            let value = solver.phi(DpState {
                left: 0,
                right: last,
                rate_left: l1 as u32,
                rate_right: lv as u32,
                residual: normalize(spec.budget_mode, residual),
            });
            if best.as_ref().is_none_or(|(b, _, _)| value < *b - TIE_EPS) {
                best = Some((value, l1 as u32, lv as u32));
            }
        }
    }

    let (_, l1, lv) = best.ok_or_else(|| {
        SolveError::Infeasible("no endpoint rate pair fits the layer-1 budget".to_string())
    })?;

    let used = spec.grid.levels[l1 as usize] + spec.grid.levels[lv as usize];
    let residual: Vec<u32> = match spec.budget_mode {
        BudgetMode::Cumulative => spec.clients.budgets.iter().map(|&b| b - used).collect(),
        BudgetMode::PerLayer => {
            let mut r = spec.clients.budgets.clone();
            r[0] -= used;
            r
        }
    };
    let root = DpState {
        left: 0,
        right: last,
        rate_left: l1,
        rate_right: lv,
        residual: normalize(spec.budget_mode, residual),
    };
    let mut picks = Vec::new();
    solver.extract(&root, &mut picks);

    let mut assignment = LayerAssignment::empty(spec.layer_count());
    assignment.layers[0].insert(0, spec.grid.levels[l1 as usize]);
    assignment.layers[0].insert(last as usize, spec.grid.levels[lv as usize]);
    for (c, view, level) in picks {
        assignment.layers[c - 1].insert(view as usize, spec.grid.levels[level as usize]);
    }

    let states = solver.table.len() as u64;
    Ok(finish(
        SolverId::Optimal,
        spec,
        oracle,
        assignment,
        states,
        started,
    ))
}
