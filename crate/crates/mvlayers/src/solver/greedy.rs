//! Greedy solver: the layer problems are solved one at a time, first layer
//! first. Within a layer the view set and rates are chosen by an exact
//! dynamic program over "leftmost new view" decisions; views picked by
//! earlier layers are frozen and act as additional references inside every
//! span. Each layer minimizes its own unweighted navigation distortion, so
//! the resulting assignment is independent of the client distribution by
//! construction. Layer 1 also chooses the rates of the two mandatory
//! endpoint views and is exactly optimal for the single-layer problem.

use std::collections::HashMap;
use std::time::Instant;

use crate::distortion::{segment_distortion, DistortionOracle};
use crate::model::{BudgetMode, LayerAssignment, ScenarioSpec, TIE_EPS};
use crate::solver::{check_endpoint_budget, finish, SolveError, SolveResult, SolverId};

/// (anchor view, anchor level, terminus level, remaining budget)
type LayerKey = (u32, u32, u32, u32);

#[derive(Debug, Clone, Copy)]
enum LayerDecision {
    Stop,
    Insert { view: u32, level: u32 },
}

struct LayerSolver<'a> {
    spec: &'a ScenarioSpec,
    oracle: &'a DistortionOracle,
    /// Views committed by earlier layers, ascending, with their level.
    committed: Vec<(u32, u32)>,
    /// Views still selectable in this layer, ascending.
    candidates: Vec<u32>,
    nonzero: Vec<(u32, u32)>,
    terminus_level: u32,
    memo: HashMap<LayerKey, (f64, LayerDecision)>,
}

impl<'a> LayerSolver<'a> {
    /// Distortion of rendered positions in [pos(vx), pos(vy)) given the
    /// span endpoints plus every frozen reference between them.
    fn span(&self, vx: u32, lx: u32, vy: u32, ly: u32) -> f64 {
        let mut chain = vec![(vx, lx)];
        chain.extend(
            self.committed
                .iter()
                .copied()
                .filter(|&(v, _)| v > vx && v < vy),
        );
        chain.push((vy, ly));
        chain
            .windows(2)
            .map(|w| {
                segment_distortion(
                    self.oracle,
                    &self.spec.window,
                    w[0].0 as usize,
                    w[0].1 as usize,
                    w[1].0 as usize,
                    w[1].1 as usize,
                )
            })
            .sum()
    }

    fn psi(&mut self, anchor: u32, anchor_level: u32, budget: u32) -> f64 {
        let terminus = self.spec.last_view() as u32;
        let key = (anchor, anchor_level, self.terminus_level, budget);
        if let Some(&(v, _)) = self.memo.get(&key) {
            return v;
        }
        let mut best = self.span(anchor, anchor_level, terminus, self.terminus_level);
        let mut decision = LayerDecision::Stop;
        let candidates: Vec<u32> = self
            .candidates
            .iter()
            .copied()
            .filter(|&v| v > anchor)
            .collect();
        let nonzero = self.nonzero.clone();
        for view in candidates {
            for &(level, units) in &nonzero {
                if units > budget {
                    continue;
                }
                let value = self.span(anchor, anchor_level, view, level)
                    + self.psi(view, level, budget - units);
                if value < best - TIE_EPS {
                    best = value;
                    decision = LayerDecision::Insert { view, level };
                }
            }
        }
        self.memo.insert(key, (best, decision));
        best
    }

    /// Replays decisions from the given start state.
    fn extract(&self, anchor: u32, anchor_level: u32, budget: u32) -> Vec<(u32, u32)> {
        let mut picks = Vec::new();
        let (mut v, mut l, mut b) = (anchor, anchor_level, budget);
        loop {
            match self.memo[&(v, l, self.terminus_level, b)].1 {
                LayerDecision::Stop => break,
                LayerDecision::Insert { view, level } => {
                    picks.push((view, level));
                    let units = self.spec.grid.levels[level as usize];
                    b -= units;
                    v = view;
                    l = level;
                }
            }
        }
        picks
    }
}

pub fn solve_greedy(
    spec: &ScenarioSpec,
    oracle: &DistortionOracle,
) -> Result<SolveResult, SolveError> {
    let started = Instant::now();
    check_endpoint_budget(spec)?;

    let last = spec.last_view() as u32;
    let nonzero: Vec<(u32, u32)> = spec
        .grid
        .nonzero_levels()
        .map(|(l, u)| (l as u32, u))
        .collect();

    let mut assignment = LayerAssignment::empty(spec.layer_count());
    let mut committed: Vec<(u32, u32)> = Vec::new(); // (view, level) ascending
    let mut committed_units: u64 = 0;
    let mut states: u64 = 0;

    for c in 1..=spec.layer_count() {
        let layer_budget = match spec.budget_mode {
            BudgetMode::Cumulative => spec.clients.budgets[c - 1] as u64 - committed_units,
            BudgetMode::PerLayer => spec.clients.budgets[c - 1] as u64,
        } as u32;

        let candidates: Vec<u32> = (1..last)
            .filter(|v| !committed.iter().any(|&(w, _)| w == *v))
            .collect();

        let mut solver = LayerSolver {
            spec,
            oracle,
            committed: committed.clone(),
            candidates,
            nonzero: nonzero.clone(),
            terminus_level: 0,
            memo: HashMap::new(),
        };

        let picks: Vec<(u32, u32)>;
        if c == 1 {
            // Layer 1 owns the endpoints and chooses their rates too.
            let mut best: Option<(f64, u32, u32)> = None;
            for &(l1, u1) in &nonzero {
                for &(lv, uv) in &nonzero {
                    if (u1 + uv) as u64 > layer_budget as u64 {
                        continue;
                    }
                    solver.terminus_level = lv;
                    let value = solver.psi(0, l1, layer_budget - u1 - uv);
                    if best.as_ref().is_none_or(|(b, _, _)| value < *b - TIE_EPS) {
                        best = Some((value, l1, lv));
                    }
                }
            }
            let (_, l1, lv) = best.expect("endpoint budget was checked");
            let (u1, uv) = (spec.grid.levels[l1 as usize], spec.grid.levels[lv as usize]);
            solver.terminus_level = lv;
            picks = {
                let mut p = vec![(0, l1)];
                p.extend(solver.extract(0, l1, layer_budget - u1 - uv));
                p.push((last, lv));
                p
            };
        } else {
            let anchor_level = committed
                .iter()
                .find(|&&(v, _)| v == 0)
                .expect("endpoints committed in layer 1")
                .1;
            let terminus_level = committed
                .iter()
                .find(|&&(v, _)| v == last)
                .expect("endpoints committed in layer 1")
                .1;
            solver.terminus_level = terminus_level;
            solver.psi(0, anchor_level, layer_budget);
            picks = solver.extract(0, anchor_level, layer_budget);
        }
        states += solver.memo.len() as u64;

        for &(view, level) in &picks {
            let units = spec.grid.levels[level as usize];
            assignment.layers[c - 1].insert(view as usize, units);
            committed.push((view, level));
            committed_units += units as u64;
        }
        committed.sort_unstable();
    }

    Ok(finish(
        SolverId::Greedy,
        spec,
        oracle,
        assignment,
        states,
        started,
    ))
}
