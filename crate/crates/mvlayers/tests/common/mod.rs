//! Helpers shared by the integration suites: the seeded instance family
//! used for oracle-equivalence testing, and a deterministic random
//! feasible-assignment generator.
//!
//! Each test binary compiles its own copy and uses a subset.
#![allow(dead_code)]

use mvlayers::model::BudgetMode;
use mvlayers::scenario::{BudgetSchedule, GenDistortion, GeneratorConfig, PopularityModel};
use mvlayers::{LayerAssignment, ScenarioSpec};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

/// Instance family for the verification suite: V in 3..=6, C in {1,2},
/// one or two nonzero rate levels, windows of 5..=9 positions, budgets
/// cycling through tight, mid and loose cases, uniform and exponential
/// popularity. Two-layer instances use p = [0.5, 0.5].
pub fn suite_config(i: u64, mode: BudgetMode) -> GeneratorConfig {
    let views = 3 + (i % 4) as usize; // 3..=6
    let layers = 1 + ((i / 4) % 2) as usize; // 1..=2
    let nonzero_levels = 1 + ((i / 8) % 2) as usize; // |rho| in {2, 3}
    let window_positions = 5 + (i % 5) as usize;
    let spacing = [0.5, 1.0, 2.0][(i % 3) as usize];
    let max_level = nonzero_levels as f64;

    // Budget shapes: tight fits only the endpoints, loose fits everything.
    // A thin slice of instances cannot even afford the endpoints.
    let b1 = if i % 101 == 7 {
        1.0
    } else {
        match (i / 2) % 3 {
            0 => 2.0,
            1 => 2.0 + (views as f64 * max_level - 2.0) / 2.0,
            _ => views as f64 * max_level,
        }
        .round()
    };
    let b2 = b1 + [0.0, 1.0, 3.0][(i / 5 % 3) as usize];
    let budgets = if layers == 1 { vec![b1] } else { vec![b1, b2] };

    let popularity = if i.is_multiple_of(2) {
        PopularityModel::Uniform
    } else {
        PopularityModel::Exponential {
            decay: 0.6 + 0.05 * (i % 5) as f64,
        }
    };
    let proportions = match layers {
        1 => vec![1.0],
        _ => vec![0.5, 0.5],
    };

    GeneratorConfig {
        name: format!("suite-{i}"),
        views,
        window_positions,
        spacing,
        layers,
        popularity,
        budgets: BudgetSchedule::ExplicitMb(budgets),
        proportions: Some(proportions),
        quantum_mb: 1.0,
        levels_mb: (0..=nonzero_levels).map(|l| l as f64).collect(),
        budget_mode: mode,
        distortion: GenDistortion::default(),
        seed: 0x5EED_0000 + i,
    }
}

/// True when the instance admits any assignment at all: both endpoints at
/// the cheapest nonzero level must fit the first layer budget.
pub fn instance_feasible(spec: &ScenarioSpec) -> bool {
    2 * spec.grid.min_nonzero().unwrap() as u64 <= spec.clients.budgets[0] as u64
}

/// Draws a uniformly random feasible assignment by rejection: endpoints at
/// random affordable rates, then random (layer, rate) draws per interior
/// view, keeping only draws that stay feasible.
pub fn random_feasible_assignment(
    spec: &ScenarioSpec,
    rng: &mut ChaCha8Rng,
) -> Option<LayerAssignment> {
    let levels: Vec<u32> = spec.grid.levels[1..].to_vec();
    let layer_count = spec.layer_count();
    let last = spec.last_view();
    let mut a = LayerAssignment::empty(layer_count);

    let affordable: Vec<(u32, u32)> = levels
        .iter()
        .flat_map(|&r1| levels.iter().map(move |&rv| (r1, rv)))
        .filter(|&(r1, rv)| (r1 + rv) as u64 <= spec.clients.budgets[0] as u64)
        .collect();
    let &(r1, rv) = affordable.choose(rng)?;
    a.layers[0].insert(0, r1);
    a.layers[0].insert(last, rv);

    for v in 1..last {
        if rng.gen_bool(0.4) {
            continue; // leave this view untransmitted
        }
        let layer = rng.gen_range(0..layer_count);
        let rate = *levels.choose(rng).unwrap();
        a.layers[layer].insert(v, rate);
        if !spec.feasible(&a).ok() {
            a.layers[layer].remove(&v);
        }
    }
    debug_assert!(spec.feasible(&a).ok());
    Some(a)
}
