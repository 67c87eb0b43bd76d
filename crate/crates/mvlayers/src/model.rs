//! Domain types for problem instances and candidate solutions, plus the
//! feasibility checks shared by every solver.
//!
//! All rates and budgets are stored as integers in quantum units so that
//! budget arithmetic inside the dynamic programs is exact; conversion to
//! megabits happens only at the I/O and reporting boundaries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::distortion::DistortionConfig;

/// Tolerance for sums that must normalize to 1 and for coordinate equality.
pub const SUM_EPS: f64 = 1e-9;
/// Tolerance for deciding that a rendered position coincides with a camera.
pub const POS_EPS: f64 = 1e-9;
/// A candidate must beat the incumbent by more than this to replace it.
pub const TIE_EPS: f64 = 1e-12;

/// Invariant violation detected by [`ScenarioSpec::validate`] or while
/// converting an external file into a spec.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("invariant `{invariant}` violated: {detail}")]
pub struct ValidationError {
    /// Name of the first violated invariant, e.g. `budgets-nondecreasing`.
    pub invariant: &'static str,
    /// Offending value(s), human readable.
    pub detail: String,
}

impl ValidationError {
    pub fn new(invariant: &'static str, detail: impl Into<String>) -> Self {
        Self {
            invariant,
            detail: detail.into(),
        }
    }
}

/// The ordered set of captured camera views.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    /// Strictly increasing coordinates in scene units.
    pub positions: Vec<f64>,
    /// External labels, one per view, used in report output.
    pub labels: Vec<String>,
}

impl ViewSet {
    pub fn count(&self) -> usize {
        self.positions.len()
    }

    fn validate(&self) -> Result<(), ValidationError> {
        if self.positions.len() < 2 {
            return Err(ValidationError::new(
                "view-count",
                format!("need at least 2 views, got {}", self.positions.len()),
            ));
        }
        if self.labels.len() != self.positions.len() {
            return Err(ValidationError::new(
                "view-labels",
                format!(
                    "{} labels for {} views",
                    self.labels.len(),
                    self.positions.len()
                ),
            ));
        }
        for w in self.positions.windows(2) {
            if w[1] <= w[0] {
                return Err(ValidationError::new(
                    "view-positions-increasing",
                    format!("{} followed by {}", w[0], w[1]),
                ));
            }
        }
        Ok(())
    }
}

/// The discrete set of renderable positions between the first and last
/// captured views, with per-position request popularity.
#[derive(Debug, Clone, PartialEq)]
pub struct NavigationWindow {
    /// Strictly increasing coordinates in scene units.
    pub positions: Vec<f64>,
    /// Minimum distance between consecutive rendered positions.
    pub min_spacing: f64,
    /// Probability that a client requests each position; sums to 1.
    pub popularity: Vec<f64>,
}

impl NavigationWindow {
    pub fn count(&self) -> usize {
        self.positions.len()
    }

    fn validate(&self, views: &ViewSet) -> Result<(), ValidationError> {
        if self.positions.len() != self.popularity.len() {
            return Err(ValidationError::new(
                "window-popularity-length",
                format!(
                    "{} popularity entries for {} positions",
                    self.popularity.len(),
                    self.positions.len()
                ),
            ));
        }
        if self.min_spacing <= 0.0 {
            return Err(ValidationError::new(
                "window-spacing-positive",
                format!("min spacing {}", self.min_spacing),
            ));
        }
        let first = *self.positions.first().ok_or_else(|| {
            ValidationError::new("window-nonempty", "no rendered positions".to_string())
        })?;
        let last = *self.positions.last().unwrap();
        if (first - views.positions[0]).abs() > POS_EPS {
            return Err(ValidationError::new(
                "window-starts-at-first-view",
                format!(
                    "window starts at {first}, first view at {}",
                    views.positions[0]
                ),
            ));
        }
        let last_view = *views.positions.last().unwrap();
        if (last - last_view).abs() > POS_EPS {
            return Err(ValidationError::new(
                "window-ends-at-last-view",
                format!("window ends at {last}, last view at {last_view}"),
            ));
        }
        for w in self.positions.windows(2) {
            if w[1] - w[0] < self.min_spacing - SUM_EPS {
                return Err(ValidationError::new(
                    "window-spacing",
                    format!("gap {} below minimum {}", w[1] - w[0], self.min_spacing),
                ));
            }
        }
        if self.popularity.iter().any(|&q| q < 0.0) {
            return Err(ValidationError::new(
                "popularity-nonnegative",
                "negative popularity entry".to_string(),
            ));
        }
        let total: f64 = self.popularity.iter().sum();
        if (total - 1.0).abs() > SUM_EPS {
            return Err(ValidationError::new(
                "popularity-normalized",
                format!("sum is {total}"),
            ));
        }
        Ok(())
    }
}

/// The discrete coding-rate grid. Levels are stored in quantum units, with
/// level 0 meaning "not transmitted".
#[derive(Debug, Clone, PartialEq)]
pub struct RateGrid {
    /// Size of one quantum unit in megabits.
    pub quantum_mb: f64,
    /// Strictly increasing levels in quantum units; first element is 0.
    pub levels: Vec<u32>,
}

impl RateGrid {
    /// Nonzero levels as (level index, quantum units), ascending.
    pub fn nonzero_levels(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.levels.iter().enumerate().skip(1).map(|(i, &u)| (i, u))
    }

    /// Smallest nonzero level in quantum units.
    pub fn min_nonzero(&self) -> Option<u32> {
        self.levels.get(1).copied()
    }

    pub fn units_to_mb(&self, units: u32) -> f64 {
        round_mb(units as f64 * self.quantum_mb)
    }

    /// Level index whose value in quantum units equals `units`.
    pub fn level_of_units(&self, units: u32) -> Option<usize> {
        self.levels.iter().position(|&u| u == units)
    }

    fn validate(&self) -> Result<(), ValidationError> {
        if self.quantum_mb <= 0.0 {
            return Err(ValidationError::new(
                "rate-quantum-positive",
                format!("quantum {}", self.quantum_mb),
            ));
        }
        if self.levels.first() != Some(&0) {
            return Err(ValidationError::new(
                "rate-level-zero-present",
                "first rate level must be 0".to_string(),
            ));
        }
        if self.levels.len() < 2 {
            return Err(ValidationError::new(
                "rate-levels-nonzero",
                "need at least one nonzero rate level".to_string(),
            ));
        }
        for w in self.levels.windows(2) {
            if w[1] <= w[0] {
                return Err(ValidationError::new(
                    "rate-levels-increasing",
                    format!("{} followed by {}", w[0], w[1]),
                ));
            }
        }
        Ok(())
    }
}

/// Round a megabit value to 9 decimals so that unit conversions recover the
/// short decimal forms used in scenario files.
pub fn round_mb(mb: f64) -> f64 {
    (mb * 1e9).round() / 1e9
}

/// Whether layer budgets cap the cumulative rate of layers 1..c or the rate
/// of each layer taken alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
#[clap(rename_all = "kebab-case")]
pub enum BudgetMode {
    #[default]
    Cumulative,
    PerLayer,
}

impl std::fmt::Display for BudgetMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            BudgetMode::Cumulative => write!(f, "cumulative"),
            BudgetMode::PerLayer => write!(f, "per-layer"),
        }
    }
}

/// Client clustering: one layer per cluster, with the rate budget and the
/// proportion of clients able to receive up to that layer.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientProfile {
    /// Per-layer budgets in quantum units, nondecreasing.
    pub budgets: Vec<u32>,
    /// Proportion of clients receiving exactly layers 1..c; sums to 1.
    pub proportions: Vec<f64>,
}

impl ClientProfile {
    pub fn layer_count(&self) -> usize {
        self.budgets.len()
    }

    fn validate(&self) -> Result<(), ValidationError> {
        if self.budgets.is_empty() {
            return Err(ValidationError::new(
                "layer-count",
                "need at least one layer".to_string(),
            ));
        }
        if self.proportions.len() != self.budgets.len() {
            return Err(ValidationError::new(
                "proportions-length",
                format!(
                    "{} proportions for {} layers",
                    self.proportions.len(),
                    self.budgets.len()
                ),
            ));
        }
        if self.budgets.contains(&0) {
            return Err(ValidationError::new(
                "budgets-positive",
                "zero budget".to_string(),
            ));
        }
        for w in self.budgets.windows(2) {
            if w[1] < w[0] {
                return Err(ValidationError::new(
                    "budgets-nondecreasing",
                    format!("{} followed by {}", w[0], w[1]),
                ));
            }
        }
        if self.proportions.iter().any(|&p| p < 0.0) {
            return Err(ValidationError::new(
                "proportions-nonnegative",
                "negative proportion".to_string(),
            ));
        }
        let total: f64 = self.proportions.iter().sum();
        if (total - 1.0).abs() > SUM_EPS {
            return Err(ValidationError::new(
                "proportions-normalized",
                format!("sum is {total}"),
            ));
        }
        Ok(())
    }
}

/// The decision variable: per-layer map from view index to coding rate in
/// quantum units (always nonzero).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LayerAssignment {
    pub layers: Vec<BTreeMap<usize, u32>>,
}

impl LayerAssignment {
    pub fn empty(layer_count: usize) -> Self {
        Self {
            layers: vec![BTreeMap::new(); layer_count],
        }
    }

    /// Total assigned rate over layers 1..=c in quantum units.
    pub fn rate_through_layer(&self, c: usize) -> u64 {
        self.layers[..c]
            .iter()
            .flat_map(|l| l.values())
            .map(|&u| u as u64)
            .sum()
    }

    /// Total assigned rate of layer c alone in quantum units.
    pub fn rate_of_layer(&self, c: usize) -> u64 {
        self.layers[c - 1].values().map(|&u| u as u64).sum()
    }
}

/// Union of layers 1..=c, sorted by view index, each view carrying the rate
/// assigned in its (unique) layer.
pub fn prefix_views(a: &LayerAssignment, c: usize) -> Result<Vec<(usize, u32)>, ValidationError> {
    if c == 0 || c > a.layers.len() {
        return Err(ValidationError::new(
            "layer-index-range",
            format!("layer {c} of {}", a.layers.len()),
        ));
    }
    let mut out: Vec<(usize, u32)> = a.layers[..c]
        .iter()
        .flat_map(|l| l.iter().map(|(&v, &r)| (v, r)))
        .collect();
    out.sort_unstable();
    Ok(out)
}

/// Outcome of a feasibility check. Never an error: infeasibility carries a
/// description of the first violated constraint.
#[derive(Debug, Clone, PartialEq)]
pub enum Feasibility {
    Feasible,
    Infeasible(String),
}

impl Feasibility {
    pub fn ok(&self) -> bool {
        matches!(self, Feasibility::Feasible)
    }

    pub fn describe(&self) -> &str {
        match self {
            Feasibility::Feasible => "feasible",
            Feasibility::Infeasible(why) => why,
        }
    }
}

/// The full problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub views: ViewSet,
    pub window: NavigationWindow,
    pub grid: RateGrid,
    pub clients: ClientProfile,
    pub budget_mode: BudgetMode,
    pub distortion: DistortionConfig,
}

impl ScenarioSpec {
    pub fn layer_count(&self) -> usize {
        self.clients.layer_count()
    }

    pub fn view_count(&self) -> usize {
        self.views.count()
    }

    /// Index of the last captured view.
    pub fn last_view(&self) -> usize {
        self.views.count() - 1
    }

    /// Checks every invariant; the error identifies the first violated
    /// invariant by name and offending value.
    pub fn validate(&self) -> Result<(), ValidationError> {
        self.views.validate()?;
        self.window.validate(&self.views)?;
        self.grid.validate()?;
        self.clients.validate()?;
        self.distortion
            .validate(&self.views, &self.window, &self.grid)?;
        Ok(())
    }

    /// True iff disjointness, endpoint placement and every budget constraint
    /// hold for the assignment.
    pub fn feasible(&self, a: &LayerAssignment) -> Feasibility {
        if a.layers.len() != self.layer_count() {
            return Feasibility::Infeasible(format!(
                "layer-count: assignment has {} layers, spec has {}",
                a.layers.len(),
                self.layer_count()
            ));
        }
        let mut seen: BTreeMap<usize, usize> = BTreeMap::new();
        for (li, layer) in a.layers.iter().enumerate() {
            for (&v, &r) in layer {
                if v >= self.view_count() {
                    return Feasibility::Infeasible(format!(
                        "view-index-range: view {v} in layer {}",
                        li + 1
                    ));
                }
                if r == 0 || self.grid.level_of_units(r).is_none() {
                    return Feasibility::Infeasible(format!(
                        "rate-level-unknown: {r} units on view {v} in layer {}",
                        li + 1
                    ));
                }
                if let Some(prev) = seen.insert(v, li) {
                    return Feasibility::Infeasible(format!(
                        "layers-disjoint: view {v} in layers {} and {}",
                        prev + 1,
                        li + 1
                    ));
                }
            }
        }
        let first = a.layers[0].contains_key(&0);
        let last = a.layers[0].contains_key(&self.last_view());
        if !first || !last {
            return Feasibility::Infeasible("endpoints-not-in-L1".to_string());
        }
        for c in 1..=self.layer_count() {
            let spent = match self.budget_mode {
                BudgetMode::Cumulative => a.rate_through_layer(c),
                BudgetMode::PerLayer => a.rate_of_layer(c),
            };
            if spent > self.clients.budgets[c - 1] as u64 {
                let kind = match self.budget_mode {
                    BudgetMode::Cumulative => "cumulative-budget",
                    BudgetMode::PerLayer => "layer-budget",
                };
                return Feasibility::Infeasible(format!(
                    "{kind} layer {c}: {spent} > {}",
                    self.clients.budgets[c - 1]
                ));
            }
        }
        Feasibility::Feasible
    }

    /// Index of the captured view whose coordinate equals `pos`, if any.
    pub fn view_at(&self, pos: f64) -> Option<usize> {
        self.views
            .positions
            .iter()
            .position(|&p| (p - pos).abs() <= POS_EPS)
    }
}
