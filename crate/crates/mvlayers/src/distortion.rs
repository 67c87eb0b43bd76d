//! Synthesis-distortion model: per-position distortion of rendered views,
//! segment distortion between adjacent references, per-layer distortion and
//! the client-weighted objective.
//!
//! Two evaluation routes exist on purpose. [`layer_distortion`] telescopes
//! over segments between consecutive references, which is what the dynamic
//! programs build on. [`layer_distortion_direct`] searches the nearest
//! references for every rendered position independently. The two must agree
//! to float precision on every feasible assignment.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    prefix_views, LayerAssignment, NavigationWindow, RateGrid, ScenarioSpec, ValidationError,
    ViewSet, POS_EPS,
};

/// Disocclusion and inpainting parameters for synthesizing one rendered
/// position from a given reference pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SynthesisParams {
    /// Proportion of pixels disoccluded from the first reference projection.
    pub alpha: f64,
    /// Proportion disoccluded from both reference projections.
    pub gamma: f64,
    /// Mean per-pixel MSE of inpainted areas.
    pub inpaint: f64,
}

/// Rate-distortion curve of one coded view: texture MSE per nonzero rate
/// level, plus the fixed depth-map MSE (depth is always coded at high
/// quality, so it does not vary with the texture rate).
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRdCurve {
    /// Texture MSE, indexed by nonzero level: entry `l - 1` is level `l`.
    pub texture_mse: Vec<f64>,
    pub depth_mse: f64,
}

impl ViewRdCurve {
    fn validate(&self, nonzero_levels: usize, view: usize) -> Result<(), ValidationError> {
        if self.texture_mse.len() != nonzero_levels {
            return Err(ValidationError::new(
                "rd-curve-length",
                format!(
                    "view {view}: {} entries for {nonzero_levels} nonzero levels",
                    self.texture_mse.len()
                ),
            ));
        }
        if self.texture_mse.iter().any(|&d| d < 0.0) || self.depth_mse < 0.0 {
            return Err(ValidationError::new(
                "rd-curve-nonnegative",
                format!("view {view}"),
            ));
        }
        for w in self.texture_mse.windows(2) {
            if w[1] >= w[0] {
                return Err(ValidationError::new(
                    "rd-curve-decreasing",
                    format!("view {view}: {} followed by {}", w[0], w[1]),
                ));
            }
        }
        Ok(())
    }
}

/// Constants of the closed-form synthesis model. Disocclusion grows with the
/// distance between the reference views; texture distortion decays
/// exponentially with coding rate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParametricConfig {
    /// Disocclusion per scene unit of reference-pair baseline (a0).
    pub alpha_per_unit: f64,
    /// Amplitude of the per-position disocclusion noise (a1).
    pub alpha_noise: f64,
    /// Ratio of doubly-disoccluded to disoccluded pixels (g0).
    pub gamma_ratio: f64,
    /// Mean per-pixel MSE of inpainted areas.
    pub inpaint_mse: f64,
    /// Per-view texture variance driving the RD curve.
    pub sigma2: Vec<f64>,
    /// Exponential rate-decay constant per megabit.
    pub kappa_per_mb: f64,
    /// Additive lower bound on texture MSE.
    pub floor_mse: f64,
    /// Per-view depth-map MSE.
    pub depth_mse: Vec<f64>,
    /// Seed of the deterministic disocclusion noise.
    pub noise_seed: u64,
}

/// One dense-table entry: distortion of rendering position `u` from
/// references `vl`, `vr` coded at levels `rl`, `rr` (level indices into the
/// rate grid, nonzero).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub u: usize,
    pub vl: usize,
    pub vr: usize,
    pub rl: usize,
    pub rr: usize,
    pub mse: f64,
}

/// Measured per-view RD curves plus a dense synthesis table. The table is
/// either embedded in the scenario file or referenced as a side file (a
/// JSON array of entries, resolved relative to the scenario file by the
/// loader). The canonical writer always embeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedConfig {
    /// Texture MSE per view per nonzero level.
    pub texture_mse: Vec<Vec<f64>>,
    /// Depth MSE per view.
    pub depth_mse: Vec<f64>,
    #[serde(default)]
    pub table: Vec<TableEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table_file: Option<String>,
}

/// Distortion model selector as it appears in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "kebab-case")]
pub enum DistortionConfig {
    Parametric(ParametricConfig),
    Tabulated(TabulatedConfig),
}

impl DistortionConfig {
    pub fn validate(
        &self,
        views: &ViewSet,
        window: &NavigationWindow,
        grid: &RateGrid,
    ) -> Result<(), ValidationError> {
        let v = views.count();
        let nonzero = grid.levels.len() - 1;
        match self {
            DistortionConfig::Parametric(p) => {
                if p.alpha_per_unit < 0.0 || p.alpha_noise < 0.0 {
                    return Err(ValidationError::new(
                        "alpha-nonnegative",
                        format!("a0={} a1={}", p.alpha_per_unit, p.alpha_noise),
                    ));
                }
                if !(0.0..=1.0).contains(&p.gamma_ratio) {
                    return Err(ValidationError::new(
                        "gamma-ratio-range",
                        format!("{}", p.gamma_ratio),
                    ));
                }
                if p.inpaint_mse < 0.0 {
                    return Err(ValidationError::new(
                        "inpaint-nonnegative",
                        format!("{}", p.inpaint_mse),
                    ));
                }
                if p.sigma2.len() != v || p.depth_mse.len() != v {
                    return Err(ValidationError::new(
                        "distortion-per-view-length",
                        format!(
                            "{} sigma2 / {} depth entries for {v} views",
                            p.sigma2.len(),
                            p.depth_mse.len()
                        ),
                    ));
                }
                if p.sigma2.iter().any(|&s| s <= 0.0) {
                    return Err(ValidationError::new(
                        "sigma2-positive",
                        "nonpositive texture variance".to_string(),
                    ));
                }
                if p.depth_mse.iter().any(|&d| d < 0.0) {
                    return Err(ValidationError::new(
                        "depth-mse-nonnegative",
                        "negative depth distortion".to_string(),
                    ));
                }
                if p.kappa_per_mb <= 0.0 {
                    return Err(ValidationError::new(
                        "kappa-positive",
                        format!("{}", p.kappa_per_mb),
                    ));
                }
                if p.floor_mse < 0.0 {
                    return Err(ValidationError::new(
                        "floor-nonnegative",
                        format!("{}", p.floor_mse),
                    ));
                }
                Ok(())
            }
            DistortionConfig::Tabulated(t) => {
                if let Some(path) = &t.table_file {
                    return Err(ValidationError::new(
                        "table-file-unresolved",
                        format!("referenced table `{path}` was not loaded"),
                    ));
                }
                if t.texture_mse.len() != v || t.depth_mse.len() != v {
                    return Err(ValidationError::new(
                        "distortion-per-view-length",
                        format!(
                            "{} texture / {} depth rows for {v} views",
                            t.texture_mse.len(),
                            t.depth_mse.len()
                        ),
                    ));
                }
                for (view, row) in t.texture_mse.iter().enumerate() {
                    ViewRdCurve {
                        texture_mse: row.clone(),
                        depth_mse: t.depth_mse[view],
                    }
                    .validate(nonzero, view)?;
                }
                for e in &t.table {
                    if e.mse < 0.0 {
                        return Err(ValidationError::new(
                            "table-mse-nonnegative",
                            format!("entry ({}, {}, {}, {}, {})", e.u, e.vl, e.vr, e.rl, e.rr),
                        ));
                    }
                }
                let lookup = DenseTable::build(t, views, window, grid)?;
                lookup.check_complete(views, window, grid)?;
                Ok(())
            }
        }
    }
}

/// SplitMix64 finalizer; drives the deterministic disocclusion noise and the
/// per-view spreads of the synthetic generator.
pub(crate) fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = x;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic uniform draw in [0, 1) keyed by (seed, key).
pub(crate) fn unit_noise(seed: u64, key: u64) -> f64 {
    let h = splitmix64(seed ^ key.wrapping_mul(0x9E37_79B9_7F4A_7C15));
    (h >> 11) as f64 / (1u64 << 53) as f64
}

#[derive(Debug, Clone)]
struct DenseTable {
    /// Index order: ((u * V + vl) * V + vr) * L * L + rl * L + rr.
    values: Vec<f64>,
    views: usize,
    levels: usize,
}

impl DenseTable {
    fn build(
        cfg: &TabulatedConfig,
        views: &ViewSet,
        window: &NavigationWindow,
        grid: &RateGrid,
    ) -> Result<Self, ValidationError> {
        let v = views.count();
        let l = grid.levels.len();
        let u = window.count();
        let mut values = vec![f64::NAN; u * v * v * l * l];
        for e in &cfg.table {
            if e.u >= u
                || e.vl >= v
                || e.vr >= v
                || e.rl == 0
                || e.rl >= l
                || e.rr == 0
                || e.rr >= l
            {
                return Err(ValidationError::new(
                    "table-key-range",
                    format!("entry ({}, {}, {}, {}, {})", e.u, e.vl, e.vr, e.rl, e.rr),
                ));
            }
            let idx = Self::index_raw(v, l, e.u, e.vl, e.vr, e.rl, e.rr);
            values[idx] = e.mse;
        }
        Ok(Self {
            values,
            views: v,
            levels: l,
        })
    }

    fn index_raw(
        v: usize,
        l: usize,
        u: usize,
        vl: usize,
        vr: usize,
        rl: usize,
        rr: usize,
    ) -> usize {
        (((u * v + vl) * v + vr) * l + rl) * l + rr
    }

    fn get(&self, u: usize, vl: usize, vr: usize, rl: usize, rr: usize) -> f64 {
        self.values[Self::index_raw(self.views, self.levels, u, vl, vr, rl, rr)]
    }

    /// Every (u, vl, vr, rl, rr) with vl ≤ position(u) ≤ vr and nonzero rate
    /// levels must be present.
    fn check_complete(
        &self,
        views: &ViewSet,
        window: &NavigationWindow,
        grid: &RateGrid,
    ) -> Result<(), ValidationError> {
        for (u, &pu) in window.positions.iter().enumerate() {
            for vl in 0..views.count() {
                for vr in (vl + 1)..views.count() {
                    if views.positions[vl] > pu + POS_EPS || views.positions[vr] < pu - POS_EPS {
                        continue;
                    }
                    for rl in 1..grid.levels.len() {
                        for rr in 1..grid.levels.len() {
                            if self.get(u, vl, vr, rl, rr).is_nan() {
                                return Err(ValidationError::new(
                                    "table-complete",
                                    format!("missing entry ({u}, {vl}, {vr}, {rl}, {rr})"),
                                ));
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
enum Backend {
    Parametric {
        alpha_per_unit: f64,
        alpha_noise: f64,
        gamma_ratio: f64,
        inpaint: f64,
        noise_seed: u64,
    },
    Tabulated(DenseTable),
}

/// Evaluates the distortion of any rendered position for any reference pair
/// and rate choice. Read-only after construction.
#[derive(Debug, Clone)]
pub struct DistortionOracle {
    view_positions: Vec<f64>,
    curves: Vec<ViewRdCurve>,
    backend: Backend,
}

impl DistortionOracle {
    /// Builds the oracle for a validated spec.
    pub fn new(spec: &ScenarioSpec) -> Result<Self, ValidationError> {
        spec.distortion
            .validate(&spec.views, &spec.window, &spec.grid)?;
        let view_positions = spec.views.positions.clone();
        match &spec.distortion {
            DistortionConfig::Parametric(p) => {
                let curves = (0..spec.view_count())
                    .map(|v| ViewRdCurve {
                        texture_mse: spec
                            .grid
                            .nonzero_levels()
                            .map(|(_, units)| {
                                let mb = spec.grid.units_to_mb(units);
                                p.floor_mse + p.sigma2[v] * (-p.kappa_per_mb * mb).exp2()
                            })
                            .collect(),
                        depth_mse: p.depth_mse[v],
                    })
                    .collect();
                Ok(Self {
                    view_positions,
                    curves,
                    backend: Backend::Parametric {
                        alpha_per_unit: p.alpha_per_unit,
                        alpha_noise: p.alpha_noise,
                        gamma_ratio: p.gamma_ratio,
                        inpaint: p.inpaint_mse,
                        noise_seed: p.noise_seed,
                    },
                })
            }
            DistortionConfig::Tabulated(t) => {
                let curves = (0..spec.view_count())
                    .map(|v| ViewRdCurve {
                        texture_mse: t.texture_mse[v].clone(),
                        depth_mse: t.depth_mse[v],
                    })
                    .collect();
                let table = DenseTable::build(t, &spec.views, &spec.window, &spec.grid)?;
                Ok(Self {
                    view_positions,
                    curves,
                    backend: Backend::Tabulated(table),
                })
            }
        }
    }

    pub fn curve(&self, view: usize) -> &ViewRdCurve {
        &self.curves[view]
    }

    /// Total coded distortion (texture + depth) of a view at a nonzero level.
    pub fn coded(&self, view: usize, level: usize) -> f64 {
        assert!(level >= 1, "level 0 means not transmitted");
        self.curves[view].texture_mse[level - 1] + self.curves[view].depth_mse
    }

    /// Synthesis parameters the parametric backend would use for rendering
    /// position `u` from the pair (vl, vr). None on the tabulated backend.
    pub fn synthesis_params(&self, u: usize, vl: usize, vr: usize) -> Option<SynthesisParams> {
        match &self.backend {
            Backend::Parametric {
                alpha_per_unit,
                alpha_noise,
                gamma_ratio,
                inpaint,
                noise_seed,
            } => {
                let baseline = self.view_positions[vr] - self.view_positions[vl];
                let noise = unit_noise(*noise_seed, u as u64);
                let alpha = (alpha_per_unit * baseline + alpha_noise * noise).min(1.0);
                let gamma = (gamma_ratio * alpha).min(1.0);
                Some(SynthesisParams {
                    alpha,
                    gamma,
                    inpaint: *inpaint,
                })
            }
            Backend::Tabulated(_) => None,
        }
    }

    /// Distortion of rendering position `u` (index into the window, at
    /// coordinate `u_pos`) from references `vl` < `vr` coded at nonzero
    /// levels `ll`, `lr`. A position coinciding with a transmitted reference
    /// returns that reference's coded distortion.
    pub fn point(&self, u: usize, u_pos: f64, vl: usize, ll: usize, vr: usize, lr: usize) -> f64 {
        assert!(vl < vr, "reference ordering violated: {vl} >= {vr}");
        assert!(
            self.view_positions[vl] <= u_pos + POS_EPS
                && u_pos <= self.view_positions[vr] + POS_EPS,
            "rendered position outside reference span"
        );
        if (u_pos - self.view_positions[vl]).abs() <= POS_EPS {
            return self.coded(vl, ll);
        }
        if (u_pos - self.view_positions[vr]).abs() <= POS_EPS {
            return self.coded(vr, lr);
        }
        match &self.backend {
            Backend::Parametric { .. } => {
                let params = self.synthesis_params(u, vl, vr).unwrap();
                let dist_left = u_pos - self.view_positions[vl];
                let dist_right = self.view_positions[vr] - u_pos;
                // First reference is the nearer one; a tie (to coordinate
                // precision) goes to the left.
                let (first, lfirst, second, lsecond) = if dist_left <= dist_right + POS_EPS {
                    (vl, ll, vr, lr)
                } else {
                    (vr, lr, vl, ll)
                };
                synth_distortion(
                    &params,
                    self.coded(first, lfirst),
                    self.coded(second, lsecond),
                )
            }
            Backend::Tabulated(t) => t.get(u, vl, vr, ll, lr),
        }
    }
}

/// Closed-form synthesis distortion for one rendered position:
/// `(1 - alpha) * d1 + (1 - gamma) * alpha * d2 + gamma * alpha * inpaint`,
/// where d1, d2 are the total coded distortions of the first and second
/// reference.
pub fn synth_distortion(params: &SynthesisParams, d1: f64, d2: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&params.alpha) && (0.0..=1.0).contains(&params.gamma),
        "alpha/gamma outside [0, 1]"
    );
    assert!(
        d1 >= 0.0 && d2 >= 0.0 && params.inpaint >= 0.0,
        "negative distortion input"
    );
    (1.0 - params.alpha) * d1
        + (1.0 - params.gamma) * params.alpha * d2
        + params.gamma * params.alpha * params.inpaint
}

/// Popularity-weighted distortion of the rendered positions in
/// `[pos(vx), pos(vy))`, synthesized from the adjacent references vx, vy
/// coded at levels lx, ly. The position at vy itself belongs to the next
/// segment; the final segment (vy being the last captured view) also covers
/// the position at vy, so telescoping over consecutive reference pairs
/// counts every rendered position exactly once.
pub fn segment_distortion(
    oracle: &DistortionOracle,
    window: &NavigationWindow,
    vx: usize,
    lx: usize,
    vy: usize,
    ly: usize,
) -> f64 {
    assert!(vx < vy, "segment ordering violated: {vx} >= {vy}");
    let px = oracle.view_positions[vx];
    let py = oracle.view_positions[vy];
    let closes_window = vy == oracle.view_positions.len() - 1;
    let mut total = 0.0;
    for (u, &pu) in window.positions.iter().enumerate() {
        let inside =
            pu >= px - POS_EPS && (pu < py - POS_EPS || (closes_window && pu <= py + POS_EPS));
        if inside {
            total += window.popularity[u] * oracle.point(u, pu, vx, lx, vy, ly);
        }
    }
    total
}

/// Infeasible assignment passed to a distortion evaluation.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("infeasible assignment: {0}")]
pub struct InfeasibleAssignment(pub String);

fn reference_chain(
    spec: &ScenarioSpec,
    a: &LayerAssignment,
    c: usize,
) -> Result<Vec<(usize, usize)>, InfeasibleAssignment> {
    let feas = spec.feasible(a);
    if !feas.ok() {
        return Err(InfeasibleAssignment(feas.describe().to_string()));
    }
    let refs = prefix_views(a, c).map_err(|e| InfeasibleAssignment(e.to_string()))?;
    Ok(refs
        .into_iter()
        .map(|(v, units)| {
            let level = spec
                .grid
                .level_of_units(units)
                .expect("feasible assignment uses grid levels");
            (v, level)
        })
        .collect())
}

/// Navigation distortion `D_c` when layers 1..=c are received, computed by
/// telescoping segment sums over consecutive transmitted references.
pub fn layer_distortion(
    oracle: &DistortionOracle,
    spec: &ScenarioSpec,
    a: &LayerAssignment,
    c: usize,
) -> Result<f64, InfeasibleAssignment> {
    let chain = reference_chain(spec, a, c)?;
    Ok(chain
        .windows(2)
        .map(|w| segment_distortion(oracle, &spec.window, w[0].0, w[0].1, w[1].0, w[1].1))
        .sum())
}

/// Same quantity as [`layer_distortion`], evaluated without the segment
/// decomposition: every rendered position searches its nearest transmitted
/// references directly.
pub fn layer_distortion_direct(
    oracle: &DistortionOracle,
    spec: &ScenarioSpec,
    a: &LayerAssignment,
    c: usize,
) -> Result<f64, InfeasibleAssignment> {
    let chain = reference_chain(spec, a, c)?;
    let mut total = 0.0;
    for (u, &pu) in spec.window.positions.iter().enumerate() {
        let q = spec.window.popularity[u];
        if let Some(&(v, level)) = chain
            .iter()
            .find(|&&(v, _)| (spec.views.positions[v] - pu).abs() <= POS_EPS)
        {
            debug_assert!(v < spec.view_count());
            total += q * oracle.coded(v, level);
            continue;
        }
        let (vl, ll) = *chain
            .iter()
            .rfind(|&&(v, _)| spec.views.positions[v] < pu)
            .expect("window spans the captured range");
        let (vr, lr) = *chain
            .iter()
            .find(|&&(v, _)| spec.views.positions[v] > pu)
            .expect("window spans the captured range");
        total += q * oracle.point(u, pu, vl, ll, vr, lr);
    }
    Ok(total)
}

/// Expected navigation distortion over all client clusters:
/// `sum_c p(c) * D_c`.
pub fn objective(
    oracle: &DistortionOracle,
    spec: &ScenarioSpec,
    a: &LayerAssignment,
) -> Result<f64, InfeasibleAssignment> {
    let mut total = 0.0;
    for c in 1..=spec.layer_count() {
        total += spec.clients.proportions[c - 1] * layer_distortion(oracle, spec, a, c)?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{self, GeneratorConfig, PresetId};

    fn params(alpha: f64, gamma: f64, inpaint: f64) -> SynthesisParams {
        SynthesisParams {
            alpha,
            gamma,
            inpaint,
        }
    }

    #[test]
    fn synth_no_disocclusion_is_first_reference() {
        assert_eq!(synth_distortion(&params(0.0, 0.0, 100.0), 7.5, 20.0), 7.5);
    }

    #[test]
    fn synth_fully_inpainted_is_inpaint() {
        assert_eq!(synth_distortion(&params(1.0, 1.0, 100.0), 7.5, 20.0), 100.0);
    }

    #[test]
    fn synth_matches_hand_evaluation() {
        let d = synth_distortion(&params(0.3, 0.2, 100.0), 10.0, 20.0);
        assert!((d - 17.8).abs() < 1e-12, "{d}");
    }

    #[test]
    fn point_at_reference_coordinate_is_coded() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        // Window position 0 coincides with view 0.
        let d = oracle.point(0, spec.window.positions[0], 0, 2, 6, 1);
        assert_eq!(d, oracle.coded(0, 2));
    }

    #[test]
    fn point_tie_breaks_to_left_reference() {
        let mut cfg = GeneratorConfig {
            views: 2,
            window_positions: 3,
            ..Default::default()
        };
        cfg.distortion.alpha_noise = 0.0;
        let mut spec = scenario::gen_synthetic(&cfg).unwrap();
        // Make the references distinguishable through their curves.
        if let DistortionConfig::Parametric(p) = &mut spec.distortion {
            p.sigma2 = vec![100.0, 900.0];
        }
        let oracle = DistortionOracle::new(&spec).unwrap();
        let mid = spec.window.positions[1];
        let d = oracle.point(1, mid, 0, 1, 1, 1);
        let p = oracle.synthesis_params(1, 0, 1).unwrap();
        let expected = synth_distortion(&p, oracle.coded(0, 1), oracle.coded(1, 1));
        assert_eq!(d, expected);
        // Left-first means d1 comes from view 0 (the lower-sigma2 one).
        assert!(oracle.coded(0, 1) < oracle.coded(1, 1));
    }

    #[test]
    fn point_interior_matches_hand_evaluated_model() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        // Window position 2 (index 60) lies between views 1 (55) and 2 (65).
        let u = 2;
        let pu = spec.window.positions[u];
        let d = oracle.point(u, pu, 1, 1, 2, 2);
        let p = oracle.synthesis_params(u, 1, 2).unwrap();
        // Nearer reference: equidistant, tie goes left (view 1).
        let by_hand = (1.0 - p.alpha) * oracle.coded(1, 1)
            + (1.0 - p.gamma) * p.alpha * oracle.coded(2, 2)
            + p.gamma * p.alpha * p.inpaint;
        assert!((d - by_hand).abs() < 1e-12);
    }

    #[test]
    fn segment_with_single_position_at_left_end() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        // Views 5 (85) and 6 (95): window holds 85 and 90; 95 closes the window.
        let d = segment_distortion(&oracle, &spec.window, 5, 1, 6, 1);
        let q85 = spec.window.popularity[7];
        let q90 = spec.window.popularity[8];
        let q95 = spec.window.popularity[9];
        let expected = q85 * oracle.coded(5, 1)
            + q90 * oracle.point(8, 90.0 * 5.33, 5, 1, 6, 1)
            + q95 * oracle.coded(6, 1);
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn segment_with_no_positions_is_zero() {
        let cfg = GeneratorConfig {
            views: 4,
            window_positions: 2, // only the two endpoints are rendered
            ..Default::default()
        };
        let spec = scenario::gen_synthetic(&cfg).unwrap();
        let oracle = DistortionOracle::new(&spec).unwrap();
        assert_eq!(segment_distortion(&oracle, &spec.window, 1, 1, 2, 1), 0.0);
    }

    #[test]
    fn segment_sums_interior_points() {
        let cfg = GeneratorConfig {
            views: 2,
            window_positions: 5,
            ..Default::default()
        };
        let spec = scenario::gen_synthetic(&cfg).unwrap();
        let oracle = DistortionOracle::new(&spec).unwrap();
        let d = segment_distortion(&oracle, &spec.window, 0, 1, 1, 1);
        let mut expected = 0.0;
        for u in 0..5 {
            expected +=
                spec.window.popularity[u] * oracle.point(u, spec.window.positions[u], 0, 1, 1, 1);
        }
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn layer_distortion_routes_agree() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        let mut a = LayerAssignment::empty(2);
        a.layers[0].insert(0, 2);
        a.layers[0].insert(6, 2);
        a.layers[1].insert(2, 1);
        a.layers[1].insert(4, 1);
        for c in 1..=2 {
            let seg = layer_distortion(&oracle, &spec, &a, c).unwrap();
            let direct = layer_distortion_direct(&oracle, &spec, &a, c).unwrap();
            assert!((seg - direct).abs() < 1e-9, "c={c}: {seg} vs {direct}");
        }
    }

    #[test]
    fn layer_distortion_rejects_infeasible() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        let a = LayerAssignment::empty(2);
        assert!(layer_distortion(&oracle, &spec, &a, 1).is_err());
    }

    #[test]
    fn all_coded_when_every_position_is_a_reference() {
        let cfg = GeneratorConfig {
            views: 3,
            window_positions: 3,
            layers: 1,
            ..Default::default()
        };
        let spec = scenario::gen_synthetic(&cfg).unwrap();
        let oracle = DistortionOracle::new(&spec).unwrap();
        let mut a = LayerAssignment::empty(1);
        for v in 0..3 {
            a.layers[0].insert(v, 1);
        }
        let d = layer_distortion(&oracle, &spec, &a, 1).unwrap();
        let expected: f64 = (0..3)
            .map(|v| spec.window.popularity[v] * oracle.coded(v, 1))
            .sum();
        assert!((d - expected).abs() < 1e-12);
    }

    #[test]
    fn objective_weights_layers() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        let mut a = LayerAssignment::empty(2);
        a.layers[0].insert(0, 1);
        a.layers[0].insert(6, 1);
        a.layers[1].insert(3, 2);
        let d1 = layer_distortion(&oracle, &spec, &a, 1).unwrap();
        let d2 = layer_distortion(&oracle, &spec, &a, 2).unwrap();
        let obj = objective(&oracle, &spec, &a).unwrap();
        assert!((obj - (0.5 * d1 + 0.5 * d2)).abs() < 1e-12);

        // Degenerate weights pick out a single layer.
        let mut spec2 = spec.clone();
        spec2.clients.proportions = vec![0.0, 1.0];
        assert!((objective(&oracle, &spec2, &a).unwrap() - d2).abs() < 1e-12);

        // Iterative evaluation from the deepest layer up gives the same value.
        let mut phi = 0.0;
        for c in (1..=2).rev() {
            phi +=
                spec.clients.proportions[c - 1] * layer_distortion(&oracle, &spec, &a, c).unwrap();
        }
        assert!((obj - phi).abs() < 1e-12);
    }

    #[test]
    fn refinement_never_hurts_with_added_reference() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        let mut a = LayerAssignment::empty(2);
        a.layers[0].insert(0, 2);
        a.layers[0].insert(6, 2);
        let d1 = layer_distortion(&oracle, &spec, &a, 1).unwrap();
        a.layers[1].insert(3, 2);
        let d2 = layer_distortion(&oracle, &spec, &a, 2).unwrap();
        assert!(d2 <= d1 + 1e-12, "{d2} vs {d1}");
    }

    #[test]
    fn raising_a_rate_never_increases_distortion() {
        let spec = scenario::preset(PresetId::Statue);
        let oracle = DistortionOracle::new(&spec).unwrap();
        let mut low = LayerAssignment::empty(2);
        low.layers[0].insert(0, 1);
        low.layers[0].insert(6, 1);
        low.layers[1].insert(3, 1);
        let mut high = low.clone();
        high.layers[1].insert(3, 2);
        for c in 1..=2 {
            let dl = layer_distortion(&oracle, &spec, &low, c).unwrap();
            let dh = layer_distortion(&oracle, &spec, &high, c).unwrap();
            assert!(dh <= dl + 1e-12, "c={c}: {dh} vs {dl}");
        }
    }
}
