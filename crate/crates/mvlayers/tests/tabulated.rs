//! Tabulated-backend coverage: a dense table dumped from a parametric
//! oracle must reproduce it exactly, survive the file round-trip, and give
//! the solvers identical answers. Missing entries are a load error.

use mvlayers::distortion::{DistortionConfig, TableEntry, TabulatedConfig};
use mvlayers::model::POS_EPS;
use mvlayers::scenario::{gen_synthetic, parse_scenario_str, scenario_to_string, GeneratorConfig};
use mvlayers::{
    solve_bruteforce, solve_greedy, solve_optimal, DistortionOracle, ScenarioSpec, SolverLimits,
    ValidationError,
};

fn parametric_spec() -> ScenarioSpec {
    gen_synthetic(&GeneratorConfig {
        name: "tab".to_string(),
        views: 4,
        window_positions: 6,
        layers: 2,
        levels_mb: vec![0.0, 1.0, 2.0],
        seed: 77,
        ..Default::default()
    })
    .unwrap()
}

/// Dumps the spec's oracle into a dense table over every queryable key.
fn tabulate(spec: &ScenarioSpec) -> ScenarioSpec {
    let oracle = DistortionOracle::new(spec).unwrap();
    let levels = spec.grid.levels.len();
    let mut table = Vec::new();
    for (u, &pu) in spec.window.positions.iter().enumerate() {
        for vl in 0..spec.view_count() {
            for vr in (vl + 1)..spec.view_count() {
                if spec.views.positions[vl] > pu + POS_EPS
                    || spec.views.positions[vr] < pu - POS_EPS
                {
                    continue;
                }
                for rl in 1..levels {
                    for rr in 1..levels {
                        table.push(TableEntry {
                            u,
                            vl,
                            vr,
                            rl,
                            rr,
                            mse: oracle.point(u, pu, vl, rl, vr, rr),
                        });
                    }
                }
            }
        }
    }
    let mut out = spec.clone();
    out.distortion = DistortionConfig::Tabulated(TabulatedConfig {
        texture_mse: (0..spec.view_count())
            .map(|v| oracle.curve(v).texture_mse.clone())
            .collect(),
        depth_mse: (0..spec.view_count())
            .map(|v| oracle.curve(v).depth_mse)
            .collect(),
        table,
        table_file: None,
    });
    out.validate().unwrap();
    out
}

#[test]
fn table_reproduces_the_parametric_oracle() {
    let spec = parametric_spec();
    let tab = tabulate(&spec);
    let po = DistortionOracle::new(&spec).unwrap();
    let to = DistortionOracle::new(&tab).unwrap();
    for (u, &pu) in spec.window.positions.iter().enumerate() {
        for vl in 0..spec.view_count() {
            for vr in (vl + 1)..spec.view_count() {
                if spec.views.positions[vl] > pu + POS_EPS
                    || spec.views.positions[vr] < pu - POS_EPS
                {
                    continue;
                }
                for rl in 1..spec.grid.levels.len() {
                    for rr in 1..spec.grid.levels.len() {
                        assert_eq!(
                            po.point(u, pu, vl, rl, vr, rr),
                            to.point(u, pu, vl, rl, vr, rr),
                            "({u}, {vl}, {vr}, {rl}, {rr})"
                        );
                    }
                }
            }
        }
    }
}

#[test]
fn solvers_agree_across_backends() {
    let spec = parametric_spec();
    let tab = tabulate(&spec);
    let limits = SolverLimits::default();
    let po = DistortionOracle::new(&spec).unwrap();
    let to = DistortionOracle::new(&tab).unwrap();

    let op = solve_optimal(&spec, &po, &limits).unwrap();
    let ot = solve_optimal(&tab, &to, &limits).unwrap();
    assert_eq!(op.assignment, ot.assignment);
    assert!((op.objective - ot.objective).abs() < 1e-9);

    let bt = solve_bruteforce(&tab, &to, &limits).unwrap();
    assert!((ot.objective - bt.objective).abs() < 1e-9);

    let gp = solve_greedy(&spec, &po).unwrap();
    let gt = solve_greedy(&tab, &to).unwrap();
    assert_eq!(gp.assignment, gt.assignment);
}

#[test]
fn tabulated_scenario_round_trips_through_json() {
    let tab = tabulate(&parametric_spec());
    let text = scenario_to_string(&tab);
    let reloaded = parse_scenario_str(&text).unwrap();
    assert_eq!(reloaded, tab);
}

#[test]
fn missing_table_entry_is_a_load_error() {
    let mut tab = tabulate(&parametric_spec());
    if let DistortionConfig::Tabulated(t) = &mut tab.distortion {
        t.table.pop();
    }
    match tab.validate() {
        Err(ValidationError { invariant, .. }) => assert_eq!(invariant, "table-complete"),
        Ok(()) => panic!("incomplete table accepted"),
    }
    // The JSON path reports the same violation.
    let text = scenario_to_string(&tab);
    assert!(parse_scenario_str(&text).is_err());
}

#[test]
fn referenced_table_file_loads_like_an_embedded_one() {
    let tab = tabulate(&parametric_spec());
    let DistortionConfig::Tabulated(cfg) = &tab.distortion else {
        unreachable!()
    };
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("table.json"),
        serde_json::to_string(&cfg.table).unwrap(),
    )
    .unwrap();

    // Rewrite the scenario to reference the side file instead.
    let mut doc: serde_json::Value = serde_json::from_str(&scenario_to_string(&tab)).unwrap();
    doc["distortion"]["table"] = serde_json::json!([]);
    doc["distortion"]["table_file"] = serde_json::json!("table.json");
    let scenario_path = dir.path().join("scenario.json");
    std::fs::write(&scenario_path, serde_json::to_string_pretty(&doc).unwrap()).unwrap();

    let loaded = mvlayers::load_scenario(&scenario_path).unwrap();
    assert_eq!(loaded, tab);

    // The string parser has no directory to resolve against and must say so.
    let text = std::fs::read_to_string(&scenario_path).unwrap();
    match parse_scenario_str(&text) {
        Err(mvlayers::ScenarioError::Validation(e)) => {
            assert_eq!(e.invariant, "table-file-unresolved")
        }
        other => panic!("expected unresolved-table error, got {other:?}"),
    }
}

#[test]
fn out_of_range_table_key_is_rejected() {
    let mut tab = tabulate(&parametric_spec());
    if let DistortionConfig::Tabulated(t) = &mut tab.distortion {
        t.table.push(TableEntry {
            u: 0,
            vl: 0,
            vr: 1,
            rl: 0, // level 0 is "not transmitted" and cannot be keyed
            rr: 1,
            mse: 1.0,
        });
    }
    match tab.validate() {
        Err(ValidationError { invariant, .. }) => assert_eq!(invariant, "table-key-range"),
        Ok(()) => panic!("invalid key accepted"),
    }
}
