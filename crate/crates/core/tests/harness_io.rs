//! Files written by the harness, and determinism across reruns.

use std::fs;

use atb::engine::{load_checkpoint, save_checkpoint, stream_rng};
use atb::harness::{
    read_trajectory, run_experiment, run_one, write_trajectory, ExperimentConfig,
};
use atb::{CoordinateTree, Engine, EngineConstants, Environment, NoiseModel};

fn config(out: Option<&std::path::Path>, seeds: Vec<u64>, check_clean: bool) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_json(
        r#"{
            "environment": {"family": "power", "alphas": [2.0], "noise": {"kind": "bernoulli"}},
            "strategy": {"kind": "atb", "epsilon": 0.2, "gamma": 0.5},
            "horizons": [300, 600],
            "seeds": [0]
        }"#,
    )
    .unwrap();
    c.out = out.map(|p| p.to_path_buf());
    c.seeds = seeds;
    c.check_clean = check_clean;
    c
}

#[test]
fn trajectory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let rec = run_one(&config(None, vec![4], false), 4, 300).unwrap();
    let path = dir.path().join("t.csv");
    write_trajectory(&path, &rec.rows).unwrap();
    let back = read_trajectory(&path).unwrap();
    assert_eq!(back.len(), rec.rows.len());
    for (a, b) in rec.rows.iter().zip(&back) {
        assert_eq!(a.t, b.t);
        assert_eq!(a.box_serial, b.box_serial);
        assert_eq!(a.arm, b.arm);
        assert_eq!(a.reward, b.reward);
        assert_eq!(a.cum_regret, b.cum_regret);
        assert!(a.radius == b.radius || (a.radius.is_infinite() && b.radius.is_infinite()));
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut first = config(Some(a.path()), vec![1, 2, 3], false);
    first.workers = Some(3);
    let mut second = config(Some(b.path()), vec![1, 2, 3], false);
    second.workers = Some(1);
    run_experiment(&first).unwrap();
    run_experiment(&second).unwrap();
    for name in ["aggregate.csv", "run_s2_T600.csv"] {
        assert_eq!(
            fs::read(a.path().join(name)).unwrap(),
            fs::read(b.path().join(name)).unwrap(),
            "{name}"
        );
    }
}

#[test]
fn most_runs_are_clean() {
    let report = run_experiment(&config(None, (0..20).collect(), true)).unwrap();
    let clean = report.clean_fraction.unwrap();
    assert!(clean >= 0.8, "clean fraction {clean}");
}

#[test]
fn checkpoint_resume_matches_uninterrupted_run() {
    let env = Environment::named("quadratic", 2, NoiseModel::Bernoulli).unwrap();
    let c = EngineConstants::new(0.2, 0.5, 2, 2).unwrap();
    let trees = vec![CoordinateTree::Dyadic; 2];
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ck.json");

    let mut whole = Engine::init(trees.clone(), c).unwrap();
    let mut rng = stream_rng(7, 1);
    let mut expected = Vec::new();
    for _ in 0..400 {
        expected.push(whole.step(&env, &mut rng).unwrap());
    }

    let mut first = Engine::init(trees, c).unwrap();
    let mut rng = stream_rng(7, 1);
    for _ in 0..150 {
        first.step(&env, &mut rng).unwrap();
    }
    save_checkpoint(&path, &first, &rng).unwrap();
    drop(first);
    let (mut resumed, mut rng) = load_checkpoint(&path).unwrap();
    for row in &expected[150..] {
        let got = resumed.step(&env, &mut rng).unwrap();
        assert_eq!(got.box_serial, row.box_serial);
        assert_eq!(got.arm, row.arm);
        assert_eq!(got.reward, row.reward);
    }
    assert_eq!(resumed.recommend().unwrap(), whole.recommend().unwrap());
}
