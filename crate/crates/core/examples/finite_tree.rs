//! A categorical axis: a small taxonomy with a reward per leaf.

use atb::engine::stream_rng;
use atb::{run, CoordinateTree, EngineConstants, Environment};

fn main() -> atb::Result<()> {
    let tree = CoordinateTree::from_json(
        r#"{"arity": 3, "nodes": {
            "": ["fruit", "veg", "grain"],
            "0": ["apple", "pear"],
            "2": ["rice", "oat", "rye"]
        }}"#,
    )?;
    let env = Environment::from_json(
        r#"{"family": "leaf-table",
            "values": {"0.0": 0.2, "0.1": 0.3, "1": 0.9, "2.0": 0.1, "2.1": 0.4, "2.2": 0.5}}"#,
    )?;
    let c = EngineConstants::new(0.5, 1.0 / 3.0, 1, tree.max_arity())?;
    let rec = run(vec![tree], c, &env, 5000, &mut stream_rng(3, 0))?;
    println!("recommended leaf {} with mean {:.2}", rec.recommendation.serialise(), rec.recommendation_mean);
    println!("cumulative regret {:.1} over {} steps", rec.cumulative_regret(), rec.horizon());
    Ok(())
}
