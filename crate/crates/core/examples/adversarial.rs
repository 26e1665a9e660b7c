//! The nested-plateau instance: one hidden arm among `2^level` at the chosen depth.

use atb::engine::stream_rng;
use atb::env::{adversarial_level, make_adversarial};
use atb::{run, CoordinateTree, EngineConstants, Environment, NoiseModel};

fn main() -> atb::Result<()> {
    let horizon = 4096;
    let level = adversarial_level(1.0, horizon as u64);
    let f = make_adversarial(1.0, level, 3, horizon as u64)?;
    let env = Environment::new(f, NoiseModel::Bernoulli)?;
    let c = EngineConstants::new(0.2, 0.5, 1, 2)?;
    let rec = run(vec![CoordinateTree::Dyadic], c, &env, horizon, &mut stream_rng(4, 0))?;
    println!("level {level}, mu* = {:.4}", rec.mu_star);
    println!("cumulative regret {:.1}, per step {:.4}", rec.cumulative_regret(), rec.cumulative_regret() / horizon as f64);
    Ok(())
}
