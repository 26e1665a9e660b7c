//! Two axes with different smoothness: `α = (2, 4)` in two dimensions.

use atb::engine::stream_rng;
use atb::{run, CoordinateTree, EngineConstants, Environment, NoiseModel};

fn main() -> atb::Result<()> {
    let env = Environment::named("mixed", 2, NoiseModel::Bernoulli)?;
    let c = EngineConstants::new(0.2, 0.5, 2, 2)?;
    let rec = run(vec![CoordinateTree::Dyadic; 2], c, &env, 20_000, &mut stream_rng(2, 0))?;
    println!("mu* = {:.4}", rec.mu_star);
    println!("recommendation {} (t* = {})", rec.recommendation.serialise(), rec.t_star);
    println!("simple regret {:.5}, cumulative {:.1}", rec.simple_regret(), rec.cumulative_regret());
    println!("boxes activated {}, most active at once {}", rec.activations, rec.max_active);
    Ok(())
}
