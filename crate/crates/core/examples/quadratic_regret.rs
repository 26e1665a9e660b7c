//! Cumulative and simple regret of the adaptive engine on the 1-D quadratic.

use atb::engine::stream_rng;
use atb::{run, CoordinateTree, EngineConstants, Environment, NoiseModel};

fn main() -> atb::Result<()> {
    let env = Environment::named("quadratic", 1, NoiseModel::Bernoulli)?;
    let c = EngineConstants::new(0.2, 0.5, 1, 2)?;
    println!("T R_T S_T splits");
    for k in 10..=14 {
        let horizon = 1 << k;
        let rec = run(vec![CoordinateTree::Dyadic], c, &env, horizon, &mut stream_rng(1, k))?;
        println!(
            "{horizon} {:.2} {:.5} {}",
            rec.cumulative_regret(),
            rec.simple_regret(),
            rec.splits
        );
    }
    Ok(())
}
