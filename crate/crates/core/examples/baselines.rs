//! The adaptive engine next to UCB1 on a grid and uniform sampling.

use atb::baselines::{choose_grid_size, ucb1_run, uniform_random_run};
use atb::engine::stream_rng;
use atb::{run, CoordinateTree, EngineConstants, Environment, NoiseModel};

fn main() -> atb::Result<()> {
    let env = Environment::named("quartic", 1, NoiseModel::Bernoulli)?;
    let trees = vec![CoordinateTree::Dyadic];
    let c = EngineConstants::new(0.2, 0.5, 1, 2)?;
    println!("T atb ucb1 uniform");
    for k in 10..=14 {
        let horizon = 1 << k;
        let a = run(trees.clone(), c, &env, horizon, &mut stream_rng(5, k))?;
        let u = ucb1_run(&env, choose_grid_size(horizon), horizon, &mut stream_rng(6, k))?;
        let r = uniform_random_run(&env, &trees, horizon, &mut stream_rng(7, k))?;
        println!(
            "{horizon} {:.1} {:.1} {:.1}",
            a.cumulative_regret(),
            u.cumulative_regret(),
            r.cumulative_regret()
        );
    }
    Ok(())
}
