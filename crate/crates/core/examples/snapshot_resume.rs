//! Stop a run, save engine and RNG state, and pick it up again.

use atb::engine::{load_checkpoint, save_checkpoint, stream_rng};
use atb::{CoordinateTree, Engine, EngineConstants, Environment, NoiseModel};

fn main() -> atb::Result<()> {
    let env = Environment::named("quadratic", 2, NoiseModel::Bernoulli)?;
    let c = EngineConstants::new(0.2, 0.5, 2, 2)?;
    let mut engine = Engine::init(vec![CoordinateTree::Dyadic; 2], c)?;
    let mut rng = stream_rng(8, 0);
    for _ in 0..1000 {
        engine.step(&env, &mut rng)?;
    }
    let path = std::env::temp_dir().join("atb_checkpoint.json");
    save_checkpoint(&path, &engine, &rng)?;
    println!("saved at t = {} to {}", engine.t(), path.display());

    let (mut resumed, mut rng) = load_checkpoint(&path)?;
    for _ in 0..1000 {
        resumed.step(&env, &mut rng)?;
    }
    println!("resumed to t = {}, recommendation {}", resumed.t(), resumed.recommend()?.serialise());
    std::fs::remove_file(path)?;
    Ok(())
}
