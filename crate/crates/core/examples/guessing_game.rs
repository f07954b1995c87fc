//! Play the guessing game by hand: a random scene, a few questions, and the
//! executor's belief over objects after every answer.
//!
//!     cargo run --example guessing_game -- [seed]

use infoseek::domain::Query;
use infoseek::env::{generate_scene, Episode, GameConfig};
use infoseek::executor::candidate_posterior;
use infoseek::harness::transcript;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> infoseek::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let cfg = GameConfig { oracle_noise: 0.1, ..GameConfig::default() };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scene = generate_scene(&cfg, &mut rng)?;
    let schema = scene.schema.clone();

    // cycle through the attributes, asking about their first two values
    let plan: Vec<Query> = (0..cfg.t_max)
        .map(|t| Query { attribute: t % schema.n_attributes(), value: (t / schema.n_attributes()) % 2 })
        .collect();

    let mut ep = Episode::new(scene);
    for q in plan {
        let out = ep.step(&cfg, q, &mut rng)?;
        let belief = candidate_posterior(&ep.scene, &ep.history);
        let shown: Vec<String> = belief.probs.iter().map(|p| format!("{p:.2}")).collect();
        println!(
            "{} {}? {:?}  belief [{}]  reward {}",
            schema.attribute_name(q.attribute),
            schema.value_name(q.attribute, q.value),
            out.answer,
            shown.join(" "),
            out.reward
        );
    }
    print!("{}", transcript(&ep.record()));
    Ok(())
}
