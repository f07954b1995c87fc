//! Fit the answerer model to an oracle by imitation and watch its
//! held-out agreement grow.
//!
//!     cargo run --release --example answerer_imitation

use infoseek::answerer::{AnswerExample, AnswererFeatures, AnswererModel, AnswererObjective};
use infoseek::domain::featurize;
use infoseek::env::{generate_scene, oracle_answer, GameConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn examples(cfg: &GameConfig, n: usize, rng: &mut ChaCha8Rng) -> infoseek::Result<Vec<AnswerExample>> {
    let schema = &cfg.schema;
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let scene = generate_scene(cfg, rng)?;
        let mut history = Vec::new();
        for _ in 0..cfg.t_max {
            let token = rng.random_range(0..schema.vocab_size());
            let q = schema.query_of_token(token)?;
            let answer = oracle_answer(&scene, q, rng, cfg.oracle_noise);
            out.push(AnswerExample { state: featurize(&scene, &history)?, token, answer, goal_scores: None });
            history.push((q, answer));
        }
    }
    Ok(out)
}

fn main() -> infoseek::Result<()> {
    let cfg = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let train = examples(&cfg, 4000, &mut rng)?;
    let test = examples(&cfg, 1000, &mut rng)?;

    for features in [AnswererFeatures::Plain, AnswererFeatures::QueryAligned] {
        let mut model = AnswererModel::new(&cfg.schema, features);
        println!("{features:?} ({} inputs)", model.input_dim());
        for epoch in 0..=200 {
            if epoch % 40 == 0 {
                println!("  epoch {epoch:>3}: train {:.3}, held out {:.3}",
                    model.accuracy(&train)?, model.accuracy(&test)?);
            }
            for batch in train.chunks(256) {
                model.update(batch, 0.01 / batch.len() as f64, AnswererObjective::Imitation)?;
            }
        }
    }
    Ok(())
}
