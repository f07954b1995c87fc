//! Price every possible question in one game state with the optimistic
//! gain bound, and show that a question whose answer is already certain
//! is worth nothing.
//!
//!     cargo run --example gain_pricing

use infoseek::answerer::{AnswererFeatures, AnswererModel};
use infoseek::domain::{featurize, Answer};
use infoseek::env::{generate_scene, GameConfig};
use infoseek::executor::ScoreAt;
use infoseek::gain::{gain_statistics, GainParams, UtilityKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> infoseek::Result<()> {
    let cfg = GameConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let scene = generate_scene(&cfg, &mut rng)?;
    let schema = &scene.schema;
    let state = featurize(&scene, &[])?;

    // an untrained answerer is uniform over Yes / No / NA
    let answerer = AnswererModel::new(schema, AnswererFeatures::Plain);
    for utility in [UtilityKind::Entropy, UtilityKind::Exp] {
        println!("utility {utility:?}");
        for beta in [0.5, 1.0, 2.0] {
            let params = GainParams { samples: 64, utility, beta };
            let mut row = Vec::new();
            for token in 0..schema.vocab_size() {
                let q = schema.query_of_token(token)?;
                let truth = if scene.target().has(q) { Answer::Yes } else { Answer::No };
                let g = gain_statistics(&scene, &state, q, &answerer, &params, truth,
                    ScoreAt::Object(scene.target_index), &mut rng)?;
                row.push(format!("{}={:+.3}", schema.value_name(q.attribute, q.value), g.g_hat));
            }
            println!("  beta {beta}: {}", row.join(" "));
        }
    }

    // certain of the answer: every sample equals the reference
    let mut sure = AnswererModel::new(schema, AnswererFeatures::Plain);
    sure.omega[[Answer::No.index(), schema.feature_dim() - 1]] = 1000.0;
    let q = schema.query_of_token(0)?;
    let g = gain_statistics(&scene, &state, q, &sure, &GainParams::default(), Answer::No,
        ScoreAt::Object(scene.target_index), &mut rng)?;
    println!("known answer: mu {} sigma {} G {}", g.mu_hat, g.sigma_hat, g.g_hat);
    Ok(())
}
