#![allow(dead_code)]

pub mod oracles;

use infoseek::answerer::AnswerExample;
use infoseek::domain::{featurize, Answer, AttributeSchema, DialogState, Query, Scene, SceneObject};
use infoseek::executor::{executor_scores, ScoreAt};
use rand::Rng;

pub fn object(id: usize, values: &[usize]) -> SceneObject {
    SceneObject {
        id,
        attribute_values: values.to_vec(),
    }
}

/// A random valid scene: `n` objects with uniform attribute values, redrawn
/// until the target's signature is unique.
pub fn random_scene<R: Rng>(schema: &AttributeSchema, n: usize, rng: &mut R) -> Scene {
    loop {
        let objects: Vec<SceneObject> = (0..n)
            .map(|id| {
                let values: Vec<usize> = (0..schema.n_attributes())
                    .map(|a| rng.random_range(0..schema.n_values(a)))
                    .collect();
                object(id, &values)
            })
            .collect();
        let target = rng.random_range(0..n);
        if let Ok(scene) = Scene::new(schema.clone(), objects, target) {
            return scene;
        }
    }
}

pub fn random_query<R: Rng>(schema: &AttributeSchema, rng: &mut R) -> Query {
    schema
        .query_of_token(rng.random_range(0..schema.vocab_size()))
        .unwrap()
}

/// Random exchanges with arbitrary (possibly contradictory or NA) answers.
pub fn random_history<R: Rng>(schema: &AttributeSchema, len: usize, rng: &mut R) -> Vec<(Query, Answer)> {
    (0..len)
        .map(|_| {
            let q = random_query(schema, rng);
            (q, Answer::from_index(rng.random_range(0..3)))
        })
        .collect()
}

pub fn random_state<R: Rng>(schema: &AttributeSchema, rng: &mut R) -> (Scene, DialogState) {
    let n = rng.random_range(2..=8);
    let scene = random_scene(schema, n, rng);
    let len = rng.random_range(0..=5);
    let history = random_history(schema, len, rng);
    let state = featurize(&scene, &history).unwrap();
    (scene, state)
}

/// Schemas with 1 to 3 attributes of 2 to 4 values each.
pub fn random_schema<R: Rng>(rng: &mut R) -> AttributeSchema {
    let k = rng.random_range(1..=3);
    let cards: Vec<usize> = (0..k).map(|_| rng.random_range(2..=4)).collect();
    AttributeSchema::from_cardinalities(&cards).unwrap()
}

/// `max |a - b| / max |b|`, the largest entry error relative to the largest
/// reference entry.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = b.iter().fold(f64::MIN_POSITIVE, |m, x| m.max(x.abs()));
    a.iter()
        .zip(b)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

/// One to six answerer examples on random states, with goal scores at the
/// target and arbitrary observed answers.
pub fn random_answer_batch<R: Rng>(
    model_schema: &AttributeSchema,
    rng: &mut R,
) -> Vec<AnswerExample> {
    let size = rng.random_range(1..=6);
    (0..size)
        .map(|_| {
            let (scene, state): (_, DialogState) = random_state(model_schema, rng);
            let token = rng.random_range(0..model_schema.vocab_size());
            let query = model_schema.query_of_token(token).unwrap();
            let at = ScoreAt::Object(scene.target_index);
            AnswerExample {
                goal_scores: Some(executor_scores(&scene, &state.history, query, at)),
                state,
                token,
                answer: Answer::from_index(rng.random_range(0..3)),
            }
        })
        .collect()
}
