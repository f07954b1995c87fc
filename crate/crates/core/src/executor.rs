//! Goal executor: exact consistency filtering over the scene's candidates.

use crate::domain::{Answer, Query, Scene, SceneObject};

/// Weight of an inconsistent (query, answer) pair relative to `1 - EPSILON`.
pub const EPSILON: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct GoalPosterior {
    pub probs: Vec<f64>,
}

impl GoalPosterior {
    /// Highest-probability object, lowest id on ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best
    }
}

/// Whether `object` agrees with an exchange; `None` for NA, which carries no
/// evidence.
pub fn consistency(object: &SceneObject, query: Query, answer: Answer) -> Option<bool> {
    match answer {
        Answer::NA => None,
        Answer::Yes => Some(object.has(query)),
        Answer::No => Some(!object.has(query)),
    }
}

/// Consistency factor of one exchange for one object.
pub fn factor(object: &SceneObject, query: Query, answer: Answer) -> f64 {
    match consistency(object, query, answer) {
        None => 1.0,
        Some(true) => 1.0 - EPSILON,
        Some(false) => EPSILON,
    }
}

/// Posterior over candidates from a uniform prior. Every non-NA exchange
/// multiplies an object's weight by `1 - EPSILON` if consistent and `EPSILON`
/// otherwise; weights are formed from the two counts so that objects with
/// equal evidence get bit-identical probabilities.
pub fn candidate_posterior(scene: &Scene, history: &[(Query, Answer)]) -> GoalPosterior {
    let weights: Vec<f64> = scene
        .objects
        .iter()
        .map(|o| {
            let (mut agree, mut clash) = (0i32, 0i32);
            for &(q, a) in history {
                match consistency(o, q, a) {
                    Some(true) => agree += 1,
                    Some(false) => clash += 1,
                    None => {}
                }
            }
            (1.0 - EPSILON).powi(agree) * EPSILON.powi(clash)
        })
        .collect();
    let z: f64 = weights.iter().sum();
    GoalPosterior {
        probs: weights.into_iter().map(|w| w / z).collect(),
    }
}

pub fn guess(scene: &Scene, history: &[(Query, Answer)]) -> usize {
    candidate_posterior(scene, history).argmax()
}

/// Which object the executor score is read at.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreAt {
    /// The executor's current best guess given the history alone.
    TopCandidate,
    Object(usize),
}

/// Posterior probability, after appending a hypothetical exchange, of either
/// the current top candidate or a named object.
pub fn executor_score(
    scene: &Scene,
    history: &[(Query, Answer)],
    hypothetical: (Query, Answer),
    at: ScoreAt,
) -> f64 {
    let object = match at {
        ScoreAt::TopCandidate => candidate_posterior(scene, history).argmax(),
        ScoreAt::Object(i) => i,
    };
    let mut extended = history.to_vec();
    extended.push(hypothetical);
    candidate_posterior(scene, &extended).probs[object]
}

/// Scores for the three hypothetical answers to `query`, indexed by
/// [`Answer::index`].
pub fn executor_scores(
    scene: &Scene,
    history: &[(Query, Answer)],
    query: Query,
    at: ScoreAt,
) -> [f64; 3] {
    Answer::ALL.map(|a| executor_score(scene, history, (query, a), at))
}
