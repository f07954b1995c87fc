//! The seeker's internal imitation of the oracle: a softmax-linear model
//! `p(a | q, s; omega)` over {Yes, No, NA}, trained online on observed answers.

use ndarray::{Array1, Array2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Answer, AttributeSchema, DialogState};
use crate::error::{invalid, Error, Result};
use crate::policy::{log_softmax_at, outer, sample_index, softmax, ParticleEnsemble};

/// Input encoding for the answerer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AnswererFeatures {
    /// `[phi(s); onehot(q)]`.
    #[default]
    Plain,
    /// `[phi(s); onehot(q); psi(s, q)]` where `psi` reads the history and
    /// scene entries aligned with the asked token: its own signed answer, its
    /// scene frequency, whether a sibling value was confirmed, and the share
    /// of sibling values already denied.
    QueryAligned,
}

impl AnswererFeatures {
    const ALIGNED: usize = 4;
}

/// Training signal for [`AnswererModel::update`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum AnswererObjective {
    /// Cross-entropy on the oracle's observed answers.
    #[default]
    Imitation,
    /// Ascent on `log E_{a ~ p(.|q,s;omega)}[p(target | a, s)]`.
    GoalLikelihood,
}

/// One observed exchange.
#[derive(Debug, Clone)]
pub struct AnswerExample {
    pub state: DialogState,
    pub token: usize,
    pub answer: Answer,
    /// Executor probability of the true target after each hypothetical
    /// answer, indexed by [`Answer::index`]. Only read by the goal objective.
    pub goal_scores: Option<[f64; 3]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnswererModel {
    pub omega: Array2<f64>,
    pub features: AnswererFeatures,
    vocab: usize,
    state_dim: usize,
    /// attribute token range for each token
    siblings: Vec<std::ops::Range<usize>>,
}

impl AnswererModel {
    pub fn new(schema: &AttributeSchema, features: AnswererFeatures) -> Self {
        let vocab = schema.vocab_size();
        let state_dim = schema.feature_dim();
        let siblings = (0..vocab)
            .map(|t| {
                let q = schema.query_of_token(t).expect("token in range");
                schema.attribute_tokens(q.attribute)
            })
            .collect();
        let input_dim = state_dim
            + vocab
            + match features {
                AnswererFeatures::Plain => 0,
                AnswererFeatures::QueryAligned => AnswererFeatures::ALIGNED,
            };
        Self {
            omega: Array2::zeros((3, input_dim)),
            features,
            vocab,
            state_dim,
            siblings,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.omega.ncols()
    }

    pub fn vocab(&self) -> usize {
        self.vocab
    }

    /// Replaces the weights, checking the shape.
    pub fn set_omega(&mut self, omega: Array2<f64>) -> Result<()> {
        if omega.dim() != self.omega.dim() {
            return Err(invalid(format!(
                "answerer weights must be {:?}, got {:?}",
                self.omega.dim(),
                omega.dim()
            )));
        }
        self.omega = omega;
        Ok(())
    }

    pub fn input(&self, state: &DialogState, token: usize) -> Result<Array1<f64>> {
        if state.dim() != self.state_dim {
            return Err(invalid(format!(
                "state dimension {} does not match answerer ({})",
                state.dim(),
                self.state_dim
            )));
        }
        if token >= self.vocab {
            return Err(invalid(format!("token {token} outside vocabulary")));
        }
        let mut x = Array1::zeros(self.input_dim());
        x.slice_mut(ndarray::s![..self.state_dim])
            .assign(&state.feature_vector);
        x[self.state_dim + token] = 1.0;
        if self.features == AnswererFeatures::QueryAligned {
            let base = self.state_dim + self.vocab;
            let sib = &self.siblings[token];
            let others = sib.clone().filter(|&t| t != token);
            let n_others = (sib.len() - 1) as f64;
            let confirmed = others.clone().any(|t| state.history_sign(t) > 0.0);
            let denied = others.filter(|&t| state.history_sign(t) < 0.0).count() as f64;
            x[base] = state.history_sign(token);
            x[base + 1] = state.scene_features[token];
            x[base + 2] = if confirmed { 1.0 } else { 0.0 };
            x[base + 3] = denied / n_others;
        }
        Ok(x)
    }

    pub fn predict_answer_dist(&self, state: &DialogState, token: usize) -> Result<Array1<f64>> {
        let x = self.input(state, token)?;
        Ok(softmax(&self.omega.dot(&x)))
    }

    /// Most likely answer; ties resolve in Yes, No, NA order.
    pub fn modal_answer(&self, state: &DialogState, token: usize) -> Result<Answer> {
        let p = self.predict_answer_dist(state, token)?;
        let mut best = 0;
        for i in 1..3 {
            if p[i] > p[best] {
                best = i;
            }
        }
        Ok(Answer::from_index(best))
    }

    pub fn log_likelihood(&self, state: &DialogState, token: usize, answer: Answer) -> Result<f64> {
        let x = self.input(state, token)?;
        Ok(log_softmax_at(&self.omega.dot(&x), answer.index()))
    }

    /// `grad_omega log p(answer | q, s; omega)`.
    pub fn log_likelihood_grad(
        &self,
        state: &DialogState,
        token: usize,
        answer: Answer,
    ) -> Result<Array2<f64>> {
        let x = self.input(state, token)?;
        let mut coeff = -softmax(&self.omega.dot(&x));
        coeff[answer.index()] += 1.0;
        Ok(outer(&coeff, &x))
    }

    /// `grad_omega log sum_a p(a | q, s; omega) g_a` for goal scores `g`.
    pub fn goal_likelihood_grad(
        &self,
        state: &DialogState,
        token: usize,
        goal_scores: &[f64; 3],
    ) -> Result<Array2<f64>> {
        let x = self.input(state, token)?;
        let p = softmax(&self.omega.dot(&x));
        let expected: f64 = (0..3).map(|a| p[a] * goal_scores[a]).sum();
        if !(expected > 0.0) {
            return Err(Error::Numeric("goal likelihood is zero".into()));
        }
        // d/dz_b log E = p_b (g_b - E) / E
        let coeff = Array1::from_shape_fn(3, |b| p[b] * (goal_scores[b] - expected) / expected);
        Ok(outer(&coeff, &x))
    }

    pub fn objective_grad(
        &self,
        batch: &[AnswerExample],
        objective: AnswererObjective,
    ) -> Result<Array2<f64>> {
        if batch.is_empty() {
            return Err(invalid("answerer batch is empty"));
        }
        let mut total = Array2::zeros(self.omega.dim());
        for ex in batch {
            let g = match objective {
                AnswererObjective::Imitation => {
                    self.log_likelihood_grad(&ex.state, ex.token, ex.answer)?
                }
                AnswererObjective::GoalLikelihood => {
                    let scores = ex
                        .goal_scores
                        .as_ref()
                        .ok_or_else(|| invalid("goal objective needs goal scores"))?;
                    self.goal_likelihood_grad(&ex.state, ex.token, scores)?
                }
            };
            total += &g;
        }
        Ok(total)
    }

    /// `omega += step * sum_batch grad`; rejected if the gradient is not finite.
    pub fn update(
        &mut self,
        batch: &[AnswerExample],
        step: f64,
        objective: AnswererObjective,
    ) -> Result<()> {
        if !(step > 0.0) {
            return Err(invalid("answerer step size must be positive"));
        }
        let g = self.objective_grad(batch, objective)?;
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite answerer gradient".into()));
        }
        self.omega.scaled_add(step, &g);
        Ok(())
    }

    /// Fraction of examples whose modal prediction equals the observed answer.
    pub fn accuracy(&self, batch: &[AnswerExample]) -> Result<f64> {
        if batch.is_empty() {
            return Ok(0.0);
        }
        let mut hits = 0usize;
        for ex in batch {
            if self.modal_answer(&ex.state, ex.token)? == ex.answer {
                hits += 1;
            }
        }
        Ok(hits as f64 / batch.len() as f64)
    }
}

/// Monte Carlo estimate of the answer marginal: for each of `samples` draws a
/// particle is picked uniformly, a query is drawn from its policy and the
/// answerer's predictive distribution at that query is accumulated.
pub fn marginal_answer_dist<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    model: &AnswererModel,
    state: &DialogState,
    rng: &mut R,
    samples: usize,
) -> Result<Array1<f64>> {
    if ensemble.is_empty() {
        return Err(invalid("empty ensemble"));
    }
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let mut acc = Array1::zeros(3);
    for _ in 0..samples {
        let i = rng.random_range(0..ensemble.len());
        let probs = ensemble.particles[i].action_probs(state)?;
        let token = sample_index(probs.as_slice().expect("contiguous"), rng);
        acc += &model.predict_answer_dist(state, token)?;
    }
    acc /= samples as f64;
    Ok(acc)
}
