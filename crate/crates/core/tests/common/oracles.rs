//! Independent reference computations the library is checked against.

use infoseek::answerer::{AnswerExample, AnswererModel};
use infoseek::domain::{featurize, Answer, AttributeSchema, Query, Scene};
use infoseek::executor::EPSILON;
use infoseek::policy::PolicyParticle;
use infoseek::rl::{trajectory_grad, Baseline, Trajectory, TrajectoryStep};
use ndarray::Array2;

use super::object;

pub struct BruteForce {
    pub probs: Vec<f64>,
    /// Objects contradicted by the fewest answers, ascending id.
    pub modes: Vec<usize>,
}

/// Goal posterior by enumerating every object as the hypothetical target and
/// scoring the whole history in log space.
pub fn brute_force_posterior(scene: &Scene, history: &[(Query, Answer)]) -> BruteForce {
    let clashes: Vec<usize> = scene
        .objects
        .iter()
        .map(|o| {
            history
                .iter()
                .filter(|(q, a)| {
                    let holds = o.attribute_values[q.attribute] == q.value;
                    match a {
                        Answer::Yes => !holds,
                        Answer::No => holds,
                        Answer::NA => false,
                    }
                })
                .count()
        })
        .collect();
    let informative = history.iter().filter(|(_, a)| *a != Answer::NA).count();
    let log_w: Vec<f64> = clashes
        .iter()
        .map(|&c| (informative - c) as f64 * (1.0 - EPSILON).ln() + c as f64 * EPSILON.ln())
        .collect();
    let m = log_w.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = log_w.iter().map(|l| (l - m).exp()).collect();
    let z: f64 = w.iter().sum();
    let fewest = *clashes.iter().min().unwrap();
    BruteForce {
        probs: w.iter().map(|x| x / z).collect(),
        modes: (0..clashes.len()).filter(|&i| clashes[i] == fewest).collect(),
    }
}

/// Two-round game with four tokens, a noisy oracle and a per-question
/// penalty, small enough to enumerate every trajectory.
pub struct ToyGame {
    pub scene: Scene,
    pub rounds: usize,
    pub p_flip: f64,
    pub penalty: f64,
}

impl ToyGame {
    pub fn new() -> Self {
        let schema = AttributeSchema::from_cardinalities(&[2, 2]).unwrap();
        let objects = vec![object(0, &[0, 0]), object(1, &[0, 1]), object(2, &[1, 0])];
        ToyGame {
            scene: Scene::new(schema, objects, 1).unwrap(),
            rounds: 2,
            p_flip: 0.25,
            penalty: 0.1,
        }
    }

    fn truthful(&self, q: Query) -> Answer {
        if self.scene.target().attribute_values[q.attribute] == q.value {
            Answer::Yes
        } else {
            Answer::No
        }
    }

    /// Every trajectory with its probability under `theta`.
    pub fn enumerate(&self, theta: &Array2<f64>) -> Vec<(f64, Trajectory)> {
        let mut out = Vec::new();
        self.extend(theta, Vec::new(), 1.0, &mut out);
        out
    }

    fn extend(
        &self,
        theta: &Array2<f64>,
        steps: Vec<TrajectoryStep>,
        prob: f64,
        out: &mut Vec<(f64, Trajectory)>,
    ) {
        let history: Vec<(Query, Answer)> = steps.iter().map(|s| (s.query, s.answer)).collect();
        if steps.len() == self.rounds {
            let guess = guess_from_counts(&self.scene, &history);
            let success = guess == self.scene.target_index;
            let mut steps = steps;
            let last = steps.last_mut().unwrap();
            last.extrinsic_reward += if success { 1.0 } else { 0.0 };
            last.shaped_reward = last.extrinsic_reward;
            out.push((
                prob,
                Trajectory {
                    steps,
                    guess,
                    success,
                    scene: self.scene.clone(),
                },
            ));
            return;
        }
        let state = featurize(&self.scene, &history).unwrap();
        let phi = state.feature_vector.to_vec();
        let pi = policy_probs(theta, &phi);
        for token in 0..self.scene.schema.vocab_size() {
            let query = self.scene.schema.query_of_token(token).unwrap();
            let truth = self.truthful(query);
            let flipped = if truth == Answer::Yes { Answer::No } else { Answer::Yes };
            for (answer, p_answer) in [(truth, 1.0 - self.p_flip), (flipped, self.p_flip)] {
                let mut next = steps.clone();
                next.push(TrajectoryStep {
                    state: state.clone(),
                    token,
                    query,
                    answer,
                    extrinsic_reward: -self.penalty,
                    intrinsic_gain: 0.0,
                    shaped_reward: -self.penalty,
                });
                self.extend(theta, next, prob * pi[token] * p_answer, out);
            }
        }
    }

    /// Expected undiscounted return.
    pub fn objective(&self, theta: &Array2<f64>) -> f64 {
        self.enumerate(theta)
            .iter()
            .map(|(p, tr)| p * tr.steps.iter().map(|s| s.extrinsic_reward).sum::<f64>())
            .sum()
    }

    /// Gradient of [`ToyGame::objective`] by Richardson-extrapolated central
    /// differences.
    pub fn objective_grad(&self, theta: &Array2<f64>) -> Array2<f64> {
        let h = 1e-3;
        let diff = |t: &mut Array2<f64>, idx: (usize, usize), step: f64| {
            let orig = t[idx];
            t[idx] = orig + step;
            let up = self.objective(t);
            t[idx] = orig - step;
            let down = self.objective(t);
            t[idx] = orig;
            (up - down) / (2.0 * step)
        };
        let mut t = theta.clone();
        Array2::from_shape_fn(theta.dim(), |idx| {
            let coarse = diff(&mut t, idx, h);
            let fine = diff(&mut t, idx, h / 2.0);
            (4.0 * fine - coarse) / 3.0
        })
    }

    /// Exact expectation of the per-trajectory score-function estimator.
    pub fn expected_estimate(&self, theta: &Array2<f64>, baseline: &Baseline) -> Array2<f64> {
        let particle = PolicyParticle {
            theta: theta.clone(),
        };
        let mut total = Array2::zeros(theta.dim());
        for (p, tr) in self.enumerate(theta) {
            total.scaled_add(p, &trajectory_grad(&particle, &tr, baseline, 1.0).unwrap());
        }
        total
    }
}

/// Executor guess from clash counts: fewest contradictions, lowest id.
pub fn guess_from_counts(scene: &Scene, history: &[(Query, Answer)]) -> usize {
    brute_force_posterior(scene, history).modes[0]
}

pub fn policy_probs(theta: &Array2<f64>, phi: &[f64]) -> Vec<f64> {
    let z: Vec<f64> = (0..theta.nrows())
        .map(|r| (0..phi.len()).map(|c| theta[[r, c]] * phi[c]).sum())
        .collect();
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

pub const H: f64 = 1e-5;

pub fn logsumexp(z: &[f64]) -> f64 {
    let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

/// `log pi(token | s)` by explicit loops over `theta` and `phi`.
pub fn log_pi(theta: &Array2<f64>, phi: &[f64], token: usize) -> f64 {
    let z: Vec<f64> = (0..theta.nrows())
        .map(|r| (0..phi.len()).map(|c| theta[[r, c]] * phi[c]).sum())
        .collect();
    z[token] - logsumexp(&z)
}

pub fn flat(a: &Array2<f64>) -> Vec<f64> {
    a.iter().copied().collect()
}

pub fn central_diff(x: &Array2<f64>, f: impl Fn(&Array2<f64>) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut y = x.clone();
    for idx in 0..x.len() {
        let (r, c) = (idx / x.ncols(), idx % x.ncols());
        let orig = y[[r, c]];
        y[[r, c]] = orig + H;
        let up = f(&y);
        y[[r, c]] = orig - H;
        let down = f(&y);
        y[[r, c]] = orig;
        out.push((up - down) / (2.0 * H));
    }
    out
}

pub fn batch_log_likelihood(model: &AnswererModel, omega: &Array2<f64>, batch: &[AnswerExample]) -> f64 {
    let mut m = model.clone();
    m.set_omega(omega.clone()).unwrap();
    batch
        .iter()
        .map(|ex| {
            let x = m.input(&ex.state, ex.token).unwrap();
            let z: Vec<f64> = (0..3)
                .map(|r| (0..x.len()).map(|c| omega[[r, c]] * x[c]).sum())
                .collect();
            z[ex.answer.index()] - logsumexp(&z)
        })
        .sum()
}

pub fn batch_goal_likelihood(model: &AnswererModel, omega: &Array2<f64>, batch: &[AnswerExample]) -> f64 {
    let mut m = model.clone();
    m.set_omega(omega.clone()).unwrap();
    batch
        .iter()
        .map(|ex| {
            let x = m.input(&ex.state, ex.token).unwrap();
            let z: Vec<f64> = (0..3)
                .map(|r| (0..x.len()).map(|c| omega[[r, c]] * x[c]).sum())
                .collect();
            let lse = logsumexp(&z);
            let g = ex.goal_scores.unwrap();
            (0..3).map(|a| (z[a] - lse).exp() * g[a]).sum::<f64>().ln()
        })
        .sum()
}
