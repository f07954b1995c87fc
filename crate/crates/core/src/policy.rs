//! Softmax-linear questioning policy `pi(q | s; theta)` with one logit row per
//! query token.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{AttributeSchema, DialogState, Query};
use crate::error::{invalid, Result};

/// One policy parameter setting, shape `|Q| x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyParticle {
    pub theta: Array2<f64>,
}

impl PolicyParticle {
    pub fn zeros(vocab: usize, dim: usize) -> Self {
        Self {
            theta: Array2::zeros((vocab, dim)),
        }
    }

    /// Entries drawn i.i.d. from `N(0, scale^2)`.
    pub fn random<R: Rng + ?Sized>(vocab: usize, dim: usize, scale: f64, rng: &mut R) -> Self {
        let normal = Normal::new(0.0, scale).expect("scale must be finite and non-negative");
        Self {
            theta: Array2::from_shape_simple_fn((vocab, dim), || normal.sample(rng)),
        }
    }

    pub fn vocab(&self) -> usize {
        self.theta.nrows()
    }

    pub fn dim(&self) -> usize {
        self.theta.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.theta.iter().all(|x| x.is_finite())
    }

    pub fn logits(&self, state: &DialogState) -> Result<Array1<f64>> {
        if state.dim() != self.dim() {
            return Err(invalid(format!(
                "state dimension {} does not match particle dimension {}",
                state.dim(),
                self.dim()
            )));
        }
        Ok(self.theta.dot(&state.feature_vector))
    }

    pub fn action_probs(&self, state: &DialogState) -> Result<Array1<f64>> {
        Ok(softmax(&self.logits(state)?))
    }

    /// Draws a token id.
    pub fn sample_token<R: Rng + ?Sized>(&self, state: &DialogState, rng: &mut R) -> Result<usize> {
        let probs = self.action_probs(state)?;
        Ok(sample_index(probs.as_slice().expect("contiguous"), rng))
    }

    pub fn sample_query<R: Rng + ?Sized>(
        &self,
        schema: &AttributeSchema,
        state: &DialogState,
        rng: &mut R,
    ) -> Result<Query> {
        let token = self.sample_token(state, rng)?;
        schema.query_of_token(token)
    }

    /// `grad_theta log pi(token | state) = (onehot(token) - p) phi^T`.
    pub fn log_prob_grad(&self, state: &DialogState, token: usize) -> Result<Array2<f64>> {
        if token >= self.vocab() {
            return Err(invalid(format!("token {token} outside vocabulary")));
        }
        let mut coeff = -self.action_probs(state)?;
        coeff[token] += 1.0;
        Ok(outer(&coeff, &state.feature_vector))
    }

    pub fn log_prob(&self, state: &DialogState, token: usize) -> Result<f64> {
        let logits = self.logits(state)?;
        Ok(log_softmax_at(&logits, token))
    }
}

/// Particles sharing one shape.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleEnsemble {
    pub particles: Vec<PolicyParticle>,
}

impl ParticleEnsemble {
    pub fn new(particles: Vec<PolicyParticle>) -> Result<Self> {
        let first = particles
            .first()
            .ok_or_else(|| invalid("ensemble needs at least one particle"))?;
        let shape = first.theta.dim();
        if particles.iter().any(|p| p.theta.dim() != shape) {
            return Err(invalid("all particles must share one shape"));
        }
        Ok(Self { particles })
    }

    pub fn random<R: Rng + ?Sized>(
        n: usize,
        vocab: usize,
        dim: usize,
        scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        Self::new(
            (0..n)
                .map(|_| PolicyParticle::random(vocab, dim, scale, rng))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.particles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.particles.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        self.particles[0].theta.dim()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, PolicyParticle> {
        self.particles.iter()
    }
}

pub fn softmax(logits: &Array1<f64>) -> Array1<f64> {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let mut p = logits.mapv(|x| (x - max).exp());
    let z = p.sum();
    p /= z;
    p
}

pub(crate) fn log_softmax_at(logits: &Array1<f64>, index: usize) -> f64 {
    let max = logits.fold(f64::NEG_INFINITY, |m, &x| m.max(x));
    let lse = logits.iter().map(|x| (x - max).exp()).sum::<f64>().ln() + max;
    logits[index] - lse
}

pub(crate) fn outer(a: &Array1<f64>, b: &Array1<f64>) -> Array2<f64> {
    a.view().insert_axis(Axis(1)).dot(&b.view().insert_axis(Axis(0)))
}

/// Inverse-CDF draw from a discrete distribution.
pub fn sample_index<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left u above the cumulative sum; take the last non-zero entry
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}
