//! Pricing queries by an optimistic bound on the information gain the
//! answerer model expects from them, and folding that bound into rewards.
//!
//! For a query `q` the answerer's predictive distribution is sampled `M`
//! times. Each sample `a_m` yields a difference
//! `d_m = u(score(a*)) - u(score(a_m))`, where `score` is the executor's
//! posterior after the hypothetical exchange and `a*` the reference answer.
//! The estimate is `G = mean(d) + beta^2 * sd(d)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::answerer::AnswererModel;
use crate::domain::{Answer, DialogState, Query, Scene};
use crate::error::{invalid, Error, Result};
use crate::executor::{executor_scores, ScoreAt};
use crate::policy::{sample_index, ParticleEnsemble, PolicyParticle};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum UtilityKind {
    /// `-ln(score)`
    #[default]
    Entropy,
    /// `1 / (1 + e^score)`
    Exp,
}

impl std::str::FromStr for UtilityKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "entropy" => Ok(UtilityKind::Entropy),
            "exp" => Ok(UtilityKind::Exp),
            other => Err(invalid(format!("unknown utility '{other}'"))),
        }
    }
}

pub fn utility(kind: UtilityKind, score: f64) -> Result<f64> {
    match kind {
        UtilityKind::Entropy => {
            if !(score > 0.0) {
                return Err(Error::Domain(format!("entropy utility needs score > 0, got {score}")));
            }
            Ok(-score.ln())
        }
        UtilityKind::Exp => Ok(1.0 / (1.0 + score.exp())),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainEstimate {
    pub mu_hat: f64,
    pub sigma_hat: f64,
    pub g_hat: f64,
    pub beta: f64,
    pub n_samples: usize,
}

impl GainEstimate {
    /// Mean, sample standard deviation (`M - 1` denominator) and the bound.
    pub fn from_differences(diffs: &[f64], beta: f64) -> Result<Self> {
        let m = diffs.len();
        if m < 2 {
            return Err(invalid("gain estimate needs at least two samples"));
        }
        if !(beta > 0.0) {
            return Err(invalid("beta must be positive"));
        }
        let mu = diffs.iter().sum::<f64>() / m as f64;
        let var = diffs.iter().map(|d| (d - mu) * (d - mu)).sum::<f64>() / (m - 1) as f64;
        let sigma = var.sqrt();
        Ok(Self::new(mu, sigma, beta, m))
    }

    pub fn new(mu_hat: f64, sigma_hat: f64, beta: f64, n_samples: usize) -> Self {
        Self {
            mu_hat,
            sigma_hat,
            g_hat: mu_hat + beta * beta * sigma_hat,
            beta,
            n_samples,
        }
    }
}

/// Sampling and utility settings for gain estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParams {
    pub samples: usize,
    pub utility: UtilityKind,
    pub beta: f64,
}

impl Default for GainParams {
    fn default() -> Self {
        Self {
            samples: 16,
            utility: UtilityKind::Entropy,
            beta: 1.0,
        }
    }
}

/// Gain estimate for asking `query` in `state`, with `reference` as the
/// answer `a*` and executor scores read at `at`.
#[allow(clippy::too_many_arguments)]
pub fn gain_statistics<R: Rng + ?Sized>(
    scene: &Scene,
    state: &DialogState,
    query: Query,
    answerer: &AnswererModel,
    params: &GainParams,
    reference: Answer,
    at: ScoreAt,
    rng: &mut R,
) -> Result<GainEstimate> {
    if params.samples < 2 {
        return Err(invalid("gain estimate needs at least two answer samples"));
    }
    let token = scene.schema.token_id(query)?;
    let pred = answerer.predict_answer_dist(state, token)?;
    let scores = executor_scores(scene, &state.history, query, at);
    let utils = scores
        .iter()
        .map(|&s| utility(params.utility, s))
        .collect::<Result<Vec<_>>>()?;
    let u_ref = utils[reference.index()];
    let probs = pred.as_slice().expect("contiguous");
    let diffs: Vec<f64> = (0..params.samples)
        .map(|_| u_ref - utils[sample_index(probs, rng)])
        .collect();
    GainEstimate::from_differences(&diffs, params.beta)
}

/// `r + eta * g_hat`.
pub fn shaped_reward(reward: f64, g_hat: f64, eta: f64) -> f64 {
    reward + eta * g_hat
}

/// Linear decay `eta0 * (epoch_max - epoch) / epoch_max`, zero past the end.
pub fn eta_schedule(epoch: usize, epoch_max: usize, eta0: f64) -> f64 {
    if epoch_max == 0 || epoch >= epoch_max {
        return 0.0;
    }
    eta0 * (epoch_max - epoch) as f64 / epoch_max as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateScore {
    pub token: usize,
    pub gain: GainEstimate,
}

/// Stream used to price `token` within one selection call.
pub fn candidate_rng(base: u64, token: usize) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(base);
    r.set_stream(token as u64);
    r
}

/// Prices each distinct candidate token with the answerer's modal answer
/// standing in for `a*` and scores read at the executor's top candidate.
/// Returned in ascending token order.
pub fn score_candidates(
    tokens: &[usize],
    answerer: &AnswererModel,
    scene: &Scene,
    state: &DialogState,
    params: &GainParams,
    base: u64,
) -> Result<Vec<CandidateScore>> {
    let mut uniq = tokens.to_vec();
    uniq.sort_unstable();
    uniq.dedup();
    uniq.into_iter()
        .map(|token| {
            let query = scene.schema.query_of_token(token)?;
            let modal = answerer.modal_answer(state, token)?;
            let mut rng = candidate_rng(base, token);
            let gain = gain_statistics(
                scene,
                state,
                query,
                answerer,
                params,
                modal,
                ScoreAt::TopCandidate,
                &mut rng,
            )?;
            Ok(CandidateScore { token, gain })
        })
        .collect()
}

/// Highest `g_hat`, lowest token on ties. `scored` must be in ascending token order.
pub fn best_candidate(scored: &[CandidateScore]) -> Option<usize> {
    let mut best: Option<&CandidateScore> = None;
    for c in scored {
        if best.map_or(true, |b| c.gain.g_hat > b.gain.g_hat) {
            best = Some(c);
        }
    }
    best.map(|c| c.token)
}

/// Samples `per_particle` candidate tokens from every particle's policy.
pub fn propose_candidates<R: Rng + ?Sized>(
    particles: &[PolicyParticle],
    state: &DialogState,
    per_particle: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let mut out = Vec::with_capacity(particles.len() * per_particle);
    for p in particles {
        for _ in 0..per_particle {
            out.push(p.sample_token(state, rng)?);
        }
    }
    Ok(out)
}

/// Draws candidates from the ensemble and asks the one the answerer prices
/// highest.
pub fn select_query<R: Rng + ?Sized>(
    ensemble: &ParticleEnsemble,
    answerer: &AnswererModel,
    scene: &Scene,
    state: &DialogState,
    rng: &mut R,
    per_particle: usize,
    params: &GainParams,
) -> Result<Query> {
    select_query_from(&ensemble.particles, answerer, scene, state, rng, per_particle, params)
}

/// [`select_query`] over any slice of particles.
pub fn select_query_from<R: Rng + ?Sized>(
    particles: &[PolicyParticle],
    answerer: &AnswererModel,
    scene: &Scene,
    state: &DialogState,
    rng: &mut R,
    per_particle: usize,
    params: &GainParams,
) -> Result<Query> {
    if particles.is_empty() {
        return Err(invalid("empty ensemble"));
    }
    if per_particle == 0 {
        return Err(invalid("need at least one candidate per particle"));
    }
    let tokens = propose_candidates(particles, state, per_particle, rng)?;
    let base: u64 = rng.random();
    let first = tokens[0];
    let token = if tokens.iter().all(|&t| t == first) {
        first
    } else {
        let scored = score_candidates(&tokens, answerer, scene, state, params, base)?;
        best_candidate(&scored).expect("non-empty candidates")
    };
    scene.schema.query_of_token(token)
}
