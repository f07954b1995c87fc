//! Rollouts, returns, the baselined score-function gradient, the
//! KL-regularized posterior gradient, and the particle training loop.

use std::time::Instant;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::answerer::{AnswerExample, AnswererModel, AnswererObjective};
use crate::config::{Method, RolloutSelection, RunConfig};
use crate::domain::{featurize, Answer, DialogState, Query, Scene};
use crate::env::{generate_scene, Episode, EpisodeRecord, GameConfig};
use crate::error::{invalid, Error, Result};
use crate::executor::{executor_scores, ScoreAt};
use crate::gain::{eta_schedule, gain_statistics, select_query_from, shaped_reward, GainParams};
use crate::metrics::MetricsRow;
use crate::policy::{ParticleEnsemble, PolicyParticle};
use crate::svgd::{avg_pairwise_distance, svgd_directions, KernelConfig, SvgdStepper};

/// Independent random streams; each consumer gets its own so that e.g. gain
/// sampling never perturbs the oracle or the policy draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Scene = 2,
    Oracle = 3,
    Policy = 4,
    Gain = 5,
    EvalScene = 6,
    EvalOracle = 7,
    EvalPolicy = 8,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Deterministic generator for `(seed, stream, ids...)`.
pub fn stream_rng(seed: u64, stream: Stream, ids: &[u64]) -> ChaCha8Rng {
    let mut key = splitmix(seed);
    for &id in ids {
        key = splitmix(key ^ id);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(key);
    rng.set_stream(stream as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct TrajectoryStep {
    pub state: DialogState,
    pub token: usize,
    pub query: Query,
    pub answer: Answer,
    pub extrinsic_reward: f64,
    pub intrinsic_gain: f64,
    pub shaped_reward: f64,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub steps: Vec<TrajectoryStep>,
    pub guess: usize,
    pub success: bool,
    pub scene: Scene,
}

impl Trajectory {
    pub fn extrinsic_return(&self) -> f64 {
        self.steps.iter().map(|s| s.extrinsic_reward).sum()
    }

    pub fn shaped_rewards(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.shaped_reward).collect()
    }
}

/// Per-episode generators.
pub struct EpisodeRngs {
    pub oracle: ChaCha8Rng,
    pub policy: ChaCha8Rng,
    pub gain: ChaCha8Rng,
}

impl EpisodeRngs {
    pub fn for_training(seed: u64, epoch: usize, particle: usize, episode: usize) -> Self {
        let ids = [epoch as u64, particle as u64, episode as u64];
        Self {
            oracle: stream_rng(seed, Stream::Oracle, &ids),
            policy: stream_rng(seed, Stream::Policy, &ids),
            gain: stream_rng(seed, Stream::Gain, &ids),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct RolloutOptions {
    pub selection: RolloutSelection,
    pub candidates: usize,
    pub gain: GainParams,
    pub eta: f64,
}

/// Plays one full-budget episode with a single particle. Each step records
/// the gain estimate with the realized answer as `a*` scored at the target,
/// and the reward shaped by it.
pub fn rollout(
    particle: &PolicyParticle,
    game: &GameConfig,
    answerer: &AnswererModel,
    scene: Scene,
    rngs: &mut EpisodeRngs,
    opts: &RolloutOptions,
) -> Result<Trajectory> {
    let target = scene.target_index;
    let mut episode = Episode::new(scene);
    let mut steps = Vec::with_capacity(game.t_max);
    while !episode.done {
        let state = featurize(&episode.scene, &episode.history)?;
        let query = match opts.selection {
            RolloutSelection::Sample => {
                particle.sample_query(&episode.scene.schema, &state, &mut rngs.policy)?
            }
            RolloutSelection::Gain => select_query_from(
                std::slice::from_ref(particle),
                answerer,
                &episode.scene,
                &state,
                &mut rngs.policy,
                opts.candidates,
                &opts.gain,
            )?,
        };
        let token = episode.scene.schema.token_id(query)?;
        let outcome = episode.step(game, query, &mut rngs.oracle)?;
        let gain = gain_statistics(
            &episode.scene,
            &state,
            query,
            answerer,
            &opts.gain,
            outcome.answer,
            ScoreAt::Object(target),
            &mut rngs.gain,
        )?;
        steps.push(TrajectoryStep {
            state,
            token,
            query,
            answer: outcome.answer,
            extrinsic_reward: outcome.reward,
            intrinsic_gain: gain.g_hat,
            shaped_reward: shaped_reward(outcome.reward, gain.g_hat, opts.eta),
        });
    }
    let success = episode.success();
    Ok(Trajectory {
        steps,
        guess: episode.guess.expect("finished episode has a guess"),
        success,
        scene: episode.scene,
    })
}

/// Discounted returns by backward recursion `G_t = r_t + gamma G_{t+1}`.
pub fn discounted_returns(rewards: &[f64], gamma: f64) -> Vec<f64> {
    let mut out = vec![0.0; rewards.len()];
    let mut acc = 0.0;
    for t in (0..rewards.len()).rev() {
        acc = rewards[t] + gamma * acc;
        out[t] = acc;
    }
    out
}

/// Returns of the shaped rewards of `trajectory`.
pub fn returns(trajectory: &Trajectory, gamma: f64) -> Vec<f64> {
    discounted_returns(&trajectory.shaped_rewards(), gamma)
}

/// Per-round exponential moving average of returns.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub values: Vec<f64>,
    pub seen: Vec<bool>,
    pub decay: f64,
}

impl Baseline {
    pub fn new(rounds: usize, decay: f64) -> Self {
        Self {
            values: vec![0.0; rounds],
            seen: vec![false; rounds],
            decay,
        }
    }

    pub fn zero(rounds: usize) -> Self {
        Self::new(rounds, 0.0)
    }

    pub fn value(&self, round: usize) -> f64 {
        self.values.get(round).copied().unwrap_or(0.0)
    }

    /// Folds the batch mean return of every round into the average; a
    /// round's first observation initializes it.
    pub fn update(&mut self, trajectories: &[Trajectory], gamma: f64) {
        let rounds = self.values.len();
        let mut sums = vec![0.0; rounds];
        let mut counts = vec![0usize; rounds];
        for tr in trajectories {
            for (t, g) in returns(tr, gamma).into_iter().enumerate().take(rounds) {
                sums[t] += g;
                counts[t] += 1;
            }
        }
        for t in 0..rounds {
            if counts[t] == 0 {
                continue;
            }
            let mean = sums[t] / counts[t] as f64;
            if self.seen[t] {
                self.values[t] = self.decay * self.values[t] + (1.0 - self.decay) * mean;
            } else {
                self.values[t] = mean;
                self.seen[t] = true;
            }
        }
    }
}

/// Sum over steps of `grad log pi(q_t | s_t) (G_t - b_t)` for one trajectory.
pub fn trajectory_grad(
    particle: &PolicyParticle,
    trajectory: &Trajectory,
    baseline: &Baseline,
    gamma: f64,
) -> Result<Array2<f64>> {
    let g = returns(trajectory, gamma);
    let mut total = Array2::zeros(particle.theta.dim());
    for (t, step) in trajectory.steps.iter().enumerate() {
        let adv = g[t] - baseline.value(t);
        if adv != 0.0 {
            total.scaled_add(adv, &particle.log_prob_grad(&step.state, step.token)?);
        }
    }
    Ok(total)
}

/// Baselined REINFORCE estimate averaged over on-policy trajectories.
pub fn reinforce_grad(
    particle: &PolicyParticle,
    trajectories: &[Trajectory],
    baseline: &Baseline,
    gamma: f64,
) -> Result<Array2<f64>> {
    if trajectories.is_empty() {
        return Err(invalid("no trajectories"));
    }
    let mut total = Array2::zeros(particle.theta.dim());
    for tr in trajectories {
        total += &trajectory_grad(particle, tr, baseline, gamma)?;
    }
    total /= trajectories.len() as f64;
    if total.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite policy gradient".into()));
    }
    Ok(total)
}

/// Prior over policy parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PriorSpec {
    Flat,
    /// Isotropic `N(0, sigma^2)` on every entry.
    Gaussian { sigma: f64 },
}

impl PriorSpec {
    pub fn from_sigma(sigma: f64) -> Self {
        if sigma.is_infinite() {
            PriorSpec::Flat
        } else {
            PriorSpec::Gaussian { sigma }
        }
    }
}

/// `grad [J / alpha + log prior] = reinforce_grad / alpha - theta / sigma^2`.
pub fn posterior_grad(
    particle: &PolicyParticle,
    reinforce_grad: &Array2<f64>,
    alpha: f64,
    prior: PriorSpec,
) -> Result<Array2<f64>> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    let mut g = reinforce_grad / alpha;
    if let PriorSpec::Gaussian { sigma } = prior {
        g.scaled_add(-1.0 / (sigma * sigma), &particle.theta);
    }
    Ok(g)
}

/// Mutable training state: particles, answerer and per-particle baselines.
#[derive(Debug, Clone)]
pub struct TrainState {
    pub ensemble: ParticleEnsemble,
    pub answerer: AnswererModel,
    pub baselines: Vec<Baseline>,
    /// Next epoch to run.
    pub epoch: usize,
}

impl TrainState {
    pub fn initial(config: &RunConfig) -> Result<Self> {
        let schema = &config.game.schema;
        let n = config.seeker.n_particles;
        let mut rng = stream_rng(config.seed, Stream::Init, &[]);
        let ensemble = ParticleEnsemble::random(
            n,
            schema.vocab_size(),
            schema.feature_dim(),
            config.seeker.init_scale,
            &mut rng,
        )?;
        Ok(Self {
            ensemble,
            answerer: AnswererModel::new(schema, config.seeker.answerer_features),
            baselines: vec![Baseline::new(config.game.t_max, config.train.baseline_decay); n],
            epoch: 0,
        })
    }
}

/// Drives epochs of rollouts, answerer updates and SVGD steps.
pub struct Trainer {
    pub config: RunConfig,
    pub state: TrainState,
    stepper: SvgdStepper,
}

impl Trainer {
    pub fn new(config: RunConfig) -> Result<Self> {
        config.validate()?;
        let state = TrainState::initial(&config)?;
        Ok(Self::from_state(config, state))
    }

    pub fn from_state(config: RunConfig, state: TrainState) -> Self {
        let stepper = SvgdStepper::new(config.train.step_rule, config.train.step_theta);
        Self {
            config,
            state,
            stepper,
        }
    }

    pub fn finished(&self) -> bool {
        self.state.epoch >= self.config.train.epochs
    }

    pub fn eta(&self, epoch: usize) -> f64 {
        eta_schedule(epoch, self.config.train.epochs, self.config.seeker.eta0)
    }

    /// Every particle's trajectories for `epoch`, particles in order.
    pub fn collect(&self, epoch: usize) -> Result<Vec<Vec<Trajectory>>> {
        let cfg = &self.config;
        let opts = RolloutOptions {
            selection: cfg.seeker.rollout_selection,
            candidates: cfg.seeker.rollout_candidates,
            gain: cfg.seeker.gain_params(),
            eta: self.eta(epoch),
        };
        let episodes = cfg.train.episodes_per_epoch;
        let scenes = (0..episodes)
            .map(|k| {
                let mut rng = stream_rng(cfg.seed, Stream::Scene, &[epoch as u64, k as u64]);
                generate_scene(&cfg.game, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        let answerer = &self.state.answerer;
        self.state
            .ensemble
            .particles
            .par_iter()
            .enumerate()
            .map(|(i, particle)| {
                scenes
                    .iter()
                    .enumerate()
                    .map(|(k, scene)| {
                        let mut rngs = EpisodeRngs::for_training(cfg.seed, epoch, i, k);
                        rollout(particle, &cfg.game, answerer, scene.clone(), &mut rngs, &opts)
                    })
                    .collect()
            })
            .collect()
    }

    fn answer_batch(&self, trajectories: &[Vec<Trajectory>]) -> Vec<AnswerExample> {
        let goal = self.config.train.answerer_objective == AnswererObjective::GoalLikelihood;
        trajectories
            .iter()
            .flatten()
            .flat_map(|tr| {
                tr.steps.iter().map(move |s| AnswerExample {
                    state: s.state.clone(),
                    token: s.token,
                    answer: s.answer,
                    goal_scores: goal.then(|| {
                        executor_scores(
                            &tr.scene,
                            &s.state.history,
                            s.query,
                            ScoreAt::Object(tr.scene.target_index),
                        )
                    }),
                })
            })
            .collect()
    }

    /// Runs one epoch and returns its metrics row. On a numeric failure the
    /// state is left as it was before the failing update.
    pub fn step_epoch(&mut self) -> Result<MetricsRow> {
        let started = Instant::now();
        let epoch = self.state.epoch;
        let cfg = self.config.clone();
        let eta = self.eta(epoch);
        let trajectories = self.collect(epoch)?;
        let distance = {
            let thetas: Vec<_> = self.state.ensemble.iter().map(|p| p.theta.clone()).collect();
            avg_pairwise_distance(&thetas)
        };

        let all: Vec<&Trajectory> = trajectories.iter().flatten().collect();
        let n_traj = all.len() as f64;
        let mean_extrinsic = all.iter().map(|t| t.extrinsic_return()).sum::<f64>() / n_traj;
        let success_rate = all.iter().filter(|t| t.success).count() as f64 / n_traj;
        let n_steps: usize = all.iter().map(|t| t.steps.len()).sum();
        let mean_gain = all
            .iter()
            .flat_map(|t| t.steps.iter().map(|s| s.intrinsic_gain))
            .sum::<f64>()
            / n_steps.max(1) as f64;

        let batch = self.answer_batch(&trajectories);
        let accuracy = self.state.answerer.accuracy(&batch)?;

        if cfg.train.method != Method::Random {
            let mut answerer = self.state.answerer.clone();
            answerer.update(&batch, cfg.train.step_omega, cfg.train.answerer_objective)?;

            let prior = PriorSpec::from_sigma(cfg.seeker.prior_sigma);
            let grads = self
                .state
                .ensemble
                .particles
                .par_iter()
                .zip(trajectories.par_iter())
                .zip(self.state.baselines.par_iter())
                .map(|((p, trs), b)| {
                    let g = reinforce_grad(p, trs, b, cfg.seeker.gamma)?;
                    posterior_grad(p, &g, cfg.seeker.alpha, prior)
                })
                .collect::<Result<Vec<_>>>()?;
            let kernel = KernelConfig {
                bandwidth: cfg.seeker.bandwidth,
            };
            let directions = svgd_directions(&self.state.ensemble, &grads, &kernel)?;
            let mut ensemble = self.state.ensemble.clone();
            let mut stepper = self.stepper.clone();
            stepper.apply_ensemble(&mut ensemble, &directions)?;
            if let Some(i) = ensemble.iter().position(|p| !p.is_finite()) {
                return Err(Error::Numeric(format!(
                    "particle {i} diverged at epoch {epoch}"
                )));
            }
            for (b, trs) in self.state.baselines.iter_mut().zip(&trajectories) {
                b.update(trs, cfg.seeker.gamma);
            }
            self.state.answerer = answerer;
            self.state.ensemble = ensemble;
            self.stepper = stepper;
        }
        self.state.epoch += 1;

        Ok(MetricsRow {
            epoch,
            mean_extrinsic_reward: mean_extrinsic,
            success_rate,
            mean_intrinsic_gain: mean_gain,
            avg_pairwise_particle_distance: distance,
            answerer_train_accuracy: accuracy,
            eta,
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

/// Result of [`train`].
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub ensemble: ParticleEnsemble,
    pub answerer: AnswererModel,
    pub metrics: Vec<MetricsRow>,
}

/// Runs every configured epoch from a fresh state.
pub fn train(config: &RunConfig) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config.clone())?;
    let mut metrics = Vec::with_capacity(config.train.epochs);
    while !trainer.finished() {
        metrics.push(trainer.step_epoch()?);
    }
    Ok(TrainOutcome {
        ensemble: trainer.state.ensemble,
        answerer: trainer.state.answerer,
        metrics,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalReport {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_reward: f64,
}

/// Plays `episodes` games on held-out scenes. Each question is the
/// gain-priced choice among `candidates_per_particle` draws from every
/// particle; a single particle with one candidate reduces to sampling.
pub fn evaluate(
    ensemble: &ParticleEnsemble,
    answerer: &AnswererModel,
    config: &RunConfig,
    episodes: usize,
) -> Result<EvalReport> {
    evaluate_records(ensemble, answerer, config, episodes).map(|(r, _)| r)
}

/// [`evaluate`], also returning every played episode.
pub fn evaluate_records(
    ensemble: &ParticleEnsemble,
    answerer: &AnswererModel,
    config: &RunConfig,
    episodes: usize,
) -> Result<(EvalReport, Vec<EpisodeRecord>)> {
    let game = &config.game;
    let params = config.seeker.gain_params();
    let k = config.eval.candidates_per_particle;
    let results = (0..episodes)
        .into_par_iter()
        .map(|e| {
            let ids = [e as u64];
            let mut scene_rng = stream_rng(config.seed, Stream::EvalScene, &ids);
            let mut oracle_rng = stream_rng(config.seed, Stream::EvalOracle, &ids);
            let mut policy_rng = stream_rng(config.seed, Stream::EvalPolicy, &ids);
            let mut ep = Episode::new(generate_scene(game, &mut scene_rng)?);
            let mut reward = 0.0;
            while !ep.done {
                let state = featurize(&ep.scene, &ep.history)?;
                let q = select_query_from(
                    &ensemble.particles,
                    answerer,
                    &ep.scene,
                    &state,
                    &mut policy_rng,
                    k,
                    &params,
                )?;
                reward += ep.step(game, q, &mut oracle_rng)?.reward;
            }
            Ok((ep.record(), reward))
        })
        .collect::<Result<Vec<_>>>()?;
    let n = episodes.max(1) as f64;
    let report = EvalReport {
        episodes,
        success_rate: results.iter().filter(|r| r.0.success).count() as f64 / n,
        mean_reward: results.iter().map(|r| r.1).sum::<f64>() / n,
    };
    Ok((report, results.into_iter().map(|r| r.0).collect()))
}
