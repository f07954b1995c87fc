mod common;

use common::oracles::{policy_probs, ToyGame};
use infoseek::config::{Method, RolloutSelection, RunConfig};
use infoseek::env::generate_scene;
use infoseek::rl::{
    returns, rollout, stream_rng, Baseline, EpisodeRngs, RolloutOptions, Stream, Trainer,
    Trajectory,
};
use infoseek::policy::PolicyParticle;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn estimator_expectation_equals_exact_gradient() {
    let game = ToyGame::new();
    let schema = &game.scene.schema;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..5 {
        let theta = Array2::from_shape_fn((schema.vocab_size(), schema.feature_dim()), |_| {
            rng.random_range(-1.5..1.5)
        });
        let exact = game.objective_grad(&theta);
        let plain = game.expected_estimate(&theta, &Baseline::zero(game.rounds));
        let mut b = Baseline::new(game.rounds, 0.9);
        b.values = vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
        let baselined = game.expected_estimate(&theta, &b);
        assert!(max_abs_diff(&plain, &exact) <= 1e-8, "{}", max_abs_diff(&plain, &exact));
        assert!(max_abs_diff(&baselined, &exact) <= 1e-8);
        assert!(max_abs_diff(&baselined, &plain) <= 1e-8);
    }
}

/// Per-entry variance of the single-trajectory estimator when trajectories
/// are drawn from the exact distribution.
fn sampled_variance(game: &ToyGame, theta: &Array2<f64>, baseline: &Baseline, draws: usize) -> f64 {
    let particle = PolicyParticle {
        theta: theta.clone(),
    };
    let all = game.enumerate(theta);
    let probs: Vec<f64> = all.iter().map(|(p, _)| *p).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let grads: Vec<Array2<f64>> = (0..draws)
        .map(|_| {
            let i = infoseek::policy::sample_index(&probs, &mut rng);
            infoseek::rl::trajectory_grad(&particle, &all[i].1, baseline, 1.0).unwrap()
        })
        .collect();
    let mean = grads.iter().fold(Array2::<f64>::zeros(theta.dim()), |acc, g| acc + g) / draws as f64;
    grads
        .iter()
        .map(|g| (g - &mean).mapv(|v| v * v).sum())
        .sum::<f64>()
        / draws as f64
}

#[test]
fn baseline_reduces_sampled_variance() {
    let game = ToyGame::new();
    let schema = &game.scene.schema;
    let theta = Array2::from_elem((schema.vocab_size(), schema.feature_dim()), 0.1);
    // exact expected return-to-go per round
    let mut b = Baseline::new(game.rounds, 0.9);
    let all = game.enumerate(&theta);
    b.values = (0..game.rounds)
        .map(|t| all.iter().map(|(p, tr)| p * returns(tr, 1.0)[t]).sum())
        .collect();
    let without = sampled_variance(&game, &theta, &Baseline::zero(game.rounds), 20_000);
    let with = sampled_variance(&game, &theta, &b, 20_000);
    assert!(with < without, "{with} !< {without}");
}

/// Single-policy REINFORCE written out directly: log-policy gradients from
/// explicit softmax probabilities and its own per-round moving average.
struct PlainReinforce {
    theta: Array2<f64>,
    baseline: Vec<Option<f64>>,
}

impl PlainReinforce {
    fn update(&mut self, trajectories: &[Trajectory], alpha: f64, step: f64, gamma: f64, decay: f64) {
        let mut grad = Array2::<f64>::zeros(self.theta.dim());
        for tr in trajectories {
            let rewards: Vec<f64> = tr.steps.iter().map(|s| s.extrinsic_reward).collect();
            for t in 0..tr.steps.len() {
                let g_t: f64 = rewards[t..]
                    .iter()
                    .enumerate()
                    .map(|(i, r)| gamma.powi(i as i32) * r)
                    .sum();
                let adv = g_t - self.baseline[t].unwrap_or(0.0);
                let phi = tr.steps[t].state.feature_vector.to_vec();
                let p = policy_probs(&self.theta, &phi);
                for q in 0..self.theta.nrows() {
                    let ind = if q == tr.steps[t].token { 1.0 } else { 0.0 };
                    for c in 0..phi.len() {
                        grad[[q, c]] += adv * (ind - p[q]) * phi[c];
                    }
                }
            }
        }
        grad /= trajectories.len() as f64;
        self.theta = &self.theta + &(grad * (step / alpha));
        for t in 0..self.baseline.len() {
            let mean = trajectories
                .iter()
                .map(|tr| {
                    let r: Vec<f64> = tr.steps.iter().map(|s| s.extrinsic_reward).collect();
                    r[t..].iter().enumerate().map(|(i, x)| gamma.powi(i as i32) * x).sum::<f64>()
                })
                .sum::<f64>()
                / trajectories.len() as f64;
            self.baseline[t] = Some(match self.baseline[t] {
                None => mean,
                Some(v) => decay * v + (1.0 - decay) * mean,
            });
        }
    }
}

#[test]
fn single_particle_training_matches_plain_reinforce() {
    let mut cfg = RunConfig::default().with_method(Method::Reinforce);
    cfg.seed = 5;
    cfg.train.epochs = 15;
    cfg.train.episodes_per_epoch = 16;
    cfg.validate().unwrap();
    assert_eq!(cfg.seeker.n_particles, 1);
    assert_eq!(cfg.seeker.eta0, 0.0);
    assert!(cfg.seeker.prior_sigma.is_infinite());

    let mut trainer = Trainer::new(cfg.clone()).unwrap();
    let mut reference = PlainReinforce {
        theta: trainer.state.ensemble.particles[0].theta.clone(),
        baseline: vec![None; cfg.game.t_max],
    };
    for epoch in 0..cfg.train.epochs {
        // the same rollouts the trainer will see, played with the reference policy
        let particle = PolicyParticle {
            theta: reference.theta.clone(),
        };
        let opts = RolloutOptions {
            selection: RolloutSelection::Sample,
            candidates: 1,
            gain: cfg.seeker.gain_params(),
            eta: 0.0,
        };
        let trajectories: Vec<Trajectory> = (0..cfg.train.episodes_per_epoch)
            .map(|k| {
                let mut scene_rng = stream_rng(cfg.seed, Stream::Scene, &[epoch as u64, k as u64]);
                let scene = generate_scene(&cfg.game, &mut scene_rng).unwrap();
                let mut rngs = EpisodeRngs::for_training(cfg.seed, epoch, 0, k);
                rollout(&particle, &cfg.game, &trainer.state.answerer, scene, &mut rngs, &opts).unwrap()
            })
            .collect();
        let success = trajectories.iter().filter(|t| t.success).count() as f64
            / trajectories.len() as f64;

        let row = trainer.step_epoch().unwrap();
        reference.update(
            &trajectories,
            cfg.seeker.alpha,
            cfg.train.step_theta,
            cfg.seeker.gamma,
            cfg.train.baseline_decay,
        );
        assert_eq!(row.success_rate, success, "epoch {epoch}");
        let theta = &trainer.state.ensemble.particles[0].theta;
        assert!(max_abs_diff(theta, &reference.theta) <= 1e-12, "epoch {epoch}");
    }
}

#[test]
fn zero_eta_leaves_rewards_unshaped_and_rollouts_repeat() {
    let cfg = RunConfig::default().with_method(Method::EntropyOnly);
    let trainer = Trainer::new(cfg).unwrap();
    let a = trainer.collect(0).unwrap();
    let b = trainer.collect(0).unwrap();
    for (ta, tb) in a.iter().flatten().zip(b.iter().flatten()) {
        assert_eq!(ta.steps.len(), trainer.config.game.t_max);
        assert_eq!(ta.guess, tb.guess);
        for (sa, sb) in ta.steps.iter().zip(&tb.steps) {
            assert_eq!(sa.shaped_reward, sa.extrinsic_reward);
            assert_eq!((sa.token, sa.answer), (sb.token, sb.answer));
        }
    }
}

#[test]
fn default_training_keeps_particles_finite() {
    let mut cfg = RunConfig::default();
    cfg.train.epochs = 30;
    let mut trainer = Trainer::new(cfg).unwrap();
    while !trainer.finished() {
        let row = trainer.step_epoch().unwrap();
        assert!((0.0..=1.0).contains(&row.success_rate));
        assert!(row.avg_pairwise_particle_distance >= 0.0);
    }
    assert!(trainer.state.ensemble.iter().all(|p| p.is_finite()));
}
