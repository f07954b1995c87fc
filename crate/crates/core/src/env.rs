//! Synthetic guessing game: scenes of attribute-tagged objects, a yes/no
//! oracle that knows the hidden target, and fixed-budget episodes.

use std::io::{BufRead, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{Answer, AttributeSchema, History, Query, Scene, SceneObject};
use crate::error::{Error, Result};
use crate::executor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameConfig {
    pub n_objects: usize,
    pub schema: AttributeSchema,
    /// Question budget; the executor guesses after this many rounds.
    pub t_max: usize,
    /// Probability that the oracle inverts its Yes/No answer.
    pub oracle_noise: f64,
    pub reward_success: f64,
    pub reward_fail: f64,
    /// Subtracted on every question.
    pub question_penalty: f64,
}

impl Default for GameConfig {
    fn default() -> Self {
        Self {
            n_objects: 8,
            schema: AttributeSchema::default_game(),
            t_max: 5,
            oracle_noise: 0.0,
            reward_success: 1.0,
            reward_fail: 0.0,
            question_penalty: 0.0,
        }
    }
}

impl GameConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_objects < 2 {
            return Err(Error::Config("n_objects must be at least 2".into()));
        }
        if self.t_max < 1 {
            return Err(Error::Config("t_max must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.oracle_noise) {
            return Err(Error::Config("oracle_noise must lie in [0, 1)".into()));
        }
        if self.schema.n_signatures() < self.n_objects {
            return Err(Error::Config(format!(
                "schema admits {} distinct signatures, fewer than {} objects",
                self.schema.n_signatures(),
                self.n_objects
            )));
        }
        Ok(())
    }
}

fn random_signature<R: Rng + ?Sized>(schema: &AttributeSchema, rng: &mut R) -> Vec<usize> {
    (0..schema.n_attributes())
        .map(|a| rng.random_range(0..schema.n_values(a)))
        .collect()
}

/// Uniform attribute values and a uniform target; any other object that
/// collides with the target's signature is redrawn.
pub fn generate_scene<R: Rng + ?Sized>(config: &GameConfig, rng: &mut R) -> Result<Scene> {
    config.validate()?;
    let schema = &config.schema;
    let mut signatures: Vec<Vec<usize>> = (0..config.n_objects)
        .map(|_| random_signature(schema, rng))
        .collect();
    let target = rng.random_range(0..config.n_objects);
    for i in 0..config.n_objects {
        if i == target {
            continue;
        }
        while signatures[i] == signatures[target] {
            signatures[i] = random_signature(schema, rng);
        }
    }
    let objects = signatures
        .into_iter()
        .enumerate()
        .map(|(id, attribute_values)| SceneObject {
            id,
            attribute_values,
        })
        .collect();
    Scene::new(schema.clone(), objects, target)
}

/// Truthful Yes/No about the target, flipped with probability `p_flip`.
pub fn oracle_answer<R: Rng + ?Sized>(scene: &Scene, query: Query, rng: &mut R, p_flip: f64) -> Answer {
    let truth = scene.target().has(query);
    let flipped = p_flip > 0.0 && rng.random::<f64>() < p_flip;
    if truth != flipped {
        Answer::Yes
    } else {
        Answer::No
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub scene: Scene,
    pub history: History,
    pub round: usize,
    pub done: bool,
    pub guess: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepOutcome {
    pub answer: Answer,
    pub reward: f64,
    pub done: bool,
}

impl Episode {
    pub fn new(scene: Scene) -> Self {
        Self {
            scene,
            history: Vec::new(),
            round: 0,
            done: false,
            guess: None,
        }
    }

    pub fn success(&self) -> bool {
        self.guess == Some(self.scene.target_index)
    }

    /// Asks one question. On the last budgeted round the executor guesses and
    /// the terminal reward is added.
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        config: &GameConfig,
        query: Query,
        rng: &mut R,
    ) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::InvalidState("episode already finished".into()));
        }
        self.scene.schema.check_query(query)?;
        let answer = oracle_answer(&self.scene, query, rng, config.oracle_noise);
        self.history.push((query, answer));
        self.round += 1;
        let mut reward = 0.0 - config.question_penalty;
        if self.round >= config.t_max {
            let g = executor::guess(&self.scene, &self.history);
            self.guess = Some(g);
            self.done = true;
            reward += if g == self.scene.target_index {
                config.reward_success
            } else {
                config.reward_fail
            };
        }
        Ok(StepOutcome {
            answer,
            reward,
            done: self.done,
        })
    }

    pub fn record(&self) -> EpisodeRecord {
        EpisodeRecord {
            scene: self.scene.clone(),
            history: self.history.clone(),
            guess: self.guess,
            success: self.success(),
        }
    }
}

/// One line of an episode log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub scene: Scene,
    pub history: History,
    pub guess: Option<usize>,
    pub success: bool,
}

impl EpisodeRecord {
    /// Re-validates the scene and recomputes the executor's guess.
    pub fn replay(&self) -> Result<ReplayCheck> {
        let scene = Scene::new(
            self.scene.schema.clone(),
            self.scene.objects.clone(),
            self.scene.target_index,
        )?;
        for &(q, _) in &self.history {
            scene.schema.check_query(q)?;
        }
        let guess = executor::guess(&scene, &self.history);
        Ok(ReplayCheck {
            recomputed_guess: guess,
            matches_log: self.guess.map_or(true, |g| g == guess),
            success: guess == scene.target_index,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplayCheck {
    pub recomputed_guess: usize,
    pub matches_log: bool,
    pub success: bool,
}

pub fn write_records<W: Write>(mut out: W, records: &[EpisodeRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r).map_err(|e| Error::Parse(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_records<R: BufRead>(input: R) -> Result<Vec<EpisodeRecord>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line)
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 1)))?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn red_target_scene() -> Scene {
        let schema = AttributeSchema::from_cardinalities(&[3, 2]).unwrap();
        let objs = [[0, 0], [1, 1], [2, 0]]
            .iter()
            .enumerate()
            .map(|(id, v)| SceneObject {
                id,
                attribute_values: v.to_vec(),
            })
            .collect();
        Scene::new(schema, objs, 0).unwrap()
    }

    #[test]
    fn seeded_scene_is_reproducible_and_winnable() {
        let cfg = GameConfig::default();
        let a = generate_scene(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = generate_scene(&cfg, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..500 {
            let s = generate_scene(&cfg, &mut rng).unwrap();
            let t = &s.target().attribute_values;
            assert_eq!(s.objects.iter().filter(|o| &o.attribute_values == t).count(), 1);
        }
    }

    #[test]
    fn schema_too_small() {
        let cfg = GameConfig {
            n_objects: 5,
            schema: AttributeSchema::from_cardinalities(&[2, 2]).unwrap(),
            ..GameConfig::default()
        };
        assert!(matches!(
            generate_scene(&cfg, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn noiseless_oracle() {
        let s = red_target_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(oracle_answer(&s, Query { attribute: 0, value: 0 }, &mut rng, 0.0), Answer::Yes);
        assert_eq!(oracle_answer(&s, Query { attribute: 0, value: 2 }, &mut rng, 0.0), Answer::No);
    }

    #[test]
    fn half_noise_oracle_is_a_coin() {
        let s = red_target_scene();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let n = 10_000;
        let yes = (0..n)
            .filter(|_| oracle_answer(&s, Query { attribute: 0, value: 0 }, &mut rng, 0.5) == Answer::Yes)
            .count();
        let sd = (0.25 / n as f64).sqrt();
        assert!((yes as f64 / n as f64 - 0.5).abs() < 3.0 * sd);
    }

    #[test]
    fn single_question_budget() {
        let cfg = GameConfig {
            t_max: 1,
            ..GameConfig::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ep = Episode::new(generate_scene(&cfg, &mut rng).unwrap());
        let out = ep.step(&cfg, Query { attribute: 0, value: 0 }, &mut rng).unwrap();
        assert!(out.done && ep.guess.is_some());
        assert!(matches!(
            ep.step(&cfg, Query { attribute: 0, value: 0 }, &mut rng),
            Err(Error::InvalidState(_))
        ));
    }

    #[test]
    fn non_terminal_rewards_are_zero_without_penalty() {
        let cfg = GameConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut ep = Episode::new(generate_scene(&cfg, &mut rng).unwrap());
        for _ in 0..cfg.t_max - 1 {
            let out = ep.step(&cfg, Query { attribute: 2, value: 0 }, &mut rng).unwrap();
            assert_eq!(out.reward, 0.0);
            assert!(!out.done);
        }
    }

    #[test]
    fn disambiguating_sequence_wins() {
        let cfg = GameConfig {
            t_max: 2,
            schema: AttributeSchema::from_cardinalities(&[3, 2]).unwrap(),
            n_objects: 3,
            ..GameConfig::default()
        };
        let mut ep = Episode::new(red_target_scene());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        ep.step(&cfg, Query { attribute: 0, value: 0 }, &mut rng).unwrap();
        let out = ep.step(&cfg, Query { attribute: 1, value: 0 }, &mut rng).unwrap();
        assert_eq!(out.reward, 1.0);
        assert!(ep.success());
    }

    #[test]
    fn records_roundtrip_and_replay() {
        let cfg = GameConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut recs = Vec::new();
        for _ in 0..3 {
            let mut ep = Episode::new(generate_scene(&cfg, &mut rng).unwrap());
            while !ep.done {
                ep.step(&cfg, Query { attribute: 0, value: 1 }, &mut rng).unwrap();
            }
            recs.push(ep.record());
        }
        let mut buf = Vec::new();
        write_records(&mut buf, &recs).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 3);
        let back = read_records(&buf[..]).unwrap();
        assert_eq!(back, recs);
        for r in &back {
            let chk = r.replay().unwrap();
            assert!(chk.matches_log);
            assert_eq!(chk.success, r.success);
        }
    }
}
