//! Experiment orchestration behind the `seeker` binary: training runs with
//! checkpoints and metrics, evaluation, the SVGD benchmark and episode replay.

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::bench::{svgd_bench, BenchOptions, BenchTarget, MomentReport};
use crate::checkpoint::CheckpointDir;
use crate::config::{Method, RunConfig};
use crate::env::{read_records, write_records, EpisodeRecord};
use crate::error::{Error, Result};
use crate::gain::UtilityKind;
use crate::metrics::{read_metrics, write_metrics, write_timing, MetricsRow, RunStamp};
use crate::policy::{ParticleEnsemble, PolicyParticle};
use crate::answerer::AnswererModel;
use crate::rl::{evaluate_records, EvalReport, TrainState, Trainer};

const CHECKPOINT_EVERY: usize = 10;

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub baseline: Option<Method>,
    pub particles: Option<usize>,
    pub alpha: Option<f64>,
    pub beta: Option<f64>,
    pub eta0: Option<f64>,
    pub utility: Option<UtilityKind>,
}

impl Overrides {
    pub fn apply(&self, mut cfg: RunConfig) -> Result<RunConfig> {
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(n) = self.particles {
            cfg.seeker.n_particles = n;
        }
        if let Some(a) = self.alpha {
            cfg.seeker.alpha = a;
        }
        if let Some(b) = self.beta {
            cfg.seeker.beta = b;
        }
        if let Some(e) = self.eta0 {
            cfg.seeker.eta0 = e;
        }
        if let Some(u) = self.utility {
            cfg.seeker.utility = u;
        }
        let method = self.baseline.unwrap_or(cfg.train.method);
        let cfg = cfg.with_method(method);
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Config file (defaults when absent) with overrides applied.
pub fn resolve_config(path: Option<&Path>, overrides: &Overrides) -> Result<RunConfig> {
    let base = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    overrides.apply(base)
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub method: String,
    pub seed: u64,
    pub config_hash: String,
    pub epochs: usize,
    pub final_train_success: Option<f64>,
    pub eval_episodes: usize,
    pub eval_success_rate: f64,
    pub eval_mean_reward: f64,
}

/// Output directory layout of a training run.
pub struct RunDir {
    pub root: PathBuf,
}

impl RunDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }
    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.csv")
    }
    pub fn timing(&self) -> PathBuf {
        self.root.join("timing.csv")
    }
    pub fn checkpoint(&self) -> CheckpointDir {
        CheckpointDir::new(self.root.join("checkpoint"))
    }
    pub fn summary(&self) -> PathBuf {
        self.root.join("summary.json")
    }
    pub fn eval_episodes(&self) -> PathBuf {
        self.root.join("eval_episodes.jsonl")
    }
}

fn stamp(cfg: &RunConfig) -> RunStamp {
    RunStamp {
        config_hash: cfg.hash(),
        seed: cfg.seed,
        method: cfg.train.method.to_string(),
    }
}

fn write_logs(dir: &RunDir, cfg: &RunConfig, rows: &[MetricsRow]) -> Result<()> {
    write_metrics(fs::File::create(dir.metrics())?, &stamp(cfg), rows)?;
    write_timing(fs::File::create(dir.timing())?, rows)?;
    Ok(())
}

/// Trains (resuming from `out/checkpoint` when it matches the config),
/// writes metrics and checkpoints, then evaluates the final agent.
pub fn run_experiment(cfg: &RunConfig, out: &Path) -> Result<ExperimentSummary> {
    cfg.validate()?;
    let dir = RunDir::new(out);
    fs::create_dir_all(&dir.root)?;
    fs::write(dir.config(), cfg.to_toml_string())?;

    let ck = dir.checkpoint();
    let (mut trainer, mut rows) = if ck.exists() {
        let state = ck.load(cfg)?;
        let (_, mut rows) = read_metrics(fs::File::open(dir.metrics())?)?;
        rows.truncate(state.epoch);
        (Trainer::from_state(cfg.clone(), state), rows)
    } else {
        (Trainer::new(cfg.clone())?, Vec::new())
    };

    while !trainer.finished() {
        match trainer.step_epoch() {
            Ok(row) => rows.push(row),
            Err(e) => {
                ck.save(cfg, &trainer.state)?;
                write_logs(&dir, cfg, &rows)?;
                return Err(Error::Numeric(format!(
                    "training aborted at epoch {}: {e}; last good state saved to {}",
                    trainer.state.epoch,
                    ck.root.display()
                )));
            }
        }
        if trainer.state.epoch % CHECKPOINT_EVERY == 0 {
            ck.save(cfg, &trainer.state)?;
            write_logs(&dir, cfg, &rows)?;
        }
    }
    ck.save(cfg, &trainer.state)?;
    write_logs(&dir, cfg, &rows)?;

    let (report, records) = evaluate_records(
        &trainer.state.ensemble,
        &trainer.state.answerer,
        cfg,
        cfg.eval.episodes,
    )?;
    write_records(fs::File::create(dir.eval_episodes())?, &records)?;
    let summary = ExperimentSummary {
        method: cfg.train.method.to_string(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
        epochs: rows.len(),
        final_train_success: rows.last().map(|r| r.success_rate),
        eval_episodes: report.episodes,
        eval_success_rate: report.success_rate,
        eval_mean_reward: report.mean_reward,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?;
    fs::write(dir.summary(), json)?;
    Ok(summary)
}

/// Agent to evaluate: a trained run directory, or an untrained agent built
/// from `cfg` (the uniform questioner for the random baseline).
pub fn load_agent(cfg: &RunConfig, run: Option<&Path>) -> Result<(RunConfig, TrainState)> {
    match run {
        Some(root) => {
            let dir = RunDir::new(root);
            let saved = RunConfig::load(&dir.config())?;
            let state = dir.checkpoint().load(&saved)?;
            Ok((saved, state))
        }
        None => {
            let state = TrainState::initial(cfg)?;
            Ok((cfg.clone(), state))
        }
    }
}

pub fn run_eval(
    cfg: &RunConfig,
    run: Option<&Path>,
    episodes: usize,
    records_out: Option<&Path>,
) -> Result<EvalReport> {
    let (mut cfg, state) = load_agent(cfg, run)?;
    cfg.eval.episodes = episodes;
    let (report, records) = evaluate_records(&state.ensemble, &state.answerer, &cfg, episodes)?;
    if let Some(p) = records_out {
        write_records(fs::File::create(p)?, &records)?;
    }
    Ok(report)
}

/// Uniform questioner over a config's schema.
pub fn uniform_agent(cfg: &RunConfig) -> (ParticleEnsemble, AnswererModel) {
    let s = &cfg.game.schema;
    let ens = ParticleEnsemble::new(vec![PolicyParticle::zeros(s.vocab_size(), s.feature_dim())])
        .expect("one particle");
    (ens, AnswererModel::new(s, cfg.seeker.answerer_features))
}

pub fn run_svgd_bench(target: &str, opts: &BenchOptions) -> Result<MomentReport> {
    let t: BenchTarget = target.parse()?;
    svgd_bench(t, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReplaySummary {
    pub episodes: usize,
    pub successes: usize,
    pub mismatches: usize,
}

pub fn run_replay(path: &Path) -> Result<(ReplaySummary, Vec<EpisodeRecord>)> {
    let records = read_records(BufReader::new(fs::File::open(path)?))?;
    let mut summary = ReplaySummary {
        episodes: records.len(),
        successes: 0,
        mismatches: 0,
    };
    for r in &records {
        let chk = r.replay()?;
        summary.successes += chk.success as usize;
        summary.mismatches += (!chk.matches_log) as usize;
    }
    Ok((summary, records))
}

/// Human-readable transcript of one episode.
pub fn transcript(record: &EpisodeRecord) -> String {
    let schema = &record.scene.schema;
    let mut s = String::new();
    for o in &record.scene.objects {
        let desc: Vec<&str> = o
            .attribute_values
            .iter()
            .enumerate()
            .map(|(a, &v)| schema.value_name(a, v))
            .collect();
        let mark = if o.id == record.scene.target_index { "*" } else { " " };
        s.push_str(&format!("  {mark}{:>2}: {}\n", o.id, desc.join(" ")));
    }
    for (t, (q, a)) in record.history.iter().enumerate() {
        s.push_str(&format!(
            "  Q{}: is it {} ({})? -> {:?}\n",
            t + 1,
            schema.value_name(q.attribute, q.value),
            schema.attribute_name(q.attribute),
            a
        ));
    }
    s.push_str(&format!(
        "  guess {:?}, {}\n",
        record.guess,
        if record.success { "correct" } else { "wrong" }
    ));
    s
}
