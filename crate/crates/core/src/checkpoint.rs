//! Array files and checkpoint directories.
//!
//! An array file is plain text: a `# shape ROWS COLS` line followed by one
//! line per row of whitespace-separated values in row-major order. Values are
//! written in shortest round-trip form, so a save/load cycle is exact.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::policy::{ParticleEnsemble, PolicyParticle};
use crate::rl::{Baseline, TrainState};
use crate::answerer::AnswererModel;

pub fn format_array(a: &Array2<f64>) -> String {
    let mut s = format!("# shape {} {}\n", a.nrows(), a.ncols());
    for row in a.rows() {
        let line: Vec<String> = row.iter().map(|x| format!("{x:?}")).collect();
        s.push_str(&line.join(" "));
        s.push('\n');
    }
    s
}

pub fn parse_array(text: &str) -> Result<Array2<f64>> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty array file".into()))?;
    let dims: Vec<usize> = header
        .strip_prefix("# shape")
        .ok_or_else(|| Error::Parse(format!("bad array header '{header}'")))?
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad dimension '{t}'"))))
        .collect::<Result<_>>()?;
    let [rows, cols] = dims[..] else {
        return Err(Error::Parse("array header needs two dimensions".into()));
    };
    let mut data = Vec::with_capacity(rows * cols);
    let mut seen_rows = 0;
    for line in lines {
        let before = data.len();
        for tok in line.split_whitespace() {
            data.push(
                tok.parse::<f64>()
                    .map_err(|_| Error::Parse(format!("bad value '{tok}'")))?,
            );
        }
        if data.len() - before != cols {
            return Err(Error::Parse(format!(
                "row {seen_rows} has {} values, expected {cols}",
                data.len() - before
            )));
        }
        seen_rows += 1;
    }
    if seen_rows != rows {
        return Err(Error::Parse(format!("expected {rows} rows, found {seen_rows}")));
    }
    Array2::from_shape_vec((rows, cols), data).map_err(|e| Error::Parse(e.to_string()))
}

pub fn save_array(path: &Path, a: &Array2<f64>) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(format_array(a).as_bytes())?;
    Ok(())
}

pub fn load_array(path: &Path) -> Result<Array2<f64>> {
    parse_array(&fs::read_to_string(path)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BaselineRecord {
    values: Vec<f64>,
    seen: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct StateRecord {
    config_hash: String,
    next_epoch: usize,
    n_particles: usize,
    baselines: Vec<BaselineRecord>,
}

/// `DIR/state.json`, `DIR/particle_NNN.txt` for every particle and
/// `DIR/answerer.txt`.
pub struct CheckpointDir {
    pub root: PathBuf,
}

impl CheckpointDir {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    fn particle_path(&self, i: usize) -> PathBuf {
        self.root.join(format!("particle_{i:03}.txt"))
    }

    fn answerer_path(&self) -> PathBuf {
        self.root.join("answerer.txt")
    }

    fn state_path(&self) -> PathBuf {
        self.root.join("state.json")
    }

    pub fn exists(&self) -> bool {
        self.state_path().is_file()
    }

    pub fn save(&self, config: &RunConfig, state: &TrainState) -> Result<()> {
        fs::create_dir_all(&self.root)?;
        for (i, p) in state.ensemble.iter().enumerate() {
            save_array(&self.particle_path(i), &p.theta)?;
        }
        save_array(&self.answerer_path(), &state.answerer.omega)?;
        let record = StateRecord {
            config_hash: config.hash(),
            next_epoch: state.epoch,
            n_particles: state.ensemble.len(),
            baselines: state
                .baselines
                .iter()
                .map(|b| BaselineRecord {
                    values: b.values.clone(),
                    seen: b.seen.clone(),
                })
                .collect(),
        };
        let json = serde_json::to_string_pretty(&record).map_err(|e| Error::Parse(e.to_string()))?;
        fs::write(self.state_path(), json)?;
        Ok(())
    }

    /// Loads a state saved under the same config.
    pub fn load(&self, config: &RunConfig) -> Result<TrainState> {
        let text = fs::read_to_string(self.state_path())?;
        let record: StateRecord =
            serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
        if record.config_hash != config.hash() {
            return Err(Error::Config(
                "checkpoint was written under a different config".into(),
            ));
        }
        let particles = (0..record.n_particles)
            .map(|i| {
                Ok(PolicyParticle {
                    theta: load_array(&self.particle_path(i))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let ensemble = ParticleEnsemble::new(particles)?;
        let schema = &config.game.schema;
        if ensemble.shape() != (schema.vocab_size(), schema.feature_dim()) {
            return Err(Error::Parse("particle shape does not match the schema".into()));
        }
        let mut answerer = AnswererModel::new(schema, config.seeker.answerer_features);
        answerer.set_omega(load_array(&self.answerer_path())?)?;
        let baselines = record
            .baselines
            .into_iter()
            .map(|b| Baseline {
                values: b.values,
                seen: b.seen,
                decay: config.train.baseline_decay,
            })
            .collect();
        Ok(TrainState {
            ensemble,
            answerer,
            baselines,
            epoch: record.next_epoch,
        })
    }
}
