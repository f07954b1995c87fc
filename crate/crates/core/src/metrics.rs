//! Per-epoch metrics and their comma-separated log format.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub epoch: usize,
    pub mean_extrinsic_reward: f64,
    pub success_rate: f64,
    pub mean_intrinsic_gain: f64,
    pub avg_pairwise_particle_distance: f64,
    pub answerer_train_accuracy: f64,
    pub eta: f64,
    /// Kept out of the metrics file so that it stays reproducible; see
    /// [`write_timing`].
    #[serde(skip)]
    pub wall_clock_seconds: f64,
}

pub const COLUMNS: [&str; 7] = [
    "epoch",
    "mean_extrinsic_reward",
    "success_rate",
    "mean_intrinsic_gain",
    "avg_pairwise_particle_distance",
    "answerer_train_accuracy",
    "eta",
];

/// Identifying comment line written above the header.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunStamp {
    pub config_hash: String,
    pub seed: u64,
    pub method: String,
}

impl RunStamp {
    fn line(&self) -> String {
        format!(
            "# config_hash={} seed={} method={}\n",
            self.config_hash, self.seed, self.method
        )
    }

    fn parse(line: &str) -> Option<Self> {
        let rest = line.strip_prefix("# ")?;
        let mut hash = None;
        let mut seed = None;
        let mut method = None;
        for kv in rest.split_whitespace() {
            let (k, v) = kv.split_once('=')?;
            match k {
                "config_hash" => hash = Some(v.to_string()),
                "seed" => seed = v.parse().ok(),
                "method" => method = Some(v.to_string()),
                _ => {}
            }
        }
        Some(Self {
            config_hash: hash?,
            seed: seed?,
            method: method?,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(e.to_string())
}

pub fn write_metrics<W: Write>(mut out: W, stamp: &RunStamp, rows: &[MetricsRow]) -> Result<()> {
    out.write_all(stamp.line().as_bytes())?;
    let mut w = csv::Writer::from_writer(out);
    if rows.is_empty() {
        w.write_record(COLUMNS).map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_metrics<R: Read>(mut input: R) -> Result<(RunStamp, Vec<MetricsRow>)> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let first = text.lines().next().unwrap_or_default();
    let stamp = RunStamp::parse(first)
        .ok_or_else(|| Error::Parse("metrics file lacks its run stamp line".into()))?;
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().map_err(csv_err)?.clone();
    if header.iter().ne(COLUMNS) {
        return Err(Error::Parse(format!("unexpected metrics header {header:?}")));
    }
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<MetricsRow>, _>>()
        .map_err(csv_err)?;
    Ok((stamp, rows))
}

/// `epoch,wall_clock_seconds` rows.
pub fn write_timing<W: Write>(out: W, rows: &[MetricsRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["epoch", "wall_clock_seconds"]).map_err(csv_err)?;
    for r in rows {
        w.write_record([r.epoch.to_string(), r.wall_clock_seconds.to_string()])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}
