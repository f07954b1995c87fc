//! Full method against its ablations on a few seeds: a uniform questioner,
//! single-policy REINFORCE, and the ensemble without gain shaping.
//!
//!     cargo run --release --example compare_baselines -- [seeds] [config.toml]

use std::path::Path;

use infoseek::config::{Method, RunConfig};
use infoseek::rl::{evaluate, train};

fn main() -> infoseek::Result<()> {
    let mut args = std::env::args().skip(1);
    let seeds: u64 = args.next().map(|s| s.parse().expect("seed count")).unwrap_or(3);
    let base = match args.next() {
        Some(p) => RunConfig::load(Path::new(&p))?,
        None => RunConfig::default(),
    };

    let methods = [Method::Random, Method::Reinforce, Method::EntropyOnly, Method::Full];
    println!("{:>14} {}", "seed", methods.map(|m| format!("{:>13}", m.to_string())).join(""));
    let mut totals = [0.0; 4];
    for seed in 0..seeds {
        let mut line = format!("{seed:>14} ");
        for (i, m) in methods.iter().enumerate() {
            let mut cfg = base.clone().with_method(*m);
            cfg.seed = seed;
            let out = train(&cfg)?;
            let r = evaluate(&out.ensemble, &out.answerer, &cfg, cfg.eval.episodes)?;
            totals[i] += r.success_rate;
            line.push_str(&format!("{:>13.3}", r.success_rate));
        }
        println!("{line}");
    }
    println!("{:>14} {}", "mean", totals.map(|t| format!("{:>13.3}", t / seeds as f64)).join(""));
    Ok(())
}
