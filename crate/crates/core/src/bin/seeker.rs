use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use infoseek::bench::BenchOptions;
use infoseek::config::Method;
use infoseek::gain::UtilityKind;
use infoseek::harness::{self, Overrides};
use infoseek::svgd::KernelConfig;

#[derive(Parser)]
#[command(name = "seeker", about = "Train and evaluate information-seeking questioners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML config file; built-in defaults when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// random | reinforce | entropy-only | full
    #[arg(long)]
    baseline: Option<Method>,
    #[arg(long)]
    particles: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    eta0: Option<f64>,
    /// entropy | exp
    #[arg(long)]
    utility: Option<UtilityKind>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            baseline: self.baseline,
            particles: self.particles,
            alpha: self.alpha,
            beta: self.beta,
            eta0: self.eta0,
            utility: self.utility,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train an agent and write metrics, checkpoints and an evaluation.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value = "runs/latest")]
        out: PathBuf,
    },
    /// Evaluate a trained run directory, or an untrained baseline.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Run directory written by `train`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        episodes: usize,
        /// Write the played episodes as JSON lines.
        #[arg(long)]
        records: Option<PathBuf>,
    },
    /// Run SVGD alone on a target with known moments.
    SvgdBench {
        /// gauss1d | mixture2-1d | mixture2-2d
        target: String,
        #[arg(long, default_value_t = 50)]
        particles: usize,
        #[arg(long, default_value_t = 2000)]
        steps: usize,
        #[arg(long, default_value_t = 0.05)]
        step_size: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Re-check a JSON-lines episode log and print transcripts.
    Replay {
        episodes: PathBuf,
        /// Number of transcripts to print.
        #[arg(long, default_value_t = 3)]
        show: usize,
    },
}

fn run(cli: Cli) -> infoseek::Result<()> {
    match cli.command {
        Command::Train { common, out } => {
            let cfg = harness::resolve_config(common.config.as_deref(), &common.overrides())?;
            let s = harness::run_experiment(&cfg, &out)?;
            println!(
                "{} seed={} epochs={} train_success={:.3} eval_success={:.3} ({} episodes) -> {}",
                s.method,
                s.seed,
                s.epochs,
                s.final_train_success.unwrap_or(f64::NAN),
                s.eval_success_rate,
                s.eval_episodes,
                out.display()
            );
        }
        Command::Eval {
            common,
            out,
            episodes,
            records,
        } => {
            let cfg = harness::resolve_config(common.config.as_deref(), &common.overrides())?;
            let r = harness::run_eval(&cfg, out.as_deref(), episodes, records.as_deref())?;
            println!(
                "episodes={} success_rate={:.4} mean_reward={:.4}",
                r.episodes, r.success_rate, r.mean_reward
            );
        }
        Command::SvgdBench {
            target,
            particles,
            steps,
            step_size,
            seed,
        } => {
            let opts = BenchOptions {
                particles,
                steps,
                step_size,
                seed,
                kernel: KernelConfig::default(),
                ..BenchOptions::default()
            };
            let r = harness::run_svgd_bench(&target, &opts)?;
            println!("target mean {:?} variance {:?}", r.target_mean, r.target_variance);
            println!("sample mean {:?} variance {:?}", r.mean, r.variance);
            println!("particles within 0.5 of each mode: {:?}", r.mode_counts);
        }
        Command::Replay { episodes, show } => {
            let (s, records) = harness::run_replay(&episodes)?;
            for r in records.iter().take(show) {
                print!("{}", harness::transcript(r));
            }
            println!(
                "episodes={} successes={} log_mismatches={}",
                s.episodes, s.successes, s.mismatches
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
