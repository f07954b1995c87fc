//! Train the full seeker (particle ensemble, answerer model, gain-shaped
//! rewards) and evaluate it.
//!
//!     cargo run --release --example train_seeker -- [epochs] [seed]

use infoseek::config::RunConfig;
use infoseek::rl::{evaluate, Trainer};

fn main() -> infoseek::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut cfg = RunConfig::default();
    if let Some(e) = args.next() {
        cfg.train.epochs = e.parse().expect("epochs");
    }
    if let Some(s) = args.next() {
        cfg.seed = s.parse().expect("seed");
    }
    cfg.eval.episodes = 500;

    let mut trainer = Trainer::new(cfg.clone())?;
    println!("epoch  success  reward   gain     spread  answerer  eta");
    while !trainer.finished() {
        let m = trainer.step_epoch()?;
        if m.epoch % 10 == 0 || trainer.finished() {
            println!(
                "{:>5}  {:>7.3}  {:>6.3}  {:>7.4}  {:>6.3}  {:>8.3}  {:.3}",
                m.epoch, m.success_rate, m.mean_extrinsic_reward, m.mean_intrinsic_gain,
                m.avg_pairwise_particle_distance, m.answerer_train_accuracy, m.eta
            );
        }
    }
    let st = &trainer.state;
    let r = evaluate(&st.ensemble, &st.answerer, &cfg, cfg.eval.episodes)?;
    println!("evaluation over {} episodes: success {:.3}", r.episodes, r.success_rate);
    Ok(())
}
