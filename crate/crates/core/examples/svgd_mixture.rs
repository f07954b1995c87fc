//! SVGD on its own: transport a particle cloud onto targets with known
//! moments and draw the result as a text histogram.
//!
//!     cargo run --release --example svgd_mixture

use infoseek::bench::{svgd_bench, BenchOptions, BenchTarget};

fn histogram(xs: &[f64], lo: f64, hi: f64, bins: usize) {
    let mut counts = vec![0usize; bins];
    for &x in xs {
        let b = ((x - lo) / (hi - lo) * bins as f64).floor();
        if (0.0..bins as f64).contains(&b) {
            counts[b as usize] += 1;
        }
    }
    for (i, c) in counts.iter().enumerate() {
        let left = lo + (hi - lo) * i as f64 / bins as f64;
        println!("  {left:>6.2} | {}", "#".repeat(*c));
    }
}

fn main() -> infoseek::Result<()> {
    for (name, target) in [
        ("gauss1d", BenchTarget::Gauss1d),
        ("mixture2-1d", BenchTarget::Mixture1d),
        ("mixture2-2d", BenchTarget::Mixture2d),
    ] {
        let r = svgd_bench(target, &BenchOptions::default())?;
        println!("{name}: mean {:.3?} (want {:?}), variance {:.3?} (want {:?}), near modes {:?}",
            r.mean, r.target_mean, r.variance, r.target_variance, r.mode_counts);
        let first: Vec<f64> = r.particles.iter().map(|p| p[0]).collect();
        histogram(&first, -5.0, 5.0, 20);
    }

    // a lone particle has no repulsion and climbs to the mode
    let lone = BenchOptions { particles: 1, init_scale: 3.0, ..BenchOptions::default() };
    let r = svgd_bench(BenchTarget::Mixture1d, &lone)?;
    println!("single particle on the mixture ends at {:.4}", r.particles[0][0]);
    Ok(())
}
