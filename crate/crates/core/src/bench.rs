//! Standalone SVGD check on targets with closed-form moments.

use ndarray::Array2;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::rl::{stream_rng, Stream};
use crate::svgd::{svgd_directions_raw, KernelConfig, StepRule, SvgdStepper};

/// Benchmark targets, all with unit-variance Gaussian components.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BenchTarget {
    /// `N(0, 1)`.
    Gauss1d,
    /// Equal mixture of `N(-2, 1)` and `N(2, 1)`.
    Mixture1d,
    /// Equal mixture of `N((-2, 0), I)` and `N((2, 0), I)`.
    Mixture2d,
}

impl std::str::FromStr for BenchTarget {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss1d" => Ok(BenchTarget::Gauss1d),
            "mixture2-1d" => Ok(BenchTarget::Mixture1d),
            "mixture2-2d" => Ok(BenchTarget::Mixture2d),
            other => Err(invalid(format!("unknown target '{other}'"))),
        }
    }
}

impl BenchTarget {
    pub fn dim(self) -> usize {
        match self {
            BenchTarget::Mixture2d => 2,
            _ => 1,
        }
    }

    pub fn modes(self) -> Vec<Vec<f64>> {
        match self {
            BenchTarget::Gauss1d => vec![vec![0.0]],
            BenchTarget::Mixture1d => vec![vec![-2.0], vec![2.0]],
            BenchTarget::Mixture2d => vec![vec![-2.0, 0.0], vec![2.0, 0.0]],
        }
    }

    pub fn mean(self) -> Vec<f64> {
        vec![0.0; self.dim()]
    }

    /// Per-coordinate variance: 1 plus the spread of the component means.
    pub fn variance(self) -> Vec<f64> {
        match self {
            BenchTarget::Gauss1d => vec![1.0],
            BenchTarget::Mixture1d => vec![5.0],
            BenchTarget::Mixture2d => vec![5.0, 1.0],
        }
    }

    /// `grad_x log p(x)`.
    pub fn score(self, x: &[f64]) -> Vec<f64> {
        let modes = self.modes();
        // log-sum-exp weights of the components
        let logw: Vec<f64> = modes
            .iter()
            .map(|m| -0.5 * m.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>())
            .collect();
        let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = logw.iter().map(|l| (l - max).exp()).collect();
        let z: f64 = w.iter().sum();
        (0..x.len())
            .map(|d| {
                modes
                    .iter()
                    .zip(&w)
                    .map(|(m, wk)| wk / z * (m[d] - x[d]))
                    .sum()
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchOptions {
    pub particles: usize,
    pub steps: usize,
    pub step_size: f64,
    pub seed: u64,
    /// Std-dev of the (antithetic) initial cloud around the origin.
    pub init_scale: f64,
    pub kernel: KernelConfig,
    pub rule: StepRule,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            particles: 50,
            steps: 2000,
            step_size: 0.05,
            seed: 0,
            init_scale: 1.0,
            kernel: KernelConfig::default(),
            rule: StepRule::Plain,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport {
    pub target_mean: Vec<f64>,
    pub target_variance: Vec<f64>,
    pub mean: Vec<f64>,
    /// Population variance per coordinate.
    pub variance: Vec<f64>,
    /// Particles within 0.5 of each mode.
    pub mode_counts: Vec<usize>,
    pub particles: Vec<Vec<f64>>,
}

pub fn svgd_bench(target: BenchTarget, opts: &BenchOptions) -> Result<MomentReport> {
    if opts.particles == 0 {
        return Err(invalid("need at least one particle"));
    }
    let d = target.dim();
    let normal = Normal::new(0.0, opts.init_scale).map_err(|e| invalid(e.to_string()))?;
    let mut rng = stream_rng(opts.seed, Stream::Init, &[]);
    // antithetic start: every draw x is paired with -x
    let mut ps: Vec<Array2<f64>> = Vec::with_capacity(opts.particles);
    while ps.len() < opts.particles {
        let x = Array2::from_shape_simple_fn((1, d), || normal.sample(&mut rng));
        if ps.len() + 1 < opts.particles {
            ps.push(-&x);
        }
        ps.push(x);
    }
    let mut stepper = SvgdStepper::new(opts.rule, opts.step_size);
    for _ in 0..opts.steps {
        let grads: Vec<Array2<f64>> = ps
            .iter()
            .map(|p| {
                let g = target.score(p.as_slice().expect("contiguous"));
                Array2::from_shape_vec((1, d), g).expect("shape")
            })
            .collect();
        let dirs = svgd_directions_raw(&ps, &grads, &opts.kernel)?;
        stepper.apply(&mut ps, &dirs)?;
    }
    let particles: Vec<Vec<f64>> = ps.iter().map(|p| p.iter().cloned().collect()).collect();
    let n = particles.len() as f64;
    let mean: Vec<f64> = (0..d)
        .map(|k| particles.iter().map(|p| p[k]).sum::<f64>() / n)
        .collect();
    let variance: Vec<f64> = (0..d)
        .map(|k| particles.iter().map(|p| (p[k] - mean[k]).powi(2)).sum::<f64>() / n)
        .collect();
    let mode_counts = target
        .modes()
        .iter()
        .map(|m| {
            particles
                .iter()
                .filter(|p| {
                    p.iter().zip(m).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() <= 0.5
                })
                .count()
        })
        .collect();
    Ok(MomentReport {
        target_mean: target.mean(),
        target_variance: target.variance(),
        mean,
        variance,
        mode_counts,
        particles,
    })
}
