//! Stein variational gradient descent over matrix-shaped particles.
//!
//! Particles are treated as flat parameter vectors: distances are Frobenius
//! norms and the RBF kernel is `k(a, b) = exp(-||a - b||^2 / h)`.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::policy::ParticleEnsemble;

/// Kernel bandwidth choice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bandwidth {
    Fixed(f64),
    /// Recomputed every step from the median pairwise distance.
    Median,
}

impl Default for Bandwidth {
    fn default() -> Self {
        Bandwidth::Median
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct KernelConfig {
    pub bandwidth: Bandwidth,
}

impl KernelConfig {
    pub fn fixed(h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("bandwidth must be positive, got {h}")));
        }
        Ok(Self {
            bandwidth: Bandwidth::Fixed(h),
        })
    }

    pub fn resolve(&self, particles: &[Array2<f64>]) -> f64 {
        match self.bandwidth {
            Bandwidth::Fixed(h) => h,
            Bandwidth::Median => median_bandwidth(particles),
        }
    }
}

fn check_shape(a: &Array2<f64>, b: &Array2<f64>) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(invalid(format!(
            "shape mismatch {:?} vs {:?}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

pub fn squared_distance(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn rbf_kernel(a: &Array2<f64>, b: &Array2<f64>, h: f64) -> Result<f64> {
    check_shape(a, b)?;
    if !(h > 0.0) {
        return Err(invalid("bandwidth must be positive"));
    }
    Ok((-squared_distance(a, b) / h).exp())
}

/// `grad_a k(a, b) = (2 / h) (b - a) k(a, b)`.
pub fn kernel_grad_wrt_first(a: &Array2<f64>, b: &Array2<f64>, h: f64) -> Result<Array2<f64>> {
    let k = rbf_kernel(a, b, h)?;
    Ok((b - a) * (2.0 / h * k))
}

/// Median heuristic `h = med^2 / ln(n + 1)` over pairwise Frobenius distances.
///
/// Falls back to `h = 1` for fewer than two particles or when every particle
/// coincides.
pub fn median_bandwidth(particles: &[Array2<f64>]) -> f64 {
    let n = particles.len();
    if n < 2 {
        return 1.0;
    }
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            dists.push(squared_distance(&particles[i], &particles[j]).sqrt());
        }
    }
    dists.sort_by(f64::total_cmp);
    let m = dists.len();
    let med = if m % 2 == 1 {
        dists[m / 2]
    } else {
        0.5 * (dists[m / 2 - 1] + dists[m / 2])
    };
    if med == 0.0 {
        return 1.0;
    }
    med * med / ((n as f64) + 1.0).ln()
}

/// Empirical Stein direction for every particle:
/// `psi(theta_i) = 1/n sum_j [grad_j k(theta_j, theta_i) + grad_{theta_j} k(theta_j, theta_i)]`.
pub fn svgd_directions_raw(
    particles: &[Array2<f64>],
    grads: &[Array2<f64>],
    kernel: &KernelConfig,
) -> Result<Vec<Array2<f64>>> {
    let n = particles.len();
    if n == 0 {
        return Err(invalid("no particles"));
    }
    if grads.len() != n {
        return Err(invalid(format!("{} gradients for {n} particles", grads.len())));
    }
    for (p, g) in particles.iter().zip(grads) {
        check_shape(&particles[0], p)?;
        check_shape(p, g)?;
    }
    let h = kernel.resolve(particles);
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Numeric(format!("bandwidth {h} is not usable")));
    }
    let inv_n = 1.0 / n as f64;
    let mut out = Vec::with_capacity(n);
    for target in particles {
        let mut acc = Array2::<f64>::zeros(target.dim());
        for (source, grad) in particles.iter().zip(grads) {
            let k = (-squared_distance(source, target) / h).exp();
            let c = 2.0 / h * k;
            // drift k * grad_j plus repulsion (2/h) k (theta_i - theta_j)
            ndarray::Zip::from(&mut acc)
                .and(grad)
                .and(source)
                .and(target)
                .for_each(|a, &g, &s, &t| *a += g * k + c * (t - s));
        }
        acc *= inv_n;
        out.push(acc);
    }
    Ok(out)
}

pub fn svgd_directions(
    ensemble: &ParticleEnsemble,
    posterior_grads: &[Array2<f64>],
    kernel: &KernelConfig,
) -> Result<Vec<Array2<f64>>> {
    let thetas: Vec<Array2<f64>> = ensemble.particles.iter().map(|p| p.theta.clone()).collect();
    svgd_directions_raw(&thetas, posterior_grads, kernel)
}

/// `theta_i += step * psi_i`, rejected whole if any direction is non-finite.
pub fn svgd_step_raw(
    particles: &mut [Array2<f64>],
    directions: &[Array2<f64>],
    step: f64,
) -> Result<()> {
    if directions.len() != particles.len() {
        return Err(invalid("one direction per particle required"));
    }
    if step < 0.0 || !step.is_finite() {
        return Err(invalid(format!("step size must be non-negative, got {step}")));
    }
    for (p, d) in particles.iter().zip(directions) {
        check_shape(p, d)?;
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite SVGD direction".into()));
        }
    }
    for (p, d) in particles.iter_mut().zip(directions) {
        p.scaled_add(step, d);
    }
    Ok(())
}

pub fn svgd_step(
    ensemble: &mut ParticleEnsemble,
    directions: &[Array2<f64>],
    step: f64,
) -> Result<()> {
    if directions.len() != ensemble.len() {
        return Err(invalid("one direction per particle required"));
    }
    for (p, d) in ensemble.particles.iter().zip(directions) {
        check_shape(&p.theta, d)?;
        if d.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite SVGD direction".into()));
        }
    }
    for (p, d) in ensemble.particles.iter_mut().zip(directions) {
        p.theta.scaled_add(step, d);
    }
    Ok(())
}

/// How directions are turned into parameter updates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    #[default]
    Plain,
    /// Per-entry scaling by a running RMS of past directions.
    Adagrad,
}

/// Applies a [`StepRule`] across steps; holds the per-entry history for
/// the adaptive rule.
#[derive(Debug, Clone)]
pub struct SvgdStepper {
    pub rule: StepRule,
    pub step: f64,
    history: Option<Vec<Array2<f64>>>,
}

impl SvgdStepper {
    const DECAY: f64 = 0.9;
    const FUDGE: f64 = 1e-6;

    pub fn new(rule: StepRule, step: f64) -> Self {
        Self {
            rule,
            step,
            history: None,
        }
    }

    pub fn apply(&mut self, particles: &mut [Array2<f64>], directions: &[Array2<f64>]) -> Result<()> {
        match self.rule {
            StepRule::Plain => svgd_step_raw(particles, directions, self.step),
            StepRule::Adagrad => {
                let scaled = self.adagrad_scale(directions)?;
                svgd_step_raw(particles, &scaled, self.step)
            }
        }
    }

    pub fn apply_ensemble(
        &mut self,
        ensemble: &mut ParticleEnsemble,
        directions: &[Array2<f64>],
    ) -> Result<()> {
        match self.rule {
            StepRule::Plain => svgd_step(ensemble, directions, self.step),
            StepRule::Adagrad => {
                let scaled = self.adagrad_scale(directions)?;
                svgd_step(ensemble, &scaled, self.step)
            }
        }
    }

    fn adagrad_scale(&mut self, directions: &[Array2<f64>]) -> Result<Vec<Array2<f64>>> {
        if directions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite SVGD direction".into()));
        }
        let hist = match self.history.take() {
            None => directions.iter().map(|d| d.mapv(|x| x * x)).collect::<Vec<_>>(),
            Some(mut h) => {
                for (hh, d) in h.iter_mut().zip(directions) {
                    ndarray::Zip::from(hh)
                        .and(d)
                        .for_each(|a, &x| *a = Self::DECAY * *a + (1.0 - Self::DECAY) * x * x);
                }
                h
            }
        };
        let scaled = directions
            .iter()
            .zip(&hist)
            .map(|(d, h)| {
                let mut s = d.clone();
                ndarray::Zip::from(&mut s)
                    .and(h)
                    .for_each(|x, &v| *x /= Self::FUDGE + v.sqrt());
                s
            })
            .collect();
        self.history = Some(hist);
        Ok(scaled)
    }
}

/// Mean Frobenius distance over unordered pairs; 0 for fewer than two.
pub fn avg_pairwise_distance(particles: &[Array2<f64>]) -> f64 {
    let n = particles.len();
    if n < 2 {
        return 0.0;
    }
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            total += squared_distance(&particles[i], &particles[j]).sqrt();
        }
    }
    total / (n * (n - 1) / 2) as f64
}
