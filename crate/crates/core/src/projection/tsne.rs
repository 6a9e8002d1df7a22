//! Exact t-SNE (O(n²) per iteration), with the optimizer schedule of the
//! common reference implementation: early exaggeration, momentum switch and
//! per-coordinate gains.

use std::ops::ControlFlow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProjectionError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub seed: u64,
    pub early_exaggeration: f64,
    pub exaggeration_iterations: usize,
    /// `None` picks `max(n / early_exaggeration / 4, 50)`.
    pub learning_rate: Option<f64>,
    /// Starting layout; `None` draws N(0, 1e-4²) coordinates from ChaCha8
    /// seeded with `seed`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<Vec<[f64; 2]>>,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            seed: 0,
            early_exaggeration: 12.0,
            exaggeration_iterations: 250,
            learning_rate: None,
            init: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneProgress {
    pub iteration: usize,
    pub total: usize,
    /// KL divergence (unexaggerated) of the layout this iteration started
    /// from.
    pub kl: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    pub coords: Vec<[f64; 2]>,
    pub kl: f64,
    /// `kl_history[k]` is the KL divergence after `k` updates.
    pub kl_history: Vec<f64>,
}

fn squared_distances(x: &[Vec<f64>]) -> Vec<f64> {
    let n = x.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| x[i].iter().zip(&x[j]).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect()
        })
        .collect();
    rows.concat()
}

/// Conditional affinities of row `i` whose entropy (in nats) matches
/// `ln(perplexity)`, found by bisection on the precision.
fn row_affinities(d: &[f64], i: usize, perplexity: f64) -> Vec<f64> {
    let target = perplexity.ln();
    let (mut lo, mut hi, mut beta) = (f64::NEG_INFINITY, f64::INFINITY, 1.0);
    let mut p = vec![0.0; d.len()];
    for _ in 0..100 {
        let mut sum = 0.0;
        for (j, pj) in p.iter_mut().enumerate() {
            *pj = if j == i { 0.0 } else { (-d[j] * beta).exp() };
            sum += *pj;
        }
        if sum == 0.0 {
            sum = 1e-8;
        }
        let mut weighted = 0.0;
        for (j, pj) in p.iter_mut().enumerate() {
            *pj /= sum;
            weighted += d[j] * *pj;
        }
        let entropy = sum.ln() + beta * weighted;
        let diff = entropy - target;
        if diff.abs() <= 1e-5 {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_infinite() { beta * 2.0 } else { (beta + hi) / 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_infinite() { beta / 2.0 } else { (beta + lo) / 2.0 };
        }
    }
    p
}

/// Symmetrized joint affinities `P`, row-major `n × n`.
pub fn joint_affinities(x: &[Vec<f64>], perplexity: f64) -> Vec<f64> {
    let n = x.len();
    let d = squared_distances(x);
    let cond: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| row_affinities(&d[i * n..(i + 1) * n], i, perplexity))
        .collect();
    let mut p = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(f64::MIN_POSITIVE);
        }
        p[i * n + i] = 0.0;
    }
    p
}

/// KL divergence of the layout `y` against `p`, and the gradient against
/// `p` scaled by `exaggeration`.
fn kl_and_gradient(p: &[f64], y: &[[f64; 2]], exaggeration: f64) -> (f64, Vec<[f64; 2]>) {
    let n = y.len();
    let w: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let dx = y[i][0] - y[j][0];
                        let dy = y[i][1] - y[j][1];
                        1.0 / (1.0 + dx * dx + dy * dy)
                    }
                })
                .collect()
        })
        .collect();
    let z: f64 = w.iter().map(|r| r.iter().sum::<f64>()).sum::<f64>().max(f64::MIN_POSITIVE);
    let rows: Vec<(f64, [f64; 2])> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut kl = 0.0;
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let pij = p[i * n + j];
                let qij = (w[i][j] / z).max(f64::MIN_POSITIVE);
                if pij > 0.0 {
                    kl += pij * (pij / qij).ln();
                }
                let mult = 4.0 * (pij * exaggeration - qij) * w[i][j];
                g[0] += mult * (y[i][0] - y[j][0]);
                g[1] += mult * (y[i][1] - y[j][1]);
            }
            (kl, g)
        })
        .collect();
    let kl = rows.iter().map(|r| r.0).sum();
    (kl, rows.into_iter().map(|r| r.1).collect())
}

pub fn validate(n: usize, cfg: &TsneConfig) -> Result<(), ProjectionError> {
    if n < 5 {
        return Err(ProjectionError::TooFewPoints { n, min: 5 });
    }
    if !(cfg.perplexity >= 3.0 && cfg.perplexity < n as f64 / 3.0) {
        return Err(ProjectionError::Perplexity { perplexity: cfg.perplexity, n });
    }
    if cfg.iterations == 0 {
        return Err(ProjectionError::Config("iterations must be positive".into()));
    }
    if let Some(init) = &cfg.init {
        if init.len() != n {
            return Err(ProjectionError::Config(format!("init has {} points, expected {n}", init.len())));
        }
    }
    Ok(())
}

/// Standard normal draw by Box–Muller.
fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

pub fn initial_layout(n: usize, seed: u64) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| [1e-4 * gaussian(&mut rng), 1e-4 * gaussian(&mut rng)]).collect()
}

/// Runs t-SNE, calling `hook` after every iteration; returning
/// `ControlFlow::Break` from the hook cancels the run.
pub fn tsne_with<F>(x: &[Vec<f64>], cfg: &TsneConfig, mut hook: F) -> Result<TsneResult, ProjectionError>
where
    F: FnMut(TsneProgress) -> ControlFlow<()>,
{
    let n = x.len();
    validate(n, cfg)?;
    super::check_vectors(x)?;
    let p = joint_affinities(x, cfg.perplexity);
    let mut y = cfg.init.clone().unwrap_or_else(|| initial_layout(n, cfg.seed));
    let lr = cfg
        .learning_rate
        .unwrap_or_else(|| (n as f64 / cfg.early_exaggeration / 4.0).max(50.0));
    let mut update = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut history = Vec::with_capacity(cfg.iterations + 1);
    for it in 0..cfg.iterations {
        let exaggerating = it < cfg.exaggeration_iterations;
        let (exaggeration, momentum) = if exaggerating {
            (cfg.early_exaggeration, 0.5)
        } else {
            (1.0, 0.8)
        };
        let (kl, grad) = kl_and_gradient(&p, &y, exaggeration);
        history.push(kl);
        for i in 0..n {
            for c in 0..2 {
                let g = grad[i][c];
                gains[i][c] = if (update[i][c] * g) < 0.0 {
                    gains[i][c] + 0.2
                } else {
                    (gains[i][c] * 0.8).max(0.01)
                };
                update[i][c] = momentum * update[i][c] - lr * gains[i][c] * g;
                y[i][c] += update[i][c];
            }
        }
        if hook(TsneProgress { iteration: it + 1, total: cfg.iterations, kl }).is_break() {
            return Err(ProjectionError::Cancelled);
        }
    }
    let (kl, _) = kl_and_gradient(&p, &y, 1.0);
    history.push(kl);
    Ok(TsneResult { coords: y, kl, kl_history: history })
}

pub fn tsne(x: &[Vec<f64>], cfg: &TsneConfig) -> Result<TsneResult, ProjectionError> {
    tsne_with(x, cfg, |_| ControlFlow::Continue(()))
}
