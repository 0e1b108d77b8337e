use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::denoiser::{DenoiserInput, Trainable};
use super::loss::masked_l1_loss_grad;
use super::process::{forward_at, standard_normal};
use super::schedule::DiffusionSchedule;
use crate::error::{Error, Result};
use crate::raster::{Footprint, Mask, NormalizedMap};
use crate::rng::{child_rng, derive_seed};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Sgd { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Optimizer {
    pub fn adam() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub optimizer: Optimizer,
    pub learning_rate: f64,
    /// Steps over which the rate ramps linearly from
    /// `warmup_start * learning_rate` to `learning_rate`.
    pub warmup_steps: usize,
    pub warmup_start: f64,
    /// Global gradient-norm ceiling.
    pub grad_clip: Option<f64>,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            optimizer: Optimizer::Sgd { momentum: 0.9 },
            learning_rate: 7e-5,
            warmup_steps: 10_000,
            warmup_start: 0.2,
            grad_clip: None,
        }
    }
}

impl OptimizerConfig {
    /// Adam with a short warm-up; converges within a few thousand steps on
    /// small procedural roofs.
    pub fn toy() -> Self {
        Self {
            optimizer: Optimizer::adam(),
            learning_rate: 2e-3,
            warmup_steps: 100,
            warmup_start: 0.2,
            grad_clip: Some(1.0),
        }
    }

    pub fn rate_at(&self, step: usize) -> f64 {
        if step >= self.warmup_steps {
            return self.learning_rate;
        }
        let frac = step as f64 / self.warmup_steps as f64;
        self.learning_rate * (self.warmup_start + (1.0 - self.warmup_start) * frac)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub steps: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Train with an all-ones mask so the model also infers the footprint.
    pub no_footprint: bool,
    pub optimizer: OptimizerConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            batch_size: 8,
            seed: 0,
            no_footprint: false,
            optimizer: OptimizerConfig::default(),
        }
    }
}

/// One `(x0, cond, m)` triple. `x0` must be defined on every pixel the loss
/// covers (the whole grid when training without footprints).
#[derive(Debug, Clone)]
pub struct TrainingExample {
    pub x0: Vec<f64>,
    pub cond: NormalizedMap,
    pub footprint: Footprint,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per optimizer step.
    pub losses: Vec<f64>,
}

impl TrainReport {
    /// Mean loss over the 1-based inclusive step range.
    pub fn mean_loss(&self, first: usize, last: usize) -> f64 {
        let slice = &self.losses[first - 1..last.min(self.losses.len())];
        slice.iter().sum::<f64>() / slice.len() as f64
    }
}

/// Loss and gradient of one example at a seeded `(t, eps)` draw.
pub fn example_gradient<D: Trainable>(
    model: &D,
    schedule: &DiffusionSchedule,
    example: &TrainingExample,
    no_footprint: bool,
    rng: &mut impl Rng,
) -> Result<(f64, Vec<f64>)> {
    let TrainingExample { x0, cond, footprint } = example;
    let (w, h) = cond.dims();
    let full;
    let m = if no_footprint {
        full = Mask::full(w, h);
        &full
    } else {
        footprint
    };
    m.ensure_same_dims(cond.dims())?;
    if x0.len() != w * h {
        return Err(Error::DimensionMismatch {
            expected: (w, h),
            actual: (x0.len(), 1),
        });
    }
    let t = rng.random_range(1..=schedule.steps());
    let eps = standard_normal(w * h, rng);
    let alpha_bar = schedule.alpha_bar(t);
    let x_t = forward_at(alpha_bar, x0, &eps, m);
    let cond_grid = cond.conditioning();
    let known: Vec<bool> = cond.missing.data().iter().map(|v| !v).collect();
    let input = DenoiserInput {
        width: w,
        height: h,
        x_t: &x_t,
        cond: &cond_grid,
        known: &known,
        alpha_bar,
    };
    let mut grad = vec![0.0; model.params().len()];
    let mut failure = None;
    let mut head = |out: &[f64]| match masked_l1_loss_grad(&eps, out, m) {
        Ok(v) => v,
        Err(e) => {
            failure = Some(e);
            (f64::NAN, vec![0.0; out.len()])
        }
    };
    let loss = model.forward_backward(&input, &mut head, &mut grad)?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok((loss, grad))
}

/// Minimizes the masked noise-prediction loss. `source(step, index)` yields
/// the training examples; per-example noise and `t` are seeded from
/// `(config.seed, step, index)`, and batch gradients are summed in index
/// order, so the result does not depend on the worker count.
pub fn train<D, S>(
    model: &mut D,
    schedule: &DiffusionSchedule,
    config: &TrainConfig,
    source: S,
    on_step: &mut dyn FnMut(usize, f64),
) -> Result<TrainReport>
where
    D: Trainable,
    S: Fn(usize, usize) -> Result<TrainingExample> + Sync,
{
    if config.steps == 0 || config.batch_size == 0 {
        return Err(Error::BadConfig("steps and batch_size must be positive".into()));
    }
    let n = model.params().len();
    let mut first = vec![0.0; n];
    let mut second = vec![0.0; n];
    let mut report = TrainReport::default();
    for step in 1..=config.steps {
        let step_seed = derive_seed(config.seed, &format!("step{step}"));
        let results: Vec<Result<(f64, Vec<f64>)>> = (0..config.batch_size)
            .into_par_iter()
            .map(|idx| {
                let example = source(step, idx)?;
                let mut rng = child_rng(step_seed, &format!("example{idx}"));
                example_gradient(model, schedule, &example, config.no_footprint, &mut rng)
            })
            .collect();
        let mut loss = 0.0;
        let mut grad = vec![0.0; n];
        for r in results {
            let (l, g) = r?;
            loss += l;
            for (a, b) in grad.iter_mut().zip(&g) {
                *a += b;
            }
        }
        let scale = 1.0 / config.batch_size as f64;
        loss *= scale;
        grad.iter_mut().for_each(|g| *g *= scale);
        if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::Diverged { step, loss });
        }
        if let Some(clip) = config.optimizer.grad_clip {
            let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if norm > clip {
                grad.iter_mut().for_each(|g| *g *= clip / norm);
            }
        }
        let lr = config.optimizer.rate_at(step - 1);
        let params = model.params_mut();
        match config.optimizer.optimizer {
            Optimizer::Sgd { momentum } => {
                for ((p, v), g) in params.iter_mut().zip(&mut first).zip(&grad) {
                    *v = momentum * *v + g;
                    *p -= lr * *v;
                }
            }
            Optimizer::Adam {
                beta1,
                beta2,
                epsilon,
            } => {
                let c1 = 1.0 - beta1.powi(step as i32);
                let c2 = 1.0 - beta2.powi(step as i32);
                for (((p, m), v), g) in params.iter_mut().zip(&mut first).zip(&mut second).zip(&grad) {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + epsilon);
                }
            }
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(Error::Diverged { step, loss });
        }
        report.losses.push(loss);
        on_step(step, loss);
    }
    Ok(report)
}
