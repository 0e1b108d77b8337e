use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How `beta` moves from `beta_start` to `beta_end`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BetaShape {
    #[default]
    Linear,
    /// Linear in `sqrt(beta)`.
    Quadratic,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    pub steps: usize,
    pub beta_start: f64,
    pub beta_end: f64,
    #[serde(default)]
    pub shape: BetaShape,
}

impl Default for ScheduleConfig {
    fn default() -> Self {
        Self {
            steps: 2000,
            beta_start: 1e-6,
            beta_end: 0.01,
            shape: BetaShape::Linear,
        }
    }
}

/// Per-step retention factors. Index 0 is the clean state (`alpha_bar = 1`);
/// steps run `1..=T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffusionSchedule {
    config: ScheduleConfig,
    alpha: Vec<f64>,
    alpha_bar: Vec<f64>,
}

pub fn make_schedule(
    steps: usize,
    beta_start: f64,
    beta_end: f64,
    shape: BetaShape,
) -> Result<DiffusionSchedule> {
    DiffusionSchedule::new(ScheduleConfig {
        steps,
        beta_start,
        beta_end,
        shape,
    })
}

impl DiffusionSchedule {
    pub fn new(config: ScheduleConfig) -> Result<Self> {
        let ScheduleConfig {
            steps,
            beta_start,
            beta_end,
            shape,
        } = config;
        if steps == 0 {
            return Err(Error::BadSchedule("need at least one step".into()));
        }
        if !(beta_start > 0.0 && beta_start <= beta_end && beta_end < 1.0) {
            return Err(Error::BadSchedule(format!(
                "require 0 < beta_start <= beta_end < 1, got [{beta_start}, {beta_end}]"
            )));
        }
        let frac = |k: usize| {
            if steps == 1 {
                0.0
            } else {
                k as f64 / (steps - 1) as f64
            }
        };
        let betas = (0..steps).map(|k| match shape {
            BetaShape::Linear => beta_start + (beta_end - beta_start) * frac(k),
            BetaShape::Quadratic => {
                let s = beta_start.sqrt() + (beta_end.sqrt() - beta_start.sqrt()) * frac(k);
                s * s
            }
        });
        let mut alpha = vec![1.0];
        let mut alpha_bar = vec![1.0];
        for beta in betas {
            let a = 1.0 - beta;
            alpha.push(a);
            alpha_bar.push(alpha_bar.last().unwrap() * a);
        }
        Ok(Self {
            config,
            alpha,
            alpha_bar,
        })
    }

    pub fn config(&self) -> ScheduleConfig {
        self.config
    }

    /// Number of diffusion steps `T`.
    pub fn steps(&self) -> usize {
        self.config.steps
    }

    pub fn alpha(&self, t: usize) -> f64 {
        self.alpha[t]
    }

    pub fn alpha_bar(&self, t: usize) -> f64 {
        self.alpha_bar[t]
    }

    /// `n` evenly spaced steps in increasing order, always containing `T`
    /// and, when `n >= 2`, step 1. `n == T` yields every step.
    pub fn sampling_steps(&self, n: usize) -> Result<Vec<usize>> {
        let total = self.steps();
        if n == 0 || n > total {
            return Err(Error::BadSchedule(format!(
                "cannot pick {n} sampling steps out of {total}"
            )));
        }
        if n == 1 {
            return Ok(vec![total]);
        }
        Ok((0..n)
            .map(|k| 1 + ((k * (total - 1)) as f64 / (n - 1) as f64).round() as usize)
            .collect())
    }

    /// Coefficients of the reverse update from step `t` to step `prev < t`.
    /// With `prev = t - 1` these are the schedule's own `alpha_t`, `alpha_bar_t`.
    pub fn reverse_coeffs(&self, t: usize, prev: usize) -> ReverseCoeffs {
        debug_assert!(prev < t && t <= self.steps());
        let alpha_bar = self.alpha_bar[t];
        let alpha = if prev + 1 == t {
            self.alpha[t]
        } else {
            alpha_bar / self.alpha_bar[prev]
        };
        ReverseCoeffs {
            alpha,
            alpha_bar,
            add_noise: prev > 0,
        }
    }
}

/// Inputs of one reverse update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReverseCoeffs {
    pub alpha: f64,
    pub alpha_bar: f64,
    /// The final update (landing on step 0) is deterministic.
    pub add_noise: bool,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_step() {
        let s = make_schedule(1, 0.5, 0.5, BetaShape::Linear).unwrap();
        assert_eq!(s.alpha_bar(1), 0.5);
        assert_eq!(s.alpha_bar(0), 1.0);
    }

    #[test]
    fn bad_bounds() {
        assert!(make_schedule(0, 0.1, 0.2, BetaShape::Linear).is_err());
        assert!(make_schedule(10, 0.0, 0.2, BetaShape::Linear).is_err());
        assert!(make_schedule(10, 0.3, 0.2, BetaShape::Linear).is_err());
        assert!(make_schedule(10, 0.1, 1.0, BetaShape::Linear).is_err());
    }

    #[test]
    fn alpha_bar_strictly_decreasing() {
        for shape in [BetaShape::Linear, BetaShape::Quadratic] {
            let s = make_schedule(500, 1e-4, 0.02, shape).unwrap();
            for t in 1..=500 {
                assert!(s.alpha(t) > 0.0 && s.alpha(t) < 1.0);
                assert!(s.alpha_bar(t) < s.alpha_bar(t - 1));
            }
        }
    }

    #[test]
    fn default_schedule_ends_near_pure_noise() {
        // Independent evaluation of prod(1 - beta_k) in log space.
        let log_sum: f64 = (0..2000)
            .map(|k| (1.0 - (1e-6 + (0.01 - 1e-6) * k as f64 / 1999.0)).ln())
            .sum();
        let s = DiffusionSchedule::new(ScheduleConfig::default()).unwrap();
        assert!((s.alpha_bar(2000) - log_sum.exp()).abs() < 1e-12);
        assert!(s.alpha_bar(2000) < 1e-4);
    }

    #[test]
    fn sampling_steps_keep_endpoints() {
        let s = make_schedule(2000, 1e-6, 0.01, BetaShape::Linear).unwrap();
        for n in [2, 3, 60, 125, 250, 500, 1999, 2000] {
            let steps = s.sampling_steps(n).unwrap();
            assert_eq!(steps.len(), n);
            assert_eq!(steps[0], 1);
            assert_eq!(*steps.last().unwrap(), 2000);
            assert!(steps.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(s.sampling_steps(2000).unwrap(), (1..=2000).collect::<Vec<_>>());
        assert_eq!(s.sampling_steps(1).unwrap(), vec![2000]);
        assert!(s.sampling_steps(2001).is_err());
    }

    #[test]
    fn skipping_coefficients_compose() {
        let s = make_schedule(100, 1e-4, 0.02, BetaShape::Linear).unwrap();
        let c = s.reverse_coeffs(50, 40);
        assert!((c.alpha * s.alpha_bar(40) - s.alpha_bar(50)).abs() < 1e-15);
        assert_eq!(s.reverse_coeffs(50, 49).alpha, s.alpha(50));
        assert!(!s.reverse_coeffs(3, 0).add_noise);
    }
}
