use rand::Rng;
use rand_distr::StandardNormal;

use super::denoiser::{Denoiser, DenoiserInput};
use super::schedule::{DiffusionSchedule, ReverseCoeffs};
use crate::error::{Error, Result};
use crate::raster::{Footprint, NormalizedMap};

/// Value carried by pixels outside the footprint in every noisy state.
pub const EXTERIOR: f64 = -1.0;

/// Draws a standard normal grid.
pub fn standard_normal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Forces every pixel outside the footprint to [`EXTERIOR`].
pub fn apply_footprint(x: &mut [f64], m: &Footprint) {
    for (v, inside) in x.iter_mut().zip(m.data()) {
        if !inside {
            *v = EXTERIOR;
        }
    }
}

/// `x_t = m * (sqrt(ab) x0 + sqrt(1 - ab) eps) - (1 - m)` for a given `ab`.
pub fn forward_at(alpha_bar: f64, x0: &[f64], eps: &[f64], m: &Footprint) -> Vec<f64> {
    let (sa, sn) = (alpha_bar.sqrt(), (1.0 - alpha_bar).sqrt());
    x0.iter()
        .zip(eps)
        .zip(m.data())
        .map(|((x, e), inside)| if *inside { sa * x + sn * e } else { EXTERIOR })
        .collect()
}

/// Closed-form noising of `x0` to step `t` inside the footprint.
pub fn forward(
    t: usize,
    x0: &[f64],
    eps: &[f64],
    m: &Footprint,
    schedule: &DiffusionSchedule,
) -> Result<Vec<f64>> {
    if t == 0 || t > schedule.steps() {
        return Err(Error::InvalidValue(format!(
            "step {t} outside 1..={}",
            schedule.steps()
        )));
    }
    let n = m.data().len();
    if x0.len() != n || eps.len() != n {
        return Err(Error::DimensionMismatch {
            expected: m.dims(),
            actual: (x0.len(), eps.len()),
        });
    }
    Ok(forward_at(schedule.alpha_bar(t), x0, eps, m))
}

/// `x_prev = (x_t - (1 - a) / sqrt(1 - ab) * eps_hat) / sqrt(a) + sqrt(1 - a) * z`.
/// `noise` supplies `z`; `None` (or a deterministic step) drops the term.
pub fn reverse_update(
    x_t: &[f64],
    eps_hat: &[f64],
    coeffs: ReverseCoeffs,
    noise: Option<&[f64]>,
) -> Vec<f64> {
    let ReverseCoeffs {
        alpha, alpha_bar, ..
    } = coeffs;
    let inv_sqrt_a = 1.0 / alpha.sqrt();
    let eps_coef = if alpha_bar < 1.0 {
        (1.0 - alpha) / (1.0 - alpha_bar).sqrt()
    } else {
        0.0
    };
    let sigma = (1.0 - alpha).sqrt();
    x_t.iter()
        .zip(eps_hat)
        .enumerate()
        .map(|(i, (x, e))| {
            let mean = inv_sqrt_a * (x - eps_coef * e);
            match noise {
                Some(z) if coeffs.add_noise => mean + sigma * z[i],
                _ => mean,
            }
        })
        .collect()
}

/// One step `t -> t - 1` of the full chain. Fresh noise is drawn from `rng`
/// except at `t = 1`.
pub fn reverse_step<R: Rng + ?Sized>(
    x_t: &[f64],
    t: usize,
    eps_hat: &[f64],
    schedule: &DiffusionSchedule,
    rng: &mut R,
) -> Vec<f64> {
    let coeffs = schedule.reverse_coeffs(t, t - 1);
    if coeffs.add_noise {
        let z = standard_normal(x_t.len(), rng);
        reverse_update(x_t, eps_hat, coeffs, Some(&z))
    } else {
        reverse_update(x_t, eps_hat, coeffs, None)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleOptions {
    /// Number of reverse updates; less than `T` selects an evenly spaced
    /// sub-schedule.
    pub n_steps: usize,
    /// Snapshot points in percent of completed updates (0 = initial noise).
    pub record_percent: Vec<f64>,
}

impl SampleOptions {
    pub fn steps(n_steps: usize) -> Self {
        Self {
            n_steps,
            record_percent: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub percent: f64,
    /// Diffusion step of the recorded state.
    pub t: usize,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SampleOutput {
    /// Restored map; pixels outside the footprint are flagged missing.
    pub x0: NormalizedMap,
    pub trajectory: Vec<Snapshot>,
}

/// Runs the conditional reverse chain from pure noise.
pub fn sample<R: Rng + ?Sized>(
    cond: &NormalizedMap,
    m: &Footprint,
    denoiser: &dyn Denoiser,
    schedule: &DiffusionSchedule,
    options: &SampleOptions,
    rng: &mut R,
) -> Result<SampleOutput> {
    sample_observed(cond, m, denoiser, schedule, options, rng, &mut |_, _, _| {})
}

/// [`sample`] with a callback receiving `(updates_done, t, state)` for the
/// initial state and after every update.
#[allow(clippy::too_many_arguments)]
pub fn sample_observed<R: Rng + ?Sized>(
    cond: &NormalizedMap,
    m: &Footprint,
    denoiser: &dyn Denoiser,
    schedule: &DiffusionSchedule,
    options: &SampleOptions,
    rng: &mut R,
    observer: &mut dyn FnMut(usize, usize, &[f64]),
) -> Result<SampleOutput> {
    cond.missing.ensure_same_dims(m.dims())?;
    m.require_nonempty()?;
    let steps = schedule.sampling_steps(options.n_steps)?;
    let n = steps.len();
    let record: Vec<(f64, usize)> = options
        .record_percent
        .iter()
        .map(|p| (*p, ((p.clamp(0.0, 100.0) / 100.0) * n as f64).round() as usize))
        .collect();
    let mut trajectory = Vec::new();
    let snap = |done: usize, t: usize, x: &[f64], trajectory: &mut Vec<Snapshot>| {
        for (percent, at) in &record {
            if *at == done {
                trajectory.push(Snapshot {
                    percent: *percent,
                    t,
                    x: x.to_vec(),
                });
            }
        }
    };

    let pixels = cond.width * cond.height;
    let cond_grid = cond.conditioning();
    let known: Vec<bool> = cond.missing.data().iter().map(|m| !m).collect();
    let mut x = standard_normal(pixels, rng);
    apply_footprint(&mut x, m);
    observer(0, steps[n - 1], &x);
    snap(0, steps[n - 1], &x, &mut trajectory);

    for k in (0..n).rev() {
        let t = steps[k];
        let prev = if k == 0 { 0 } else { steps[k - 1] };
        let coeffs = schedule.reverse_coeffs(t, prev);
        let input = DenoiserInput {
            width: cond.width,
            height: cond.height,
            x_t: &x,
            cond: &cond_grid,
            known: &known,
            alpha_bar: coeffs.alpha_bar,
        };
        let eps_hat = denoiser.predict(&input)?;
        if eps_hat.len() != pixels || eps_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidValue(format!(
                "denoiser produced an invalid prediction at step {t}"
            )));
        }
        x = if coeffs.add_noise {
            let z = standard_normal(pixels, rng);
            reverse_update(&x, &eps_hat, coeffs, Some(&z))
        } else {
            reverse_update(&x, &eps_hat, coeffs, None)
        };
        apply_footprint(&mut x, m);
        let done = n - k;
        observer(done, prev, &x);
        snap(done, prev, &x, &mut trajectory);
    }

    let mut data = x;
    for (v, inside) in data.iter_mut().zip(m.data()) {
        if !inside {
            *v = 0.0;
        }
    }
    Ok(SampleOutput {
        x0: NormalizedMap {
            width: cond.width,
            height: cond.height,
            pixel_size: cond.pixel_size,
            data,
            missing: m.complement(),
            params: cond.params,
        },
        trajectory,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::denoiser::oracle_denoiser;
    use crate::diffusion::schedule::{make_schedule, BetaShape};
    use crate::raster::{normalize, HeightMap, Mask};
    use crate::rng::rng_from_seed;

    fn ring() -> Mask {
        let mut m = Mask::empty(6, 5);
        for r in 1..4 {
            for c in 1..5 {
                m.set(r, c, true);
            }
        }
        m
    }

    #[test]
    fn exterior_is_exactly_minus_one() {
        let s = make_schedule(50, 1e-4, 0.05, BetaShape::Linear).unwrap();
        let m = ring();
        let mut rng = rng_from_seed(1);
        let x0 = standard_normal(30, &mut rng);
        let eps = standard_normal(30, &mut rng);
        for t in [1, 25, 50] {
            let xt = forward(t, &x0, &eps, &m, &s).unwrap();
            for (v, inside) in xt.iter().zip(m.data()) {
                if !inside {
                    assert_eq!(*v, -1.0);
                }
            }
        }
        assert!(forward(0, &x0, &eps, &m, &s).is_err());
        assert!(forward(51, &x0, &eps, &m, &s).is_err());
    }

    #[test]
    fn small_noise_limit_keeps_signal() {
        let s = make_schedule(10, 1e-6, 1e-6, BetaShape::Linear).unwrap();
        let m = Mask::full(4, 4);
        let x0: Vec<f64> = (0..16).map(|k| k as f64 / 16.0 - 0.5).collect();
        let eps = vec![1.0; 16];
        let xt = forward(1, &x0, &eps, &m, &s).unwrap();
        for (a, b) in xt.iter().zip(&x0) {
            assert!((a - b).abs() < 2e-3);
        }
    }

    #[test]
    fn oracle_recovers_injected_noise() {
        let s = make_schedule(100, 1e-4, 0.02, BetaShape::Linear).unwrap();
        let m = ring();
        let mut rng = rng_from_seed(2);
        let x0 = standard_normal(30, &mut rng);
        let eps = standard_normal(30, &mut rng);
        let xt = forward(60, &x0, &eps, &m, &s).unwrap();
        let oracle = oracle_denoiser(&x0, &m).unwrap();
        let cond = vec![0.0; 30];
        let known = vec![false; 30];
        let got = oracle
            .predict(&DenoiserInput {
                width: 6,
                height: 5,
                x_t: &xt,
                cond: &cond,
                known: &known,
                alpha_bar: s.alpha_bar(60),
            })
            .unwrap();
        for ((g, e), inside) in got.iter().zip(&eps).zip(m.data()) {
            if *inside {
                assert!((g - e).abs() < 1e-6);
            } else {
                assert_eq!(*g, 0.0);
            }
        }
    }

    #[test]
    fn unit_alpha_is_identity() {
        let coeffs = ReverseCoeffs {
            alpha: 1.0,
            alpha_bar: 0.5,
            add_noise: true,
        };
        let x = [0.3, -0.7, 1.2];
        let z = [5.0, 5.0, 5.0];
        assert_eq!(reverse_update(&x, &[0.9, 0.1, -2.0], coeffs, Some(&z)), x.to_vec());
    }

    #[test]
    fn true_noise_moves_toward_signal() {
        let s = make_schedule(200, 1e-4, 0.02, BetaShape::Linear).unwrap();
        let m = Mask::full(8, 8);
        let mut rng = rng_from_seed(3);
        let x0 = standard_normal(64, &mut rng);
        let eps = standard_normal(64, &mut rng);
        let rmse = |x: &[f64], ab: f64| {
            let s: f64 = x.iter().zip(&x0).map(|(a, b)| (a - ab.sqrt() * b).powi(2)).sum();
            (s / 64.0).sqrt()
        };
        for t in [2, 50, 150, 200] {
            let xt = forward(t, &x0, &eps, &m, &s).unwrap();
            let prev = reverse_update(&xt, &eps, s.reverse_coeffs(t, t - 1), None);
            assert!(rmse(&prev, s.alpha_bar(t - 1)) < rmse(&xt, s.alpha_bar(t)), "t={t}");
        }
    }

    fn gable(side: usize) -> (HeightMap, Mask) {
        let mut z = HeightMap::zeros(side, side, 0.5);
        let mut m = Mask::empty(side, side);
        let mid = side as f64 / 2.0;
        for r in 3..side - 3 {
            for c in 4..side - 4 {
                z.set(r, c, 5.0 + 3.0 - 0.3 * (c as f64 + 0.5 - mid).abs()).unwrap();
                m.set(r, c, true);
            }
        }
        (z, m)
    }

    #[test]
    fn oracle_chain_recovers_clean_map() {
        let (z, m) = gable(32);
        let x0 = normalize(&z, 10.0).unwrap();
        let s = DiffusionSchedule::new(Default::default()).unwrap();
        let oracle = oracle_denoiser(&x0.data, &m).unwrap();
        let opts = SampleOptions {
            n_steps: 250,
            record_percent: vec![0.0, 50.0, 100.0],
        };
        let out = sample(&x0, &m, &oracle, &s, &opts, &mut rng_from_seed(4)).unwrap();
        let rmse = |x: &[f64]| {
            let idx: Vec<usize> = m.indices().collect();
            let s: f64 = idx.iter().map(|&i| (x[i] - x0.data[i]).powi(2)).sum();
            (s / idx.len() as f64).sqrt()
        };
        assert_eq!(out.trajectory.len(), 3);
        let start = rmse(&out.trajectory[0].x);
        assert!(rmse(&out.x0.data) < 0.1 * start);
        for (v, inside) in out.x0.data.iter().zip(m.data()) {
            if !inside {
                assert_eq!(*v, 0.0);
            }
        }
        assert_eq!(out.x0.missing, m.complement());
    }

    #[test]
    fn full_count_matches_manual_chain() {
        let s = make_schedule(40, 1e-3, 0.05, BetaShape::Linear).unwrap();
        let (z, m) = gable(12);
        let x0 = normalize(&z, 10.0).unwrap();
        let oracle = oracle_denoiser(&x0.data, &m).unwrap();
        let got = sample(&x0, &m, &oracle, &s, &SampleOptions::steps(40), &mut rng_from_seed(9)).unwrap();

        let mut rng = rng_from_seed(9);
        let mut x = standard_normal(144, &mut rng);
        apply_footprint(&mut x, &m);
        let cond = x0.conditioning();
        let known = vec![true; 144];
        for t in (1..=40).rev() {
            let eps = oracle
                .predict(&DenoiserInput {
                    width: 12,
                    height: 12,
                    x_t: &x,
                    cond: &cond,
                    known: &known,
                    alpha_bar: s.alpha_bar(t),
                })
                .unwrap();
            x = reverse_step(&x, t, &eps, &s, &mut rng);
            apply_footprint(&mut x, &m);
        }
        for ((a, b), inside) in got.x0.data.iter().zip(&x).zip(m.data()) {
            if *inside {
                assert_eq!(a, b);
            }
        }
    }

    #[test]
    fn seeded_runs_repeat() {
        let s = make_schedule(30, 1e-3, 0.05, BetaShape::Linear).unwrap();
        let (z, m) = gable(12);
        let x0 = normalize(&z, 10.0).unwrap();
        let oracle = oracle_denoiser(&x0.data, &m).unwrap();
        let run = |seed| {
            sample(&x0, &m, &oracle, &s, &SampleOptions::steps(10), &mut rng_from_seed(seed))
                .unwrap()
                .x0
                .data
        };
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }
}
