use crate::error::{Error, Result};
use crate::raster::Footprint;

/// Everything a noise predictor is conditioned on at one reverse step.
#[derive(Debug, Clone, Copy)]
pub struct DenoiserInput<'a> {
    pub width: usize,
    pub height: usize,
    /// Current noisy state, exterior pixels at -1.
    pub x_t: &'a [f64],
    /// Normalized corrupted observation, missing pixels at 0.
    pub cond: &'a [f64],
    /// Known-pixel flags of `cond` (1 = observed height).
    pub known: &'a [bool],
    pub alpha_bar: f64,
}

impl DenoiserInput<'_> {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.pixels();
        if self.x_t.len() != n || self.cond.len() != n || self.known.len() != n {
            return Err(Error::DimensionMismatch {
                expected: (self.width, self.height),
                actual: (self.x_t.len(), self.cond.len()),
            });
        }
        Ok(())
    }
}

/// Predicts the noise `eps` contained in `x_t`.
pub trait Denoiser: Sync {
    fn predict(&self, input: &DenoiserInput<'_>) -> Result<Vec<f64>>;
}

/// Denoiser with a flat parameter vector and reverse-mode gradients.
pub trait Trainable: Denoiser + Clone + Send {
    fn params(&self) -> &[f64];
    fn params_mut(&mut self) -> &mut [f64];

    /// Runs the forward pass, asks `head` for the loss and its gradient with
    /// respect to the output, then accumulates the parameter gradient into
    /// `grad`. Returns the loss.
    fn forward_backward(
        &self,
        input: &DenoiserInput<'_>,
        head: &mut dyn FnMut(&[f64]) -> (f64, Vec<f64>),
        grad: &mut [f64],
    ) -> Result<f64>;
}

/// Knows the clean map and inverts the forward kernel exactly inside the
/// footprint; returns 0 outside it and when `alpha_bar = 1`.
#[derive(Debug, Clone)]
pub struct OracleDenoiser {
    x0: Vec<f64>,
    footprint: Footprint,
}

pub fn oracle_denoiser(x0_gt: &[f64], footprint: &Footprint) -> Result<OracleDenoiser> {
    if x0_gt.len() != footprint.data().len() {
        return Err(Error::DimensionMismatch {
            expected: footprint.dims(),
            actual: (x0_gt.len(), 1),
        });
    }
    Ok(OracleDenoiser {
        x0: x0_gt.to_vec(),
        footprint: footprint.clone(),
    })
}

impl Denoiser for OracleDenoiser {
    fn predict(&self, input: &DenoiserInput<'_>) -> Result<Vec<f64>> {
        input.validate()?;
        let ab = input.alpha_bar;
        if ab >= 1.0 {
            return Ok(vec![0.0; input.pixels()]);
        }
        let (sa, sn) = (ab.sqrt(), (1.0 - ab).sqrt());
        Ok(input
            .x_t
            .iter()
            .zip(&self.x0)
            .zip(self.footprint.data())
            .map(|((xt, x0), inside)| if *inside { (xt - sa * x0) / sn } else { 0.0 })
            .collect())
    }
}

/// Always predicts zero noise.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroDenoiser;

impl Denoiser for ZeroDenoiser {
    fn predict(&self, input: &DenoiserInput<'_>) -> Result<Vec<f64>> {
        input.validate()?;
        Ok(vec![0.0; input.pixels()])
    }
}

/// Three-parameter per-pixel model `eps = a * x_t + b * cond + c * alpha_bar`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineDenoiser {
    pub params: [f64; 3],
}

impl Denoiser for AffineDenoiser {
    fn predict(&self, input: &DenoiserInput<'_>) -> Result<Vec<f64>> {
        input.validate()?;
        let [a, b, c] = self.params;
        Ok(input
            .x_t
            .iter()
            .zip(input.cond)
            .map(|(x, y)| a * x + b * y + c * input.alpha_bar)
            .collect())
    }
}

impl Trainable for AffineDenoiser {
    fn params(&self) -> &[f64] {
        &self.params
    }

    fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn forward_backward(
        &self,
        input: &DenoiserInput<'_>,
        head: &mut dyn FnMut(&[f64]) -> (f64, Vec<f64>),
        grad: &mut [f64],
    ) -> Result<f64> {
        let out = self.predict(input)?;
        let (loss, d_out) = head(&out);
        for ((d, x), y) in d_out.iter().zip(input.x_t).zip(input.cond) {
            grad[0] += d * x;
            grad[1] += d * y;
            grad[2] += d * input.alpha_bar;
        }
        Ok(loss)
    }
}
