use crate::error::{Error, Result};
use crate::raster::Footprint;

/// Mean absolute noise error over footprint pixels.
pub fn masked_l1_loss(eps: &[f64], eps_hat: &[f64], m: &Footprint) -> Result<f64> {
    check(eps, eps_hat, m)?;
    let n = m.count();
    let sum: f64 = eps
        .iter()
        .zip(eps_hat)
        .zip(m.data())
        .filter(|(_, inside)| **inside)
        .map(|((e, h), _)| (e - h).abs())
        .sum();
    Ok(sum / n as f64)
}

/// Loss and its gradient with respect to `eps_hat`. Pixels outside the
/// footprint get exactly zero gradient; at `eps_hat == eps` the subgradient
/// 0 is used.
pub fn masked_l1_loss_grad(eps: &[f64], eps_hat: &[f64], m: &Footprint) -> Result<(f64, Vec<f64>)> {
    let loss = masked_l1_loss(eps, eps_hat, m)?;
    let scale = 1.0 / m.count() as f64;
    let grad = eps
        .iter()
        .zip(eps_hat)
        .zip(m.data())
        .map(|((e, h), inside)| {
            if !*inside || h == e {
                0.0
            } else if h > e {
                scale
            } else {
                -scale
            }
        })
        .collect();
    Ok((loss, grad))
}

fn check(eps: &[f64], eps_hat: &[f64], m: &Footprint) -> Result<()> {
    let n = m.data().len();
    if eps.len() != n || eps_hat.len() != n {
        return Err(Error::DimensionMismatch {
            expected: m.dims(),
            actual: (eps.len(), eps_hat.len()),
        });
    }
    m.require_nonempty()
}
