//! Footprint-masked error metrics in meters, footprint IoU, and the
//! manifest-driven benchmark runner.

mod benchmark;

pub use benchmark::{
    run_benchmark, sample_spec, score_predictions, BenchmarkConfig, DiffusionModel, MetricMeans, MetricReport, RestoreMethod,
    SampleMetrics, SkippedSample,
};

use crate::error::{Error, Result};
use crate::raster::{Footprint, HeightMap};

/// Height above which a predicted pixel counts as roof.
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.1;

/// Mean absolute and root-mean-square error over the footprint pixels.
pub fn mae_rmse(pred: &HeightMap, gt: &HeightMap, m: &Footprint) -> Result<(f64, f64)> {
    pred.ensure_same_dims(gt.dims())?;
    gt.ensure_same_dims(m.dims())?;
    let mut abs = 0.0;
    let mut sq = 0.0;
    let mut n = 0usize;
    for ((p, g), inside) in pred.data().iter().zip(gt.data()).zip(m.data()) {
        if *inside {
            let e = p - g;
            abs += e.abs();
            sq += e * e;
            n += 1;
        }
    }
    if n == 0 {
        return Err(Error::EmptyFootprint);
    }
    Ok((abs / n as f64, (sq / n as f64).sqrt()))
}

/// IoU between `{pred > threshold}` and the reference footprint; 0 when
/// both are empty.
pub fn footprint_iou(pred: &HeightMap, gt_fp: &Footprint, threshold: f64) -> Result<f64> {
    pred.ensure_same_dims(gt_fp.dims())?;
    let mut inter = 0usize;
    let mut union = 0usize;
    for (p, g) in pred.data().iter().zip(gt_fp.data()) {
        let hit = *p > threshold;
        inter += (hit && *g) as usize;
        union += (hit || *g) as usize;
    }
    Ok(if union == 0 { 0.0 } else { inter as f64 / union as f64 })
}
