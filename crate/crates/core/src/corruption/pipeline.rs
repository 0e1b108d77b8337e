use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{
    incompleteness_mask_benchmark, incompleteness_mask_training, inject_trees, sparsity_mask,
    CorruptionSpec, TreeLibrary, TreePlacement,
};
use crate::error::Result;
use crate::raster::{Footprint, HeightMap};
use crate::rng::child_rng;

/// How incompleteness masks are drawn.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IncompletenessMode {
    /// Exact pixel count from `incompleteness_pct`.
    #[default]
    Benchmark,
    /// Per-pixel Bernoulli trials; the removed fraction varies per map.
    Training,
}

/// What the synthesis did, for reproducibility audits.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub trees_applied: bool,
    pub trees: Vec<TreePlacement>,
    pub trees_skipped: usize,
    pub sparsity_removed: usize,
    pub incompleteness_removed: usize,
    pub exterior_cleared: usize,
}

#[derive(Debug, Clone)]
pub struct Synthesis {
    pub corrupted: HeightMap,
    pub provenance: Provenance,
}

/// Tree noise, then sparsity, then incompleteness. Each stage draws from
/// its own stream derived from `spec.seed`, so the result depends only on
/// the inputs and the spec.
pub fn synthesize(
    z_gt: &HeightMap,
    m: &Footprint,
    spec: &CorruptionSpec,
    trees: &TreeLibrary,
    mode: IncompletenessMode,
) -> Result<Synthesis> {
    spec.validate()?;
    z_gt.ensure_same_dims(m.dims())?;
    let mut provenance = Provenance {
        seed: spec.seed,
        ..Provenance::default()
    };

    let mut tree_rng = child_rng(spec.seed, "trees");
    let mut z = z_gt.clone();
    let wants_trees = spec.tree_count_max > 0
        && spec.tree_probability > 0.0
        && tree_rng.random::<f64>() < spec.tree_probability;
    if wants_trees {
        let outcome = inject_trees(&z, m, trees, spec, &mut tree_rng)?;
        provenance.trees_applied = true;
        provenance.trees = outcome.placements;
        provenance.trees_skipped = outcome.skipped;
        z = outcome.map;
    }

    let sparse = sparsity_mask(m, spec.sparsity_pct, &mut child_rng(spec.seed, "sparsity"))?;
    provenance.sparsity_removed = sparse.count();
    z = sparse.apply_to(&z);

    let mut inc_rng = child_rng(spec.seed, "incompleteness");
    let incomplete = match mode {
        IncompletenessMode::Benchmark => {
            incompleteness_mask_benchmark(m, spec.incompleteness_pct, spec, &mut inc_rng)?
        }
        IncompletenessMode::Training => incompleteness_mask_training(m, spec, &mut inc_rng),
    };
    provenance.incompleteness_removed = incomplete.count();
    z = incomplete.apply_to(&z);

    if !spec.keep_exterior_trees {
        let exterior = m.complement();
        provenance.exterior_cleared = exterior.indices().filter(|&i| z.data()[i] > 0.0).count();
        z = exterior.apply_to(&z);
    }

    Ok(Synthesis {
        corrupted: z,
        provenance,
    })
}
