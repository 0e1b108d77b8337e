use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Declarative, seeded description of how a clean roof gets corrupted.
///
/// Percentages are relative to the number of footprint pixels. `sigma_*`
/// are fractions of the larger image side.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorruptionSpec {
    pub sparsity_pct: f64,
    pub incompleteness_pct: f64,
    pub gmm_count: usize,
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub tree_count_min: usize,
    pub tree_count_max: usize,
    pub tree_xy_scale_min: f64,
    pub tree_xy_scale_max: f64,
    pub tree_z_scale_min: f64,
    pub tree_z_scale_max: f64,
    pub tree_probability: f64,
    /// Upper bound of the per-map global noise level, normalized units.
    pub global_sigma_max: f64,
    pub outlier_prob: f64,
    /// Keep tree returns outside the footprint (no-footprint training data).
    pub keep_exterior_trees: bool,
    pub seed: u64,
}

impl Default for CorruptionSpec {
    fn default() -> Self {
        Self {
            sparsity_pct: 0.0,
            incompleteness_pct: 0.0,
            gmm_count: 5,
            sigma_min: 0.0,
            sigma_max: 0.3,
            tree_count_min: 1,
            tree_count_max: 3,
            tree_xy_scale_min: 0.5,
            tree_xy_scale_max: 2.0,
            tree_z_scale_min: 2.0,
            tree_z_scale_max: 4.0,
            tree_probability: 0.3,
            global_sigma_max: 0.05,
            outlier_prob: 1e-4,
            keep_exterior_trees: false,
            seed: 0,
        }
    }
}

/// Benchmark presets named after the sparsity/incompleteness table columns.
pub const PRESETS: &[&str] = &[
    "s95_i30", "s95_i60", "s99_i30", "s99_i60", "s90_i30", "s90_i60", "s90_i80", "s90_i90",
    "s98_i0", "s99_i0", "s99.75_i0", "s99_i80",
];

impl CorruptionSpec {
    /// Spec that leaves the input untouched.
    pub fn neutral() -> Self {
        Self {
            tree_probability: 0.0,
            tree_count_min: 0,
            tree_count_max: 0,
            global_sigma_max: 0.0,
            outlier_prob: 0.0,
            ..Self::default()
        }
    }

    /// Resolves a preset name such as `s95_i30` (any `s<pct>_i<pct>` is
    /// accepted) to the default noise settings at that sparsity and
    /// incompleteness.
    pub fn preset(name: &str) -> Result<Self> {
        let bad = || Error::InvalidSpec(format!("unknown preset `{name}`, expected s<pct>_i<pct>"));
        let (s, i) = name.split_once('_').ok_or_else(bad)?;
        let s: f64 = s.strip_prefix('s').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let i: f64 = i.strip_prefix('i').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let spec = Self {
            sparsity_pct: s,
            incompleteness_pct: i,
            ..Self::default()
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidSpec(msg));
        let pct = |v: f64| (0.0..=100.0).contains(&v);
        let prob = |v: f64| (0.0..=1.0).contains(&v);
        if !pct(self.sparsity_pct) || !pct(self.incompleteness_pct) {
            return fail(format!(
                "sparsity {} / incompleteness {} must lie in [0, 100]",
                self.sparsity_pct, self.incompleteness_pct
            ));
        }
        if self.gmm_count == 0 {
            return fail("gmm_count must be at least 1".into());
        }
        if !(self.sigma_min >= 0.0 && self.sigma_min <= self.sigma_max) {
            return fail(format!(
                "sigma range [{}, {}] is not ordered and non-negative",
                self.sigma_min, self.sigma_max
            ));
        }
        if self.tree_count_min > self.tree_count_max {
            return fail("tree_count_min exceeds tree_count_max".into());
        }
        if !(self.tree_xy_scale_min > 0.0 && self.tree_xy_scale_min <= self.tree_xy_scale_max) {
            return fail("tree xy scale range must be positive and ordered".into());
        }
        if !(self.tree_z_scale_min >= 0.0 && self.tree_z_scale_min <= self.tree_z_scale_max) {
            return fail("tree z scale range must be non-negative and ordered".into());
        }
        if !prob(self.tree_probability) || !prob(self.outlier_prob) {
            return fail("probabilities must lie in [0, 1]".into());
        }
        if !(self.global_sigma_max >= 0.0 && self.global_sigma_max.is_finite()) {
            return fail("global_sigma_max must be finite and non-negative".into());
        }
        Ok(())
    }

    /// Parses a TOML spec, falling back to JSON.
    pub fn from_config_str(text: &str) -> Result<Self> {
        let spec: Self = match toml::from_str(text) {
            Ok(spec) => spec,
            Err(toml_err) => serde_json::from_str(text).map_err(|json_err| {
                Error::InvalidSpec(format!("not TOML ({toml_err}) nor JSON ({json_err})"))
            })?,
        };
        spec.validate()?;
        Ok(spec)
    }
}
