//! Flat key=value pipeline configuration with range validation and a
//! deterministic textual form.

use std::fmt::Write as _;
use std::path::Path;

use crate::correspond::MatchMode;
use crate::spectral::RhoMode;
use crate::{Error, Result};

/// Every tunable of the end-to-end pipeline, with validated ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    /// Longest-axis voxel count for voxelization (8..=512).
    pub resolution: usize,
    /// Medial-strength threshold for thinning, normalized flux units (0, 1].
    pub tau: f64,
    /// Medial-coupling neighbor budget per boundary vertex (capital K).
    pub big_k: usize,
    /// Number of retained eigenpairs.
    pub k: usize,
    /// Interpretation of the sphere-size weight: radius or volume.
    pub rho: RhoMode,
    /// Seed for the eigensolver's internal randomization.
    pub seed: u64,
    /// Point-matching mode for correspondence.
    pub mode: MatchMode,
    /// Number of segmentation parts.
    pub parts: usize,
    /// Number of random feature subspaces fused during clustering.
    pub subspaces: usize,
    /// Seed for the segmentation clusterer.
    pub seg_seed: u64,
    /// Whether spectral feature columns are weighted by sqrt(lambda_1/lambda_i).
    pub eigen_weighting: bool,
    /// Neighbor count for the 9-dimensional per-point features.
    pub gsc_k: usize,
    /// Spectrum-alignment cost weights: eigenvalue gap, value histogram,
    /// spatial distribution.
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            resolution: 128,
            tau: 0.25,
            big_k: 16,
            k: 30,
            rho: RhoMode::Radius,
            seed: 42,
            mode: MatchMode::Drift,
            parts: 4,
            subspaces: 8,
            seg_seed: 7,
            eigen_weighting: true,
            gsc_k: 8,
            alpha: 0.4,
            beta: 0.3,
            gamma: 0.3,
        }
    }
}

fn invalid(field: &str, msg: impl Into<String>) -> Error {
    Error::Validation { field: field.into(), msg: msg.into() }
}

impl PipelineConfig {
    /// Range-check every field, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        if !(8..=512).contains(&self.resolution) {
            return Err(invalid(
                "resolution",
                format!("{} outside 8..=512", self.resolution),
            ));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(invalid("tau", format!("{} outside (0, 1]", self.tau)));
        }
        if !(1..=1024).contains(&self.big_k) {
            return Err(invalid("K", format!("{} outside 1..=1024", self.big_k)));
        }
        if !(1..=512).contains(&self.k) {
            return Err(invalid("k", format!("{} outside 1..=512", self.k)));
        }
        if self.parts < 2 {
            return Err(invalid("parts", format!("{} below 2", self.parts)));
        }
        if self.subspaces < 1 {
            return Err(invalid("subspaces", "must be at least 1"));
        }
        if self.gsc_k < 1 {
            return Err(invalid("gsc_k", "must be at least 1"));
        }
        for (name, v) in [("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(name, format!("{v} is not a nonnegative number")));
            }
        }
        if self.alpha + self.beta + self.gamma <= 0.0 {
            return Err(invalid("alpha", "alignment weights must not all be zero"));
        }
        Ok(())
    }

    /// Deterministic flat `key=value` form, one field per line, fixed order.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "resolution={}", self.resolution);
        let _ = writeln!(out, "tau={}", self.tau);
        let _ = writeln!(out, "K={}", self.big_k);
        let _ = writeln!(out, "k={}", self.k);
        let _ = writeln!(
            out,
            "rho={}",
            match self.rho {
                RhoMode::Radius => "radius",
                RhoMode::Volume => "volume",
            }
        );
        let _ = writeln!(out, "seed={}", self.seed);
        let _ = writeln!(
            out,
            "mode={}",
            match self.mode {
                MatchMode::Nearest => "nearest",
                MatchMode::Drift => "drift",
            }
        );
        let _ = writeln!(out, "parts={}", self.parts);
        let _ = writeln!(out, "subspaces={}", self.subspaces);
        let _ = writeln!(out, "seg_seed={}", self.seg_seed);
        let _ = writeln!(out, "eigen_weighting={}", self.eigen_weighting);
        let _ = writeln!(out, "gsc_k={}", self.gsc_k);
        let _ = writeln!(out, "alpha={}", self.alpha);
        let _ = writeln!(out, "beta={}", self.beta);
        let _ = writeln!(out, "gamma={}", self.gamma);
        out
    }

    /// Parse the flat `key=value` form; unknown keys and malformed values
    /// are validation errors, and the result is range-checked.
    pub fn parse(text: &str) -> Result<PipelineConfig> {
        let mut cfg = PipelineConfig::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: idx + 1,
                msg: format!("expected key=value, found {line:?}"),
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |msg: String| invalid(key, msg);
            match key {
                "resolution" => {
                    cfg.resolution =
                        value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                "tau" => cfg.tau = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?,
                "K" => cfg.big_k = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?,
                "k" => cfg.k = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?,
                "rho" => {
                    cfg.rho = match value {
                        "radius" => RhoMode::Radius,
                        "volume" => RhoMode::Volume,
                        _ => return Err(bad(format!("{value:?} is not radius|volume"))),
                    }
                }
                "seed" => cfg.seed = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?,
                "mode" => {
                    cfg.mode = match value {
                        "nearest" => MatchMode::Nearest,
                        "drift" => MatchMode::Drift,
                        _ => return Err(bad(format!("{value:?} is not nearest|drift"))),
                    }
                }
                "parts" => {
                    cfg.parts = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                "subspaces" => {
                    cfg.subspaces = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                "seg_seed" => {
                    cfg.seg_seed = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                "eigen_weighting" => {
                    cfg.eigen_weighting =
                        value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                "gsc_k" => {
                    cfg.gsc_k = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                "alpha" => {
                    cfg.alpha = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                "beta" => cfg.beta = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?,
                "gamma" => {
                    cfg.gamma = value.parse().map_err(|e| bad(format!("{value:?}: {e}")))?
                }
                _ => return Err(invalid(key, "unknown configuration key")),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.serialize())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        PipelineConfig::parse(&std::fs::read_to_string(path)?)
    }
}
