use serde::{Deserialize, Serialize};

use crate::error::{Result, SegError};

/// Thresholds and sizes for the block cascade.
///
/// [`Default`] gives the reference configuration: 64-pixel blocks, 10 bases,
/// inlier tolerance 10, 200 RANSAC iterations, constant-block std-dev 3,
/// fewer than 10 colors with range above 50 for palette blocks, and early
/// exit once 95% of the block agrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegParams {
    pub block_size: usize,
    pub num_bases: usize,
    pub inlier_tol: f64,
    pub max_iters: usize,
    pub const_std_tol: f64,
    pub max_colors: usize,
    pub min_range: f64,
    pub consensus_frac: f64,
    pub seed: u64,
}

impl Default for SegParams {
    fn default() -> Self {
        Self {
            block_size: 64,
            num_bases: 10,
            inlier_tol: 10.0,
            max_iters: 200,
            const_std_tol: 3.0,
            max_colors: 10,
            min_range: 50.0,
            consensus_frac: 0.95,
            seed: 0,
        }
    }
}

impl SegParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(SegError::InvalidParams(msg));
        if self.block_size == 0 {
            return bad("block_size must be >= 1".into());
        }
        if self.num_bases == 0 || self.num_bases > self.block_size * self.block_size {
            return bad(format!(
                "num_bases must be in 1..={} (got {})",
                self.block_size * self.block_size,
                self.num_bases
            ));
        }
        if !(self.inlier_tol > 0.0) {
            return bad(format!("inlier_tol must be > 0 (got {})", self.inlier_tol));
        }
        if !(self.const_std_tol >= 0.0) {
            return bad(format!("const_std_tol must be >= 0 (got {})", self.const_std_tol));
        }
        if !(self.consensus_frac > 0.0 && self.consensus_frac <= 1.0) {
            return bad(format!(
                "consensus_frac must be in (0, 1] (got {})",
                self.consensus_frac
            ));
        }
        if self.max_iters == 0 {
            return bad("max_iters must be >= 1".into());
        }
        if self.max_colors < 2 {
            return bad(format!("max_colors must be >= 2 (got {})", self.max_colors));
        }
        if !(self.min_range >= 0.0) {
            return bad(format!("min_range must be >= 0 (got {})", self.min_range));
        }
        Ok(())
    }
}
