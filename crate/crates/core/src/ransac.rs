//! RANSAC segmentation of a single block.
//!
//! Each iteration interpolates the smooth model exactly through `K` randomly
//! chosen pixels and counts the pixels it predicts within the inlier
//! tolerance. The largest consensus set seen is the block's background.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Result, SegError};
use crate::fitting::{predict, select_rows, solve_exact};
use crate::params::SegParams;

#[derive(Debug, Clone, PartialEq)]
pub struct RansacOutcome {
    /// `true` = inlier (background).
    pub inlier_mask: Vec<bool>,
    pub coeffs: Vec<f64>,
    pub inlier_count: usize,
    /// Number of models evaluated.
    pub iterations_used: usize,
    /// Number of samples drawn, including degenerate ones.
    pub draws: usize,
    pub early_exit: bool,
    /// Consensus size of each evaluated candidate, in order.
    pub candidate_counts: Vec<usize>,
}

/// Consensus size at which sampling stops early: `⌈frac · m⌉`.
pub fn early_exit_threshold(consensus_frac: f64, m: usize) -> usize {
    // Absorb rounding in the product so exact multiples are not bumped up.
    let t = (consensus_frac * m as f64 - 1e-9).ceil();
    (t as usize).clamp(1, m.max(1))
}

/// Runs RANSAC on `pixels` against the `M×K` `design`.
///
/// A draw whose `K×K` system is singular is redrawn without consuming one of
/// the `max_iters` model evaluations; at most `10 · max_iters` draws are made
/// in total. Ties in consensus size keep the earlier model.
pub fn segment_block_ransac<R: Rng + ?Sized>(
    pixels: &[f64],
    design: &DMatrix<f64>,
    params: &SegParams,
    rng: &mut R,
) -> Result<RansacOutcome> {
    let (m, k) = design.shape();
    if pixels.len() != m {
        return Err(SegError::mismatch(format!("{m} pixels"), pixels.len()));
    }
    if m < k || k == 0 {
        return Err(SegError::TooFewPixels {
            pixels: m,
            required: k,
        });
    }

    let max_draws = params.max_iters.saturating_mul(10);
    let exit_at = early_exit_threshold(params.consensus_frac, m);

    let mut best: Option<(usize, Vec<f64>)> = None;
    let mut iterations = 0;
    let mut draws = 0;
    let mut early_exit = false;
    let mut candidate_counts = Vec::new();

    while iterations < params.max_iters && draws < max_draws {
        draws += 1;
        let sample = rand::seq::index::sample(rng, m, k).into_vec();
        let rows = select_rows(design, &sample);
        let values: Vec<f64> = sample.iter().map(|&i| pixels[i]).collect();
        let coeffs = match solve_exact(&values, &rows) {
            Ok(c) => c,
            Err(SegError::SingularSample { .. }) => continue,
            Err(e) => return Err(e),
        };
        iterations += 1;

        let count = consensus_size(pixels, design, &coeffs, params.inlier_tol);
        candidate_counts.push(count);
        if best.as_ref().is_none_or(|(c, _)| count > *c) {
            best = Some((count, coeffs));
        }
        if best.as_ref().is_some_and(|(c, _)| *c >= exit_at) {
            early_exit = true;
            break;
        }
    }

    let (inlier_count, coeffs) = best.ok_or(SegError::DegenerateSampling { draws })?;
    let inlier_mask = inlier_flags(pixels, design, &coeffs, params.inlier_tol);
    debug_assert_eq!(inlier_mask.iter().filter(|&&b| b).count(), inlier_count);
    Ok(RansacOutcome {
        inlier_mask,
        coeffs,
        inlier_count,
        iterations_used: iterations,
        draws,
        early_exit,
        candidate_counts,
    })
}

/// Pixels predicted with absolute error strictly below `tol`.
pub fn inlier_flags(pixels: &[f64], design: &DMatrix<f64>, coeffs: &[f64], tol: f64) -> Vec<bool> {
    predict(coeffs, design)
        .iter()
        .zip(pixels)
        .map(|(p, f)| (f - p).abs() < tol)
        .collect()
}

fn consensus_size(pixels: &[f64], design: &DMatrix<f64>, coeffs: &[f64], tol: f64) -> usize {
    predict(coeffs, design)
        .iter()
        .zip(pixels)
        .filter(|(p, f)| (*f - *p).abs() < tol)
        .count()
}
