//! Hole-filled background layer.
//!
//! For each block, the smooth model is refit by least squares to the pixels
//! labeled background; foreground pixels are replaced by its prediction.

use crate::basis::BasisSet;
use crate::cascade::{BlockDesign, SegmentationResult};
use crate::error::{Result, SegError};
use crate::fitting::{fit_least_squares, independent_columns, predict, select_columns, select_rows};
use crate::model::{BlockRef, GrayImage, Label};

/// Replaces foreground pixels with the background model's prediction,
/// clamped to `[0, 255]`. Background pixels are copied unchanged.
///
/// Blocks with fewer background pixels than model columns use the mean of
/// their background pixels, or of the whole block when it has none.
pub fn fill_background(image: &GrayImage, result: &SegmentationResult, basis: &BasisSet) -> Result<GrayImage> {
    if result.mask.width() != image.width() || result.mask.height() != image.height() {
        return Err(SegError::mismatch(
            format!("{}x{}", image.width(), image.height()),
            format!("{}x{}", result.mask.width(), result.mask.height()),
        ));
    }
    let mut out = image.clone();
    for block in &result.blocks {
        let pixels = image.block_pixels(block);
        let labels = result.mask.block_labels(block);
        if labels.iter().all(|&l| l == Label::Background) {
            continue;
        }
        let filled = fill_block(&pixels, &labels, block, basis)?;
        out.write_block(block, &filled);
    }
    Ok(out)
}

/// Fills one block given its pixels and labels (both row-major over the block).
pub fn fill_block(pixels: &[f64], labels: &[Label], block: &BlockRef, basis: &BasisSet) -> Result<Vec<f64>> {
    let bg: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == Label::Background)
        .map(|(i, _)| i)
        .collect();
    if bg.len() == pixels.len() {
        return Ok(pixels.to_vec());
    }

    let design = BlockDesign::new(basis, block)?;
    let prediction = if bg.len() < design.matrix.ncols() {
        let source: Vec<f64> = if bg.is_empty() {
            pixels.to_vec()
        } else {
            bg.iter().map(|&i| pixels[i]).collect()
        };
        let mean = source.iter().sum::<f64>() / source.len() as f64;
        vec![mean; pixels.len()]
    } else {
        let rows = select_rows(&design.matrix, &bg);
        let values: Vec<f64> = bg.iter().map(|&i| pixels[i]).collect();
        match fit_least_squares(&values, &rows) {
            Ok(fit) => predict(&fit.coeffs, &design.matrix),
            Err(SegError::RankDeficient) => {
                // Background pixels too sparse for the full model: fit the
                // independent subset of columns they support.
                let cols = independent_columns(&rows);
                let fit = fit_least_squares(&values, &select_columns(&rows, &cols))?;
                predict(&fit.coeffs, &select_columns(&design.matrix, &cols))
            }
            Err(e) => return Err(e),
        }
    };

    Ok(pixels
        .iter()
        .zip(labels)
        .zip(prediction)
        .map(|((&p, &l), pred)| match l {
            Label::Background => p,
            Label::Foreground => pred.clamp(0.0, 255.0),
        })
        .collect())
}
