//! Per-block segmentation cascade and whole-image orchestration.
//!
//! Each block goes through four tests in order and stops at the first that
//! applies:
//!
//! 1. population std-dev below `const_std_tol`: all background;
//! 2. least squares over all pixels predicts every pixel within
//!    `inlier_tol`: all background;
//! 3. fewer than `max_colors` distinct 8-bit intensities and a range above
//!    `min_range`: the modal intensity is background, everything else
//!    foreground;
//! 4. RANSAC.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;

use crate::basis::BasisSet;
use crate::error::{Result, SegError};
use crate::fitting::{expand_coeffs, fit_least_squares, independent_columns, select_columns};
use crate::model::{block_grid, grid_shape, quantize, BlockDecision, BlockRef, GrayImage, Label, LabelMask, Stage};
use crate::params::SegParams;
use crate::ransac::segment_block_ransac;
use crate::rng::block_rng;

/// Population standard deviation.
pub fn stddev(pixels: &[f64]) -> f64 {
    if pixels.is_empty() {
        return 0.0;
    }
    let n = pixels.len() as f64;
    let mean = pixels.iter().sum::<f64>() / n;
    (pixels.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / n).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PaletteStats {
    pub distinct_count: usize,
    pub range: u8,
    /// Most frequent intensity; ties go to the smallest value.
    pub modal_value: u8,
    pub modal_fraction: f64,
}

/// Histogram statistics of the block after 8-bit quantization.
pub fn palette_stats(pixels: &[f64]) -> PaletteStats {
    let mut hist = [0usize; 256];
    for &p in pixels {
        hist[quantize(p) as usize] += 1;
    }
    let distinct_count = hist.iter().filter(|&&c| c > 0).count();
    let min = hist.iter().position(|&c| c > 0).unwrap_or(0);
    let max = hist.iter().rposition(|&c| c > 0).unwrap_or(0);
    let (modal, &count) = hist
        .iter()
        .enumerate()
        .rev()
        .max_by_key(|(_, &c)| c)
        .expect("histogram is nonempty");
    PaletteStats {
        distinct_count,
        range: (max - min) as u8,
        modal_value: modal as u8,
        modal_fraction: if pixels.is_empty() {
            0.0
        } else {
            count as f64 / pixels.len() as f64
        },
    }
}

/// Basis rows for a block, reduced to independent columns when the block is
/// a thin edge strip on which some frequencies alias.
#[derive(Debug, Clone)]
pub struct BlockDesign {
    pub matrix: DMatrix<f64>,
    /// Indices into the basis of the columns kept in `matrix`.
    pub columns: Vec<usize>,
    pub num_bases: usize,
}

impl BlockDesign {
    pub fn new(basis: &BasisSet, block: &BlockRef) -> Result<Self> {
        let restricted = basis.restrict(block)?;
        let k = basis.num_bases();
        let full = block.w == basis.block_size() && block.h == basis.block_size();
        let columns = if full {
            (0..k).collect()
        } else {
            independent_columns(&restricted)
        };
        let matrix = if columns.len() == k {
            restricted
        } else {
            select_columns(&restricted, &columns)
        };
        Ok(Self {
            matrix,
            columns,
            num_bases: k,
        })
    }

    pub fn is_reduced(&self) -> bool {
        self.columns.len() < self.num_bases
    }

    /// Coefficients of the reduced design expressed over all `K` bases.
    pub fn full_coeffs(&self, sub: &[f64]) -> Vec<f64> {
        expand_coeffs(sub, &self.columns, self.num_bases)
    }
}

/// Runs the cascade on one block's pixels (row-major over the block extent).
pub fn segment_block<R: Rng + ?Sized>(
    pixels: &[f64],
    block: &BlockRef,
    basis: &BasisSet,
    params: &SegParams,
    rng: &mut R,
) -> Result<(BlockDecision, Vec<Label>)> {
    let m = block.area();
    if pixels.len() != m || m == 0 {
        return Err(SegError::mismatch(format!("{m} block pixels"), pixels.len()));
    }
    let all_bg = || vec![Label::Background; m];

    if stddev(pixels) < params.const_std_tol {
        return Ok((BlockDecision::constant(), all_bg()));
    }

    let design = BlockDesign::new(basis, block)?;
    let fit = fit_least_squares(pixels, &design.matrix)?;
    if fit.residuals.iter().all(|&r| r < params.inlier_tol) {
        return Ok((BlockDecision::smooth(design.full_coeffs(&fit.coeffs)), all_bg()));
    }

    let stats = palette_stats(pixels);
    if stats.distinct_count < params.max_colors && f64::from(stats.range) > params.min_range {
        let labels = pixels
            .iter()
            .map(|&p| {
                if quantize(p) == stats.modal_value {
                    Label::Background
                } else {
                    Label::Foreground
                }
            })
            .collect();
        return Ok((BlockDecision::palette(stats.modal_value), labels));
    }

    let outcome = segment_block_ransac(pixels, &design.matrix, params, rng)?;
    let labels = outcome
        .inlier_mask
        .iter()
        .map(|&inlier| if inlier { Label::Background } else { Label::Foreground })
        .collect();
    Ok((BlockDecision::ransac(design.full_coeffs(&outcome.coeffs)), labels))
}

/// How block work is scheduled. Results do not depend on the choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Parallelism {
    Serial,
    /// Dedicated pool with this many threads.
    Threads(usize),
    /// Global rayon pool.
    #[default]
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentationResult {
    pub mask: LabelMask,
    /// Blocks in row-major grid order.
    pub blocks: Vec<BlockRef>,
    /// Parallel to `blocks`.
    pub decisions: Vec<BlockDecision>,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub params_used: SegParams,
}

impl SegmentationResult {
    pub fn decision_at(&self, block_row: usize, block_col: usize) -> &BlockDecision {
        &self.decisions[block_row * self.grid_cols + block_col]
    }

    /// Number of blocks handled by each stage, in cascade order.
    pub fn stage_counts(&self) -> [usize; 4] {
        let mut counts = [0; 4];
        for d in &self.decisions {
            counts[d.stage().ordinal() as usize - 1] += 1;
        }
        counts
    }

    pub fn blocks_at_stage(&self, stage: Stage) -> impl Iterator<Item = &BlockRef> {
        self.blocks
            .iter()
            .zip(&self.decisions)
            .filter(move |(_, d)| d.stage() == stage)
            .map(|(b, _)| b)
    }
}

pub fn segment_image(image: &GrayImage, params: &SegParams) -> Result<SegmentationResult> {
    segment_image_with(image, params, Parallelism::Auto)
}

/// Segments every block independently, each with its own RNG stream derived
/// from `(seed, block_row, block_col)`.
pub fn segment_image_with(
    image: &GrayImage,
    params: &SegParams,
    parallelism: Parallelism,
) -> Result<SegmentationResult> {
    params.validate()?;
    let basis = BasisSet::new(params.block_size, params.num_bases)?;
    let blocks = block_grid(image.width(), image.height(), params.block_size);

    let run = |block: &BlockRef| -> Result<(BlockDecision, Vec<Label>)> {
        let pixels = image.block_pixels(block);
        let mut rng = block_rng(params.seed, block.block_row, block.block_col);
        segment_block(&pixels, block, &basis, params, &mut rng)
    };

    let per_block: Vec<(BlockDecision, Vec<Label>)> = match parallelism {
        Parallelism::Serial => blocks.iter().map(run).collect::<Result<_>>()?,
        Parallelism::Auto => blocks.par_iter().map(run).collect::<Result<_>>()?,
        Parallelism::Threads(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| SegError::ThreadPool(e.to_string()))?;
            pool.install(|| blocks.par_iter().map(run).collect::<Result<_>>())?
        }
    };

    let mut mask = LabelMask::background(image.width(), image.height());
    let mut decisions = Vec::with_capacity(blocks.len());
    for (block, (decision, labels)) in blocks.iter().zip(per_block) {
        mask.write_block(block, &labels);
        decisions.push(decision);
    }
    let (grid_rows, grid_cols) = grid_shape(image.width(), image.height(), params.block_size);
    Ok(SegmentationResult {
        mask,
        blocks,
        decisions,
        grid_rows,
        grid_cols,
        params_used: *params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::predict;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn full_block() -> BlockRef {
        BlockRef { block_row: 0, block_col: 0, x0: 0, y0: 0, w: 64, h: 64 }
    }

    #[test]
    fn stddev_examples() {
        assert_eq!(stddev(&[77.0; 9]), 0.0);
        assert!((stddev(&[0.0, 0.0, 255.0, 255.0]) - 127.5).abs() < 1e-12);
        assert!((stddev(&[10.0, 12.0]) - 1.0).abs() < 1e-12);
        assert_eq!(stddev(&[5.0]), 0.0);
    }

    #[test]
    fn palette_examples() {
        let s = palette_stats(&[200.0; 16]);
        assert_eq!((s.distinct_count, s.range, s.modal_value), (1, 0, 200));
        assert_eq!(s.modal_fraction, 1.0);

        let mut v = vec![255.0; 90];
        v.extend([0.0; 10]);
        let s = palette_stats(&v);
        assert_eq!((s.distinct_count, s.range, s.modal_value), (2, 255, 255));
        assert!((s.modal_fraction - 0.9).abs() < 1e-12);

        let v: Vec<f64> = (0..60).map(|i| f64::from((i % 6) * 50)).collect();
        let s = palette_stats(&v);
        assert_eq!((s.distinct_count, s.range, s.modal_value), (6, 250, 0));
    }

    #[test]
    fn flat_block_is_constant() {
        let b = BasisSet::new(64, 10).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (d, labels) = segment_block(&[40.0; 4096], &full_block(), &b, &SegParams::default(), &mut rng).unwrap();
        assert_eq!(d.stage(), Stage::ConstantBlock);
        assert!(labels.iter().all(|&l| l == Label::Background));
    }

    #[test]
    fn smooth_block_uses_least_squares() {
        let b = BasisSet::new(64, 10).unwrap();
        let alpha = [8192.0, 400.0, -300.0, 120.0, 80.0, -60.0, 30.0, 20.0, -10.0, 5.0];
        let f = predict(&alpha, b.matrix());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (d, labels) = segment_block(&f, &full_block(), &b, &SegParams::default(), &mut rng).unwrap();
        assert_eq!(d.stage(), Stage::SmoothLeastSquares);
        assert!(labels.iter().all(|&l| l == Label::Background));
        for (a, e) in d.coeffs().unwrap().iter().zip(alpha) {
            assert!((a - e).abs() < 1e-8);
        }
    }

    #[test]
    fn two_tone_block_is_palette() {
        let b = BasisSet::new(64, 10).unwrap();
        let f: Vec<f64> = (0..4096).map(|i| if i % 5 == 0 { 220.0 } else { 30.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (d, labels) = segment_block(&f, &full_block(), &b, &SegParams::default(), &mut rng).unwrap();
        assert_eq!(d.stage(), Stage::PaletteOverConstant);
        assert_eq!(d.background_color(), Some(30));
        for (p, l) in f.iter().zip(&labels) {
            assert_eq!(*l == Label::Background, *p == 30.0);
        }
    }

    #[test]
    fn narrow_range_palette_falls_through_to_ransac() {
        // Two tones 40 apart: range is not above 50.
        let b = BasisSet::new(64, 10).unwrap();
        let f: Vec<f64> = (0..4096).map(|i| if i % 9 == 0 { 140.0 } else { 100.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (d, labels) = segment_block(&f, &full_block(), &b, &SegParams::default(), &mut rng).unwrap();
        assert_eq!(d.stage(), Stage::Ransac);
        for (p, l) in f.iter().zip(&labels) {
            assert_eq!(*l == Label::Foreground, *p == 140.0);
        }
    }

    #[test]
    fn thin_edge_strip_segments() {
        let b = BasisSet::new(64, 10).unwrap();
        let block = BlockRef { block_row: 0, block_col: 1, x0: 64, y0: 0, w: 2, h: 64 };
        let f: Vec<f64> = (0..128).map(|i| f64::from(i) + if i % 11 == 0 { 90.0 } else { 0.0 }).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (d, labels) = segment_block(&f, &block, &b, &SegParams::default(), &mut rng).unwrap();
        assert_eq!(labels.len(), 128);
        assert_eq!(d.coeffs().map(<[f64]>::len), Some(10));
    }

    #[test]
    fn single_pixel_block_is_constant() {
        let b = BasisSet::new(64, 10).unwrap();
        let block = BlockRef { block_row: 1, block_col: 1, x0: 64, y0: 64, w: 1, h: 1 };
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let (d, _) = segment_block(&[99.0], &block, &b, &SegParams::default(), &mut rng).unwrap();
        assert_eq!(d.stage(), Stage::ConstantBlock);
    }

    #[test]
    fn constant_image() {
        let img = GrayImage::filled(128, 128, 90.0).unwrap();
        let r = segment_image(&img, &SegParams::default()).unwrap();
        assert_eq!(r.mask.foreground_count(), 0);
        assert_eq!(r.stage_counts(), [4, 0, 0, 0]);
        assert_eq!((r.grid_rows, r.grid_cols), (2, 2));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let pixels: Vec<f64> = (0..200 * 150)
            .map(|i| {
                let (x, y) = ((i % 200) as f64, (i / 200) as f64);
                let base = 100.0 + 0.3 * x + 0.2 * y;
                if rng.random_bool(0.07) { base + 90.0 } else { base }
            })
            .collect();
        let img = GrayImage::new(200, 150, pixels).unwrap();
        let p = SegParams { seed: 5, ..SegParams::default() };
        let a = segment_image_with(&img, &p, Parallelism::Serial).unwrap();
        let b = segment_image_with(&img, &p, Parallelism::Threads(3)).unwrap();
        let c = segment_image_with(&img, &p, Parallelism::Auto).unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
    }

    #[test]
    fn invalid_params_rejected() {
        let img = GrayImage::filled(8, 8, 1.0).unwrap();
        let p = SegParams { consensus_frac: 0.0, ..SegParams::default() };
        assert!(segment_image(&img, &p).is_err());
    }
}
