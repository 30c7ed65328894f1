//! Synthetic blocks and images with exact ground truth.
//!
//! Smooth surfaces are drawn from the span of the basis and rescaled into
//! `[16, 240]`, so clamping never takes them out of the span.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::BasisSet;
use crate::error::{Result, SegError};
use crate::fitting::predict;
use crate::model::{block_grid, GrayImage, LabelMask};
use crate::rng::block_rng;

pub const SMOOTH_MIN: f64 = 16.0;
pub const SMOOTH_MAX: f64 = 240.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SynthKind {
    Constant { value: f64 },
    Smooth,
    /// Flat background with strokes of a second tone.
    PaletteText { background: u8, stroke: u8 },
    SmoothPlusOutliers,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub block_size: usize,
    pub kind: SynthKind,
    /// Surface coefficients; drawn from `seed` when absent.
    pub coeffs: Option<Vec<f64>>,
    /// Fraction of pixels that are outliers (or strokes), in `[0, 0.5)`.
    pub outlier_fraction: f64,
    pub outlier_offset: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(block_size: usize, kind: SynthKind, seed: u64) -> Self {
        Self {
            block_size,
            kind,
            coeffs: None,
            outlier_fraction: 0.0,
            outlier_offset: 0.0,
            seed,
        }
    }

    pub fn with_outliers(mut self, fraction: f64, offset: f64) -> Self {
        self.outlier_fraction = fraction;
        self.outlier_offset = offset;
        self
    }

    pub fn with_coeffs(mut self, coeffs: Vec<f64>) -> Self {
        self.coeffs = Some(coeffs);
        self
    }

    /// `⌊fraction · N²⌋`.
    pub fn outlier_count(&self) -> usize {
        (self.outlier_fraction * (self.block_size * self.block_size) as f64).floor() as usize
    }
}

/// Random coefficients whose surface spans a sub-range of `[16, 240]` at
/// least 60 levels wide.
pub fn random_smooth_coeffs<R: Rng + ?Sized>(basis: &BasisSet, rng: &mut R) -> Vec<f64> {
    let n = basis.block_size() as f64;
    let k = basis.num_bases();
    let mut alpha: Vec<f64> = (0..k)
        .map(|i| if i == 0 { 0.0 } else { rng.random_range(-1.0..1.0) / (1.0 + i as f64).sqrt() })
        .collect();
    let surface = predict(&alpha, basis.matrix());
    let lo = surface.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = surface.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if k == 1 || hi - lo < 1e-9 {
        let mut flat = vec![0.0; k];
        flat[0] = rng.random_range(SMOOTH_MIN..SMOOTH_MAX) * n;
        return flat;
    }
    let width = rng.random_range(60.0..(SMOOTH_MAX - SMOOTH_MIN));
    let low = rng.random_range(SMOOTH_MIN..=(SMOOTH_MAX - width));
    let scale = width / (hi - lo);
    for a in &mut alpha {
        *a *= scale;
    }
    // The DC column is the constant 1/N.
    alpha[0] += (low - lo * scale) * n;
    alpha
}

/// Adds `offset` away from the nearer end of the range, then saturates.
fn displace(value: f64, offset: f64) -> f64 {
    let shifted = if value + offset <= 255.0 { value + offset } else { value - offset };
    shifted.clamp(0.0, 255.0)
}

/// Generates one `N×N` block and its truth mask (foreground = injected
/// outliers or strokes).
pub fn generate(spec: &SynthSpec, basis: &BasisSet) -> Result<(GrayImage, LabelMask)> {
    let n = spec.block_size;
    if n != basis.block_size() {
        return Err(SegError::InvalidSynthSpec(format!(
            "block size {n} does not match basis block size {}",
            basis.block_size()
        )));
    }
    if !(0.0..0.5).contains(&spec.outlier_fraction) {
        return Err(SegError::InvalidSynthSpec(format!(
            "outlier fraction {} outside [0, 0.5)",
            spec.outlier_fraction
        )));
    }
    let area = n * n;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut surface = || -> Result<Vec<f64>> {
        let coeffs = match &spec.coeffs {
            Some(c) if c.len() != basis.num_bases() => {
                return Err(SegError::InvalidSynthSpec(format!(
                    "{} coefficients for {} bases",
                    c.len(),
                    basis.num_bases()
                )))
            }
            Some(c) => c.clone(),
            None => random_smooth_coeffs(basis, &mut rng),
        };
        Ok(predict(&coeffs, basis.matrix())
            .into_iter()
            .map(|v| v.clamp(0.0, 255.0))
            .collect())
    };

    let mut truth = vec![false; area];
    let pixels = match spec.kind {
        SynthKind::Constant { value } => vec![value; area],
        SynthKind::Smooth => surface()?,
        SynthKind::SmoothPlusOutliers => {
            let mut px = surface()?;
            let idx = rand::seq::index::sample(&mut rng, area, spec.outlier_count());
            for i in idx {
                px[i] = displace(px[i], spec.outlier_offset);
                truth[i] = true;
            }
            px
        }
        SynthKind::PaletteText { background, stroke } => {
            if background == stroke && spec.outlier_count() > 0 {
                return Err(SegError::InvalidSynthSpec("stroke tone equals background".into()));
            }
            draw_strokes(&mut truth, n, spec.outlier_count(), &mut rng);
            truth
                .iter()
                .map(|&fg| f64::from(if fg { stroke } else { background }))
                .collect()
        }
    };
    Ok((
        GrayImage::new(n, n, pixels)?,
        LabelMask::from_foreground_flags(n, n, &truth)?,
    ))
}

/// Marks exactly `count` pixels with random horizontal and vertical strokes.
fn draw_strokes<R: Rng + ?Sized>(mask: &mut [bool], n: usize, count: usize, rng: &mut R) {
    let mut marked = 0;
    while marked < count {
        let len = rng.random_range(3..=n.clamp(3, 16));
        let horizontal = rng.random_bool(0.5);
        let (x0, y0) = (rng.random_range(0..n), rng.random_range(0..n));
        for t in 0..len {
            let (x, y) = if horizontal { (x0 + t, y0) } else { (x0, y0 + t) };
            if x >= n || y >= n || marked == count {
                break;
            }
            let cell = &mut mask[y * n + x];
            if !*cell {
                *cell = true;
                marked += 1;
            }
        }
    }
}

/// How block kinds are assigned across a multi-block image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Tiling {
    /// Every block uses the SynthSpec kind with a per-block seed.
    #[default]
    Repeat,
    /// Blocks cycle constant, smooth, palette, smooth-plus-outliers, with
    /// seeded tones and surfaces.
    Mixed,
}

/// Tiles a `width×height` image with synthetic blocks. Edge blocks are
/// cropped from full `N×N` blocks.
pub fn generate_image(
    spec: &SynthSpec,
    basis: &BasisSet,
    width: usize,
    height: usize,
    tiling: Tiling,
) -> Result<(GrayImage, LabelMask)> {
    let n = spec.block_size;
    if n == 0 {
        return Err(SegError::InvalidSynthSpec("block size must be positive".into()));
    }
    let mut image = GrayImage::filled(width, height, 0.0)?;
    let mut truth = LabelMask::background(width, height);
    for block in block_grid(width, height, n) {
        let mut rng = block_rng(spec.seed, block.block_row, block.block_col);
        let block_spec = match tiling {
            Tiling::Repeat => SynthSpec {
                seed: rng.random(),
                ..spec.clone()
            },
            Tiling::Mixed => mixed_block_spec(spec, block.block_row + block.block_col, &mut rng),
        };
        let (px, labels) = generate(&block_spec, basis)?;
        for dy in 0..block.h {
            for dx in 0..block.w {
                image.set(block.x0 + dx, block.y0 + dy, px.get(dx, dy));
                truth.set(block.x0 + dx, block.y0 + dy, labels.get(dx, dy));
            }
        }
    }
    Ok((image, truth))
}

fn mixed_block_spec(base: &SynthSpec, index: usize, rng: &mut ChaCha8Rng) -> SynthSpec {
    let seed = rng.random();
    let fraction = if base.outlier_fraction > 0.0 { base.outlier_fraction } else { 0.08 };
    let offset = if base.outlier_offset > 0.0 { base.outlier_offset } else { 100.0 };
    let kind = match index % 4 {
        0 => SynthKind::Constant {
            value: f64::from(rng.random_range(16u8..=240)),
        },
        1 => SynthKind::Smooth,
        2 => {
            let background = rng.random_range(0u8..=100);
            SynthKind::PaletteText {
                background,
                stroke: background + rng.random_range(80u8..=155),
            }
        }
        _ => SynthKind::SmoothPlusOutliers,
    };
    SynthSpec {
        block_size: base.block_size,
        kind,
        coeffs: None,
        outlier_fraction: fraction,
        outlier_offset: offset,
        seed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fitting::fit_least_squares;

    fn basis() -> BasisSet {
        BasisSet::new(64, 10).unwrap()
    }

    #[test]
    fn constant_block() {
        let (img, truth) = generate(&SynthSpec::new(64, SynthKind::Constant { value: 128.0 }, 0), &basis()).unwrap();
        assert!(img.pixels().iter().all(|&v| v == 128.0));
        assert_eq!(truth.foreground_count(), 0);
    }

    #[test]
    fn outlier_count_is_floor() {
        let spec = SynthSpec::new(64, SynthKind::SmoothPlusOutliers, 3).with_outliers(0.05, 80.0);
        assert_eq!(spec.outlier_count(), 204);
        let (_, truth) = generate(&spec, &basis()).unwrap();
        assert_eq!(truth.foreground_count(), 204);
    }

    #[test]
    fn dc_only_coeffs_flat() {
        let mut a = vec![0.0; 10];
        a[0] = 8192.0;
        let (img, _) = generate(&SynthSpec::new(64, SynthKind::Smooth, 0).with_coeffs(a), &basis()).unwrap();
        assert!(img.pixels().iter().all(|&v| (v - 128.0).abs() < 1e-9));
    }

    #[test]
    fn random_surfaces_in_range_and_span() {
        let b = basis();
        for seed in 0..20 {
            let (img, truth) = generate(&SynthSpec::new(64, SynthKind::Smooth, seed), &b).unwrap();
            assert_eq!(truth.foreground_count(), 0);
            let lo = img.pixels().iter().copied().fold(f64::INFINITY, f64::min);
            let hi = img.pixels().iter().copied().fold(f64::NEG_INFINITY, f64::max);
            assert!(lo >= SMOOTH_MIN - 1e-9 && hi <= SMOOTH_MAX + 1e-9);
            assert!(hi - lo >= 60.0 - 1e-9);
            let fit = fit_least_squares(img.pixels(), b.matrix()).unwrap();
            assert!(fit.max_residual() < 1e-9);
        }
    }

    #[test]
    fn deterministic() {
        let spec = SynthSpec::new(64, SynthKind::SmoothPlusOutliers, 17).with_outliers(0.1, 70.0);
        assert_eq!(generate(&spec, &basis()).unwrap(), generate(&spec, &basis()).unwrap());
    }

    #[test]
    fn outliers_displaced_by_offset() {
        let spec = SynthSpec::new(64, SynthKind::SmoothPlusOutliers, 5).with_outliers(0.2, 90.0);
        let (img, truth) = generate(&spec, &basis()).unwrap();
        let (clean, _) = generate(&SynthSpec { kind: SynthKind::Smooth, ..spec.clone() }, &basis()).unwrap();
        for i in 0..4096 {
            let d = (img.pixels()[i] - clean.pixels()[i]).abs();
            if truth.labels()[i].is_foreground() {
                assert!((d - 90.0).abs() < 1e-9);
            } else {
                assert_eq!(d, 0.0);
            }
        }
    }

    #[test]
    fn palette_strokes() {
        let spec = SynthSpec::new(64, SynthKind::PaletteText { background: 30, stroke: 220 }, 2).with_outliers(0.1, 0.0);
        let (img, truth) = generate(&spec, &basis()).unwrap();
        assert_eq!(truth.foreground_count(), 409);
        for (p, l) in img.pixels().iter().zip(truth.labels()) {
            assert_eq!(*p == 220.0, l.is_foreground());
        }
    }

    #[test]
    fn rejects_bad_specs() {
        let b = basis();
        assert!(generate(&SynthSpec::new(64, SynthKind::Smooth, 0).with_outliers(0.5, 10.0), &b).is_err());
        assert!(generate(&SynthSpec::new(64, SynthKind::Smooth, 0).with_coeffs(vec![1.0; 3]), &b).is_err());
        assert!(generate(&SynthSpec::new(32, SynthKind::Smooth, 0), &b).is_err());
    }

    #[test]
    fn mixed_image_tiles() {
        let spec = SynthSpec::new(64, SynthKind::Smooth, 9);
        let (img, truth) = generate_image(&spec, &basis(), 150, 70, Tiling::Mixed).unwrap();
        assert_eq!((img.width(), img.height()), (150, 70));
        assert_eq!((truth.width(), truth.height()), (150, 70));
        let again = generate_image(&spec, &basis(), 150, 70, Tiling::Mixed).unwrap();
        assert_eq!((img, truth), again);
    }
}
