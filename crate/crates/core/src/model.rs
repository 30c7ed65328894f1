//! Value types shared across the pipeline: images, masks, block addressing
//! and per-block decisions.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SegError};

/// Single-channel image with real-valued intensities in nominal range `[0, 255]`.
///
/// Pixels are stored row-major. Values are kept as `f64` so residuals computed
/// against the smooth model are exact; decoded files are 8-bit quantized.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(SegError::InvalidImage(format!(
                "zero dimension {width}x{height}"
            )));
        }
        if pixels.len() != width * height {
            return Err(SegError::mismatch(width * height, pixels.len()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(width, height, vec![value; width * height])
    }

    pub fn from_u8(width: usize, height: usize, pixels: &[u8]) -> Result<Self> {
        Self::new(width, height, pixels.iter().map(|&p| f64::from(p)).collect())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.pixels[y * self.width + x] = value;
    }

    /// Copies the pixels of `block` out in row-major order.
    pub fn block_pixels(&self, block: &BlockRef) -> Vec<f64> {
        let mut out = Vec::with_capacity(block.w * block.h);
        for y in block.y0..block.y0 + block.h {
            let row = y * self.width;
            out.extend_from_slice(&self.pixels[row + block.x0..row + block.x0 + block.w]);
        }
        out
    }

    /// Writes `values` (row-major, `block.w * block.h` long) into the block region.
    pub fn write_block(&mut self, block: &BlockRef, values: &[f64]) {
        debug_assert_eq!(values.len(), block.w * block.h);
        for (dy, chunk) in values.chunks_exact(block.w).enumerate() {
            let row = (block.y0 + dy) * self.width + block.x0;
            self.pixels[row..row + block.w].copy_from_slice(chunk);
        }
    }

    /// Rounds and clamps every pixel to an 8-bit value.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&p| quantize(p)).collect()
    }
}

/// Nearest 8-bit intensity, saturating at the ends of the range.
pub fn quantize(value: f64) -> u8 {
    if value.is_nan() {
        return 0;
    }
    value.round().clamp(0.0, 255.0) as u8
}

/// Converts interleaved-free RGB channel planes to BT.601 luma, rounded to the
/// nearest integer.
pub fn to_grayscale(width: usize, height: usize, r: &[u8], g: &[u8], b: &[u8]) -> Result<GrayImage> {
    if r.len() != g.len() || r.len() != b.len() {
        return Err(SegError::mismatch(
            format!("equal channel lengths (r = {})", r.len()),
            format!("g = {}, b = {}", g.len(), b.len()),
        ));
    }
    let pixels = r
        .iter()
        .zip(g)
        .zip(b)
        .map(|((&r, &g), &b)| luma(r, g, b))
        .collect();
    GrayImage::new(width, height, pixels)
}

pub(crate) fn luma(r: u8, g: u8, b: u8) -> f64 {
    (0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b)).round()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Background,
    Foreground,
}

impl Label {
    pub fn is_foreground(self) -> bool {
        self == Label::Foreground
    }
}

/// Per-pixel background/foreground labels, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<Label>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(SegError::mismatch(width * height, labels.len()));
        }
        Ok(Self {
            width,
            height,
            labels,
        })
    }

    pub fn background(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            labels: vec![Label::Background; width * height],
        }
    }

    pub fn from_foreground_flags(width: usize, height: usize, flags: &[bool]) -> Result<Self> {
        Self::new(
            width,
            height,
            flags
                .iter()
                .map(|&f| if f { Label::Foreground } else { Label::Background })
                .collect(),
        )
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn get(&self, x: usize, y: usize) -> Label {
        self.labels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, label: Label) {
        self.labels[y * self.width + x] = label;
    }

    pub fn foreground_count(&self) -> usize {
        self.labels.iter().filter(|l| l.is_foreground()).count()
    }

    pub fn block_labels(&self, block: &BlockRef) -> Vec<Label> {
        let mut out = Vec::with_capacity(block.w * block.h);
        for y in block.y0..block.y0 + block.h {
            let row = y * self.width;
            out.extend_from_slice(&self.labels[row + block.x0..row + block.x0 + block.w]);
        }
        out
    }

    pub fn write_block(&mut self, block: &BlockRef, labels: &[Label]) {
        debug_assert_eq!(labels.len(), block.w * block.h);
        for (dy, chunk) in labels.chunks_exact(block.w).enumerate() {
            let row = (block.y0 + dy) * self.width + block.x0;
            self.labels[row..row + block.w].copy_from_slice(chunk);
        }
    }
}

/// One tile of the non-overlapping block grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockRef {
    pub block_row: usize,
    pub block_col: usize,
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl BlockRef {
    pub fn area(&self) -> usize {
        self.w * self.h
    }
}

/// Tiles the image into `block_size` squares, row-major by block.
///
/// Right and bottom edge blocks are truncated to the image boundary.
pub fn block_grid(width: usize, height: usize, block_size: usize) -> Vec<BlockRef> {
    assert!(block_size >= 1, "block size must be positive");
    let mut blocks = Vec::new();
    for (block_row, y0) in (0..height).step_by(block_size).enumerate() {
        for (block_col, x0) in (0..width).step_by(block_size).enumerate() {
            blocks.push(BlockRef {
                block_row,
                block_col,
                x0,
                y0,
                w: block_size.min(width - x0),
                h: block_size.min(height - y0),
            });
        }
    }
    blocks
}

/// Number of (rows, cols) in the block grid.
pub fn grid_shape(width: usize, height: usize, block_size: usize) -> (usize, usize) {
    (height.div_ceil(block_size), width.div_ceil(block_size))
}

/// Which cascade stage classified a block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Stage {
    ConstantBlock,
    SmoothLeastSquares,
    PaletteOverConstant,
    Ransac,
}

impl Stage {
    /// 1-based position in the cascade.
    pub fn ordinal(self) -> u8 {
        match self {
            Stage::ConstantBlock => 1,
            Stage::SmoothLeastSquares => 2,
            Stage::PaletteOverConstant => 3,
            Stage::Ransac => 4,
        }
    }
}

/// Outcome of the cascade for one block.
///
/// Constructed only through the per-stage constructors so that `coeffs` is
/// present exactly for the model-fitting stages and `background_color`
/// exactly for the palette stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockDecision {
    stage: Stage,
    #[serde(skip_serializing_if = "Option::is_none")]
    coeffs: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    background_color: Option<u8>,
}

impl BlockDecision {
    pub fn constant() -> Self {
        Self {
            stage: Stage::ConstantBlock,
            coeffs: None,
            background_color: None,
        }
    }

    pub fn smooth(coeffs: Vec<f64>) -> Self {
        Self {
            stage: Stage::SmoothLeastSquares,
            coeffs: Some(coeffs),
            background_color: None,
        }
    }

    pub fn palette(background_color: u8) -> Self {
        Self {
            stage: Stage::PaletteOverConstant,
            coeffs: None,
            background_color: Some(background_color),
        }
    }

    pub fn ransac(coeffs: Vec<f64>) -> Self {
        Self {
            stage: Stage::Ransac,
            coeffs: Some(coeffs),
            background_color: None,
        }
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn coeffs(&self) -> Option<&[f64]> {
        self.coeffs.as_deref()
    }

    pub fn background_color(&self) -> Option<u8> {
        self.background_color
    }
}
