//! Image and mask files (PGM/PPM and PNG) and JSON reports.

use std::fs;
use std::path::Path;

use log::warn;
use serde::Serialize;

use crate::cascade::SegmentationResult;
use crate::error::{Result, SegError};
use crate::metrics::{AverageMode, MetricsReport};
use crate::model::{to_grayscale, BlockRef, GrayImage, Label, LabelMask};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ImageFormat {
    Pgm,
    Png,
}

impl ImageFormat {
    /// Chooses by extension; anything other than `.png` is written as PGM.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => ImageFormat::Png,
            _ => ImageFormat::Pgm,
        }
    }
}

pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| SegError::io(path, e))?;
    decode_image(&bytes)
}

/// Decodes PNM (P2, P3, P5, P6) or PNG bytes to 8-bit grayscale.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    if bytes.starts_with(PNG_SIGNATURE) {
        decode_png(bytes)
    } else if bytes.len() >= 2 && bytes[0] == b'P' && matches!(bytes[1], b'2' | b'3' | b'5' | b'6') {
        decode_pnm(bytes)
    } else {
        Err(SegError::UnsupportedFormat(
            "expected PGM/PPM or PNG signature".into(),
        ))
    }
}

fn decode_png(bytes: &[u8]) -> Result<GrayImage> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map_err(|e| SegError::CorruptFile(e.to_string()))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w == 0 || h == 0 {
        return Err(SegError::InvalidImage("zero-dimension PNG".into()));
    }
    if img.color().has_color() {
        let rgb = img.to_rgb8();
        let raw = rgb.as_raw();
        let plane = |c: usize| raw.iter().skip(c).step_by(3).copied().collect::<Vec<u8>>();
        to_grayscale(w, h, &plane(0), &plane(1), &plane(2))
    } else {
        GrayImage::from_u8(w, h, img.to_luma8().as_raw())
    }
}

struct PnmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmCursor<'a> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                c if c.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(SegError::CorruptFile("expected number in PNM data".into()));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| SegError::CorruptFile("PNM number out of range".into()))
    }
}

fn decode_pnm(bytes: &[u8]) -> Result<GrayImage> {
    let magic = bytes[1];
    let mut cur = PnmCursor { bytes, pos: 2 };
    let width = cur.number()?;
    let height = cur.number()?;
    let maxval = cur.number()?;
    if width == 0 || height == 0 {
        return Err(SegError::InvalidImage(format!("zero dimension {width}x{height}")));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(SegError::CorruptFile(format!("invalid maxval {maxval}")));
    }
    let channels = if matches!(magic, b'3' | b'6') { 3 } else { 1 };
    let count = width
        .checked_mul(height)
        .and_then(|v| v.checked_mul(channels))
        .ok_or_else(|| SegError::CorruptFile("dimensions overflow".into()))?;

    let samples: Vec<usize> = match magic {
        b'2' | b'3' => (0..count).map(|_| cur.number()).collect::<Result<_>>()?,
        _ => {
            // Exactly one whitespace byte separates the header from raster data.
            let start = cur.pos + 1;
            let wide = maxval > 255;
            let need = count * if wide { 2 } else { 1 };
            let raster = bytes
                .get(start..start + need)
                .ok_or_else(|| SegError::CorruptFile(format!("truncated raster: need {need} bytes")))?;
            if wide {
                raster
                    .chunks_exact(2)
                    .map(|c| usize::from(u16::from_be_bytes([c[0], c[1]])))
                    .collect()
            } else {
                raster.iter().map(|&b| usize::from(b)).collect()
            }
        }
    };
    if samples.iter().any(|&s| s > maxval) {
        return Err(SegError::CorruptFile("sample exceeds maxval".into()));
    }
    let to8 = |s: usize| -> u8 {
        if maxval == 255 {
            s as u8
        } else {
            ((s as f64) * 255.0 / maxval as f64).round() as u8
        }
    };
    if channels == 1 {
        let px: Vec<u8> = samples.into_iter().map(to8).collect();
        GrayImage::from_u8(width, height, &px)
    } else {
        let plane = |c: usize| samples.iter().skip(c).step_by(3).map(|&s| to8(s)).collect::<Vec<u8>>();
        to_grayscale(width, height, &plane(0), &plane(1), &plane(2))
    }
}

/// Binary PGM (P5, maxval 255).
pub fn encode_pgm(width: usize, height: usize, data: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn encode_png(width: usize, height: usize, data: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let encoder = image::codecs::png::PngEncoder::new(&mut out);
    image::ImageEncoder::write_image(
        encoder,
        data,
        width as u32,
        height as u32,
        image::ExtendedColorType::L8,
    )
    .map_err(|e| SegError::CorruptFile(e.to_string()))?;
    Ok(out)
}

fn write_gray8(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<()> {
    let bytes = match ImageFormat::from_path(path) {
        ImageFormat::Pgm => encode_pgm(width, height, data),
        ImageFormat::Png => encode_png(width, height, data)?,
    };
    fs::write(path, bytes).map_err(|e| SegError::io(path, e))
}

/// Writes the image quantized to 8 bits; format from the extension.
pub fn save_image(image: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    write_gray8(path.as_ref(), image.width(), image.height(), &image.to_u8())
}

/// Background = 0, foreground = 255.
pub fn mask_to_bytes(mask: &LabelMask) -> Vec<u8> {
    mask.labels()
        .iter()
        .map(|l| if l.is_foreground() { 255 } else { 0 })
        .collect()
}

pub fn save_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    write_gray8(path.as_ref(), mask.width(), mask.height(), &mask_to_bytes(mask))
}

/// Pixel values are thresholded at 128 (≥ 128 = foreground). Values other
/// than 0 and 255 are reported once with a warning.
pub fn mask_from_image(image: &GrayImage) -> LabelMask {
    let mut non_binary = 0usize;
    let labels = image
        .pixels()
        .iter()
        .map(|&v| {
            if v != 0.0 && v != 255.0 {
                non_binary += 1;
            }
            if v >= 128.0 {
                Label::Foreground
            } else {
                Label::Background
            }
        })
        .collect();
    if non_binary > 0 {
        warn!("mask has {non_binary} non-binary pixels; thresholded at 128");
    }
    LabelMask::new(image.width(), image.height(), labels).expect("dimensions come from a valid image")
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    load_image(path).map(|img| mask_from_image(&img))
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockRecord<'a> {
    #[serde(flatten)]
    pub block: &'a BlockRef,
    #[serde(flatten)]
    pub decision: &'a crate::model::BlockDecision,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecisionReport<'a> {
    pub width: usize,
    pub height: usize,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub params: &'a crate::params::SegParams,
    /// Blocks per stage in cascade order.
    pub stage_counts: [usize; 4],
    pub blocks: Vec<BlockRecord<'a>>,
}

impl<'a> DecisionReport<'a> {
    pub fn new(result: &'a SegmentationResult) -> Self {
        Self {
            width: result.mask.width(),
            height: result.mask.height(),
            grid_rows: result.grid_rows,
            grid_cols: result.grid_cols,
            params: &result.params_used,
            stage_counts: result.stage_counts(),
            blocks: result
                .blocks
                .iter()
                .zip(&result.decisions)
                .map(|(block, decision)| BlockRecord { block, decision })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ImageScore {
    pub name: String,
    #[serde(flatten)]
    pub report: MetricsReport,
}

/// `{per_image: [...], aggregate: {...}, mode: "macro"|"micro"}`.
#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub per_image: Vec<ImageScore>,
    pub aggregate: MetricsReport,
    pub mode: AverageMode,
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| SegError::io(path, e))
}
