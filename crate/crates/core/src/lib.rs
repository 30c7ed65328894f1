//! Decomposition of screen-content images into a smooth background layer and
//! a foreground (text and graphics) mask.
//!
//! Images are split into non-overlapping blocks. Each block's background is
//! modeled as a combination of the first few zigzag-ordered 2-D DCT
//! functions; pixels the model cannot predict within a tolerance are
//! foreground. A cascade of cheap tests (flat, smooth, two-tone) handles easy
//! blocks before falling back to RANSAC.
//!
//! ```no_run
//! use scseg::{segment_image, BasisSet, GrayImage, SegParams};
//!
//! # fn main() -> scseg::Result<()> {
//! let image = scseg::io::load_image("screen.png")?;
//! let params = SegParams::default();
//! let result = segment_image(&image, &params)?;
//! let basis = BasisSet::new(params.block_size, params.num_bases)?;
//! let background = scseg::fill_background(&image, &result, &basis)?;
//! scseg::io::save_mask(&result.mask, "mask.png")?;
//! scseg::io::save_image(&background, "background.png")?;
//! # Ok(())
//! # }
//! ```

pub mod basis;
pub mod cascade;
pub mod cli;
pub mod error;
pub mod fitting;
pub mod io;
pub mod metrics;
pub mod model;
pub mod params;
pub mod ransac;
pub mod reconstruct;
pub mod rng;
pub mod synth;

pub use basis::{zigzag_order, BasisSet, Freq};
pub use cascade::{segment_block, segment_image, segment_image_with, Parallelism, SegmentationResult};
pub use error::{Result, SegError};
pub use fitting::{fit_least_squares, predict, solve_exact, FitResult};
pub use metrics::{aggregate, confusion, precision_recall_f1, AverageMode, MetricsReport};
pub use model::{block_grid, to_grayscale, BlockDecision, BlockRef, GrayImage, Label, LabelMask, Stage};
pub use params::SegParams;
pub use ransac::{segment_block_ransac, RansacOutcome};
pub use reconstruct::fill_background;
pub use synth::{generate, generate_image, SynthKind, SynthSpec, Tiling};
