//! Pixel- and segment-level OOD segmentation metrics.

pub mod grouping;
pub mod pixel;
pub mod segment;

pub use grouping::{depth_bin, grouped_report, GroupBy, GroupReport, DEPTH_BIN_EDGES};
pub use pixel::{pixel_metrics, CurvePoint, PixelEvalResult};
pub use segment::{
    adjusted_siou, default_kappa_grid, frame_segment_scores, segment_metrics, FrameSegmentScores, KappaRow,
    SegmentEvalResult,
};

use crate::error::{Error, Result};

fn check_aligned(a: usize, b: usize, what: &str) -> Result<()> {
    if a != b {
        return Err(Error::DimMismatch(format!("{a} {what} vs {b} ground-truth frames")));
    }
    Ok(())
}
