//! Feature-grid time conversion and sliding windows.
//!
//! A feature index `i` sits at frame `i * stride + offset`; a window that
//! starts at frame `W0` shifts every boundary it produces by `W0` frames.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interval::Interval;

pub const DEFAULT_STRIDE_FRAMES: u32 = 8;
pub const DEFAULT_OFFSET_FRAMES: u32 = 4;
pub const DEFAULT_FPS: f64 = 30.0;
pub const DEFAULT_WINDOW_LENGTH: usize = 4608;
pub const DEFAULT_WINDOW_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureGrid {
    /// Frames per feature step.
    pub stride_frames: u32,
    /// Frame offset of a feature's temporal center within its snippet.
    pub offset_frames: u32,
    pub fps: f64,
    /// First frame of the current sliding window.
    pub window_start_frame: u64,
}

impl Default for FeatureGrid {
    fn default() -> Self {
        Self {
            stride_frames: DEFAULT_STRIDE_FRAMES,
            offset_frames: DEFAULT_OFFSET_FRAMES,
            fps: DEFAULT_FPS,
            window_start_frame: 0,
        }
    }
}

impl FeatureGrid {
    pub fn new(stride_frames: u32, offset_frames: u32, fps: f64) -> Result<Self> {
        let grid = Self {
            stride_frames,
            offset_frames,
            fps,
            window_start_frame: 0,
        };
        grid.validate()?;
        Ok(grid)
    }

    pub fn validate(&self) -> Result<()> {
        if self.stride_frames == 0 {
            return Err(Error::InvalidConfig("stride_frames must be >= 1".into()));
        }
        if !(self.fps.is_finite() && self.fps > 0.0) {
            return Err(Error::InvalidConfig(format!("fps must be > 0, got {}", self.fps)));
        }
        Ok(())
    }

    /// Same grid, positioned at a window whose first feature is
    /// `start_feature`.
    pub fn at_window(&self, start_feature: usize) -> Self {
        Self {
            window_start_frame: start_feature as u64 * u64::from(self.stride_frames),
            ..*self
        }
    }

    /// Temporal center, in seconds, of feature `index`.
    pub fn feature_index_to_seconds(&self, index: usize) -> f64 {
        (index as f64 * f64::from(self.stride_frames) + f64::from(self.offset_frames)) / self.fps
    }

    /// Maps one feature coordinate to seconds, clamping negative coordinates
    /// to the window origin.
    pub fn coordinate_to_seconds(&self, u: f64) -> f64 {
        let u = u.max(0.0);
        (u * f64::from(self.stride_frames)
            + self.window_start_frame as f64
            + f64::from(self.offset_frames))
            / self.fps
    }

    /// Inverse of [`coordinate_to_seconds`](Self::coordinate_to_seconds) for
    /// coordinates inside the window (no clamping).
    pub fn seconds_to_coordinate(&self, seconds: f64) -> f64 {
        (seconds * self.fps - self.window_start_frame as f64 - f64::from(self.offset_frames))
            / f64::from(self.stride_frames)
    }

    /// Converts a feature-coordinate boundary `(start, end)` to seconds.
    pub fn boundary_to_seconds(&self, start: f64, end: f64) -> Result<Interval> {
        if !(start < end) {
            return Err(Error::DegenerateInterval { start, end });
        }
        Interval::new(self.coordinate_to_seconds(start), self.coordinate_to_seconds(end))
    }
}

pub fn feature_index_to_seconds(index: usize, grid: &FeatureGrid) -> f64 {
    grid.feature_index_to_seconds(index)
}

pub fn boundary_to_seconds(boundary: (f64, f64), grid: &FeatureGrid) -> Result<Interval> {
    grid.boundary_to_seconds(boundary.0, boundary.1)
}

/// A contiguous run of feature steps processed as one detector input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Window {
    pub start_feature: usize,
    pub length_features: usize,
}

impl Window {
    pub fn end_feature(&self) -> usize {
        self.start_feature + self.length_features
    }

    pub fn contains(&self, index: usize) -> bool {
        index >= self.start_feature && index < self.end_feature()
    }
}

/// Splits `total_features` steps into fixed-length overlapping windows.
///
/// Windows advance by `floor(max_len * (1 - overlap))`. The last window is
/// moved left so that it ends exactly at `total_features` instead of being
/// truncated. Sequences shorter than `max_len` get a single window.
pub fn generate_windows(total_features: usize, max_len: usize, overlap: f64) -> Result<Vec<Window>> {
    if !(0.0..1.0).contains(&overlap) {
        return Err(Error::InvalidOverlap(overlap));
    }
    if total_features == 0 {
        return Err(Error::EmptySequence);
    }
    if max_len == 0 {
        return Err(Error::InvalidConfig("window length must be >= 1".into()));
    }
    if total_features <= max_len {
        return Ok(vec![Window {
            start_feature: 0,
            length_features: total_features,
        }]);
    }
    let stride = ((max_len as f64) * (1.0 - overlap)).floor().max(1.0) as usize;
    let last_start = total_features - max_len;
    let mut windows = Vec::new();
    let mut start = 0;
    while start < last_start {
        windows.push(Window {
            start_feature: start,
            length_features: max_len,
        });
        start += stride;
    }
    windows.push(Window {
        start_feature: last_start,
        length_features: max_len,
    });
    Ok(windows)
}
