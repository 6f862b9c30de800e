//! Closed-open temporal intervals shared by every stage of the pipeline.
//!
//! The same type holds feature-grid coordinates (before conversion) and
//! seconds (after conversion); the unit is a property of where the value
//! lives, not of the type.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    /// Builds an interval, rejecting `start >= end` and non-finite values.
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if start.is_finite() && end.is_finite() && start < end {
            Ok(Self { start, end })
        } else {
            Err(Error::DegenerateInterval { start, end })
        }
    }

    pub fn length(&self) -> f64 {
        self.end - self.start
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.start + self.end)
    }

    pub fn shift(&self, by: f64) -> Self {
        Self {
            start: self.start + by,
            end: self.end + by,
        }
    }

    pub fn intersection(&self, other: &Self) -> f64 {
        (self.end.min(other.end) - self.start.max(other.start)).max(0.0)
    }

    pub fn tiou(&self, other: &Self) -> f64 {
        temporal_iou(self, other)
    }
}

/// Temporal intersection over union. Returns 0 for disjoint or touching
/// intervals.
pub fn temporal_iou(a: &Interval, b: &Interval) -> f64 {
    let inter = a.intersection(b);
    if inter <= 0.0 {
        return 0.0;
    }
    let union = a.length() + b.length() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}
