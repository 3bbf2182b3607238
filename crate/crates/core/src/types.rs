//! Raster and time-series data model shared by every other module.
//!
//! All grids are `ndarray` arrays in channel-first layout: optical rasters
//! are `(13, H, W)`, SAR rasters `(2, H, W)` and cloud masks `(H, W)`.
//! Values are `f64` regardless of the on-disk encoding; the declared
//! [`OpticalRange`]/[`SarRange`] says which interval the values live in.
//!
//! Constructors do not validate. Invariants are checked by
//! [`PatchSeries::validate`], which reports violations as data rather than
//! failing, so malformed inputs can be diagnosed instead of rejected blindly.

use chrono::NaiveDate;
use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use std::fmt;

/// Number of multi-spectral bands in an optical raster.
pub const OPTICAL_BANDS: usize = 13;
/// Number of SAR polarization channels (VV, VH).
pub const SAR_CHANNELS: usize = 2;
/// Band indices of the red, green and blue channels within the 13-band stack.
pub const RGB_BANDS: [usize; 3] = [3, 2, 1];
/// Maximum allowed gap, in days, between paired SAR and optical acquisitions.
pub const MAX_PAIRING_DAYS: i64 = 14;

/// Value interval an optical raster is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OpticalRange {
    /// Raw digital numbers clipped to `[0, 10000]`.
    RawDn,
    /// ResNet input pipeline range `[0, 5]`.
    Resnet,
    /// Evaluation range `[0, 1]`.
    Unit,
}

impl OpticalRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            OpticalRange::RawDn => (0.0, 10000.0),
            OpticalRange::Resnet => (0.0, 5.0),
            OpticalRange::Unit => (0.0, 1.0),
        }
    }
}

/// Value interval a SAR raster is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SarRange {
    /// Backscatter in decibels, clipped to `[-32.5, 0]`.
    RawDb,
    /// ResNet input pipeline range `[0, 2]`.
    Resnet,
    /// Evaluation range `[0, 1]`.
    Unit,
}

impl SarRange {
    pub fn bounds(self) -> (f64, f64) {
        match self {
            SarRange::RawDb => (-32.5, 0.0),
            SarRange::Resnet => (0.0, 2.0),
            SarRange::Unit => (0.0, 1.0),
        }
    }
}

/// 13-band multi-spectral raster with a declared value range and timestamp.
#[derive(Debug, Clone)]
pub struct OpticalImage {
    /// Band-major grid, shape `(13, H, W)`.
    pub data: Array3<f64>,
    pub range_mode: OpticalRange,
    pub timestamp: NaiveDate,
    pub patch_id: String,
}

impl OpticalImage {
    pub fn new(data: Array3<f64>, range_mode: OpticalRange, timestamp: NaiveDate, patch_id: impl Into<String>) -> Self {
        Self { data, range_mode, timestamp, patch_id: patch_id.into() }
    }

    pub fn height(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn bands(&self) -> usize {
        self.data.shape()[0]
    }
}

/// 2-channel (VV, VH) radar raster with a declared value range and timestamp.
#[derive(Debug, Clone)]
pub struct SarImage {
    /// Channel-major grid, shape `(2, H, W)`; channel 0 is VV, channel 1 VH.
    pub data: Array3<f64>,
    pub range_mode: SarRange,
    pub timestamp: NaiveDate,
    pub patch_id: String,
}

impl SarImage {
    pub fn new(data: Array3<f64>, range_mode: SarRange, timestamp: NaiveDate, patch_id: impl Into<String>) -> Self {
        Self { data, range_mode, timestamp, patch_id: patch_id.into() }
    }

    pub fn height(&self) -> usize {
        self.data.shape()[1]
    }

    pub fn width(&self) -> usize {
        self.data.shape()[2]
    }

    pub fn channels(&self) -> usize {
        self.data.shape()[0]
    }
}

/// Binary per-pixel occlusion map; 1 marks a cloud-covered pixel.
#[derive(Debug, Clone)]
pub struct CloudMask {
    /// Grid of 0.0/1.0 values, shape `(H, W)`.
    pub data: Array2<f64>,
    /// Fraction of ones, kept in sync by the constructors.
    pub coverage: f64,
}

impl CloudMask {
    /// Builds a mask and derives its coverage by direct counting.
    pub fn from_grid(data: Array2<f64>) -> Self {
        let coverage = Self::count_coverage(&data);
        Self { data, coverage }
    }

    pub fn all_clear(height: usize, width: usize) -> Self {
        Self::from_grid(Array2::zeros((height, width)))
    }

    pub fn all_cloudy(height: usize, width: usize) -> Self {
        Self::from_grid(Array2::ones((height, width)))
    }

    pub fn height(&self) -> usize {
        self.data.shape()[0]
    }

    pub fn width(&self) -> usize {
        self.data.shape()[1]
    }

    /// Recomputes the fraction of ones from the grid.
    pub fn recompute_coverage(&self) -> f64 {
        Self::count_coverage(&self.data)
    }

    fn count_coverage(data: &Array2<f64>) -> f64 {
        let total = data.len();
        if total == 0 {
            return 0.0;
        }
        let ones = data.iter().filter(|&&v| v == 1.0).count();
        ones as f64 / total as f64
    }
}

/// One co-registered (SAR, optical, mask) triple at a position in a series.
#[derive(Debug, Clone)]
pub struct TimeStep {
    pub sar: SarImage,
    pub optical: OpticalImage,
    pub mask: CloudMask,
    pub t_index: usize,
}

impl TimeStep {
    /// Coverage of this step's cloud mask.
    pub fn coverage(&self) -> f64 {
        self.mask.coverage
    }
}

/// Co-registered time series of paired observations over one patch footprint.
#[derive(Debug, Clone)]
pub struct PatchSeries {
    pub steps: Vec<TimeStep>,
    pub roi_id: String,
}

/// A single invariant violation found by [`PatchSeries::validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    /// Step index the violation occurred at, if step-local.
    pub step: Option<usize>,
    /// Short name of the violated invariant.
    pub invariant: &'static str,
    pub detail: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.step {
            Some(i) => write!(f, "step {}: [{}] {}", i, self.invariant, self.detail),
            None => write!(f, "series: [{}] {}", self.invariant, self.detail),
        }
    }
}

impl PatchSeries {
    pub fn new(steps: Vec<TimeStep>, roi_id: impl Into<String>) -> Self {
        Self { steps, roi_id: roi_id.into() }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Checks every type invariant and returns the list of violations.
    ///
    /// The empty list means the series is well formed. The check is read-only
    /// and idempotent; violations are ordinary data, not errors.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        if self.steps.is_empty() {
            out.push(Violation {
                step: None,
                invariant: "series-nonempty",
                detail: "series must contain at least one step".into(),
            });
            return out;
        }

        for (i, step) in self.steps.iter().enumerate() {
            validate_step(i, step, &mut out);
        }

        // Footprint and ordering across steps.
        let first = &self.steps[0];
        let (h0, w0) = (first.optical.height(), first.optical.width());
        let id0 = &first.optical.patch_id;
        for (i, step) in self.steps.iter().enumerate().skip(1) {
            if step.optical.height() != h0 || step.optical.width() != w0 {
                out.push(Violation {
                    step: Some(i),
                    invariant: "shared-footprint",
                    detail: format!(
                        "optical grid {}x{} differs from step 0 ({}x{})",
                        step.optical.height(),
                        step.optical.width(),
                        h0,
                        w0
                    ),
                });
            }
            if step.optical.patch_id != *id0 {
                out.push(Violation {
                    step: Some(i),
                    invariant: "shared-footprint",
                    detail: format!("patch_id {:?} differs from step 0 ({:?})", step.optical.patch_id, id0),
                });
            }
            if step.optical.timestamp <= self.steps[i - 1].optical.timestamp {
                out.push(Violation {
                    step: Some(i),
                    invariant: "strict-temporal-order",
                    detail: format!(
                        "optical timestamp {} does not follow {}",
                        step.optical.timestamp,
                        self.steps[i - 1].optical.timestamp
                    ),
                });
            }
        }
        out
    }
}

fn validate_step(i: usize, step: &TimeStep, out: &mut Vec<Violation>) {
    let mut push = |invariant: &'static str, detail: String| {
        out.push(Violation { step: Some(i), invariant, detail });
    };

    if step.t_index != i {
        push("t-index", format!("t_index {} does not match position {}", step.t_index, i));
    }

    // Optical invariants.
    if step.optical.bands() != OPTICAL_BANDS {
        push("optical-bands", format!("expected {} bands, found {}", OPTICAL_BANDS, step.optical.bands()));
    }
    if step.optical.height() == 0 || step.optical.width() == 0 {
        push("positive-dims", format!("optical grid is {}x{}", step.optical.height(), step.optical.width()));
    }
    let (lo, hi) = step.optical.range_mode.bounds();
    if let Some(v) = step.optical.data.iter().find(|v| !v.is_finite() || **v < lo || **v > hi) {
        push(
            "optical-range",
            format!("value {} outside declared {:?} bounds [{}, {}]", v, step.optical.range_mode, lo, hi),
        );
    }

    // SAR invariants.
    if step.sar.channels() != SAR_CHANNELS {
        push("sar-channels", format!("expected {} channels, found {}", SAR_CHANNELS, step.sar.channels()));
    }
    let (slo, shi) = step.sar.range_mode.bounds();
    if let Some(v) = step.sar.data.iter().find(|v| !v.is_finite() || **v < slo || **v > shi) {
        push(
            "sar-range",
            format!("value {} outside declared {:?} bounds [{}, {}]", v, step.sar.range_mode, slo, shi),
        );
    }

    // Mask invariants.
    if let Some(v) = step.mask.data.iter().find(|v| **v != 0.0 && **v != 1.0) {
        push("mask-binary", format!("mask value {} is not 0 or 1", v));
    }
    if step.mask.coverage != step.mask.recompute_coverage() {
        push(
            "mask-coverage",
            format!("stored coverage {} != recomputed {}", step.mask.coverage, step.mask.recompute_coverage()),
        );
    }

    // Shared shape and identity within the step.
    if step.sar.height() != step.optical.height()
        || step.sar.width() != step.optical.width()
        || step.mask.height() != step.optical.height()
        || step.mask.width() != step.optical.width()
    {
        push(
            "step-shape",
            format!(
                "sar {}x{}, optical {}x{}, mask {}x{} must agree",
                step.sar.height(),
                step.sar.width(),
                step.optical.height(),
                step.optical.width(),
                step.mask.height(),
                step.mask.width()
            ),
        );
    }
    if step.sar.patch_id != step.optical.patch_id {
        push(
            "step-patch-id",
            format!("sar patch_id {:?} != optical patch_id {:?}", step.sar.patch_id, step.optical.patch_id),
        );
    }

    // Pairing bound, inclusive.
    let gap = (step.sar.timestamp - step.optical.timestamp).num_days().abs();
    if gap > MAX_PAIRING_DAYS {
        push(
            "pairing-14-days",
            format!("SAR and optical acquisitions are {} days apart (limit {})", gap, MAX_PAIRING_DAYS),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{date, well_formed_series};

    #[test]
    fn well_formed_series_has_no_violations() {
        let series = well_formed_series(3, 8, 8, 42);
        assert!(series.validate().is_empty(), "{:?}", series.validate());
    }

    #[test]
    fn pairing_gap_over_14_days_is_reported() {
        let mut series = well_formed_series(3, 8, 8, 42);
        series.steps[1].sar.timestamp = series.steps[1].optical.timestamp + chrono::Duration::days(20);
        let violations = series.validate();
        assert_eq!(violations.len(), 1);
        assert_eq!(violations[0].step, Some(1));
        assert_eq!(violations[0].invariant, "pairing-14-days");
    }

    #[test]
    fn pairing_gap_of_exactly_14_days_is_allowed() {
        let mut series = well_formed_series(2, 8, 8, 1);
        series.steps[0].sar.timestamp = series.steps[0].optical.timestamp + chrono::Duration::days(14);
        assert!(series.validate().is_empty());
    }

    #[test]
    fn non_binary_mask_value_is_reported() {
        let mut series = well_formed_series(2, 8, 8, 7);
        series.steps[0].mask.data[[3, 3]] = 0.5;
        let violations = series.validate();
        assert!(violations.iter().any(|v| v.invariant == "mask-binary" && v.step == Some(0)));
    }

    #[test]
    fn stale_coverage_is_reported() {
        let mut series = well_formed_series(1, 8, 8, 7);
        series.steps[0].mask.data[[0, 0]] = 1.0;
        series.steps[0].mask.data[[0, 1]] = 1.0;
        // coverage field not updated
        let violations = series.validate();
        assert!(violations.iter().any(|v| v.invariant == "mask-coverage"));
    }

    #[test]
    fn out_of_range_optical_value_is_reported() {
        let mut series = well_formed_series(1, 8, 8, 7);
        series.steps[0].optical.data[[0, 0, 0]] = 10001.0;
        let violations = series.validate();
        assert!(violations.iter().any(|v| v.invariant == "optical-range"));
    }

    #[test]
    fn unordered_timestamps_are_reported() {
        let mut series = well_formed_series(3, 8, 8, 9);
        series.steps[2].optical.timestamp = date(2018, 1, 1);
        series.steps[2].sar.timestamp = date(2018, 1, 1);
        let violations = series.validate();
        assert!(violations.iter().any(|v| v.invariant == "strict-temporal-order"));
    }

    #[test]
    fn validate_is_idempotent_and_read_only() {
        let mut series = well_formed_series(3, 8, 8, 11);
        series.steps[0].mask.data[[2, 2]] = 0.25;
        let before = series.steps[0].mask.data.clone();
        let first = series.validate();
        let second = series.validate();
        assert_eq!(first, second);
        assert_eq!(series.steps[0].mask.data, before);
    }

    #[test]
    fn coverage_matches_direct_count() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let grid = Array2::from_shape_fn((16, 16), |_| if rng.random_bool(0.3) { 1.0 } else { 0.0 });
            let mask = CloudMask::from_grid(grid);
            let ones = mask.data.iter().filter(|&&v| v == 1.0).count();
            assert_eq!(mask.coverage, ones as f64 / 256.0);
        }
    }
}
