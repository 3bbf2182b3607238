//! Cloud detection and coverage statistics.
//!
//! Detection is pluggable behind [`CloudDetector`]; the built-in detector is
//! a brightness-whiteness threshold heuristic over the visible bands. A
//! pixel counts as cloud when its mean visible reflectance is high while the
//! spread between the visible bands is low (clouds are bright and white;
//! land is darker and colored). Thresholds are configurable; external
//! detectors can be registered behind the same interface.

use ndarray::Array2;
use thiserror::Error;

use crate::types::{CloudMask, OpticalImage, RGB_BANDS};

#[derive(Debug, Error)]
pub enum CloudmaskError {
    #[error("detector {name} failed: {message}")]
    DetectorFailed { name: String, message: String },
    #[error("coverage histogram needs a non-empty mask list")]
    EmptyMaskList,
    #[error("coverage histogram needs at least one bin")]
    NoBins,
    #[error("unknown detector {0:?}")]
    UnknownDetector(String),
}

/// Produces a binary cloud mask from an optical image.
///
/// Implementations must be deterministic for a fixed input and return a mask
/// of the input's height and width. They must be safe to call concurrently
/// on distinct images.
pub trait CloudDetector: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, optical: &OpticalImage) -> Result<CloudMask, CloudmaskError>;
}

/// Brightness-whiteness threshold heuristic over the visible bands.
#[derive(Debug, Clone)]
pub struct BrightWhiteDetector {
    /// Minimum mean visible reflectance (unit range) for a cloud pixel.
    pub brightness_threshold: f64,
    /// Maximum inter-band standard deviation for a cloud pixel.
    pub whiteness_threshold: f64,
}

impl Default for BrightWhiteDetector {
    fn default() -> Self {
        Self { brightness_threshold: 0.35, whiteness_threshold: 0.10 }
    }
}

impl CloudDetector for BrightWhiteDetector {
    fn name(&self) -> &str {
        "bright-white"
    }

    fn detect(&self, optical: &OpticalImage) -> Result<CloudMask, CloudmaskError> {
        // Thresholds are defined on unit reflectance; rescale whatever range
        // the image declares.
        let (lo, hi) = optical.range_mode.bounds();
        let scale = 1.0 / (hi - lo);
        let (h, w) = (optical.height(), optical.width());
        let mut grid = Array2::zeros((h, w));
        for y in 0..h {
            for x in 0..w {
                let mut mean = 0.0;
                for b in RGB_BANDS {
                    mean += (optical.data[[b, y, x]] - lo) * scale;
                }
                mean /= RGB_BANDS.len() as f64;
                let mut var = 0.0;
                for b in RGB_BANDS {
                    let v = (optical.data[[b, y, x]] - lo) * scale;
                    var += (v - mean) * (v - mean);
                }
                var /= RGB_BANDS.len() as f64;
                if mean > self.brightness_threshold && var.sqrt() < self.whiteness_threshold {
                    grid[[y, x]] = 1.0;
                }
            }
        }
        Ok(CloudMask::from_grid(grid))
    }
}

/// Runs a detector and attaches its name to any failure.
pub fn detect_clouds(optical: &OpticalImage, detector: &dyn CloudDetector) -> Result<CloudMask, CloudmaskError> {
    detector.detect(optical).map_err(|e| match e {
        CloudmaskError::DetectorFailed { message, .. } => {
            CloudmaskError::DetectorFailed { name: detector.name().to_string(), message }
        }
        other => CloudmaskError::DetectorFailed { name: detector.name().to_string(), message: other.to_string() },
    })
}

/// Names of the detectors [`make_detector`] can build.
pub fn detector_names() -> Vec<&'static str> {
    vec!["bright-white"]
}

/// Builds a registered detector by name.
///
/// `thresholds` overrides the heuristic's (brightness, whiteness) pair when
/// given. An s2cloudless-style adapter would register here with its
/// probability threshold exposed the same way.
pub fn make_detector(name: &str, thresholds: Option<(f64, f64)>) -> Result<Box<dyn CloudDetector>, CloudmaskError> {
    match name {
        "bright-white" | "default" => {
            let mut det = BrightWhiteDetector::default();
            if let Some((b, w)) = thresholds {
                det.brightness_threshold = b;
                det.whiteness_threshold = w;
            }
            Ok(Box::new(det))
        }
        other => Err(CloudmaskError::UnknownDetector(other.to_string())),
    }
}

/// Distribution summary of coverage fractions across a set of masks.
#[derive(Debug, Clone)]
pub struct CoverageHistogram {
    /// `bins + 1` edges uniformly spanning `[0, 1]`.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
    pub mean: f64,
    pub std: f64,
}

/// Histogram of mask coverages over uniform bins on `[0, 1]`.
///
/// The final bin is closed so a coverage of exactly 1 is counted.
pub fn coverage_histogram(masks: &[CloudMask], bins: usize) -> Result<CoverageHistogram, CloudmaskError> {
    if masks.is_empty() {
        return Err(CloudmaskError::EmptyMaskList);
    }
    if bins == 0 {
        return Err(CloudmaskError::NoBins);
    }
    let edges: Vec<f64> = (0..=bins).map(|i| i as f64 / bins as f64).collect();
    let mut counts = vec![0usize; bins];
    let mut mean = 0.0;
    for mask in masks {
        let c = mask.coverage;
        let idx = ((c * bins as f64) as usize).min(bins - 1);
        counts[idx] += 1;
        mean += c;
    }
    mean /= masks.len() as f64;
    let var = masks.iter().map(|m| (m.coverage - mean) * (m.coverage - mean)).sum::<f64>() / masks.len() as f64;
    Ok(CoverageHistogram { edges, counts, mean, std: var.sqrt() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::date;
    use crate::types::{OpticalRange, RGB_BANDS};
    use ndarray::Array3;

    fn image_with_reflectance(value: f64) -> OpticalImage {
        OpticalImage::new(
            Array3::from_elem((13, 6, 6), value * 10000.0),
            OpticalRange::RawDn,
            date(2018, 5, 5),
            "p",
        )
    }

    #[test]
    fn dark_image_yields_all_clear_mask() {
        let det = BrightWhiteDetector::default();
        let mask = detect_clouds(&image_with_reflectance(0.0), &det).unwrap();
        assert_eq!(mask.coverage, 0.0);
    }

    #[test]
    fn saturated_white_image_yields_full_coverage() {
        let det = BrightWhiteDetector::default();
        let mask = detect_clouds(&image_with_reflectance(1.0), &det).unwrap();
        assert_eq!(mask.coverage, 1.0);
    }

    #[test]
    fn bright_but_colored_pixels_are_not_cloud() {
        let mut img = image_with_reflectance(0.0);
        // Bright red: high mean across RGB is prevented by band spread.
        img.data[[RGB_BANDS[0], 2, 2]] = 9000.0;
        img.data[[RGB_BANDS[1], 2, 2]] = 2000.0;
        img.data[[RGB_BANDS[2], 2, 2]] = 1000.0;
        let det = BrightWhiteDetector::default();
        let mask = detect_clouds(&img, &det).unwrap();
        assert_eq!(mask.data[[2, 2]], 0.0);
    }

    #[test]
    fn detection_is_translation_consistent_on_constant_background() {
        let det = BrightWhiteDetector::default();
        let mut a = image_with_reflectance(0.1);
        let mut b = image_with_reflectance(0.1);
        for band in 0..13 {
            a.data[[band, 1, 1]] = 9000.0;
            b.data[[band, 4, 3]] = 9000.0;
        }
        let mask_a = det.detect(&a).unwrap();
        let mask_b = det.detect(&b).unwrap();
        assert_eq!(mask_a.data[[1, 1]], 1.0);
        assert_eq!(mask_b.data[[4, 3]], 1.0);
        assert_eq!(mask_a.coverage, mask_b.coverage);
    }

    #[test]
    fn histogram_counts_and_moments() {
        let masks = vec![CloudMask::all_clear(4, 4), CloudMask::all_cloudy(4, 4)];
        let hist = coverage_histogram(&masks, 2).unwrap();
        assert_eq!(hist.counts, vec![1, 1]);
        assert_eq!(hist.mean, 0.5);

        let single = vec![crate::testutil::random_mask(10, 10, 0.44, 3)];
        let hist = coverage_histogram(&single, 4).unwrap();
        assert_eq!(hist.mean, single[0].coverage);
        assert_eq!(hist.std, 0.0);

        assert!(matches!(coverage_histogram(&[], 4), Err(CloudmaskError::EmptyMaskList)));
    }

    #[test]
    fn histogram_is_permutation_invariant() {
        let masks: Vec<CloudMask> = (0..8).map(|i| crate::testutil::random_mask(8, 8, 0.3, i)).collect();
        let mut reversed: Vec<CloudMask> = masks.clone();
        reversed.reverse();
        let a = coverage_histogram(&masks, 5).unwrap();
        let b = coverage_histogram(&reversed, 5).unwrap();
        assert_eq!(a.counts, b.counts);
        assert_eq!(a.mean, b.mean);
    }
}
