//! Deterministic fixtures for tests and examples.

use chrono::NaiveDate;
use ndarray::{Array2, Array3};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::types::{CloudMask, OpticalImage, OpticalRange, PatchSeries, SarImage, SarRange, TimeStep};

pub fn date(y: i32, m: u32, d: u32) -> NaiveDate {
    NaiveDate::from_ymd_opt(y, m, d).unwrap()
}

/// A structurally valid series with in-range random values and clear masks.
pub fn well_formed_series(t: usize, height: usize, width: usize, seed: u64) -> PatchSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let steps = (0..t)
        .map(|i| {
            let optical = Array3::from_shape_fn((13, height, width), |_| rng.random_range(0.0..10000.0f64).round());
            let sar = Array3::from_shape_fn((2, height, width), |_| rng.random_range(-25.0..0.0f64));
            let ts = date(2018, 1, 1) + chrono::Duration::days(12 * i as i64);
            TimeStep {
                sar: SarImage::new(sar, SarRange::RawDb, ts, "patch"),
                optical: OpticalImage::new(optical, OpticalRange::RawDn, ts, "patch"),
                mask: CloudMask::all_clear(height, width),
                t_index: i,
            }
        })
        .collect();
    PatchSeries::new(steps, "roi")
}

/// Random UNIT-range optical image for metric and loss tests.
pub fn unit_optical(height: usize, width: usize, seed: u64) -> OpticalImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Array3::from_shape_fn((13, height, width), |_| rng.random_range(0.0..1.0f64));
    OpticalImage::new(data, OpticalRange::Unit, date(2018, 6, 1), "patch")
}

/// Random binary mask with roughly the requested coverage.
pub fn random_mask(height: usize, width: usize, coverage: f64, seed: u64) -> CloudMask {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = Array2::from_shape_fn((height, width), |_| if rng.random_bool(coverage) { 1.0 } else { 0.0 });
    CloudMask::from_grid(data)
}
