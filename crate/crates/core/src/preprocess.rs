//! Value pipelines: clipping, rescaling, patch slicing and the evaluation
//! remap to the unit interval.
//!
//! Raw optical digital numbers are clipped to `[0, 10000]`; raw SAR
//! backscatter is clipped per channel (`[-25, 0]` for VV, `[-32.5, 0]` for
//! VH in the ResNet pipeline, `[-25, 0]` for both in the unit pipeline).
//! Every rescale is affine and order preserving on the in-range segment.

use ndarray::Array3;
use thiserror::Error;

use crate::types::{OpticalImage, OpticalRange, SarImage, SarRange, OPTICAL_BANDS, SAR_CHANNELS};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("image is already rescaled ({0}); clip_rescale expects raw input")]
    AlreadyRescaled(String),
    #[error("invalid value range spec: {0}")]
    InvalidSpec(String),
    #[error("scene of {h}x{w} is smaller than the patch size {size}")]
    SceneTooSmall { h: usize, w: usize, size: usize },
    #[error("spec has {spec} channel bounds but image has {image} channels")]
    ChannelMismatch { spec: usize, image: usize },
}

/// Per-channel clip bounds and the shared output interval of a rescale.
#[derive(Debug, Clone)]
pub struct ValueRangeSpec {
    pub clip_lo: Vec<f64>,
    pub clip_hi: Vec<f64>,
    pub out_lo: f64,
    pub out_hi: f64,
}

impl ValueRangeSpec {
    pub fn new(clip_lo: Vec<f64>, clip_hi: Vec<f64>, out_lo: f64, out_hi: f64) -> Result<Self, PreprocessError> {
        if clip_lo.len() != clip_hi.len() || clip_lo.is_empty() {
            return Err(PreprocessError::InvalidSpec("clip bound lists must be non-empty and equal length".into()));
        }
        for (lo, hi) in clip_lo.iter().zip(&clip_hi) {
            if !(lo < hi) {
                return Err(PreprocessError::InvalidSpec(format!("clip_lo {} must be < clip_hi {}", lo, hi)));
            }
        }
        if !(out_lo < out_hi) {
            return Err(PreprocessError::InvalidSpec(format!("out_lo {} must be < out_hi {}", out_lo, out_hi)));
        }
        Ok(Self { clip_lo, clip_hi, out_lo, out_hi })
    }

    fn uniform(channels: usize, lo: f64, hi: f64, out_lo: f64, out_hi: f64) -> Self {
        Self::new(vec![lo; channels], vec![hi; channels], out_lo, out_hi).unwrap()
    }

    /// Optical ResNet pipeline: `[0, 10000] -> [0, 5]` on all bands.
    pub fn optical_resnet() -> Self {
        Self::uniform(OPTICAL_BANDS, 0.0, 10000.0, 0.0, 5.0)
    }

    /// Optical unit pipeline: `[0, 10000] -> [0, 1]` on all bands.
    pub fn optical_unit() -> Self {
        Self::uniform(OPTICAL_BANDS, 0.0, 10000.0, 0.0, 1.0)
    }

    /// SAR ResNet pipeline: VV `[-25, 0]`, VH `[-32.5, 0]`, both to `[0, 2]`.
    pub fn sar_resnet() -> Self {
        Self::new(vec![-25.0, -32.5], vec![0.0, 0.0], 0.0, 2.0).unwrap()
    }

    /// SAR unit pipeline: `[-25, 0] -> [0, 1]` on both channels.
    pub fn sar_unit() -> Self {
        Self::uniform(SAR_CHANNELS, -25.0, 0.0, 0.0, 1.0)
    }

    fn apply(&self, data: &Array3<f64>) -> Result<Array3<f64>, PreprocessError> {
        let channels = data.shape()[0];
        if channels != self.clip_lo.len() {
            return Err(PreprocessError::ChannelMismatch { spec: self.clip_lo.len(), image: channels });
        }
        let mut out = data.clone();
        for (c, mut plane) in out.outer_iter_mut().enumerate() {
            let (lo, hi) = (self.clip_lo[c], self.clip_hi[c]);
            let scale = (self.out_hi - self.out_lo) / (hi - lo);
            plane.mapv_inplace(|v| self.out_lo + (v.clamp(lo, hi) - lo) * scale);
        }
        Ok(out)
    }
}

/// Clips and affinely rescales a raw optical image into `target` range.
pub fn clip_rescale_optical(
    image: &OpticalImage,
    spec: &ValueRangeSpec,
    target: OpticalRange,
) -> Result<OpticalImage, PreprocessError> {
    if image.range_mode != OpticalRange::RawDn {
        return Err(PreprocessError::AlreadyRescaled(format!("{:?}", image.range_mode)));
    }
    let data = spec.apply(&image.data)?;
    Ok(OpticalImage::new(data, target, image.timestamp, image.patch_id.clone()))
}

/// Clips and affinely rescales a raw SAR image into `target` range.
pub fn clip_rescale_sar(image: &SarImage, spec: &ValueRangeSpec, target: SarRange) -> Result<SarImage, PreprocessError> {
    if image.range_mode != SarRange::RawDb {
        return Err(PreprocessError::AlreadyRescaled(format!("{:?}", image.range_mode)));
    }
    let data = spec.apply(&image.data)?;
    Ok(SarImage::new(data, target, image.timestamp, image.patch_id.clone()))
}

/// Raw optical image to the ResNet pipeline range with the standard bounds.
pub fn optical_to_resnet(image: &OpticalImage) -> Result<OpticalImage, PreprocessError> {
    clip_rescale_optical(image, &ValueRangeSpec::optical_resnet(), OpticalRange::Resnet)
}

/// Raw SAR image to the ResNet pipeline range with the standard bounds.
pub fn sar_to_resnet(image: &SarImage) -> Result<SarImage, PreprocessError> {
    clip_rescale_sar(image, &ValueRangeSpec::sar_resnet(), SarRange::Resnet)
}

/// Remaps an optical image from any declared range into `[0, 1]`.
///
/// Identity on unit-range input; linear on ResNet input; the standard unit
/// clip-rescale on raw input.
pub fn to_eval_range_optical(image: &OpticalImage) -> OpticalImage {
    match image.range_mode {
        OpticalRange::Unit => image.clone(),
        OpticalRange::Resnet => {
            let data = image.data.mapv(|v| (v / 5.0).clamp(0.0, 1.0));
            OpticalImage::new(data, OpticalRange::Unit, image.timestamp, image.patch_id.clone())
        }
        OpticalRange::RawDn => {
            clip_rescale_optical(image, &ValueRangeSpec::optical_unit(), OpticalRange::Unit)
                .expect("raw input accepted by construction")
        }
    }
}

/// Remaps a SAR image from any declared range into `[0, 1]`.
pub fn to_eval_range_sar(image: &SarImage) -> SarImage {
    match image.range_mode {
        SarRange::Unit => image.clone(),
        SarRange::Resnet => {
            let data = image.data.mapv(|v| (v / 2.0).clamp(0.0, 1.0));
            SarImage::new(data, SarRange::Unit, image.timestamp, image.patch_id.clone())
        }
        SarRange::RawDb => {
            clip_rescale_sar(image, &ValueRangeSpec::sar_unit(), SarRange::Unit).expect("raw input accepted by construction")
        }
    }
}

/// Inverse of the ResNet -> unit remap; used when feeding unit-range data to
/// a model that expects ResNet-range input.
pub fn optical_unit_to_resnet(image: &OpticalImage) -> Result<OpticalImage, PreprocessError> {
    if image.range_mode != OpticalRange::Unit {
        return Err(PreprocessError::AlreadyRescaled(format!("{:?}", image.range_mode)));
    }
    let data = image.data.mapv(|v| v * 5.0);
    Ok(OpticalImage::new(data, OpticalRange::Resnet, image.timestamp, image.patch_id.clone()))
}

fn tile_grid(h: usize, w: usize, size: usize) -> Result<Vec<(usize, usize)>, PreprocessError> {
    if h < size || w < size {
        return Err(PreprocessError::SceneTooSmall { h, w, size });
    }
    let rows = h / size;
    let cols = w / size;
    let mut tiles = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            tiles.push((r, c));
        }
    }
    Ok(tiles)
}

/// Slices a full scene into non-overlapping `size`x`size` patches in
/// row-major order; trailing remainder pixels are dropped.
pub fn slice_patches_optical(scene: &OpticalImage, size: usize) -> Result<Vec<OpticalImage>, PreprocessError> {
    let tiles = tile_grid(scene.height(), scene.width(), size)?;
    Ok(tiles
        .into_iter()
        .map(|(r, c)| {
            let data = scene
                .data
                .slice(ndarray::s![.., r * size..(r + 1) * size, c * size..(c + 1) * size])
                .to_owned();
            OpticalImage::new(data, scene.range_mode, scene.timestamp, patch_tile_id(&scene.patch_id, r, c))
        })
        .collect())
}

/// SAR counterpart of [`slice_patches_optical`].
pub fn slice_patches_sar(scene: &SarImage, size: usize) -> Result<Vec<SarImage>, PreprocessError> {
    let tiles = tile_grid(scene.height(), scene.width(), size)?;
    Ok(tiles
        .into_iter()
        .map(|(r, c)| {
            let data = scene
                .data
                .slice(ndarray::s![.., r * size..(r + 1) * size, c * size..(c + 1) * size])
                .to_owned();
            SarImage::new(data, scene.range_mode, scene.timestamp, patch_tile_id(&scene.patch_id, r, c))
        })
        .collect())
}

fn patch_tile_id(base: &str, row: usize, col: usize) -> String {
    format!("{}_r{:03}_c{:03}", base, row, col)
}
