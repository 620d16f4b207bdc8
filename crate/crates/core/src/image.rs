//! RGB rasters with channel values in `[0, 1]`.
//!
//! Pixel `(col, row)` has its center at the continuous coordinate `(col, row)`;
//! the first coordinate of a [`Pixel`](crate::geometry::Pixel) is the column.

use alloc::vec;
use alloc::vec::Vec;
use thiserror::Error;

pub type Rgb = [f32; 3];

pub const BLACK: Rgb = [0.0, 0.0, 0.0];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("raster is {width}x{height}, expected a square image")]
    NotSquare { width: usize, height: usize },
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("pixel buffer has {got} entries, expected {expected}")]
    SizeMismatch { got: usize, expected: usize },
    #[error("channel value {0} outside [0, 1]")]
    ChannelOutOfRange(f32),
    #[error("image must have a positive size")]
    Empty,
}

impl ImageError {
    pub fn code(&self) -> &'static str {
        match self {
            ImageError::NotSquare { .. } => "NotSquare",
            ImageError::NonPositiveScale(_) => "NonPositiveScale",
            ImageError::SizeMismatch { .. } => "SizeMismatch",
            ImageError::ChannelOutOfRange(_) => "ChannelOutOfRange",
            ImageError::Empty => "EmptyImage",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<Rgb>,
}

impl RgbImage {
    pub fn filled(width: usize, height: usize, color: Rgb) -> Self {
        Self { width, height, data: vec![color; width * height] }
    }

    pub fn from_pixels(width: usize, height: usize, data: Vec<Rgb>) -> Result<Self, ImageError> {
        if data.len() != width * height {
            return Err(ImageError::SizeMismatch { got: data.len(), expected: width * height });
        }
        if let Some(bad) = data.iter().flatten().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(ImageError::ChannelOutOfRange(*bad));
        }
        Ok(Self { width, height, data })
    }

    /// Builds an image by evaluating `f(col, row)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Rgb) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                data.push(f(col, row));
            }
        }
        Self { width, height, data }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Rgb {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: Rgb) {
        self.data[row * self.width + col] = value;
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [Rgb] {
        &mut self.data
    }

    pub fn into_pixels(self) -> Vec<Rgb> {
        self.data
    }

    /// Every channel snapped to the nearest 8-bit level, as stored in PNG files.
    pub fn quantized(&self) -> Self {
        let data = self.data.iter().map(|px| px.map(|v| channel_from_u8(channel_to_u8(v)))).collect();
        Self { width: self.width, height: self.height, data }
    }
}

/// Nearest 8-bit level of a `[0, 1]` channel value.
#[inline]
pub fn channel_to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0 + 0.5) as u8
}

#[inline]
pub fn channel_from_u8(b: u8) -> f32 {
    b as f32 / 255.0
}

/// A square raster on the canonical bird-view plane together with its
/// pixels-per-meter scale.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualImage {
    raster: RgbImage,
    scale_h: f64,
}

impl VirtualImage {
    pub fn new(raster: RgbImage, scale_h: f64) -> Result<Self, ImageError> {
        if raster.width != raster.height {
            return Err(ImageError::NotSquare { width: raster.width, height: raster.height });
        }
        if raster.width == 0 {
            return Err(ImageError::Empty);
        }
        if !(scale_h > 0.0) || !scale_h.is_finite() {
            return Err(ImageError::NonPositiveScale(scale_h));
        }
        if let Some(bad) = raster.data.iter().flatten().find(|v| !(**v >= 0.0 && **v <= 1.0)) {
            return Err(ImageError::ChannelOutOfRange(*bad));
        }
        Ok(Self { raster, scale_h })
    }

    pub fn filled(size: usize, scale_h: f64, color: Rgb) -> Result<Self, ImageError> {
        Self::new(RgbImage::filled(size, size, color), scale_h)
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.raster.width
    }

    #[inline]
    pub fn scale_h(&self) -> f64 {
        self.scale_h
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> Rgb {
        self.raster.get(col, row)
    }

    pub fn raster(&self) -> &RgbImage {
        &self.raster
    }

    /// Mutable access to the raster. Callers must keep channels in `[0, 1]`.
    pub(crate) fn raster_mut(&mut self) -> &mut RgbImage {
        &mut self.raster
    }

    pub fn into_raster(self) -> RgbImage {
        self.raster
    }

    pub fn quantized(&self) -> Self {
        Self { raster: self.raster.quantized(), scale_h: self.scale_h }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn virtual_image_must_be_square() {
        let r = RgbImage::filled(4, 3, BLACK);
        assert!(matches!(VirtualImage::new(r, 240.0), Err(ImageError::NotSquare { .. })));
    }

    #[test]
    fn rejects_out_of_range_channels() {
        let err = RgbImage::from_pixels(1, 1, vec![[0.5, 1.2, 0.0]]).unwrap_err();
        assert_eq!(err, ImageError::ChannelOutOfRange(1.2));
    }

    #[test]
    fn eight_bit_levels_round_trip() {
        for b in 0..=255u8 {
            assert_eq!(channel_to_u8(channel_from_u8(b)), b);
        }
        assert_eq!(channel_to_u8(0.5), 128);
        assert_eq!(channel_to_u8(-0.1), 0);
    }

    #[test]
    fn rejects_non_positive_scale() {
        let r = RgbImage::filled(2, 2, BLACK);
        assert!(matches!(VirtualImage::new(r, 0.0), Err(ImageError::NonPositiveScale(_))));
    }
}
