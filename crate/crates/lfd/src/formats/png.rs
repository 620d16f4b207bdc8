//! 8-bit RGB PNG images.

use std::path::Path;

use image::{ImageBuffer, Rgb as PngRgb, RgbImage as PngImage};
use tabletop_core::image::{channel_from_u8, channel_to_u8, RgbImage};

use crate::LfdError;

pub fn read_png(path: &Path) -> Result<RgbImage, LfdError> {
    if !path.exists() {
        return Err(LfdError::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path).map_err(|e| LfdError::parse(path, e.to_string()))?.into_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    let data = img.pixels().map(|p| p.0.map(channel_from_u8)).collect();
    RgbImage::from_pixels(w, h, data).map_err(|e| LfdError::parse(path, e.to_string()))
}

pub fn write_png(path: &Path, img: &RgbImage) -> Result<(), LfdError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| LfdError::io(parent, e))?;
    }
    let (w, h) = (img.width() as u32, img.height() as u32);
    let buf: PngImage = ImageBuffer::from_fn(w, h, |x, y| PngRgb(img.get(x as usize, y as usize).map(channel_to_u8)));
    buf.save_with_format(path, image::ImageFormat::Png).map_err(|e| match e {
        image::ImageError::IoError(io) => LfdError::io(path, io),
        other => LfdError::parse(path, other.to_string()),
    })
}
