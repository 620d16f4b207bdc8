//! Dirt color configuration: `{"boxes":[{"name":"marker","rgb_min":[..],"rgb_max":[..],"hue_range":[lo,hi]}]}`.
//! Channels are in `[0, 1]`, hues in degrees; `lo > hi` wraps through 0°.

use std::path::Path;

use serde::{Deserialize, Serialize};
use tabletop_core::perception::{ColorBox, ColorConfig, DirtType};

use super::{read_text, write_text};
use crate::LfdError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct BoxFile {
    name: String,
    rgb_min: [f32; 3],
    rgb_max: [f32; 3],
    hue_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ColorFile {
    boxes: Vec<BoxFile>,
}

pub fn colors_to_json(cfg: &ColorConfig) -> String {
    let file = ColorFile {
        boxes: cfg
            .boxes
            .iter()
            .map(|b| BoxFile { name: b.name.clone(), rgb_min: b.rgb_min, rgb_max: b.rgb_max, hue_range: b.hue_range })
            .collect(),
    };
    serde_json::to_string_pretty(&file).expect("colors serialize")
}

pub fn colors_from_json(text: &str, path: &Path) -> Result<ColorConfig, LfdError> {
    let file: ColorFile = serde_json::from_str(text).map_err(|e| LfdError::parse(path, e.to_string()))?;
    let mut boxes = Vec::with_capacity(file.boxes.len());
    for b in file.boxes {
        if DirtType::from_name(&b.name).is_none() {
            return Err(LfdError::parse(path, format!("box {:?} names no dirt type", b.name)));
        }
        let in_range = b.rgb_min.iter().chain(&b.rgb_max).all(|v| (0.0..=1.0).contains(v));
        if !in_range || (0..3).any(|c| b.rgb_min[c] > b.rgb_max[c]) {
            return Err(LfdError::parse(path, format!("box {:?} has an invalid RGB range", b.name)));
        }
        boxes.push(ColorBox { name: b.name, rgb_min: b.rgb_min, rgb_max: b.rgb_max, hue_range: b.hue_range });
    }
    Ok(ColorConfig { boxes })
}

pub fn read_colors(path: &Path) -> Result<ColorConfig, LfdError> {
    colors_from_json(&read_text(path)?, path)
}

pub fn write_colors(path: &Path, cfg: &ColorConfig) -> Result<(), LfdError> {
    write_text(path, &colors_to_json(cfg))
}
