//! Dirt segmentation, dirt-type classification and reference-frame prediction.
//!
//! Frame prediction sits behind [`FramePredictor`] so a learned model can replace
//! the geometric [`BaselinePredictor`] without touching the rest of the pipeline.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

use crate::geometry::{virtual_to_table, GeometryError, Pixel, TablePoint};
use crate::image::{Rgb, VirtualImage};
use crate::linalg::sym2_eigen;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PerceptionError {
    #[error("no dirt pixels in the image")]
    EmptyDirtMask,
    #[error("mean dirt hue {0:?} matches no configured dirt type")]
    AmbiguousColor(Option<f64>),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

impl PerceptionError {
    pub fn code(&self) -> &'static str {
        match self {
            PerceptionError::EmptyDirtMask => "EmptyDirtMask",
            PerceptionError::AmbiguousColor(_) => "AmbiguousColor",
            PerceptionError::Geometry(e) => e.code(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DirtType {
    Marker,
    Lentils,
}

impl DirtType {
    pub fn name(self) -> &'static str {
        match self {
            DirtType::Marker => "marker",
            DirtType::Lentils => "lentils",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "marker" => Some(DirtType::Marker),
            "lentils" => Some(DirtType::Lentils),
            _ => None,
        }
    }
}

/// An axis-aligned RGB box plus the hue interval (degrees) used to classify it.
/// A hue interval with `lo > hi` wraps through 0°.
#[derive(Debug, Clone, PartialEq)]
pub struct ColorBox {
    pub name: String,
    pub rgb_min: [f32; 3],
    pub rgb_max: [f32; 3],
    pub hue_range: [f64; 2],
}

impl ColorBox {
    pub fn contains(&self, rgb: Rgb) -> bool {
        (0..3).all(|c| rgb[c] >= self.rgb_min[c] && rgb[c] <= self.rgb_max[c])
    }

    pub fn hue_matches(&self, hue: f64) -> bool {
        let [lo, hi] = self.hue_range;
        if lo <= hi {
            hue >= lo && hue <= hi
        } else {
            hue >= lo || hue <= hi
        }
    }

    pub fn dirt_type(&self) -> Option<DirtType> {
        DirtType::from_name(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ColorConfig {
    pub boxes: Vec<ColorBox>,
}

impl Default for ColorConfig {
    /// Boxes matching the simulator's default red ink and brown lentils, each with
    /// more than 0.15 of margin around the rendered colors.
    fn default() -> Self {
        Self {
            boxes: vec![
                ColorBox {
                    name: String::from("marker"),
                    rgb_min: [0.55, 0.0, 0.0],
                    rgb_max: [1.0, 0.35, 0.4],
                    hue_range: [320.0, 15.0],
                },
                ColorBox {
                    name: String::from("lentils"),
                    rgb_min: [0.40, 0.22, 0.0],
                    rgb_max: [0.80, 0.58, 0.32],
                    hue_range: [15.0, 75.0],
                },
            ],
        }
    }
}

/// Boolean raster of dirty pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirtMask {
    size: usize,
    bits: Vec<bool>,
    count: usize,
}

impl DirtMask {
    pub fn empty(size: usize) -> Self {
        Self { size, bits: vec![false; size * size], count: 0 }
    }

    pub fn from_fn(size: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut mask = Self::empty(size);
        for row in 0..size {
            for col in 0..size {
                if f(col, row) {
                    mask.set(col, row, true);
                }
            }
        }
        mask
    }

    #[inline]
    pub fn size(&self) -> usize {
        self.size
    }

    #[inline]
    pub fn count(&self) -> usize {
        self.count
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.size + col]
    }

    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        let idx = row * self.size + col;
        if self.bits[idx] != value {
            self.bits[idx] = value;
            if value {
                self.count += 1;
            } else {
                self.count -= 1;
            }
        }
    }

    /// `(col, row)` of every set pixel in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let size = self.size;
        self.bits.iter().enumerate().filter(|(_, b)| **b).map(move |(i, _)| (i % size, i / size))
    }

    /// Inclusive bounding box `(col_min, row_min, col_max, row_max)`.
    pub fn bounding_box(&self) -> Option<(usize, usize, usize, usize)> {
        let mut it = self.pixels();
        let (c0, r0) = it.next()?;
        let mut bb = (c0, r0, c0, r0);
        for (c, r) in it {
            bb.0 = bb.0.min(c);
            bb.1 = bb.1.min(r);
            bb.2 = bb.2.max(c);
            bb.3 = bb.3.max(r);
        }
        Some(bb)
    }

    /// Integer shift; pixels leaving the raster are dropped.
    pub fn shifted(&self, dx: i64, dy: i64) -> Self {
        let mut out = Self::empty(self.size);
        let s = self.size as i64;
        for (c, r) in self.pixels() {
            let (nc, nr) = (c as i64 + dx, r as i64 + dy);
            if nc >= 0 && nc < s && nr >= 0 && nr < s {
                out.set(nc as usize, nr as usize, true);
            }
        }
        out
    }
}

/// Marks every pixel whose color falls inside any configured box.
pub fn segment_dirt(img: &VirtualImage, colors: &ColorConfig) -> DirtMask {
    let raster = img.raster();
    DirtMask::from_fn(img.size(), |c, r| {
        let rgb = raster.get(c, r);
        colors.boxes.iter().any(|b| b.contains(rgb))
    })
}

/// Hue in degrees `[0, 360)`, or `None` for achromatic colors.
pub fn hue_degrees(rgb: Rgb) -> Option<f64> {
    let (r, g, b) = (rgb[0] as f64, rgb[1] as f64, rgb[2] as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta <= 1e-9 {
        return None;
    }
    let h = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    Some(if h < 0.0 { h + 360.0 } else { h })
}

/// Circular mean of the hues of the masked, chromatic pixels.
pub fn mean_hue(img: &VirtualImage, mask: &DirtMask) -> Option<f64> {
    let (mut sx, mut sy, mut n) = (0.0, 0.0, 0usize);
    for (c, r) in mask.pixels() {
        if let Some(h) = hue_degrees(img.get(c, r)) {
            let rad = h.to_radians();
            sx += rad.cos();
            sy += rad.sin();
            n += 1;
        }
    }
    if n == 0 || sx.hypot(sy) <= 1e-12 * n as f64 {
        return None;
    }
    let deg = sy.atan2(sx).to_degrees();
    Some(if deg < 0.0 { deg + 360.0 } else { deg })
}

pub fn classify_dirt(img: &VirtualImage, mask: &DirtMask, colors: &ColorConfig) -> Result<DirtType, PerceptionError> {
    if mask.is_empty() {
        return Err(PerceptionError::EmptyDirtMask);
    }
    let hue = mean_hue(img, mask).ok_or(PerceptionError::AmbiguousColor(None))?;
    colors
        .boxes
        .iter()
        .filter(|b| b.hue_matches(hue))
        .find_map(|b| b.dirt_type())
        .ok_or(PerceptionError::AmbiguousColor(Some(hue)))
}

/// Table-frame origins of the initial, intermediate and final reference frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FramePrediction {
    pub b1: TablePoint,
    pub b2: TablePoint,
    pub b3: TablePoint,
}

impl FramePrediction {
    pub fn origins(&self) -> [[f64; 2]; 3] {
        [self.b1.to_array(), self.b2.to_array(), self.b3.to_array()]
    }

    pub fn is_finite(&self) -> bool {
        self.origins().iter().flatten().all(|v| v.is_finite())
    }
}

/// Anything that maps a virtual image to three frame origins.
pub trait FramePredictor {
    fn predict(&self, img: &VirtualImage) -> Result<FramePrediction, PerceptionError>;
}

pub fn predict_frames<P: FramePredictor + ?Sized>(img: &VirtualImage, predictor: &P) -> Result<FramePrediction, PerceptionError> {
    predictor.predict(img)
}

/// Deterministic geometric stand-in for a learned frame predictor.
///
/// Marker scribbles are wiped along their principal axis; lentil clusters are
/// swept from behind the cluster towards `target_corner`.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselinePredictor {
    pub colors: ColorConfig,
    pub target_corner: TablePoint,
    pub sponge_radius: f64,
}

impl BaselinePredictor {
    pub fn new(colors: ColorConfig, target_corner: TablePoint, sponge_radius: f64) -> Self {
        Self { colors, target_corner, sponge_radius }
    }
}

impl Default for BaselinePredictor {
    /// Default colors, sweeping towards the default table's bottom-right corner.
    fn default() -> Self {
        Self::new(
            ColorConfig::default(),
            crate::geometry::TableBounds::DEFAULT.bottom_right(),
            crate::simulator::DEFAULT_SPONGE_RADIUS,
        )
    }
}

impl FramePredictor for BaselinePredictor {
    fn predict(&self, img: &VirtualImage) -> Result<FramePrediction, PerceptionError> {
        baseline_predict_frames(img, self)
    }
}

pub fn baseline_predict_frames(img: &VirtualImage, cfg: &BaselinePredictor) -> Result<FramePrediction, PerceptionError> {
    let mask = segment_dirt(img, &cfg.colors);
    if mask.is_empty() {
        return Err(PerceptionError::EmptyDirtMask);
    }
    match classify_dirt(img, &mask, &cfg.colors)? {
        DirtType::Marker => Ok(marker_frames(&mask, img.scale_h())?),
        DirtType::Lentils => Ok(lentil_frames(&mask, img.scale_h(), cfg.target_corner, cfg.sponge_radius)?),
    }
}

fn centroid(mask: &DirtMask) -> [f64; 2] {
    let n = mask.count() as f64;
    let (mut sx, mut sy) = (0.0, 0.0);
    for (c, r) in mask.pixels() {
        sx += c as f64;
        sy += r as f64;
    }
    [sx / n, sy / n]
}

/// Principal axis of the mask pixel coordinates; horizontal for fewer than
/// three pixels.
pub fn principal_axis(mask: &DirtMask) -> [f64; 2] {
    if mask.count() < 3 {
        return [1.0, 0.0];
    }
    let c = centroid(mask);
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for (col, row) in mask.pixels() {
        let dx = col as f64 - c[0];
        let dy = row as f64 - c[1];
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    let n = mask.count() as f64;
    let (_, vecs) = sym2_eigen(&[[sxx / n, sxy / n], [sxy / n, syy / n]]);
    vecs[0]
}

/// Marker rule: `b2` is the centroid and `b1`, `b3` the extreme projections of
/// the mask onto its principal axis, with `b1` the one with the smaller table
/// `x` (then `y`).
pub fn marker_frames(mask: &DirtMask, scale_h: f64) -> Result<FramePrediction, PerceptionError> {
    if mask.is_empty() {
        return Err(PerceptionError::EmptyDirtMask);
    }
    let c = centroid(mask);
    let axis = principal_axis(mask);
    let (mut t_min, mut t_max) = (f64::INFINITY, f64::NEG_INFINITY);
    for (col, row) in mask.pixels() {
        let t = (col as f64 - c[0]) * axis[0] + (row as f64 - c[1]) * axis[1];
        t_min = t_min.min(t);
        t_max = t_max.max(t);
    }
    let end = |t: f64| Pixel::new(c[0] + t * axis[0], c[1] + t * axis[1]);
    let e0 = virtual_to_table(end(t_min), scale_h)?;
    let e1 = virtual_to_table(end(t_max), scale_h)?;
    let b2 = virtual_to_table(Pixel::new(c[0], c[1]), scale_h)?;
    let (b1, b3) = if (e0.x, e0.y) <= (e1.x, e1.y) { (e0, e1) } else { (e1, e0) };
    Ok(FramePrediction { b1, b2, b3 })
}

/// Lentils rule: `b2` is the centroid, `b3` the centroid pushed towards the
/// target corner by cluster radius plus sponge radius, `b1` the mirror image.
pub fn lentil_frames(
    mask: &DirtMask,
    scale_h: f64,
    target_corner: TablePoint,
    sponge_radius: f64,
) -> Result<FramePrediction, PerceptionError> {
    if mask.is_empty() {
        return Err(PerceptionError::EmptyDirtMask);
    }
    let c = centroid(mask);
    let center = virtual_to_table(Pixel::new(c[0], c[1]), scale_h)?;
    let mut radius: f64 = 0.0;
    for (col, row) in mask.pixels() {
        let p = virtual_to_table(Pixel::new(col as f64, row as f64), scale_h)?;
        radius = radius.max((p.x - center.x).hypot(p.y - center.y));
    }
    let reach = radius + sponge_radius;
    let (dx, dy) = (target_corner.x - center.x, target_corner.y - center.y);
    let dist = dx.hypot(dy);
    let dir = if dist > 1e-12 { [dx / dist, dy / dist] } else { [FRAC_1_SQRT_2, FRAC_1_SQRT_2] };
    Ok(FramePrediction {
        b1: TablePoint::new(center.x - reach * dir[0], center.y - reach * dir[1]),
        b2: center,
        b3: TablePoint::new(center.x + reach * dir[0], center.y + reach * dir[1]),
    })
}
