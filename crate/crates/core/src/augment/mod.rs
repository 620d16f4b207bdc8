//! Dataset expansion: illumination jitter, consistent image/trajectory
//! translation, and Perlin-noise table and background substitution.
//!
//! Every random choice is drawn from a generator seeded by
//! `derive_seed(master_seed, [sample_index, copy_index])`, so a sample's copies
//! do not depend on how (or in which order) other samples are processed.

mod perlin;

pub use perlin::{fractal_field, perlin2, perlin_texture, PerlinNoise, PerlinParams};

use alloc::boxed::Box;
use alloc::vec::Vec;
use rand::{Rng as _, RngCore};
use thiserror::Error;

use crate::dataset::{Dataset, DatasetError, Demonstration};
use crate::geometry::{point_in_quad, Pixel, TableBounds};
use crate::image::{ImageError, Rgb, RgbImage, VirtualImage, BLACK};
use crate::perception::{segment_dirt, ColorConfig, DirtMask};
use crate::seed::{child_rng, Rng};
use crate::tpgmm::Trajectory;

/// Half-width of the uniform per-channel illumination offset.
pub const ILLUMINATION_RANGE: f32 = 0.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AugmentError {
    #[error("no dirt pixels to keep in view")]
    EmptyDirtMask,
    #[error("dirt pixel ({0}, {1}) lies outside the table outline")]
    MaskOutsideTable(usize, usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(&'static str),
    #[error("mask is {mask}×{mask} but the image is {image}×{image}")]
    MaskSizeMismatch { mask: usize, image: usize },
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("sample {index}: {source}")]
    Sample { index: usize, source: Box<AugmentError> },
}

impl AugmentError {
    pub fn code(&self) -> &'static str {
        match self {
            AugmentError::EmptyDirtMask => "EmptyDirtMask",
            AugmentError::MaskOutsideTable(..) => "MaskOutsideTable",
            AugmentError::InvalidParams(_) => "InvalidParams",
            AugmentError::MaskSizeMismatch { .. } => "MaskSizeMismatch",
            AugmentError::Image(e) => e.code(),
            AugmentError::Dataset(e) => e.code(),
            AugmentError::Sample { source, .. } => source.code(),
        }
    }

    fn at(self, index: usize) -> Self {
        match self {
            e @ AugmentError::Sample { .. } => e,
            e => AugmentError::Sample { index, source: Box::new(e) },
        }
    }
}

/// Uniform per-channel offsets in `[−0.15, 0.15]`.
pub fn sample_illumination<R: RngCore + ?Sized>(rng: &mut R) -> [f32; 3] {
    core::array::from_fn(|_| rng.random_range(-ILLUMINATION_RANGE..=ILLUMINATION_RANGE))
}

/// Adds `deltas[c]` to channel `c` of every pixel, clamping to `[0, 1]`.
pub fn apply_illumination(img: &VirtualImage, deltas: [f32; 3]) -> VirtualImage {
    let mut out = img.clone();
    for px in out.raster_mut().pixels_mut() {
        for c in 0..3 {
            px[c] = (px[c] + deltas[c]).clamp(0.0, 1.0);
        }
    }
    out
}

pub fn jitter_illumination<R: RngCore + ?Sized>(img: &VirtualImage, rng: &mut R) -> VirtualImage {
    apply_illumination(img, sample_illumination(rng))
}

/// Inclusive ranges of integer column and row shifts that keep every mask
/// pixel inside the raster.
pub fn admissible_shifts(mask: &DirtMask) -> Option<([i64; 2], [i64; 2])> {
    let (c0, r0, c1, r1) = mask.bounding_box()?;
    let last = mask.size() as i64 - 1;
    Some(([-(c0 as i64), last - c1 as i64], [-(r0 as i64), last - r1 as i64]))
}

/// Moves the raster by `(dx, dy)` pixels; uncovered pixels take `fill`.
pub fn shift_image(img: &VirtualImage, dx: i64, dy: i64, fill: Rgb) -> VirtualImage {
    let s = img.size() as i64;
    let src = img.raster();
    let raster = RgbImage::from_fn(img.size(), img.size(), |c, r| {
        let (sc, sr) = (c as i64 - dx, r as i64 - dy);
        if sc >= 0 && sc < s && sr >= 0 && sr < s {
            src.get(sc as usize, sr as usize)
        } else {
            fill
        }
    });
    VirtualImage::new(raster, img.scale_h()).expect("shifting preserves a valid image")
}

/// Table displacement `(Δx, Δy)` in meters matching a shift of `dx` columns and
/// `dy` rows.
pub fn shift_to_table(dx: i64, dy: i64, scale_h: f64) -> (f64, f64) {
    (dy as f64 / scale_h, dx as f64 / scale_h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TranslatedSample {
    pub image: VirtualImage,
    pub trajectory: Trajectory,
    pub mask: DirtMask,
    /// `(columns, rows)`.
    pub shift: (i64, i64),
}

/// Applies a given pixel shift to image, trajectory and mask together.
pub fn translate_by(img: &VirtualImage, traj: &Trajectory, mask: &DirtMask, dx: i64, dy: i64, fill: Rgb) -> TranslatedSample {
    let (tx, ty) = shift_to_table(dx, dy, img.scale_h());
    TranslatedSample {
        image: shift_image(img, dx, dy, fill),
        trajectory: if dx == 0 && dy == 0 { traj.clone() } else { traj.translated(tx, ty) },
        mask: mask.shifted(dx, dy),
        shift: (dx, dy),
    }
}

/// Draws a shift uniformly among those keeping all dirt visible and applies it.
pub fn translate_sample<R: RngCore + ?Sized>(
    img: &VirtualImage,
    traj: &Trajectory,
    mask: &DirtMask,
    fill: Rgb,
    rng: &mut R,
) -> Result<TranslatedSample, AugmentError> {
    if mask.size() != img.size() {
        return Err(AugmentError::MaskSizeMismatch { mask: mask.size(), image: img.size() });
    }
    let ([dx0, dx1], [dy0, dy1]) = admissible_shifts(mask).ok_or(AugmentError::EmptyDirtMask)?;
    let dx = rng.random_range(dx0..=dx1);
    let dy = rng.random_range(dy0..=dy1);
    Ok(translate_by(img, traj, mask, dx, dy, fill))
}

/// Textures and outline randomization for [`perlin_background`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerlinBackground {
    pub table: PerlinParams,
    pub background: PerlinParams,
    /// Maximum per-coordinate vertex displacement as a fraction of the image side.
    pub vertex_jitter: f64,
}

impl Default for PerlinBackground {
    fn default() -> Self {
        Self { table: PerlinParams::table_default(), background: PerlinParams::background_default(), vertex_jitter: 0.05 }
    }
}

/// Keeps the dirt pixels, paints the (jittered) table outline with one texture
/// and everything else with another. Texture seeds come from `rng`; the seeds in
/// `cfg` are ignored.
pub fn perlin_background<R: RngCore + ?Sized>(
    img: &VirtualImage,
    mask: &DirtMask,
    table_quad: &[Pixel; 4],
    cfg: &PerlinBackground,
    rng: &mut R,
) -> Result<VirtualImage, AugmentError> {
    let size = img.size();
    if mask.size() != size {
        return Err(AugmentError::MaskSizeMismatch { mask: mask.size(), image: size });
    }
    if !(cfg.vertex_jitter >= 0.0 && cfg.vertex_jitter.is_finite()) {
        return Err(AugmentError::InvalidParams("vertex jitter must be non-negative"));
    }
    if let Some((c, r)) = mask.pixels().find(|&(c, r)| !point_in_quad(table_quad, Pixel::new(c as f64, r as f64))) {
        return Err(AugmentError::MaskOutsideTable(c, r));
    }
    let table_params = PerlinParams { seed: rng.next_u64(), ..cfg.table };
    let back_params = PerlinParams { seed: rng.next_u64(), ..cfg.background };
    let reach = cfg.vertex_jitter * size as f64;
    let quad: [Pixel; 4] = core::array::from_fn(|i| {
        let (jx, jy) = if reach > 0.0 {
            (rng.random_range(-reach..=reach), rng.random_range(-reach..=reach))
        } else {
            (0.0, 0.0)
        };
        Pixel::new(table_quad[i].x + jx, table_quad[i].y + jy)
    });
    let table = perlin_texture(size, &table_params)?;
    let back = perlin_texture(size, &back_params)?;
    let src = img.raster();
    let raster = RgbImage::from_fn(size, size, |c, r| {
        if mask.get(c, r) {
            src.get(c, r)
        } else if point_in_quad(&quad, Pixel::new(c as f64, r as f64)) {
            table.get(c, r)
        } else {
            back.get(c, r)
        }
    });
    Ok(VirtualImage::new(raster, img.scale_h())?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentPlan {
    /// Copies with illumination jitter and translation.
    pub n_translate_illum: usize,
    /// Copies with illumination jitter, translation and Perlin textures.
    pub n_perlin: usize,
    pub master_seed: u64,
}

impl AugmentPlan {
    pub fn new(n_translate_illum: usize, n_perlin: usize, master_seed: u64) -> Self {
        Self { n_translate_illum, n_perlin, master_seed }
    }

    /// Output samples per input sample, the original included.
    pub fn copies_per_sample(&self) -> usize {
        1 + self.n_translate_illum + self.n_perlin
    }
}

impl Default for AugmentPlan {
    fn default() -> Self {
        Self { n_translate_illum: 10, n_perlin: 10, master_seed: crate::seed::DEFAULT_SEED }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AugmentSettings {
    /// Used to find the dirt that must stay visible and untouched.
    pub colors: ColorConfig,
    /// Table outline in virtual pixels; the default table when `None`.
    pub table_quad: Option<[Pixel; 4]>,
    pub perlin: PerlinBackground,
    /// Color of pixels uncovered by a translation.
    pub fill: Rgb,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        Self { colors: ColorConfig::default(), table_quad: None, perlin: PerlinBackground::default(), fill: BLACK }
    }
}

fn translated_copy(
    demo: &Demonstration,
    mask: &DirtMask,
    settings: &AugmentSettings,
    rng: &mut Rng,
) -> Result<TranslatedSample, AugmentError> {
    let lit = jitter_illumination(demo.image(), rng);
    translate_sample(&lit, demo.trajectory(), mask, settings.fill, rng)
}

/// The original followed by its augmented copies, handed to `emit` one at a
/// time. `index` keys the per-copy seeds.
pub fn augment_demonstration(
    demo: &Demonstration,
    index: usize,
    plan: &AugmentPlan,
    settings: &AugmentSettings,
    mut emit: impl FnMut(Demonstration),
) -> Result<(), AugmentError> {
    emit(demo.clone());
    if plan.n_translate_illum == 0 && plan.n_perlin == 0 {
        return Ok(());
    }
    let mask = segment_dirt(demo.image(), &settings.colors);
    if mask.is_empty() {
        return Err(AugmentError::EmptyDirtMask);
    }
    let scale_h = demo.image().scale_h();
    let quad = settings.table_quad.unwrap_or_else(|| TableBounds::DEFAULT.pixel_quad(scale_h));
    for copy in 0..plan.n_translate_illum {
        let mut rng = child_rng(plan.master_seed, &[index as u64, copy as u64]);
        let moved = translated_copy(demo, &mask, settings, &mut rng)?;
        emit(Demonstration::new(moved.image, moved.trajectory, demo.dirt_type())?);
    }
    for copy in plan.n_translate_illum..plan.n_translate_illum + plan.n_perlin {
        let mut rng = child_rng(plan.master_seed, &[index as u64, copy as u64]);
        let moved = translated_copy(demo, &mask, settings, &mut rng)?;
        let (dx, dy) = moved.shift;
        let moved_quad = quad.map(|p| Pixel::new(p.x + dx as f64, p.y + dy as f64));
        let image = perlin_background(&moved.image, &moved.mask, &moved_quad, &settings.perlin, &mut rng)?;
        emit(Demonstration::new(image, moved.trajectory, demo.dirt_type())?);
    }
    Ok(())
}

/// Streams the augmented dataset sample by sample, in output order.
pub fn augment_dataset_for_each(
    ds: &Dataset,
    plan: &AugmentPlan,
    settings: &AugmentSettings,
    mut emit: impl FnMut(Demonstration),
) -> Result<(), AugmentError> {
    for (index, demo) in ds.samples().iter().enumerate() {
        augment_demonstration(demo, index, plan, settings, &mut emit).map_err(|e| e.at(index))?;
    }
    Ok(())
}

pub fn augment_dataset(ds: &Dataset, plan: &AugmentPlan, settings: &AugmentSettings) -> Result<Dataset, AugmentError> {
    let mut samples = Vec::with_capacity(ds.len() * plan.copies_per_sample());
    augment_dataset_for_each(ds, plan, settings, |d| samples.push(d))?;
    Ok(Dataset::from_samples(ds.scale_h(), ds.image_size(), samples)?)
}
