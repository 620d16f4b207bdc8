//! Classic 2D gradient noise and fractal textures built from it.

#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;

use super::AugmentError;
use crate::image::{Rgb, RgbImage};
use crate::seed::{derive_seed, rng_from_seed};

const GRADIENTS: [[f64; 2]; 8] = [
    [1.0, 1.0],
    [-1.0, 1.0],
    [1.0, -1.0],
    [-1.0, -1.0],
    [core::f64::consts::SQRT_2, 0.0],
    [-core::f64::consts::SQRT_2, 0.0],
    [0.0, core::f64::consts::SQRT_2],
    [0.0, -core::f64::consts::SQRT_2],
];

#[inline]
fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

#[inline]
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    a + t * (b - a)
}

/// Gradient noise with a seed-keyed permutation table.
#[derive(Clone)]
pub struct PerlinNoise {
    perm: [u8; 512],
}

impl core::fmt::Debug for PerlinNoise {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("PerlinNoise").finish_non_exhaustive()
    }
}

impl PerlinNoise {
    pub fn new(seed: u64) -> Self {
        let mut table: [u8; 256] = core::array::from_fn(|i| i as u8);
        table.shuffle(&mut rng_from_seed(seed));
        let mut perm = [0u8; 512];
        for i in 0..512 {
            perm[i] = table[i & 255];
        }
        Self { perm }
    }

    #[inline]
    fn gradient(&self, xi: usize, yi: usize) -> [f64; 2] {
        let h = self.perm[self.perm[xi] as usize + yi];
        GRADIENTS[(h & 7) as usize]
    }

    /// Noise value in `[-1, 1]`; exactly zero on integer lattice points.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let x0 = x.floor();
        let y0 = y.floor();
        let xf = x - x0;
        let yf = y - y0;
        let xi = (x0 as i64).rem_euclid(256) as usize;
        let yi = (y0 as i64).rem_euclid(256) as usize;
        let dot = |g: [f64; 2], dx: f64, dy: f64| g[0] * dx + g[1] * dy;
        let n00 = dot(self.gradient(xi, yi), xf, yf);
        let n10 = dot(self.gradient(xi + 1, yi), xf - 1.0, yf);
        let n01 = dot(self.gradient(xi, yi + 1), xf, yf - 1.0);
        let n11 = dot(self.gradient(xi + 1, yi + 1), xf - 1.0, yf - 1.0);
        let u = fade(xf);
        let v = fade(yf);
        lerp(lerp(n00, n10, u), lerp(n01, n11, u), v).clamp(-1.0, 1.0)
    }
}

/// One-shot noise evaluation. Prefer [`PerlinNoise`] when sampling many points.
pub fn perlin2(x: f64, y: f64, seed: u64) -> f64 {
    PerlinNoise::new(seed).sample(x, y)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerlinParams {
    /// Lattice cells across the image side at the first octave.
    pub frequency: f64,
    pub octaves: u32,
    /// Amplitude factor between consecutive octaves.
    pub persistence: f64,
    pub seed: u64,
    pub color_a: Rgb,
    pub color_b: Rgb,
}

impl PerlinParams {
    pub fn validate(&self) -> Result<(), AugmentError> {
        if !(self.frequency >= 1.0) || !self.frequency.is_finite() {
            return Err(AugmentError::InvalidParams("frequency must be at least 1"));
        }
        if self.octaves < 1 {
            return Err(AugmentError::InvalidParams("octaves must be at least 1"));
        }
        if !(self.persistence > 0.0 && self.persistence <= 1.0) {
            return Err(AugmentError::InvalidParams("persistence must lie in (0, 1]"));
        }
        if self.color_a.iter().chain(&self.color_b).any(|c| !(*c >= 0.0 && *c <= 1.0)) {
            return Err(AugmentError::InvalidParams("colors must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Light, table-like texture.
    pub fn table_default() -> Self {
        Self { color_a: [0.78, 0.78, 0.76], color_b: [0.98, 0.97, 0.95], ..Self::default() }
    }

    /// Dark bluish clutter, far from every dirt color box.
    pub fn background_default() -> Self {
        Self { color_a: [0.10, 0.15, 0.30], color_b: [0.45, 0.50, 0.60], ..Self::default() }
    }
}

impl Default for PerlinParams {
    fn default() -> Self {
        Self { frequency: 8.0, octaves: 3, persistence: 0.5, seed: 0, color_a: [0.0; 3], color_b: [1.0; 3] }
    }
}

/// Fractal noise value in `[0, 1]` for every pixel of a `size × size` raster.
pub fn fractal_field(size: usize, params: &PerlinParams) -> Result<alloc::vec::Vec<f64>, AugmentError> {
    params.validate()?;
    if size == 0 {
        return Err(AugmentError::InvalidParams("texture size must be positive"));
    }
    let layers: alloc::vec::Vec<(PerlinNoise, f64, f64)> = (0..params.octaves)
        .map(|o| {
            let freq = params.frequency * (1u64 << o.min(62)) as f64 / size as f64;
            (PerlinNoise::new(derive_seed(params.seed, &[o as u64])), freq, params.persistence.powi(o as i32))
        })
        .collect();
    let amp_total: f64 = layers.iter().map(|l| l.2).sum();
    let mut out = alloc::vec::Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let mut v = 0.0;
            for (noise, freq, amp) in &layers {
                v += amp * noise.sample(col as f64 * freq, row as f64 * freq);
            }
            out.push((0.5 * (v / amp_total + 1.0)).clamp(0.0, 1.0));
        }
    }
    Ok(out)
}

/// Fractal noise mapped linearly between `color_a` (0) and `color_b` (1).
pub fn perlin_texture(size: usize, params: &PerlinParams) -> Result<RgbImage, AugmentError> {
    let field = fractal_field(size, params)?;
    let (a, b) = (params.color_a, params.color_b);
    let mut it = field.into_iter();
    Ok(RgbImage::from_fn(size, size, |_, _| {
        let v = it.next().unwrap_or(0.0) as f32;
        core::array::from_fn(|c| (a[c] + (b[c] - a[c]) * v).clamp(0.0, 1.0))
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_on_lattice_points() {
        assert_eq!(perlin2(0.0, 0.0, 1), 0.0);
        assert_eq!(perlin2(2.0, 5.0, 1), 0.0);
        assert_eq!(perlin2(-3.0, 7.0, 99), 0.0);
    }

    #[test]
    fn deterministic_per_seed() {
        assert_eq!(perlin2(0.37, 0.81, 4), perlin2(0.37, 0.81, 4));
        let a: alloc::vec::Vec<f64> = (0..20).map(|i| perlin2(0.37 + i as f64, 0.81, 4)).collect();
        let b: alloc::vec::Vec<f64> = (0..20).map(|i| perlin2(0.37 + i as f64, 0.81, 5)).collect();
        assert_ne!(a, b);
    }

    #[test]
    fn rejects_bad_params() {
        let p = PerlinParams { octaves: 0, ..Default::default() };
        assert!(p.validate().is_err());
        let p = PerlinParams { persistence: 1.5, ..Default::default() };
        assert!(p.validate().is_err());
        let p = PerlinParams { frequency: 0.5, ..Default::default() };
        assert_eq!(p.validate().unwrap_err().code(), "InvalidParams");
    }

    #[test]
    fn equal_colors_give_flat_texture() {
        let gray = [0.5, 0.5, 0.5];
        let p = PerlinParams { octaves: 1, color_a: gray, color_b: gray, ..Default::default() };
        let tex = perlin_texture(16, &p).unwrap();
        assert!(tex.pixels().iter().all(|px| *px == gray));
    }
}
