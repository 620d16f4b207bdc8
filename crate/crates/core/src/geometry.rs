//! Virtual-camera geometry: homography estimation and application, image
//! warping onto the bird-view plane, and the table ↔ virtual-pixel mapping.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use thiserror::Error;

use crate::image::{ImageError, Rgb, RgbImage, VirtualImage, BLACK};
use crate::linalg::{frobenius3, mat3_det, mat3_inverse, mat3_mul, mat3_vec, smallest_right_singular_vector, Mat3};

/// Offset of the table `y` axis in the virtual-image column mapping.
pub const Y_OFFSET: f64 = 2.0 / 3.0;
/// Offset of the table `x` axis in the virtual-image row mapping.
pub const X_OFFSET: f64 = 1.0;
/// Default virtual image side in pixels; also the default pixels-per-meter scale.
pub const DEFAULT_IMAGE_SIZE: usize = 240;

const COLLINEAR_AREA: f64 = 1e-9;
const AT_INFINITY: f64 = 1e-12;
const CORNER_RELATIVE: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("need at least four correspondences, got {0}")]
    FewerThanFourPairs(usize),
    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(&'static str),
    #[error("point maps to infinity (w = {0:e})")]
    PointAtInfinity(f64),
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("homography is not invertible")]
    NonInvertibleHomography,
    #[error("output size must be positive")]
    EmptyOutput,
    #[error(transparent)]
    Image(#[from] ImageError),
}

impl GeometryError {
    pub fn code(&self) -> &'static str {
        match self {
            GeometryError::FewerThanFourPairs(_) => "FewerThanFourPairs",
            GeometryError::DegenerateConfiguration(_) => "DegenerateConfiguration",
            GeometryError::PointAtInfinity(_) => "PointAtInfinity",
            GeometryError::NonPositiveScale(_) => "NonPositiveScale",
            GeometryError::NonInvertibleHomography => "NonInvertibleHomography",
            GeometryError::EmptyOutput => "EmptyOutput",
            GeometryError::Image(e) => e.code(),
        }
    }
}

/// A point in image pixel coordinates: `x` is the column, `y` the row.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pixel {
    pub x: f64,
    pub y: f64,
}

impl Pixel {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }
}

/// Planar coordinates in the robot/table reference frame, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TablePoint {
    pub x: f64,
    pub y: f64,
}

impl TablePoint {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn to_array(self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn from_array(v: [f64; 2]) -> Self {
        Self { x: v[0], y: v[1] }
    }
}

/// Axis-aligned table rectangle in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableBounds {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl TableBounds {
    /// A 0.5 m × 0.5 m table centered in the default virtual image.
    pub const DEFAULT: TableBounds = TableBounds { x_min: -0.75, x_max: -0.25, y_min: -5.0 / 12.0, y_max: 1.0 / 12.0 };

    pub fn contains(&self, p: TablePoint) -> bool {
        p.x >= self.x_min && p.x <= self.x_max && p.y >= self.y_min && p.y <= self.y_max
    }

    pub fn clamp(&self, p: TablePoint) -> TablePoint {
        TablePoint::new(p.x.clamp(self.x_min, self.x_max), p.y.clamp(self.y_min, self.y_max))
    }

    pub fn center(&self) -> TablePoint {
        TablePoint::new(0.5 * (self.x_min + self.x_max), 0.5 * (self.y_min + self.y_max))
    }

    pub fn width_x(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn width_y(&self) -> f64 {
        self.y_max - self.y_min
    }

    /// The corner that appears bottom-right in the virtual image.
    pub fn bottom_right(&self) -> TablePoint {
        TablePoint::new(self.x_max, self.y_max)
    }

    /// Table outline in virtual pixels, clockwise in image coordinates starting
    /// at the top-left corner.
    pub fn pixel_quad(&self, scale_h: f64) -> [Pixel; 4] {
        [
            table_to_virtual(TablePoint::new(self.x_min, self.y_min), scale_h),
            table_to_virtual(TablePoint::new(self.x_min, self.y_max), scale_h),
            table_to_virtual(TablePoint::new(self.x_max, self.y_max), scale_h),
            table_to_virtual(TablePoint::new(self.x_max, self.y_min), scale_h),
        ]
    }
}

impl Default for TableBounds {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Inclusive point-in-convex-quadrilateral test (either winding).
pub fn point_in_quad(quad: &[Pixel; 4], p: Pixel) -> bool {
    let mut sign = 0.0;
    for i in 0..4 {
        let a = quad[i];
        let b = quad[(i + 1) % 4];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if cross.abs() <= 1e-9 {
            continue;
        }
        if sign == 0.0 {
            sign = cross.signum();
        } else if cross.signum() != sign {
            return false;
        }
    }
    true
}

/// Projective map between two image planes, stored normalized.
///
/// The matrix is scaled so its bottom-right entry is 1. When that entry is
/// numerically zero relative to the Frobenius norm the matrix is scaled to unit
/// Frobenius norm instead and [`Homography::is_affine_degenerate`] reports it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Mat3,
    affine_degenerate: bool,
}

impl Homography {
    pub const IDENTITY: Homography =
        Homography { m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], affine_degenerate: false };

    pub fn from_matrix(m: Mat3) -> Result<Self, GeometryError> {
        let norm = frobenius3(&m);
        if !norm.is_finite() || norm == 0.0 {
            return Err(GeometryError::NonInvertibleHomography);
        }
        let det = mat3_det(&m);
        if det.abs() <= 1e-12 * norm * norm * norm {
            return Err(GeometryError::NonInvertibleHomography);
        }
        let corner = m[2][2];
        let (divisor, affine_degenerate) =
            if corner.abs() < CORNER_RELATIVE * norm { (norm, true) } else { (corner, false) };
        let mut out = m;
        for v in out.iter_mut().flatten() {
            *v /= divisor;
        }
        Ok(Self { m: out, affine_degenerate })
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        Self { m: [[1.0, 0.0, dx], [0.0, 1.0, dy], [0.0, 0.0, 1.0]], affine_degenerate: false }
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.m
    }

    pub fn is_affine_degenerate(&self) -> bool {
        self.affine_degenerate
    }

    pub fn inverse(&self) -> Result<Self, GeometryError> {
        let inv = mat3_inverse(&self.m).ok_or(GeometryError::NonInvertibleHomography)?;
        Self::from_matrix(inv)
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Homography) -> Result<Self, GeometryError> {
        Self::from_matrix(mat3_mul(&self.m, &other.m))
    }

    pub fn apply(&self, p: Pixel) -> Result<Pixel, GeometryError> {
        apply_homography(self, p)
    }
}

/// Maps `p` through `h` with perspective division.
pub fn apply_homography(h: &Homography, p: Pixel) -> Result<Pixel, GeometryError> {
    let v = mat3_vec(&h.m, &[p.x, p.y, 1.0]);
    if !(v[2].abs() >= AT_INFINITY) {
        return Err(GeometryError::PointAtInfinity(v[2]));
    }
    Ok(Pixel::new(v[0] / v[2], v[1] / v[2]))
}

/// Similarity that moves the centroid to the origin and the mean distance to √2.
fn normalizing_transform(points: &[Pixel]) -> Result<Mat3, GeometryError> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
    if !(mean_dist > 0.0) || !mean_dist.is_finite() {
        return Err(GeometryError::DegenerateConfiguration("all points coincide"));
    }
    let s = core::f64::consts::SQRT_2 / mean_dist;
    Ok([[s, 0.0, -s * cx], [0.0, s, -s * cy], [0.0, 0.0, 1.0]])
}

fn transform_points(t: &Mat3, points: &[Pixel]) -> Vec<Pixel> {
    points
        .iter()
        .map(|p| Pixel::new(t[0][0] * p.x + t[0][2], t[1][1] * p.y + t[1][2]))
        .collect()
}

fn has_collinear_triple(points: &[Pixel]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (a, b, c) = (points[i], points[j], points[k]);
                let area = 0.5 * ((b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)).abs();
                if area < COLLINEAR_AREA {
                    return true;
                }
            }
        }
    }
    false
}

/// Estimates the homography mapping each source pixel onto its target pixel by
/// the normalized direct linear transform. Exact for four generic pairs,
/// least-squares in the algebraic error otherwise.
pub fn estimate_homography(pairs: &[(Pixel, Pixel)]) -> Result<Homography, GeometryError> {
    if pairs.len() < 4 {
        return Err(GeometryError::FewerThanFourPairs(pairs.len()));
    }
    if pairs.iter().any(|(s, t)| !(s.x.is_finite() && s.y.is_finite() && t.x.is_finite() && t.y.is_finite())) {
        return Err(GeometryError::DegenerateConfiguration("non-finite coordinate"));
    }
    let src: Vec<Pixel> = pairs.iter().map(|p| p.0).collect();
    let dst: Vec<Pixel> = pairs.iter().map(|p| p.1).collect();
    let ts = normalizing_transform(&src)?;
    let td = normalizing_transform(&dst)?;
    let src_n = transform_points(&ts, &src);
    let dst_n = transform_points(&td, &dst);
    if has_collinear_triple(&src_n) {
        return Err(GeometryError::DegenerateConfiguration("three source points are collinear"));
    }
    if has_collinear_triple(&dst_n) {
        return Err(GeometryError::DegenerateConfiguration("three target points are collinear"));
    }

    let mut rows: Vec<[f64; 9]> = Vec::with_capacity(2 * pairs.len());
    for (s, d) in src_n.iter().zip(&dst_n) {
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        rows.push([-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        rows.push([0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }
    let h = smallest_right_singular_vector(&rows);
    let hn = [[h[0], h[1], h[2]], [h[3], h[4], h[5]], [h[6], h[7], h[8]]];
    let td_inv = mat3_inverse(&td).ok_or(GeometryError::DegenerateConfiguration("target normalization"))?;
    Homography::from_matrix(mat3_mul(&mat3_mul(&td_inv, &hn), &ts))
}

/// Table point (meters) to virtual-image pixel: `((y + 2/3)·h, (x + 1)·h)`.
pub fn table_to_virtual(p: TablePoint, scale_h: f64) -> Pixel {
    Pixel::new((p.y + Y_OFFSET) * scale_h, (p.x + X_OFFSET) * scale_h)
}

/// Exact inverse of [`table_to_virtual`].
pub fn virtual_to_table(q: Pixel, scale_h: f64) -> Result<TablePoint, GeometryError> {
    if !(scale_h > 0.0) || !scale_h.is_finite() {
        return Err(GeometryError::NonPositiveScale(scale_h));
    }
    Ok(TablePoint::new(q.y / scale_h - X_OFFSET, q.x / scale_h - Y_OFFSET))
}

/// Bilinear sample at a continuous pixel location, or `None` when the location
/// falls outside the pixel-center grid.
pub fn sample_bilinear(src: &RgbImage, x: f64, y: f64) -> Option<Rgb> {
    let w = src.width();
    let h = src.height();
    if w == 0 || h == 0 {
        return None;
    }
    let max_x = (w - 1) as f64;
    let max_y = (h - 1) as f64;
    // tolerate round-off just outside the grid
    const EDGE: f64 = 1e-9;
    if !(x >= -EDGE && x <= max_x + EDGE && y >= -EDGE && y <= max_y + EDGE) {
        return None;
    }
    let x = x.clamp(0.0, max_x);
    let y = y.clamp(0.0, max_y);
    let x0 = x.floor() as usize;
    let y0 = y.floor() as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let fx = (x - x0 as f64) as f32;
    let fy = (y - y0 as f64) as f32;
    let p00 = src.get(x0, y0);
    let p10 = src.get(x1, y0);
    let p01 = src.get(x0, y1);
    let p11 = src.get(x1, y1);
    let mut out = [0.0f32; 3];
    for c in 0..3 {
        let top = if fx == 0.0 { p00[c] } else { p00[c] + (p10[c] - p00[c]) * fx };
        let bottom = if fx == 0.0 { p01[c] } else { p01[c] + (p11[c] - p01[c]) * fx };
        out[c] = if fy == 0.0 { top } else { (top + (bottom - top) * fy).clamp(0.0, 1.0) };
    }
    Some(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WarpOptions {
    pub out_size: usize,
    /// Pixels per meter of the produced virtual image.
    pub scale_h: f64,
    pub fill: Rgb,
}

impl WarpOptions {
    pub fn new(out_size: usize) -> Self {
        Self { out_size, scale_h: out_size as f64, fill: BLACK }
    }
}

impl Default for WarpOptions {
    fn default() -> Self {
        Self::new(DEFAULT_IMAGE_SIZE)
    }
}

/// Inverse-mapping warp of `src` onto an `out_size × out_size` virtual image:
/// each output pixel samples `src` at `H⁻¹·pixel`.
pub fn warp_image(src: &RgbImage, h: &Homography, out_size: usize) -> Result<VirtualImage, GeometryError> {
    warp_image_with(src, h, &WarpOptions::new(out_size))
}

pub fn warp_image_with(src: &RgbImage, h: &Homography, opts: &WarpOptions) -> Result<VirtualImage, GeometryError> {
    if opts.out_size == 0 {
        return Err(GeometryError::EmptyOutput);
    }
    let inv = h.inverse()?;
    let s = opts.out_size;
    let raster = RgbImage::from_fn(s, s, |col, row| {
        match apply_homography(&inv, Pixel::new(col as f64, row as f64)) {
            Ok(p) => sample_bilinear(src, p.x, p.y).unwrap_or(opts.fill),
            Err(_) => opts.fill,
        }
    });
    Ok(VirtualImage::new(raster, opts.scale_h)?)
}
