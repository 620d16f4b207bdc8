//! A planar cleaning simulator: a disc-shaped sponge follows a trajectory over a
//! table, erasing marker ink or pushing lentils, and episodes are scored with
//! the dirty-area (m1) and dirt-distance (m2) percentages.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use rand::{Rng as _, RngCore};
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::geometry::{table_to_virtual, Pixel, TableBounds, TablePoint, DEFAULT_IMAGE_SIZE};
use crate::image::{Rgb, RgbImage, VirtualImage};
use crate::perception::{segment_dirt, ColorConfig, DirtMask, DirtType, FramePredictor, PerceptionError};
use crate::tpgmm::{gmr_trajectory, reference_frames, TpGmmError, TpGmmModel, Trajectory, TRAJECTORY_LEN};

pub const DEFAULT_SPONGE_RADIUS: f64 = 0.04;
pub const DEFAULT_REPETITIONS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("parameters out of bounds: {0}")]
    ParamsOutOfBounds(&'static str),
    #[error("invalid scene: {0}")]
    InvalidScene(&'static str),
    #[error("initial dirty area is zero")]
    ZeroInitialArea,
    #[error("initial dirt distance is zero")]
    ZeroInitialDistance,
    #[error("repetition {index}: {source}")]
    Repetition { index: usize, source: Box<SimError> },
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    TpGmm(#[from] TpGmmError),
}

impl SimError {
    pub fn code(&self) -> &'static str {
        match self {
            SimError::ParamsOutOfBounds(_) => "ParamsOutOfBounds",
            SimError::InvalidScene(_) => "InvalidScene",
            SimError::ZeroInitialArea => "ZeroInitialArea",
            SimError::ZeroInitialDistance => "ZeroInitialDistance",
            SimError::Repetition { source, .. } => source.code(),
            SimError::Perception(e) => e.code(),
            SimError::TpGmm(e) => e.code(),
        }
    }
}

/// Colors and lentil size used by [`render_scene`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RenderStyle {
    pub table: Rgb,
    pub background: Rgb,
    pub ink: Rgb,
    pub lentil: Rgb,
    /// Lentil disc radius in pixels.
    pub lentil_radius_px: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            table: [0.92, 0.92, 0.90],
            background: [0.20, 0.24, 0.36],
            ink: [0.85, 0.10, 0.12],
            lentil: [0.60, 0.40, 0.15],
            lentil_radius_px: 1.0,
        }
    }
}

/// The table, its dirt, and the sponge that cleans it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    kind: DirtType,
    size: usize,
    scale_h: f64,
    /// Row-major `size × size` ink intensities; all zero for lentil scenes.
    ink: Vec<f32>,
    particles: Vec<[f64; 2]>,
    table_bounds: TableBounds,
    target_corner: TablePoint,
    sponge_radius: f64,
    /// Lentil push sub-step as a fraction of the sponge radius.
    push_step: f64,
    style: RenderStyle,
}

/// Default lentil push sub-step, as a fraction of the sponge radius.
pub const DEFAULT_PUSH_STEP: f64 = 1.0 / 128.0;

impl Scene {
    fn validated(self) -> Result<Self, SimError> {
        if self.size == 0 || self.ink.len() != self.size * self.size {
            return Err(SimError::InvalidScene("ink grid does not match the image size"));
        }
        if !(self.scale_h > 0.0 && self.scale_h.is_finite()) {
            return Err(SimError::InvalidScene("scale must be positive"));
        }
        if !(self.sponge_radius > 0.0 && self.sponge_radius.is_finite()) {
            return Err(SimError::InvalidScene("sponge radius must be positive"));
        }
        if !(self.push_step > 0.0 && self.push_step <= 0.5) {
            return Err(SimError::InvalidScene("push step must lie in (0, 1/2] of the sponge radius"));
        }
        let b = &self.table_bounds;
        if !(b.x_min < b.x_max && b.y_min < b.y_max) {
            return Err(SimError::InvalidScene("empty table bounds"));
        }
        if self.ink.iter().any(|v| !(*v >= 0.0 && *v <= 1.0)) {
            return Err(SimError::InvalidScene("ink intensity outside [0, 1]"));
        }
        if self.particles.iter().any(|p| !b.contains(TablePoint::new(p[0], p[1]))) {
            return Err(SimError::InvalidScene("particle outside the table"));
        }
        Ok(self)
    }

    pub fn marker(ink: Vec<f32>, size: usize, scale_h: f64, table_bounds: TableBounds, sponge_radius: f64) -> Result<Self, SimError> {
        Self {
            kind: DirtType::Marker,
            size,
            scale_h,
            ink,
            particles: Vec::new(),
            table_bounds,
            target_corner: table_bounds.bottom_right(),
            sponge_radius,
            push_step: DEFAULT_PUSH_STEP,
            style: RenderStyle::default(),
        }
        .validated()
    }

    pub fn lentils(
        particles: Vec<[f64; 2]>,
        size: usize,
        scale_h: f64,
        table_bounds: TableBounds,
        sponge_radius: f64,
    ) -> Result<Self, SimError> {
        Self {
            kind: DirtType::Lentils,
            size,
            scale_h,
            ink: vec![0.0; size * size],
            particles,
            table_bounds,
            target_corner: table_bounds.bottom_right(),
            sponge_radius,
            push_step: DEFAULT_PUSH_STEP,
            style: RenderStyle::default(),
        }
        .validated()
    }

    pub fn with_target_corner(mut self, corner: TablePoint) -> Self {
        self.target_corner = corner;
        self
    }

    pub fn with_push_step(mut self, fraction: f64) -> Result<Self, SimError> {
        self.push_step = fraction;
        self.validated()
    }

    pub fn with_style(mut self, style: RenderStyle) -> Self {
        self.style = style;
        self
    }

    pub fn kind(&self) -> DirtType {
        self.kind
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn scale_h(&self) -> f64 {
        self.scale_h
    }

    pub fn ink(&self) -> &[f32] {
        &self.ink
    }

    pub fn ink_at(&self, col: usize, row: usize) -> f32 {
        self.ink[row * self.size + col]
    }

    pub fn particles(&self) -> &[[f64; 2]] {
        &self.particles
    }

    pub fn table_bounds(&self) -> TableBounds {
        self.table_bounds
    }

    pub fn target_corner(&self) -> TablePoint {
        self.target_corner
    }

    pub fn sponge_radius(&self) -> f64 {
        self.sponge_radius
    }

    pub fn push_step(&self) -> f64 {
        self.push_step
    }

    pub fn style(&self) -> &RenderStyle {
        &self.style
    }

    /// Number of ink cells with positive intensity.
    pub fn ink_area(&self) -> usize {
        self.ink.iter().filter(|v| **v > 0.0).count()
    }

    pub fn ink_total(&self) -> f64 {
        self.ink.iter().map(|v| *v as f64).sum()
    }

    /// Virtual pixel of the target corner.
    pub fn target_pixel(&self) -> Pixel {
        table_to_virtual(self.target_corner, self.scale_h)
    }
}

/// Random scene generation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpawnParams {
    pub size: usize,
    pub scale_h: f64,
    pub table_bounds: TableBounds,
    pub sponge_radius: f64,
    /// Stroke length range in meters.
    pub stroke_length: [f64; 2],
    /// Interior spline waypoints deviate sideways by up to this fraction of the
    /// stroke length.
    pub stroke_bend: f64,
    pub stroke_width_px: f64,
    pub lentil_count: usize,
    /// Standard deviation of the lentil scatter in meters; draws are truncated
    /// at three deviations.
    pub lentil_spread: f64,
}

impl Default for SpawnParams {
    fn default() -> Self {
        Self {
            size: DEFAULT_IMAGE_SIZE,
            scale_h: DEFAULT_IMAGE_SIZE as f64,
            table_bounds: TableBounds::DEFAULT,
            sponge_radius: DEFAULT_SPONGE_RADIUS,
            stroke_length: [0.08, 0.18],
            stroke_bend: 0.1,
            stroke_width_px: 4.0,
            lentil_count: 80,
            lentil_spread: 0.02,
        }
    }
}

impl SpawnParams {
    fn stroke_margin(&self, length: f64) -> f64 {
        0.5 * length + self.stroke_bend * length + self.stroke_width_px / self.scale_h
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let b = &self.table_bounds;
        if self.size == 0 || !(self.scale_h > 0.0) || !(self.sponge_radius > 0.0) {
            return Err(SimError::ParamsOutOfBounds("size, scale and sponge radius must be positive"));
        }
        let [lo, hi] = self.stroke_length;
        if !(lo > 0.0 && lo <= hi) || !(self.stroke_bend >= 0.0) || !(self.stroke_width_px > 0.0) {
            return Err(SimError::ParamsOutOfBounds("invalid stroke shape"));
        }
        let half = b.width_x().min(b.width_y()) * 0.5;
        if self.stroke_margin(hi) >= half {
            return Err(SimError::ParamsOutOfBounds("stroke does not fit on the table"));
        }
        if !(self.lentil_spread >= 0.0) || 3.0 * self.lentil_spread >= half {
            return Err(SimError::ParamsOutOfBounds("lentil cluster does not fit on the table"));
        }
        let corner = table_to_virtual(TablePoint::new(b.x_max, b.y_max), self.scale_h);
        let origin = table_to_virtual(TablePoint::new(b.x_min, b.y_min), self.scale_h);
        let limit = self.size as f64 - 0.5;
        if origin.x < -0.5 || origin.y < -0.5 || corner.x > limit || corner.y > limit {
            return Err(SimError::ParamsOutOfBounds("table does not fit in the image"));
        }
        Ok(())
    }
}

fn uniform<R: RngCore + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi > lo {
        rng.random_range(lo..hi)
    } else {
        lo
    }
}

fn catmull_rom(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2], p3: [f64; 2], t: f64) -> [f64; 2] {
    let t2 = t * t;
    let t3 = t2 * t;
    core::array::from_fn(|k| {
        0.5 * (2.0 * p1[k]
            + (p2[k] - p0[k]) * t
            + (2.0 * p0[k] - 5.0 * p1[k] + 4.0 * p2[k] - p3[k]) * t2
            + (3.0 * p1[k] - p0[k] - 3.0 * p2[k] + p3[k]) * t3)
    })
}

/// Distance from `p` to segment `ab`.
fn segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let s = if len2 > 0.0 { ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0) } else { 0.0 };
    (ap[0] - s * ab[0]).hypot(ap[1] - s * ab[1])
}

/// Sets to `value` every grid cell whose center lies within `radius` pixels of
/// the polyline through `pts` (pixel coordinates).
fn paint_polyline(grid: &mut [f32], size: usize, pts: &[[f64; 2]], radius: f64, value: f32) {
    let segments: Vec<([f64; 2], [f64; 2])> = if pts.len() == 1 {
        vec![(pts[0], pts[0])]
    } else {
        pts.windows(2).map(|w| (w[0], w[1])).collect()
    };
    let last = size as f64 - 1.0;
    for (a, b) in segments {
        let c0 = (a[0].min(b[0]) - radius).ceil().max(0.0);
        let c1 = (a[0].max(b[0]) + radius).floor().min(last);
        let r0 = (a[1].min(b[1]) - radius).ceil().max(0.0);
        let r1 = (a[1].max(b[1]) + radius).floor().min(last);
        if !(c0 <= c1 && r0 <= r1) {
            continue;
        }
        for row in r0 as usize..=r1 as usize {
            for col in c0 as usize..=c1 as usize {
                if segment_distance([col as f64, row as f64], a, b) <= radius {
                    grid[row * size + col] = value;
                }
            }
        }
    }
}

/// Table-frame centerline of a random smooth stroke.
fn stroke_centerline<R: RngCore + ?Sized>(params: &SpawnParams, rng: &mut R) -> Vec<[f64; 2]> {
    let b = &params.table_bounds;
    let length = uniform(rng, params.stroke_length[0], params.stroke_length[1]);
    let m = params.stroke_margin(length);
    let center = [uniform(rng, b.x_min + m, b.x_max - m), uniform(rng, b.y_min + m, b.y_max - m)];
    let angle = uniform(rng, 0.0, core::f64::consts::PI);
    let (dir, normal) = ([angle.cos(), angle.sin()], [-angle.sin(), angle.cos()]);
    let n_way: usize = 4;
    let way: Vec<[f64; 2]> = (0..n_way)
        .map(|i| {
            let s = length * (i as f64 / (n_way - 1) as f64 - 0.5);
            let lateral = if i == 0 || i + 1 == n_way {
                0.0
            } else {
                uniform(rng, -params.stroke_bend * length, params.stroke_bend * length)
            };
            [center[0] + s * dir[0] + lateral * normal[0], center[1] + s * dir[1] + lateral * normal[1]]
        })
        .collect();
    let mut out = Vec::new();
    for i in 0..n_way - 1 {
        let p0 = way[i.saturating_sub(1)];
        let p3 = way[(i + 2).min(n_way - 1)];
        for k in 0..20 {
            out.push(catmull_rom(p0, way[i], way[i + 1], p3, k as f64 / 20.0));
        }
    }
    out.push(way[n_way - 1]);
    out
}

/// Random marker stroke or lentil cluster on an otherwise clean table.
pub fn spawn_scene<R: RngCore + ?Sized>(kind: DirtType, params: &SpawnParams, rng: &mut R) -> Result<Scene, SimError> {
    params.validate()?;
    let b = params.table_bounds;
    match kind {
        DirtType::Marker => {
            let line: Vec<[f64; 2]> = stroke_centerline(params, rng)
                .into_iter()
                .map(|p| {
                    let px = table_to_virtual(TablePoint::new(p[0], p[1]), params.scale_h);
                    [px.x, px.y]
                })
                .collect();
            let mut ink = vec![0.0; params.size * params.size];
            paint_polyline(&mut ink, params.size, &line, 0.5 * params.stroke_width_px, 1.0);
            Scene::marker(ink, params.size, params.scale_h, b, params.sponge_radius)
        }
        DirtType::Lentils => {
            let m = 3.0 * params.lentil_spread;
            let center = [uniform(rng, b.x_min + m, b.x_max - m), uniform(rng, b.y_min + m, b.y_max - m)];
            let mut particles = Vec::with_capacity(params.lentil_count);
            while particles.len() < params.lentil_count {
                let gx: f64 = StandardNormal.sample(rng);
                let gy: f64 = StandardNormal.sample(rng);
                if gx.hypot(gy) <= 3.0 {
                    let p = [center[0] + params.lentil_spread * gx, center[1] + params.lentil_spread * gy];
                    particles.push(b.clamp(TablePoint::new(p[0], p[1])).to_array());
                }
            }
            Scene::lentils(particles, params.size, params.scale_h, b, params.sponge_radius)
        }
    }
}

fn blend(base: Rgb, top: Rgb, alpha: f32) -> Rgb {
    core::array::from_fn(|c| base[c] + alpha * (top[c] - base[c]))
}

/// Bird-view image of the scene.
pub fn render_scene(scene: &Scene) -> VirtualImage {
    let s = scene.size;
    let h = scene.scale_h;
    let style = &scene.style;
    let b = scene.table_bounds;
    let tol = 1e-9;
    let mut raster = RgbImage::from_fn(s, s, |col, row| {
        let (x, y) = (row as f64 / h - crate::geometry::X_OFFSET, col as f64 / h - crate::geometry::Y_OFFSET);
        let on_table = x >= b.x_min - tol && x <= b.x_max + tol && y >= b.y_min - tol && y <= b.y_max + tol;
        let base = if on_table { style.table } else { style.background };
        let a = scene.ink[row * s + col];
        if a > 0.0 {
            blend(base, style.ink, a)
        } else {
            base
        }
    });
    let r = style.lentil_radius_px;
    let last = s as f64 - 1.0;
    for p in &scene.particles {
        let q = table_to_virtual(TablePoint::new(p[0], p[1]), h);
        let c0 = (q.x - r).ceil().max(0.0);
        let c1 = (q.x + r).floor().min(last);
        let r0 = (q.y - r).ceil().max(0.0);
        let r1 = (q.y + r).floor().min(last);
        if !(c0 <= c1 && r0 <= r1) {
            continue;
        }
        for row in r0 as usize..=r1 as usize {
            for col in c0 as usize..=c1 as usize {
                if (col as f64 - q.x).hypot(row as f64 - q.y) <= r {
                    raster.set(col, row, style.lentil);
                }
            }
        }
    }
    VirtualImage::new(raster, h).expect("rendered colors stay in range")
}

fn push_out(p: &mut [f64; 2], c: [f64; 2], r: f64, motion: [f64; 2]) {
    let d = [p[0] - c[0], p[1] - c[1]];
    let dist = d[0].hypot(d[1]);
    if dist >= r {
        return;
    }
    if dist > 1e-12 {
        p[0] = c[0] + d[0] * r / dist;
        p[1] = c[1] + d[1] * r / dist;
    } else {
        // dead center: leave along the left normal of the motion
        let m = motion[0].hypot(motion[1]);
        let n = if m > 0.0 { [-motion[1] / m, motion[0] / m] } else { [1.0, 0.0] };
        p[0] = c[0] + r * n[0];
        p[1] = c[1] + r * n[1];
    }
}

/// Sweeps the sponge along the trajectory. Ink under the swept capsules is
/// erased; lentils touched by the moving disc are pushed to its rim.
pub fn execute_trajectory(scene: &Scene, traj: &Trajectory) -> Scene {
    let mut out = scene.clone();
    let pts: Vec<[f64; 2]> = traj.positions().collect();
    match scene.kind {
        DirtType::Marker => {
            let line: Vec<[f64; 2]> = pts
                .iter()
                .map(|p| {
                    let q = table_to_virtual(TablePoint::new(p[0], p[1]), scene.scale_h);
                    [q.x, q.y]
                })
                .collect();
            paint_polyline(&mut out.ink, scene.size, &line, scene.sponge_radius * scene.scale_h, 0.0);
        }
        DirtType::Lentils => {
            let r = scene.sponge_radius;
            let step = r * scene.push_step;
            let bounds = scene.table_bounds;
            let settle = |parts: &mut [[f64; 2]], c: [f64; 2], motion: [f64; 2]| {
                for p in parts.iter_mut() {
                    push_out(p, c, r, motion);
                    *p = bounds.clamp(TablePoint::new(p[0], p[1])).to_array();
                }
            };
            if let Some(first) = pts.first() {
                let motion = pts.get(1).map(|q| [q[0] - first[0], q[1] - first[1]]).unwrap_or([0.0, 0.0]);
                settle(&mut out.particles, *first, motion);
            }
            for w in pts.windows(2) {
                let d = [w[1][0] - w[0][0], w[1][1] - w[0][1]];
                let n = ((d[0].hypot(d[1]) / step).ceil() as usize).max(1);
                for k in 1..=n {
                    let s = k as f64 / n as f64;
                    settle(&mut out.particles, [w[0][0] + s * d[0], w[0][1] + s * d[1]], d);
                }
            }
        }
    }
    out
}

/// A per-repetition percentage series; the first entry is exactly 100.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSeries {
    pub values: Vec<f64>,
}

impl MetricSeries {
    fn relative(raw: &[f64], zero: SimError) -> Result<Self, SimError> {
        let first = *raw.first().ok_or(SimError::ParamsOutOfBounds("no repetitions"))?;
        if !(first > 0.0) {
            return Err(zero);
        }
        let values = raw
            .iter()
            .enumerate()
            .map(|(i, v)| if i == 0 { 100.0 } else { 100.0 * v / first })
            .collect();
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn last(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

/// `m1(r) = 100·A(r)/A(1)`.
pub fn metric_m1(areas: &[f64]) -> Result<MetricSeries, SimError> {
    MetricSeries::relative(areas, SimError::ZeroInitialArea)
}

/// `D = Σ ‖i − o‖` over the dirty pixels `i`.
pub fn dirt_distance(mask: &DirtMask, o: Pixel) -> f64 {
    mask.pixels().map(|(c, r)| (c as f64 - o.x).hypot(r as f64 - o.y)).sum()
}

/// `m2(r) = 100·D(r)/D(1)`.
pub fn metric_m2(masks: &[DirtMask], o: Pixel) -> Result<MetricSeries, SimError> {
    let d: Vec<f64> = masks.iter().map(|m| dirt_distance(m, o)).collect();
    metric_m2_from_distances(&d)
}

/// `m2(r) = 100·D(r)/D(1)` from precomputed distance sums.
pub fn metric_m2_from_distances(distances: &[f64]) -> Result<MetricSeries, SimError> {
    MetricSeries::relative(distances, SimError::ZeroInitialDistance)
}

/// Frame predictor plus trained model.
pub struct Pipeline<'a> {
    pub predictor: &'a dyn FramePredictor,
    pub model: &'a TpGmmModel,
    pub colors: &'a ColorConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    /// m1 for marker scenes, m2 for lentil scenes.
    pub series: MetricSeries,
    /// `A(r)` or `D(r)` before each repetition.
    pub raw: Vec<f64>,
    /// Executed trajectory per repetition; `None` when no dirt was seen.
    pub trajectories: Vec<Option<Trajectory>>,
    pub final_scene: Scene,
}

impl Episode {
    pub fn metric_name(&self) -> &'static str {
        match self.final_scene.kind {
            DirtType::Marker => "m1",
            DirtType::Lentils => "m2",
        }
    }
}

fn measure(scene: &Scene, image: &VirtualImage, colors: &ColorConfig) -> f64 {
    match scene.kind {
        DirtType::Marker => scene.ink_area() as f64,
        DirtType::Lentils => dirt_distance(&segment_dirt(image, colors), scene.target_pixel()),
    }
}

/// Plans a trajectory from the rendered scene; `None` when the table looks clean.
pub fn plan_trajectory(image: &VirtualImage, pipeline: &Pipeline<'_>) -> Result<Option<Trajectory>, SimError> {
    let pred = match pipeline.predictor.predict(image) {
        Ok(p) => p,
        Err(PerceptionError::EmptyDirtMask) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let frames = reference_frames(pred.b1.to_array(), pred.b2.to_array(), pred.b3.to_array())?;
    Ok(Some(gmr_trajectory(pipeline.model, &frames, TRAJECTORY_LEN)?))
}

/// Runs `n_reps` render → predict → generate → execute cycles. The metric of
/// repetition `r` is measured on the table as it is seen at the start of that
/// repetition.
pub fn run_episode(scene: &Scene, pipeline: &Pipeline<'_>, n_reps: usize) -> Result<Episode, SimError> {
    if n_reps == 0 {
        return Err(SimError::ParamsOutOfBounds("at least one repetition"));
    }
    let mut current = scene.clone();
    let mut raw = Vec::with_capacity(n_reps);
    let mut trajectories = Vec::with_capacity(n_reps);
    for r in 0..n_reps {
        let image = render_scene(&current);
        raw.push(measure(&current, &image, pipeline.colors));
        if r == 0 && !(raw[0] > 0.0) {
            return Err(match current.kind {
                DirtType::Marker => SimError::ZeroInitialArea,
                DirtType::Lentils => SimError::ZeroInitialDistance,
            });
        }
        let traj = plan_trajectory(&image, pipeline).map_err(|e| SimError::Repetition { index: r + 1, source: Box::new(e) })?;
        if let Some(t) = &traj {
            current = execute_trajectory(&current, t);
        }
        trajectories.push(traj);
    }
    let series = match scene.kind {
        DirtType::Marker => metric_m1(&raw)?,
        DirtType::Lentils => metric_m2_from_distances(&raw)?,
    };
    Ok(Episode { series, raw, trajectories, final_scene: current })
}
