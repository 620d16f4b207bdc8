//! Demonstrations, datasets, and the synthetic demonstration generator.
//!
//! A synthetic demonstration is built the way a teacher would act on a scene:
//! the three frame origins a baseline predictor reads off the rendered table are
//! perturbed, joined by a smooth curve, and sampled at 200 uniform times with a
//! little path noise.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use rand::seq::SliceRandom;
use rand::RngCore;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::image::VirtualImage;
use crate::linalg::Vec2;
use crate::perception::{BaselinePredictor, DirtType, FramePredictor, PerceptionError};
use crate::seed::{child_rng, rng_from_seed};
use crate::simulator::{render_scene, spawn_scene, SimError, SpawnParams};
use crate::tpgmm::{frames_from_trajectory, DemoView, ReferenceFrame, TpGmmError, Trajectory, TRAJECTORY_LEN};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("{0}")]
    InvariantViolation(String),
    #[error(transparent)]
    TpGmm(#[from] TpGmmError),
    #[error(transparent)]
    Perception(#[from] PerceptionError),
    #[error(transparent)]
    Simulator(#[from] SimError),
}

impl DatasetError {
    pub fn code(&self) -> &'static str {
        match self {
            DatasetError::InvariantViolation(_) => "InvariantViolation",
            DatasetError::TpGmm(e) => e.code(),
            DatasetError::Perception(e) => e.code(),
            DatasetError::Simulator(e) => e.code(),
        }
    }
}

/// One image with the trajectory demonstrated on it.
#[derive(Debug, Clone, PartialEq)]
pub struct Demonstration {
    image: VirtualImage,
    trajectory: Trajectory,
    frames: [ReferenceFrame; 3],
    dirt_type: DirtType,
}

impl Demonstration {
    /// Derives the frames from the trajectory's start, middle and end samples.
    pub fn new(image: VirtualImage, trajectory: Trajectory, dirt_type: DirtType) -> Result<Self, DatasetError> {
        if trajectory.len() != TRAJECTORY_LEN {
            return Err(DatasetError::InvariantViolation(format!(
                "trajectory has {} samples, expected {TRAJECTORY_LEN}",
                trajectory.len()
            )));
        }
        let frames = frames_from_trajectory(&trajectory)?;
        Ok(Self { image, trajectory, frames, dirt_type })
    }

    pub fn image(&self) -> &VirtualImage {
        &self.image
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn frames(&self) -> &[ReferenceFrame; 3] {
        &self.frames
    }

    pub fn dirt_type(&self) -> DirtType {
        self.dirt_type
    }

    pub fn view(&self) -> DemoView<'_> {
        DemoView { trajectory: &self.trajectory, frames: &self.frames }
    }

    pub fn into_parts(self) -> (VirtualImage, Trajectory, DirtType) {
        (self.image, self.trajectory, self.dirt_type)
    }
}

/// Demonstrations sharing one image size and scale.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    scale_h: f64,
    image_size: usize,
    samples: Vec<Demonstration>,
}

impl Dataset {
    pub fn new(scale_h: f64, image_size: usize) -> Self {
        Self { scale_h, image_size, samples: Vec::new() }
    }

    pub fn from_samples(scale_h: f64, image_size: usize, samples: Vec<Demonstration>) -> Result<Self, DatasetError> {
        let mut ds = Self::new(scale_h, image_size);
        ds.samples.reserve(samples.len());
        for s in samples {
            ds.push(s)?;
        }
        Ok(ds)
    }

    pub fn push(&mut self, demo: Demonstration) -> Result<(), DatasetError> {
        let img = demo.image();
        if img.size() != self.image_size || img.scale_h() != self.scale_h {
            return Err(DatasetError::InvariantViolation(format!(
                "sample {} is {}px at scale {}, dataset is {}px at scale {}",
                self.samples.len(),
                img.size(),
                img.scale_h(),
                self.image_size,
                self.scale_h
            )));
        }
        self.samples.push(demo);
        Ok(())
    }

    pub fn scale_h(&self) -> f64 {
        self.scale_h
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn samples(&self) -> &[Demonstration] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Demonstration> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn views(&self) -> Vec<DemoView<'_>> {
        self.samples.iter().map(Demonstration::view).collect()
    }

    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            scale_h: self.scale_h,
            image_size: self.image_size,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    /// `(train, validation)` split; see [`split_indices`].
    pub fn split(&self, validation_fraction: f64, seed: u64) -> (Self, Self) {
        let (train, val) = split_indices(self.len(), validation_fraction, seed);
        (self.subset(&train), self.subset(&val))
    }
}

/// Shuffles `0..n` with `seed` and returns `(train, validation)` index lists,
/// the validation part holding `round(n · fraction)` indices.
pub fn split_indices(n: usize, validation_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut rng_from_seed(seed));
    let n_val = ((n as f64 * validation_fraction.clamp(0.0, 1.0)).round() as usize).min(n);
    let val = idx.split_off(n - n_val);
    (idx, val)
}

/// Which dirt kinds the generator produces.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KindSelection {
    Only(DirtType),
    /// Marker for even indices, lentils for odd ones.
    Alternate,
}

impl KindSelection {
    pub fn kind_at(&self, index: usize) -> DirtType {
        match self {
            KindSelection::Only(k) => *k,
            KindSelection::Alternate if index % 2 == 0 => DirtType::Marker,
            KindSelection::Alternate => DirtType::Lentils,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticConfig {
    pub spawn: SpawnParams,
    pub predictor: BaselinePredictor,
    pub kinds: KindSelection,
    /// Standard deviation of the Gaussian perturbation of each frame origin, meters.
    pub frame_noise: f64,
    /// Standard deviation of the smooth path perturbation amplitudes, meters.
    pub path_noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            spawn: SpawnParams::default(),
            predictor: BaselinePredictor::default(),
            kinds: KindSelection::Alternate,
            frame_noise: 0.01,
            path_noise: 0.003,
        }
    }
}

impl SyntheticConfig {
    pub fn with_kinds(mut self, kinds: KindSelection) -> Self {
        self.kinds = kinds;
        self
    }

    pub fn noiseless(mut self) -> Self {
        self.frame_noise = 0.0;
        self.path_noise = 0.0;
        self
    }
}

/// Point at time `t ∈ [0, 1]` on the curve through `b1` (t = 0), `b2` (t = ½)
/// and `b3` (t = 1): a quadratic on each half, sharing the velocity `b3 − b1`
/// at `b2`.
pub fn demo_curve(b1: Vec2, b2: Vec2, b3: Vec2, t: f64) -> Vec2 {
    let v = [b3[0] - b1[0], b3[1] - b1[1]];
    if t <= 0.5 {
        let s = 2.0 * t;
        core::array::from_fn(|k| {
            let d = b2[k] - b1[k];
            let c = 0.5 * v[k] - d;
            let b = 2.0 * d - 0.5 * v[k];
            b1[k] + b * s + c * s * s
        })
    } else {
        let s = 2.0 * t - 1.0;
        core::array::from_fn(|k| b2[k] + 0.5 * v[k] * s + (b3[k] - b2[k] - 0.5 * v[k]) * s * s)
    }
}

fn normal_or_zero(sigma: f64) -> Option<Normal<f64>> {
    (sigma > 0.0).then(|| Normal::new(0.0, sigma).expect("finite positive deviation"))
}

/// Trajectory of `TRAJECTORY_LEN` samples along [`demo_curve`], perturbed by
/// `Σₖ aₖ sin(2πkt)` (k = 1..3) per axis, which vanishes at `t = 0, ½, 1`.
pub fn synthetic_trajectory<R: RngCore + ?Sized>(b: [Vec2; 3], path_noise: f64, rng: &mut R) -> Result<Trajectory, DatasetError> {
    let mut amps = [[0.0; 2]; 3];
    if let Some(dist) = normal_or_zero(path_noise) {
        for a in amps.iter_mut().flatten() {
            *a = dist.sample(rng);
        }
    }
    let n = TRAJECTORY_LEN;
    let points: Vec<Vec2> = (0..n)
        .map(|i| {
            let t = crate::tpgmm::uniform_time(i, n);
            let mut p = demo_curve(b[0], b[1], b[2], t);
            for (k, a) in amps.iter().enumerate() {
                let w = (2.0 * core::f64::consts::PI * (k + 1) as f64 * t).sin();
                p[0] += a[0] * w;
                p[1] += a[1] * w;
            }
            p
        })
        .collect();
    Ok(Trajectory::from_positions(&points)?)
}

/// One synthetic demonstration on a freshly spawned scene.
pub fn synthetic_demonstration<R: RngCore + ?Sized>(
    kind: DirtType,
    cfg: &SyntheticConfig,
    rng: &mut R,
) -> Result<Demonstration, DatasetError> {
    let scene = spawn_scene(kind, &cfg.spawn, rng)?;
    let image = render_scene(&scene);
    let pred = cfg.predictor.predict(&image)?;
    let mut b = pred.origins();
    if let Some(dist) = normal_or_zero(cfg.frame_noise) {
        for v in b.iter_mut().flatten() {
            *v += dist.sample(rng);
        }
    }
    let trajectory = synthetic_trajectory(b, cfg.path_noise, rng)?;
    Demonstration::new(image, trajectory, kind)
}

/// Streams `n` synthetic demonstrations; demonstration `i` depends only on
/// `(seed, i)`.
pub fn generate_synthetic_for_each(
    n: usize,
    cfg: &SyntheticConfig,
    seed: u64,
    mut emit: impl FnMut(usize, Demonstration),
) -> Result<(), DatasetError> {
    for i in 0..n {
        emit(i, synthetic_demonstration_at(i, cfg, seed)?);
    }
    Ok(())
}

/// Demonstration `index` of the stream produced by [`generate_synthetic_for_each`].
pub fn synthetic_demonstration_at(index: usize, cfg: &SyntheticConfig, seed: u64) -> Result<Demonstration, DatasetError> {
    let mut rng = child_rng(seed, &[index as u64]);
    synthetic_demonstration(cfg.kinds.kind_at(index), cfg, &mut rng)
}

pub fn generate_synthetic_demos(n: usize, cfg: &SyntheticConfig, seed: u64) -> Result<Dataset, DatasetError> {
    let mut ds = Dataset::new(cfg.spawn.scale_h, cfg.spawn.size);
    let mut samples = Vec::with_capacity(n);
    generate_synthetic_for_each(n, cfg, seed, |_, d| samples.push(d))?;
    for s in samples {
        ds.push(s)?;
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_passes_through_its_three_points() {
        let (b1, b2, b3) = ([0.1, -0.2], [0.3, 0.05], [0.2, 0.4]);
        assert_eq!(demo_curve(b1, b2, b3, 0.0), b1);
        let mid = demo_curve(b1, b2, b3, 0.5);
        assert!((mid[0] - b2[0]).abs() < 1e-15 && (mid[1] - b2[1]).abs() < 1e-15);
        let end = demo_curve(b1, b2, b3, 1.0);
        assert!((end[0] - b3[0]).abs() < 1e-15 && (end[1] - b3[1]).abs() < 1e-15);
    }

    #[test]
    fn curve_velocity_is_continuous_at_the_middle() {
        let (b1, b2, b3) = ([0.1, -0.2], [0.3, 0.05], [0.2, 0.4]);
        let h = 1e-6;
        let left = demo_curve(b1, b2, b3, 0.5 - h);
        let right = demo_curve(b1, b2, b3, 0.5 + h);
        let mid = demo_curve(b1, b2, b3, 0.5);
        for k in 0..2 {
            let dl = (mid[k] - left[k]) / h;
            let dr = (right[k] - mid[k]) / h;
            assert!((dl - dr).abs() < 1e-4, "{dl} vs {dr}");
        }
    }

    #[test]
    fn split_is_a_partition() {
        let (train, val) = split_indices(10, 0.2, 5);
        assert_eq!(val.len(), 2);
        let mut all: Vec<usize> = train.iter().chain(&val).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert_eq!(split_indices(10, 0.2, 5), (train, val));
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let traj = Trajectory::from_positions(&[[0.0, 0.0], [0.1, 0.0], [0.2, 0.1]]).unwrap();
        let img = VirtualImage::filled(4, 4.0, [1.0; 3]).unwrap();
        let err = Demonstration::new(img, traj, DirtType::Marker).unwrap_err();
        assert_eq!(err.code(), "InvariantViolation");
    }

    #[test]
    fn alternating_kinds() {
        assert_eq!(KindSelection::Alternate.kind_at(0), DirtType::Marker);
        assert_eq!(KindSelection::Alternate.kind_at(3), DirtType::Lentils);
        assert_eq!(KindSelection::Only(DirtType::Lentils).kind_at(0), DirtType::Lentils);
    }
}
