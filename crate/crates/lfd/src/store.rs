//! Saving and loading whole datasets.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tabletop_core::dataset::{Dataset, Demonstration};
use tabletop_core::image::VirtualImage;
use tabletop_core::perception::DirtType;
use tabletop_core::tpgmm::{frames_from_trajectory, DemoView, ReferenceFrame, Trajectory, TRAJECTORY_LEN};

use crate::formats::manifest::{base_dir, Manifest, ManifestSample, MANIFEST_FILE};
use crate::formats::png::{read_png, write_png};
use crate::formats::trajectory::{read_trajectory, write_trajectory};
use crate::LfdError;

/// Relative image and trajectory paths of sample `index` in a dataset of `total`
/// samples; indices are zero-padded to at least three digits.
pub fn sample_paths(index: usize, total: usize) -> (String, String) {
    let width = total.saturating_sub(1).to_string().len().max(3);
    (format!("imgs/{index:0width$}.png"), format!("traj/{index:0width$}.csv"))
}

/// Writes one sample's files under `dir` and returns its manifest entry.
pub fn write_sample(dir: &Path, index: usize, total: usize, demo: &Demonstration) -> Result<ManifestSample, LfdError> {
    let (image, trajectory) = sample_paths(index, total);
    write_png(&dir.join(&image), demo.image().raster())?;
    write_trajectory(&dir.join(&trajectory), demo.trajectory())?;
    Ok(ManifestSample { image, trajectory, dirt_type: demo.dirt_type() })
}

/// Writes `dir/manifest.json` plus every image and trajectory; returns the
/// manifest path.
pub fn save_dataset(ds: &Dataset, dir: &Path, seed: Option<u64>) -> Result<PathBuf, LfdError> {
    std::fs::create_dir_all(dir).map_err(|e| LfdError::io(dir, e))?;
    let total = ds.len();
    let samples = ds
        .samples()
        .par_iter()
        .enumerate()
        .map(|(i, d)| write_sample(dir, i, total, d))
        .collect::<Result<Vec<_>, _>>()?;
    let mut manifest = Manifest::new(ds.scale_h(), ds.image_size());
    manifest.seed = seed;
    manifest.samples = samples;
    let path = dir.join(MANIFEST_FILE);
    manifest.write(&path)?;
    Ok(path)
}

/// Accepts a manifest file or a directory containing `manifest.json`.
pub fn manifest_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(MANIFEST_FILE)
    } else {
        path.to_path_buf()
    }
}

fn check_trajectory(traj: &Trajectory, path: &Path) -> Result<(), LfdError> {
    if traj.len() != TRAJECTORY_LEN {
        return Err(LfdError::InvariantViolation(format!(
            "{}: trajectory has {} samples, expected {TRAJECTORY_LEN}",
            path.display(),
            traj.len()
        )));
    }
    Ok(())
}

fn load_sample(base: &Path, m: &Manifest, s: &ManifestSample) -> Result<Demonstration, LfdError> {
    let img_path = base.join(&s.image);
    let traj_path = base.join(&s.trajectory);
    let traj = read_trajectory(&traj_path)?;
    check_trajectory(&traj, &traj_path)?;
    let raster = read_png(&img_path)?;
    if raster.width() != m.image_size || raster.height() != m.image_size {
        return Err(LfdError::InvariantViolation(format!(
            "{}: image is {}×{}, manifest says {}",
            img_path.display(),
            raster.width(),
            raster.height(),
            m.image_size
        )));
    }
    let image = VirtualImage::new(raster, m.scale_h).map_err(|e| LfdError::parse(&img_path, e.to_string()))?;
    Ok(Demonstration::new(image, traj, s.dirt_type)?)
}

pub fn load_dataset(path: &Path) -> Result<Dataset, LfdError> {
    let path = manifest_path(path);
    let m = Manifest::read(&path)?;
    let base = base_dir(&path);
    let samples = m.samples.par_iter().map(|s| load_sample(&base, &m, s)).collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset::from_samples(m.scale_h, m.image_size, samples)?)
}

/// A demonstration without its image.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub trajectory: Trajectory,
    pub frames: [ReferenceFrame; 3],
    pub dirt_type: DirtType,
}

impl TrajectoryRecord {
    pub fn new(trajectory: Trajectory, dirt_type: DirtType) -> Result<Self, LfdError> {
        let frames = frames_from_trajectory(&trajectory)?;
        Ok(Self { trajectory, frames, dirt_type })
    }

    pub fn view(&self) -> DemoView<'_> {
        DemoView { trajectory: &self.trajectory, frames: &self.frames }
    }
}

impl From<&Demonstration> for TrajectoryRecord {
    fn from(d: &Demonstration) -> Self {
        Self { trajectory: d.trajectory().clone(), frames: *d.frames(), dirt_type: d.dirt_type() }
    }
}

/// Loads trajectories only; image files must exist but are not decoded.
pub fn load_trajectories(path: &Path) -> Result<Vec<TrajectoryRecord>, LfdError> {
    let path = manifest_path(path);
    let m = Manifest::read(&path)?;
    let base = base_dir(&path);
    m.samples
        .par_iter()
        .map(|s| {
            let img_path = base.join(&s.image);
            if !img_path.is_file() {
                return Err(LfdError::MissingFile(img_path));
            }
            let traj_path = base.join(&s.trajectory);
            let traj = read_trajectory(&traj_path)?;
            check_trajectory(&traj, &traj_path)?;
            TrajectoryRecord::new(traj, s.dirt_type)
        })
        .collect()
}

/// Streams `n` synthetic demonstrations straight to `dir` and writes the
/// manifest; demonstration `i` depends only on `(seed, i)`.
pub fn generate_to_dir(
    n: usize,
    cfg: &tabletop_core::dataset::SyntheticConfig,
    seed: u64,
    dir: &Path,
) -> Result<PathBuf, LfdError> {
    std::fs::create_dir_all(dir).map_err(|e| LfdError::io(dir, e))?;
    let samples = (0..n)
        .into_par_iter()
        .map(|i| {
            let demo = tabletop_core::dataset::synthetic_demonstration_at(i, cfg, seed)?;
            write_sample(dir, i, n, &demo)
        })
        .collect::<Result<Vec<_>, LfdError>>()?;
    let mut manifest = Manifest::new(cfg.spawn.scale_h, cfg.spawn.size);
    manifest.seed = Some(seed);
    manifest.samples = samples;
    let path = dir.join(MANIFEST_FILE);
    manifest.write(&path)?;
    Ok(path)
}

/// Augments the dataset behind `input` sample by sample, writing the originals
/// and their copies to `dir`. Output sample `i·c + k` is copy `k` of input
/// sample `i`, where `c` is the number of outputs per input.
pub fn augment_to_dir(
    input: &Path,
    plan: &tabletop_core::augment::AugmentPlan,
    settings: &tabletop_core::augment::AugmentSettings,
    dir: &Path,
) -> Result<PathBuf, LfdError> {
    use tabletop_core::augment::{augment_demonstration, AugmentError};

    let in_path = manifest_path(input);
    let m = Manifest::read(&in_path)?;
    let base = base_dir(&in_path);
    std::fs::create_dir_all(dir).map_err(|e| LfdError::io(dir, e))?;
    let copies = plan.copies_per_sample();
    let total = m.samples.len() * copies;
    let per_input = m
        .samples
        .par_iter()
        .enumerate()
        .map(|(i, s)| {
            let demo = load_sample(&base, &m, s)?;
            let mut out = Vec::with_capacity(copies);
            let mut failed = None;
            augment_demonstration(&demo, i, plan, settings, |d| {
                if failed.is_none() {
                    match write_sample(dir, i * copies + out.len(), total, &d) {
                        Ok(entry) => out.push(entry),
                        Err(e) => failed = Some(e),
                    }
                }
            })
            .map_err(|e| LfdError::Augment(AugmentError::Sample { index: i, source: Box::new(e) }))?;
            match failed {
                Some(e) => Err(e),
                None => Ok(out),
            }
        })
        .collect::<Result<Vec<_>, LfdError>>()?;
    let mut manifest = Manifest::new(m.scale_h, m.image_size);
    manifest.seed = Some(plan.master_seed);
    manifest.colors = m.colors.clone();
    manifest.samples = per_input.into_iter().flatten().collect();
    let path = dir.join(MANIFEST_FILE);
    manifest.write(&path)?;
    Ok(path)
}
