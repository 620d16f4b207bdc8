//! Batch experiments: the demonstration-count learning curve and simulated
//! cleaning episodes.

use rayon::prelude::*;
use tabletop_core::dataset::split_indices;
use tabletop_core::perception::{BaselinePredictor, ColorConfig, DirtType};
use tabletop_core::seed::{child_rng, derive_seed};
use tabletop_core::simulator::{run_episode, spawn_scene, Episode, Pipeline, SpawnParams};
use tabletop_core::tpgmm::{em_fit, gmr_trajectory, DemoView, EmConfig, TpGmmModel, DEFAULT_COMPONENTS};

use rand::seq::SliceRandom;

use crate::store::TrajectoryRecord;
use crate::LfdError;

#[derive(Debug, Clone, PartialEq)]
pub struct CurveConfig {
    /// Training-set sizes to evaluate.
    pub counts: Vec<usize>,
    /// Independent training draws per count.
    pub trials: usize,
    /// Share of the demonstrations held out for evaluation.
    pub validation_fraction: f64,
    pub components: usize,
    pub em: EmConfig,
    pub seed: u64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        Self {
            counts: (1..=8).map(|k| 10 * k).collect(),
            trials: 10,
            validation_fraction: 0.2,
            components: DEFAULT_COMPONENTS,
            em: EmConfig::default(),
            seed: tabletop_core::seed::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurvePoint {
    pub count: usize,
    /// Mean held-out RMS error of each trial, meters.
    pub errors: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation over trials (0 for a single trial).
    pub stddev: f64,
}

pub fn mean_stddev(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = if v.len() > 1 { (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, sd)
}

/// Mean RMS distance between each held-out demonstration and the trajectory the
/// model generates for that demonstration's frames.
pub fn held_out_error(model: &TpGmmModel, held_out: &[&TrajectoryRecord]) -> Result<f64, LfdError> {
    let mut total = 0.0;
    for r in held_out {
        let generated = gmr_trajectory(model, &r.frames, r.trajectory.len())?;
        total += generated.rms_error(&r.trajectory).expect("same sample count");
    }
    Ok(total / held_out.len() as f64)
}

/// For every count, fits `trials` models on random training subsets of that size
/// and scores them on one fixed validation split.
pub fn demos_curve(records: &[TrajectoryRecord], cfg: &CurveConfig) -> Result<Vec<CurvePoint>, LfdError> {
    if cfg.trials == 0 || cfg.counts.is_empty() {
        return Err(LfdError::InvalidArgument("need at least one count and one trial".into()));
    }
    let (train, val) = split_indices(records.len(), cfg.validation_fraction, cfg.seed);
    if val.is_empty() {
        return Err(LfdError::InvalidArgument("validation split is empty".into()));
    }
    if let Some(&too_many) = cfg.counts.iter().find(|&&c| c == 0 || c > train.len()) {
        return Err(LfdError::InvalidArgument(format!("count {too_many} outside 1..={} training demonstrations", train.len())));
    }
    let held_out: Vec<&TrajectoryRecord> = val.iter().map(|&i| &records[i]).collect();
    let jobs: Vec<(usize, usize)> = cfg.counts.iter().flat_map(|&c| (0..cfg.trials).map(move |t| (c, t))).collect();
    let errors = jobs
        .par_iter()
        .map(|&(count, trial)| {
            let mut pool = train.clone();
            pool.shuffle(&mut child_rng(derive_seed(cfg.seed, &[1]), &[count as u64, trial as u64]));
            let views: Vec<DemoView<'_>> = pool[..count].iter().map(|&i| records[i].view()).collect();
            let model = em_fit(&views, cfg.components, &cfg.em)?;
            held_out_error(&model, &held_out)
        })
        .collect::<Result<Vec<f64>, LfdError>>()?;
    Ok(cfg
        .counts
        .iter()
        .enumerate()
        .map(|(k, &count)| {
            let errs = errors[k * cfg.trials..(k + 1) * cfg.trials].to_vec();
            let (mean, stddev) = mean_stddev(&errs);
            CurvePoint { count, errors: errs, mean, stddev }
        })
        .collect())
}

pub fn format_curve_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("count,trials,mean_rms_error,stddev_rms_error\n");
    for p in points {
        out.push_str(&format!("{},{},{},{}\n", p.count, p.errors.len(), p.mean, p.stddev));
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeConfig {
    pub kind: DirtType,
    pub episodes: usize,
    pub repetitions: usize,
    pub spawn: SpawnParams,
    pub predictor: BaselinePredictor,
    pub seed: u64,
}

impl EpisodeConfig {
    pub fn new(kind: DirtType, episodes: usize, repetitions: usize, seed: u64) -> Self {
        Self { kind, episodes, repetitions, spawn: SpawnParams::default(), predictor: BaselinePredictor::default(), seed }
    }
}

/// Episode `e` is spawned from `derive_seed(seed, [e])`; episodes run in parallel.
pub fn run_episodes(model: &TpGmmModel, cfg: &EpisodeConfig) -> Result<Vec<Episode>, LfdError> {
    let colors: &ColorConfig = &cfg.predictor.colors;
    (0..cfg.episodes)
        .into_par_iter()
        .map(|e| {
            let scene = spawn_scene(cfg.kind, &cfg.spawn, &mut child_rng(cfg.seed, &[e as u64]))?;
            let pipeline = Pipeline { predictor: &cfg.predictor, model, colors };
            Ok(run_episode(&scene, &pipeline, cfg.repetitions)?)
        })
        .collect()
}

/// Rows `episode,repetition,metric_name,value`, both indices starting at 1.
pub fn format_metrics_csv(episodes: &[Episode]) -> String {
    let mut out = String::from("episode,repetition,metric_name,value\n");
    for (e, ep) in episodes.iter().enumerate() {
        for (r, v) in ep.series.values.iter().enumerate() {
            out.push_str(&format!("{},{},{},{}\n", e + 1, r + 1, ep.metric_name(), v));
        }
    }
    out
}
