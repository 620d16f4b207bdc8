//! The `tabletop-lfd` command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tabletop_core::augment::{AugmentPlan, AugmentSettings};
use tabletop_core::dataset::{KindSelection, SyntheticConfig};
use tabletop_core::geometry::{estimate_homography, warp_image_with, TableBounds, WarpOptions, DEFAULT_IMAGE_SIZE};
use tabletop_core::image::VirtualImage;
use tabletop_core::perception::{segment_dirt, BaselinePredictor, ColorConfig, DirtType, FramePredictor};
use tabletop_core::seed::DEFAULT_SEED;
use tabletop_core::simulator::{dirt_distance, metric_m1, metric_m2_from_distances, MetricSeries, DEFAULT_REPETITIONS};
use tabletop_core::tpgmm::{em_fit, reference_frames, gmr_trajectory, EmConfig, TRAJECTORY_LEN};

use crate::experiment::{demos_curve, format_curve_csv, format_metrics_csv, run_episodes, CurveConfig, EpisodeConfig};
use crate::formats::calibration::{read_correspondences, read_homography, write_homography};
use crate::formats::colors::read_colors;
use crate::formats::model::{read_model, write_model};
use crate::formats::png::{read_png, write_png};
use crate::formats::trajectory::write_trajectory;
use crate::formats::write_text;
use crate::store::{augment_to_dir, generate_to_dir, load_trajectories};
use crate::LfdError;

#[derive(Debug, Parser)]
#[command(name = "tabletop-lfd", version, about = "Learn tabletop cleaning trajectories from demonstrations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Marker,
    Lentils,
}

impl From<KindArg> for DirtType {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Marker => DirtType::Marker,
            KindArg::Lentils => DirtType::Lentils,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MixArg {
    Marker,
    Lentils,
    /// Alternate marker and lentils.
    Mixed,
}

#[derive(Debug, Args)]
pub struct ColorArgs {
    /// Dirt color configuration (JSON); built-in defaults when omitted.
    #[arg(long)]
    pub colors: Option<PathBuf>,
}

impl ColorArgs {
    fn load(&self) -> Result<ColorConfig, LfdError> {
        match &self.colors {
            Some(p) => read_colors(p),
            None => Ok(ColorConfig::default()),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the camera-to-virtual homography from `sx sy tx ty` correspondences.
    Calibrate {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Warp a camera image onto the virtual bird-view plane.
    Warp {
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        homography: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IMAGE_SIZE)]
        size: usize,
        #[arg(long, default_value_t = DEFAULT_IMAGE_SIZE as f64)]
        scale_h: f64,
    },
    /// Expand a dataset with illumination, translation and Perlin-texture copies.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long = "n-ti", default_value_t = 10)]
        n_ti: usize,
        #[arg(long = "n-perlin", default_value_t = 10)]
        n_perlin: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[command(flatten)]
        colors: ColorArgs,
    },
    /// Generate synthetic demonstrations on random scenes.
    GenDemos {
        #[arg(long)]
        n: usize,
        #[arg(long, value_enum, default_value_t = MixArg::Mixed)]
        kind: MixArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Standard deviation of the frame-origin perturbation, meters.
        #[arg(long, default_value_t = 0.01)]
        frame_noise: f64,
        /// Standard deviation of the smooth path perturbation, meters.
        #[arg(long, default_value_t = 0.003)]
        path_noise: f64,
    },
    /// Fit a TP-GMM to a dataset's trajectories.
    FitGmm {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, short = 'k', default_value_t = 5)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 200)]
        max_iter: usize,
    },
    /// Predict the three frame origins for a virtual image.
    Predict {
        #[arg(long)]
        image: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IMAGE_SIZE as f64)]
        scale_h: f64,
        #[command(flatten)]
        colors: ColorArgs,
    },
    /// Generate a cleaning trajectory from a model and an image or explicit frame origins.
    GenTraj {
        #[arg(long)]
        model: PathBuf,
        /// Virtual image to predict the frame origins from.
        #[arg(long, conflicts_with = "frames", required_unless_present = "frames")]
        image: Option<PathBuf>,
        /// Frame origins `x1,y1,x2,y2,x3,y3` in meters.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        frames: Option<Vec<f64>>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = TRAJECTORY_LEN)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_IMAGE_SIZE as f64)]
        scale_h: f64,
        #[command(flatten)]
        colors: ColorArgs,
    },
    /// Run simulated cleaning episodes and record the per-repetition metric.
    Simulate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        reps: usize,
        #[arg(long, default_value_t = 15)]
        episodes: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        colors: ColorArgs,
    },
    /// Score a sequence of per-repetition virtual images (m1 for marker, m2 for lentils).
    Metrics {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long, num_args = 1.., required = true)]
        images: Vec<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_IMAGE_SIZE as f64)]
        scale_h: f64,
        /// Output CSV; printed to stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        colors: ColorArgs,
    },
    /// Batch experiments.
    #[command(subcommand)]
    Experiment(Experiment),
}

#[derive(Debug, Subcommand)]
pub enum Experiment {
    /// Held-out trajectory error against the number of training demonstrations.
    DemosCurve {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60,70,80")]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        trials: usize,
        #[arg(long, short = 'k', default_value_t = 5)]
        k: usize,
        #[arg(long, default_value_t = 0.2)]
        validation: f64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_seed(seed: u64) {
    println!("seed: {seed}");
}

fn load_virtual(path: &Path, scale_h: f64) -> Result<VirtualImage, LfdError> {
    let raster = read_png(path)?;
    VirtualImage::new(raster, scale_h).map_err(|e| LfdError::InvariantViolation(format!("{}: {e}", path.display())))
}

fn predictor(colors: ColorConfig) -> BaselinePredictor {
    BaselinePredictor { colors, ..BaselinePredictor::default() }
}

fn metric_series(kind: DirtType, images: &[VirtualImage], colors: &ColorConfig) -> Result<MetricSeries, LfdError> {
    let masks: Vec<_> = images.iter().map(|img| segment_dirt(img, colors)).collect();
    match kind {
        DirtType::Marker => {
            let areas: Vec<f64> = masks.iter().map(|m| m.count() as f64).collect();
            Ok(metric_m1(&areas)?)
        }
        DirtType::Lentils => {
            let scale_h = images[0].scale_h();
            let o = tabletop_core::geometry::table_to_virtual(TableBounds::DEFAULT.bottom_right(), scale_h);
            let d: Vec<f64> = masks.iter().map(|m| dirt_distance(m, o)).collect();
            Ok(metric_m2_from_distances(&d)?)
        }
    }
}

pub fn execute(cli: Cli) -> Result<(), LfdError> {
    crate::parallel::init_thread_pool().map_err(LfdError::InvalidArgument)?;
    match cli.command {
        Command::Calibrate { pairs, out } => {
            let h = estimate_homography(&read_correspondences(&pairs)?)?;
            write_homography(&out, &h)?;
            if h.is_affine_degenerate() {
                eprintln!("warning: bottom-right entry is near zero; matrix scaled to unit Frobenius norm");
            }
        }
        Command::Warp { image, homography, out, size, scale_h } => {
            let h = read_homography(&homography)?;
            let src = read_png(&image)?;
            let opts = WarpOptions { scale_h, ..WarpOptions::new(size) };
            let warped = warp_image_with(&src, &h, &opts)?;
            write_png(&out, warped.raster())?;
        }
        Command::Augment { manifest, out, n_ti, n_perlin, seed, colors } => {
            print_seed(seed);
            let plan = AugmentPlan::new(n_ti, n_perlin, seed);
            let settings = AugmentSettings { colors: colors.load()?, ..AugmentSettings::default() };
            let path = augment_to_dir(&manifest, &plan, &settings, &out)?;
            println!("wrote {}", path.display());
        }
        Command::GenDemos { n, kind, out, seed, frame_noise, path_noise } => {
            print_seed(seed);
            if !(frame_noise >= 0.0 && path_noise >= 0.0) {
                return Err(LfdError::InvalidArgument("noise levels must be non-negative".into()));
            }
            let kinds = match kind {
                MixArg::Marker => KindSelection::Only(DirtType::Marker),
                MixArg::Lentils => KindSelection::Only(DirtType::Lentils),
                MixArg::Mixed => KindSelection::Alternate,
            };
            let cfg = SyntheticConfig { kinds, frame_noise, path_noise, ..SyntheticConfig::default() };
            let path = generate_to_dir(n, &cfg, seed, &out)?;
            println!("wrote {}", path.display());
        }
        Command::FitGmm { manifest, k, out, max_iter } => {
            let records = load_trajectories(&manifest)?;
            let views: Vec<_> = records.iter().map(|r| r.view()).collect();
            let cfg = EmConfig { max_iterations: max_iter, ..EmConfig::default() };
            let model = em_fit(&views, k, &cfg)?;
            write_model(&out, &model)?;
            println!("fitted K={k} on {} demonstrations", records.len());
        }
        Command::Predict { image, scale_h, colors } => {
            let img = load_virtual(&image, scale_h)?;
            let colors = colors.load()?;
            let mask = segment_dirt(&img, &colors);
            let kind = tabletop_core::perception::classify_dirt(&img, &mask, &colors)?;
            let p = predictor(colors).predict(&img)?;
            println!(
                "{}",
                serde_json::json!({
                    "dirt_type": kind.name(),
                    "b1": p.b1.to_array(),
                    "b2": p.b2.to_array(),
                    "b3": p.b3.to_array(),
                })
            );
        }
        Command::GenTraj { model, image, frames, out, samples, scale_h, colors } => {
            let model = read_model(&model)?;
            let b = match (frames, image) {
                (Some(v), _) if v.len() == 6 => [[v[0], v[1]], [v[2], v[3]], [v[4], v[5]]],
                (Some(v), _) => return Err(LfdError::InvalidArgument(format!("--frames needs 6 numbers, got {}", v.len()))),
                (None, Some(path)) => predictor(colors.load()?).predict(&load_virtual(&path, scale_h)?)?.origins(),
                (None, None) => return Err(LfdError::InvalidArgument("give --image or --frames".into())),
            };
            let frames = reference_frames(b[0], b[1], b[2])?;
            write_trajectory(&out, &gmr_trajectory(&model, &frames, samples)?)?;
        }
        Command::Simulate { model, kind, reps, episodes, seed, out, colors } => {
            print_seed(seed);
            let model = read_model(&model)?;
            let mut cfg = EpisodeConfig::new(kind.into(), episodes, reps, seed);
            cfg.predictor = predictor(colors.load()?);
            let eps = run_episodes(&model, &cfg)?;
            write_text(&out, &format_metrics_csv(&eps))?;
            let finals: Vec<f64> = eps.iter().filter_map(|e| e.series.last()).collect();
            if !finals.is_empty() {
                let (mean, sd) = crate::experiment::mean_stddev(&finals);
                println!("final {}: {mean:.2} ± {sd:.2}", eps[0].metric_name());
            }
        }
        Command::Metrics { kind, images, scale_h, out, colors } => {
            let imgs = images.iter().map(|p| load_virtual(p, scale_h)).collect::<Result<Vec<_>, _>>()?;
            let kind: DirtType = kind.into();
            let series = metric_series(kind, &imgs, &colors.load()?)?;
            let name = if kind == DirtType::Marker { "m1" } else { "m2" };
            let mut csv = String::from("repetition,metric_name,value\n");
            for (r, v) in series.values.iter().enumerate() {
                csv.push_str(&format!("{},{name},{v}\n", r + 1));
            }
            match out {
                Some(p) => write_text(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Experiment(Experiment::DemosCurve { manifest, counts, trials, k, validation, seed, out }) => {
            print_seed(seed);
            let records = load_trajectories(&manifest)?;
            let cfg = CurveConfig { counts, trials, validation_fraction: validation, components: k, seed, ..CurveConfig::default() };
            let points = demos_curve(&records, &cfg)?;
            write_text(&out, &format_curve_csv(&points))?;
            for p in &points {
                println!("{:>4} demos: {:.5} ± {:.5} m", p.count, p.mean, p.stddev);
            }
        }
    }
    Ok(())
}

/// Parses `argv`, runs the command and maps the outcome to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("ERROR {}: {msg}", e.code());
            ExitCode::from(1)
        }
    }
}
