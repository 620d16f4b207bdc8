//! Expectation-maximization for TP-GMMs.
//!
//! Data points are expressed in every frame of their own demonstration; each
//! component is scored by the product of its per-frame densities, and the
//! M-step re-estimates the per-frame statistics independently. The tracked
//! objective is the log of that mixture of frame products, which EM never
//! decreases.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

use super::gaussian::{log_sum_exp, Evaluator};
use super::{DemoView, TpGmmError, TpGmmModel, SPATIAL_DIM};
use crate::linalg::{Mat3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmConfig {
    pub max_iterations: usize,
    /// Stop once `(LLₖ − LLₖ₋₁) < relative_tolerance · |LLₖ₋₁|`.
    pub relative_tolerance: f64,
    /// Added to every covariance diagonal after each M-step.
    pub regularization: f64,
    /// A component whose responsibility mass drops below this fraction of the
    /// data count is reinitialized once, then reported as collapsed.
    pub collapse_fraction: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self { max_iterations: 200, relative_tolerance: 1e-6, regularization: 1e-6, collapse_fraction: 1e-8 }
    }
}

/// A fitted model plus the objective recorded at every E-step.
#[derive(Debug, Clone, PartialEq)]
pub struct TpGmmFit {
    pub model: TpGmmModel,
    pub log_likelihoods: Vec<f64>,
    pub converged: bool,
    /// `(iteration, component)` for every reinitialized component; the
    /// objective may drop right after such an event.
    pub reinitialized: Vec<(usize, usize)>,
}

impl TpGmmFit {
    pub fn iterations(&self) -> usize {
        self.log_likelihoods.len()
    }
}

struct LocalData {
    n: usize,
    p: usize,
    times: Vec<f64>,
    /// `local[n * p + j]`: point `n` in frame `j` of its demonstration.
    local: Vec<Vec3>,
}

impl LocalData {
    fn new(demos: &[DemoView<'_>]) -> Result<Self, TpGmmError> {
        let p = demos.first().map(|d| d.frames.len()).unwrap_or(0);
        if p == 0 {
            return Err(TpGmmError::InsufficientData { needed: 1, got: 0 });
        }
        let mut times = Vec::new();
        let mut local = Vec::new();
        for d in demos {
            if d.frames.len() != p {
                return Err(TpGmmError::FrameCountMismatch { expected: p, got: d.frames.len() });
            }
            for s in d.trajectory.samples() {
                let xi = s.as_vec3();
                times.push(s.t);
                local.extend(d.frames.iter().map(|f| f.to_local(&xi)));
            }
        }
        Ok(Self { n: times.len(), p, times, local })
    }

    #[inline]
    fn point(&self, n: usize, j: usize) -> &Vec3 {
        &self.local[n * self.p + j]
    }
}

#[derive(Clone)]
struct Params {
    priors: Vec<f64>,
    means: Vec<Vec<Vec3>>,
    covs: Vec<Vec<Mat3>>,
}

fn add_diag(m: &mut Mat3, eps: f64) {
    for (d, row) in m.iter_mut().enumerate() {
        row[d] += eps;
    }
}

/// Weighted mean and covariance (normalized by the weight sum) of the points
/// selected by `weight`.
fn weighted_stats(data: &LocalData, j: usize, weight: impl Fn(usize) -> f64, total: f64) -> (Vec3, Mat3) {
    let mut mean = [0.0; 3];
    for n in 0..data.n {
        let w = weight(n);
        if w != 0.0 {
            let x = data.point(n, j);
            for d in 0..3 {
                mean[d] += w * x[d];
            }
        }
    }
    for v in mean.iter_mut() {
        *v /= total;
    }
    let mut cov = [[0.0; 3]; 3];
    for n in 0..data.n {
        let w = weight(n);
        if w != 0.0 {
            let x = data.point(n, j);
            let dv = [x[0] - mean[0], x[1] - mean[1], x[2] - mean[2]];
            for a in 0..3 {
                for b in a..3 {
                    cov[a][b] += w * dv[a] * dv[b];
                }
            }
        }
    }
    for a in 0..3 {
        for b in a..3 {
            cov[a][b] /= total;
            cov[b][a] = cov[a][b];
        }
    }
    (mean, cov)
}

fn time_bin(t: f64, k: usize) -> usize {
    ((t.clamp(0.0, 1.0) * k as f64).floor() as usize).min(k - 1)
}

/// Components seeded from `k` equal time bins.
fn initial_params(data: &LocalData, k: usize, eps: f64) -> Params {
    let mut priors = vec![0.0; k];
    let mut means = vec![vec![[0.0; 3]; data.p]; k];
    let mut covs = vec![vec![[[0.0; 3]; 3]; data.p]; k];
    let bins: Vec<usize> = data.times.iter().map(|t| time_bin(*t, k)).collect();
    for i in 0..k {
        let count = bins.iter().filter(|b| **b == i).count();
        for j in 0..data.p {
            // an empty bin borrows the global statistics, centered on the bin
            let (mean, mut cov) = if count > 0 {
                weighted_stats(data, j, |n| if bins[n] == i { 1.0 } else { 0.0 }, count as f64)
            } else {
                let (mut mean, cov) = weighted_stats(data, j, |_| 1.0, data.n as f64);
                mean[0] = (i as f64 + 0.5) / k as f64;
                (mean, cov)
            };
            add_diag(&mut cov, eps);
            means[i][j] = mean;
            covs[i][j] = cov;
        }
        priors[i] = count.max(1) as f64;
    }
    let total: f64 = priors.iter().sum();
    for w in priors.iter_mut() {
        *w /= total;
    }
    Params { priors, means, covs }
}

fn evaluators(params: &Params) -> Result<Vec<Vec<Evaluator>>, TpGmmError> {
    params
        .means
        .iter()
        .zip(&params.covs)
        .map(|(ms, cs)| ms.iter().zip(cs).map(|(m, c)| Evaluator::from_parts(*m, c)).collect())
        .collect()
}

/// Fills `log_resp` (N × K) with normalized log responsibilities and returns
/// the objective.
fn e_step(data: &LocalData, params: &Params, log_resp: &mut [f64]) -> Result<f64, TpGmmError> {
    let evals = evaluators(params)?;
    let k = params.priors.len();
    let log_priors: Vec<f64> = params.priors.iter().map(|w| w.ln()).collect();
    let mut total = 0.0;
    for n in 0..data.n {
        let row = &mut log_resp[n * k..(n + 1) * k];
        for i in 0..k {
            let mut s = log_priors[i];
            for (j, e) in evals[i].iter().enumerate() {
                s += e.log_density(data.point(n, j));
            }
            row[i] = s;
        }
        let norm = log_sum_exp(row);
        for v in row.iter_mut() {
            *v -= norm;
        }
        total += norm;
    }
    Ok(total)
}

fn check_inputs(demos: &[DemoView<'_>], k: usize) -> Result<LocalData, TpGmmError> {
    if k == 0 {
        return Err(TpGmmError::UntrainedModel);
    }
    let data = LocalData::new(demos)?;
    let needed = k * (SPATIAL_DIM + 2);
    if data.n < needed {
        return Err(TpGmmError::InsufficientData { needed, got: data.n });
    }
    Ok(data)
}

pub fn em_fit(demos: &[DemoView<'_>], k: usize, config: &EmConfig) -> Result<TpGmmModel, TpGmmError> {
    em_fit_with_trace(demos, k, config).map(|fit| fit.model)
}

pub fn em_fit_with_trace(demos: &[DemoView<'_>], k: usize, config: &EmConfig) -> Result<TpGmmFit, TpGmmError> {
    let data = check_inputs(demos, k)?;
    let eps = config.regularization;
    let init = initial_params(&data, k, eps);
    let mut params = init.clone();
    let mut log_resp = vec![0.0; data.n * k];
    let mut resp = vec![0.0; data.n];
    let mut reset_done = vec![false; k];
    let mut trace = Vec::new();
    let mut reinitialized = Vec::new();
    let mut converged = false;

    for it in 0..config.max_iterations.max(1) {
        let ll = e_step(&data, &params, &mut log_resp)?;
        if let Some(&prev) = trace.last() {
            trace.push(ll);
            if ll - prev < config.relative_tolerance * f64::abs(prev) {
                converged = true;
                break;
            }
        } else {
            trace.push(ll);
        }
        if it + 1 == config.max_iterations {
            break;
        }

        let mut next = params.clone();
        for i in 0..k {
            for (n, r) in resp.iter_mut().enumerate() {
                *r = log_resp[n * k + i].exp();
            }
            let mass: f64 = resp.iter().sum();
            if !(mass >= config.collapse_fraction * data.n as f64) {
                if reset_done[i] {
                    return Err(TpGmmError::CollapsedComponent(i));
                }
                reset_done[i] = true;
                reinitialized.push((it, i));
                next.priors[i] = init.priors[i];
                next.means[i] = init.means[i].clone();
                next.covs[i] = init.covs[i].clone();
                continue;
            }
            next.priors[i] = mass / data.n as f64;
            for j in 0..data.p {
                let (mean, mut cov) = weighted_stats(&data, j, |n| resp[n], mass);
                add_diag(&mut cov, eps);
                next.means[i][j] = mean;
                next.covs[i][j] = cov;
            }
        }
        let total: f64 = next.priors.iter().sum();
        for w in next.priors.iter_mut() {
            *w /= total;
        }
        params = next;
    }

    let model = TpGmmModel::new(params.priors, params.means, params.covs)?;
    Ok(TpGmmFit { model, log_likelihoods: trace, converged, reinitialized })
}

/// The EM objective for an arbitrary model: `Σₙ log Σᵢ πᵢ Πⱼ N(Aⱼᵀ(ξₙ − bⱼ); Zᵢⱼ)`.
/// It coincides with [`log_likelihood`](super::log_likelihood) for a single
/// frame.
pub fn frame_product_log_likelihood(model: &TpGmmModel, demos: &[DemoView<'_>]) -> Result<f64, TpGmmError> {
    let data = LocalData::new(demos)?;
    if data.p != model.p() {
        return Err(TpGmmError::FrameCountMismatch { expected: model.p(), got: data.p });
    }
    let params = Params {
        priors: model.priors().to_vec(),
        means: model.means().to_vec(),
        covs: model.covariances().to_vec(),
    };
    let mut scratch = vec![0.0; data.n * model.k()];
    e_step(&data, &params, &mut scratch)
}
