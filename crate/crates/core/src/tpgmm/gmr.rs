//! Gaussian mixture regression of position on time.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;

use super::gaussian::{log_sum_exp, product_of_frame_gaussians, Gaussian, LOG_2PI};
use super::{uniform_time, DataPoint, ReferenceFrame, TpGmmError, TpGmmModel, Trajectory};
use crate::linalg::Vec2;

/// The fused mixture for one frame configuration, ready to be conditioned on
/// time.
#[derive(Debug, Clone)]
pub struct GmrConditioner {
    log_priors: Vec<f64>,
    components: Vec<Gaussian>,
}

impl GmrConditioner {
    pub fn new(model: &TpGmmModel, frames: &[ReferenceFrame]) -> Result<Self, TpGmmError> {
        model.check_frames(frames)?;
        let components = (0..model.k())
            .map(|i| product_of_frame_gaussians(frames, model, i))
            .collect::<Result<Vec<_>, _>>()?;
        let log_priors = model.priors().iter().map(|w| w.ln()).collect();
        Ok(Self { log_priors, components })
    }

    pub fn components(&self) -> &[Gaussian] {
        &self.components
    }

    /// `hᵢ(t) ∝ πᵢ N(t; μₜ,ᵢ, σ²ₜ,ᵢ)`, normalized to sum to one.
    pub fn weights(&self, t: f64) -> Vec<f64> {
        let logs: Vec<f64> = self
            .components
            .iter()
            .zip(&self.log_priors)
            .map(|(g, lp)| {
                let var = g.cov[0][0];
                let d = t - g.mean[0];
                lp - 0.5 * (LOG_2PI + var.ln() + d * d / var)
            })
            .collect();
        let norm = log_sum_exp(&logs);
        logs.iter().map(|l| (l - norm).exp()).collect()
    }

    /// Conditional expectation of position given time.
    pub fn predict(&self, t: f64) -> Vec2 {
        let h = self.weights(t);
        let mut out = [0.0; 2];
        for (w, g) in h.iter().zip(&self.components) {
            let var = g.cov[0][0];
            let d = t - g.mean[0];
            for k in 0..2 {
                out[k] += w * (g.mean[k + 1] + g.cov[k + 1][0] / var * d);
            }
        }
        out
    }
}

/// Trajectory of `n_samples` positions on a uniform time grid over `[0, 1]`.
pub fn gmr_trajectory(model: &TpGmmModel, frames: &[ReferenceFrame], n_samples: usize) -> Result<Trajectory, TpGmmError> {
    if n_samples < 2 {
        return Err(TpGmmError::InvalidTrajectory("fewer than two samples"));
    }
    let cond = GmrConditioner::new(model, frames)?;
    let samples = (0..n_samples)
        .map(|i| {
            let t = uniform_time(i, n_samples);
            DataPoint { t, y: cond.predict(t) }
        })
        .collect();
    Trajectory::new(samples)
}
