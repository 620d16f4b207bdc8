#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;

use super::{DemoView, ReferenceFrame, TpGmmError, TpGmmModel};
use crate::linalg::{mat3_add, mat3_mul, mat3_transpose, mat3_vec, quad_form, spd_inverse_logdet, symmetrize, Mat3, Vec3};

/// Multivariate normal over `(t, x, y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian {
    pub mean: Vec3,
    pub cov: Mat3,
}

impl Gaussian {
    pub fn new(mean: Vec3, cov: Mat3) -> Result<Self, TpGmmError> {
        for i in 0..3 {
            for j in 0..3 {
                if !((cov[i][j] - cov[j][i]).abs() <= 1e-9) {
                    return Err(TpGmmError::NonSpdCovariance);
                }
            }
        }
        if spd_inverse_logdet(&cov).is_none() {
            return Err(TpGmmError::NonSpdCovariance);
        }
        Ok(Self { mean, cov })
    }

    pub fn log_density(&self, x: &Vec3) -> Result<f64, TpGmmError> {
        Ok(Evaluator::new(self)?.log_density(x))
    }

    pub fn density(&self, x: &Vec3) -> Result<f64, TpGmmError> {
        Ok(self.log_density(x)?.exp())
    }
}

/// A Gaussian with its precision and log normalizer precomputed.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Evaluator {
    pub mean: Vec3,
    pub precision: Mat3,
    pub log_norm: f64,
}

pub(crate) const LOG_2PI: f64 = 1.837_877_066_409_345_3;

impl Evaluator {
    pub fn new(g: &Gaussian) -> Result<Self, TpGmmError> {
        Self::from_parts(g.mean, &g.cov)
    }

    pub fn from_parts(mean: Vec3, cov: &Mat3) -> Result<Self, TpGmmError> {
        let (precision, log_det) = spd_inverse_logdet(cov).ok_or(TpGmmError::NonSpdCovariance)?;
        Ok(Self { mean, precision, log_norm: -0.5 * (3.0 * LOG_2PI + log_det) })
    }

    #[inline]
    pub fn log_density(&self, x: &Vec3) -> f64 {
        let d = [x[0] - self.mean[0], x[1] - self.mean[1], x[2] - self.mean[2]];
        self.log_norm - 0.5 * quad_form(&self.precision, &d)
    }
}

/// Maps a frame-local Gaussian into the table frame: `N(Ã μ + b̃, Ã Σ Ãᵀ)`.
pub fn project_gaussian(frame: &ReferenceFrame, z_mu: &Vec3, z_sigma: &Mat3) -> Result<Gaussian, TpGmmError> {
    if spd_inverse_logdet(z_sigma).is_none() {
        return Err(TpGmmError::NonSpdCovariance);
    }
    let a = frame.lifted_rotation();
    let b = frame.lifted_origin();
    let am = mat3_vec(&a, z_mu);
    let mean = [am[0] + b[0], am[1] + b[1], am[2] + b[2]];
    let cov = symmetrize(&mat3_mul(&mat3_mul(&a, z_sigma), &mat3_transpose(&a)));
    Ok(Gaussian { mean, cov })
}

/// Precision-weighted product: `Σ = (Σⱼ Λⱼ)⁻¹`, `μ = Σ Σⱼ Λⱼ μⱼ`.
pub fn fuse_gaussians(parts: &[Gaussian]) -> Result<Gaussian, TpGmmError> {
    if parts.is_empty() {
        return Err(TpGmmError::InvalidModel("no Gaussians to fuse"));
    }
    let mut precision_sum = [[0.0; 3]; 3];
    let mut weighted = [0.0; 3];
    for g in parts {
        let (lambda, _) = spd_inverse_logdet(&g.cov).ok_or(TpGmmError::NonSpdCovariance)?;
        precision_sum = mat3_add(&precision_sum, &lambda);
        let lm = mat3_vec(&lambda, &g.mean);
        for d in 0..3 {
            weighted[d] += lm[d];
        }
    }
    let (cov, _) = spd_inverse_logdet(&symmetrize(&precision_sum)).ok_or(TpGmmError::SingularPrecisionSum)?;
    let cov = symmetrize(&cov);
    let mean = mat3_vec(&cov, &weighted);
    Ok(Gaussian { mean, cov })
}

/// Table-frame Gaussian of `component` for the given frames.
pub fn product_of_frame_gaussians(
    frames: &[ReferenceFrame],
    model: &TpGmmModel,
    component: usize,
) -> Result<Gaussian, TpGmmError> {
    model.check_frames(frames)?;
    let parts = frames
        .iter()
        .enumerate()
        .map(|(j, f)| project_gaussian(f, model.mean(component, j), model.covariance(component, j)))
        .collect::<Result<Vec<_>, _>>()?;
    fuse_gaussians(&parts)
}

pub(crate) fn fused_evaluators(frames: &[ReferenceFrame], model: &TpGmmModel) -> Result<Vec<Evaluator>, TpGmmError> {
    (0..model.k())
        .map(|i| Evaluator::new(&product_of_frame_gaussians(frames, model, i)?))
        .collect()
}

pub(crate) fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + values.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}

fn log_mixture_with(x: &Vec3, model: &TpGmmModel, evals: &[Evaluator], scratch: &mut Vec<f64>) -> f64 {
    scratch.clear();
    for (pi, e) in model.priors().iter().zip(evals) {
        scratch.push(pi.ln() + e.log_density(x));
    }
    log_sum_exp(scratch)
}

/// `log Σᵢ πᵢ N(x; μᵢ, Σᵢ)` with the fused per-component Gaussians.
pub fn log_mixture_density(x: &Vec3, frames: &[ReferenceFrame], model: &TpGmmModel) -> Result<f64, TpGmmError> {
    let evals = fused_evaluators(frames, model)?;
    Ok(log_mixture_with(x, model, &evals, &mut Vec::new()))
}

pub fn mixture_density(x: &Vec3, frames: &[ReferenceFrame], model: &TpGmmModel) -> Result<f64, TpGmmError> {
    Ok(log_mixture_density(x, frames, model)?.exp())
}

/// Sum over every data point of the log mixture density under its own
/// demonstration's frames.
pub fn log_likelihood(model: &TpGmmModel, demos: &[DemoView<'_>]) -> Result<f64, TpGmmError> {
    let mut total = 0.0;
    let mut scratch = Vec::with_capacity(model.k());
    for demo in demos {
        let evals = fused_evaluators(demo.frames, model)?;
        for s in demo.trajectory.samples() {
            total += log_mixture_with(&s.as_vec3(), model, &evals, &mut scratch);
        }
    }
    Ok(total)
}

/// Peak value of a normal density in three dimensions.
pub fn gaussian_peak(cov: &Mat3) -> Option<f64> {
    let (_, log_det) = spd_inverse_logdet(cov)?;
    Some(1.0 / ((2.0 * PI).powf(1.5) * (0.5 * log_det).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn diag(a: f64, b: f64, c: f64) -> Mat3 {
        [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]]
    }

    #[test]
    fn identity_frame_projection_is_noop() {
        let mu = [0.2, 0.3, -0.1];
        let cov = [[0.5, 0.1, 0.0], [0.1, 0.4, 0.05], [0.0, 0.05, 0.3]];
        let g = project_gaussian(&ReferenceFrame::identity(), &mu, &cov).unwrap();
        assert_eq!(g.mean, mu);
        assert_eq!(g.cov, cov);
    }

    #[test]
    fn quarter_turn_swaps_spatial_variances() {
        let f = ReferenceFrame { origin: [0.0, 0.0], rotation: [[0.0, -1.0], [1.0, 0.0]] };
        let g = project_gaussian(&f, &[0.0; 3], &diag(1.0, 2.0, 5.0)).unwrap();
        assert!((g.cov[1][1] - 5.0).abs() < 1e-15 && (g.cov[2][2] - 2.0).abs() < 1e-15);
        assert_eq!(g.cov[0][0], 1.0);
    }

    #[test]
    fn projection_rejects_non_spd() {
        let err = project_gaussian(&ReferenceFrame::identity(), &[0.0; 3], &diag(1.0, -1.0, 1.0));
        assert_eq!(err, Err(TpGmmError::NonSpdCovariance));
    }

    #[test]
    fn single_frame_product_returns_parameters() {
        let cov = [[0.5, 0.1, 0.0], [0.1, 0.4, 0.05], [0.0, 0.05, 0.3]];
        let model = TpGmmModel::new(vec![1.0], vec![vec![[0.1, 0.2, 0.3]]], vec![vec![cov]]).unwrap();
        let g = product_of_frame_gaussians(&[ReferenceFrame::identity()], &model, 0).unwrap();
        for i in 0..3 {
            assert!((g.mean[i] - [0.1, 0.2, 0.3][i]).abs() < 1e-14);
            for j in 0..3 {
                assert!((g.cov[i][j] - cov[i][j]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn duplicate_frames_halve_covariance() {
        let cov = [[0.5, 0.1, 0.0], [0.1, 0.4, 0.05], [0.0, 0.05, 0.3]];
        let f = ReferenceFrame::from_angle([0.2, -0.1], 0.4);
        let model = TpGmmModel::new(vec![1.0], vec![vec![[0.1, 0.2, 0.3]; 2]], vec![vec![cov; 2]]).unwrap();
        let single = project_gaussian(&f, &[0.1, 0.2, 0.3], &cov).unwrap();
        let g = product_of_frame_gaussians(&[f, f], &model, 0).unwrap();
        for i in 0..3 {
            assert!((g.mean[i] - single.mean[i]).abs() < 1e-12);
            for j in 0..3 {
                assert!((g.cov[i][j] - 0.5 * single.cov[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn frame_count_mismatch() {
        let model = TpGmmModel::new(vec![1.0], vec![vec![[0.0; 3]; 3]], vec![vec![diag(1.0, 1.0, 1.0); 3]]).unwrap();
        let err = product_of_frame_gaussians(&[ReferenceFrame::identity()], &model, 0).unwrap_err();
        assert_eq!(err, TpGmmError::FrameCountMismatch { expected: 3, got: 1 });
    }

    #[test]
    fn peak_density_at_mean() {
        let cov = diag(0.01, 0.02, 0.03);
        let model = TpGmmModel::new(vec![1.0], vec![vec![[0.5, 0.1, 0.2]]], vec![vec![cov]]).unwrap();
        let d = mixture_density(&[0.5, 0.1, 0.2], &[ReferenceFrame::identity()], &model).unwrap();
        let peak = 1.0 / ((2.0 * PI).powf(1.5) * (0.01f64 * 0.02 * 0.03).sqrt());
        assert!((d - peak).abs() < 1e-12 * peak);
        assert!((gaussian_peak(&cov).unwrap() - peak).abs() < 1e-12 * peak);
    }

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1000.0, -1000.0]) - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }
}
