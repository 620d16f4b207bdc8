//! Task-parameterized Gaussian mixture models over `(t, x, y)` data.
//!
//! Each component stores one Gaussian per reference frame, expressed in that
//! frame's local coordinates. Given a concrete set of frames, the per-frame
//! Gaussians are mapped to the table frame and fused by a precision-weighted
//! product; Gaussian mixture regression then conditions the fused mixture on
//! time to produce a trajectory.
//!
//! Frames act on the spatial block only: the time coordinate is carried through
//! with an identity transform and zero offset.

mod em;
mod gaussian;
mod gmr;

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use thiserror::Error;

use crate::linalg::{cholesky3, Mat2, Mat3, Vec2, Vec3};

pub use em::{em_fit, em_fit_with_trace, frame_product_log_likelihood, EmConfig, TpGmmFit};
pub use gaussian::{
    fuse_gaussians, gaussian_peak, log_likelihood, log_mixture_density, mixture_density, product_of_frame_gaussians,
    project_gaussian, Gaussian,
};
pub use gmr::{gmr_trajectory, GmrConditioner};

/// Spatial dimension of the task space.
pub const SPATIAL_DIM: usize = 2;
/// Number of samples in every demonstration and generated trajectory.
pub const TRAJECTORY_LEN: usize = 200;
/// Reference frames per demonstration: initial, intermediate, final.
pub const FRAME_COUNT: usize = 3;
/// Default number of mixture components.
pub const DEFAULT_COMPONENTS: usize = 5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TpGmmError {
    #[error("reference frame points coincide")]
    DegenerateFrameGeometry,
    #[error("covariance is not symmetric positive definite")]
    NonSpdCovariance,
    #[error("sum of frame precisions is singular")]
    SingularPrecisionSum,
    #[error("need at least {needed} data points, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("component {0} collapsed after reinitialization")]
    CollapsedComponent(usize),
    #[error("model has no trained components")]
    UntrainedModel,
    #[error("expected {expected} reference frames, got {got}")]
    FrameCountMismatch { expected: usize, got: usize },
    #[error("invalid reference frame: {0}")]
    InvalidFrame(&'static str),
    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(&'static str),
    #[error("invalid model: {0}")]
    InvalidModel(&'static str),
}

impl TpGmmError {
    pub fn code(&self) -> &'static str {
        match self {
            TpGmmError::DegenerateFrameGeometry => "DegenerateFrameGeometry",
            TpGmmError::NonSpdCovariance => "NonSpdCovariance",
            TpGmmError::SingularPrecisionSum => "SingularPrecisionSum",
            TpGmmError::InsufficientData { .. } => "InsufficientData",
            TpGmmError::CollapsedComponent(_) => "CollapsedComponent",
            TpGmmError::UntrainedModel => "UntrainedModel",
            TpGmmError::FrameCountMismatch { .. } => "FrameCountMismatch",
            TpGmmError::InvalidFrame(_) => "InvalidFrame",
            TpGmmError::InvalidTrajectory(_) => "InvalidTrajectory",
            TpGmmError::InvalidModel(_) => "InvalidModel",
        }
    }
}

/// One observation: normalized time plus planar position in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DataPoint {
    pub t: f64,
    pub y: Vec2,
}

impl DataPoint {
    pub const fn new(t: f64, x: f64, y: f64) -> Self {
        Self { t, y: [x, y] }
    }

    #[inline]
    pub fn as_vec3(&self) -> Vec3 {
        [self.t, self.y[0], self.y[1]]
    }
}

/// Time-ordered planar trajectory with `t` running from 0 to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    samples: Vec<DataPoint>,
}

impl Trajectory {
    pub fn new(samples: Vec<DataPoint>) -> Result<Self, TpGmmError> {
        if samples.len() < 2 {
            return Err(TpGmmError::InvalidTrajectory("fewer than two samples"));
        }
        if samples.iter().any(|s| !(s.t.is_finite() && s.y[0].is_finite() && s.y[1].is_finite())) {
            return Err(TpGmmError::InvalidTrajectory("non-finite sample"));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(TpGmmError::InvalidTrajectory("time is not strictly increasing"));
        }
        let last = samples[samples.len() - 1].t;
        if samples[0].t.abs() > 1e-9 || (last - 1.0).abs() > 1e-9 {
            return Err(TpGmmError::InvalidTrajectory("time must run from 0 to 1"));
        }
        Ok(Self { samples })
    }

    /// Positions on a uniform time grid over `[0, 1]`.
    pub fn from_positions(points: &[Vec2]) -> Result<Self, TpGmmError> {
        let n = points.len();
        if n < 2 {
            return Err(TpGmmError::InvalidTrajectory("fewer than two samples"));
        }
        let samples = points
            .iter()
            .enumerate()
            .map(|(i, p)| DataPoint { t: uniform_time(i, n), y: *p })
            .collect();
        Self::new(samples)
    }

    pub fn samples(&self) -> &[DataPoint] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn positions(&self) -> impl Iterator<Item = Vec2> + '_ {
        self.samples.iter().map(|s| s.y)
    }

    /// Same time stamps, every position moved by `(dx, dy)` meters.
    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        let samples = self.samples.iter().map(|s| DataPoint { t: s.t, y: [s.y[0] + dx, s.y[1] + dy] }).collect();
        Self { samples }
    }

    /// Index of the intermediate frame origin, `⌊(n − 1) / 2⌋`.
    pub fn mid_index(&self) -> usize {
        (self.samples.len() - 1) / 2
    }

    /// Start, middle and end positions.
    pub fn frame_origins(&self) -> [Vec2; 3] {
        let n = self.samples.len();
        [self.samples[0].y, self.samples[self.mid_index()].y, self.samples[n - 1].y]
    }

    /// Root-mean-square position error against a trajectory with the same
    /// number of samples.
    pub fn rms_error(&self, other: &Trajectory) -> Option<f64> {
        if self.len() != other.len() {
            return None;
        }
        let sum: f64 = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| (a.y[0] - b.y[0]).powi(2) + (a.y[1] - b.y[1]).powi(2))
            .sum();
        Some((sum / self.len() as f64).sqrt())
    }
}

#[inline]
pub fn uniform_time(i: usize, n: usize) -> f64 {
    if i + 1 == n {
        1.0
    } else {
        i as f64 / (n - 1) as f64
    }
}

/// A task frame: origin `b` (meters) and planar rotation `A`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReferenceFrame {
    pub origin: Vec2,
    pub rotation: Mat2,
}

impl ReferenceFrame {
    pub fn new(origin: Vec2, rotation: Mat2) -> Result<Self, TpGmmError> {
        if !(origin[0].is_finite() && origin[1].is_finite()) {
            return Err(TpGmmError::InvalidFrame("non-finite origin"));
        }
        let a = rotation;
        let ata = [
            [a[0][0] * a[0][0] + a[1][0] * a[1][0], a[0][0] * a[0][1] + a[1][0] * a[1][1]],
            [a[0][1] * a[0][0] + a[1][1] * a[1][0], a[0][1] * a[0][1] + a[1][1] * a[1][1]],
        ];
        let orth_err = (ata[0][0] - 1.0).abs().max((ata[1][1] - 1.0).abs()).max(ata[0][1].abs());
        if !(orth_err <= 1e-9) {
            return Err(TpGmmError::InvalidFrame("rotation is not orthonormal"));
        }
        let det = a[0][0] * a[1][1] - a[0][1] * a[1][0];
        if !((det - 1.0).abs() <= 1e-9) {
            return Err(TpGmmError::InvalidFrame("rotation determinant is not +1"));
        }
        Ok(Self { origin, rotation })
    }

    pub fn identity() -> Self {
        Self { origin: [0.0, 0.0], rotation: [[1.0, 0.0], [0.0, 1.0]] }
    }

    pub fn from_angle(origin: Vec2, theta: f64) -> Self {
        Self { origin, rotation: rotation_from_sin_cos(theta.sin(), theta.cos()) }
    }

    /// `[1 ⊕ A]`: the rotation lifted to `(t, x, y)` with time untouched.
    pub fn lifted_rotation(&self) -> Mat3 {
        let a = self.rotation;
        [[1.0, 0.0, 0.0], [0.0, a[0][0], a[0][1]], [0.0, a[1][0], a[1][1]]]
    }

    /// `(0, b)`: the origin lifted to `(t, x, y)`.
    pub fn lifted_origin(&self) -> Vec3 {
        [0.0, self.origin[0], self.origin[1]]
    }

    /// Expresses a table-frame point in this frame's coordinates: `Aᵀ(ξ − b)`.
    pub fn to_local(&self, xi: &Vec3) -> Vec3 {
        let a = self.rotation;
        let dx = xi[1] - self.origin[0];
        let dy = xi[2] - self.origin[1];
        [xi[0], a[0][0] * dx + a[1][0] * dy, a[0][1] * dx + a[1][1] * dy]
    }
}

#[inline]
pub fn rotation_from_sin_cos(sin: f64, cos: f64) -> Mat2 {
    [[cos, -sin], [sin, cos]]
}

fn unit_direction(from: Vec2, to: Vec2) -> Result<(f64, f64), TpGmmError> {
    let dx = to[0] - from[0];
    let dy = to[1] - from[1];
    let n = dx.hypot(dy);
    if !(n > 1e-9) {
        return Err(TpGmmError::DegenerateFrameGeometry);
    }
    Ok((dy / n, dx / n))
}

/// Frame rotations from the three frame origins: the first frame points along
/// `b2 − b1`, the intermediate and final frames along `b3 − b2`.
pub fn frame_orientations(b1: Vec2, b2: Vec2, b3: Vec2) -> Result<[Mat2; 3], TpGmmError> {
    let (s1, c1) = unit_direction(b1, b2)?;
    let (s2, c2) = unit_direction(b2, b3)?;
    let a1 = rotation_from_sin_cos(s1, c1);
    let a2 = rotation_from_sin_cos(s2, c2);
    Ok([a1, a2, a2])
}

/// The three reference frames for origins `b1`, `b2`, `b3`.
pub fn reference_frames(b1: Vec2, b2: Vec2, b3: Vec2) -> Result<[ReferenceFrame; 3], TpGmmError> {
    let rot = frame_orientations(b1, b2, b3)?;
    Ok([
        ReferenceFrame { origin: b1, rotation: rot[0] },
        ReferenceFrame { origin: b2, rotation: rot[1] },
        ReferenceFrame { origin: b3, rotation: rot[2] },
    ])
}

/// Frames derived from a trajectory's start, middle and end samples.
pub fn frames_from_trajectory(traj: &Trajectory) -> Result<[ReferenceFrame; 3], TpGmmError> {
    let [b1, b2, b3] = traj.frame_origins();
    reference_frames(b1, b2, b3)
}

/// Learned TP-GMM parameters: mixture weights and, per component and frame,
/// a local mean and covariance.
#[derive(Debug, Clone, PartialEq)]
pub struct TpGmmModel {
    priors: Vec<f64>,
    means: Vec<Vec<Vec3>>,
    covariances: Vec<Vec<Mat3>>,
}

impl TpGmmModel {
    /// `means[i][j]` and `covariances[i][j]` belong to component `i`, frame `j`.
    pub fn new(priors: Vec<f64>, means: Vec<Vec<Vec3>>, covariances: Vec<Vec<Mat3>>) -> Result<Self, TpGmmError> {
        let k = priors.len();
        if k == 0 {
            return Err(TpGmmError::UntrainedModel);
        }
        if means.len() != k || covariances.len() != k {
            return Err(TpGmmError::InvalidModel("component count mismatch"));
        }
        let p = means[0].len();
        if p == 0 {
            return Err(TpGmmError::InvalidModel("no frames"));
        }
        if means.iter().any(|m| m.len() != p) || covariances.iter().any(|c| c.len() != p) {
            return Err(TpGmmError::InvalidModel("frame count mismatch"));
        }
        if priors.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(TpGmmError::InvalidModel("negative or non-finite mixture weight"));
        }
        if (priors.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(TpGmmError::InvalidModel("mixture weights do not sum to 1"));
        }
        if means.iter().flatten().flatten().any(|v| !v.is_finite()) {
            return Err(TpGmmError::InvalidModel("non-finite mean"));
        }
        for cov in covariances.iter().flatten() {
            for i in 0..3 {
                for j in 0..3 {
                    if (cov[i][j] - cov[j][i]).abs() > 1e-9 {
                        return Err(TpGmmError::NonSpdCovariance);
                    }
                }
            }
            if cholesky3(cov).is_none() {
                return Err(TpGmmError::NonSpdCovariance);
            }
        }
        Ok(Self { priors, means, covariances })
    }

    /// Number of mixture components `K`.
    pub fn k(&self) -> usize {
        self.priors.len()
    }

    /// Number of reference frames `P`.
    pub fn p(&self) -> usize {
        self.means[0].len()
    }

    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn mean(&self, component: usize, frame: usize) -> &Vec3 {
        &self.means[component][frame]
    }

    pub fn covariance(&self, component: usize, frame: usize) -> &Mat3 {
        &self.covariances[component][frame]
    }

    pub fn means(&self) -> &[Vec<Vec3>] {
        &self.means
    }

    pub fn covariances(&self) -> &[Vec<Mat3>] {
        &self.covariances
    }

    pub(crate) fn check_frames(&self, frames: &[ReferenceFrame]) -> Result<(), TpGmmError> {
        if frames.len() != self.p() {
            return Err(TpGmmError::FrameCountMismatch { expected: self.p(), got: frames.len() });
        }
        Ok(())
    }
}

/// A demonstration as the learner sees it: its trajectory and fixed frames.
#[derive(Debug, Clone, Copy)]
pub struct DemoView<'a> {
    pub trajectory: &'a Trajectory,
    pub frames: &'a [ReferenceFrame],
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn collinear_along_x_gives_identity_rotations() {
        let rots = frame_orientations([0.0, 0.0], [1.0, 0.0], [2.0, 0.0]).unwrap();
        for r in rots {
            assert_eq!(r, [[1.0, 0.0], [0.0, 1.0]]);
        }
    }

    #[test]
    fn three_four_five_triangle() {
        let rots = frame_orientations([0.0, 0.0], [0.3, 0.4], [0.6, 0.8]).unwrap();
        assert!((rots[0][1][0] - 0.8).abs() < 1e-15);
        assert!((rots[0][0][0] - 0.6).abs() < 1e-15);
    }

    #[test]
    fn coincident_points_rejected() {
        assert_eq!(
            frame_orientations([0.1, 0.1], [0.1, 0.1], [1.0, 0.0]),
            Err(TpGmmError::DegenerateFrameGeometry)
        );
        assert_eq!(
            frame_orientations([0.0, 0.0], [0.1, 0.1], [0.1, 0.1]),
            Err(TpGmmError::DegenerateFrameGeometry)
        );
    }

    #[test]
    fn frames_two_and_three_share_orientation() {
        let rots = frame_orientations([0.0, 0.0], [1.0, 0.0], [1.0, 1.0]).unwrap();
        assert_eq!(rots[1], rots[2]);
        assert!((rots[1][1][0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_frame_rejects_reflection() {
        let err = ReferenceFrame::new([0.0, 0.0], [[1.0, 0.0], [0.0, -1.0]]).unwrap_err();
        assert_eq!(err.code(), "InvalidFrame");
        assert!(ReferenceFrame::new([0.0, 0.0], [[2.0, 0.0], [0.0, 0.5]]).is_err());
    }

    #[test]
    fn local_coordinates_invert_the_frame() {
        let f = ReferenceFrame::from_angle([0.3, -0.2], 0.7);
        let xi = [0.4, 1.0, 2.0];
        let local = f.to_local(&xi);
        let back = crate::linalg::mat3_vec(&f.lifted_rotation(), &local);
        let o = f.lifted_origin();
        for d in 0..3 {
            assert!((back[d] + o[d] - xi[d]).abs() < 1e-14);
        }
    }

    #[test]
    fn trajectory_validation() {
        assert!(Trajectory::new(vec![DataPoint::new(0.0, 0.0, 0.0)]).is_err());
        let bad = vec![DataPoint::new(0.0, 0.0, 0.0), DataPoint::new(0.0, 1.0, 0.0), DataPoint::new(1.0, 1.0, 0.0)];
        assert_eq!(Trajectory::new(bad).unwrap_err().code(), "InvalidTrajectory");
        let t = Trajectory::from_positions(&[[0.0, 0.0]; 200]).unwrap();
        assert_eq!(t.len(), 200);
        assert_eq!(t.mid_index(), 99);
        assert_eq!(t.samples()[199].t, 1.0);
    }

    #[test]
    fn model_validation() {
        let cov = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert_eq!(TpGmmModel::new(vec![], vec![], vec![]), Err(TpGmmError::UntrainedModel));
        let m = TpGmmModel::new(vec![0.5, 0.4], vec![vec![[0.0; 3]]; 2], vec![vec![cov]; 2]);
        assert_eq!(m.unwrap_err().code(), "InvalidModel");
        let bad = [[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 1.0]];
        let m = TpGmmModel::new(vec![1.0], vec![vec![[0.0; 3]]], vec![vec![bad]]);
        assert_eq!(m, Err(TpGmmError::NonSpdCovariance));
    }
}
