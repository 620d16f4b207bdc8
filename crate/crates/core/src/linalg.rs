//! Small fixed-size dense linear algebra.
//!
//! Everything in the toolkit lives in at most nine dimensions (the DLT system),
//! so plain arrays beat a general matrix library here and keep the crate `no_std`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec;
use alloc::vec::Vec;

pub type Vec2 = [f64; 2];
pub type Vec3 = [f64; 3];
pub type Mat2 = [[f64; 2]; 2];
pub type Mat3 = [[f64; 3]; 3];

pub const IDENTITY3: Mat3 = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

#[inline]
pub fn sub2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub fn add2(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] + b[0], a[1] + b[1]]
}

#[inline]
pub fn scale2(a: Vec2, s: f64) -> Vec2 {
    [a[0] * s, a[1] * s]
}

#[inline]
pub fn dot2(a: Vec2, b: Vec2) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub fn norm2(a: Vec2) -> f64 {
    a[0].hypot(a[1])
}

pub fn mat3_mul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

pub fn mat3_transpose(a: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[j][i] = *v;
        }
    }
    out
}

pub fn mat3_vec(a: &Mat3, v: &Vec3) -> Vec3 {
    [
        a[0][0] * v[0] + a[0][1] * v[1] + a[0][2] * v[2],
        a[1][0] * v[0] + a[1][1] * v[1] + a[1][2] * v[2],
        a[2][0] * v[0] + a[2][1] * v[1] + a[2][2] * v[2],
    ]
}

pub fn mat3_add(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = *a;
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn mat3_scale(a: &Mat3, s: f64) -> Mat3 {
    let mut out = *a;
    for row in out.iter_mut() {
        for v in row.iter_mut() {
            *v *= s;
        }
    }
    out
}

pub fn mat3_det(a: &Mat3) -> f64 {
    a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
        + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
}

pub fn frobenius3(a: &Mat3) -> f64 {
    a.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
}

/// General 3×3 inverse through the adjugate. `None` when the determinant is
/// zero relative to the cube of the Frobenius norm.
pub fn mat3_inverse(a: &Mat3) -> Option<Mat3> {
    let det = mat3_det(a);
    let scale = frobenius3(a);
    if !det.is_finite() || det.abs() <= 1e-14 * scale * scale * scale || scale == 0.0 {
        return None;
    }
    let inv_det = 1.0 / det;
    let c = |r0: usize, r1: usize, c0: usize, c1: usize| a[r0][c0] * a[r1][c1] - a[r0][c1] * a[r1][c0];
    Some([
        [c(1, 2, 1, 2) * inv_det, -c(0, 2, 1, 2) * inv_det, c(0, 1, 1, 2) * inv_det],
        [-c(1, 2, 0, 2) * inv_det, c(0, 2, 0, 2) * inv_det, -c(0, 1, 0, 2) * inv_det],
        [c(1, 2, 0, 1) * inv_det, -c(0, 2, 0, 1) * inv_det, c(0, 1, 0, 1) * inv_det],
    ])
}

/// Lower-triangular Cholesky factor of a symmetric 3×3 matrix, or `None` if the
/// matrix is not positive definite.
pub fn cholesky3(a: &Mat3) -> Option<Mat3> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(sum > 0.0) || !sum.is_finite() {
                    return None;
                }
                l[i][i] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Some(l)
}

/// Inverse and log-determinant of an SPD matrix from its Cholesky factor.
pub fn spd_inverse_logdet(a: &Mat3) -> Option<(Mat3, f64)> {
    let l = cholesky3(a)?;
    let log_det = 2.0 * (l[0][0].ln() + l[1][1].ln() + l[2][2].ln());
    // invert L (lower triangular), then A^-1 = L^-T L^-1
    let mut li = [[0.0; 3]; 3];
    for i in 0..3 {
        li[i][i] = 1.0 / l[i][i];
        for j in 0..i {
            let mut sum = 0.0;
            for k in j..i {
                sum -= l[i][k] * li[k][j];
            }
            li[i][j] = sum / l[i][i];
        }
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let mut sum = 0.0;
            for k in i.max(j)..3 {
                sum += li[k][i] * li[k][j];
            }
            inv[i][j] = sum;
        }
    }
    Some((inv, log_det))
}

/// Mahalanobis quadratic form `dᵀ P d` for a symmetric `P`.
pub fn quad_form(p: &Mat3, d: &Vec3) -> f64 {
    let pd = mat3_vec(p, d);
    d[0] * pd[0] + d[1] * pd[1] + d[2] * pd[2]
}

pub fn symmetrize(a: &Mat3) -> Mat3 {
    let mut out = *a;
    for i in 0..3 {
        for j in (i + 1)..3 {
            let m = 0.5 * (a[i][j] + a[j][i]);
            out[i][j] = m;
            out[j][i] = m;
        }
    }
    out
}

/// Eigen-decomposition of a symmetric 2×2 matrix. Returns eigenvalues in
/// descending order with matching unit eigenvectors.
pub fn sym2_eigen(a: &Mat2) -> ([f64; 2], [Vec2; 2]) {
    let (p, q, r) = (a[0][0], a[0][1], a[1][1]);
    let mean = 0.5 * (p + r);
    let half_diff = 0.5 * (p - r);
    let rad = half_diff.hypot(q);
    let l0 = mean + rad;
    let l1 = mean - rad;
    let v0 = if q.abs() <= 1e-300 {
        if p >= r {
            [1.0, 0.0]
        } else {
            [0.0, 1.0]
        }
    } else {
        // angle of the principal axis
        let theta = 0.5 * (2.0 * q).atan2(p - r);
        [theta.cos(), theta.sin()]
    };
    let v1 = [-v0[1], v0[0]];
    ([l0, l1], [v0, v1])
}

/// Eigenvalues of a symmetric n×n matrix (row-major) by cyclic Jacobi rotations,
/// sorted ascending.
pub fn sym_eigenvalues(a: &[f64], n: usize) -> Vec<f64> {
    let mut m = a.to_vec();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j] * m[i * n + j];
            }
        }
        let diag: f64 = (0..n).map(|i| m[i * n + i] * m[i * n + i]).sum();
        if off <= 1e-30 * diag.max(1e-300) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap_or(core::cmp::Ordering::Equal));
    ev
}

/// Right singular vector of the smallest singular value of a `rows × N` matrix,
/// using one-sided (Hestenes) Jacobi orthogonalization of its columns.
pub fn smallest_right_singular_vector<const N: usize>(rows: &[[f64; N]]) -> [f64; N] {
    let m = rows.len();
    // column-major working copy
    let mut u: Vec<f64> = vec![0.0; m * N];
    for (r, row) in rows.iter().enumerate() {
        for c in 0..N {
            u[c * m + r] = row[c];
        }
    }
    let mut v = [[0.0; N]; N];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..N {
            for q in (p + 1)..N {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for r in 0..m {
                    let up = u[p * m + r];
                    let uq = u[q * m + r];
                    alpha += up * up;
                    beta += uq * uq;
                    gamma += up * uq;
                }
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let up = u[p * m + r];
                    let uq = u[q * m + r];
                    u[p * m + r] = c * up - s * uq;
                    u[q * m + r] = s * up + c * uq;
                }
                for row in v.iter_mut() {
                    let vp = row[p];
                    let vq = row[q];
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let mut best = 0;
    let mut best_norm = f64::INFINITY;
    for c in 0..N {
        let norm: f64 = u[c * m..(c + 1) * m].iter().map(|x| x * x).sum();
        if norm < best_norm {
            best_norm = norm;
            best = c;
        }
    }
    let mut out = [0.0; N];
    for (i, row) in v.iter().enumerate() {
        out[i] = row[best];
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_spd_matches_adjugate() {
        let a = [[4.0, 1.0, 0.5], [1.0, 3.0, 0.2], [0.5, 0.2, 2.0]];
        let (inv, log_det) = spd_inverse_logdet(&a).unwrap();
        let adj = mat3_inverse(&a).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!((inv[i][j] - adj[i][j]).abs() < 1e-14);
            }
        }
        assert!((log_det - mat3_det(&a).ln()).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let a = [[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
        assert!(cholesky3(&a).is_none());
    }

    #[test]
    fn sym2_eigen_axis_aligned() {
        let (vals, vecs) = sym2_eigen(&[[1.0, 0.0], [0.0, 5.0]]);
        assert_eq!(vals, [5.0, 1.0]);
        assert_eq!(vecs[0], [0.0, 1.0]);
    }

    #[test]
    fn jacobi_eigenvalues_of_diagonal_plus_rotation() {
        // R diag(1,2,3) R^T for a rotation about z by 30 degrees
        let (s, c) = (0.5, 0.75f64.sqrt());
        let r = [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]];
        let d = [[1.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 3.0]];
        let a = mat3_mul(&mat3_mul(&r, &d), &mat3_transpose(&r));
        let flat: Vec<f64> = a.iter().flatten().copied().collect();
        let ev = sym_eigenvalues(&flat, 3);
        for (got, want) in ev.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn null_vector_of_rank_deficient_matrix() {
        let rows = [[1.0, 0.0, -1.0], [0.0, 1.0, -1.0]];
        let v = smallest_right_singular_vector(&rows);
        let k = v[0];
        assert!((v[1] - k).abs() < 1e-14 && (v[2] - k).abs() < 1e-14);
    }
}
