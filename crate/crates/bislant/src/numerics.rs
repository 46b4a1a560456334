//! Small dense linear algebra and the differentiation engine.
//!
//! Everything here operates on matrices no larger than a few dozen entries
//! per side, so the algorithms favor determinism and simplicity: modified
//! Gram-Schmidt with one reorthogonalization pass, a cyclic Jacobi
//! eigensolver, and central differences with a single Richardson
//! extrapolation step.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// A symmetric positive-definite bilinear form frozen at one point.
#[derive(Debug, Clone)]
pub enum InnerProduct {
    Euclidean,
    /// `scale * <u, v>` with a positive conformal factor.
    Conformal {
        scale: f64,
    },
    /// `u^T G v` for a fixed Gram matrix.
    Gram(Matrix),
}

impl InnerProduct {
    pub fn apply(&self, u: &Vector, v: &Vector) -> f64 {
        match self {
            InnerProduct::Euclidean => u.dot(v),
            InnerProduct::Conformal { scale } => scale * u.dot(v),
            InnerProduct::Gram(g) => (u.transpose() * g * v)[(0, 0)],
        }
    }

    pub fn norm(&self, u: &Vector) -> f64 {
        self.apply(u, u).max(0.0).sqrt()
    }
}

/// Gates for every identity check, threaded through the whole pipeline so
/// no check carries a hidden constant of its own.
#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq)]
pub struct ToleranceProfile {
    /// Identities built from at most first derivatives.
    pub tol_first: f64,
    /// Identities that stack a finite difference on top of first derivatives.
    pub tol_second: f64,
    /// Allowed eigenvalue spread for a pointwise-constant slant angle.
    pub tol_eig: f64,
    /// Relative finite-difference step.
    pub fd_step: f64,
}

impl Default for ToleranceProfile {
    fn default() -> Self {
        ToleranceProfile {
            tol_first: 1e-6,
            tol_second: 1e-4,
            tol_eig: 1e-6,
            fd_step: 1e-5,
        }
    }
}

impl ToleranceProfile {
    pub fn validate(&self) -> Result<()> {
        let all_positive = self.tol_first > 0.0
            && self.tol_second > 0.0
            && self.tol_eig > 0.0
            && self.fd_step > 0.0;
        if !all_positive {
            return Err(Error::InvalidTolerances {
                message: "all tolerances must be positive".into(),
            });
        }
        if self.tol_second < self.tol_first {
            return Err(Error::InvalidTolerances {
                message: "tol_second must be at least tol_first".into(),
            });
        }
        Ok(())
    }
}

/// Modified Gram-Schmidt with one reorthogonalization pass.
///
/// The output spans the same flag as the input and each output vector has a
/// positive component along its own input (after the previous directions are
/// removed), so the orientation of the frame is reproducible. A pivot norm
/// below `1e-12` times the input norm is reported as rank deficiency, with
/// the 1-based index of the offending vector.
pub fn gram_schmidt(vectors: &[Vector], ip: &InnerProduct) -> Result<Vec<Vector>> {
    let mut out: Vec<Vector> = Vec::with_capacity(vectors.len());
    for (k, input) in vectors.iter().enumerate() {
        let input_norm = ip.norm(input);
        let mut v = input.clone();
        for _ in 0..2 {
            for q in &out {
                let c = ip.apply(&v, q);
                v -= c * q;
            }
        }
        let pivot = ip.norm(&v);
        if pivot < 1e-12 * input_norm {
            return Err(Error::RankDeficient {
                index: k + 1,
                pivot,
            });
        }
        out.push(v / pivot);
    }
    Ok(out)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching eigenvectors as
/// columns of an orthogonal matrix. The input must be symmetric to within
/// `1e-10` entrywise.
pub fn sym_eigen(a: &Matrix) -> Result<(Vec<f64>, Matrix)> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let mut asym: f64 = 0.0;
    for i in 0..n {
        for j in 0..i {
            asym = asym.max((a[(i, j)] - a[(j, i)]).abs());
        }
    }
    if asym > 1e-10 {
        return Err(Error::NotSymmetric { residual: asym });
    }

    let mut m = Matrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]));
    let mut q = Matrix::identity(n, n);
    let norm = m.norm().max(f64::MIN_POSITIVE);
    let target = 1e-14 * norm;
    let max_sweeps = 100;

    let mut converged = n < 2;
    for _ in 0..max_sweeps {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for r in (p + 1)..n {
                off = off.max(m[(p, r)].abs());
            }
        }
        if off <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apq = m[(p, r)];
                if apq.abs() <= target * 1e-2 {
                    continue;
                }
                let theta = (m[(r, r)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkr = m[(k, r)];
                    m[(k, p)] = c * mkp - s * mkr;
                    m[(k, r)] = s * mkp + c * mkr;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mrk = m[(r, k)];
                    m[(p, k)] = c * mpk - s * mrk;
                    m[(r, k)] = s * mpk + c * mrk;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }
    if !converged {
        // final check after the last sweep
        let mut off: f64 = 0.0;
        for p in 0..n {
            for r in (p + 1)..n {
                off = off.max(m[(p, r)].abs());
            }
        }
        if off > target {
            return Err(Error::NoConvergence { sweeps: max_sweeps });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].partial_cmp(&m[(j, j)]).unwrap());
    let values: Vec<f64> = order.iter().map(|&i| m[(i, i)]).collect();
    let vectors = Matrix::from_fn(n, n, |i, j| q[(i, order[j])]);
    Ok((values, vectors))
}

/// Orthogonal projection of `v` onto the span of an orthonormal `basis`.
///
/// The basis is validated: its Gram matrix must deviate from the identity by
/// at most `1e-8` entrywise.
pub fn project(v: &Vector, basis: &[Vector], ip: &InnerProduct) -> Result<Vector> {
    let mut gram_residual: f64 = 0.0;
    for (i, bi) in basis.iter().enumerate() {
        for (j, bj) in basis.iter().enumerate() {
            let expected = if i == j { 1.0 } else { 0.0 };
            gram_residual = gram_residual.max((ip.apply(bi, bj) - expected).abs());
        }
    }
    if gram_residual > 1e-8 {
        return Err(Error::NotOrthonormal {
            residual: gram_residual,
        });
    }
    let mut out = Vector::zeros(v.len());
    for b in basis {
        out += ip.apply(v, b) * b;
    }
    Ok(out)
}

/// Central difference with one Richardson extrapolation step.
///
/// `sample(t)` evaluates the field at offset `t` along the chosen direction.
/// The combination `(4 D(h/2) - D(h)) / 3` cancels the leading `h^2` error
/// term, leaving `O(h^4)`.
pub fn richardson_central<F>(mut sample: F, h: f64) -> Result<Vector>
where
    F: FnMut(f64) -> Result<Vector>,
{
    let p1 = sample(h)?;
    let m1 = sample(-h)?;
    let ph = sample(h / 2.0)?;
    let mh = sample(-h / 2.0)?;
    let d_full = (p1 - m1) / (2.0 * h);
    let d_half = (ph - mh) / h;
    Ok((4.0 * d_half - d_full) / 3.0)
}

/// Directional derivative of a vector-valued field over parameter space.
///
/// The step is relative: `h = fd_step * (1 + |at|)`.
pub fn fd_directional<F>(
    field: &mut F,
    at: &Vector,
    dir: &Vector,
    profile: &ToleranceProfile,
) -> Result<Vector>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    let h = profile.fd_step * (1.0 + at.norm());
    let at = at.clone();
    let dir = dir.clone();
    richardson_central(
        |t| {
            let p = &at + t * &dir;
            field(&p).map_err(|e| Error::StencilFailure {
                dir: 0,
                offset: t,
                message: e.to_string(),
            })
        },
        h,
    )
}

/// Scalar convenience wrapper around [`fd_directional`].
pub fn fd_directional_scalar<F>(
    field: &mut F,
    at: &Vector,
    dir: &Vector,
    profile: &ToleranceProfile,
) -> Result<f64>
where
    F: FnMut(&Vector) -> Result<f64>,
{
    let mut wrapped = |p: &Vector| field(p).map(|x| Vector::from_vec(vec![x]));
    Ok(fd_directional(&mut wrapped, at, dir, profile)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(xs: &[f64]) -> Vector {
        Vector::from_row_slice(xs)
    }

    #[test]
    fn gram_schmidt_identity_on_orthonormal_input() {
        let out =
            gram_schmidt(&[v(&[1.0, 0.0]), v(&[0.0, 1.0])], &InnerProduct::Euclidean).unwrap();
        assert!((&out[0] - v(&[1.0, 0.0])).norm() < 1e-15);
        assert!((&out[1] - v(&[0.0, 1.0])).norm() < 1e-15);
    }

    #[test]
    fn gram_schmidt_single_projection() {
        let out =
            gram_schmidt(&[v(&[1.0, 0.0]), v(&[1.0, 1.0])], &InnerProduct::Euclidean).unwrap();
        assert!((&out[0] - v(&[1.0, 0.0])).norm() < 1e-15);
        assert!((&out[1] - v(&[0.0, 1.0])).norm() < 1e-12);
    }

    #[test]
    fn gram_schmidt_rank_deficiency() {
        let err =
            gram_schmidt(&[v(&[1.0, 0.0]), v(&[2.0, 0.0])], &InnerProduct::Euclidean).unwrap_err();
        match err {
            Error::RankDeficient { index, .. } => assert_eq!(index, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sym_eigen_small_cases() {
        let (vals, _) = sym_eigen(&Matrix::identity(2, 2)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0]);

        let (vals, _) = sym_eigen(&Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])).unwrap();
        assert_eq!(vals, vec![1.0, 2.0]);

        // characteristic polynomial of [[2,1],[1,2]] has roots 1 and 3
        let (vals, q) = sym_eigen(&Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0])).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        let qtq = q.transpose() * &q;
        assert!((qtq - Matrix::identity(2, 2)).norm() < 1e-10);
    }

    #[test]
    fn sym_eigen_rejects_asymmetric() {
        let err = sym_eigen(&Matrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::NotSymmetric { .. }));
    }

    #[test]
    fn project_examples() {
        let e1 = v(&[1.0, 0.0]);
        let p = project(
            &v(&[3.0, 4.0]),
            std::slice::from_ref(&e1),
            &InnerProduct::Euclidean,
        )
        .unwrap();
        assert!((p - v(&[3.0, 0.0])).norm() < 1e-15);

        // full basis reproduces the vector
        let basis = [v(&[1.0, 0.0]), v(&[0.0, 1.0])];
        let w = v(&[0.3, -0.7]);
        let p = project(&w, &basis, &InnerProduct::Euclidean).unwrap();
        assert!((p - w).norm() < 1e-15);

        // orthogonal direction projects to zero
        let p = project(&v(&[0.0, 1.0]), &[e1], &InnerProduct::Euclidean).unwrap();
        assert!(p.norm() < 1e-15);
    }

    #[test]
    fn project_rejects_non_orthonormal() {
        let err = project(
            &v(&[1.0, 1.0]),
            &[v(&[1.0, 0.0]), v(&[1.0, 0.0])],
            &InnerProduct::Euclidean,
        )
        .unwrap_err();
        assert!(matches!(err, Error::NotOrthonormal { .. }));
    }

    #[test]
    fn fd_directional_linear_and_constant_fields() {
        let profile = ToleranceProfile::default();
        // identity field: derivative along d is d
        let mut field = |p: &Vector| Ok(p.clone());
        let d = fd_directional(&mut field, &v(&[0.3, -1.0]), &v(&[0.5, 2.0]), &profile).unwrap();
        assert!((d - v(&[0.5, 2.0])).norm() < 1e-10);

        let mut constant = |_: &Vector| Ok(v(&[4.0, 4.0]));
        let d = fd_directional(&mut constant, &v(&[0.0, 0.0]), &v(&[1.0, 0.0]), &profile).unwrap();
        assert!(d.norm() == 0.0);
    }

    #[test]
    fn fd_directional_circle_field() {
        // analytic oracle: d/du (cos u, sin u) at u = 0 is (0, 1)
        let profile = ToleranceProfile::default();
        let mut field = |p: &Vector| Ok(v(&[p[0].cos(), p[0].sin()]));
        let d = fd_directional(&mut field, &v(&[0.0]), &v(&[1.0]), &profile).unwrap();
        assert!((d - v(&[0.0, 1.0])).norm() < 1e-9);
    }

    #[test]
    fn fd_exact_on_cubics() {
        // central difference is exact through degree 2; Richardson extends
        // exactness through degree 3 up to roundoff
        let profile = ToleranceProfile::default();
        let mut field = |p: &Vector| {
            let x = p[0];
            Ok(v(&[x * x * x - 2.0 * x]))
        };
        let d = fd_directional(&mut field, &v(&[1.2]), &v(&[1.0]), &profile).unwrap();
        let exact = 3.0 * 1.2f64 * 1.2 - 2.0;
        assert!((d[0] - exact).abs() <= 1e-9 * exact.abs());
    }

    #[test]
    fn tolerance_profile_validation() {
        assert!(ToleranceProfile::default().validate().is_ok());
        let bad = ToleranceProfile {
            tol_first: 1e-3,
            tol_second: 1e-6,
            ..ToleranceProfile::default()
        };
        assert!(bad.validate().is_err());
    }
}
