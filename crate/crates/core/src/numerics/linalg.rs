//! Dense matrix exponential and principal logarithm.

use nalgebra::{Complex, DMatrix};
use thiserror::Error;

pub type C64 = Complex<f64>;
/// Complex square matrix; the carrier for propagators and complexified PTMs.
pub type CMatrix = DMatrix<C64>;
/// Real matrix; PTMs and error generators.
pub type RMatrix = DMatrix<f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("matrix is singular")]
    Singular,
    #[error("eigenvalue {0} lies on the negative real axis; principal logarithm is ambiguous")]
    BranchAmbiguity(C64),
    #[error("Schur decomposition did not converge")]
    NoConvergence,
}

const COND_LIMIT: f64 = 1e8;
const BRANCH_TOL: f64 = 1e-12;

fn check(m: &CMatrix) -> Result<(), LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    Ok(())
}

/// Promote a real matrix to complex.
pub fn complexify(m: &RMatrix) -> CMatrix {
    m.map(|x| C64::new(x, 0.0))
}

/// Operator 2-norm.
pub fn norm2(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().max()
}

/// Matrix exponential by Padé scaling-and-squaring.
pub fn matrix_exp(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    check(m)?;
    Ok(m.exp())
}

/// Real matrix exponential.
pub fn matrix_exp_real(m: &RMatrix) -> Result<RMatrix, LinalgError> {
    if m.nrows() != m.ncols() {
        return Err(LinalgError::NotSquare(m.nrows(), m.ncols()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(LinalgError::NonFinite);
    }
    Ok(m.exp())
}

/// Principal matrix logarithm.
///
/// Works on the complex Schur form `m = Q T Q†`. The eigenvector route is used
/// when the eigenvector matrix of `T` has condition number ≤ 1e8 and the
/// result round-trips; otherwise inverse scaling-and-squaring on `T`.
pub fn matrix_log_principal(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    check(m)?;
    let n = m.nrows();
    if n == 0 {
        return Ok(m.clone());
    }
    let id = CMatrix::identity(n, n);
    if (m - &id).norm() <= 0.25 {
        return Ok(atanh_log(m, &id));
    }
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let (q, t) = nalgebra::Schur::try_new(m.clone(), f64::EPSILON, 10_000)
        .ok_or(LinalgError::NoConvergence)?
        .unpack();
    for i in 0..n {
        let l = t[(i, i)];
        if l.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(LinalgError::Singular);
        }
        if l.re < 0.0 && l.im.abs() <= BRANCH_TOL * l.norm() {
            return Err(LinalgError::BranchAmbiguity(l));
        }
    }

    let log_t = match log_triangular_eigen(&t) {
        Some(lt) if round_trip_ok(&lt, &t) => lt,
        _ => log_triangular_iss(&t),
    };
    Ok(&q * log_t * q.adjoint())
}

fn round_trip_ok(log_t: &CMatrix, t: &CMatrix) -> bool {
    let back = log_t.exp();
    let err = (back - t).norm();
    err <= 1e-11 * t.norm()
}

/// Eigenvectors of an upper-triangular matrix by back substitution.
/// `None` when a repeated eigenvalue has a defective block.
fn triangular_eigenvectors(t: &CMatrix) -> Option<CMatrix> {
    let n = t.nrows();
    let scale = t.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tol = 1e-13 * scale;
    let mut v = CMatrix::zeros(n, n);
    for j in 0..n {
        let lj = t[(j, j)];
        v[(j, j)] = C64::new(1.0, 0.0);
        for i in (0..j).rev() {
            let mut s = C64::new(0.0, 0.0);
            for k in i + 1..=j {
                s += t[(i, k)] * v[(k, j)];
            }
            let d = t[(i, i)] - lj;
            if d.norm() > tol {
                v[(i, j)] = -s / d;
            } else if s.norm() <= tol {
                v[(i, j)] = C64::new(0.0, 0.0);
            } else {
                return None;
            }
        }
        let norm = v.column(j).norm();
        v.column_mut(j).unscale_mut(norm);
    }
    Some(v)
}

fn log_triangular_eigen(t: &CMatrix) -> Option<CMatrix> {
    let n = t.nrows();
    let v = triangular_eigenvectors(t)?;
    let sv = v.clone().singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= COND_LIMIT) {
        return None;
    }
    let vinv = v.clone().try_inverse()?;
    let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        (0..n).map(|i| t[(i, i)].ln()),
    ));
    Some(v * d * vinv)
}

/// Principal square root of an upper-triangular matrix.
fn sqrt_triangular(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut r = CMatrix::zeros(n, n);
    for i in 0..n {
        r[(i, i)] = t[(i, i)].sqrt();
    }
    for d in 1..n {
        for i in 0..n - d {
            let j = i + d;
            let mut s = t[(i, j)];
            for k in i + 1..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

fn log_triangular_iss(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let id = CMatrix::identity(n, n);
    let mut a = t.clone();
    let mut k = 0u32;
    while (&a - &id).norm() > 0.25 && k < 64 {
        a = sqrt_triangular(&a);
        k += 1;
    }
    atanh_log(&a, &id) * C64::new(2f64.powi(k as i32), 0.0)
}

/// log A = 2 atanh(Z), Z = (A − I)(A + I)⁻¹, for A near the identity.
fn atanh_log(a: &CMatrix, id: &CMatrix) -> CMatrix {
    let z = (a - id) * (a + id).try_inverse().expect("A + I is invertible near I");
    let z2 = &z * &z;
    let mut term = z.clone();
    let mut sum = z.clone();
    for j in 1..200 {
        term = &term * &z2;
        let contrib = &term / C64::new((2 * j + 1) as f64, 0.0);
        let size = contrib.norm();
        sum += contrib;
        if size <= 1e-18 * sum.norm().max(1e-300) {
            break;
        }
    }
    sum * C64::new(2.0, 0.0)
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}

/// Kronecker product.
pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn close(a: &CMatrix, b: &CMatrix, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn exp_basics() {
        let z = CMatrix::zeros(3, 3);
        assert!(close(&matrix_exp(&z).unwrap(), &CMatrix::identity(3, 3), 1e-15));
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(0.5), c(-1.2)]));
        let e = matrix_exp(&d).unwrap();
        assert!((e[(0, 0)].re - 0.5f64.exp()).abs() < 1e-14);
        assert!((e[(1, 1)].re - (-1.2f64).exp()).abs() < 1e-14);
        let nil = CMatrix::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let e = matrix_exp(&nil).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(1.0), c(1.0), c(0.0), c(1.0)]);
        assert!(close(&e, &want, 1e-15));
    }

    #[test]
    fn exp_rejects_nan() {
        let mut m = CMatrix::zeros(2, 2);
        m[(0, 1)] = c(f64::NAN);
        assert_eq!(matrix_exp(&m), Err(LinalgError::NonFinite));
        assert!(matches!(matrix_exp(&CMatrix::zeros(2, 3)), Err(LinalgError::NotSquare(2, 3))));
    }

    #[test]
    fn log_basics() {
        let id = CMatrix::identity(4, 4);
        assert!(matrix_log_principal(&id).unwrap().norm() < 1e-15);
        let e1 = std::f64::consts::E;
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(e1), c(e1 * e1)]));
        let l = matrix_log_principal(&d).unwrap();
        assert!((l[(0, 0)].re - 1.0).abs() < 1e-14);
        assert!((l[(1, 1)].re - 2.0).abs() < 1e-14);
        assert!(l[(0, 1)].norm() < 1e-14);
    }

    #[test]
    fn log_of_rotation() {
        let th: f64 = 0.3;
        let r = CMatrix::from_row_slice(
            2,
            2,
            &[c(th.cos()), c(-th.sin()), c(th.sin()), c(th.cos())],
        );
        let l = matrix_log_principal(&r).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0), c(-0.3), c(0.3), c(0.0)]);
        assert!(close(&l, &want, 1e-14));
    }

    #[test]
    fn log_errors() {
        let m = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(-2.0)]));
        assert!(matches!(matrix_log_principal(&m), Err(LinalgError::BranchAmbiguity(_))));
        let s = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), c(0.0)]));
        assert_eq!(matrix_log_principal(&s), Err(LinalgError::Singular));
    }

    #[test]
    fn log_of_jordan_block_uses_fallback() {
        // defective: eigenvector route refuses, ISS handles it
        let m = CMatrix::from_row_slice(2, 2, &[c(1.0), c(0.3), c(0.0), c(1.0)]);
        let l = matrix_log_principal(&m).unwrap();
        let want = CMatrix::from_row_slice(2, 2, &[c(0.0), c(0.3), c(0.0), c(0.0)]);
        assert!(close(&l, &want, 1e-14));
        let m = CMatrix::from_row_slice(2, 2, &[c(5.0), c(40.0), c(0.0), c(5.0)]);
        let l = matrix_log_principal(&m).unwrap();
        assert!(close(&matrix_exp(&l).unwrap(), &m, 1e-10 * 40.0));
    }

    #[test]
    fn log_principal_branch_imag_parts() {
        // rotation by 3.0 rad, close to but inside the branch cut
        let th: f64 = 3.0;
        let r = CMatrix::from_row_slice(
            2,
            2,
            &[c(th.cos()), c(-th.sin()), c(th.sin()), c(th.cos())],
        );
        let l = matrix_log_principal(&r).unwrap();
        assert!((l[(1, 0)].re - 3.0).abs() < 1e-12);
    }

    #[test]
    fn iss_matches_eigen_route() {
        let m = CMatrix::from_row_slice(
            3,
            3,
            &[c(1.1), c(0.2), c(0.05), c(0.0), c(0.9), c(-0.1), c(0.0), c(0.0), c(1.3)],
        );
        let a = log_triangular_eigen(&m).unwrap();
        let b = log_triangular_iss(&m);
        assert!(close(&a, &b, 1e-13));
        let big = &m * c(7.0);
        let a = log_triangular_eigen(&big).unwrap();
        let b = log_triangular_iss(&big);
        assert!(close(&a, &b, 1e-12));
    }

    #[test]
    fn hermitian_eigs() {
        let m = CMatrix::from_row_slice(2, 2, &[c(2.0), C64::new(0.0, 1.0), C64::new(0.0, -1.0), c(2.0)]);
        let ev = hermitian_eigenvalues(&m);
        assert!((ev[0] - 1.0).abs() < 1e-12 && (ev[1] - 3.0).abs() < 1e-12);
    }
}
