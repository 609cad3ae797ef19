//! Dense complex linear algebra shared by the spectral and metric modules.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn diag(values: &[C64]) -> CMat {
    CMat::from_diagonal(&CVec::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> CMat {
    CMat::from_fn(values.len(), values.len(), |i, j| {
        if i == j {
            c(values[i], 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    })
}

/// Largest entry magnitude.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_vec(v: &CVec) -> f64 {
    v.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |m - m†|` entrywise.
pub fn hermitian_violation(m: &CMat) -> f64 {
    assert!(m.is_square());
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

/// `max |m - identity|` entrywise.
pub fn identity_deviation(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - target).norm());
        }
    }
    worst
}

pub fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// 2-norm condition number from the singular values; infinite when singular.
pub fn condition_number(m: &CMat) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 1.0;
    }
    if !is_finite(m) {
        return f64::INFINITY;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0, f64::max);
    let min = sv.iter().cloned().fold(f64::INFINITY, f64::min);
    if min <= 0.0 || !min.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn inverse(m: &CMat) -> Result<CMat> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            found: m.ncols(),
        });
    }
    m.clone().try_inverse().ok_or(Error::IllConditioned {
        cond: f64::INFINITY,
        bound: f64::INFINITY,
    })
}

/// Smallest eigenvalue of a Hermitian matrix (the input is symmetrized first).
pub fn min_hermitian_eigenvalue(m: &CMat) -> f64 {
    hermitian_eigenvalues(m)
        .into_iter()
        .fold(f64::INFINITY, f64::min)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let sym = hermitian_part(m);
    sym.symmetric_eigenvalues().iter().cloned().collect()
}

/// `(m + m†) / 2`
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

/// Eigendecomposition of a general complex square matrix.
///
/// Returns eigenvalues in Schur order together with unit-norm eigenvectors as
/// columns. Eigenvectors come from back-substitution on the triangular Schur
/// factor.
pub fn eig(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let n = m.nrows();
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.ncols(),
        });
    }
    if n == 0 {
        return Ok((Vec::new(), CMat::zeros(0, 0)));
    }
    if !is_finite(m) {
        return Err(Error::EigenFailure);
    }
    let schur = nalgebra::linalg::Schur::try_new(m.clone(), f64::EPSILON, 10_000 * n.max(10))
        .ok_or(Error::EigenFailure)?;
    let (q, t) = schur.unpack();
    let values: Vec<C64> = (0..n).map(|k| t[(k, k)]).collect();
    let scale = max_abs(&t).max(f64::MIN_POSITIVE);
    let floor = f64::EPSILON * scale;

    let mut y = CMat::zeros(n, n);
    for k in 0..n {
        let lambda = t[(k, k)];
        y[(k, k)] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = C64::new(0.0, 0.0);
            for j in (i + 1)..=k {
                acc += t[(i, j)] * y[(j, k)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < floor {
                denom = C64::new(floor, 0.0);
            }
            y[(i, k)] = -acc / denom;
        }
        // rescale the column as it grows to avoid overflow on non-normal input
        let col_max = (0..=k).fold(0.0_f64, |a, i| a.max(y[(i, k)].norm()));
        if col_max > 1e100 {
            for i in 0..=k {
                y[(i, k)] /= col_max;
            }
        }
    }
    let mut vectors = q * y;
    for mut col in vectors.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= C64::new(norm, 0.0);
        }
    }
    Ok((values, vectors))
}

/// Thin QR factorization with the diagonal of `R` made real and nonnegative.
pub fn qr_positive(m: &CMat) -> (CMat, CMat) {
    let qr = m.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for k in 0..r.nrows().min(r.ncols()) {
        let d = r[(k, k)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            for j in 0..r.ncols() {
                r[(k, j)] *= phase.conj();
            }
            for i in 0..q.nrows() {
                q[(i, k)] *= phase;
            }
        }
    }
    (q, r)
}

/// Euclidean inner product `a† b`.
pub fn dot(a: &CVec, b: &CVec) -> C64 {
    a.dotc(b)
}

pub fn rows_to_matrix(rows: &[Vec<C64>]) -> Result<CMat> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    for row in rows {
        if row.len() != ncols {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                found: row.len(),
            });
        }
    }
    Ok(CMat::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &CMat) -> Vec<Vec<C64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}
