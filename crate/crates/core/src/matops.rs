//! Dense complex matrices and Hermitian spectral utilities.
//!
//! Matrices are small (dimension at most [`MAX_DIM`]) and stored row-major.
//! The eigensolver is a cyclic complex Jacobi iteration, which keeps the
//! crate free of LAPACK and gives good relative accuracy for the tiny
//! eigenvalues that decide positivity.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::config::{EPS_HERM, EPS_PD};
use crate::error::{Error, Result};

pub const MAX_DIM: usize = 64;
const MAX_SWEEPS: usize = 100;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    /// Builds a matrix from rows, rejecting ragged or non-finite input.
    pub fn from_rows(rows: Vec<Vec<Complex64>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != dim {
                return Err(Error::NotSquare {
                    rows: dim,
                    row: r,
                    len: row.len(),
                });
            }
            for (c, z) in row.into_iter().enumerate() {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::NonFinite { row: r, col: c });
                }
                data.push(z);
            }
        }
        Ok(Self { dim, data })
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        Self::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| Complex64::new(x, 0.0)).collect())
                .collect(),
        )
    }

    /// Outer product `|v><v|`.
    pub fn outer(v: &[Complex64]) -> Self {
        let dim = v.len();
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim.max(1)).map(|r| r.to_vec()).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute value over real and imaginary parts of all entries.
    pub fn max_abs_component(&self) -> f64 {
        self.data.iter().map(|z| z.re.abs().max(z.im.abs())).fold(0.0, f64::max)
    }

    /// `tr(self * other)` without forming the product.
    pub fn trace_product(&self, other: &CMatrix) -> Complex64 {
        debug_assert_eq!(self.dim, other.dim);
        let n = self.dim;
        let mut acc = ZERO;
        for i in 0..n {
            for k in 0..n {
                acc += self[(i, k)] * other[(k, i)];
            }
        }
        acc
    }

    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, other.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = CMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        out
    }

    pub fn distance(&self, other: &CMatrix) -> f64 {
        (self - other).frobenius_norm()
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        CMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.rows()).finish()
    }
}

// Complex entries travel as `[re, im]` pairs.
impl Serialize for CMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<[f64; 2]>> = self
            .rows()
            .into_iter()
            .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
            .collect();
        rows.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for CMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let rows = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let rows = rows
            .into_iter()
            .map(|r| r.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
            .collect();
        CMatrix::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

/// A complex matrix that is exactly Hermitian.
#[derive(Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HermitianMatrix(CMatrix);

impl HermitianMatrix {
    /// Accepts `m` if `||m - m^†||_F <= EPS_HERM * ||m||_F`, then stores `(m + m^†)/2`.
    pub fn new(m: CMatrix) -> Result<Self> {
        let norm = m.frobenius_norm();
        let defect = (&m - &m.adjoint()).frobenius_norm();
        if defect > EPS_HERM * norm {
            return Err(Error::NotHermitian {
                defect: if norm > 0.0 { defect / norm } else { defect },
            });
        }
        Ok(Self::symmetrize(&m))
    }

    /// `(m + m^†)/2` with no tolerance check.
    pub fn symmetrize(m: &CMatrix) -> Self {
        let mut s = (m + &m.adjoint()).scale(0.5);
        for i in 0..s.dim {
            s[(i, i)].im = 0.0;
        }
        Self(s)
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        Self(CMatrix::from_real_diag(diag))
    }

    /// Rank-one projector onto `v` (not normalized).
    pub fn outer(v: &[Complex64]) -> Self {
        Self::symmetrize(&CMatrix::outer(v))
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self(self.0.scale(s))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.frobenius_norm()
    }

    pub fn distance(&self, other: &HermitianMatrix) -> f64 {
        self.0.distance(&other.0)
    }

    /// `tr(self * other)`; real for Hermitian arguments.
    pub fn trace_product(&self, other: &HermitianMatrix) -> f64 {
        self.0.trace_product(&other.0).re
    }

    /// `u^† self u`.
    pub fn congruence(&self, u: &CMatrix) -> Self {
        Self::symmetrize(&u.adjoint().matmul(&self.0).matmul(u))
    }
}

impl Add for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn add(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &HermitianMatrix {
    type Output = HermitianMatrix;
    fn sub(self, rhs: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &rhs.0)
    }
}

impl std::iter::Sum for HermitianMatrix {
    fn sum<I: Iterator<Item = HermitianMatrix>>(mut iter: I) -> Self {
        let first = iter.next().expect("sum of an empty sequence of matrices");
        iter.fold(first, |acc, m| &acc + &m)
    }
}

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl<'de> Deserialize<'de> for HermitianMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let m = CMatrix::deserialize(deserializer)?;
        HermitianMatrix::new(m).map_err(serde::de::Error::custom)
    }
}

/// Spectral decomposition `M = V diag(values) V^†`, eigenvalues descending.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// Column `k` is the eigenvector for `values[k]`.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `V diag(g(values)) V^†`.
    pub fn map_values(&self, g: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = self.vectors.dim();
        let mut out = CMatrix::zeros(n);
        for (k, &lam) in self.values.iter().enumerate() {
            let w = g(lam);
            for i in 0..n {
                let vi = self.vectors[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        HermitianMatrix::symmetrize(&out)
    }
}

fn off_diagonal_norm(a: &CMatrix) -> f64 {
    let n = a.dim;
    let mut s = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[(i, j)].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi eigendecomposition of a Hermitian matrix.
pub fn eig_hermitian(m: &HermitianMatrix) -> Result<Eigen> {
    let n = m.dim();
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim: n, max: MAX_DIM });
    }
    let mut a = m.as_matrix().clone();
    let mut v = CMatrix::identity(n);
    let scale = a.frobenius_norm();
    let target = f64::EPSILON * scale;

    let mut converged = n <= 1 || scale == 0.0;
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        if off_diagonal_norm(&a) <= target {
            converged = true;
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                // Phase rotation makes the (p,q) entry real, then a real Jacobi
                // rotation annihilates it: U = diag(1, e^{-i phi}) acting on (p, q)
                // followed by [[c, s], [-s, c]].
                let phase = apq / mag;
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let ph = phase.conj();
                // U restricted to (p, q):
                let u_pp = Complex64::new(c, 0.0);
                let u_pq = Complex64::new(s, 0.0);
                let u_qp = -ph * s;
                let u_qq = ph * c;

                // A <- A U
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * u_pp + akq * u_qp;
                    a[(k, q)] = akp * u_pq + akq * u_qq;
                }
                // A <- U^† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = u_pp.conj() * apk + u_qp.conj() * aqk;
                    a[(q, k)] = u_pq.conj() * apk + u_qq.conj() * aqk;
                }
                a[(p, q)] = ZERO;
                a[(q, p)] = ZERO;
                a[(p, p)].im = 0.0;
                a[(q, q)].im = 0.0;
                // V <- V U
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * u_pp + vkq * u_qp;
                    v[(k, q)] = vkp * u_pq + vkq * u_qq;
                }
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        // A final sweep may have landed exactly on the target.
        if off > target * 16.0 {
            return Err(Error::EigFailure { off_norm: off });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n);
    for (col, &src) in order.iter().enumerate() {
        for row in 0..n {
            vectors[(row, col)] = v[(row, src)];
        }
    }
    Ok(Eigen { values, vectors })
}

pub fn eigenvalues(m: &HermitianMatrix) -> Result<Vec<f64>> {
    Ok(eig_hermitian(m)?.values)
}

/// Sum of absolute eigenvalues.
pub fn trace_norm(m: &HermitianMatrix) -> Result<f64> {
    Ok(eig_hermitian(m)?.values.iter().map(|x| x.abs()).sum())
}

/// Largest absolute eigenvalue.
pub fn operator_norm(m: &HermitianMatrix) -> Result<f64> {
    let e = eig_hermitian(m)?;
    Ok(e.max().abs().max(e.min().abs()))
}

/// `M^{-1/2}` for a positive definite `M`.
pub fn inv_sqrt_psd(m: &HermitianMatrix) -> Result<HermitianMatrix> {
    let e = eig_hermitian(m)?;
    let min_eig = e.min();
    if min_eig < EPS_PD {
        return Err(Error::NotPositiveDefinite { min_eig });
    }
    Ok(e.map_values(|x| 1.0 / x.sqrt()))
}

pub fn is_psd(m: &HermitianMatrix, tol: f64) -> bool {
    match eig_hermitian(m) {
        Ok(e) => e.min() >= -tol,
        Err(_) => false,
    }
}
