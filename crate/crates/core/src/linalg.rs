//! Dense complex linear algebra: Hermitian matrices, Kronecker products,
//! direct sums and Hermitian eigensolves.
//!
//! [`HMat`] is the numeric carrier used by every other module. Its
//! constructors enforce exact Hermitian symmetry, so downstream code never
//! has to re-symmetrize.

use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;

/// General complex matrix (isometries, products of Hermitian matrices).
pub type CMat = DMatrix<C64>;

/// Default tolerance for Hermiticity checks, relative to the largest entry.
pub const HERMITIAN_TOL: f64 = 1e-9;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// A dense Hermitian matrix with exact conjugate symmetry.
#[derive(Clone, PartialEq)]
pub struct HMat(DMatrix<C64>);

impl fmt::Debug for HMat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "HMat{}", self.0)
    }
}

/// Ascending eigenvalues with an orthonormal eigenbasis (columns).
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Eigen {
    /// V diag(f(λ)) V*.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> HMat {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let s = f(l);
            for i in 0..n {
                scaled[(i, j)] *= s;
            }
        }
        HMat::from_cmat_unchecked(&scaled * self.vectors.adjoint())
    }
}

impl HMat {
    /// Symmetrizes `m` to `(m + m*)/2`, rejecting inputs whose skew part
    /// exceeds `tol` times the largest entry magnitude (floored at one).
    pub fn hermitize(m: &CMat, tol: f64) -> Result<HMat> {
        let (rows, cols) = m.shape();
        if rows != cols {
            return Err(Error::NotSquare { rows, cols });
        }
        if rows == 0 {
            return Err(Error::dim("Hermitian matrices must have dim >= 1"));
        }
        let mut skew = 0.0f64;
        let mut scale = 0.0f64;
        for i in 0..rows {
            for j in 0..cols {
                skew = skew.max((m[(i, j)] - m[(j, i)].conj()).norm());
                scale = scale.max(m[(i, j)].norm());
            }
        }
        let bound = tol * scale.max(1.0);
        if skew > bound {
            return Err(Error::NotHermitian { skew, tol: bound });
        }
        Ok(Self::from_cmat_unchecked(m.clone()))
    }

    /// Symmetrizes without validation. Used on results of operations that are
    /// Hermitian in exact arithmetic.
    pub fn from_cmat_unchecked(mut m: CMat) -> HMat {
        let n = m.nrows();
        debug_assert_eq!(n, m.ncols());
        for i in 0..n {
            m[(i, i)] = c64(m[(i, i)].re, 0.0);
            for j in (i + 1)..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        HMat(m)
    }

    pub fn from_rows(rows: &[Vec<C64>]) -> Result<HMat> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::dim("matrix rows must all have length equal to the row count"));
        }
        let m = CMat::from_fn(n, n, |i, j| rows[i][j]);
        Self::hermitize(&m, HERMITIAN_TOL)
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Result<HMat> {
        let rows: Vec<Vec<C64>> =
            rows.iter().map(|r| r.iter().map(|&x| c64(x, 0.0)).collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn zeros(dim: usize) -> HMat {
        HMat(CMat::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> HMat {
        HMat(CMat::identity(dim, dim))
    }

    pub fn from_real_diag(diag: &[f64]) -> HMat {
        let n = diag.len();
        HMat(CMat::from_fn(n, n, |i, j| if i == j { c64(diag[i], 0.0) } else { ZERO }))
    }

    /// |v><v|
    pub fn projector(v: &DVector<C64>) -> HMat {
        Self::from_cmat_unchecked(v * v.adjoint())
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    #[inline]
    pub fn as_cmat(&self) -> &CMat {
        &self.0
    }

    pub fn into_cmat(self) -> CMat {
        self.0
    }

    pub fn is_diagonal(&self) -> bool {
        let n = self.dim();
        (0..n).all(|i| (0..n).all(|j| i == j || self.0[(i, j)] == ZERO))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.0[(i, i)].re).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.dim()).map(|i| self.0[(i, i)].re).sum()
    }

    /// Real inner product Re tr(A* B); equals tr(AB) for Hermitian arguments.
    pub fn inner(&self, other: &HMat) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.0.iter().zip(other.0.iter()).map(|(a, b)| (a.conj() * b).re).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: f64) -> HMat {
        HMat(&self.0 * c64(s, 0.0))
    }

    pub fn kron(&self, other: &HMat) -> HMat {
        HMat(self.0.kronecker(&other.0))
    }

    /// Block-diagonal stack `self ⊕ other`.
    pub fn direct_sum(&self, other: &HMat) -> HMat {
        let (a, b) = (self.dim(), other.dim());
        let mut m = CMat::zeros(a + b, a + b);
        m.view_mut((0, 0), (a, a)).copy_from(&self.0);
        m.view_mut((a, a), (b, b)).copy_from(&other.0);
        HMat(m)
    }

    /// V* A V for a (d x l) matrix V.
    pub fn congruence(&self, v: &CMat) -> Result<HMat> {
        if v.nrows() != self.dim() {
            return Err(Error::dim(format!(
                "congruence by {}x{} matrix on a {}-dimensional operator",
                v.nrows(),
                v.ncols(),
                self.dim()
            )));
        }
        Ok(Self::from_cmat_unchecked(v.adjoint() * &self.0 * v))
    }

    /// Column-stacking vectorization; <vec A, vec B> = tr(A* B).
    pub fn vectorize(&self) -> DVector<C64> {
        DVector::from_column_slice(self.0.as_slice())
    }

    pub fn eig(&self) -> Result<Eigen> {
        let n = self.dim();
        let decomposition = SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, 1000 * n.max(4))
            .ok_or(Error::EigenNoConvergence(n))?;
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| decomposition.eigenvalues[a].total_cmp(&decomposition.eigenvalues[b]));
        let values = order.iter().map(|&k| decomposition.eigenvalues[k]).collect();
        let vectors = CMat::from_fn(n, n, |i, j| decomposition.eigenvectors[(i, order[j])]);
        Ok(Eigen { values, vectors })
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        if self.dim() == 1 {
            return Ok(vec![self.0[(0, 0)].re]);
        }
        let mut vals: Vec<f64> = SymmetricEigen::try_new(self.0.clone(), f64::EPSILON, 1000 * self.dim().max(4))
            .ok_or(Error::EigenNoConvergence(self.dim()))?
            .eigenvalues
            .iter()
            .copied()
            .collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    pub fn eig_min(&self) -> Result<f64> {
        Ok(self.eigenvalues()?[0])
    }

    pub fn eig_max(&self) -> Result<f64> {
        Ok(*self.eigenvalues()?.last().expect("dim >= 1"))
    }

    /// Spectral norm.
    pub fn op_norm(&self) -> Result<f64> {
        let v = self.eigenvalues()?;
        Ok(v[0].abs().max(v[v.len() - 1].abs()))
    }

    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        Ok(self.eig_min()? >= -tol)
    }
}

impl Add for &HMat {
    type Output = HMat;
    fn add(self, rhs: &HMat) -> HMat {
        HMat(&self.0 + &rhs.0)
    }
}

impl Sub for &HMat {
    type Output = HMat;
    fn sub(self, rhs: &HMat) -> HMat {
        HMat(&self.0 - &rhs.0)
    }
}

impl Neg for &HMat {
    type Output = HMat;
    fn neg(self) -> HMat {
        HMat(-&self.0)
    }
}

impl Mul<f64> for &HMat {
    type Output = HMat;
    fn mul(self, s: f64) -> HMat {
        self.scale(s)
    }
}

impl AddAssign<&HMat> for HMat {
    fn add_assign(&mut self, rhs: &HMat) {
        self.0 += &rhs.0;
    }
}

impl SubAssign<&HMat> for HMat {
    fn sub_assign(&mut self, rhs: &HMat) {
        self.0 -= &rhs.0;
    }
}

/// Sum of a non-empty collection of equally sized Hermitian matrices.
pub fn sum<'a>(dim: usize, mats: impl IntoIterator<Item = &'a HMat>) -> HMat {
    let mut acc = HMat::zeros(dim);
    for m in mats {
        acc += m;
    }
    acc
}

/// Pauli matrices.
pub mod pauli {
    use super::*;

    pub fn x() -> HMat {
        HMat::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap()
    }

    pub fn y() -> HMat {
        HMat::from_rows(&[vec![ZERO, -I], vec![I, ZERO]]).unwrap()
    }

    pub fn z() -> HMat {
        HMat::from_real_diag(&[1.0, -1.0])
    }
}

/// Checks V*V = I within `tol` (max entry), returning the deviation.
pub fn isometry_defect(v: &CMat) -> f64 {
    let g = v.adjoint() * v;
    let n = g.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { ONE } else { ZERO };
            worst = worst.max((g[(i, j)] - target).norm());
        }
    }
    worst
}
