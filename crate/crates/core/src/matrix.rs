//! Dense complex matrices and the Hermitian-PSD wrapper used throughout.
//!
//! These are deliberately small-matrix kernels: every channel in scope has a
//! handful of antennas, so the representation is a row-major `Vec` and the
//! algorithms are the plain O(n^3) ones.

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use num_complex::Complex;
use serde::{Deserialize, Serialize};
use std::ops::{Add, Mul, Sub};

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

impl<T: Scalar> ComplexMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::new(T::zero(), T::zero()); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::new(T::one(), T::zero()));
        }
        m
    }

    pub fn scaled_identity(n: usize, v: T) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex::new(v, T::zero()));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from nested rows; all rows must have equal length.
    pub fn from_rows(rows: Vec<Vec<Complex<T>>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    /// Real diagonal matrix.
    pub fn from_diag(diag: &[T]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex::new(diag[i], T::zero())
            } else {
                Complex::new(T::zero(), T::zero())
            }
        })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex<T>) {
        self.data[i * self.cols + j] = v;
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.scale(s)).collect(),
        }
    }

    pub fn scale_complex(&self, s: Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let v = out.get(i, j) + a * rhs.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    /// `self * rhs * self^*`, symmetrized so the result is exactly Hermitian.
    pub fn sandwich(&self, inner: &Self) -> Self {
        let p = self.matmul(inner).matmul(&self.adjoint());
        p.hermitize()
    }

    /// Average with own conjugate transpose (kills rounding skew).
    pub fn hermitize(&self) -> Self {
        assert!(self.is_square());
        let half = T::of(0.5);
        Self::from_fn(self.rows, self.cols, |i, j| {
            (self.get(i, j) + self.get(j, i).conj()).scale(half)
        })
    }

    pub fn frobenius_norm(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm_sqr())
            .fold(T::zero(), |a, b| a + b)
            .sqrt()
    }

    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| a.max(b))
    }

    pub fn trace(&self) -> Complex<T> {
        assert!(self.is_square());
        (0..self.rows).fold(Complex::new(T::zero(), T::zero()), |acc, i| {
            acc + self.get(i, i)
        })
    }

    /// Deviation from Hermitian symmetry, relative to the matrix norm.
    pub fn hermitian_deviation(&self) -> T {
        let diff = self - &self.adjoint();
        let n = self.frobenius_norm();
        if n == T::zero() {
            diff.frobenius_norm()
        } else {
            diff.frobenius_norm() / n
        }
    }

    /// Squared Frobenius norm of a row block `[r0, r1)`.
    pub fn row_block_norm_sqr(&self, r0: usize, r1: usize) -> T {
        let mut acc = T::zero();
        for i in r0..r1 {
            for j in 0..self.cols {
                acc += self.get(i, j).norm_sqr();
            }
        }
        acc
    }

    /// Copy of rows `[r0, r1)`.
    pub fn row_block(&self, r0: usize, r1: usize) -> Self {
        Self::from_fn(r1 - r0, self.cols, |i, j| self.get(r0 + i, j))
    }

    /// Horizontal concatenation `[self rhs]`.
    pub fn hcat(&self, rhs: &Self) -> Self {
        assert_eq!(self.rows, rhs.rows, "hcat row mismatch");
        Self::from_fn(self.rows, self.cols + rhs.cols, |i, j| {
            if j < self.cols {
                self.get(i, j)
            } else {
                rhs.get(i, j - self.cols)
            }
        })
    }

    /// Vertical concatenation `[self; rhs]`.
    pub fn vcat(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.cols, "vcat col mismatch");
        Self::from_fn(self.rows + rhs.rows, self.cols, |i, j| {
            if i < self.rows {
                self.get(i, j)
            } else {
                rhs.get(i - self.rows, j)
            }
        })
    }

    /// Hermitian 2x2 block assembly `[[a, b], [b^*, d]]`; `a` and `d` square.
    pub fn block2x2_hermitian(a: &Self, b: &Self, d: &Self) -> Self {
        assert!(a.is_square() && d.is_square());
        assert_eq!(b.rows, a.rows);
        assert_eq!(b.cols, d.cols);
        let n = a.rows + d.rows;
        Self::from_fn(n, n, |i, j| {
            if i < a.rows && j < a.rows {
                a.get(i, j)
            } else if i < a.rows {
                b.get(i, j - a.rows)
            } else if j < a.rows {
                b.get(j, i - a.rows).conj()
            } else {
                d.get(i - a.rows, j - a.rows)
            }
        })
    }

    /// Principal submatrix with row/column `k` removed.
    pub fn without_row_col(&self, k: usize) -> Self {
        assert!(self.is_square());
        let n = self.rows;
        Self::from_fn(n - 1, n - 1, |i, j| {
            let ii = if i < k { i } else { i + 1 };
            let jj = if j < k { j } else { j + 1 };
            self.get(ii, jj)
        })
    }

    /// Entrywise map.
    pub fn map(&self, f: impl Fn(Complex<T>) -> Complex<T>) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| f(z)).collect(),
        }
    }

    pub fn entries(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn entries_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }
}

impl<T: Scalar> Add for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn add(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<T: Scalar> Sub for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn sub(self, rhs: Self) -> ComplexMatrix<T> {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<T: Scalar> Mul for &ComplexMatrix<T> {
    type Output = ComplexMatrix<T>;
    fn mul(self, rhs: Self) -> ComplexMatrix<T> {
        self.matmul(rhs)
    }
}

/// Hermitian positive semidefinite matrix.
///
/// The validated constructor enforces the two invariants callers rely on:
/// conjugate symmetry (to a relative tolerance) and a spectrum that is
/// nonnegative up to rounding. Hot paths use the `_unchecked` constructor on
/// matrices that are Hermitian PSD by construction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermitianPsd<T> {
    mat: ComplexMatrix<T>,
}

impl<T: Scalar> HermitianPsd<T> {
    /// Validated constructor; symmetrizes the stored matrix.
    pub fn new(mat: ComplexMatrix<T>) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::dim(
                "HermitianPsd::new",
                "square matrix",
                format!("{}x{}", mat.rows(), mat.cols()),
            ));
        }
        if !mat.is_finite() {
            return Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ));
        }
        let herm_tol = T::of(1e-12).max(T::epsilon() * T::of(64.0));
        if mat.hermitian_deviation() > herm_tol {
            return Err(Error::InvalidParameter(format!(
                "matrix is not Hermitian (relative deviation {})",
                mat.hermitian_deviation()
            )));
        }
        let sym = mat.hermitize();
        let (eigs, _) = crate::linalg::eigh(&sym);
        let max = eigs.iter().fold(T::zero(), |a, &b| a.max(b));
        let min = eigs.iter().fold(T::infinity(), |a, &b| a.min(b));
        let eig_tol = T::of(1e-10).max(T::epsilon() * T::of(256.0));
        if min < -(eig_tol * max.max(T::zero()) + T::epsilon()) {
            return Err(Error::InvalidParameter(format!(
                "matrix is not PSD (min eigenvalue {min}, max {max})"
            )));
        }
        Ok(Self { mat: sym })
    }

    /// Wrap a matrix known to be Hermitian PSD by construction.
    pub fn from_hermitian_unchecked(mat: ComplexMatrix<T>) -> Self {
        debug_assert!(mat.is_square());
        Self { mat }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            mat: ComplexMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(n),
        }
    }

    pub fn scaled_identity(n: usize, v: T) -> Self {
        Self {
            mat: ComplexMatrix::scaled_identity(n, v),
        }
    }

    /// Real nonnegative diagonal.
    pub fn from_diag(diag: &[T]) -> Self {
        Self {
            mat: ComplexMatrix::from_diag(diag),
        }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.mat.rows()
    }

    #[inline]
    pub fn as_matrix(&self) -> &ComplexMatrix<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix<T> {
        self.mat
    }

    /// Real trace.
    pub fn trace(&self) -> T {
        self.mat.trace().re
    }

    /// `self + eps * I`.
    pub fn add_ridge(&self, eps: T) -> Self {
        let mut m = self.mat.clone();
        for i in 0..m.rows() {
            let v = m.get(i, i) + Complex::new(eps, T::zero());
            m.set(i, i, v);
        }
        Self { mat: m }
    }
}

/// Assemble the covariance block matrix of the joint vector `[U; Y]` for
/// `U = X + W S` and `Y = H1 X + H2 S + Z`:
///
/// ```text
/// M = [ Sx + W Ss W^*      Sx H1^* + W Ss H2^*                 ]
///     [ H1 Sx + H2 Ss W^*  Sz + H1 Sx H1^* + H2 Ss H2^*        ]
/// ```
///
/// The result is Hermitian by construction and PSD for any `W` whenever the
/// inputs are PSD.
pub fn assemble_m<T: Scalar>(
    sigma_x: &HermitianPsd<T>,
    sigma_s: &HermitianPsd<T>,
    sigma_z: &HermitianPsd<T>,
    h1: &ComplexMatrix<T>,
    h2: &ComplexMatrix<T>,
    w: &ComplexMatrix<T>,
) -> Result<HermitianPsd<T>> {
    let (t_x, t_s, r) = (sigma_x.dim(), sigma_s.dim(), sigma_z.dim());
    if h1.rows() != r || h1.cols() != t_x {
        return Err(Error::dim(
            "assemble_m(h1)",
            format!("{r}x{t_x}"),
            format!("{}x{}", h1.rows(), h1.cols()),
        ));
    }
    if h2.rows() != r || h2.cols() != t_s {
        return Err(Error::dim(
            "assemble_m(h2)",
            format!("{r}x{t_s}"),
            format!("{}x{}", h2.rows(), h2.cols()),
        ));
    }
    if w.rows() != t_x || w.cols() != t_s {
        return Err(Error::dim(
            "assemble_m(w)",
            format!("{t_x}x{t_s}"),
            format!("{}x{}", w.rows(), w.cols()),
        ));
    }

    let sx = sigma_x.as_matrix();
    let ss = sigma_s.as_matrix();
    let sz = sigma_z.as_matrix();

    let a = &(sx + &w.sandwich(ss)).hermitize();
    // B = Sx H1^* + W Ss H2^*
    let b = &(&sx.matmul(&h1.adjoint()) + &w.matmul(ss).matmul(&h2.adjoint()));
    let d = &(&(sz + &h1.sandwich(sx)) + &h2.sandwich(ss)).hermitize();

    Ok(HermitianPsd::from_hermitian_unchecked(
        ComplexMatrix::block2x2_hermitian(a, b, d),
    ))
}
