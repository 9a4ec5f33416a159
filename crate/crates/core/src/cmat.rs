//! Small dense complex matrices.
//!
//! Channel matrices in this crate are a handful of antennas on each side, so
//! a plain row-major `Vec` is all the storage that is needed.

use std::ops::{Add, Index, IndexMut, Sub};

use num_complex::Complex;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Row-major dense complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<Complex<T>>,
}

/// Channel frequency response for one symbol interval and subchannel
/// (`N_r x N_t`).
pub type ChannelMatrix<T> = CMatrix<T>;

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex<T>>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Shape {
                expected: format!("{} entries", rows * cols),
                got: format!("{} entries", data.len()),
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Real diagonal matrix, `rows x cols`, with `diag` on the main diagonal.
    pub fn diag_real(rows: usize, cols: usize, diag: &[T]) -> Self {
        let mut m = Self::zeros(rows, cols);
        for (i, &d) in diag.iter().enumerate().take(rows.min(cols)) {
            m[(i, i)] = Complex::new(d, T::zero());
        }
        m
    }

    /// I.i.d. `CN(0, variance)` entries: real and imaginary parts are each
    /// `N(0, variance / 2)`.
    pub fn complex_gaussian<R: Rng + ?Sized>(rows: usize, cols: usize, variance: T, rng: &mut R) -> Self {
        let s = (variance / T::lit(2.0)).sqrt();
        Self::from_fn(rows, cols, |_, _| {
            let re = T::standard_normal(rng);
            let im = T::standard_normal(rng);
            Complex::new(re * s, im * s)
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
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    /// Row-major entries.
    #[inline]
    pub fn as_slice(&self) -> &[Complex<T>] {
        &self.data
    }

    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [Complex<T>] {
        &mut self.data
    }

    /// Row-major vectorization (length `rows * cols`).
    pub fn to_vector(&self) -> Vec<Complex<T>> {
        self.data.clone()
    }

    pub fn ensure_same_shape(&self, other: &Self) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(Error::Shape {
                expected: format!("{}x{}", self.rows, self.cols),
                got: format!("{}x{}", other.rows, other.cols),
            });
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn scale(&self, k: T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * k).collect(),
        }
    }

    /// `a * self + b * other`, elementwise.
    pub fn lin_comb(&self, a: T, other: &Self, b: T) -> Result<Self> {
        self.ensure_same_shape(other)?;
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(x, y)| x * a + y * b)
                .collect(),
        })
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.lin_comb(T::one(), other, T::one())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.lin_comb(T::one(), other, -T::one())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::Shape {
                expected: format!("{} rows", self.cols),
                got: format!("{} rows", other.rows),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a.is_zero() {
                    continue;
                }
                for c in 0..other.cols {
                    out[(r, c)] = out[(r, c)] + a * other[(k, c)];
                }
            }
        }
        Ok(out)
    }

    /// Squared Frobenius norm.
    pub fn norm_sqr(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn frobenius(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// Determinant by partially pivoted LU decomposition.
    pub fn det(&self) -> Result<Complex<T>> {
        if self.rows != self.cols {
            return Err(Error::Shape {
                expected: "square matrix".into(),
                got: format!("{}x{}", self.rows, self.cols),
            });
        }
        let n = self.rows;
        let mut a = self.clone();
        let mut det = Complex::<T>::one();
        for k in 0..n {
            let mut piv = k;
            let mut best = a[(k, k)].norm_sqr();
            for r in (k + 1)..n {
                let v = a[(r, k)].norm_sqr();
                if v > best {
                    best = v;
                    piv = r;
                }
            }
            if best.is_zero() {
                return Ok(Complex::zero());
            }
            if piv != k {
                for c in 0..n {
                    let tmp = a[(k, c)];
                    a[(k, c)] = a[(piv, c)];
                    a[(piv, c)] = tmp;
                }
                det = -det;
            }
            let p = a[(k, k)];
            det = det * p;
            for r in (k + 1)..n {
                let f = a[(r, k)] / p;
                for c in k..n {
                    let v = a[(k, c)];
                    a[(r, c)] = a[(r, c)] - f * v;
                }
            }
        }
        Ok(det)
    }
}

impl<T> Index<(usize, usize)> for CMatrix<T> {
    type Output = Complex<T>;

    #[inline]
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.cols + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.cols + c]
    }
}

impl<T: Real> Add for &CMatrix<T> {
    type Output = CMatrix<T>;

    /// Panics on shape mismatch; use [`CMatrix::try_add`] for a checked sum.
    fn add(self, rhs: Self) -> CMatrix<T> {
        self.try_add(rhs).expect("matrix shapes agree")
    }
}

impl<T: Real> Sub for &CMatrix<T> {
    type Output = CMatrix<T>;

    fn sub(self, rhs: Self) -> CMatrix<T> {
        self.try_sub(rhs).expect("matrix shapes agree")
    }
}
