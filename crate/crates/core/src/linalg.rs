//! Small dense linear algebra, generic over f64 and double-double.

use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::dd::Dd;

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn magnitude(self) -> f64 {
        self.to_f64().abs()
    }
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_f64(x: f64) -> Self {
        x
    }
    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for Dd {
    fn zero() -> Self {
        Dd::ZERO
    }
    fn one() -> Self {
        Dd::ONE
    }
    fn from_f64(x: f64) -> Self {
        Dd::from_f64(x)
    }
    fn to_f64(self) -> f64 {
        Dd::to_f64(self)
    }
}

/// Row-major square matrix.
#[derive(Debug, Clone)]
pub struct Matrix<T> {
    pub dim: usize,
    pub data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn zeros(dim: usize) -> Self {
        Matrix {
            dim,
            data: vec![T::zero(); dim * dim],
        }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Matrix { dim, data }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: T) {
        self.data[i * self.dim + j] = v;
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        (0..self.dim)
            .map(|i| {
                let mut acc = T::zero();
                for j in 0..self.dim {
                    acc = acc + self.get(i, j) * x[j];
                }
                acc
            })
            .collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.magnitude()))
    }

    /// Matrix with row `i` and column `j` removed.
    pub fn minor(&self, i: usize, j: usize) -> Matrix<T> {
        let d = self.dim - 1;
        Matrix::from_fn(d, |r, c| {
            let rr = if r < i { r } else { r + 1 };
            let cc = if c < j { c } else { c + 1 };
            self.get(rr, cc)
        })
    }
}

/// LU factorization with partial (row) pivoting.
#[derive(Debug, Clone)]
pub struct Lu<T> {
    lu: Matrix<T>,
    perm: Vec<usize>,
    /// max |u_ii| / min |u_ii|, a cheap lower estimate of the condition number.
    pub pivot_ratio: f64,
}

impl<T: Scalar> Lu<T> {
    /// Returns `None` when an exactly zero pivot is met.
    pub fn factor(a: &Matrix<T>) -> Option<Self> {
        let n = a.dim;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let mut p = k;
            let mut best = lu.get(k, k).magnitude();
            for i in (k + 1)..n {
                let m = lu.get(i, k).magnitude();
                if m > best {
                    best = m;
                    p = i;
                }
            }
            if best == 0.0 || !best.is_finite() {
                return None;
            }
            if p != k {
                for j in 0..n {
                    let t = lu.get(k, j);
                    lu.set(k, j, lu.get(p, j));
                    lu.set(p, j, t);
                }
                perm.swap(k, p);
            }
            let pivot = lu.get(k, k);
            for i in (k + 1)..n {
                let f = lu.get(i, k) / pivot;
                lu.set(i, k, f);
                for j in (k + 1)..n {
                    let v = lu.get(i, j) - f * lu.get(k, j);
                    lu.set(i, j, v);
                }
            }
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
        for k in 0..n {
            let m = lu.get(k, k).magnitude();
            lo = lo.min(m);
            hi = hi.max(m);
        }
        Some(Lu {
            lu,
            perm,
            pivot_ratio: hi / lo,
        })
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.lu.dim;
        let mut x: Vec<T> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu.get(i, j) * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc = acc - self.lu.get(i, j) * x[j];
            }
            x[i] = acc / self.lu.get(i, i);
        }
        x
    }
}

/// Solves `a x = b` by partial-pivoting elimination followed by one step of
/// iterative refinement. Returns the solution and the pivot-ratio condition estimate.
pub fn solve_refined<T: Scalar>(a: &Matrix<T>, b: &[T]) -> Option<(Vec<T>, f64)> {
    let lu = Lu::factor(a)?;
    let mut x = lu.solve(b);
    let ax = a.mul_vec(&x);
    let r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &axi)| bi - axi).collect();
    let dx = lu.solve(&r);
    for (xi, di) in x.iter_mut().zip(dx) {
        *xi = *xi + di;
    }
    Some((x, lu.pivot_ratio))
}

/// Determinant by Gaussian elimination with full (rook-free, complete) pivoting.
pub fn det_full_pivot<T: Scalar>(a: &Matrix<T>) -> T {
    let n = a.dim;
    if n == 0 {
        return T::one();
    }
    let mut m = a.clone();
    let mut det = T::one();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, -1.0);
        for i in k..n {
            for j in k..n {
                let v = m.get(i, j).magnitude();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        if best == 0.0 {
            return T::zero();
        }
        if pr != k {
            for j in 0..n {
                let t = m.get(k, j);
                m.set(k, j, m.get(pr, j));
                m.set(pr, j, t);
            }
            det = -det;
        }
        if pc != k {
            for i in 0..n {
                let t = m.get(i, k);
                m.set(i, k, m.get(i, pc));
                m.set(i, pc, t);
            }
            det = -det;
        }
        let pivot = m.get(k, k);
        det = det * pivot;
        for i in (k + 1)..n {
            let f = m.get(i, k) / pivot;
            for j in (k + 1)..n {
                let v = m.get(i, j) - f * m.get(k, j);
                m.set(i, j, v);
            }
        }
    }
    det
}
