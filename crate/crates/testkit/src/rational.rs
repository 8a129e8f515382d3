//! Dense square matrices over the rationals.

use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};

use contextual::spectral::ComplexMatrix;

pub type Q = BigRational;

pub fn q(p: i64, d: i64) -> Q {
    BigRational::new(BigInt::from(p), BigInt::from(d))
}

#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    n: usize,
    a: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(n: usize) -> Self {
        Self { n, a: vec![Q::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> Q) -> Self {
        Self {
            n,
            a: (0..n * n).map(|k| f(k / n, k % n)).collect(),
        }
    }

    pub fn diagonal(d: &[Q]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i].clone() } else { Q::zero() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].clone())
    }

    pub fn scale(&self, s: &Q) -> Self {
        Self {
            n: self.n,
            a: self.a.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> Q {
        (0..self.n).fold(Q::zero(), |acc, i| acc + &self[(i, i)])
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().all(Zero::is_zero)
    }

    pub fn kron(&self, other: &Self) -> Self {
        let m = other.n;
        Self::from_fn(self.n * m, |i, j| &self[(i / m, j / m)] * &other[(i % m, j % m)])
    }

    /// Gauss–Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[(r, col)].is_zero())?;
            for j in 0..n {
                a.a.swap(col * n + j, piv * n + j);
                inv.a.swap(col * n + j, piv * n + j);
            }
            let p = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = &a[(col, j)] / &p;
                inv[(col, j)] = &inv[(col, j)] / &p;
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    a[(r, j)] = &a[(r, j)] - &f * &a[(col, j)];
                    inv[(r, j)] = &inv[(r, j)] - &f * &inv[(col, j)];
                }
            }
        }
        Some(inv)
    }

    pub fn to_complex(&self) -> ComplexMatrix {
        let rows = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| Complex64::new(self[(i, j)].to_f64().expect("finite rational"), 0.0))
                    .collect()
            })
            .collect();
        ComplexMatrix::from_rows(rows).expect("square finite matrix")
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.a[i * self.n + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.a[i * self.n + j]
    }
}

impl Add for &QMatrix {
    type Output = QMatrix;
    fn add(self, o: &QMatrix) -> QMatrix {
        QMatrix::from_fn(self.n, |i, j| &self[(i, j)] + &o[(i, j)])
    }
}

impl Sub for &QMatrix {
    type Output = QMatrix;
    fn sub(self, o: &QMatrix) -> QMatrix {
        QMatrix::from_fn(self.n, |i, j| &self[(i, j)] - &o[(i, j)])
    }
}

impl Mul for &QMatrix {
    type Output = QMatrix;
    fn mul(self, o: &QMatrix) -> QMatrix {
        let n = self.n;
        QMatrix::from_fn(n, |i, j| (0..n).fold(Q::zero(), |acc, k| acc + &self[(i, k)] * &o[(k, j)]))
    }
}

/// Orthogonal matrix `(I − S)(I + S)⁻¹` of a skew-symmetric `S`.
pub fn cayley(s: &QMatrix) -> QMatrix {
    let i = QMatrix::identity(s.dim());
    let plus = (&i + s).inverse().expect("I + S is invertible for skew-symmetric S");
    &(&i - s) * &plus
}
