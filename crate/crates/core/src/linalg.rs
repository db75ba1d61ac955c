//! Cholesky factorization for the small Hermitian systems of the ZF stage.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Relative pivot threshold below which a Gram matrix counts as singular.
pub const SINGULAR_PIVOT_RATIO: f64 = 1e-12;

/// `L L^H` factor of a Hermitian positive-definite matrix.
#[derive(Debug, Clone)]
pub struct HermitianFactor {
    lower: DMatrix<Complex64>,
    pivot_ratio: f64,
}

impl HermitianFactor {
    /// Factor `a`, reading only its lower triangle.
    ///
    /// Pivots are the squared diagonal entries of `L`. The factorization is
    /// rejected when the smallest pivot falls below
    /// [`SINGULAR_PIVOT_RATIO`] times the largest.
    pub fn new(a: &DMatrix<Complex64>) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: "square matrix".into(),
                got: format!("{} x {}", n, a.ncols()),
            });
        }
        let mut l = DMatrix::<Complex64>::zeros(n, n);
        let mut pivots = Vec::with_capacity(n);
        for j in 0..n {
            let mut d = a[(j, j)].re;
            for p in 0..j {
                d -= l[(j, p)].norm_sqr();
            }
            pivots.push(d);
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::SingularSystem {
                    pivot_ratio: ratio_or_zero(&pivots),
                });
            }
            let djj = d.sqrt();
            l[(j, j)] = Complex64::new(djj, 0.0);
            for i in j + 1..n {
                let mut s = a[(i, j)];
                for p in 0..j {
                    s -= l[(i, p)] * l[(j, p)].conj();
                }
                l[(i, j)] = s / djj;
            }
        }
        let pivot_ratio = ratio_or_zero(&pivots);
        if n > 0 && pivot_ratio < SINGULAR_PIVOT_RATIO {
            return Err(Error::SingularSystem { pivot_ratio });
        }
        Ok(Self {
            lower: l,
            pivot_ratio: if n == 0 { 1.0 } else { pivot_ratio },
        })
    }

    pub fn dim(&self) -> usize {
        self.lower.nrows()
    }

    /// Smallest over largest pivot; a cheap conditioning indicator.
    pub fn pivot_ratio(&self) -> f64 {
        self.pivot_ratio
    }

    /// Solve `A x = b`.
    pub fn solve(&self, b: &DVector<Complex64>) -> DVector<Complex64> {
        let n = self.dim();
        let l = &self.lower;
        let mut y = b.clone();
        for i in 0..n {
            let mut s = y[i];
            for p in 0..i {
                s -= l[(i, p)] * y[p];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for p in i + 1..n {
                s -= l[(p, i)].conj() * y[p];
            }
            y[i] = s / l[(i, i)];
        }
        y
    }

    /// Solve `A X = B` column by column.
    pub fn solve_matrix(&self, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        let mut out = b.clone();
        for (j, col) in b.column_iter().enumerate() {
            out.set_column(j, &self.solve(&col.into_owned()));
        }
        out
    }

    /// Diagonal of `A^{-1}`, one unit-vector solve per entry.
    pub fn inverse_diagonal(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut e = DVector::<Complex64>::zeros(n);
                e[i] = Complex64::new(1.0, 0.0);
                self.solve(&e)[i].re
            })
            .collect()
    }
}

fn ratio_or_zero(pivots: &[f64]) -> f64 {
    let max = pivots.iter().cloned().fold(f64::MIN, f64::max);
    let min = pivots.iter().cloned().fold(f64::MAX, f64::min);
    if max > 0.0 && min > 0.0 {
        min / max
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solves_small_hermitian_system() {
        let a = DMatrix::from_row_slice(2, 2, &[c(4.0, 0.0), c(1.0, 1.0), c(1.0, -1.0), c(3.0, 0.0)]);
        let f = HermitianFactor::new(&a).unwrap();
        let x = DVector::from_vec(vec![c(1.0, 2.0), c(-1.0, 0.5)]);
        let b = &a * &x;
        let got = f.solve(&b);
        assert!((got - x).norm() < 1e-12);
        // inverse of [[4, 1+i], [1-i, 3]] has determinant 10
        let diag = f.inverse_diagonal();
        assert!((diag[0] - 0.3).abs() < 1e-14);
        assert!((diag[1] - 0.4).abs() < 1e-14);
    }

    #[test]
    fn rejects_singular_and_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(1.0, 0.0)]);
        assert!(matches!(HermitianFactor::new(&a), Err(Error::SingularSystem { .. })));
        let a = DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1e-13, 0.0)]);
        match HermitianFactor::new(&a) {
            Err(Error::SingularSystem { pivot_ratio }) => assert!((pivot_ratio - 1e-13).abs() < 1e-20),
            other => panic!("unexpected {other:?}"),
        }
        let a = DMatrix::from_row_slice(1, 1, &[c(-1.0, 0.0)]);
        assert!(HermitianFactor::new(&a).is_err());
        let a = DMatrix::<Complex64>::zeros(2, 3);
        assert!(HermitianFactor::new(&a).is_err());
    }

    #[test]
    fn empty_system() {
        let f = HermitianFactor::new(&DMatrix::<Complex64>::zeros(0, 0)).unwrap();
        assert!(f.inverse_diagonal().is_empty());
    }
}
