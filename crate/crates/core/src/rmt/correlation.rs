use ndarray::Array2;

use super::eigen::{symmetric_eigen, Spectrum};
use super::returns::NormalizedPanel;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Symmetric correlation matrix with unit diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix<T>(Array2<T>);

impl<T: Real> CorrelationMatrix<T> {
    /// `X Xᵀ / T` of a normalized panel.
    pub fn from_normalized(panel: &NormalizedPanel<T>) -> Self {
        let x = panel.values();
        let t = T::from_usize_lossy(x.ncols());
        let mut c = x.dot(&x.t()) / t;
        let n = c.nrows();
        for i in 0..n {
            for j in i + 1..n {
                let v = (c[[i, j]] + c[[j, i]]) / T::lit(2.0);
                let v = v.max(-T::one()).min(T::one());
                c[[i, j]] = v;
                c[[j, i]] = v;
            }
            c[[i, i]] = T::one();
        }
        Self(c)
    }

    /// Validates symmetry, unit diagonal, entry range and positive
    /// semidefiniteness.
    pub fn try_new(matrix: Array2<T>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "{n}x{} is not square",
                matrix.ncols()
            )));
        }
        let tight = T::tight_tol();
        for i in 0..n {
            if (matrix[[i, i]] - T::one()).abs() > tight {
                return Err(Error::InvalidInput(format!(
                    "diagonal entry {i} is {}",
                    matrix[[i, i]]
                )));
            }
            for j in i + 1..n {
                let (a, b) = (matrix[[i, j]], matrix[[j, i]]);
                if !a.is_finite() || (a - b).abs() > tight {
                    return Err(Error::InvalidInput(format!("asymmetric at ({i}, {j})")));
                }
                if a.abs() > T::one() + tight {
                    return Err(Error::InvalidInput(format!(
                        "entry ({i}, {j}) = {a} outside [-1, 1]"
                    )));
                }
            }
        }
        let spectrum = symmetric_eigen(matrix.view())?;
        if n > 0 && spectrum.smallest() < -T::loose_tol() {
            return Err(Error::NotPsd {
                min_eigenvalue: spectrum.smallest().as_f64(),
            });
        }
        Ok(Self(matrix))
    }

    pub fn identity(n: usize) -> Self {
        Self(Array2::eye(n))
    }

    /// Every off-diagonal entry equal to `rho`; valid for `-1/(n-1) <= rho <= 1`.
    pub fn equicorrelated(n: usize, rho: T) -> Result<Self> {
        Self::try_new(Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                T::one()
            } else {
                rho
            }
        }))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_array(&self) -> &Array2<T> {
        &self.0
    }

    pub fn into_array(self) -> Array2<T> {
        self.0
    }

    pub fn spectrum(&self) -> Result<Spectrum<T>> {
        eigendecompose(self)
    }
}

pub fn correlation_matrix<T: Real>(panel: &NormalizedPanel<T>) -> CorrelationMatrix<T> {
    CorrelationMatrix::from_normalized(panel)
}

pub fn eigendecompose<T: Real>(c: &CorrelationMatrix<T>) -> Result<Spectrum<T>> {
    symmetric_eigen(c.as_array().view())
}

/// Mean of the off-diagonal entries.
pub fn mean_correlation<T: Real>(c: &CorrelationMatrix<T>) -> T {
    let n = c.dim();
    if n < 2 {
        return T::zero();
    }
    let a = c.as_array();
    let mut s = T::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s += a[[i, j]];
            }
        }
    }
    s / T::from_usize_lossy(n * (n - 1))
}
