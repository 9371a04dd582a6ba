//! Symmetric eigendecomposition by cyclic Jacobi rotations.
//!
//! Jacobi is slower than tridiagonal QR for large matrices but the matrices
//! here are at most a few hundred rows, and it delivers eigenvectors that are
//! orthonormal to working precision without any extra reorthogonalization.

use ndarray::{Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};
use crate::scalar::Real;

const MAX_SWEEPS: usize = 100;

/// Ascending eigenvalues with their unit eigenvectors stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum<T> {
    eigenvalues: Vec<T>,
    eigenvectors: Array2<T>,
}

impl<T: Real> Spectrum<T> {
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Array2<T> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// Eigenvector paired with `eigenvalues()[k]`.
    pub fn vector(&self, k: usize) -> ArrayView1<'_, T> {
        self.eigenvectors.column(k)
    }

    pub fn largest(&self) -> T {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    pub fn smallest(&self) -> T {
        self.eigenvalues[0]
    }

    pub fn top_vector(&self) -> ArrayView1<'_, T> {
        self.vector(self.len() - 1)
    }

    /// `V Λ Vᵀ`.
    pub fn reconstruct(&self) -> Array2<T> {
        let n = self.len();
        let mut scaled = self.eigenvectors.clone();
        for (k, lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).mapv_inplace(|v| v * *lambda);
        }
        let out = scaled.dot(&self.eigenvectors.t());
        debug_assert_eq!(out.dim(), (n, n));
        out
    }

    /// Inverse participation ratio of every eigenvector, ascending order.
    pub fn iprs(&self) -> Vec<T> {
        (0..self.len())
            .map(|k| ipr_unchecked(self.vector(k)))
            .collect()
    }

    /// Number of eigenvalues strictly above `bound`.
    pub fn count_above(&self, bound: T) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > bound).count()
    }
}

/// Eigendecomposition of a symmetric matrix. Only the upper triangle is
/// trusted; the lower one is overwritten by the symmetric counterpart.
///
/// Each eigenvector is sign-fixed so its largest-magnitude component is
/// positive (the first such component on ties).
pub fn symmetric_eigen<T: Real>(matrix: ArrayView2<'_, T>) -> Result<Spectrum<T>> {
    let n = matrix.nrows();
    if matrix.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "eigendecomposition needs a square matrix, got {n}x{}",
            matrix.ncols()
        )));
    }
    if matrix.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        for j in i..n {
            a[[i, j]] = matrix[[i, j]];
            a[[j, i]] = matrix[[i, j]];
        }
    }
    let mut v = Array2::eye(n);
    let frob = a.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let tol = T::epsilon() * T::from_usize_lossy(n.max(1)) * frob;

    let mut converged = n <= 1 || frob == T::zero();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        if off_diagonal_norm(&a) <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                rotate(&mut a, &mut v, p, q);
            }
        }
    }
    if !converged {
        let off = off_diagonal_norm(&a);
        if off > tol {
            return Err(Error::ConvergenceFailure {
                sweeps: MAX_SWEEPS,
                residual: off.as_f64(),
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].partial_cmp(&a[[j, j]]).expect("finite diagonal"));
    let eigenvalues: Vec<T> = order.iter().map(|&i| a[[i, i]]).collect();
    let mut eigenvectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        let mut col = v.column(src).to_owned();
        let mut pivot = 0;
        for (i, x) in col.iter().enumerate() {
            if x.abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < T::zero() {
            col.mapv_inplace(|x| -x);
        }
        eigenvectors.column_mut(dst).assign(&col);
    }
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

fn off_diagonal_norm<T: Real>(a: &Array2<T>) -> T {
    let n = a.nrows();
    let mut s = T::zero();
    for i in 0..n {
        for j in i + 1..n {
            s += a[[i, j]] * a[[i, j]];
        }
    }
    (s + s).sqrt()
}

/// Applies the rotation that annihilates `a[p][q]`.
fn rotate<T: Real>(a: &mut Array2<T>, v: &mut Array2<T>, p: usize, q: usize) {
    let apq = a[[p, q]];
    if apq == T::zero() {
        return;
    }
    let app = a[[p, p]];
    let aqq = a[[q, q]];
    let two = T::lit(2.0);
    let theta = (aqq - app) / (two * apq);
    let t = if theta.is_infinite() {
        T::zero()
    } else {
        let sign = if theta >= T::zero() {
            T::one()
        } else {
            -T::one()
        };
        sign / (theta.abs() + (theta * theta + T::one()).sqrt())
    };
    if t == T::zero() {
        a[[p, q]] = T::zero();
        a[[q, p]] = T::zero();
        return;
    }
    let c = T::one() / (t * t + T::one()).sqrt();
    let s = t * c;
    let n = a.nrows();
    for k in 0..n {
        let akp = a[[k, p]];
        let akq = a[[k, q]];
        a[[k, p]] = c * akp - s * akq;
        a[[k, q]] = s * akp + c * akq;
    }
    for k in 0..n {
        let apk = a[[p, k]];
        let aqk = a[[q, k]];
        a[[p, k]] = c * apk - s * aqk;
        a[[q, k]] = s * apk + c * aqk;
    }
    a[[p, q]] = T::zero();
    a[[q, p]] = T::zero();
    for k in 0..n {
        let vkp = v[[k, p]];
        let vkq = v[[k, q]];
        v[[k, p]] = c * vkp - s * vkq;
        v[[k, q]] = s * vkp + c * vkq;
    }
}

/// Inverse participation ratio `Σ v_j⁴` of a unit vector.
pub fn ipr<T: Real>(v: ArrayView1<'_, T>) -> Result<T> {
    let norm = v.iter().map(|x| *x * *x).sum::<T>().sqrt();
    let slack = T::loose_tol().max(T::epsilon() * T::from_usize_lossy(v.len()) * T::lit(8.0));
    if v.is_empty() || (norm - T::one()).abs() > slack {
        return Err(Error::NotNormalized(norm.as_f64()));
    }
    Ok(ipr_unchecked(v))
}

fn ipr_unchecked<T: Real>(v: ArrayView1<'_, T>) -> T {
    v.iter().map(|x| (*x * *x) * (*x * *x)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array1};
    use proptest::prelude::*;

    #[test]
    fn identity_has_unit_spectrum() {
        let s = symmetric_eigen(Array2::<f64>::eye(5).view()).unwrap();
        assert!(s.eigenvalues().iter().all(|&l| l == 1.0));
    }

    #[test]
    fn two_by_two_closed_form() {
        let rho = 0.35f64;
        let s = symmetric_eigen(array![[1.0, rho], [rho, 1.0]].view()).unwrap();
        assert!((s.eigenvalues()[0] - (1.0 - rho)).abs() < 1e-14);
        assert!((s.eigenvalues()[1] - (1.0 + rho)).abs() < 1e-14);
        let top = s.top_vector();
        let h = 0.5f64.sqrt();
        assert!((top[0] - h).abs() < 1e-14 && (top[1] - h).abs() < 1e-14);
    }

    #[test]
    fn equicorrelated_closed_form() {
        let (n, rho) = (40, 0.3f64);
        let c = Array2::from_shape_fn((n, n), |(i, j)| if i == j { 1.0 } else { rho });
        let s = symmetric_eigen(c.view()).unwrap();
        assert!((s.largest() - 12.7).abs() < 1e-10);
        for l in &s.eigenvalues()[..n - 1] {
            assert!((l - 0.7).abs() < 1e-10);
        }
        assert!(s.top_vector().iter().all(|&x| x > 0.0));
        assert!((ipr(s.top_vector()).unwrap() - 1.0 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn single_precision_works() {
        let c: Array2<f32> = array![[2.0, 1.0], [1.0, 2.0]];
        let s = symmetric_eigen(c.view()).unwrap();
        assert!((s.eigenvalues()[0] - 1.0).abs() < 1e-5);
        assert!((s.eigenvalues()[1] - 3.0).abs() < 1e-5);
    }

    #[test]
    fn ipr_examples() {
        let n = 9;
        let uniform = Array1::from_elem(n, 1.0 / (n as f64).sqrt());
        assert!((ipr(uniform.view()).unwrap() - 1.0 / n as f64).abs() < 1e-15);
        let mut e1 = Array1::zeros(n);
        e1[0] = 1.0;
        assert_eq!(ipr(e1.view()).unwrap(), 1.0);
        let v = array![0.7f64.sqrt(), 0.1f64.sqrt(), 0.1f64.sqrt(), 0.1f64.sqrt()];
        assert!((ipr(v.view()).unwrap() - 0.52).abs() < 1e-12);
        assert!(matches!(
            ipr(array![1.0, 1.0].view()),
            Err(Error::NotNormalized(_))
        ));
    }

    #[test]
    fn rejects_non_square() {
        let m = Array2::<f64>::zeros((2, 3));
        assert!(matches!(
            symmetric_eigen(m.view()),
            Err(Error::ShapeMismatch(_))
        ));
    }

    proptest! {
        #[test]
        fn decomposition_invariants(n in 1usize..12, entries in proptest::collection::vec(-1.0f64..1.0, 144)) {
            let a = Array2::from_shape_fn((n, n), |(i, j)| {
                let (i, j) = if i <= j { (i, j) } else { (j, i) };
                entries[i * 12 + j]
            });
            let s = symmetric_eigen(a.view()).unwrap();
            let back = s.reconstruct();
            for (x, y) in a.iter().zip(back.iter()) {
                prop_assert!((x - y).abs() < 1e-10);
            }
            prop_assert!(s.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
            let gram = s.eigenvectors().t().dot(s.eigenvectors());
            for ((i, j), g) in gram.indexed_iter() {
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((g - expect).abs() < 1e-10);
            }
            let trace: f64 = (0..n).map(|i| a[[i, i]]).sum();
            prop_assert!((trace - s.eigenvalues().iter().sum::<f64>()).abs() < 1e-10);
            for k in 0..n {
                let r = ipr(s.vector(k)).unwrap();
                prop_assert!(r >= 1.0 / n as f64 - 1e-12 && r <= 1.0 + 1e-12);
            }
        }
    }
}
