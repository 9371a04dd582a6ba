//! Partitioned return/polarity correlation and its correlated-Wishart
//! white-noise counterpart.

use ndarray::{concatenate, s, Array2, ArrayView2, Axis};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rmt::{symmetric_eigen, CorrelationMatrix, NormalizedPanel};
use crate::scalar::Real;
use crate::seed::derive;

const PSD_SLACK: f64 = 1e-8;
const EIGEN_CLAMP: f64 = 1e-10;

/// `2N x 2N` correlation of the stacked returns (top) and polarities.
#[derive(Debug, Clone, PartialEq)]
pub struct PartitionedCorrelation<T> {
    n: usize,
    full: Array2<T>,
}

impl<T: Real> PartitionedCorrelation<T> {
    /// `C = D Dᵀ / T` for `D = [D_r; D_p]`.
    pub fn from_panels(
        returns: &NormalizedPanel<T>,
        polarities: &NormalizedPanel<T>,
    ) -> Result<Self> {
        if returns.n_series() != polarities.n_series() {
            return Err(Error::ShapeMismatch(format!(
                "{} return series but {} polarity series",
                returns.n_series(),
                polarities.n_series()
            )));
        }
        if returns.len() != polarities.len() {
            return Err(Error::ShapeMismatch(format!(
                "return length {} but polarity length {}",
                returns.len(),
                polarities.len()
            )));
        }
        let stacked = returns.stack(polarities)?;
        let c = CorrelationMatrix::from_normalized(&stacked);
        Ok(Self {
            n: returns.n_series(),
            full: c.into_array(),
        })
    }

    /// Wraps an assembled `2N x 2N` matrix.
    pub fn from_full(full: Array2<T>) -> Result<Self> {
        let (r, c) = full.dim();
        if r != c || r % 2 != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{r}x{c} is not an even square"
            )));
        }
        Ok(Self { n: r / 2, full })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn full(&self) -> &Array2<T> {
        &self.full
    }

    pub fn returns_block(&self) -> ArrayView2<'_, T> {
        self.full.slice(s![..self.n, ..self.n])
    }

    pub fn polarity_block(&self) -> ArrayView2<'_, T> {
        self.full.slice(s![self.n.., self.n..])
    }

    /// `C^(r,p)`: rows are returns, columns polarities.
    pub fn cross_block(&self) -> ArrayView2<'_, T> {
        self.full.slice(s![..self.n, self.n..])
    }

    /// `C^(p,r) = C^(r,p)ᵀ`.
    pub fn cross_block_transposed(&self) -> ArrayView2<'_, T> {
        self.full.slice(s![self.n.., ..self.n])
    }

    pub fn returns_correlation(&self) -> Result<CorrelationMatrix<T>> {
        CorrelationMatrix::try_new(self.returns_block().to_owned())
    }

    pub fn polarity_correlation(&self) -> Result<CorrelationMatrix<T>> {
        CorrelationMatrix::try_new(self.polarity_block().to_owned())
    }
}

/// Symmetric PSD square root via the eigendecomposition. Eigenvalues below
/// the clamp threshold are treated as zero.
pub fn matrix_sqrt_psd<T: Real>(c: ArrayView2<'_, T>) -> Result<Array2<T>> {
    let n = c.nrows();
    for i in 0..n {
        for j in i + 1..n.min(c.ncols()) {
            let scale = T::one().max(c[[i, j]].abs());
            if (c[[i, j]] - c[[j, i]]).abs() > T::tight_tol() * scale {
                return Err(Error::InvalidInput(format!(
                    "matrix asymmetric at ({i}, {j})"
                )));
            }
        }
    }
    let spectrum = symmetric_eigen(c)?;
    if n > 0 && spectrum.smallest() < -T::lit(PSD_SLACK) {
        return Err(Error::NotPsd {
            min_eigenvalue: spectrum.smallest().as_f64(),
        });
    }
    let mut scaled = spectrum.eigenvectors().clone();
    for (k, &lambda) in spectrum.eigenvalues().iter().enumerate() {
        let root = if lambda < T::lit(EIGEN_CLAMP) {
            T::zero()
        } else {
            lambda.sqrt()
        };
        scaled.column_mut(k).mapv_inplace(|v| v * root);
    }
    let mut s = scaled.dot(&spectrum.eigenvectors().t());
    for i in 0..n {
        for j in i + 1..n {
            let v = (s[[i, j]] + s[[j, i]]) / T::lit(2.0);
            s[[i, j]] = v;
            s[[j, i]] = v;
        }
    }
    Ok(s)
}

/// `C′ = (1/T) 𝒲 𝒲ᵀ` for one noise realization.
#[derive(Debug, Clone, PartialEq)]
pub struct NoisySurrogate<T> {
    pub c_prime: Array2<T>,
    pub seed: u64,
    pub t: usize,
}

/// Colors two independent standard normal `N x T` matrices with `√C_r` and
/// `√C_p`, stacks them and forms their sample correlation.
///
/// `W₁` takes the first `N·T` draws of the seeded stream in row-major order,
/// `W₂` the next `N·T`.
pub fn synth_noisy<T: Real>(
    c_r: &CorrelationMatrix<T>,
    c_p: &CorrelationMatrix<T>,
    t: usize,
    seed: u64,
) -> Result<NoisySurrogate<T>> {
    let n = c_r.dim();
    if c_p.dim() != n {
        return Err(Error::ShapeMismatch(format!(
            "return block {n}x{n} but polarity block {0}x{0}",
            c_p.dim()
        )));
    }
    if t < n || t == 0 {
        return Err(Error::InvalidInput(format!(
            "sample length {t} shorter than N = {n}"
        )));
    }
    let root_r = matrix_sqrt_psd(c_r.as_array().view())?;
    let root_p = matrix_sqrt_psd(c_p.as_array().view())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || {
        Array2::from_shape_simple_fn((n, t), || {
            T::lit(<StandardNormal as Distribution<f64>>::sample(
                &StandardNormal,
                &mut rng,
            ))
        })
    };
    let w1 = draw();
    let w2 = draw();
    let colored = concatenate(Axis(0), &[root_r.dot(&w1).view(), root_p.dot(&w2).view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    let c_prime = colored.dot(&colored.t()) / T::from_usize_lossy(t);
    Ok(NoisySurrogate { c_prime, seed, t })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructureVariant {
    /// Mean absolute change between entry-wise corresponding coefficients,
    /// relative to the mean absolute coefficient.
    Corresponding,
    /// Relative change in the mean absolute difference of row-adjacent
    /// off-diagonal coefficients.
    #[default]
    Neighboring,
}

impl StructureVariant {
    pub fn name(self) -> &'static str {
        match self {
            Self::Corresponding => "corresponding",
            Self::Neighboring => "neighboring",
        }
    }
}

/// Relative change in structure between `c` and `c_prime`.
pub fn structure_metric<T: Real>(
    c: ArrayView2<'_, T>,
    c_prime: ArrayView2<'_, T>,
    variant: StructureVariant,
) -> Result<T> {
    if c.dim() != c_prime.dim() || c.nrows() != c.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "{:?} vs {:?}",
            c.dim(),
            c_prime.dim()
        )));
    }
    match variant {
        StructureVariant::Neighboring => {
            let base = neighbor_roughness(c);
            if !(base > T::zero()) {
                return Err(Error::DegenerateBaseline);
            }
            Ok((neighbor_roughness(c_prime) - base).abs() / base)
        }
        StructureVariant::Corresponding => {
            let n = c.nrows();
            let (mut diff, mut base) = (T::zero(), T::zero());
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        diff += (c_prime[[i, j]] - c[[i, j]]).abs();
                        base += c[[i, j]].abs();
                    }
                }
            }
            if !(base > T::zero()) {
                return Err(Error::DegenerateBaseline);
            }
            Ok(diff / base)
        }
    }
}

/// Mean of `|c_ij − c_i,j+1|` over pairs where neither entry is diagonal.
fn neighbor_roughness<T: Real>(c: ArrayView2<'_, T>) -> T {
    let n = c.nrows();
    let (mut sum, mut count) = (T::zero(), 0usize);
    for i in 0..n {
        for j in 0..n.saturating_sub(1) {
            if j != i && j + 1 != i {
                sum += (c[[i, j]] - c[[i, j + 1]]).abs();
                count += 1;
            }
        }
    }
    if count == 0 {
        T::zero()
    } else {
        sum / T::from_usize_lossy(count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StructureStudy {
    pub variant: StructureVariant,
    pub seed: u64,
    pub t: usize,
    pub realizations: usize,
    pub mean: f64,
    /// Sample standard deviation over realizations.
    pub std: f64,
    pub values: Vec<f64>,
}

/// Structure metric between `c` and independent noisy surrogates built from
/// its diagonal blocks. Realization `r` uses seed `derive(seed, [r])`.
pub fn structure_study<T: Real>(
    c: &PartitionedCorrelation<T>,
    t: usize,
    realizations: usize,
    seed: u64,
    variant: StructureVariant,
) -> Result<StructureStudy> {
    if realizations == 0 {
        return Err(Error::InvalidInput(
            "at least one realization required".into(),
        ));
    }
    let c_r = c.returns_correlation()?;
    let c_p = c.polarity_correlation()?;
    let values = (0..realizations)
        .into_par_iter()
        .map(|r| {
            let noisy = synth_noisy(&c_r, &c_p, t, derive(seed, &[r as u64]))?;
            Ok(structure_metric(c.full().view(), noisy.c_prime.view(), variant)?.as_f64())
        })
        .collect::<Result<Vec<f64>>>()?;
    let m = values.len() as f64;
    let mean = values.iter().sum::<f64>() / m;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
    } else {
        0.0
    };
    Ok(StructureStudy {
        variant,
        seed,
        t,
        realizations,
        mean,
        std,
        values,
    })
}
