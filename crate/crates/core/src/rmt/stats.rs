use crate::error::{Error, Result};
use crate::scalar::Real;

pub fn pearson<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "series lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 2 {
        return Err(Error::DegenerateSeries {
            needed: 2,
            got: x.len(),
        });
    }
    let n = T::from_usize_lossy(x.len());
    let mx = x.iter().copied().sum::<T>() / n;
    let my = y.iter().copied().sum::<T>() / n;
    let (mut sxy, mut sxx, mut syy) = (T::zero(), T::zero(), T::zero());
    for (&a, &b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if sxx == T::zero() {
        return Err(Error::ZeroVariance { label: "x".into() });
    }
    if syy == T::zero() {
        return Err(Error::ZeroVariance { label: "y".into() });
    }
    let r = sxy / (sxx.sqrt() * syy.sqrt());
    Ok(r.max(-T::one()).min(T::one()))
}

/// Pearson correlation of the ranks; ties share their average rank.
pub fn spearman<T: Real>(x: &[T], y: &[T]) -> Result<T> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "series lengths {} and {}",
            x.len(),
            y.len()
        )));
    }
    pearson(&average_ranks(x)?, &average_ranks(y)?)
}

pub fn average_ranks<T: Real>(x: &[T]) -> Result<Vec<T>> {
    if x.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN in ranked series".into()));
    }
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].partial_cmp(&x[b]).expect("no NaN"));
    let mut ranks = vec![T::zero(); x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        // Ranks are 1-based; positions i..=j share their mean.
        let avg = T::from_usize_lossy(i + j + 2) / T::lit(2.0);
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    Ok(ranks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn pearson_affine_and_negation() {
        let x = [0.3, 1.5, -2.0, 4.1, 0.0];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert!((pearson(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let z: Vec<f64> = x.iter().map(|v| -v).collect();
        assert!((pearson(&x, &z).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn pearson_independent_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let y: Vec<f64> = (0..10_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        assert!(pearson(&x, &y).unwrap().abs() < 0.05);
    }

    #[test]
    fn constant_series_rejected() {
        assert!(matches!(
            pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]),
            Err(Error::ZeroVariance { .. })
        ));
        assert!(spearman(&[1.0, 2.0, 3.0], &[4.0, 4.0, 4.0]).is_err());
    }

    #[test]
    fn spearman_monotone_maps() {
        let x = [0.5, -1.0, 2.0, 3.5, 0.1];
        let cubed: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        assert!((spearman(&x, &cubed).unwrap() - 1.0).abs() < 1e-12);
        let mut sorted = x.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let reversed: Vec<f64> = sorted.iter().rev().cloned().collect();
        assert!((spearman(&sorted, &reversed).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spearman_with_ties() {
        // ranks x = [1, 2.5, 2.5, 4]; r = 4.5 / √(4.5 · 5) = 0.948683
        let r = spearman(&[1.0, 2.0, 2.0, 4.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - 4.5 / (4.5f64 * 5.0).sqrt()).abs() < 1e-12);
        assert!((r - 0.9487).abs() < 1e-4);
    }
}
