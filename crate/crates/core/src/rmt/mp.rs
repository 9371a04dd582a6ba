use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Marčenko–Pastur law for an `N x T` panel with `Q = T/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MpParams<T> {
    pub q: T,
    pub sigma2: T,
    pub lambda_minus: T,
    pub lambda_plus: T,
}

/// Edges of the noise band: `σ²(1 + 1/Q ± 2√(1/Q))`.
pub fn mp_bounds<T: Real>(q: T, sigma2: T) -> Result<MpParams<T>> {
    if !(q >= T::one()) || !q.is_finite() {
        return Err(Error::InvalidRatio(q.as_f64()));
    }
    if !(sigma2 > T::zero()) || !sigma2.is_finite() {
        return Err(Error::InvalidInput(format!(
            "sigma² must be positive, got {sigma2}"
        )));
    }
    let inv = T::one() / q;
    let root = T::lit(2.0) * inv.sqrt();
    Ok(MpParams {
        q,
        sigma2,
        lambda_minus: sigma2 * (T::one() + inv - root),
        lambda_plus: sigma2 * (T::one() + inv + root),
    })
}

impl<T: Real> MpParams<T> {
    pub fn for_panel(n: usize, t: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("empty panel".into()));
        }
        mp_bounds(T::from_usize_lossy(t) / T::from_usize_lossy(n), T::one())
    }

    pub fn density(&self, lambda: T) -> T {
        mp_density(lambda, self)
    }

    pub fn contains(&self, lambda: T) -> bool {
        lambda >= self.lambda_minus && lambda <= self.lambda_plus
    }

    /// `points` evenly spaced `(λ, ρ(λ))` pairs spanning the support.
    pub fn overlay(&self, points: usize) -> Vec<(T, T)> {
        let points = points.max(2);
        let span = self.lambda_plus - self.lambda_minus;
        (0..points)
            .map(|i| {
                let l = self.lambda_minus
                    + span * T::from_usize_lossy(i) / T::from_usize_lossy(points - 1);
                (l, self.density(l))
            })
            .collect()
    }
}

/// `ρ(λ) = Q/(2πσ²) · √((λ₊ − λ)(λ − λ₋)) / λ` on the support, 0 elsewhere.
pub fn mp_density<T: Real>(lambda: T, params: &MpParams<T>) -> T {
    if !(lambda > params.lambda_minus && lambda < params.lambda_plus) || lambda <= T::zero() {
        return T::zero();
    }
    let two_pi = T::lit(2.0 * std::f64::consts::PI);
    let radicand = (params.lambda_plus - lambda) * (lambda - params.lambda_minus);
    params.q / (two_pi * params.sigma2) * radicand.sqrt() / lambda
}
