use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::scalar::Real;

pub const DOF_MIN: f64 = 2.1;
pub const DOF_MAX: f64 = 100.0;
const MIN_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StudentTFit {
    /// Degrees of freedom `a`.
    pub dof: f64,
    /// Scale of the location-zero Student-t at the optimum.
    pub scale: f64,
    pub log_likelihood: f64,
}

/// Maximum-likelihood degrees of freedom of a location-zero Student-t with
/// free scale. The scale is profiled out and the profile likelihood is
/// maximized by golden-section search over `ln a` on `[2.1, 100]`.
///
/// An optimum on either end of the interval is reported as
/// [`Error::FitDiverged`] carrying the boundary value (Gaussian data drift to
/// the upper end).
pub fn fit_student_t<T: Real>(samples: &[T]) -> Result<StudentTFit> {
    if samples.len() < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!(
            "need at least {MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    let xs: Vec<f64> = samples.iter().map(|v| v.as_f64()).collect();
    if xs.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite sample".into()));
    }
    let sq: Vec<f64> = xs.iter().map(|v| v * v).collect();
    let var = sq.iter().sum::<f64>() / sq.len() as f64;
    if var == 0.0 {
        return Err(Error::ZeroVariance {
            label: "samples".into(),
        });
    }

    let eval = |log_dof: f64| profile(&sq, log_dof.exp(), var);
    let (mut lo, mut hi) = (DOF_MIN.ln(), DOF_MAX.ln());
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let mut fc = eval(c).0;
    let mut fd = eval(d).0;
    while hi - lo > 1e-7 {
        if fc > fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = eval(c).0;
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = eval(d).0;
        }
    }
    let log_dof = 0.5 * (lo + hi);
    let dof = log_dof.exp();
    let (log_likelihood, scale) = eval(log_dof);

    let edge = 1e-4;
    if log_dof - DOF_MIN.ln() < edge || DOF_MAX.ln() - log_dof < edge {
        return Err(Error::FitDiverged { value: dof });
    }
    Ok(StudentTFit {
        dof,
        scale,
        log_likelihood,
    })
}

/// Profile log-likelihood at `dof`, with the scale solved by the EM fixed
/// point `s² = mean(w x²)`, `w = (ν+1)/(ν + x²/s²)`.
fn profile(sq: &[f64], dof: f64, var: f64) -> (f64, f64) {
    let n = sq.len() as f64;
    let mut s2 = if dof > 2.0 {
        var * (dof - 2.0) / dof
    } else {
        var
    };
    for _ in 0..1000 {
        let next = sq
            .iter()
            .map(|&x2| (dof + 1.0) * x2 / (dof + x2 / s2))
            .sum::<f64>()
            / n;
        let done = ((next - s2) / s2).abs() < 1e-12;
        s2 = next;
        if done {
            break;
        }
    }
    let log_norm = ln_gamma((dof + 1.0) / 2.0)
        - ln_gamma(dof / 2.0)
        - 0.5 * (dof * std::f64::consts::PI).ln()
        - 0.5 * s2.ln();
    let tail: f64 = sq.iter().map(|&x2| (x2 / (dof * s2)).ln_1p()).sum();
    (n * log_norm - 0.5 * (dof + 1.0) * tail, s2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal, StudentT};

    fn t_samples(dof: f64, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dist = StudentT::new(dof).unwrap();
        let scale = ((dof - 2.0) / dof).sqrt();
        (0..n).map(|_| dist.sample(&mut rng) * scale).collect()
    }

    #[test]
    fn recovers_five_degrees_of_freedom() {
        let fit = fit_student_t(&t_samples(5.0, 100_000, 1)).unwrap();
        assert!((fit.dof - 5.0).abs() < 0.3, "{fit:?}");
        assert!((fit.scale - (3.0f64 / 5.0).sqrt()).abs() < 0.02);
    }

    #[test]
    fn recovers_three_degrees_of_freedom() {
        let fit = fit_student_t(&t_samples(3.0, 100_000, 2)).unwrap();
        assert!((fit.dof - 3.0).abs() < 0.2, "{fit:?}");
    }

    #[test]
    fn gaussian_runs_to_upper_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let xs: Vec<f64> = (0..100_000)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        match fit_student_t(&xs) {
            Err(Error::FitDiverged { value }) => assert!(value > 99.0),
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn too_few_samples() {
        assert!(fit_student_t(&[0.1f64; 10]).is_err());
    }
}
