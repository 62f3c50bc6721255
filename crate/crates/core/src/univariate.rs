//! The one-parameter equi-dispersed normal family N(tau, tau).

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};
use crate::numerics::RandomStream;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// Common mean and variance of an equi-dispersed normal law.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize)]
pub struct Tau(f64);

impl Tau {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidParameter(format!(
                "tau must be positive, got {tau}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

pub fn ueq_logpdf(x: f64, tau: Tau) -> f64 {
    let t = tau.0;
    -0.5 * (LN_2PI + t.ln()) - (x - t).powi(2) / (2.0 * t)
}

pub fn ueq_loglik(xs: &[f64], tau: Tau) -> f64 {
    xs.iter().map(|&x| ueq_logpdf(x, tau)).sum()
}

/// Derivative of the log-likelihood in tau.
pub fn ueq_score(xs: &[f64], tau: Tau) -> f64 {
    let n = xs.len() as f64;
    let t = tau.0;
    let sum_sq: f64 = xs.iter().map(|x| x * x).sum();
    -n / (2.0 * t) - n / 2.0 + sum_sq / (2.0 * t * t)
}

fn second_moment(xs: &[f64]) -> f64 {
    xs.iter().map(|x| x * x).sum::<f64>() / xs.len() as f64
}

/// Maximum-likelihood tau: the positive root of tau^2 + tau - m2 = 0.
pub fn ueq_mle(xs: &[f64]) -> Result<Tau> {
    if xs.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::DegenerateSample(
            "sample contains non-finite values".into(),
        ));
    }
    let m2 = second_moment(xs);
    if m2 <= 0.0 {
        return Err(Error::DegenerateSample(
            "all observations are zero; the likelihood peaks at tau = 0".into(),
        ));
    }
    // m2 / (sqrt(m2 + 1/4) + 1/2) equals sqrt(m2 + 1/4) - 1/2 without the cancellation.
    Tau::new(m2 / ((m2 + 0.25).sqrt() + 0.5))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrtResult {
    pub tau_hat: f64,
    pub lambda: f64,
    pub stat: f64,
    pub p_value: f64,
}

/// Likelihood-ratio test of N(tau, tau) inside N(mu, sigma^2).
pub fn ueq_lrt(xs: &[f64]) -> Result<LrtResult> {
    if xs.len() < 2 {
        return Err(Error::DegenerateSample(
            "the likelihood-ratio test needs at least two observations".into(),
        ));
    }
    let tau = ueq_mle(xs)?;
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if var <= 0.0 {
        return Err(Error::DegenerateSample("constant sample".into()));
    }
    let restricted = ueq_loglik(xs, tau);
    let full = -0.5 * n * (LN_2PI + var.ln() + 1.0);
    let log_lambda = (restricted - full).min(0.0);
    let stat = -2.0 * log_lambda;
    let chi2 = ChiSquared::new(1.0).expect("one degree of freedom");
    Ok(LrtResult {
        tau_hat: tau.get(),
        lambda: log_lambda.exp(),
        stat,
        p_value: chi2.sf(stat),
    })
}

pub fn ueq_sample(tau: Tau, n: usize, rng: &mut RandomStream) -> Vec<f64> {
    let sd = tau.0.sqrt();
    (0..n).map(|_| rng.normal(tau.0, sd)).collect()
}
