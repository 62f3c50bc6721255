//! The curved family N(tau, tau^2) and the joint density built from
//! X ~ N(tau1, tau1^2), Y | X = x ~ N(tau(x), tau(x)^2) with tau(x) = tau2 + tau3 x.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::estimation::FitReport;
use crate::numerics::{minimize_bounded, OptimConfig, RandomStream};
use crate::sample::Sample2D;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Half-width of the excluded neighbourhood of tau(x) = 0.
pub const EPSILON_TAU: f64 = 1e-6;

pub const MODEL_PSEUDO: &str = "pseudo";

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarMeanSqParam(f64);

impl VarMeanSqParam {
    pub fn new(tau: f64) -> Result<Self> {
        if tau != 0.0 && tau.is_finite() {
            Ok(Self(tau))
        } else {
            Err(Error::InvalidParameter(format!(
                "tau must be finite and nonzero, got {tau}"
            )))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

pub fn vms_logpdf(x: f64, p: VarMeanSqParam) -> f64 {
    let t = p.0;
    -t.abs().ln() - LN_SQRT_2PI - (x - t).powi(2) / (2.0 * t * t)
}

pub fn vms_loglik(xs: &[f64], p: VarMeanSqParam) -> f64 {
    xs.iter().map(|&x| vms_logpdf(x, p)).sum()
}

/// Both stationary points of the log-likelihood: the roots of
/// n tau^2 + tau sum(x) - sum(x^2) = 0, positive root first.
pub fn vms_stationary_points(xs: &[f64]) -> Result<(f64, f64)> {
    if xs.is_empty() {
        return Err(Error::DegenerateSample("empty sample".into()));
    }
    let n = xs.len() as f64;
    let b: f64 = xs.iter().sum();
    let c: f64 = xs.iter().map(|x| x * x).sum();
    if !(c > 0.0) || !c.is_finite() {
        return Err(Error::DegenerateSample("all observations are zero".into()));
    }
    let disc = (b * b + 4.0 * n * c).sqrt();
    let q = -0.5 * (b + b.signum() * disc);
    let (r1, r2) = if b == 0.0 {
        let r = (c / n).sqrt();
        (r, -r)
    } else {
        (q / n, -c / q)
    };
    Ok(if r1 > 0.0 { (r1, r2) } else { (r2, r1) })
}

/// Maximum-likelihood tau, choosing the stationary point with the larger
/// likelihood (the positive one on ties).
pub fn vms_mle(xs: &[f64]) -> Result<(VarMeanSqParam, f64)> {
    let (pos, neg) = vms_stationary_points(xs)?;
    let pos = VarMeanSqParam::new(pos)?;
    let neg = VarMeanSqParam::new(neg)?;
    let (lp, ln) = (vms_loglik(xs, pos), vms_loglik(xs, neg));
    Ok(if ln > lp { (neg, ln) } else { (pos, lp) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PseudoParams {
    tau1: f64,
    tau2: f64,
    tau3: f64,
}

impl PseudoParams {
    pub fn new(tau1: f64, tau2: f64, tau3: f64) -> Result<Self> {
        VarMeanSqParam::new(tau1)?;
        if !tau2.is_finite() || !tau3.is_finite() {
            return Err(Error::InvalidParameter(
                "tau2 and tau3 must be finite".into(),
            ));
        }
        Ok(Self { tau1, tau2, tau3 })
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn tau3(&self) -> f64 {
        self.tau3
    }

    pub fn link(&self, x: f64) -> f64 {
        self.tau2 + self.tau3 * x
    }

    fn link_param(&self, x: f64) -> Result<VarMeanSqParam> {
        let t = self.link(x);
        if t.abs() < EPSILON_TAU {
            Err(Error::SingularLink { at: x, value: t })
        } else {
            Ok(VarMeanSqParam(t))
        }
    }
}

pub fn pseudo_logpdf(p: &PseudoParams, x: f64, y: f64) -> Result<f64> {
    let link = p.link_param(x)?;
    Ok(vms_logpdf(x, VarMeanSqParam(p.tau1)) + vms_logpdf(y, link))
}

/// Draws n pairs. X values whose link falls in the excluded neighbourhood
/// are redrawn; more than half the proposals being rejected is an error.
pub fn pseudo_sample(p: &PseudoParams, n: usize, rng: &mut RandomStream) -> Result<Sample2D> {
    let mut pairs = Vec::with_capacity(n);
    let mut rejected = 0u64;
    let mut proposed = 0u64;
    let give_up = (n as u64).max(1000);
    while pairs.len() < n {
        proposed += 1;
        let x = rng.normal(p.tau1, p.tau1.abs());
        let t = p.link(x);
        if t.abs() < EPSILON_TAU {
            rejected += 1;
            if rejected > give_up {
                return Err(Error::DegenerateLink { rejected, proposed });
            }
            continue;
        }
        pairs.push((x, rng.normal(t, t.abs())));
    }
    if 2 * rejected > proposed {
        return Err(Error::DegenerateLink { rejected, proposed });
    }
    Sample2D::new(pairs)
}

/// Log-likelihood of the y-given-x part at (tau2, tau3); -inf when a link is
/// singular.
pub fn pseudo_conditional_loglik(s: &Sample2D, tau2: f64, tau3: f64) -> f64 {
    let mut total = 0.0;
    for &(x, y) in s.pairs() {
        let t = tau2 + tau3 * x;
        if t.abs() < EPSILON_TAU {
            return f64::NEG_INFINITY;
        }
        total += vms_logpdf(y, VarMeanSqParam(t));
    }
    total
}

/// Factorized maximum likelihood: tau1 from the x margin, (tau2, tau3) by
/// direct search started from the least-squares line of y on x.
pub fn pseudo_fit(s: &Sample2D, opt_cfg: &OptimConfig) -> Result<FitReport> {
    s.require_len(3)?;
    opt_cfg.validate(2)?;
    let xs = s.xs();
    let ys = s.ys();
    let (tau1, ll1) = vms_mle(&xs)?;

    let n = s.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = s.pairs().iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();

    let mut starts = Vec::new();
    if sxx > 0.0 {
        let slope = sxy / sxx;
        starts.push([my - slope * mx, slope]);
    }
    if let Ok((t, _)) = vms_mle(&ys) {
        starts.push([t.get(), 0.0]);
    }
    let start = starts
        .into_iter()
        .map(|v| (v, pseudo_conditional_loglik(s, v[0], v[1])))
        .filter(|(_, l)| l.is_finite())
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Fit("every starting link is singular at some observation".into()))?
        .0;

    let sd_y = (syy / n).sqrt().max(1e-3);
    let sd_x = (sxx / n).sqrt().max(1e-3);
    let cfg = OptimConfig {
        initial_step: opt_cfg.initial_step.clone().or(Some(vec![
            0.1 * start[0].abs().max(sd_y),
            0.1 * start[1].abs().max(sd_y / sd_x),
        ])),
        ..opt_cfg.clone()
    };
    let min = minimize_bounded(
        |v: &[f64]| {
            let l = pseudo_conditional_loglik(s, v[0], v[1]);
            if l.is_finite() {
                -l / n
            } else {
                f64::INFINITY
            }
        },
        &start,
        &cfg,
    )?;
    let (tau2, tau3) = (min.argmin[0], min.argmin[1]);
    let ll2 = pseudo_conditional_loglik(s, tau2, tau3);

    let mut report = FitReport::new(
        MODEL_PSEUDO,
        &[("tau1", tau1.get()), ("tau2", tau2), ("tau3", tau3)],
        ll1 + ll2,
    );
    report.converged = min.converged;
    report.iterations = min.iterations;
    if !min.converged {
        report.add_note(format!(
            "optimizer stopped after {} iterations",
            min.iterations
        ));
    }
    Ok(report)
}

/// Default optimizer settings for [`pseudo_fit`].
pub fn pseudo_optim_config() -> OptimConfig {
    OptimConfig {
        param_tol: 1e-9,
        objective_tol: 1e-12,
        ..OptimConfig::unbounded(2)
    }
}
