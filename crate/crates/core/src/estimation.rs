//! Estimation for the equi-dispersed conditionals model and its competitors.
//!
//! * [`fit_pmle`]: pseudo-likelihood, solved coordinate-wise by bisection.
//! * [`fit_mle`]: full likelihood with the normalizing constant recomputed at
//!   every objective evaluation.
//! * [`fit_independent_equidisp`], [`fit_bivariate_normal`]: closed forms.
//! * [`compare_models`]: all four, ranked by AIC.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize, EquiDispParams};
use crate::numerics::{bisect_decreasing, minimize_bounded, OptimConfig, QuadConfig};
use crate::sample::Sample2D;
use crate::univariate::{ueq_loglik, ueq_mle};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

pub const MODEL_MLE: &str = "equidisp-mle";
pub const MODEL_PMLE: &str = "equidisp-pmle";
pub const MODEL_INDEP: &str = "equidisp-indep";
pub const MODEL_BVN: &str = "bvn";
pub const MODEL_BVN_INDEP: &str = "bvn-indep";

/// Result of any fit. `aic = 2 n_params - 2 log_likelihood`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    #[serde(rename = "model")]
    pub model_name: String,
    pub estimates: IndexMap<String, f64>,
    #[serde(rename = "loglik")]
    pub log_likelihood: f64,
    pub aic: f64,
    pub n_params: usize,
    pub converged: bool,
    pub iterations: usize,
    pub gradient_norm: f64,
    pub notes: String,
}

impl FitReport {
    pub fn new(model_name: &str, estimates: &[(&str, f64)], log_likelihood: f64) -> Self {
        let n_params = estimates.len();
        Self {
            model_name: model_name.to_string(),
            estimates: estimates.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            log_likelihood,
            aic: aic(n_params, log_likelihood),
            n_params,
            converged: true,
            iterations: 0,
            gradient_norm: 0.0,
            notes: String::new(),
        }
    }

    pub fn estimate(&self, name: &str) -> Option<f64> {
        self.estimates.get(name).copied()
    }

    pub fn add_note(&mut self, note: impl AsRef<str>) {
        if !self.notes.is_empty() {
            self.notes.push_str("; ");
        }
        self.notes.push_str(note.as_ref());
    }

    /// Parameters of an equi-dispersed fit, if this report holds one.
    pub fn equidisp_params(&self) -> Option<EquiDispParams> {
        let a = self.estimate("alpha")?;
        let b = self.estimate("beta")?;
        let g = self.estimate("gamma").unwrap_or(0.0);
        EquiDispParams::new(a, b, g).ok()
    }
}

pub fn aic(n_params: usize, log_likelihood: f64) -> f64 {
    2.0 * n_params as f64 - 2.0 * log_likelihood
}

/// The statistics (sums of x, y, x^2, y^2, x^2 y^2) the likelihood depends on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SufficientStats {
    pub n: f64,
    pub sum_x: f64,
    pub sum_y: f64,
    pub sum_xx: f64,
    pub sum_yy: f64,
    pub sum_xxyy: f64,
}

impl SufficientStats {
    pub fn of(s: &Sample2D) -> Self {
        let mut st = Self {
            n: s.len() as f64,
            sum_x: 0.0,
            sum_y: 0.0,
            sum_xx: 0.0,
            sum_yy: 0.0,
            sum_xxyy: 0.0,
        };
        for &(x, y) in s.pairs() {
            let (x2, y2) = (x * x, y * y);
            st.sum_x += x;
            st.sum_y += y;
            st.sum_xx += x2;
            st.sum_yy += y2;
            st.sum_xxyy += x2 * y2;
        }
        st
    }

    /// Log-likelihood given log kappa at the same parameters.
    pub fn loglik(&self, p: &EquiDispParams, log_kappa: f64) -> f64 {
        self.n * log_kappa
            - p.alpha() * self.sum_xx
            - p.beta() * self.sum_yy
            - p.gamma() * self.sum_xxyy
            + self.sum_x
            + self.sum_y
    }
}

/// Exact log-likelihood of the equi-dispersed conditionals model.
pub fn loglik(s: &Sample2D, p: &EquiDispParams, cfg: &QuadConfig) -> Result<f64> {
    let m = normalize(p, cfg)?;
    Ok(SufficientStats::of(s).loglik(p, m.log_kappa()))
}

// ---------------------------------------------------------------------------
// Pseudo-likelihood

/// Sum over observations of log f(x | y) + log f(y | x).
pub fn pseudo_loglik(s: &Sample2D, p: &EquiDispParams) -> f64 {
    let (a, b, g) = (p.alpha(), p.beta(), p.gamma());
    s.pairs()
        .iter()
        .map(|&(x, y)| {
            let qx = g * y * y + a;
            let qy = g * x * x + b;
            let cond_x = -LN_2PI / 2.0 + 0.5 * (2.0 * qx).ln() - qx * x * x + x - 1.0 / (4.0 * qx);
            let cond_y = -LN_2PI / 2.0 + 0.5 * (2.0 * qy).ln() - qy * y * y + y - 1.0 / (4.0 * qy);
            cond_x + cond_y
        })
        .sum()
}

/// Left side minus right side of the alpha estimating equation; decreasing in alpha.
pub fn pl_alpha_residual(s: &Sample2D, alpha: f64, gamma: f64) -> f64 {
    s.pairs()
        .iter()
        .map(|&(x, y)| {
            let q = gamma * y * y + alpha;
            0.5 / q + 0.25 / (q * q) - x * x
        })
        .sum()
}

/// Left side minus right side of the beta estimating equation; decreasing in beta.
pub fn pl_beta_residual(s: &Sample2D, beta: f64, gamma: f64) -> f64 {
    s.pairs()
        .iter()
        .map(|&(x, y)| {
            let q = gamma * x * x + beta;
            0.5 / q + 0.25 / (q * q) - y * y
        })
        .sum()
}

/// Left side minus right side of the gamma estimating equation; decreasing in gamma.
pub fn pl_gamma_residual(s: &Sample2D, alpha: f64, beta: f64, gamma: f64) -> f64 {
    s.pairs()
        .iter()
        .map(|&(x, y)| {
            let (x2, y2) = (x * x, y * y);
            let qx = gamma * y2 + alpha;
            let qy = gamma * x2 + beta;
            y2 * (0.5 / qx + 0.25 / (qx * qx)) + x2 * (0.5 / qy + 0.25 / (qy * qy)) - 2.0 * x2 * y2
        })
        .sum()
}

/// Gradient of [`pseudo_loglik`] in (alpha, beta, gamma).
pub fn pseudo_score(s: &Sample2D, p: &EquiDispParams) -> [f64; 3] {
    [
        pl_alpha_residual(s, p.alpha(), p.gamma()),
        pl_beta_residual(s, p.beta(), p.gamma()),
        pl_gamma_residual(s, p.alpha(), p.beta(), p.gamma()),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct PmleOptions {
    /// Max-norm of the estimating-equation residuals that ends the cycling.
    pub tol: f64,
    pub max_cycles: usize,
}

impl Default for PmleOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_cycles: 500,
        }
    }
}

const BRACKET_LO: f64 = 1e-8;
const BRACKET_HI: f64 = 1e4;
const BRACKET_LIMIT: f64 = 1e12;
const BRACKET_FLOOR: f64 = 1e-12;

enum Root {
    Interior(f64),
    /// No sign change above the floor: the maximum is at or below it.
    AtFloor(f64),
}

/// Solves g(t) = 0 for decreasing g on (0, inf), starting from [1e-8, 1e4]
/// and widening the bracket by factors of ten.
fn solve_positive<G: Fn(f64) -> f64>(g: G, hint: Option<f64>) -> Result<Root> {
    if let Some(h) = hint.filter(|h| *h > 0.0) {
        let (lo, hi) = (h * 0.5, h * 2.0);
        if g(lo) > 0.0 && g(hi) < 0.0 {
            return Ok(Root::Interior(bisect_decreasing(
                &g,
                lo,
                hi,
                f64::MIN_POSITIVE,
            )?));
        }
    }
    let mut hi = BRACKET_HI;
    while g(hi) >= 0.0 {
        hi *= 10.0;
        if hi > BRACKET_LIMIT {
            return Err(Error::Fit(
                "estimating equation has no root below 1e12".into(),
            ));
        }
    }
    let mut lo = BRACKET_LO;
    while g(lo) <= 0.0 {
        lo /= 10.0;
        if lo < BRACKET_FLOOR {
            return Ok(Root::AtFloor(BRACKET_FLOOR));
        }
    }
    Ok(Root::Interior(bisect_decreasing(
        &g,
        lo,
        hi,
        f64::MIN_POSITIVE,
    )?))
}

/// Pseudo-likelihood estimates by cyclic coordinate updates.
pub fn fit_pmle(s: &Sample2D) -> Result<FitReport> {
    fit_pmle_with(s, &PmleOptions::default())
}

pub fn fit_pmle_with(s: &Sample2D, opts: &PmleOptions) -> Result<FitReport> {
    s.require_len(3)?;
    if s.pairs().iter().all(|p| p.0 == 0.0) {
        return Err(Error::DegenerateSample("all x values are zero".into()));
    }
    if s.pairs().iter().all(|p| p.1 == 0.0) {
        return Err(Error::DegenerateSample("all y values are zero".into()));
    }

    let (mut alpha, mut beta, mut gamma) = (0.0f64, 0.0f64, 0.0f64);
    let mut floor_hits = 0usize;
    let mut boundary = false;
    let mut residual = f64::INFINITY;
    let mut cycles = 0;

    while cycles < opts.max_cycles {
        cycles += 1;
        alpha = match solve_positive(|a| pl_alpha_residual(s, a, gamma), Some(alpha))? {
            Root::Interior(a) => a,
            Root::AtFloor(a) => {
                floor_hits += 1;
                a
            }
        };
        beta = match solve_positive(|b| pl_beta_residual(s, b, gamma), Some(beta))? {
            Root::Interior(b) => b,
            Root::AtFloor(b) => {
                floor_hits += 1;
                b
            }
        };
        if pl_gamma_residual(s, alpha, beta, 0.0) <= 0.0 {
            gamma = 0.0;
            boundary = true;
        } else {
            boundary = false;
            let g3 = |g: f64| pl_gamma_residual(s, alpha, beta, g);
            gamma = if gamma > 0.0 && g3(gamma * 0.5) > 0.0 && g3(gamma * 2.0) < 0.0 {
                bisect_decreasing(g3, gamma * 0.5, gamma * 2.0, f64::MIN_POSITIVE)?
            } else {
                let mut hi = BRACKET_HI;
                while g3(hi) >= 0.0 {
                    hi *= 10.0;
                    if hi > BRACKET_LIMIT {
                        return Err(Error::Fit("gamma equation has no root below 1e12".into()));
                    }
                }
                bisect_decreasing(g3, 0.0, hi, f64::MIN_POSITIVE)?
            };
        }

        residual = kkt_residual(s, alpha, beta, gamma);
        if residual < opts.tol {
            break;
        }
    }

    let p = EquiDispParams::new(alpha, beta, gamma)?;
    let mut report = FitReport::new(
        MODEL_PMLE,
        &[("alpha", alpha), ("beta", beta), ("gamma", gamma)],
        pseudo_loglik(s, &p),
    );
    report.iterations = cycles;
    report.gradient_norm = residual;
    report.converged = residual < opts.tol;
    report.add_note("loglik and aic are pseudo-likelihood values");
    if boundary {
        report.add_note("boundary solution gamma = 0");
    }
    if floor_hits > 0 {
        report.converged = false;
        report.add_note(format!(
            "{floor_hits} coordinate update(s) pinned at the 1e-12 floor"
        ));
    }
    if !report.converged {
        report.add_note(format!("no convergence after {cycles} cycles"));
    }
    Ok(report)
}

/// Max-norm of the first-order conditions, with the gamma condition read as
/// a complementarity condition at gamma = 0.
fn kkt_residual(s: &Sample2D, alpha: f64, beta: f64, gamma: f64) -> f64 {
    let r1 = pl_alpha_residual(s, alpha, gamma).abs();
    let r2 = pl_beta_residual(s, beta, gamma).abs();
    let r3 = pl_gamma_residual(s, alpha, beta, gamma);
    let r3 = if gamma == 0.0 { r3.max(0.0) } else { r3.abs() };
    r1.max(r2).max(r3)
}

// ---------------------------------------------------------------------------
// Maximum likelihood

/// Default optimizer settings for [`fit_mle`]: alpha, beta >= 1e-8, gamma >= 0.
pub fn mle_optim_config() -> OptimConfig {
    OptimConfig::new(vec![1e-8, 1e-8, 0.0])
}

/// Maximum-likelihood fit with the normalizing constant recomputed at every
/// objective evaluation.
///
/// The search starts from the better (by likelihood) of `init` (the
/// pseudo-likelihood estimate when absent) and the closed-form gamma = 0 fit.
/// The optimizer works in coordinates scaled by the starting point so one
/// tolerance fits every parameter. Objective evaluations whose quadrature
/// fails are scored +inf and counted in the notes.
pub fn fit_mle(
    s: &Sample2D,
    init: Option<EquiDispParams>,
    quad_cfg: &QuadConfig,
    opt_cfg: &OptimConfig,
) -> Result<FitReport> {
    s.require_len(3)?;
    opt_cfg.validate(3)?;
    let stats = SufficientStats::of(s);
    let eval = |p: &EquiDispParams| -> Option<f64> {
        normalize(p, quad_cfg)
            .ok()
            .map(|m| stats.loglik(p, m.log_kappa()))
            .filter(|v| v.is_finite())
    };

    let mut notes = Vec::new();
    let mut candidates = Vec::new();
    match init {
        Some(p) => candidates.push(p),
        None => match fit_pmle(s) {
            Ok(r) => match r.equidisp_params() {
                Some(p) => candidates.push(p),
                None => notes.push("pseudo-likelihood start unusable".to_string()),
            },
            Err(e) => notes.push(format!("pseudo-likelihood start failed: {e}")),
        },
    }
    if let Ok(ind) = fit_independent_equidisp(s) {
        if let Some(p) = ind.equidisp_params() {
            candidates.push(p);
        }
    }
    let lb = &opt_cfg.lower_bounds;
    let start = candidates
        .into_iter()
        .map(|p| {
            // Project onto the interior of the box.
            let v = p.as_array();
            let q = [
                v[0].max(lb[0] + opt_cfg.boundary_epsilon),
                v[1].max(lb[1] + opt_cfg.boundary_epsilon),
                v[2].max(lb[2].max(0.0)),
            ];
            EquiDispParams::new(q[0], q[1], q[2]).expect("projected start is valid")
        })
        .filter_map(|p| eval(&p).map(|l| (p, l)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or_else(|| Error::Fit("no starting point with a finite likelihood".into()))?
        .0;

    // Scale: alpha and beta by their starting values, gamma by the larger of
    // its start and the size at which gamma * sum(x^2 y^2) matches the
    // quadratic terms.
    let natural_gamma = if stats.sum_xxyy > 0.0 {
        (start.alpha() * stats.sum_xx).min(start.beta() * stats.sum_yy) / stats.sum_xxyy
    } else {
        1.0
    };
    let scale = [
        start.alpha(),
        start.beta(),
        start.gamma().max(0.1 * natural_gamma),
    ];
    let scaled_cfg = OptimConfig {
        lower_bounds: lb
            .iter()
            .zip(scale)
            .map(|(l, sc)| l.max(0.0) / sc)
            .collect(),
        initial_step: opt_cfg
            .initial_step
            .as_ref()
            .map(|st| st.iter().zip(scale).map(|(a, sc)| a / sc).collect())
            .or(Some(vec![
                0.05,
                0.05,
                if start.gamma() > 0.0 { 0.05 } else { 0.5 },
            ])),
        ..opt_cfg.clone()
    };

    let failures = std::cell::Cell::new(0usize);
    let n = stats.n;
    let objective = |v: &[f64]| -> f64 {
        let p = match EquiDispParams::new(v[0] * scale[0], v[1] * scale[1], v[2] * scale[2]) {
            Ok(p) => p,
            Err(_) => return f64::INFINITY,
        };
        match eval(&p) {
            Some(l) => -l / n,
            None => {
                failures.set(failures.get() + 1);
                f64::INFINITY
            }
        }
    };
    let v0 = [
        start.alpha() / scale[0],
        start.beta() / scale[1],
        start.gamma() / scale[2],
    ];
    let min = minimize_bounded(objective, &v0, &scaled_cfg)?;
    let p = EquiDispParams::new(
        min.argmin[0] * scale[0],
        min.argmin[1] * scale[1],
        min.argmin[2] * scale[2],
    )?;
    let ll = eval(&p).ok_or_else(|| Error::Fit("likelihood not finite at the optimum".into()))?;

    let mut report = FitReport::new(
        MODEL_MLE,
        &[
            ("alpha", p.alpha()),
            ("beta", p.beta()),
            ("gamma", p.gamma()),
        ],
        ll,
    );
    report.converged = min.converged;
    report.iterations = min.iterations;
    for note in notes {
        report.add_note(note);
    }
    if p.gamma() == 0.0 {
        report.add_note("boundary solution gamma = 0");
    }
    if failures.get() > 0 {
        report.add_note(format!(
            "{} objective evaluation(s) rejected after quadrature failure",
            failures.get()
        ));
    }
    if !min.converged {
        report.add_note(format!(
            "optimizer stopped after {} iterations",
            min.iterations
        ));
    }
    Ok(report)
}

// ---------------------------------------------------------------------------
// Closed-form competitors

/// The gamma = 0 submodel: independent N(tau_x, tau_x) and N(tau_y, tau_y)
/// margins, reported as alpha = 1 / (2 tau_x), beta = 1 / (2 tau_y).
pub fn fit_independent_equidisp(s: &Sample2D) -> Result<FitReport> {
    s.require_len(1)?;
    let (xs, ys) = (s.xs(), s.ys());
    let tx = ueq_mle(&xs)?;
    let ty = ueq_mle(&ys)?;
    let ll = ueq_loglik(&xs, tx) + ueq_loglik(&ys, ty);
    Ok(FitReport::new(
        MODEL_INDEP,
        &[("alpha", 0.5 / tx.get()), ("beta", 0.5 / ty.get())],
        ll,
    ))
}

/// Gaussian maximum likelihood (1/n variances), with or without covariance.
pub fn fit_bivariate_normal(s: &Sample2D, independent: bool) -> Result<FitReport> {
    s.require_len(2)?;
    let n = s.len() as f64;
    let mx = s.pairs().iter().map(|p| p.0).sum::<f64>() / n;
    let my = s.pairs().iter().map(|p| p.1).sum::<f64>() / n;
    let (mut vx, mut vy, mut c) = (0.0, 0.0, 0.0);
    for &(x, y) in s.pairs() {
        vx += (x - mx) * (x - mx);
        vy += (y - my) * (y - my);
        c += (x - mx) * (y - my);
    }
    vx /= n;
    vy /= n;
    c /= n;
    if !(vx > 0.0 && vy > 0.0) {
        return Err(Error::DegenerateSample(
            "a coordinate has zero variance".into(),
        ));
    }
    if independent {
        let ll = -n * LN_2PI - 0.5 * n * (vx.ln() + vy.ln()) - n;
        return Ok(FitReport::new(
            MODEL_BVN_INDEP,
            &[("mu1", mx), ("mu2", my), ("sigma2_1", vx), ("sigma2_2", vy)],
            ll,
        ));
    }
    let det = vx * vy - c * c;
    if !(det > 0.0) || det <= 1e-14 * vx * vy {
        return Err(Error::DegenerateSample(
            "sample covariance matrix is singular".into(),
        ));
    }
    let ll = -n * LN_2PI - 0.5 * n * det.ln() - n;
    Ok(FitReport::new(
        MODEL_BVN,
        &[
            ("mu1", mx),
            ("mu2", my),
            ("sigma2_1", vx),
            ("sigma2_2", vy),
            ("cov", c),
        ],
        ll,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub quad: QuadConfig,
    pub optim: OptimConfig,
}

impl Default for CompareConfig {
    fn default() -> Self {
        Self {
            quad: QuadConfig::fitting(),
            optim: mle_optim_config(),
        }
    }
}

/// Reports of the models that fitted, ascending by AIC, plus the failures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub ranked: Vec<FitReport>,
    pub failures: Vec<ModelFailure>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelFailure {
    pub model: String,
    pub error: String,
}

/// Fits the dependent and independent equi-dispersed models and the
/// dependent and independent bivariate normals, ranking by AIC.
pub fn compare_models(s: &Sample2D, cfg: &CompareConfig) -> Comparison {
    let attempts: [(&str, Result<FitReport>); 4] = [
        (MODEL_MLE, fit_mle(s, None, &cfg.quad, &cfg.optim)),
        (MODEL_INDEP, fit_independent_equidisp(s)),
        (MODEL_BVN, fit_bivariate_normal(s, false)),
        (MODEL_BVN_INDEP, fit_bivariate_normal(s, true)),
    ];
    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for (name, r) in attempts {
        match r {
            Ok(rep) => ranked.push(rep),
            Err(e) => failures.push(ModelFailure {
                model: name.to_string(),
                error: e.to_string(),
            }),
        }
    }
    ranked.sort_by(|a, b| a.aic.total_cmp(&b.aic));
    Comparison { ranked, failures }
}
