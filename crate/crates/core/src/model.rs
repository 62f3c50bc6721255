//! The bivariate equi-dispersed normal conditionals distribution
//!
//! ```text
//! f(x, y) = kappa(alpha, beta, gamma) * exp{-(alpha x^2 + beta y^2 + gamma x^2 y^2 - x - y)}
//! ```
//!
//! Both conditionals are equi-dispersed normals: X | Y = y has mean and
//! variance 1 / (2 (gamma y^2 + alpha)), and symmetrically for Y | X = x.
//!
//! Because the conditional of Y is Gaussian, the y-integral of the kernel is
//! available in closed form and every normalization reduces to a single
//! one-dimensional quadrature over the X marginal.

use std::f64::consts::PI;

use serde::Serialize;

use crate::conditionals::Axis;
use crate::error::{Error, Result};
use crate::numerics::{integrate_real_line_covering, QuadConfig, RandomStream};
use crate::sample::Sample2D;

/// Model parameters: alpha > 0, beta > 0, gamma >= 0 (gamma = 0 is independence).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EquiDispParams {
    alpha: f64,
    beta: f64,
    gamma: f64,
}

impl EquiDispParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "alpha must be positive, got {alpha}"
            )));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive, got {beta}"
            )));
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be nonnegative, got {gamma}"
            )));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// The same model with x and y exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            alpha: self.beta,
            beta: self.alpha,
            gamma: self.gamma,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }
}

/// Marginal axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Margin {
    X,
    Y,
}

pub fn log_unnorm_density(p: &EquiDispParams, x: f64, y: f64) -> f64 {
    let (x2, y2) = (x * x, y * y);
    -(p.alpha * x2 + p.beta * y2 + p.gamma * x2 * y2 - x - y)
}

/// Log of the y-integral of the kernel at x (alpha for the quadratic in x,
/// beta for the integrated-out coordinate).
fn log_marginal_kernel(own: f64, other: f64, gamma: f64, t: f64) -> f64 {
    let q = gamma * t * t + other;
    -own * t * t + t + 0.5 * (PI / q).ln() + 1.0 / (4.0 * q)
}

/// The part of the marginal kernel that is not Gaussian; maximal at t = 0.
fn log_tilt(other: f64, gamma: f64, t: f64) -> f64 {
    let q = gamma * t * t + other;
    0.5 * (PI / q).ln() + 1.0 / (4.0 * q)
}

/// Integral of `weight(t) * exp(kernel(t))` over the line, returned as
/// `(log scale, scaled integral)` with the kernel shifted by its maximum over a
/// coarse scan so the integrand stays O(1).
fn scaled_integral<W: Fn(f64) -> f64>(
    own: f64,
    other: f64,
    gamma: f64,
    weight: W,
    cfg: &QuadConfig,
) -> Result<(f64, f64)> {
    let center = 1.0 / (2.0 * own);
    let scale = 1.0 / (2.0 * own).sqrt();
    let kernel = |t: f64| log_marginal_kernel(own, other, gamma, t);
    let shift = (-32..=32)
        .map(|i| center + scale * i as f64 * 0.25)
        .chain([0.0])
        .map(kernel)
        .fold(f64::NEG_INFINITY, f64::max);
    let value = integrate_real_line_covering(
        |t| weight(t) * (kernel(t) - shift).exp(),
        center,
        scale,
        &[0.0],
        cfg,
    )?;
    Ok((shift, value))
}

fn log_inverse_kappa(own: f64, other: f64, gamma: f64, cfg: &QuadConfig) -> Result<f64> {
    let (shift, value) = scaled_integral(own, other, gamma, |_| 1.0, cfg)?;
    if !(value > 0.0) {
        return Err(Error::Fit(format!(
            "normalizing integral is not positive ({value})"
        )));
    }
    Ok(shift + value.ln())
}

/// Closed-form log kappa at gamma = 0.
pub fn log_kappa_independent(alpha: f64, beta: f64) -> f64 {
    0.5 * (alpha * beta).ln() - PI.ln() - 1.0 / (4.0 * alpha) - 1.0 / (4.0 * beta)
}

/// A parameter set together with its normalizing constant.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedModel {
    params: EquiDispParams,
    log_kappa: f64,
    quad_cfg: QuadConfig,
}

pub fn normalize(p: &EquiDispParams, cfg: &QuadConfig) -> Result<NormalizedModel> {
    let log_kappa = -log_inverse_kappa(p.alpha, p.beta, p.gamma, cfg)?;
    Ok(NormalizedModel {
        params: *p,
        log_kappa,
        quad_cfg: cfg.clone(),
    })
}

/// log kappa computed by integrating out x analytically and y numerically.
/// Agrees with [`normalize`] up to quadrature error.
pub fn log_kappa_via_y(p: &EquiDispParams, cfg: &QuadConfig) -> Result<f64> {
    Ok(-log_inverse_kappa(p.beta, p.alpha, p.gamma, cfg)?)
}

pub fn conditional_law(p: &EquiDispParams, axis: Axis, t: f64) -> (f64, f64) {
    let mu = match axis {
        Axis::XGivenY => 1.0 / (2.0 * (p.gamma * t * t + p.alpha)),
        Axis::YGivenX => 1.0 / (2.0 * (p.gamma * t * t + p.beta)),
    };
    (mu, mu)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub ex: f64,
    pub ey: f64,
    pub var_x: f64,
    pub var_y: f64,
    pub cov: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
    pub nx: usize,
    pub ny: usize,
}

pub const MAX_GRID_CELLS: u64 = 10_000_000;

impl GridSpec {
    pub fn square(lo: f64, hi: f64, n: usize) -> Self {
        Self {
            x_min: lo,
            x_max: hi,
            y_min: lo,
            y_max: hi,
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.x_min < self.x_max && self.y_min < self.y_max) {
            return Err(Error::InvalidParameter(
                "grid bounds must satisfy min < max".into(),
            ));
        }
        if self.nx == 0 || self.ny == 0 {
            return Err(Error::InvalidParameter(
                "grid counts must be positive".into(),
            ));
        }
        let cells = self.nx as u64 * self.ny as u64;
        if cells > MAX_GRID_CELLS {
            return Err(Error::GridTooLarge {
                cells,
                limit: MAX_GRID_CELLS,
            });
        }
        Ok(())
    }

    fn coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
        if n == 1 {
            lo
        } else {
            lo + (hi - lo) * i as f64 / (n - 1) as f64
        }
    }

    pub fn x(&self, i: usize) -> f64 {
        Self::coord(self.x_min, self.x_max, self.nx, i)
    }

    pub fn y(&self, j: usize) -> f64 {
        Self::coord(self.y_min, self.y_max, self.ny, j)
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub x: f64,
    pub y: f64,
    pub density: f64,
}

impl NormalizedModel {
    pub fn params(&self) -> &EquiDispParams {
        &self.params
    }

    pub fn log_kappa(&self) -> f64 {
        self.log_kappa
    }

    pub fn quad_cfg(&self) -> &QuadConfig {
        &self.quad_cfg
    }

    pub fn logpdf(&self, x: f64, y: f64) -> f64 {
        self.log_kappa + log_unnorm_density(&self.params, x, y)
    }

    pub fn marginal_logpdf(&self, margin: Margin, t: f64) -> f64 {
        let p = &self.params;
        let kernel = match margin {
            Margin::X => log_marginal_kernel(p.alpha, p.beta, p.gamma, t),
            Margin::Y => log_marginal_kernel(p.beta, p.alpha, p.gamma, t),
        };
        self.log_kappa + kernel
    }

    /// E[weight(T)] for T distributed as the chosen marginal.
    pub fn marginal_expectation<W: Fn(f64) -> f64>(
        &self,
        margin: Margin,
        weight: W,
    ) -> Result<f64> {
        let p = &self.params;
        let (own, other) = match margin {
            Margin::X => (p.alpha, p.beta),
            Margin::Y => (p.beta, p.alpha),
        };
        let (shift, value) = scaled_integral(own, other, p.gamma, weight, &self.quad_cfg)?;
        Ok(value * (shift + self.log_kappa).exp())
    }

    /// Means, variances and covariance from one-dimensional quadrature over
    /// the X marginal, using E[Y h(X)] = E[h(X) mu(X)] with
    /// mu(x) = 1 / (2 (gamma x^2 + beta)).
    pub fn moments(&self) -> Result<Moments> {
        let p = self.params;
        let mu = move |x: f64| 1.0 / (2.0 * (p.gamma * x * x + p.beta));
        let ex = self.marginal_expectation(Margin::X, |x| x)?;
        let ex2 = self.marginal_expectation(Margin::X, |x| x * x)?;
        let ey = self.marginal_expectation(Margin::X, mu)?;
        let ey2 = self.marginal_expectation(Margin::X, |x| {
            let m = mu(x);
            m + m * m
        })?;
        let exy = self.marginal_expectation(Margin::X, |x| x * mu(x))?;
        Ok(Moments {
            ex,
            ey,
            var_x: ex2 - ex * ex,
            var_y: ey2 - ey * ey,
            cov: exy - ex * ey,
        })
    }

    /// Draws `n` pairs: x from the X marginal by rejection against the
    /// N(1/(2 alpha), 1/(2 alpha)) envelope, then y from its conditional law.
    pub fn sample(&self, n: usize, rng: &mut RandomStream) -> Result<Sample2D> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "sample size must be at least 1".into(),
            ));
        }
        const WINDOW: u64 = 1_000_000;
        const MIN_RATE: f64 = 1e-4;

        let p = self.params;
        let env_mean = 1.0 / (2.0 * p.alpha);
        let env_sd = env_mean.sqrt();
        let tilt_max = log_tilt(p.beta, p.gamma, 0.0);

        let mut pairs = Vec::with_capacity(n);
        let (mut proposals, mut accepted) = (0u64, 0u64);
        while pairs.len() < n {
            let x = rng.normal(env_mean, env_sd);
            proposals += 1;
            let log_accept = log_tilt(p.beta, p.gamma, x) - tilt_max;
            if log_accept >= 0.0 || rng.uniform().ln() < log_accept {
                accepted += 1;
                let (mean, var) = conditional_law(&p, Axis::YGivenX, x);
                let y = rng.normal(mean, var.sqrt());
                pairs.push((x, y));
            }
            if proposals == WINDOW {
                let rate = accepted as f64 / proposals as f64;
                if rate < MIN_RATE {
                    return Err(Error::SamplerStall { rate, proposals });
                }
                proposals = 0;
                accepted = 0;
            }
        }
        Sample2D::new(pairs)
    }

    /// Row-major (y outer, x inner) densities on the grid.
    pub fn density_grid(&self, g: &GridSpec) -> Result<Vec<GridPoint>> {
        g.validate()?;
        let mut out = Vec::with_capacity(g.nx * g.ny);
        for j in 0..g.ny {
            let y = g.y(j);
            for i in 0..g.nx {
                let x = g.x(i);
                out.push(GridPoint {
                    x,
                    y,
                    density: self.logpdf(x, y).exp(),
                });
            }
        }
        Ok(out)
    }
}

/// Strict local maxima (8-neighbourhood) among interior points of a grid
/// produced by [`NormalizedModel::density_grid`]. Points below 1e-12 of the
/// grid maximum are ignored.
pub fn grid_modes(points: &[GridPoint], g: &GridSpec) -> Vec<GridPoint> {
    let (nx, ny) = (g.nx, g.ny);
    if nx < 3 || ny < 3 || points.len() != nx * ny {
        return Vec::new();
    }
    let top = points.iter().map(|p| p.density).fold(0.0, f64::max);
    let floor = top * 1e-12;
    let at = |i: usize, j: usize| points[j * nx + i].density;
    let mut modes = Vec::new();
    for j in 1..ny - 1 {
        for i in 1..nx - 1 {
            let v = at(i, j);
            if v <= floor {
                continue;
            }
            let is_peak = (j - 1..=j + 1)
                .flat_map(|jj| (i - 1..=i + 1).map(move |ii| (ii, jj)))
                .filter(|&(ii, jj)| (ii, jj) != (i, j))
                .all(|(ii, jj)| v > at(ii, jj));
            if is_peak {
                modes.push(points[j * nx + i]);
            }
        }
    }
    modes
}
