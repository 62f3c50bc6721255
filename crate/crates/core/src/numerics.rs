//! Numerical kernel shared by every model: adaptive quadrature over the real
//! line, bounded Nelder-Mead minimization, bisection for decreasing scalar
//! functions and a reproducible random stream.

use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Settings for [`integrate_real_line`].
#[derive(Debug, Clone, PartialEq)]
pub struct QuadConfig {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    /// Half-width of the initial window, in units of the envelope scale.
    pub truncation_radius_multiplier: f64,
}

impl Default for QuadConfig {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-10,
            max_subdivisions: 500,
            truncation_radius_multiplier: 8.0,
        }
    }
}

impl QuadConfig {
    /// Tolerances used inside likelihood maximization.
    pub fn fitting() -> Self {
        Self {
            abs_tol: 1e-9,
            rel_tol: 1e-11,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "quadrature tolerances must be positive".into(),
            ));
        }
        if self.max_subdivisions == 0 {
            return Err(Error::InvalidParameter(
                "max_subdivisions must be at least 1".into(),
            ));
        }
        if !(self.truncation_radius_multiplier >= 6.0) {
            return Err(Error::InvalidParameter(
                "truncation_radius_multiplier must be at least 6".into(),
            ));
        }
        Ok(())
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

const INITIAL_PANELS: usize = 8;
const MAX_WINDOW_DOUBLINGS: usize = 60;

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn eval<F: Fn(f64) -> f64>(f: &F, t: f64) -> Result<f64> {
    let v = f(t);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::NonFiniteIntegrand { at: t })
    }
}

fn gauss_kronrod<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Result<Panel> {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = eval(f, center)?;
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let s = eval(f, center - dx)? + eval(f, center + dx)?;
        kronrod += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    Ok(Panel {
        a,
        b,
        value: kronrod * half,
        error: ((kronrod - gauss) * half).abs(),
    })
}

/// Estimates the integral of `f` over the whole real line.
///
/// The integral is taken over `[center - m*scale, center + m*scale]` with
/// `m = cfg.truncation_radius_multiplier`; the window is doubled until the
/// integrand at both ends drops below `abs_tol * 1e-3`.
pub fn integrate_real_line<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    cfg: &QuadConfig,
) -> Result<f64> {
    integrate_real_line_covering(f, center, scale, &[], cfg)
}

/// As [`integrate_real_line`], but the window is widened so that every point
/// in `features` lies at least one `scale` inside it, and those points are used
/// as initial breakpoints. Use this for integrands with a secondary peak away
/// from the envelope center.
pub fn integrate_real_line_covering<F: Fn(f64) -> f64>(
    f: F,
    center: f64,
    scale: f64,
    features: &[f64],
    cfg: &QuadConfig,
) -> Result<f64> {
    cfg.validate()?;
    if !(scale > 0.0 && scale.is_finite() && center.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "integration window needs finite center and positive scale (center {center}, scale {scale})"
        )));
    }

    let mut half = cfg.truncation_radius_multiplier * scale;
    let (mut lo, mut hi);
    let mut doublings = 0;
    loop {
        lo = center - half;
        hi = center + half;
        for &p in features {
            lo = lo.min(p - scale);
            hi = hi.max(p + scale);
        }
        let cutoff = cfg.abs_tol * 1e-3;
        if eval(&f, lo)?.abs() < cutoff && eval(&f, hi)?.abs() < cutoff {
            break;
        }
        doublings += 1;
        if doublings > cfg.max_subdivisions.min(MAX_WINDOW_DOUBLINGS) {
            return Err(Error::TailTruncation { half_width: half });
        }
        half *= 2.0;
    }

    let mut cuts: Vec<f64> = (0..=INITIAL_PANELS)
        .map(|i| lo + (hi - lo) * i as f64 / INITIAL_PANELS as f64)
        .collect();
    cuts.extend(features.iter().copied().filter(|p| *p > lo && *p < hi));
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let mut heap = BinaryHeap::new();
    let mut total = 0.0;
    let mut total_err = 0.0;
    for w in cuts.windows(2) {
        let p = gauss_kronrod(&f, w[0], w[1])?;
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }

    while total_err > cfg.abs_tol.max(cfg.rel_tol * total.abs()) {
        if heap.len() >= cfg.max_subdivisions.max(cuts.len()) {
            return Err(Error::QuadratureLimit {
                estimate: total_err,
                intervals: heap.len(),
            });
        }
        let worst = heap.pop().expect("at least one panel");
        let mid = 0.5 * (worst.a + worst.b);
        let left = gauss_kronrod(&f, worst.a, mid)?;
        let right = gauss_kronrod(&f, mid, worst.b)?;
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        // Re-sum periodically so cancellation in the running totals cannot drift.
        if heap.len() % 64 == 0 {
            total = heap.iter().map(|p| p.value).sum();
            total_err = heap.iter().map(|p| p.error).sum();
        }
    }
    Ok(heap.iter().map(|p| p.value).sum())
}

/// Settings for [`minimize_bounded`].
#[derive(Debug, Clone, PartialEq)]
pub struct OptimConfig {
    pub param_tol: f64,
    /// Relative tolerance on the spread of objective values in the simplex.
    pub objective_tol: f64,
    pub max_iterations: usize,
    /// One entry per coordinate; `f64::NEG_INFINITY` leaves a coordinate free.
    pub lower_bounds: Vec<f64>,
    /// Offset applied to starting values that sit on (or below) a bound.
    pub boundary_epsilon: f64,
    /// Per-coordinate size of the initial simplex. Defaults to 5% of the
    /// starting value (0.00025 for zero entries).
    pub initial_step: Option<Vec<f64>>,
}

impl OptimConfig {
    pub fn new(lower_bounds: Vec<f64>) -> Self {
        Self {
            param_tol: 1e-7,
            objective_tol: 1e-9,
            max_iterations: 5000,
            lower_bounds,
            boundary_epsilon: 1e-6,
            initial_step: None,
        }
    }

    pub fn unbounded(dim: usize) -> Self {
        Self::new(vec![f64::NEG_INFINITY; dim])
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if !(self.param_tol > 0.0 && self.objective_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "optimizer tolerances must be positive".into(),
            ));
        }
        if !(self.boundary_epsilon > 0.0 && self.boundary_epsilon < 1e-3) {
            return Err(Error::InvalidParameter(
                "boundary_epsilon must lie in (0, 1e-3)".into(),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.lower_bounds.len() != dim {
            return Err(Error::InvalidParameter(format!(
                "{} lower bounds for a {dim}-dimensional problem",
                self.lower_bounds.len()
            )));
        }
        if let Some(step) = &self.initial_step {
            if step.len() != dim || step.iter().any(|s| !(*s > 0.0)) {
                return Err(Error::InvalidParameter(
                    "initial_step must hold one positive entry per coordinate".into(),
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub argmin: Vec<f64>,
    pub min_value: f64,
    pub converged: bool,
    pub iterations: usize,
    pub evaluations: usize,
}

struct Bounded<'a, F> {
    objective: F,
    lower: &'a [f64],
    evaluations: usize,
}

impl<F: FnMut(&[f64]) -> f64> Bounded<'_, F> {
    fn project(&self, x: &mut [f64]) {
        for (xi, lb) in x.iter_mut().zip(self.lower) {
            if *xi < *lb {
                *xi = *lb;
            }
        }
    }

    /// +inf marks an infeasible point; NaN and -inf abort the search.
    fn value(&mut self, x: &[f64]) -> Result<f64> {
        self.evaluations += 1;
        let v = (self.objective)(x);
        if v.is_nan() || v == f64::NEG_INFINITY {
            return Err(Error::NonFiniteObjective { point: x.to_vec() });
        }
        Ok(v)
    }
}

/// Derivative-free minimization subject to per-coordinate lower bounds.
///
/// Nelder-Mead with every trial point projected onto the feasible box. A
/// converged simplex is restarted from its best vertex (at most twice) and
/// coordinates resting within `param_tol` of a bound are snapped onto the
/// bound when that does not increase the objective, so boundary optima come
/// back exactly on the bound.
pub fn minimize_bounded<F: FnMut(&[f64]) -> f64>(
    objective: F,
    init: &[f64],
    cfg: &OptimConfig,
) -> Result<Minimum> {
    let dim = init.len();
    if dim == 0 {
        return Err(Error::InvalidParameter("empty parameter vector".into()));
    }
    cfg.validate(dim)?;

    let mut problem = Bounded {
        objective,
        lower: &cfg.lower_bounds,
        evaluations: 0,
    };

    let mut start: Vec<f64> = init
        .iter()
        .zip(&cfg.lower_bounds)
        .map(|(x, lb)| {
            if lb.is_finite() && *x <= lb + cfg.boundary_epsilon {
                lb + cfg.boundary_epsilon
            } else {
                *x
            }
        })
        .collect();
    let mut f_start = problem.value(&start)?;
    if !f_start.is_finite() {
        return Err(Error::NonFiniteObjective { point: start });
    }

    let mut iterations = 0;
    let mut converged = false;
    for round in 0..3 {
        let budget = cfg.max_iterations.saturating_sub(iterations);
        if budget == 0 {
            break;
        }
        let (best, f_best, used, done) =
            nelder_mead(&mut problem, &start, f_start, cfg, budget, round > 0)?;
        iterations += used;
        let improvement = f_start - f_best;
        let moved = best
            .iter()
            .zip(&start)
            .any(|(a, b)| (a - b).abs() > cfg.param_tol);
        start = best;
        f_start = f_best;
        converged = done;
        if !done {
            break;
        }
        if round > 0 && !moved && improvement <= cfg.objective_tol * f_best.abs().max(1.0) {
            break;
        }
    }

    // Snap near-boundary coordinates onto the bound.
    for i in 0..dim {
        let lb = cfg.lower_bounds[i];
        if lb.is_finite()
            && start[i] != lb
            && start[i] - lb <= cfg.param_tol.max(cfg.boundary_epsilon)
        {
            let mut trial = start.clone();
            trial[i] = lb;
            let f_trial = problem.value(&trial)?;
            if f_trial <= f_start {
                start = trial;
                f_start = f_trial;
            }
        }
    }

    Ok(Minimum {
        argmin: start,
        min_value: f_start,
        converged,
        iterations,
        evaluations: problem.evaluations,
    })
}

fn nelder_mead<F: FnMut(&[f64]) -> f64>(
    problem: &mut Bounded<'_, F>,
    start: &[f64],
    f_start: f64,
    cfg: &OptimConfig,
    budget: usize,
    restart: bool,
) -> Result<(Vec<f64>, f64, usize, bool)> {
    let dim = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
    simplex.push((start.to_vec(), f_start));
    for i in 0..dim {
        let mut step = match &cfg.initial_step {
            Some(s) => s[i],
            None if start[i] != 0.0 => 0.05 * start[i].abs(),
            None => 0.000_25,
        };
        if restart {
            step *= 0.5;
        }
        let mut v = start.to_vec();
        v[i] += step;
        problem.project(&mut v);
        let fv = problem.value(&v)?;
        simplex.push((v, fv));
    }

    let n = dim as f64;
    // Dimension-adaptive coefficients (Gao & Han).
    let reflect = 1.0;
    let expand = 1.0 + 2.0 / n;
    let contract = 0.75 - 0.5 / n;
    let shrink = 1.0 - 1.0 / n;

    let mut used = 0;
    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (best, f_best) = (&simplex[0].0, simplex[0].1);
        let spread_x = simplex[1..]
            .iter()
            .flat_map(|(v, _)| v.iter().zip(best).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        let f_worst = simplex[dim].1;
        let spread_f = f_worst - f_best;
        if spread_x <= cfg.param_tol
            && spread_f.is_finite()
            && spread_f <= cfg.objective_tol * f_best.abs().max(1.0)
        {
            let (x, f) = simplex.swap_remove(0);
            return Ok((x, f, used, true));
        }
        if used >= budget {
            let (x, f) = simplex.swap_remove(0);
            return Ok((x, f, used, false));
        }
        used += 1;

        let centroid: Vec<f64> = (0..dim)
            .map(|j| simplex[..dim].iter().map(|(v, _)| v[j]).sum::<f64>() / n)
            .collect();
        let worst = simplex[dim].0.clone();
        let along = |t: f64, problem: &Bounded<'_, F>| {
            let mut p: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            problem.project(&mut p);
            p
        };

        let xr = along(reflect, problem);
        let fr = problem.value(&xr)?;
        if fr < simplex[0].1 {
            let xe = along(reflect * expand, problem);
            let fe = problem.value(&xe)?;
            simplex[dim] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[dim - 1].1 {
            simplex[dim] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < f_worst {
            let xc = along(reflect * contract, problem);
            let fc = problem.value(&xc)?;
            (xc, fc)
        } else {
            let xc = along(-contract, problem);
            let fc = problem.value(&xc)?;
            (xc, fc)
        };
        if fc < f_worst.min(fr) {
            simplex[dim] = (xc, fc);
            continue;
        }
        let anchor = simplex[0].0.clone();
        for vertex in simplex.iter_mut().skip(1) {
            let mut p: Vec<f64> = anchor
                .iter()
                .zip(&vertex.0)
                .map(|(a, v)| a + shrink * (v - a))
                .collect();
            problem.project(&mut p);
            let fp = problem.value(&p)?;
            *vertex = (p, fp);
        }
    }
}

/// Root of a strictly decreasing function on `[lo, hi]`, to bracket width `tol`.
pub fn bisect_decreasing<G: FnMut(f64) -> f64>(
    mut g: G,
    lo: f64,
    hi: f64,
    tol: f64,
) -> Result<f64> {
    if !(lo < hi) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "bisection needs lo < hi and tol > 0 (lo {lo}, hi {hi}, tol {tol})"
        )));
    }
    let (g_lo, g_hi) = (g(lo), g(hi));
    if !(g_lo > 0.0 && g_hi < 0.0) {
        return Err(Error::Bracket { lo, hi, g_lo, g_hi });
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let gm = g(mid);
        if gm > 0.0 {
            a = mid;
        } else if gm < 0.0 {
            b = mid;
        } else {
            return Ok(mid);
        }
    }
    Ok(0.5 * (a + b))
}

/// Deterministic random source keyed by `(seed, stream_index)`.
///
/// Distinct stream indices give independent sequences from the same seed, so
/// parallel workers can each own one.
#[derive(Debug, Clone)]
pub struct RandomStream {
    seed: u64,
    stream_index: u64,
    rng: ChaCha12Rng,
}

impl RandomStream {
    pub fn new(seed: u64, stream_index: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        rng.set_stream(stream_index);
        Self {
            seed,
            stream_index,
            rng,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    /// Uniform draw on [0, 1).
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.rng.sample(StandardNormal)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }
}
