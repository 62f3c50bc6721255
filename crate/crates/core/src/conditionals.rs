//! The eight-parameter normal-conditionals family
//! f(x, y) = exp{-(1, x, x^2) A (1, y, y^2)'} and its admissibility checks.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::EquiDispParams;

/// Tolerance for exact-equality constraints on coefficients built by hand.
pub const EXACT_TOL: f64 = 1e-12;

/// Coefficient matrix `a[i][j]` multiplying x^i y^j in the exponent.
///
/// Any finite matrix is representable; use [`validate_nc`] to classify it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NcMatrix {
    pub a: [[f64; 3]; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Law of X given Y = t.
    XGivenY,
    /// Law of Y given X = t.
    YGivenX,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    ClassicalBivariateNormal,
    GeneralNc,
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum EquiDispReduction {
    EquiDispersed(EquiDispParams),
    NotEquiDispersed(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum VarMeanSqCheck {
    /// Independent N(tau_x, tau_x^2) and N(tau_y, tau_y^2) marginals.
    IndependentSolution {
        tau_x: f64,
        tau_y: f64,
    },
    NotAdmissible(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanVarianceOrder {
    MeanExceedsVariance,
    VarianceExceedsMean,
    Neither,
}

impl NcMatrix {
    pub fn new(a: [[f64; 3]; 3]) -> Result<Self> {
        if a.iter().flatten().all(|v| v.is_finite()) {
            Ok(Self { a })
        } else {
            Err(Error::InvalidParameter(
                "matrix entries must be finite".into(),
            ))
        }
    }

    pub fn zeros() -> Self {
        Self { a: [[0.0; 3]; 3] }
    }

    /// Sets a_ij and returns the matrix, for building examples fluently.
    pub fn with(mut self, i: usize, j: usize, value: f64) -> Self {
        self.a[i][j] = value;
        self
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.a[i][j]
    }

    /// The equi-dispersed member: a20 = alpha, a02 = beta, a22 = gamma,
    /// a10 = a01 = -1, every other free coefficient zero.
    pub fn from_equidisp(p: &EquiDispParams) -> Self {
        Self::zeros()
            .with(2, 0, p.alpha())
            .with(0, 2, p.beta())
            .with(2, 2, p.gamma())
            .with(1, 0, -1.0)
            .with(0, 1, -1.0)
    }

    /// Unnormalized log density, ignoring a00.
    pub fn log_kernel(&self, x: f64, y: f64) -> f64 {
        let xs = [1.0, x, x * x];
        let ys = [1.0, y, y * y];
        let mut s = 0.0;
        for (i, (row, xi)) in self.a.iter().zip(xs).enumerate() {
            for (j, (aij, yj)) in row.iter().zip(ys).enumerate() {
                if i + j > 0 {
                    s += aij * xi * yj;
                }
            }
        }
        -s
    }
}

fn is_zero(v: f64) -> bool {
    v.abs() <= EXACT_TOL
}

/// Classifies a coefficient matrix as classical bivariate normal, a genuine
/// normal-conditionals density, or invalid (naming the first failed condition).
///
/// The classical branch requires a positive-definite precision, i.e.
/// a11^2 < 4 a02 a20.
pub fn validate_nc(m: &NcMatrix) -> Classification {
    let a = &m.a;
    let (a22, a12, a21, a20, a02, a11) = (a[2][2], a[1][2], a[2][1], a[2][0], a[0][2], a[1][1]);
    if is_zero(a22) && is_zero(a12) && is_zero(a21) {
        if !(a20 > 0.0) {
            return Classification::Invalid("a20 > 0 violated (classical case)".into());
        }
        if !(a02 > 0.0) {
            return Classification::Invalid("a02 > 0 violated (classical case)".into());
        }
        if !(a11 * a11 < 4.0 * a02 * a20) {
            return Classification::Invalid(
                "a11^2 < 4 a02 a20 violated (precision not positive definite)".into(),
            );
        }
        return Classification::ClassicalBivariateNormal;
    }
    if !(a22 > 0.0) {
        return Classification::Invalid("a22 > 0 violated".into());
    }
    if !(4.0 * a22 * a02 > a12 * a12) {
        return Classification::Invalid("4 a22 a02 > a12^2 violated".into());
    }
    if !(4.0 * a20 * a22 > a21 * a21) {
        return Classification::Invalid("4 a20 a22 > a21^2 violated".into());
    }
    Classification::GeneralNc
}

/// Conditional mean and variance at `t` along `axis`.
pub fn nc_conditional_moments(m: &NcMatrix, axis: Axis, t: f64) -> Result<(f64, f64)> {
    let a = &m.a;
    let (num, den) = match axis {
        Axis::XGivenY => (
            a[1][2] * t * t + a[1][1] * t + a[1][0],
            a[2][2] * t * t + a[2][1] * t + a[2][0],
        ),
        Axis::YGivenX => (
            a[2][1] * t * t + a[1][1] * t + a[0][1],
            a[2][2] * t * t + a[1][2] * t + a[0][2],
        ),
    };
    if !(den > 0.0) {
        return Err(Error::ConditionalVariance {
            at: t,
            denominator: den,
        });
    }
    Ok((-num / (2.0 * den), 1.0 / (2.0 * den)))
}

/// Recovers (alpha, beta, gamma) when the matrix satisfies the equi-dispersion
/// constraints a11 = a12 = a21 = 0 and a10 = a01 = -1.
pub fn nc_equidisp_reduce(m: &NcMatrix) -> EquiDispReduction {
    let a = &m.a;
    let checks = [
        (a[1][1], 0.0, "a11 != 0"),
        (a[1][2], 0.0, "a12 != 0"),
        (a[2][1], 0.0, "a21 != 0"),
        (a[1][0], -1.0, "a10 != -1"),
        (a[0][1], -1.0, "a01 != -1"),
    ];
    for (value, target, reason) in checks {
        if (value - target).abs() > EXACT_TOL {
            return EquiDispReduction::NotEquiDispersed(reason.into());
        }
    }
    match EquiDispParams::new(a[2][0], a[0][2], a[2][2]) {
        Ok(p) => EquiDispReduction::EquiDispersed(p),
        Err(e) => EquiDispReduction::NotEquiDispersed(e.to_string()),
    }
}

/// Checks whether conditional variances equal squared conditional means.
///
/// The only admissible matrices are a11 = a12 = a21 = a22 = 0 with
/// a20 = a10^2 / 2 and a02 = a01^2 / 2 (a10, a01 nonzero). The density then
/// factors into N(-1/a10, 1/a10^2) and N(-1/a01, 1/a01^2).
pub fn nc_check_var_eq_meansq(m: &NcMatrix) -> VarMeanSqCheck {
    let a = &m.a;
    let fail = |s: &str| VarMeanSqCheck::NotAdmissible(s.into());
    if !is_zero(a[2][2]) {
        return fail("a22 != 0");
    }
    if !is_zero(a[1][2]) {
        return fail("a12 != 0");
    }
    if !is_zero(a[2][1]) {
        return fail("a21 != 0");
    }
    if !is_zero(a[1][1]) {
        return fail("a11 != 0 forces a10 = a01 = a20 = a02 = 0, which is not integrable");
    }
    if is_zero(a[1][0]) {
        return fail("a10 = 0 forces a20 = 0, which is not integrable");
    }
    if is_zero(a[0][1]) {
        return fail("a01 = 0 forces a02 = 0, which is not integrable");
    }
    if (a[2][0] - a[1][0] * a[1][0] / 2.0).abs() > EXACT_TOL {
        return fail("a20 != a10^2 / 2");
    }
    if (a[0][2] - a[0][1] * a[0][1] / 2.0).abs() > EXACT_TOL {
        return fail("a02 != a01^2 / 2");
    }
    VarMeanSqCheck::IndependentSolution {
        tau_x: -1.0 / a[1][0],
        tau_y: -1.0 / a[0][1],
    }
}

/// Orders conditional means against conditional variances for a general
/// normal-conditionals matrix.
pub fn nc_mean_variance_order(m: &NcMatrix) -> Result<MeanVarianceOrder> {
    if validate_nc(m) != Classification::GeneralNc {
        return Err(Error::InvalidModel(
            "mean/variance ordering needs a general normal-conditionals matrix (a22 > 0)".into(),
        ));
    }
    let a = &m.a;
    let (a11, a12, a21) = (a[1][1], a[1][2], a[2][1]);
    let positive_variances =
        a12 * a12 < 4.0 * a[2][2] * a[0][2] && a21 * a21 < 4.0 * a[2][2] * a[2][0];
    let no_crossing =
        4.0 * a12 * (a[1][0] + 1.0) > a11 * a11 && 4.0 * a21 * (a[0][1] + 1.0) > a11 * a11;
    Ok(if !(positive_variances && no_crossing) {
        MeanVarianceOrder::Neither
    } else if a12 < 0.0 && a21 < 0.0 {
        MeanVarianceOrder::MeanExceedsVariance
    } else if a12 > 0.0 && a21 > 0.0 {
        MeanVarianceOrder::VarianceExceedsMean
    } else {
        MeanVarianceOrder::Neither
    })
}
