use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("integrand is not finite at t = {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error(
        "integrand does not decay inside the integration window (last half-width {half_width})"
    )]
    TailTruncation { half_width: f64 },

    #[error("quadrature error estimate {estimate:e} above tolerance after {intervals} intervals")]
    QuadratureLimit { estimate: f64, intervals: usize },

    #[error("objective is not finite at {point:?}")]
    NonFiniteObjective { point: Vec<f64> },

    #[error("invalid bracket: g({lo}) = {g_lo}, g({hi}) = {g_hi}")]
    Bracket {
        lo: f64,
        hi: f64,
        g_lo: f64,
        g_hi: f64,
    },

    #[error("conditional variance undefined: denominator {denominator} at t = {at}")]
    ConditionalVariance { at: f64, denominator: f64 },

    #[error("invalid normal-conditionals model: {0}")]
    InvalidModel(String),

    #[error("sampler stalled: acceptance rate {rate:e} over {proposals} proposals")]
    SamplerStall { rate: f64, proposals: u64 },

    #[error("link tau(x) = {value} is within the excluded neighbourhood of zero at x = {at}")]
    SingularLink { at: f64, value: f64 },

    #[error("degenerate link: {rejected} of {proposed} draws hit the excluded neighbourhood")]
    DegenerateLink { rejected: u64, proposed: u64 },

    #[error("grid too large: {cells} cells (limit {limit})")]
    GridTooLarge { cells: u64, limit: u64 },

    #[error("no converged replicate for estimator {0}")]
    EmptyAggregate(String),

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("input error: {0}")]
    Input(String),
}
