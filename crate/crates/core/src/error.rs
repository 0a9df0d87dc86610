use thiserror::Error;

/// Error type shared by all modules.
///
/// Variants mirror the failure modes of the individual operations; soft
/// verdicts (a condition check that comes out negative) are reported in the
/// respective report types, not here.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("knots must be strictly increasing: knot[{index}] = {value} does not exceed its predecessor")]
    NonMonotoneKnots { index: usize, value: f64 },

    #[error("need at least 3 knots (2 subintervals), got {got}")]
    TooFewKnots { got: usize },

    #[error("x = {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("x = {x} lies outside interval {interval} = [{lo}, {hi}]")]
    OutOfInterval {
        x: f64,
        interval: usize,
        lo: f64,
        hi: f64,
    },

    #[error(
        "grid is not closed under the inverse maps: Q_{interval}({x}) misses the grid by {miss:e}"
    )]
    GridNotClosed { interval: usize, x: f64, miss: f64 },

    #[error("no convergence after {steps} steps: last distance {last:e} > tol {tol:e}")]
    NoConvergence { steps: usize, last: f64, tol: f64 },

    #[error("scaling scheme is not contractive: sup |alpha| = {sup} >= 1")]
    ScalingNotContractive { sup: f64 },

    #[error(
        "contraction condition violated: sup |alpha| = {alpha_sup} >= 1/(1+C_L) = {threshold}"
    )]
    ContractionConditionViolated { alpha_sup: f64, threshold: f64 },

    #[error("function domain [{lo}, {hi}] is not the unit interval")]
    DomainNotUnit { lo: f64, hi: f64 },

    #[error("beta = {beta} outside the admissible range [1, 2]")]
    BetaOutOfRange { beta: f64 },

    #[error("scaling function at level {level}, interval {interval} is not constant")]
    NonconstantScaling { level: usize, interval: usize },

    #[error("sampling too coarse: max abscissa gap {max_gap:e} > {required:e} required for k_max = {k_max}")]
    Undersampled {
        max_gap: f64,
        k_max: u32,
        required: f64,
    },

    #[error("point set is empty")]
    EmptySet,

    #[error("contraction-to-center hypothesis failed at sample ({x}, {y}): d(w(x),q) = {lhs} > mu*d(x,q) + M = {rhs}")]
    HypothesisFailed { x: f64, y: f64, lhs: f64, rhs: f64 },

    #[error("Lipschitz products still at {last:e} after {horizon} levels; product series looks non-summable")]
    SummabilityDoubtful { horizon: usize, last: f64 },

    #[error("base function at level {level} does not match the germ at the endpoints (offset {offset:e})")]
    BaseEndpointMismatch { level: usize, offset: f64 },

    #[error("direct base function at level {level} coincides with the germ everywhere")]
    BaseEqualsGerm { level: usize },

    #[error("invalid {what}: {why}")]
    InvalidParameter { what: &'static str, why: String },
}

impl Error {
    pub(crate) fn invalid(what: &'static str, why: impl Into<String>) -> Self {
        Error::InvalidParameter {
            what,
            why: why.into(),
        }
    }
}
