use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by auction construction and execution.
///
/// Structural problems with a scenario are *reported*, not thrown — see
/// [`crate::model::validate_scenario`]. Errors here are conditions that stop
/// a mechanism from producing a well-defined outcome.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("scenario is not valid: {0}")]
    InvalidScenario(String),

    #[error("distribution parameters are invalid: {0}")]
    BadDistribution(String),

    #[error("bid for seller {seller} is not admissible: {reason}")]
    InvalidBid { seller: usize, reason: String },

    #[error("point (cost={cost}, capacity={capacity}) lies outside the distribution support")]
    OutOfSupport { cost: f64, capacity: f64 },

    #[error("conditional density vanishes at (cost={cost}, capacity={capacity}); virtual cost is singular there")]
    ZeroDensity { cost: f64, capacity: f64 },

    #[error(
        "virtual cost for seller {seller} is not regular: H({c_lo}, {q_lo}) = {h_lo} vs H({c_hi}, {q_hi}) = {h_hi}"
    )]
    NotRegular {
        seller: usize,
        c_lo: f64,
        q_lo: f64,
        h_lo: f64,
        c_hi: f64,
        q_hi: f64,
        h_hi: f64,
    },

    #[error("demands cannot be covered: {0}")]
    Infeasible(String),

    #[error("simplex iteration cap {cap} exceeded; the instance is numerically degenerate")]
    IterationCap { cap: usize },

    #[error(
        "allocation curve for seller {seller} rises from {level_lo} to {level_hi} between costs {cost_lo} and {cost_hi}"
    )]
    CurveNotMonotone {
        seller: usize,
        cost_lo: f64,
        cost_hi: f64,
        level_lo: f64,
        level_hi: f64,
    },

    #[error(
        "allocation {allocation} for seller {seller} does not match the curve level {level} at cost {cost}"
    )]
    CurveMismatch {
        seller: usize,
        cost: f64,
        allocation: f64,
        level: f64,
    },

    #[error("step function is malformed: {0}")]
    BadStepFunction(String),

    #[error("mechanism requires a single-item scenario in which every bundle is that item")]
    SingleItemRequired,

    #[error(
        "payment integral for bidder {bidder} is path dependent: axis orders give {first} vs {second}"
    )]
    PathDependent { bidder: usize, first: f64, second: f64 },

    #[error(
        "integral payment {integral} for bidder {bidder} disagrees with the critical-value payment {critical}"
    )]
    PaymentCrossCheck {
        bidder: usize,
        integral: f64,
        critical: f64,
    },

    #[error(
        "winning region for bidder {bidder} is not downward closed in {axis}: point {inner:?} loses while {outer:?} wins"
    )]
    RegionNotMonotone {
        bidder: usize,
        axis: &'static str,
        inner: (f64, f64),
        outer: (f64, f64),
    },
}
