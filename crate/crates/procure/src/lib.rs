//! Optimal multi-unit combinatorial procurement auctions.
//!
//! A buyer wants several units of several items. Each seller offers one fixed
//! bundle of items at a private unit cost, up to a private capacity. This
//! crate implements the cost-minimizing auction for that setting: winners are
//! chosen by a covering linear program over *virtual costs* (reported cost
//! plus the information rent `F(c|q)/f(c|q)`), and each winner is paid their
//! reported cost plus the integral of their allocation curve — the classic
//! threshold payment, which makes truthful bidding a dominant strategy when
//! the virtual costs are regular.
//!
//! The crate also ships:
//!
//! * [`auction::kth_price_auction`] — the uniform-price baseline that the
//!   optimal auction improves on (it is manipulable through capacity
//!   under-reporting),
//! * [`auction::myerson_single_item`] — the single-item forward auction used
//!   as a reference point,
//! * [`xor`] — OCAX, the unit-demand variant for bidders who offer either of
//!   two disjoint bundles but never both,
//! * [`verify`] — an empirical harness that certifies the
//!   incentive-compatibility and individual-rationality conditions on a grid
//!   and by Monte Carlo sampling.
//!
//! ```
//! use procure::dist::DistributionSpec;
//! use procure::model::Interval;
//!
//! // A seller drawing cost uniformly from [0, 10], independent of capacity.
//! let spec = DistributionSpec::independent_uniform(
//!     Interval::new(0.0, 10.0),
//!     Interval::new(50.0, 100.0),
//! ).unwrap();
//!
//! // Uniform virtual cost has the closed form 2c - lo.
//! let h = spec.virtual_cost(4.0, 60.0).unwrap();
//! assert!((h - 8.0).abs() < 1e-12);
//! ```

pub mod auction;
pub mod dist;
mod error;
pub mod lp;
pub mod model;
pub mod verify;
pub mod xor;

mod book;

pub use error::{Error, Result};
