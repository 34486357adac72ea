//! Domain types for procurement scenarios: items, sellers, bids, allocations,
//! and outcomes, plus structural validation.
//!
//! A [`Scenario`] is the static description of a market — what the buyer
//! demands and who can supply it. Bids arrive separately as [`SellerBid`]
//! values. All types here are immutable after construction and safe to share
//! across threads.
//!
//! Scenario files are UTF-8 JSON with top-level keys `items` and `sellers`:
//!
//! ```json
//! {
//!   "items": [{ "id": "A", "demand": 100.0 }],
//!   "sellers": [{
//!     "id": 1,
//!     "bundle": ["A"],
//!     "cost_range": [0.0, 200.0],
//!     "capacity_range": [0.0, 120.0],
//!     "distribution": { "family": "independent_uniform" }
//!   }]
//! }
//! ```

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;

use crate::dist::DistributionSpec;

/// A closed interval `[lo, hi]`, serialized as a two-element array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_well_formed(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo <= self.hi
    }

    /// `n` evenly spaced points from `lo` to `hi` inclusive (`n >= 2`).
    pub fn lattice(&self, n: usize) -> Vec<f64> {
        assert!(n >= 2, "lattice needs at least two points");
        (0..n)
            .map(|k| self.lo + self.width() * k as f64 / (n - 1) as f64)
            .collect()
    }
}

/// One item the buyer wants, with its demanded quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Item {
    pub id: String,
    pub demand: f64,
}

/// A single-minded seller: one bundle, a capacity range, a cost range, and
/// the joint distribution their private type is drawn from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SellerSpecRaw", into = "SellerSpecRaw")]
pub struct SellerSpec {
    pub id: usize,
    pub bundle: Vec<String>,
    pub cost_range: Interval,
    pub capacity_range: Interval,
    pub distribution: DistributionSpec,
}

impl SellerSpec {
    pub fn supplies(&self, item_id: &str) -> bool {
        self.bundle.iter().any(|b| b == item_id)
    }
}

/// Serialized form of [`SellerSpec`]: the distribution is stored as a family
/// tag plus only the parameters the ranges do not already determine.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct SellerSpecRaw {
    id: usize,
    bundle: Vec<String>,
    cost_range: Interval,
    capacity_range: Interval,
    distribution: DistributionParams,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum DistributionParams {
    IndependentUniform,
    CapacityLinkedUniform {
        slope: f64,
    },
    TabulatedGrid {
        cost_edges: Vec<f64>,
        capacity_edges: Vec<f64>,
        masses: Vec<Vec<f64>>,
    },
}

impl TryFrom<SellerSpecRaw> for SellerSpec {
    type Error = crate::Error;

    fn try_from(raw: SellerSpecRaw) -> crate::Result<Self> {
        let distribution = match raw.distribution {
            DistributionParams::IndependentUniform => {
                DistributionSpec::independent_uniform(raw.cost_range, raw.capacity_range)?
            }
            DistributionParams::CapacityLinkedUniform { slope } => {
                DistributionSpec::capacity_linked_uniform(
                    raw.cost_range,
                    raw.capacity_range,
                    slope,
                )?
            }
            DistributionParams::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            } => DistributionSpec::tabulated_grid(cost_edges, capacity_edges, masses)?,
        };
        Ok(SellerSpec {
            id: raw.id,
            bundle: raw.bundle,
            cost_range: raw.cost_range,
            capacity_range: raw.capacity_range,
            distribution,
        })
    }
}

impl From<SellerSpec> for SellerSpecRaw {
    fn from(spec: SellerSpec) -> Self {
        let distribution = spec.distribution.to_params();
        SellerSpecRaw {
            id: spec.id,
            bundle: spec.bundle,
            cost_range: spec.cost_range,
            capacity_range: spec.capacity_range,
            distribution,
        }
    }
}

impl DistributionSpec {
    fn to_params(&self) -> DistributionParams {
        use crate::dist::Family;
        match self.family() {
            Family::IndependentUniform => DistributionParams::IndependentUniform,
            Family::CapacityLinkedUniform { slope } => {
                DistributionParams::CapacityLinkedUniform { slope }
            }
            Family::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            } => DistributionParams::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            },
        }
    }
}

/// A reported bid: unit cost of the bundle and maximum supplied quantity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SellerBid {
    #[serde(rename = "seller")]
    pub seller_id: usize,
    pub cost: f64,
    pub capacity: f64,
}

impl SellerBid {
    pub fn new(seller_id: usize, cost: f64, capacity: f64) -> Self {
        SellerBid {
            seller_id,
            cost,
            capacity,
        }
    }
}

/// The full market description: demanded items and the seller roster.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub items: Vec<Item>,
    pub sellers: Vec<SellerSpec>,
}

impl Scenario {
    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    pub fn n_sellers(&self) -> usize {
        self.sellers.len()
    }

    pub fn demands(&self) -> Vec<f64> {
        self.items.iter().map(|it| it.demand).collect()
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|it| it.id == id)
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Reorders `bids` to seller-roster order.
    ///
    /// Every seller must have exactly one bid; the bid must lie inside the
    /// seller's declared ranges and inside the conditional cost support at
    /// the reported capacity.
    pub fn align_bids(&self, bids: &[SellerBid]) -> crate::Result<Vec<SellerBid>> {
        let mut aligned = Vec::with_capacity(self.sellers.len());
        for spec in &self.sellers {
            let mut found = None;
            for bid in bids {
                if bid.seller_id == spec.id {
                    if found.is_some() {
                        return Err(crate::Error::InvalidBid {
                            seller: spec.id,
                            reason: "duplicate bid".into(),
                        });
                    }
                    found = Some(*bid);
                }
            }
            let bid = found.ok_or_else(|| crate::Error::InvalidBid {
                seller: spec.id,
                reason: "missing bid".into(),
            })?;
            if !spec.capacity_range.contains(bid.capacity) {
                return Err(crate::Error::InvalidBid {
                    seller: spec.id,
                    reason: format!(
                        "capacity {} outside [{}, {}]",
                        bid.capacity,
                        spec.capacity_range.lo(),
                        spec.capacity_range.hi()
                    ),
                });
            }
            let top = spec.distribution.top_cost(bid.capacity);
            if bid.cost < spec.cost_range.lo() || bid.cost > top {
                return Err(crate::Error::InvalidBid {
                    seller: spec.id,
                    reason: format!(
                        "cost {} outside [{}, {}] at capacity {}",
                        bid.cost,
                        spec.cost_range.lo(),
                        top,
                        bid.capacity
                    ),
                });
            }
            aligned.push(bid);
        }
        Ok(aligned)
    }
}

/// Supplied quantity per seller, in roster order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub quantities: Vec<f64>,
}

impl Allocation {
    pub fn zero(n: usize) -> Self {
        Allocation {
            quantities: vec![0.0; n],
        }
    }
}

/// An allocation together with the payment to each seller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub allocation: Allocation,
    pub payments: Vec<f64>,
}

/// 0/1 bundle-membership matrix: rows are items, columns are sellers.
///
/// Row `j` generates the demand constraint `sum_i M[j][i] * x_i >= D_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoverageMatrix {
    rows: Vec<Vec<u8>>,
}

impl CoverageMatrix {
    pub fn rows(&self) -> &[Vec<u8>] {
        &self.rows
    }

    pub fn row(&self, item: usize) -> &[u8] {
        &self.rows[item]
    }

    pub fn covers(&self, item: usize, seller: usize) -> bool {
        self.rows[item][seller] == 1
    }
}

/// Builds the bundle-membership matrix from the scenario roster.
///
/// Pure in the scenario content: a round-tripped scenario yields an
/// identical matrix.
pub fn coverage_matrix(scenario: &Scenario) -> CoverageMatrix {
    let rows = scenario
        .items
        .iter()
        .map(|item| {
            scenario
                .sellers
                .iter()
                .map(|s| u8::from(s.supplies(&item.id)))
                .collect()
        })
        .collect();
    CoverageMatrix { rows }
}

/// A structural problem found by [`validate_scenario`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateItemId { id: String },
    BadDemand { id: String, demand: f64 },
    NonDenseSellerIds { position: usize, found: usize },
    EmptyBundle { seller: usize },
    UnknownItem { seller: usize, item: String },
    BadCostRange { seller: usize },
    BadCapacityRange { seller: usize },
    InfeasibleDemand { item: String, demand: f64, capacity: f64 },
    DistributionMismatch { seller: usize, detail: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateItemId { id } => write!(f, "item id {id:?} appears twice"),
            Violation::BadDemand { id, demand } => {
                write!(f, "item {id:?} has invalid demand {demand}")
            }
            Violation::NonDenseSellerIds { position, found } => write!(
                f,
                "seller at position {position} has id {found}; ids must be 1..n in order"
            ),
            Violation::EmptyBundle { seller } => write!(f, "seller {seller} has an empty bundle"),
            Violation::UnknownItem { seller, item } => {
                write!(f, "seller {seller} bundles unknown item {item:?}")
            }
            Violation::BadCostRange { seller } => {
                write!(f, "seller {seller} has an inverted or non-finite cost range")
            }
            Violation::BadCapacityRange { seller } => write!(
                f,
                "seller {seller} has an inverted or non-finite capacity range"
            ),
            Violation::InfeasibleDemand {
                item,
                demand,
                capacity,
            } => write!(
                f,
                "demand {demand} for item {item:?} exceeds the collective capacity {capacity}"
            ),
            Violation::DistributionMismatch { seller, detail } => {
                write!(f, "seller {seller} distribution mismatch: {detail}")
            }
        }
    }
}

/// Result of structural validation: either a pass or the full violation list.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            write!(f, "pass")
        } else {
            for (i, v) in self.violations.iter().enumerate() {
                if i > 0 {
                    writeln!(f)?;
                }
                write!(f, "{v}")?;
            }
            Ok(())
        }
    }
}

/// Checks every structural invariant of a scenario and reports all
/// violations. Nothing is thrown: an empty report means the scenario is fit
/// to run.
pub fn validate_scenario(scenario: &Scenario) -> ValidationReport {
    let mut violations = Vec::new();

    let mut seen = HashSet::new();
    for item in &scenario.items {
        if !seen.insert(item.id.as_str()) {
            violations.push(Violation::DuplicateItemId {
                id: item.id.clone(),
            });
        }
        if !(item.demand >= 0.0) || !item.demand.is_finite() {
            violations.push(Violation::BadDemand {
                id: item.id.clone(),
                demand: item.demand,
            });
        }
    }

    for (pos, spec) in scenario.sellers.iter().enumerate() {
        if spec.id != pos + 1 {
            violations.push(Violation::NonDenseSellerIds {
                position: pos,
                found: spec.id,
            });
        }
        if spec.bundle.is_empty() {
            violations.push(Violation::EmptyBundle { seller: spec.id });
        }
        for item in &spec.bundle {
            if scenario.item_index(item).is_none() {
                violations.push(Violation::UnknownItem {
                    seller: spec.id,
                    item: item.clone(),
                });
            }
        }
        if !spec.cost_range.is_well_formed() {
            violations.push(Violation::BadCostRange { seller: spec.id });
        }
        if !spec.capacity_range.is_well_formed() {
            violations.push(Violation::BadCapacityRange { seller: spec.id });
        }
        if let Err(detail) = spec.distribution.matches_ranges(
            spec.cost_range,
            spec.capacity_range,
        ) {
            violations.push(Violation::DistributionMismatch {
                seller: spec.id,
                detail,
            });
        }
    }

    // Collective feasibility: every demand must be coverable at full capacity.
    for item in &scenario.items {
        let capacity: f64 = scenario
            .sellers
            .iter()
            .filter(|s| s.supplies(&item.id))
            .map(|s| s.capacity_range.hi())
            .sum();
        if capacity + 1e-12 < item.demand {
            violations.push(Violation::InfeasibleDemand {
                item: item.id.clone(),
                demand: item.demand,
                capacity,
            });
        }
    }

    ValidationReport { violations }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn uniform_seller(id: usize, bundle: &[&str], q_hi: f64) -> SellerSpec {
        let cost_range = Interval::new(0.0, 200.0);
        let capacity_range = Interval::new(0.0, q_hi);
        SellerSpec {
            id,
            bundle: bundle.iter().map(|s| s.to_string()).collect(),
            cost_range,
            capacity_range,
            distribution: DistributionSpec::independent_uniform(cost_range, capacity_range)
                .unwrap(),
        }
    }

    pub(crate) fn example3_scenario() -> Scenario {
        Scenario {
            items: vec![
                Item { id: "A".into(), demand: 100.0 },
                Item { id: "B".into(), demand: 250.0 },
                Item { id: "C".into(), demand: 100.0 },
                Item { id: "D".into(), demand: 100.0 },
            ],
            sellers: vec![
                uniform_seller(1, &["A", "B"], 100.0),
                uniform_seller(2, &["B"], 100.0),
                uniform_seller(3, &["B", "C", "D"], 150.0),
                uniform_seller(4, &["A", "B", "C", "D"], 120.0),
            ],
        }
    }

    #[test]
    fn example3_scenario_validates() {
        let report = validate_scenario(&example3_scenario());
        assert!(report.is_ok(), "unexpected violations: {report}");
    }

    #[test]
    fn infeasible_demand_is_reported() {
        let scenario = Scenario {
            items: vec![Item { id: "A".into(), demand: 100.0 }],
            sellers: vec![uniform_seller(1, &["A"], 50.0)],
        };
        let report = validate_scenario(&scenario);
        assert_eq!(
            report.violations,
            vec![Violation::InfeasibleDemand {
                item: "A".into(),
                demand: 100.0,
                capacity: 50.0,
            }]
        );
    }

    #[test]
    fn empty_scenario_passes_vacuously() {
        let scenario = Scenario {
            items: vec![],
            sellers: vec![],
        };
        assert!(validate_scenario(&scenario).is_ok());
    }

    #[test]
    fn unknown_item_and_empty_bundle_reported() {
        let scenario = Scenario {
            items: vec![Item { id: "A".into(), demand: 0.0 }],
            sellers: vec![
                uniform_seller(1, &["A", "Z"], 10.0),
                uniform_seller(2, &[], 10.0),
            ],
        };
        let report = validate_scenario(&scenario);
        assert!(report
            .violations
            .contains(&Violation::UnknownItem { seller: 1, item: "Z".into() }));
        assert!(report
            .violations
            .contains(&Violation::EmptyBundle { seller: 2 }));
    }

    #[test]
    fn example3_coverage_rows() {
        let m = coverage_matrix(&example3_scenario());
        // Row order follows the item list A, B, C, D.
        assert_eq!(m.row(0), &[1, 0, 0, 1]); // A: sellers 1 and 4
        assert_eq!(m.row(1), &[1, 1, 1, 1]); // B: everyone
        assert_eq!(m.row(2), &[0, 0, 1, 1]); // C: sellers 3 and 4
        assert_eq!(m.row(3), &[0, 0, 1, 1]); // D: sellers 3 and 4
    }

    #[test]
    fn full_bundle_seller_gives_all_ones_column() {
        let scenario = Scenario {
            items: vec![
                Item { id: "A".into(), demand: 1.0 },
                Item { id: "B".into(), demand: 1.0 },
            ],
            sellers: vec![uniform_seller(1, &["A", "B"], 5.0)],
        };
        let m = coverage_matrix(&scenario);
        assert!(m.rows().iter().all(|row| row[0] == 1));
    }

    #[test]
    fn scenario_round_trips_through_json() {
        let scenario = example3_scenario();
        let text = scenario.to_json();
        let back = Scenario::from_json(&text).unwrap();
        assert_eq!(scenario, back);
        assert_eq!(coverage_matrix(&scenario), coverage_matrix(&back));
    }

    #[test]
    fn align_bids_sorts_and_checks_ranges() {
        let scenario = example3_scenario();
        let bids = vec![
            SellerBid::new(3, 70.0, 150.0),
            SellerBid::new(1, 100.0, 100.0),
            SellerBid::new(4, 110.0, 120.0),
            SellerBid::new(2, 50.0, 100.0),
        ];
        let aligned = scenario.align_bids(&bids).unwrap();
        assert_eq!(
            aligned.iter().map(|b| b.seller_id).collect::<Vec<_>>(),
            vec![1, 2, 3, 4]
        );

        let missing = scenario.align_bids(&bids[..3]);
        assert!(matches!(missing, Err(crate::Error::InvalidBid { seller: 2, .. })));

        let mut bad = bids.clone();
        bad[0].cost = 500.0;
        assert!(matches!(
            scenario.align_bids(&bad),
            Err(crate::Error::InvalidBid { seller: 3, .. })
        ));
    }
}
