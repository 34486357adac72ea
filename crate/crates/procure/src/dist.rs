//! Joint cost/capacity distributions, conditional densities, virtual costs,
//! and regularity checks.
//!
//! The quantity the buyer actually minimizes is not the reported cost `c` but
//! the *virtual cost*
//!
//! ```text
//! H(c, q) = c + F(c | q) / f(c | q)
//! ```
//!
//! where `F(c|q)` and `f(c|q)` are the conditional CDF and density of cost
//! given capacity. `H` is the reported cost inflated by the seller's
//! information rent. The auction is well behaved only when `H` is *regular*:
//! non-decreasing in `c` and non-increasing in `q`. The paper-level theory
//! assumes regularity; this module can only falsify it numerically, which is
//! what [`DistributionSpec::is_regular`] does on a lattice.
//!
//! Three families are built in:
//!
//! * `IndependentUniform` — cost uniform on its range, independent of the
//!   uniform capacity. `H(c, q) = 2c - c_lo`, always regular.
//! * `CapacityLinkedUniform` — capacity uniform; conditional on capacity `q`
//!   the cost is uniform on `[c_lo, c_hi - slope * (q - q_lo)]`, so larger
//!   sellers have tighter cost support. Exercises genuinely conditional
//!   machinery.
//! * `TabulatedGrid` — histogram masses on a rectangular grid, uniform within
//!   each cell (piecewise-linear conditional CDF). Arbitrary shapes,
//!   including irregular ones, for adversarial tests.

use rand::Rng;

use crate::model::Interval;
use crate::{Error, Result};

/// Tolerance for the lattice monotonicity test in [`DistributionSpec::is_regular`].
pub const REGULARITY_TOL: f64 = 1e-12;

const SUPPORT_EPS: f64 = 1e-9;

/// A validated joint distribution of (cost, capacity) for one seller.
///
/// Construct through the family constructors; invalid parameters (masses not
/// summing to one, empty supports, ...) are rejected there, so every value of
/// this type is evaluable.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionSpec {
    kind: Kind,
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    IndependentUniform {
        cost: Interval,
        capacity: Interval,
    },
    CapacityLinkedUniform {
        cost: Interval,
        capacity: Interval,
        slope: f64,
    },
    TabulatedGrid {
        cost_edges: Vec<f64>,
        capacity_edges: Vec<f64>,
        /// masses[l][k]: probability of capacity cell l and cost cell k.
        masses: Vec<Vec<f64>>,
    },
}

/// Family tag and parameters, as stored in scenario files.
#[derive(Debug, Clone, PartialEq)]
pub enum Family {
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

/// Outcome of the lattice regularity check.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityReport {
    pub regular: bool,
    pub violation: Option<RegularityViolation>,
}

/// First violating lattice pair: two points on the same row or column with
/// their virtual costs.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityViolation {
    /// (cost, capacity, H) at the lower coordinate.
    pub first: (f64, f64, f64),
    /// (cost, capacity, H) at the higher coordinate.
    pub second: (f64, f64, f64),
    pub axis: MonotoneAxis,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MonotoneAxis {
    /// H decreased while cost increased.
    Cost,
    /// H increased while capacity increased.
    Capacity,
}

fn check_interval(which: &str, iv: Interval) -> Result<()> {
    if !iv.is_well_formed() || iv.width() <= 0.0 {
        return Err(Error::BadDistribution(format!(
            "{which} range [{}, {}] must be finite with positive width",
            iv.lo(),
            iv.hi()
        )));
    }
    Ok(())
}

fn check_edges(which: &str, edges: &[f64]) -> Result<()> {
    if edges.len() < 2 {
        return Err(Error::BadDistribution(format!(
            "{which} edges need at least two entries"
        )));
    }
    if edges.iter().any(|e| !e.is_finite()) {
        return Err(Error::BadDistribution(format!(
            "{which} edges must be finite"
        )));
    }
    if edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::BadDistribution(format!(
            "{which} edges must be strictly increasing"
        )));
    }
    Ok(())
}

/// Index of the half-open cell [e_k, e_{k+1}) containing x; the last cell is
/// closed on the right. Assumes x is inside the outer range.
fn cell_of(edges: &[f64], x: f64) -> usize {
    let n_cells = edges.len() - 1;
    let mut k = edges[1..edges.len() - 1].partition_point(|e| *e <= x);
    if k >= n_cells {
        k = n_cells - 1;
    }
    k
}

impl DistributionSpec {
    /// Cost uniform on `cost`, capacity uniform on `capacity`, independent.
    pub fn independent_uniform(cost: Interval, capacity: Interval) -> Result<Self> {
        check_interval("cost", cost)?;
        check_interval("capacity", capacity)?;
        Ok(DistributionSpec {
            kind: Kind::IndependentUniform { cost, capacity },
        })
    }

    /// Capacity uniform on `capacity`; conditional cost uniform on
    /// `[cost.lo, cost.hi - slope * (q - capacity.lo)]`.
    pub fn capacity_linked_uniform(
        cost: Interval,
        capacity: Interval,
        slope: f64,
    ) -> Result<Self> {
        check_interval("cost", cost)?;
        check_interval("capacity", capacity)?;
        if !(slope >= 0.0) || !slope.is_finite() {
            return Err(Error::BadDistribution(format!(
                "slope {slope} must be a finite non-negative number"
            )));
        }
        let narrowest = cost.hi() - slope * capacity.width();
        if narrowest <= cost.lo() {
            return Err(Error::BadDistribution(format!(
                "slope {slope} empties the conditional cost support at capacity {}",
                capacity.hi()
            )));
        }
        Ok(DistributionSpec {
            kind: Kind::CapacityLinkedUniform {
                cost,
                capacity,
                slope,
            },
        })
    }

    /// Histogram masses on a rectangular grid. `masses[l][k]` is the
    /// probability of capacity cell `l` and cost cell `k`; masses must be
    /// strictly positive and sum to one.
    pub fn tabulated_grid(
        cost_edges: Vec<f64>,
        capacity_edges: Vec<f64>,
        masses: Vec<Vec<f64>>,
    ) -> Result<Self> {
        check_edges("cost", &cost_edges)?;
        check_edges("capacity", &capacity_edges)?;
        let n_cost = cost_edges.len() - 1;
        let n_cap = capacity_edges.len() - 1;
        if masses.len() != n_cap || masses.iter().any(|row| row.len() != n_cost) {
            return Err(Error::BadDistribution(format!(
                "masses must be a {n_cap} x {n_cost} matrix (capacity rows, cost columns)"
            )));
        }
        let mut total = 0.0;
        for row in &masses {
            for &m in row {
                if !(m > 0.0) || !m.is_finite() {
                    return Err(Error::BadDistribution(format!(
                        "cell mass {m} must be strictly positive"
                    )));
                }
                total += m;
            }
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadDistribution(format!(
                "masses sum to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(DistributionSpec {
            kind: Kind::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            },
        })
    }

    pub fn family(&self) -> Family {
        match &self.kind {
            Kind::IndependentUniform { .. } => Family::IndependentUniform,
            Kind::CapacityLinkedUniform { slope, .. } => {
                Family::CapacityLinkedUniform { slope: *slope }
            }
            Kind::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            } => Family::TabulatedGrid {
                cost_edges: cost_edges.clone(),
                capacity_edges: capacity_edges.clone(),
                masses: masses.clone(),
            },
        }
    }

    /// Outer cost support (the conditional support may be narrower).
    pub fn cost_support(&self) -> Interval {
        match &self.kind {
            Kind::IndependentUniform { cost, .. } => *cost,
            Kind::CapacityLinkedUniform { cost, .. } => *cost,
            Kind::TabulatedGrid { cost_edges, .. } => {
                Interval::new(cost_edges[0], *cost_edges.last().unwrap())
            }
        }
    }

    pub fn capacity_support(&self) -> Interval {
        match &self.kind {
            Kind::IndependentUniform { capacity, .. } => *capacity,
            Kind::CapacityLinkedUniform { capacity, .. } => *capacity,
            Kind::TabulatedGrid { capacity_edges, .. } => {
                Interval::new(capacity_edges[0], *capacity_edges.last().unwrap())
            }
        }
    }

    /// Upper end of the conditional cost support at capacity `q`. Reports
    /// above this cost have zero density, an infinite virtual cost, and can
    /// never win.
    pub fn top_cost(&self, q: f64) -> f64 {
        match &self.kind {
            Kind::IndependentUniform { cost, .. } => cost.hi(),
            Kind::CapacityLinkedUniform {
                cost,
                capacity,
                slope,
            } => cost.hi() - slope * (q - capacity.lo()),
            Kind::TabulatedGrid { cost_edges, .. } => *cost_edges.last().unwrap(),
        }
    }

    fn eps_for(&self) -> f64 {
        let c = self.cost_support();
        let q = self.capacity_support();
        let scale = c.hi().abs().max(q.hi().abs()).max(1.0);
        SUPPORT_EPS * scale
    }

    /// Whether (c, q) lies in the joint support, with a small boundary
    /// tolerance so lattice endpoints are never rejected for rounding.
    pub fn in_support(&self, c: f64, q: f64) -> bool {
        let eps = self.eps_for();
        let qs = self.capacity_support();
        if q < qs.lo() - eps || q > qs.hi() + eps {
            return false;
        }
        let cs = self.cost_support();
        c >= cs.lo() - eps && c <= self.top_cost(q.clamp(qs.lo(), qs.hi())) + eps
    }

    fn clamp_into_support(&self, c: f64, q: f64) -> Result<(f64, f64)> {
        if !self.in_support(c, q) {
            return Err(Error::OutOfSupport {
                cost: c,
                capacity: q,
            });
        }
        let qs = self.capacity_support();
        let q = q.clamp(qs.lo(), qs.hi());
        let c = c.clamp(self.cost_support().lo(), self.top_cost(q));
        Ok((c, q))
    }

    /// Conditional CDF `F(c | q)`. Non-decreasing in `c`, 0 at the bottom of
    /// the conditional support and 1 at its top.
    pub fn conditional_cdf(&self, c: f64, q: f64) -> Result<f64> {
        let (c, q) = self.clamp_into_support(c, q)?;
        Ok(match &self.kind {
            Kind::IndependentUniform { cost, .. } => (c - cost.lo()) / cost.width(),
            Kind::CapacityLinkedUniform { cost, .. } => {
                (c - cost.lo()) / (self.top_cost(q) - cost.lo())
            }
            Kind::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            } => {
                let row = &masses[cell_of(capacity_edges, q)];
                let row_mass: f64 = row.iter().sum();
                let k = cell_of(cost_edges, c);
                let below: f64 = row[..k].iter().sum();
                let width = cost_edges[k + 1] - cost_edges[k];
                let inside = row[k] * (c - cost_edges[k]) / width;
                (below + inside) / row_mass
            }
        })
    }

    /// Conditional density `f(c | q)`.
    pub fn conditional_pdf(&self, c: f64, q: f64) -> Result<f64> {
        let (c, q) = self.clamp_into_support(c, q)?;
        Ok(match &self.kind {
            Kind::IndependentUniform { cost, .. } => 1.0 / cost.width(),
            Kind::CapacityLinkedUniform { cost, .. } => 1.0 / (self.top_cost(q) - cost.lo()),
            Kind::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            } => {
                let row = &masses[cell_of(capacity_edges, q)];
                let row_mass: f64 = row.iter().sum();
                let k = cell_of(cost_edges, c);
                let width = cost_edges[k + 1] - cost_edges[k];
                row[k] / row_mass / width
            }
        })
    }

    /// Joint density `f(c, q)`.
    pub fn joint_density(&self, c: f64, q: f64) -> Result<f64> {
        let (c, q) = self.clamp_into_support(c, q)?;
        Ok(match &self.kind {
            Kind::IndependentUniform { cost, capacity } => {
                1.0 / (cost.width() * capacity.width())
            }
            Kind::CapacityLinkedUniform { cost, capacity, .. } => {
                1.0 / capacity.width() / (self.top_cost(q) - cost.lo())
            }
            Kind::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            } => {
                let l = cell_of(capacity_edges, q);
                let k = cell_of(cost_edges, c);
                let area = (cost_edges[k + 1] - cost_edges[k])
                    * (capacity_edges[l + 1] - capacity_edges[l]);
                masses[l][k] / area
            }
        })
    }

    /// Virtual cost `H(c, q) = c + F(c|q) / f(c|q)`.
    ///
    /// For the uniform families the rent term simplifies to `c - c_lo`
    /// exactly, so `H = 2c - c_lo` independent of capacity.
    pub fn virtual_cost(&self, c: f64, q: f64) -> Result<f64> {
        let (c, q) = self.clamp_into_support(c, q)?;
        match &self.kind {
            Kind::IndependentUniform { cost, .. }
            | Kind::CapacityLinkedUniform { cost, .. } => Ok(c + (c - cost.lo())),
            Kind::TabulatedGrid { .. } => {
                let f = self.conditional_pdf(c, q)?;
                if f <= f64::MIN_POSITIVE {
                    return Err(Error::ZeroDensity {
                        cost: c,
                        capacity: q,
                    });
                }
                Ok(c + self.conditional_cdf(c, q)? / f)
            }
        }
    }

    /// Samples a (cost, capacity) type. Deterministic given the RNG state.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        match &self.kind {
            Kind::IndependentUniform { cost, capacity } => {
                let c = cost.lo() + cost.width() * rng.gen::<f64>();
                let q = capacity.lo() + capacity.width() * rng.gen::<f64>();
                (c, q)
            }
            Kind::CapacityLinkedUniform { cost, capacity, .. } => {
                let q = capacity.lo() + capacity.width() * rng.gen::<f64>();
                let top = self.top_cost(q);
                let c = cost.lo() + (top - cost.lo()) * rng.gen::<f64>();
                (c, q)
            }
            Kind::TabulatedGrid {
                cost_edges,
                capacity_edges,
                masses,
            } => {
                let u = rng.gen::<f64>();
                let mut acc = 0.0;
                let (mut li, mut ki) = (masses.len() - 1, masses[0].len() - 1);
                'outer: for (l, row) in masses.iter().enumerate() {
                    for (k, &m) in row.iter().enumerate() {
                        acc += m;
                        if u < acc {
                            li = l;
                            ki = k;
                            break 'outer;
                        }
                    }
                }
                let c = cost_edges[ki]
                    + (cost_edges[ki + 1] - cost_edges[ki]) * rng.gen::<f64>();
                let q = capacity_edges[li]
                    + (capacity_edges[li + 1] - capacity_edges[li]) * rng.gen::<f64>();
                (c, q)
            }
        }
    }

    /// Samples `H` on a `resolution x resolution` lattice over the support
    /// and checks that it is non-decreasing in cost along every capacity row
    /// and non-increasing in capacity along every cost column, within
    /// [`REGULARITY_TOL`]. Cost-direction violations are scanned first, in
    /// row-major order.
    pub fn is_regular(&self, resolution: usize) -> RegularityReport {
        assert!(resolution >= 2, "regularity lattice needs at least 2 points");
        let costs = self.cost_support().lattice(resolution);
        let caps = self.capacity_support().lattice(resolution);

        // h[l][k] = H at (costs[k], caps[l]), None where outside the
        // conditional support (capacity-linked family).
        let h: Vec<Vec<Option<f64>>> = caps
            .iter()
            .map(|&q| {
                costs
                    .iter()
                    .map(|&c| self.virtual_cost(c, q).ok())
                    .collect()
            })
            .collect();

        for (l, &q) in caps.iter().enumerate() {
            for k in 0..resolution - 1 {
                if let (Some(a), Some(b)) = (h[l][k], h[l][k + 1]) {
                    if b < a - REGULARITY_TOL {
                        return RegularityReport {
                            regular: false,
                            violation: Some(RegularityViolation {
                                first: (costs[k], q, a),
                                second: (costs[k + 1], q, b),
                                axis: MonotoneAxis::Cost,
                            }),
                        };
                    }
                }
            }
        }
        for (k, &c) in costs.iter().enumerate() {
            for l in 0..resolution - 1 {
                if let (Some(a), Some(b)) = (h[l][k], h[l + 1][k]) {
                    if b > a + REGULARITY_TOL {
                        return RegularityReport {
                            regular: false,
                            violation: Some(RegularityViolation {
                                first: (c, caps[l], a),
                                second: (c, caps[l + 1], b),
                                axis: MonotoneAxis::Capacity,
                            }),
                        };
                    }
                }
            }
        }
        RegularityReport {
            regular: true,
            violation: None,
        }
    }

    /// Checks that the declared seller ranges agree with this distribution's
    /// support. Used by scenario validation.
    pub fn matches_ranges(
        &self,
        cost_range: Interval,
        capacity_range: Interval,
    ) -> std::result::Result<(), String> {
        let eps = self.eps_for();
        let cs = self.cost_support();
        let qs = self.capacity_support();
        if (cs.lo() - cost_range.lo()).abs() > eps || (cs.hi() - cost_range.hi()).abs() > eps {
            return Err(format!(
                "cost support [{}, {}] differs from declared range [{}, {}]",
                cs.lo(),
                cs.hi(),
                cost_range.lo(),
                cost_range.hi()
            ));
        }
        if (qs.lo() - capacity_range.lo()).abs() > eps
            || (qs.hi() - capacity_range.hi()).abs() > eps
        {
            return Err(format!(
                "capacity support [{}, {}] differs from declared range [{}, {}]",
                qs.lo(),
                qs.hi(),
                capacity_range.lo(),
                capacity_range.hi()
            ));
        }
        Ok(())
    }
}
