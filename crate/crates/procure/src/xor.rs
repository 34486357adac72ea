//! OCAX: the optimal unit-demand combinatorial auction for XOR-minded
//! bidders.
//!
//! An XOR bidder offers either of two disjoint bundles, never both, each at
//! its own private cost drawn independently from a known distribution over
//! the bidder's cost range. The buyer wants one unit of every item, with free
//! disposal. Winner determination picks a selection of bundles (at most one
//! per bidder) covering all items with the least total virtual cost, solved
//! exactly by depth-first branch and bound ([`solve_ocax`]).
//!
//! Payments come from the utility potential: with `U = 0` at the top corner
//! of a bidder's cost square and `dU/dc_j = -X_j` (utility falls as own cost
//! rises), the payment is
//!
//! ```text
//! T = c_1 X_1 + c_2 X_2 + U(c_1, c_2)
//! ```
//!
//! with `U` recovered as a line integral of the winning indicators along an
//! axis-parallel path to the top corner ([`ocax_payment`]). The integral is
//! only meaningful if it does not depend on the path; both axis orders are
//! computed and compared, and disagreement is reported as an error rather
//! than hidden. For a winner the payment also equals the critical cost at
//! which they would stop winning with their other bundle priced out, and
//! that identity is asserted as a cross-check.
//!
//! Fixing everyone else, a bidder's cost square splits into three regions:
//! win bundle 1 (low `c_1`), win bundle 2 (low `c_2`), win nothing (around
//! the top corner). [`region_partition`] labels a lattice with that picture
//! and verifies the monotone structure.

use serde::{Deserialize, Serialize};

use crate::model::Interval;
use crate::{Error, Result};

/// Tolerance for the 1-D lattice regularity test.
pub const REGULARITY_TOL: f64 = 1e-12;

/// Agreement tolerance between the two axis orders of the payment integral,
/// and between the integral and critical-value payments.
pub const PATH_TOL: f64 = 1e-6;

/// A 1-D cost distribution for one bundle of an XOR bidder.
#[derive(Debug, Clone, PartialEq)]
pub struct CostDistribution {
    kind: CostKind,
}

#[derive(Debug, Clone, PartialEq)]
enum CostKind {
    Uniform { range: Interval },
    Tabulated { edges: Vec<f64>, masses: Vec<f64> },
}

impl CostDistribution {
    pub fn uniform(range: Interval) -> Result<Self> {
        if !range.is_well_formed() || range.width() <= 0.0 {
            return Err(Error::BadDistribution(format!(
                "cost range [{}, {}] must be finite with positive width",
                range.lo(),
                range.hi()
            )));
        }
        Ok(CostDistribution {
            kind: CostKind::Uniform { range },
        })
    }

    /// Histogram masses between strictly increasing edges; uniform density
    /// within each cell.
    pub fn tabulated(edges: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if edges.len() < 2 || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadDistribution(
                "edges must be strictly increasing with at least two entries".into(),
            ));
        }
        if masses.len() != edges.len() - 1 {
            return Err(Error::BadDistribution(format!(
                "{} masses for {} cells",
                masses.len(),
                edges.len() - 1
            )));
        }
        if masses.iter().any(|&m| !(m > 0.0) || !m.is_finite()) {
            return Err(Error::BadDistribution(
                "cell masses must be strictly positive".into(),
            ));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::BadDistribution(format!(
                "masses sum to {total}, expected 1 within 1e-12"
            )));
        }
        Ok(CostDistribution {
            kind: CostKind::Tabulated { edges, masses },
        })
    }

    pub fn support(&self) -> Interval {
        match &self.kind {
            CostKind::Uniform { range } => *range,
            CostKind::Tabulated { edges, .. } => Interval::new(edges[0], *edges.last().unwrap()),
        }
    }

    fn check_support(&self, c: f64) -> Result<f64> {
        let s = self.support();
        let eps = 1e-9 * s.hi().abs().max(1.0);
        if c < s.lo() - eps || c > s.hi() + eps {
            return Err(Error::OutOfSupport {
                cost: c,
                capacity: f64::NAN,
            });
        }
        Ok(c.clamp(s.lo(), s.hi()))
    }

    pub fn cdf(&self, c: f64) -> Result<f64> {
        let c = self.check_support(c)?;
        Ok(match &self.kind {
            CostKind::Uniform { range } => (c - range.lo()) / range.width(),
            CostKind::Tabulated { edges, masses } => {
                let k = cell_of(edges, c);
                let below: f64 = masses[..k].iter().sum();
                below + masses[k] * (c - edges[k]) / (edges[k + 1] - edges[k])
            }
        })
    }

    pub fn pdf(&self, c: f64) -> Result<f64> {
        let c = self.check_support(c)?;
        Ok(match &self.kind {
            CostKind::Uniform { range } => 1.0 / range.width(),
            CostKind::Tabulated { edges, masses } => {
                let k = cell_of(edges, c);
                masses[k] / (edges[k + 1] - edges[k])
            }
        })
    }

    /// Virtual cost `H(c) = c + F(c) / f(c)`; `2c - lo` for the uniform
    /// family.
    pub fn virtual_cost(&self, c: f64) -> Result<f64> {
        let c = self.check_support(c)?;
        match &self.kind {
            CostKind::Uniform { range } => Ok(c + (c - range.lo())),
            CostKind::Tabulated { .. } => Ok(c + self.cdf(c)? / self.pdf(c)?),
        }
    }

    /// Lattice check that `H` is non-decreasing; returns the first violating
    /// pair `((c_lo, H_lo), (c_hi, H_hi))` if any.
    pub fn regularity_violation(&self, resolution: usize) -> Option<((f64, f64), (f64, f64))> {
        let grid = self.support().lattice(resolution.max(2));
        for w in grid.windows(2) {
            let a = self.virtual_cost(w[0]).ok()?;
            let b = self.virtual_cost(w[1]).ok()?;
            if b < a - REGULARITY_TOL {
                return Some(((w[0], a), (w[1], b)));
            }
        }
        None
    }
}

fn cell_of(edges: &[f64], x: f64) -> usize {
    let n_cells = edges.len() - 1;
    let mut k = edges[1..edges.len() - 1].partition_point(|e| *e <= x);
    if k >= n_cells {
        k = n_cells - 1;
    }
    k
}

/// An XOR bidder: two disjoint bundles over the item set, one cost range,
/// independent per-bundle cost distributions, and the reported cost pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "XorBidderRaw", into = "XorBidderRaw")]
pub struct XorBidder {
    pub id: usize,
    pub bundle1: Vec<String>,
    pub bundle2: Vec<String>,
    pub cost_range: Interval,
    pub distributions: [CostDistribution; 2],
    pub bids: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct XorBidderRaw {
    id: usize,
    bundle1: Vec<String>,
    bundle2: Vec<String>,
    cost_range: Interval,
    distributions: [CostDistParams; 2],
    bids: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
enum CostDistParams {
    Uniform,
    Tabulated { edges: Vec<f64>, masses: Vec<f64> },
}

impl TryFrom<XorBidderRaw> for XorBidder {
    type Error = Error;

    fn try_from(raw: XorBidderRaw) -> Result<Self> {
        let build = |p: &CostDistParams| -> Result<CostDistribution> {
            match p {
                CostDistParams::Uniform => CostDistribution::uniform(raw.cost_range),
                CostDistParams::Tabulated { edges, masses } => {
                    CostDistribution::tabulated(edges.clone(), masses.clone())
                }
            }
        };
        let distributions = [build(&raw.distributions[0])?, build(&raw.distributions[1])?];
        Ok(XorBidder {
            id: raw.id,
            bundle1: raw.bundle1,
            bundle2: raw.bundle2,
            cost_range: raw.cost_range,
            distributions,
            bids: raw.bids,
        })
    }
}

impl From<XorBidder> for XorBidderRaw {
    fn from(b: XorBidder) -> Self {
        let to_params = |d: &CostDistribution| match &d.kind {
            CostKind::Uniform { .. } => CostDistParams::Uniform,
            CostKind::Tabulated { edges, masses } => CostDistParams::Tabulated {
                edges: edges.clone(),
                masses: masses.clone(),
            },
        };
        XorBidderRaw {
            id: b.id,
            bundle1: b.bundle1.clone(),
            bundle2: b.bundle2.clone(),
            cost_range: b.cost_range,
            distributions: [
                to_params(&b.distributions[0]),
                to_params(&b.distributions[1]),
            ],
            bids: b.bids,
        }
    }
}

/// An XOR market description, as stored in scenario files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorScenario {
    pub items: Vec<String>,
    pub bidders: Vec<XorBidder>,
}

impl XorScenario {
    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }
}

/// Which of a bidder's two bundles is selected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Bundle {
    One,
    Two,
}

impl Bundle {
    pub fn index(self) -> usize {
        match self {
            Bundle::One => 0,
            Bundle::Two => 1,
        }
    }
}

/// A feasible XOR selection: at most one bundle per bidder, every item
/// covered.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XorSelection {
    pub choices: Vec<Option<Bundle>>,
}

impl XorSelection {
    pub fn wins(&self, bidder: usize, bundle: Bundle) -> bool {
        self.choices[bidder] == Some(bundle)
    }
}

/// Winner determination output: the selection and its virtual-cost total.
#[derive(Debug, Clone, PartialEq)]
pub struct OcaxSolution {
    pub selection: XorSelection,
    pub objective: f64,
}

/// Compiled instance: bundles as bitmasks over the item list, plus the
/// virtual costs of every (bidder, bundle) pair at the current bids.
struct Compiled {
    masks: Vec<[u64; 2]>,
    h: Vec<[f64; 2]>,
    full: u64,
}

fn compile(bidders: &[XorBidder], items: &[String]) -> Result<Compiled> {
    if items.len() > 64 {
        return Err(Error::InvalidScenario(format!(
            "{} items exceed the 64-item limit",
            items.len()
        )));
    }
    let mut seen = std::collections::HashSet::new();
    for it in items {
        if !seen.insert(it.as_str()) {
            return Err(Error::InvalidScenario(format!("item {it:?} appears twice")));
        }
    }
    // Items a bundle names but the buyer does not demand contribute no
    // coverage; they may exist (free disposal) and keep the two bundles
    // disjoint.
    let bit = |name: &str| -> u64 {
        items
            .iter()
            .position(|it| it == name)
            .map_or(0, |p| 1u64 << p)
    };

    let mut masks = Vec::with_capacity(bidders.len());
    let mut h = Vec::with_capacity(bidders.len());
    for b in bidders {
        if b.bundle1.is_empty() || b.bundle2.is_empty() {
            return Err(Error::InvalidScenario(format!(
                "bidder {} has an empty bundle",
                b.id
            )));
        }
        if b.bundle1.iter().any(|n| b.bundle2.contains(n)) {
            return Err(Error::InvalidScenario(format!(
                "bidder {} bundles overlap",
                b.id
            )));
        }
        let mut m = [0u64; 2];
        for name in &b.bundle1 {
            m[0] |= bit(name);
        }
        for name in &b.bundle2 {
            m[1] |= bit(name);
        }
        for j in 0..2 {
            let s = b.distributions[j].support();
            if b.bids[j] < s.lo() - 1e-12 || b.bids[j] > s.hi() + 1e-12 {
                return Err(Error::InvalidBid {
                    seller: b.id,
                    reason: format!(
                        "bundle {} cost {} outside [{}, {}]",
                        j + 1,
                        b.bids[j],
                        s.lo(),
                        s.hi()
                    ),
                });
            }
        }
        masks.push(m);
        h.push([
            b.distributions[0].virtual_cost(b.bids[0])?,
            b.distributions[1].virtual_cost(b.bids[1])?,
        ]);
    }
    let full = if items.is_empty() {
        0
    } else {
        (1u64 << items.len()) - 1
    };
    Ok(Compiled { masks, h, full })
}

fn check_regularity(bidders: &[XorBidder], resolution: usize) -> Result<()> {
    for b in bidders {
        for dist in &b.distributions {
            if let Some(((c_lo, h_lo), (c_hi, h_hi))) = dist.regularity_violation(resolution) {
                return Err(Error::NotRegular {
                    seller: b.id,
                    c_lo,
                    q_lo: 0.0,
                    h_lo,
                    c_hi,
                    q_hi: 0.0,
                    h_hi,
                });
            }
        }
    }
    Ok(())
}

/// Exact winner determination by depth-first branch and bound: minimize the
/// total virtual cost of selected bundles subject to the per-bidder XOR
/// constraint and full item coverage. The lower bound spreads each available
/// bundle's cost over the uncovered items it touches (a fractional set-cover
/// relaxation that ignores the XOR constraint). Bidders are explored in
/// index order, bundle one before bundle two before abstention, and only
/// strict improvements replace the incumbent, so ties resolve
/// lexicographically by (bidder, bundle).
fn branch_and_bound(c: &Compiled) -> Option<(Vec<Option<Bundle>>, f64)> {
    struct Search<'a> {
        c: &'a Compiled,
        choices: Vec<Option<Bundle>>,
        best: Option<(Vec<Option<Bundle>>, f64)>,
    }

    impl Search<'_> {
        /// Cheapest-cover relaxation using bundles of bidders `idx..`; None
        /// when some uncovered item is unreachable.
        fn lower_bound(&self, idx: usize, covered: u64) -> Option<f64> {
            let uncovered = self.c.full & !covered;
            if uncovered == 0 {
                return Some(0.0);
            }
            let mut bound = 0.0;
            let mut bits = uncovered;
            while bits != 0 {
                let bit = bits & bits.wrapping_neg();
                bits ^= bit;
                let mut cheapest = f64::INFINITY;
                for i in idx..self.c.masks.len() {
                    for j in 0..2 {
                        let m = self.c.masks[i][j];
                        if m & bit != 0 {
                            let spread = (m & uncovered).count_ones() as f64;
                            cheapest = cheapest.min(self.c.h[i][j] / spread);
                        }
                    }
                }
                if !cheapest.is_finite() {
                    return None;
                }
                bound += cheapest;
            }
            Some(bound)
        }

        fn dfs(&mut self, idx: usize, covered: u64, cost: f64) {
            match self.lower_bound(idx, covered) {
                None => return,
                Some(lb) => {
                    if let Some((_, best)) = &self.best {
                        if cost + lb >= *best {
                            return;
                        }
                    }
                }
            }
            if idx == self.c.masks.len() {
                if covered == self.c.full
                    && self.best.as_ref().is_none_or(|(_, b)| cost < *b)
                {
                    self.best = Some((self.choices.clone(), cost));
                }
                return;
            }
            for choice in [Some(Bundle::One), Some(Bundle::Two), None] {
                self.choices[idx] = choice;
                match choice {
                    Some(b) => {
                        let j = b.index();
                        self.dfs(
                            idx + 1,
                            covered | self.c.masks[idx][j],
                            cost + self.c.h[idx][j],
                        );
                    }
                    None => self.dfs(idx + 1, covered, cost),
                }
            }
            self.choices[idx] = None;
        }
    }

    let mut search = Search {
        c,
        choices: vec![None; c.masks.len()],
        best: None,
    };
    search.dfs(0, 0, 0.0);
    search.best
}

/// Solves the OCAX winner determination problem. Refuses non-regular
/// instances and errors when no XOR-feasible selection covers the items.
pub fn solve_ocax(bidders: &[XorBidder], items: &[String]) -> Result<OcaxSolution> {
    check_regularity(bidders, 129)?;
    let compiled = compile(bidders, items)?;
    match branch_and_bound(&compiled) {
        Some((choices, objective)) => Ok(OcaxSolution {
            selection: XorSelection { choices },
            objective,
        }),
        None => Err(Error::Infeasible(
            "no XOR-feasible selection covers all items".into(),
        )),
    }
}

/// Knobs for the payment path integrals.
#[derive(Debug, Clone, Copy)]
pub struct PaymentConfig {
    /// Evenly spaced probes per leg before bisection.
    pub scan_steps: usize,
    /// Indicator switches are located to within this cost width.
    pub resolution: f64,
    /// Assert the critical-value identity for winners.
    pub cross_check: bool,
}

impl Default for PaymentConfig {
    fn default() -> Self {
        PaymentConfig {
            scan_steps: 128,
            resolution: 1e-9,
            cross_check: true,
        }
    }
}

/// Solves the instance with `bidder`'s reported costs replaced by `costs`.
fn solve_with_costs(
    compiled: &mut Compiled,
    bidders: &[XorBidder],
    bidder: usize,
    costs: [f64; 2],
) -> Result<Option<(Vec<Option<Bundle>>, f64)>> {
    let saved = compiled.h[bidder];
    compiled.h[bidder] = [
        bidders[bidder].distributions[0].virtual_cost(costs[0])?,
        bidders[bidder].distributions[1].virtual_cost(costs[1])?,
    ];
    let result = branch_and_bound(compiled);
    compiled.h[bidder] = saved;
    Ok(result)
}

/// The payment to `bidder` under OCAX, everyone else's reports fixed.
pub fn ocax_payment(bidders: &[XorBidder], items: &[String], bidder: usize) -> Result<f64> {
    ocax_payment_with(bidders, items, bidder, &PaymentConfig::default())
}

pub fn ocax_payment_with(
    bidders: &[XorBidder],
    items: &[String],
    bidder: usize,
    cfg: &PaymentConfig,
) -> Result<f64> {
    check_regularity(bidders, 129)?;
    let mut compiled = compile(bidders, items)?;
    let id = bidders[bidder].id;
    let [c1, c2] = bidders[bidder].bids;
    let top = bidders[bidder].cost_range.hi();

    let (choices, _) = branch_and_bound(&compiled)
        .ok_or_else(|| Error::Infeasible("no XOR-feasible selection covers all items".into()))?;
    let x1 = choices[bidder] == Some(Bundle::One);
    let x2 = choices[bidder] == Some(Bundle::Two);

    let mut wins = |costs: [f64; 2], bundle: Bundle| -> Result<bool> {
        Ok(solve_with_costs(&mut compiled, bidders, bidder, costs)?
            .is_some_and(|(ch, _)| ch[bidder] == Some(bundle)))
    };

    // Axis order A: raise the bundle-one cost to the top, then bundle two.
    let u_a = integrate_indicator(|t| wins([t, c2], Bundle::One), c1, top, cfg, id, "bundle-one cost")?
        + integrate_indicator(|t| wins([top, t], Bundle::Two), c2, top, cfg, id, "bundle-two cost")?;
    // Axis order B: bundle two first.
    let u_b = integrate_indicator(|t| wins([c1, t], Bundle::Two), c2, top, cfg, id, "bundle-two cost")?
        + integrate_indicator(|t| wins([t, top], Bundle::One), c1, top, cfg, id, "bundle-one cost")?;
    if (u_a - u_b).abs() > PATH_TOL {
        return Err(Error::PathDependent {
            bidder: id,
            first: u_a,
            second: u_b,
        });
    }

    let payment = c1 * f64::from(u8::from(x1)) + c2 * f64::from(u8::from(x2)) + u_a;

    if cfg.cross_check {
        // A winner's payment must equal the highest cost at which they would
        // still win that bundle, with the other bundle priced out at the top
        // of the range.
        let critical = if x1 {
            Some(critical_cost(|t| wins([t, top], Bundle::One), c1, top, cfg)?)
        } else if x2 {
            Some(critical_cost(|t| wins([top, t], Bundle::Two), c2, top, cfg)?)
        } else {
            None
        };
        if let Some(tau) = critical {
            if (payment - tau).abs() > PATH_TOL {
                return Err(Error::PaymentCrossCheck {
                    bidder: id,
                    integral: payment,
                    critical: tau,
                });
            }
        }
    }

    Ok(payment)
}

/// Measure of `{ t in [from, to] : indicator(t) }` for a non-increasing
/// indicator, by coarse scan plus bisection of each switch. A false-to-true
/// transition while `t` rises breaks the downward-closed region structure
/// and is reported as an error.
fn integrate_indicator(
    mut indicator: impl FnMut(f64) -> Result<bool>,
    from: f64,
    to: f64,
    cfg: &PaymentConfig,
    bidder: usize,
    axis: &'static str,
) -> Result<f64> {
    if from >= to {
        return Ok(0.0);
    }
    let steps = cfg.scan_steps.max(1);
    let at = |k: usize| from + (to - from) * k as f64 / steps as f64;
    let mut prev = indicator(from)?;
    let mut measure = 0.0;
    let mut seg_start = from;
    for k in 1..=steps {
        let t = at(k);
        let cur = indicator(t)?;
        if cur != prev {
            let (mut lo, mut hi) = (at(k - 1), t);
            while hi - lo > cfg.resolution {
                let mid = 0.5 * (lo + hi);
                if indicator(mid)? == prev {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let switch = 0.5 * (lo + hi);
            if prev {
                measure += switch - seg_start;
            } else {
                return Err(Error::RegionNotMonotone {
                    bidder,
                    axis,
                    inner: (seg_start, f64::NAN),
                    outer: (switch, f64::NAN),
                });
            }
            seg_start = switch;
            prev = cur;
        }
    }
    if prev {
        measure += to - seg_start;
    }
    Ok(measure)
}

/// `sup { t : wins(t) }` for a non-increasing win indicator that holds at
/// `from`, bisected to the configured resolution.
fn critical_cost(
    mut wins: impl FnMut(f64) -> Result<bool>,
    from: f64,
    top: f64,
    cfg: &PaymentConfig,
) -> Result<f64> {
    if wins(top)? {
        return Ok(top);
    }
    let (mut lo, mut hi) = (from, top);
    while hi - lo > cfg.resolution {
        let mid = 0.5 * (lo + hi);
        if wins(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Region labels over a bidder's cost square: rows index the bundle-one cost
/// lattice, columns the bundle-two cost lattice. 1 = wins bundle one,
/// 2 = wins bundle two, 3 = loses.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionGrid {
    pub costs: Vec<f64>,
    pub labels: Vec<Vec<u8>>,
}

/// Labels each lattice point of `bidder`'s cost square by re-solving the
/// auction there, then verifies the monotone region structure: the win-one
/// region is downward closed in the bundle-one cost along every column, the
/// win-two region downward closed in the bundle-two cost along every row,
/// and the top corner loses whenever the other bidders can cover the items
/// on their own.
pub fn region_partition(
    bidders: &[XorBidder],
    items: &[String],
    bidder: usize,
    resolution: usize,
) -> Result<RegionGrid> {
    check_regularity(bidders, 129)?;
    let mut compiled = compile(bidders, items)?;
    let id = bidders[bidder].id;
    let costs = bidders[bidder].cost_range.lattice(resolution.max(2));

    let mut labels = vec![vec![0u8; costs.len()]; costs.len()];
    for (r, &a) in costs.iter().enumerate() {
        for (col, &b) in costs.iter().enumerate() {
            let solved = solve_with_costs(&mut compiled, bidders, bidder, [a, b])?;
            labels[r][col] = match solved {
                Some((choices, _)) => match choices[bidder] {
                    Some(Bundle::One) => 1,
                    Some(Bundle::Two) => 2,
                    None => 3,
                },
                None => {
                    return Err(Error::Infeasible(
                        "no XOR-feasible selection covers all items".into(),
                    ))
                }
            };
        }
    }

    // Win-one labels must form a prefix of every column as the bundle-one
    // cost rises, and win-two labels a prefix of every row.
    for col in 0..costs.len() {
        let mut seen_non_one = false;
        for r in 0..costs.len() {
            if labels[r][col] != 1 {
                seen_non_one = true;
            } else if seen_non_one {
                return Err(Error::RegionNotMonotone {
                    bidder: id,
                    axis: "bundle-one cost",
                    inner: (costs[r - 1], costs[col]),
                    outer: (costs[r], costs[col]),
                });
            }
        }
    }
    for (r, row) in labels.iter().enumerate() {
        let mut seen_non_two = false;
        for (col, &label) in row.iter().enumerate() {
            if label != 2 {
                seen_non_two = true;
            } else if seen_non_two {
                return Err(Error::RegionNotMonotone {
                    bidder: id,
                    axis: "bundle-two cost",
                    inner: (costs[r], costs[col - 1]),
                    outer: (costs[r], costs[col]),
                });
            }
        }
    }

    // When the rest of the market can cover alone, the top corner loses.
    let others: Vec<XorBidder> = bidders
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != bidder)
        .map(|(_, b)| b.clone())
        .collect();
    let others_cover = compile(&others, items)
        .ok()
        .and_then(|c| branch_and_bound(&c))
        .is_some();
    if others_cover {
        let last = costs.len() - 1;
        if labels[last][last] != 3 {
            return Err(Error::RegionNotMonotone {
                bidder: id,
                axis: "top corner",
                inner: (costs[last], costs[last]),
                outer: (costs[last], costs[last]),
            });
        }
    }

    Ok(RegionGrid { costs, labels })
}
