//! The single-minded optimal procurement auction, plus the two baselines it
//! is measured against.
//!
//! Winner determination minimizes total *virtual* cost subject to demand
//! coverage and reported capacities (a [`crate::lp::CoveringLp`]). Payments
//! are threshold payments: seller `i` receives
//!
//! ```text
//! t_i = c_i * x_i  +  integral of x_i(t, q_i) dt from c_i to the top cost
//! ```
//!
//! where `x_i(t, q_i)` is the allocation the seller would have received had
//! they reported cost `t` instead — a piecewise-constant, non-increasing
//! curve recovered by re-solving the LP and bisecting each level change
//! ([`allocation_curve`]). The second term is the seller's offered surplus;
//! pinning it to zero at the top cost makes the payment rule the unique
//! cheapest one compatible with truthful bidding.
//!
//! Baselines: [`kth_price_auction`] is the uniform-price rule that fails
//! incentive compatibility once capacities are private, and
//! [`myerson_single_item`] is the classic single-item forward auction.

use crate::lp::{self, CoveringLp, LpSolution};
use crate::model::{
    coverage_matrix, validate_scenario, Allocation, Interval, Outcome, Scenario, SellerBid,
};
use crate::{Error, Result};

/// Knobs for allocation-curve recovery.
#[derive(Debug, Clone, Copy)]
pub struct CurveConfig {
    /// Evenly spaced probes in the coarse scan before bisection.
    pub scan_steps: usize,
    /// Breakpoints are located to within this cost width.
    pub cost_resolution: f64,
    /// Allocation changes below this are treated as the same level.
    pub level_tolerance: f64,
}

impl Default for CurveConfig {
    fn default() -> Self {
        CurveConfig {
            scan_steps: 256,
            cost_resolution: 1e-9,
            level_tolerance: 1e-7,
        }
    }
}

/// Knobs for [`run_optimal_auction_with`].
#[derive(Debug, Clone, Copy)]
pub struct AuctionConfig {
    /// Lattice resolution for the per-seller regularity refusal check.
    pub regularity_resolution: usize,
    pub curve: CurveConfig,
}

impl Default for AuctionConfig {
    fn default() -> Self {
        AuctionConfig {
            regularity_resolution: 64,
            curve: CurveConfig::default(),
        }
    }
}

/// A piecewise-constant, non-increasing allocation-versus-cost curve.
///
/// `levels` has one more entry than `breakpoints`; level `k` applies on
/// `[b_{k-1}, b_k)` with the domain endpoints closing the first and last
/// segments. Evaluation is right-continuous at breakpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct StepFunction {
    domain: Interval,
    breakpoints: Vec<f64>,
    levels: Vec<f64>,
}

impl StepFunction {
    pub fn new(domain: Interval, breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        if !domain.is_well_formed() {
            return Err(Error::BadStepFunction("domain must be a finite interval".into()));
        }
        if levels.len() != breakpoints.len() + 1 {
            return Err(Error::BadStepFunction(format!(
                "{} levels for {} breakpoints",
                levels.len(),
                breakpoints.len()
            )));
        }
        if breakpoints
            .iter()
            .any(|&b| b <= domain.lo() || b >= domain.hi())
        {
            return Err(Error::BadStepFunction(
                "breakpoints must lie strictly inside the domain".into(),
            ));
        }
        if breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::BadStepFunction(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if levels.windows(2).any(|w| w[1] > w[0] + 1e-9) {
            return Err(Error::BadStepFunction(
                "levels must be non-increasing".into(),
            ));
        }
        Ok(StepFunction {
            domain,
            breakpoints,
            levels,
        })
    }

    pub fn constant(domain: Interval, level: f64) -> Self {
        StepFunction {
            domain,
            breakpoints: Vec::new(),
            levels: vec![level],
        }
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    /// Value at `t`, right-continuous at breakpoints.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(self.domain.lo(), self.domain.hi());
        self.levels[self.breakpoints.partition_point(|&b| b <= t)]
    }

    /// Value just left of `t`; differs from [`eval`](Self::eval) only at
    /// breakpoints.
    pub fn eval_left(&self, t: f64) -> f64 {
        let t = t.clamp(self.domain.lo(), self.domain.hi());
        self.levels[self.breakpoints.partition_point(|&b| b < t)]
    }

    /// Exact integral from `c` to the top of the domain: the sum of
    /// `level * width` over the segments right of `c`.
    pub fn integral_from(&self, c: f64) -> f64 {
        let c = c.clamp(self.domain.lo(), self.domain.hi());
        let mut total = 0.0;
        let mut start = self.domain.lo();
        for (k, &level) in self.levels.iter().enumerate() {
            let end = if k < self.breakpoints.len() {
                self.breakpoints[k]
            } else {
                self.domain.hi()
            };
            if end > c {
                total += level * (end - start.max(c));
            }
            start = end;
        }
        total
    }
}

/// Precomputed pieces shared by winner determination and curve recovery.
struct AuctionContext<'a> {
    scenario: &'a Scenario,
    bids: Vec<SellerBid>,
    lp: CoveringLp,
}

impl<'a> AuctionContext<'a> {
    fn new(scenario: &'a Scenario, bids: &[SellerBid]) -> Result<Self> {
        let report = validate_scenario(scenario);
        if !report.is_ok() {
            return Err(Error::InvalidScenario(report.to_string()));
        }
        let bids = scenario.align_bids(bids)?;
        let mut costs = Vec::with_capacity(bids.len());
        for (spec, bid) in scenario.sellers.iter().zip(&bids) {
            costs.push(spec.distribution.virtual_cost(bid.cost, bid.capacity)?);
        }
        let upper = bids.iter().map(|b| b.capacity).collect();
        let matrix = coverage_matrix(scenario).rows().to_vec();
        let lp = CoveringLp::new(costs, upper, matrix, scenario.demands())?;
        Ok(AuctionContext { scenario, bids, lp })
    }

    fn check_regularity(&self, resolution: usize) -> Result<()> {
        for spec in &self.scenario.sellers {
            let report = spec.distribution.is_regular(resolution);
            if let Some(v) = report.violation {
                return Err(Error::NotRegular {
                    seller: spec.id,
                    c_lo: v.first.0,
                    q_lo: v.first.1,
                    h_lo: v.first.2,
                    c_hi: v.second.0,
                    q_hi: v.second.1,
                    h_hi: v.second.2,
                });
            }
        }
        Ok(())
    }

    /// Allocation to `seller` when they report cost `t` at capacity
    /// `capacity`, everything else fixed. Zero above the conditional cost
    /// support (the virtual cost is unbounded there).
    fn allocation_at(&self, seller: usize, t: f64, capacity: f64, top: f64) -> Result<f64> {
        if t > top {
            return Ok(0.0);
        }
        let dist = &self.scenario.sellers[seller].distribution;
        let h = dist.virtual_cost(t.min(top), capacity)?;
        let mut lp = self.lp.clone();
        if (self.bids[seller].capacity - capacity).abs() > 0.0 {
            lp = CoveringLp::new(
                lp.costs().to_vec(),
                {
                    let mut u = lp.upper_bounds().to_vec();
                    u[seller] = capacity;
                    u
                },
                lp.coverage().to_vec(),
                lp.demands().to_vec(),
            )?;
        }
        match lp::solve_with_modified_cost(&lp, seller, h)? {
            LpSolution::Optimal { x, .. } => Ok(x[seller]),
            LpSolution::Infeasible => Err(Error::Infeasible(
                "reported capacities cannot cover the demands".into(),
            )),
        }
    }

    fn curve(&self, seller: usize, capacity: f64, cfg: &CurveConfig) -> Result<StepFunction> {
        let spec = &self.scenario.sellers[seller];
        let domain = spec.cost_range;
        let top = spec.distribution.top_cost(capacity).min(domain.hi());

        // Coarse scan over the conditional support.
        let steps = cfg.scan_steps.max(1);
        let mut samples = Vec::with_capacity(steps + 1);
        for k in 0..=steps {
            let t = domain.lo() + (top - domain.lo()) * k as f64 / steps as f64;
            samples.push((t, self.allocation_at(seller, t, capacity, top)?));
        }

        // Refine every detected level change down to the cost resolution.
        let mut breaks: Vec<(f64, f64)> = Vec::new(); // (breakpoint, level right of it)
        for k in 0..steps {
            let (lo, x_lo) = samples[k];
            let (hi, x_hi) = samples[k + 1];
            if (x_hi - x_lo).abs() > cfg.level_tolerance {
                self.refine(seller, capacity, top, lo, hi, x_lo, x_hi, cfg, &mut breaks)?;
            }
        }

        let mut breakpoints = Vec::with_capacity(breaks.len());
        let mut levels = vec![samples[0].1];
        for (b, level_right) in breaks {
            if breakpoints.last().is_some_and(|&prev| b - prev <= cfg.cost_resolution) {
                // Two refinements converged onto the same location; keep the
                // later level.
                *levels.last_mut().unwrap() = level_right;
                continue;
            }
            let level_left = *levels.last().unwrap();
            if level_right > level_left + cfg.level_tolerance {
                return Err(Error::CurveNotMonotone {
                    seller: self.scenario.sellers[seller].id,
                    cost_lo: b - cfg.cost_resolution,
                    cost_hi: b + cfg.cost_resolution,
                    level_lo: level_left,
                    level_hi: level_right,
                });
            }
            breakpoints.push(b);
            levels.push(level_right);
        }

        // Above the conditional support the seller never wins.
        if top < domain.hi() - cfg.cost_resolution && *levels.last().unwrap() != 0.0 {
            breakpoints.push(top);
            levels.push(0.0);
        }

        StepFunction::new(domain, breakpoints, levels)
    }

    #[allow(clippy::too_many_arguments)]
    fn refine(
        &self,
        seller: usize,
        capacity: f64,
        top: f64,
        lo: f64,
        hi: f64,
        x_lo: f64,
        x_hi: f64,
        cfg: &CurveConfig,
        breaks: &mut Vec<(f64, f64)>,
    ) -> Result<()> {
        if hi - lo <= cfg.cost_resolution {
            breaks.push((0.5 * (lo + hi), x_hi));
            return Ok(());
        }
        let mid = 0.5 * (lo + hi);
        let x_mid = self.allocation_at(seller, mid, capacity, top)?;
        if (x_mid - x_lo).abs() > cfg.level_tolerance {
            self.refine(seller, capacity, top, lo, mid, x_lo, x_mid, cfg, breaks)?;
        }
        if (x_hi - x_mid).abs() > cfg.level_tolerance {
            self.refine(seller, capacity, top, mid, hi, x_mid, x_hi, cfg, breaks)?;
        }
        Ok(())
    }
}

/// Runs the optimal auction: virtual-cost winner determination followed by
/// threshold payments. Refuses to run when any seller's virtual cost fails
/// the lattice regularity check, since the mechanism is only defined under
/// regularity.
pub fn run_optimal_auction(scenario: &Scenario, bids: &[SellerBid]) -> Result<Outcome> {
    run_optimal_auction_with(scenario, bids, &AuctionConfig::default())
}

pub fn run_optimal_auction_with(
    scenario: &Scenario,
    bids: &[SellerBid],
    config: &AuctionConfig,
) -> Result<Outcome> {
    let ctx = AuctionContext::new(scenario, bids)?;
    ctx.check_regularity(config.regularity_resolution)?;

    let x = match lp::solve(&ctx.lp)? {
        LpSolution::Optimal { x, .. } => x,
        LpSolution::Infeasible => {
            return Err(Error::Infeasible(
                "reported capacities cannot cover the demands".into(),
            ))
        }
    };

    let mut payments = Vec::with_capacity(x.len());
    for (i, bid) in ctx.bids.iter().enumerate() {
        let curve = ctx.curve(i, bid.capacity, &config.curve)?;
        payments.push(payment_single_minded(i, x[i], bid.cost, &curve)?);
    }
    Ok(Outcome {
        allocation: Allocation { quantities: x },
        payments,
    })
}

/// The allocation `seller` would receive as a function of their reported
/// cost, at reported capacity `capacity`, holding the other bids in `bids`
/// fixed (the entry for `seller` is ignored).
pub fn allocation_curve(
    scenario: &Scenario,
    bids: &[SellerBid],
    seller: usize,
    capacity: f64,
) -> Result<StepFunction> {
    allocation_curve_with(scenario, bids, seller, capacity, &CurveConfig::default())
}

pub fn allocation_curve_with(
    scenario: &Scenario,
    bids: &[SellerBid],
    seller: usize,
    capacity: f64,
    config: &CurveConfig,
) -> Result<StepFunction> {
    let mut ctx = AuctionContext::new(scenario, bids)?;
    // The curve is a function of the opponents only; pin the scanned
    // seller's reported capacity so the template matches the query.
    ctx.bids[seller].capacity = capacity;
    ctx.lp = CoveringLp::new(
        ctx.lp.costs().to_vec(),
        ctx.bids.iter().map(|b| b.capacity).collect(),
        ctx.lp.coverage().to_vec(),
        ctx.lp.demands().to_vec(),
    )?;
    ctx.curve(seller, capacity, config)
}

/// Threshold payment from the allocation curve: reported cost times the
/// winning quantity, plus the exact integral of the curve right of the
/// report.
pub fn payment_single_minded(
    seller: usize,
    winning_quantity: f64,
    reported_cost: f64,
    curve: &StepFunction,
) -> Result<f64> {
    let level = curve.eval(reported_cost);
    let level_left = curve.eval_left(reported_cost);
    if (level - winning_quantity).abs() > 1e-6 && (level_left - winning_quantity).abs() > 1e-6 {
        return Err(Error::CurveMismatch {
            seller,
            cost: reported_cost,
            allocation: winning_quantity,
            level,
        });
    }
    Ok(reported_cost * winning_quantity + curve.integral_from(reported_cost))
}

/// The classic k-th price procurement auction for a single item: sort by
/// reported cost, fill the demand greedily, and pay every allocated unit the
/// unit cost of the cheapest seller who received nothing. When every seller
/// receives something there is no losing cost to quote, and each winner is
/// paid their own reported cost.
pub fn kth_price_auction(bids: &[SellerBid], demand: f64) -> Result<Outcome> {
    let total: f64 = bids.iter().map(|b| b.capacity).sum();
    if total + 1e-12 < demand {
        return Err(Error::Infeasible(format!(
            "reported capacities supply {total} of {demand} demanded"
        )));
    }

    let mut order: Vec<usize> = (0..bids.len()).collect();
    order.sort_by(|&a, &b| {
        bids[a]
            .cost
            .partial_cmp(&bids[b].cost)
            .expect("finite costs")
            .then(bids[a].seller_id.cmp(&bids[b].seller_id))
    });

    let mut x = vec![0.0; bids.len()];
    let mut remaining = demand;
    for &i in &order {
        let take = bids[i].capacity.min(remaining);
        x[i] = take;
        remaining -= take;
        if remaining <= 0.0 {
            break;
        }
    }

    let losing_price = order
        .iter()
        .find(|&&i| x[i] == 0.0)
        .map(|&i| bids[i].cost);
    let payments: Vec<f64> = x
        .iter()
        .zip(bids)
        .map(|(&xi, bid)| xi * losing_price.unwrap_or(bid.cost))
        .collect();

    Ok(Outcome {
        allocation: Allocation { quantities: x },
        payments,
    })
}

/// A valuation distribution for the single-item forward auction.
pub trait ValueDistribution {
    fn support(&self) -> Interval;
    fn cdf(&self, v: f64) -> f64;
    fn pdf(&self, v: f64) -> f64;

    /// Virtual value `H(v) = v - (1 - F(v)) / f(v)`.
    fn virtual_value(&self, v: f64) -> f64 {
        v - (1.0 - self.cdf(v)) / self.pdf(v)
    }
}

/// Uniform valuations on a range; `H(v) = 2v - hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformValue {
    pub range: Interval,
}

impl UniformValue {
    pub fn new(lo: f64, hi: f64) -> Self {
        UniformValue {
            range: Interval::new(lo, hi),
        }
    }
}

impl ValueDistribution for UniformValue {
    fn support(&self) -> Interval {
        self.range
    }

    fn cdf(&self, v: f64) -> f64 {
        ((v - self.range.lo()) / self.range.width()).clamp(0.0, 1.0)
    }

    fn pdf(&self, _v: f64) -> f64 {
        1.0 / self.range.width()
    }

    fn virtual_value(&self, v: f64) -> f64 {
        2.0 * v - self.range.hi()
    }
}

/// One bidder per entry: a reported valuation and the distribution it is
/// believed to be drawn from.
pub struct MyersonSingleItemInstance<D: ValueDistribution> {
    pub valuations: Vec<f64>,
    pub distributions: Vec<D>,
}

/// Result of the single-item forward auction: the winning bidder (if the
/// best virtual value is strictly positive) and what they pay.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MyersonOutcome {
    pub winner: Option<usize>,
    pub payment: f64,
}

/// Myerson's optimal single-item auction: award to the highest positive
/// virtual value; the winner pays the lowest valuation at which they would
/// still win, found by bisection to 1e-9. An exactly zero virtual value does
/// not sell. Refuses non-regular instances (virtual value must be
/// non-decreasing on a lattice over the support).
pub fn myerson_single_item<D: ValueDistribution>(
    instance: &MyersonSingleItemInstance<D>,
) -> Result<MyersonOutcome> {
    assert_eq!(
        instance.valuations.len(),
        instance.distributions.len(),
        "one distribution per valuation"
    );

    const LATTICE: usize = 64;
    for (i, dist) in instance.distributions.iter().enumerate() {
        let grid = dist.support().lattice(LATTICE);
        for w in grid.windows(2) {
            let (a, b) = (dist.virtual_value(w[0]), dist.virtual_value(w[1]));
            if b < a - 1e-12 {
                return Err(Error::NotRegular {
                    seller: i + 1,
                    c_lo: w[0],
                    q_lo: 0.0,
                    h_lo: a,
                    c_hi: w[1],
                    q_hi: 0.0,
                    h_hi: b,
                });
            }
        }
    }

    let virtuals: Vec<f64> = instance
        .valuations
        .iter()
        .zip(&instance.distributions)
        .map(|(&v, d)| d.virtual_value(v))
        .collect();

    let mut winner = None;
    for (i, &h) in virtuals.iter().enumerate() {
        if h > 0.0 && winner.is_none_or(|w: usize| h > virtuals[w]) {
            winner = Some(i);
        }
    }
    let Some(w) = winner else {
        return Ok(MyersonOutcome {
            winner: None,
            payment: 0.0,
        });
    };

    let rival = virtuals
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != w)
        .map(|(_, &h)| h)
        .fold(f64::NEG_INFINITY, f64::max);
    let dist = &instance.distributions[w];
    let wins = |v: f64| {
        let h = dist.virtual_value(v);
        h > 0.0 && h > rival
    };

    let support = dist.support();
    let mut lo = support.lo();
    let mut hi = instance.valuations[w];
    if wins(lo) {
        return Ok(MyersonOutcome {
            winner: Some(w),
            payment: lo,
        });
    }
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if wins(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(MyersonOutcome {
        winner: Some(w),
        payment: hi,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::dist::DistributionSpec;
    use crate::model::Item;

    fn uniform_seller(
        id: usize,
        bundle: &[&str],
        cost: Interval,
        capacity: Interval,
    ) -> crate::model::SellerSpec {
        crate::model::SellerSpec {
            id,
            bundle: bundle.iter().map(|s| s.to_string()).collect(),
            cost_range: cost,
            capacity_range: capacity,
            distribution: DistributionSpec::independent_uniform(cost, capacity).unwrap(),
        }
    }

    /// Single item, four sellers on [5, 15] uniform costs; truthful bids
    /// reproduce the four-supplier example.
    pub(crate) fn four_supplier_scenario() -> Scenario {
        let cost = Interval::new(5.0, 15.0);
        Scenario {
            items: vec![Item {
                id: "widget".into(),
                demand: 1000.0,
            }],
            sellers: vec![
                uniform_seller(1, &["widget"], cost, Interval::new(400.0, 500.0)),
                uniform_seller(2, &["widget"], cost, Interval::new(400.0, 500.0)),
                uniform_seller(3, &["widget"], cost, Interval::new(400.0, 800.0)),
                uniform_seller(4, &["widget"], cost, Interval::new(400.0, 500.0)),
            ],
        }
    }

    pub(crate) fn four_supplier_truthful() -> Vec<SellerBid> {
        vec![
            SellerBid::new(1, 10.0, 500.0),
            SellerBid::new(2, 8.0, 500.0),
            SellerBid::new(3, 12.0, 800.0),
            SellerBid::new(4, 6.0, 500.0),
        ]
    }

    #[test]
    fn step_function_eval_and_integral() {
        let f = StepFunction::new(
            Interval::new(8.0, 15.0),
            vec![12.0],
            vec![500.0, 0.0],
        )
        .unwrap();
        assert_eq!(f.eval(8.0), 500.0);
        assert_eq!(f.eval(11.9), 500.0);
        assert_eq!(f.eval(12.0), 0.0); // right-continuous
        assert_eq!(f.eval_left(12.0), 500.0);
        assert_eq!(f.integral_from(8.0), 2000.0);
        assert_eq!(f.integral_from(13.0), 0.0);
        assert_eq!(f.integral_from(10.0), 1000.0);
    }

    #[test]
    fn step_function_rejects_increasing_levels() {
        let bad = StepFunction::new(
            Interval::new(0.0, 1.0),
            vec![0.5],
            vec![1.0, 2.0],
        );
        assert!(matches!(bad, Err(Error::BadStepFunction(_))));
    }

    #[test]
    fn two_segment_payment_matches_hand_integral() {
        let curve = StepFunction::new(
            Interval::new(8.0, 15.0),
            vec![12.0],
            vec![500.0, 0.0],
        )
        .unwrap();
        let t = payment_single_minded(0, 500.0, 8.0, &curve).unwrap();
        assert_eq!(t, 6000.0);
    }

    #[test]
    fn losing_seller_is_paid_nothing() {
        let curve = StepFunction::constant(Interval::new(0.0, 10.0), 0.0);
        assert_eq!(payment_single_minded(0, 0.0, 4.0, &curve).unwrap(), 0.0);
    }

    #[test]
    fn constant_curve_pays_the_top_cost() {
        let curve = StepFunction::constant(Interval::new(2.0, 9.0), 70.0);
        let t = payment_single_minded(0, 70.0, 3.0, &curve).unwrap();
        assert_eq!(t, 3.0 * 70.0 + 6.0 * 70.0); // = 9 * 70
    }

    #[test]
    fn payment_rejects_curve_mismatch() {
        let curve = StepFunction::constant(Interval::new(0.0, 1.0), 5.0);
        assert!(matches!(
            payment_single_minded(0, 3.0, 0.5, &curve),
            Err(Error::CurveMismatch { .. })
        ));
    }

    #[test]
    fn four_supplier_curve_for_seller_4() {
        let scenario = four_supplier_scenario();
        let bids = four_supplier_truthful();
        let curve = allocation_curve(&scenario, &bids, 3, 500.0).unwrap();
        // H_4(t) = 2t - 5 crosses seller 1's virtual cost 15 at t = 10;
        // past that, sellers 1 and 2 fill the demand alone.
        assert_eq!(curve.levels(), &[500.0, 0.0]);
        assert_eq!(curve.breakpoints().len(), 1);
        assert!((curve.breakpoints()[0] - 10.0).abs() < 1e-6);

        let t = payment_single_minded(3, 500.0, 6.0, &curve).unwrap();
        assert!((t - 5000.0).abs() < 1e-5);
    }

    #[test]
    fn single_covering_seller_has_one_segment_and_collects_top_cost() {
        // Cost range bounded away from zero so H(c_lo) > 0 and the LP has a
        // unique optimum everywhere on the curve.
        let cost = Interval::new(1.0, 10.0);
        let scenario = Scenario {
            items: vec![
                Item { id: "A".into(), demand: 3.0 },
                Item { id: "B".into(), demand: 7.0 },
            ],
            sellers: vec![uniform_seller(1, &["A", "B"], cost, Interval::new(0.0, 20.0))],
        };
        let bids = vec![SellerBid::new(1, 4.0, 20.0)];
        let curve = allocation_curve(&scenario, &bids, 0, 20.0).unwrap();
        // Forced supplier: x = max demand = 7 across the whole cost range.
        assert_eq!(curve.breakpoints(), &[] as &[f64]);
        assert_eq!(curve.levels(), &[7.0]);

        let outcome = run_optimal_auction(&scenario, &bids).unwrap();
        assert_eq!(outcome.allocation.quantities, vec![7.0]);
        // t = c x + (top - c) x = top * x.
        assert!((outcome.payments[0] - 70.0).abs() < 1e-6);
    }

    #[test]
    fn zero_demand_zero_payments() {
        let cost = Interval::new(0.0, 10.0);
        let scenario = Scenario {
            items: vec![Item { id: "A".into(), demand: 0.0 }],
            sellers: vec![
                uniform_seller(1, &["A"], cost, Interval::new(0.0, 5.0)),
                uniform_seller(2, &["A"], cost, Interval::new(0.0, 5.0)),
            ],
        };
        let bids = vec![SellerBid::new(1, 3.0, 5.0), SellerBid::new(2, 2.0, 4.0)];
        let outcome = run_optimal_auction(&scenario, &bids).unwrap();
        assert_eq!(outcome.allocation.quantities, vec![0.0, 0.0]);
        assert_eq!(outcome.payments, vec![0.0, 0.0]);
    }

    #[test]
    fn irregular_distribution_is_refused() {
        let cost_edges = vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        let capacity_edges = vec![0.0, 5.0];
        let masses = vec![vec![0.01, 0.01, 0.98]];
        let dist =
            DistributionSpec::tabulated_grid(cost_edges, capacity_edges, masses).unwrap();
        let scenario = Scenario {
            items: vec![Item { id: "A".into(), demand: 3.0 }],
            sellers: vec![crate::model::SellerSpec {
                id: 1,
                bundle: vec!["A".into()],
                cost_range: Interval::new(0.0, 1.0),
                capacity_range: Interval::new(0.0, 5.0),
                distribution: dist,
            }],
        };
        let bids = vec![SellerBid::new(1, 0.5, 5.0)];
        assert!(matches!(
            run_optimal_auction(&scenario, &bids),
            Err(Error::NotRegular { seller: 1, .. })
        ));
    }

    #[test]
    fn infeasible_capacity_reports_error_out() {
        let cost = Interval::new(0.0, 10.0);
        let scenario = Scenario {
            items: vec![Item { id: "A".into(), demand: 8.0 }],
            sellers: vec![
                uniform_seller(1, &["A"], cost, Interval::new(0.0, 5.0)),
                uniform_seller(2, &["A"], cost, Interval::new(0.0, 5.0)),
            ],
        };
        // Collective capacity at the range tops is fine (10 >= 8), but the
        // reported capacities only cover 6.
        let bids = vec![SellerBid::new(1, 3.0, 3.0), SellerBid::new(2, 2.0, 3.0)];
        assert!(matches!(
            run_optimal_auction(&scenario, &bids),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn kth_price_reproduces_the_four_supplier_example() {
        let bids = four_supplier_truthful();
        let outcome = kth_price_auction(&bids, 1000.0).unwrap();
        assert_eq!(outcome.allocation.quantities, vec![0.0, 500.0, 0.0, 500.0]);
        assert_eq!(outcome.payments[3], 5000.0);
        assert_eq!(outcome.payments[1], 5000.0);

        // Seller 4 under-reports capacity: price jumps to seller 3's cost.
        let mut deviated = bids.clone();
        deviated[3].capacity = 490.0;
        let outcome = kth_price_auction(&deviated, 1000.0).unwrap();
        assert_eq!(
            outcome.allocation.quantities,
            vec![10.0, 500.0, 0.0, 490.0]
        );
        assert_eq!(outcome.payments[3], 5880.0);
    }

    #[test]
    fn kth_price_single_seller_pays_own_cost() {
        let bids = vec![SellerBid::new(1, 7.0, 100.0)];
        let outcome = kth_price_auction(&bids, 60.0).unwrap();
        assert_eq!(outcome.allocation.quantities, vec![60.0]);
        assert_eq!(outcome.payments, vec![420.0]);
    }

    #[test]
    fn kth_price_insufficient_capacity_is_infeasible() {
        let bids = vec![SellerBid::new(1, 7.0, 100.0)];
        assert!(matches!(
            kth_price_auction(&bids, 200.0),
            Err(Error::Infeasible(_))
        ));
    }

    #[test]
    fn myerson_symmetric_uniform_is_second_price() {
        let instance = MyersonSingleItemInstance {
            valuations: vec![0.8, 0.5],
            distributions: vec![UniformValue::new(0.0, 1.0); 2],
        };
        let out = myerson_single_item(&instance).unwrap();
        assert_eq!(out.winner, Some(0));
        assert!((out.payment - 0.5).abs() < 1e-9);
    }

    #[test]
    fn myerson_no_sale_below_reserve() {
        let instance = MyersonSingleItemInstance {
            valuations: vec![0.3, 0.2],
            distributions: vec![UniformValue::new(0.0, 1.0); 2],
        };
        let out = myerson_single_item(&instance).unwrap();
        assert_eq!(out.winner, None);
        assert_eq!(out.payment, 0.0);
    }

    #[test]
    fn myerson_single_bidder_pays_reserve() {
        let instance = MyersonSingleItemInstance {
            valuations: vec![0.9],
            distributions: vec![UniformValue::new(0.0, 1.0)],
        };
        let out = myerson_single_item(&instance).unwrap();
        assert_eq!(out.winner, Some(0));
        assert!((out.payment - 0.5).abs() < 1e-9);
    }

    #[test]
    fn myerson_exact_zero_virtual_value_does_not_sell() {
        let instance = MyersonSingleItemInstance {
            valuations: vec![0.5],
            distributions: vec![UniformValue::new(0.0, 1.0)],
        };
        assert_eq!(myerson_single_item(&instance).unwrap().winner, None);
    }

    /// Piecewise-uniform valuation density on [0, 1]: mass `w` below 1/2 and
    /// `1 - w` above. Irregular when the upper half is much lighter.
    struct TwoBlockValue {
        low_mass: f64,
    }

    impl ValueDistribution for TwoBlockValue {
        fn support(&self) -> Interval {
            Interval::new(0.0, 1.0)
        }

        fn cdf(&self, v: f64) -> f64 {
            if v < 0.5 {
                2.0 * self.low_mass * v
            } else {
                self.low_mass + 2.0 * (1.0 - self.low_mass) * (v - 0.5)
            }
        }

        fn pdf(&self, v: f64) -> f64 {
            if v < 0.5 {
                2.0 * self.low_mass
            } else {
                2.0 * (1.0 - self.low_mass)
            }
        }
    }

    #[test]
    fn myerson_refuses_irregular_instances() {
        let instance = MyersonSingleItemInstance {
            valuations: vec![0.9, 0.6],
            distributions: vec![
                TwoBlockValue { low_mass: 0.9 },
                TwoBlockValue { low_mass: 0.9 },
            ],
        };
        assert!(matches!(
            myerson_single_item(&instance),
            Err(Error::NotRegular { .. })
        ));
    }
}
