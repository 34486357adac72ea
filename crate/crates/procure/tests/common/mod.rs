//! Shared oracles and instance generators for the integration suites.
//!
//! The oracles re-derive optima by exhaustive enumeration, independent of
//! the solver code paths they check: the LP oracle enumerates basic feasible
//! solutions of the equality system, and the XOR oracle walks all 3^n
//! selections.

#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use procure::dist::DistributionSpec;
use procure::lp::CoveringLp;
use procure::model::{Interval, Item, Scenario, SellerBid, SellerSpec};
use procure::xor::{Bundle, CostDistribution, XorBidder};

/// Gaussian elimination, deliberately separate from the library's solver.
fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()
        })?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

fn combinations(pool: usize, take: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(take);
    fn rec(start: usize, pool: usize, take: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if current.len() == take {
            out.push(current.clone());
            return;
        }
        for i in start..pool {
            current.push(i);
            rec(i + 1, pool, take, current, out);
            current.pop();
        }
    }
    rec(0, pool, take, &mut current, &mut out);
    out
}

/// Brute-force LP optimum by enumerating every basic feasible solution of
/// `[M | -I] z = D` with nonbasic structural variables at either bound and
/// nonbasic surplus variables at zero.
pub fn enumerate_covering_lp(lp: &CoveringLp) -> Option<(Vec<f64>, f64)> {
    const TOL: f64 = 1e-7;
    let n = lp.n_vars();
    let m = lp.n_constraints();
    let total = n + m;

    let column = |j: usize| -> Vec<f64> {
        let mut col = vec![0.0; m];
        if j < n {
            for r in 0..m {
                col[r] = f64::from(lp.coverage()[r][j]);
            }
        } else {
            col[j - n] = -1.0;
        }
        col
    };

    let mut best: Option<(Vec<f64>, f64)> = None;
    for basis in combinations(total, m) {
        let nonbasic_structural: Vec<usize> =
            (0..n).filter(|j| !basis.contains(j)).collect();
        for assignment in 0..(1u32 << nonbasic_structural.len()) {
            let mut z = vec![0.0; total];
            for (bit, &j) in nonbasic_structural.iter().enumerate() {
                if assignment >> bit & 1 == 1 {
                    z[j] = lp.upper_bounds()[j];
                }
            }
            let mut rhs = lp.demands().to_vec();
            for &j in &nonbasic_structural {
                if z[j] != 0.0 {
                    let col = column(j);
                    for r in 0..m {
                        rhs[r] -= col[r] * z[j];
                    }
                }
            }
            let matrix: Vec<Vec<f64>> = (0..m)
                .map(|r| basis.iter().map(|&j| column(j)[r]).collect())
                .collect();
            let Some(xb) = solve_linear(matrix, rhs) else {
                continue;
            };
            let mut ok = true;
            for (pos, &j) in basis.iter().enumerate() {
                z[j] = xb[pos];
                let upper = if j < n {
                    lp.upper_bounds()[j]
                } else {
                    f64::INFINITY
                };
                if z[j] < -TOL || z[j] > upper + TOL {
                    ok = false;
                    break;
                }
            }
            if !ok {
                continue;
            }
            let x: Vec<f64> = (0..n).map(|j| z[j]).collect();
            let objective: f64 = x.iter().zip(lp.costs()).map(|(a, b)| a * b).sum();
            if best.as_ref().is_none_or(|(_, b)| objective < b - 1e-12) {
                best = Some((x, objective));
            }
        }
    }
    best
}

/// Brute-force OCAX optimum over all 3^n selections, visited in
/// lexicographic (bundle one, bundle two, none) order so ties resolve the
/// same way as the solver contract promises.
pub fn enumerate_ocax(
    bidders: &[XorBidder],
    items: &[String],
) -> Option<(Vec<Option<Bundle>>, f64)> {
    let n = bidders.len();
    let item_bit = |name: &str| -> u64 {
        items
            .iter()
            .position(|it| it == name)
            .map_or(0, |p| 1u64 << p)
    };
    let mask_of = |bundle: &[String]| -> u64 {
        bundle.iter().map(|name| item_bit(name)).fold(0, |a, b| a | b)
    };
    let full: u64 = if items.is_empty() {
        0
    } else {
        (1u64 << items.len()) - 1
    };

    let mut best: Option<(Vec<Option<Bundle>>, f64)> = None;
    let mut selection = vec![None; n];
    fn walk(
        bidders: &[XorBidder],
        mask_of: &dyn Fn(&[String]) -> u64,
        full: u64,
        idx: usize,
        covered: u64,
        cost: f64,
        selection: &mut Vec<Option<Bundle>>,
        best: &mut Option<(Vec<Option<Bundle>>, f64)>,
    ) {
        if idx == bidders.len() {
            if covered == full && best.as_ref().is_none_or(|(_, b)| cost < *b) {
                *best = Some((selection.clone(), cost));
            }
            return;
        }
        let b = &bidders[idx];
        for choice in [Some(Bundle::One), Some(Bundle::Two), None] {
            selection[idx] = choice;
            match choice {
                Some(which) => {
                    let (bundle, dist, bid) = match which {
                        Bundle::One => (&b.bundle1, &b.distributions[0], b.bids[0]),
                        Bundle::Two => (&b.bundle2, &b.distributions[1], b.bids[1]),
                    };
                    let h = dist.virtual_cost(bid).expect("bid in support");
                    walk(
                        bidders,
                        mask_of,
                        full,
                        idx + 1,
                        covered | mask_of(bundle),
                        cost + h,
                        selection,
                        best,
                    );
                }
                None => walk(bidders, mask_of, full, idx + 1, covered, cost, selection, best),
            }
        }
        selection[idx] = None;
    }
    stack.pop();
    walk(bidders, &mask_of, full, 0, 0, 0.0, &mut selection, &mut best);
    best
}

/// XOR winner induced by re-solving with `bidder`'s costs replaced — the
/// per-point oracle for region partitions.
pub fn enumerate_ocax_with_costs(
    bidders: &[XorBidder],
    items: &[String],
    bidder: usize,
    costs: [f64; 2],
) -> Option<Vec<Option<Bundle>>> {
    let mut modified = bidders.to_vec();
    modified[bidder].bids = costs;
    enumerate_ocax(&modified, items).map(|(sel, _)| sel)
}

/// A random feasible covering LP: every item coverable, demands set inside
/// the feasible region.
pub fn random_covering_lp(rng: &mut ChaCha8Rng, max_sellers: usize, max_items: usize) -> CoveringLp {
    let n = rng.gen_range(2..=max_sellers);
    let m = rng.gen_range(1..=max_items);
    let mut coverage = vec![vec![0u8; n]; m];
    for (j, row) in coverage.iter_mut().enumerate() {
        loop {
            for e in row.iter_mut() {
                *e = u8::from(rng.gen_bool(0.6));
            }
            if row.iter().any(|&e| e == 1) {
                break;
            }
            let _ = j;
        }
    }
    let upper: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..10.0)).collect();
    let demands: Vec<f64> = coverage
        .iter()
        .map(|row| {
            let max: f64 = row
                .iter()
                .zip(&upper)
                .map(|(&e, &u)| f64::from(e) * u)
                .sum();
            rng.gen_range(0.1..0.9) * max
        })
        .collect();
    let costs: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    CoveringLp::new(costs, upper, coverage, demands).unwrap()
}

/// A random regular scenario with independent-uniform sellers. Demands are
/// coverable even at the capacity floors, so every sampled type profile
/// stays feasible.
pub fn random_regular_scenario(
    rng: &mut ChaCha8Rng,
    max_sellers: usize,
    max_items: usize,
) -> Scenario {
    let m = rng.gen_range(1..=max_items);
    let n = rng.gen_range(2..=max_sellers);
    let items: Vec<String> = (0..m).map(|j| format!("I{}", j + 1)).collect();

    let mut bundles: Vec<Vec<String>> = (0..n)
        .map(|_| {
            items
                .iter()
                .filter(|_| rng.gen_bool(0.5))
                .cloned()
                .collect()
        })
        .collect();
    // Every item needs at least one seller, every seller at least one item.
    for (j, item) in items.iter().enumerate() {
        if !bundles.iter().any(|b| b.contains(item)) {
            bundles[j % n].push(item.clone());
        }
    }
    for (i, bundle) in bundles.iter_mut().enumerate() {
        if bundle.is_empty() {
            bundle.push(items[i % m].clone());
        }
    }

    let sellers: Vec<SellerSpec> = bundles
        .into_iter()
        .enumerate()
        .map(|(i, bundle)| {
            let c_lo = rng.gen_range(0.0..5.0);
            let cost_range = Interval::new(c_lo, c_lo + rng.gen_range(2.0..10.0));
            let q_lo = rng.gen_range(5.0..20.0);
            let capacity_range = Interval::new(q_lo, q_lo + rng.gen_range(5.0..30.0));
            SellerSpec {
                id: i + 1,
                bundle,
                cost_range,
                capacity_range,
                distribution: DistributionSpec::independent_uniform(cost_range, capacity_range)
                    .unwrap(),
            }
        })
        .collect();

    let items = items
        .into_iter()
        .map(|id| {
            let floor: f64 = sellers
                .iter()
                .filter(|s| s.bundle.contains(&id))
                .map(|s| s.capacity_range.lo())
                .sum();
            Item {
                id,
                demand: rng.gen_range(0.2..0.8) * floor,
            }
        })
        .collect();

    Scenario { items, sellers }
}

/// Truthful types drawn from the scenario's distributions.
pub fn draw_types(rng: &mut ChaCha8Rng, scenario: &Scenario) -> Vec<(f64, f64)> {
    scenario
        .sellers
        .iter()
        .map(|s| s.distribution.sample(rng))
        .collect()
}

pub fn truthful_bids(scenario: &Scenario, types: &[(f64, f64)]) -> Vec<SellerBid> {
    scenario
        .sellers
        .iter()
        .zip(types)
        .map(|(s, &(c, q))| SellerBid::new(s.id, c, q))
        .collect()
}

/// A random XOR instance over up to `max_bidders` uniform bidders that is
/// guaranteed to have a feasible cover (re-drawn until the oracle finds one).
pub fn random_xor_instance(
    rng: &mut ChaCha8Rng,
    max_bidders: usize,
) -> (Vec<XorBidder>, Vec<String>) {
    loop {
        let m = rng.gen_range(2..=4usize);
        let n = rng.gen_range(2..=max_bidders);
        let items: Vec<String> = (0..m).map(|j| format!("G{}", j + 1)).collect();
        let mut ok = true;
        let bidders: Vec<XorBidder> = (0..n)
            .map(|i| {
                let mut b1 = Vec::new();
                let mut b2 = Vec::new();
                for item in &items {
                    match rng.gen_range(0..3) {
                        0 => b1.push(item.clone()),
                        1 => b2.push(item.clone()),
                        _ => {}
                    }
                }
                if b1.is_empty() || b2.is_empty() {
                    ok = false;
                }
                let hi = rng.gen_range(5.0..15.0);
                let range = Interval::new(0.0, hi);
                let dist = CostDistribution::uniform(range).unwrap();
                let bids = [rng.gen_range(0.0..hi), rng.gen_range(0.0..hi)];
                XorBidder {
                    id: i + 1,
                    bundle1: b1,
                    bundle2: b2,
                    cost_range: range,
                    distributions: [dist.clone(), dist],
                    bids,
                }
            })
            .collect();
        if !ok {
            continue;
        }
        if enumerate_ocax(&bidders, &items).is_some() {
            return (bidders, items);
        }
    }
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
