//! Exact solver for the bounded-variable covering linear program used by
//! winner determination:
//!
//! ```text
//! min  h . x    subject to    M x >= D,    0 <= x <= q
//! ```
//!
//! `M` is the 0/1 bundle-membership matrix, `D` the demand vector, `q` the
//! reported capacities. Instances are small (a handful of sellers and items),
//! so the solver favors determinism over speed: a dense bounded-variable
//! primal simplex with Bland's anti-cycling rule, ties always broken by the
//! lowest variable index. Two solves of the same instance return identical
//! vectors — the payment integral depends on that, because it treats the
//! allocation-versus-cost curve as a single-valued function.
//!
//! Feasibility needs no phase-one: setting every seller to full capacity is
//! feasible exactly when `M q >= D`, which scenario validation guarantees, so
//! the simplex starts there with the surplus variables basic.

use serde::Serialize;

use crate::{Error, Result};

/// Feasibility and optimality tolerance, also the guarantee on the returned
/// solution: bounds and demand rows hold within this slack.
pub const FEASIBILITY_TOL: f64 = 1e-9;

/// The covering LP data. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct CoveringLp {
    costs: Vec<f64>,
    upper_bounds: Vec<f64>,
    /// rows = items, columns = sellers, entries in {0, 1}.
    coverage: Vec<Vec<u8>>,
    demands: Vec<f64>,
}

impl CoveringLp {
    pub fn new(
        costs: Vec<f64>,
        upper_bounds: Vec<f64>,
        coverage: Vec<Vec<u8>>,
        demands: Vec<f64>,
    ) -> Result<Self> {
        let n = costs.len();
        let m = demands.len();
        if upper_bounds.len() != n {
            return Err(Error::InvalidScenario(format!(
                "{} upper bounds for {n} cost coefficients",
                upper_bounds.len()
            )));
        }
        if coverage.len() != m || coverage.iter().any(|row| row.len() != n) {
            return Err(Error::InvalidScenario(format!(
                "coverage matrix must be {m} x {n}"
            )));
        }
        if coverage.iter().flatten().any(|&e| e > 1) {
            return Err(Error::InvalidScenario(
                "coverage entries must be 0 or 1".into(),
            ));
        }
        if upper_bounds.iter().any(|&u| !(u >= 0.0) || !u.is_finite()) {
            return Err(Error::InvalidScenario(
                "upper bounds must be finite and non-negative".into(),
            ));
        }
        if demands.iter().any(|&d| !(d >= 0.0) || !d.is_finite()) {
            return Err(Error::InvalidScenario(
                "demands must be finite and non-negative".into(),
            ));
        }
        if costs.iter().any(|&c| !c.is_finite()) {
            return Err(Error::InvalidScenario("costs must be finite".into()));
        }
        Ok(CoveringLp {
            costs,
            upper_bounds,
            coverage,
            demands,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.costs.len()
    }

    pub fn n_constraints(&self) -> usize {
        self.demands.len()
    }

    pub fn costs(&self) -> &[f64] {
        &self.costs
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper_bounds
    }

    pub fn coverage(&self) -> &[Vec<u8>] {
        &self.coverage
    }

    pub fn demands(&self) -> &[f64] {
        &self.demands
    }
}

/// Solver output. When optimal, `x` satisfies the bounds and demand rows
/// within [`FEASIBILITY_TOL`] and `objective = h . x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum LpSolution {
    Optimal { x: Vec<f64>, objective: f64 },
    Infeasible,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpSolution::Optimal { .. })
    }

    pub fn x(&self) -> Option<&[f64]> {
        match self {
            LpSolution::Optimal { x, .. } => Some(x),
            LpSolution::Infeasible => None,
        }
    }

    pub fn objective(&self) -> Option<f64> {
        match self {
            LpSolution::Optimal { objective, .. } => Some(*objective),
            LpSolution::Infeasible => None,
        }
    }
}

/// Solves the covering LP. Deterministic: identical inputs produce an
/// identical solution vector.
pub fn solve(problem: &CoveringLp) -> Result<LpSolution> {
    Simplex::new(problem).run()
}

/// Solves the LP with coefficient `seller` replaced by `cost`, leaving every
/// other coefficient untouched. This is the re-solve primitive behind the
/// allocation curve; a distinct entry point so callers cannot accidentally
/// perturb anything else.
pub fn solve_with_modified_cost(
    problem: &CoveringLp,
    seller: usize,
    cost: f64,
) -> Result<LpSolution> {
    let mut modified = problem.clone();
    modified.costs[seller] = cost;
    solve(&modified)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Bound {
    Lower,
    Upper,
}

/// Dense bounded-variable primal simplex. Variables 0..n are structural
/// (bounds [0, q_i]); variables n..n+m are surplus (bounds [0, inf), column
/// -e_i), turning `M x >= D` into `M x - s = D`.
struct Simplex<'a> {
    problem: &'a CoveringLp,
    n: usize,
    m: usize,
    /// basis[r] = variable index basic in row r.
    basis: Vec<usize>,
    /// For nonbasic variables: which bound they rest at.
    at: Vec<Bound>,
    in_basis: Vec<bool>,
    /// Current value of every variable.
    vals: Vec<f64>,
}

impl<'a> Simplex<'a> {
    fn new(problem: &'a CoveringLp) -> Self {
        let n = problem.n_vars();
        let m = problem.n_constraints();
        Simplex {
            problem,
            n,
            m,
            basis: (n..n + m).collect(),
            at: vec![Bound::Upper; n + m],
            in_basis: vec![false; n + m],
            vals: vec![0.0; n + m],
        }
    }

    fn cost_of(&self, j: usize) -> f64 {
        if j < self.n {
            self.problem.costs[j]
        } else {
            0.0
        }
    }

    fn lower_of(&self, _j: usize) -> f64 {
        0.0
    }

    fn upper_of(&self, j: usize) -> f64 {
        if j < self.n {
            self.problem.upper_bounds[j]
        } else {
            f64::INFINITY
        }
    }

    /// Column j of the equality system [M | -I].
    fn column(&self, j: usize) -> Vec<f64> {
        let mut col = vec![0.0; self.m];
        if j < self.n {
            for (r, row) in self.problem.coverage.iter().enumerate() {
                col[r] = f64::from(row[j]);
            }
        } else {
            col[j - self.n] = -1.0;
        }
        col
    }

    fn basis_matrix(&self) -> Vec<Vec<f64>> {
        let cols: Vec<Vec<f64>> = self.basis.iter().map(|&j| self.column(j)).collect();
        (0..self.m)
            .map(|r| cols.iter().map(|c| c[r]).collect())
            .collect()
    }

    fn run(mut self) -> Result<LpSolution> {
        // Start: all structural variables at their upper bound, surplus
        // basic. Feasible iff M q >= D, which is also necessary.
        for j in 0..self.n {
            self.at[j] = Bound::Upper;
            self.vals[j] = self.upper_of(j);
        }
        for r in 0..self.m {
            let j = self.n + r;
            self.in_basis[j] = true;
            let supply: f64 = self
                .problem
                .coverage[r]
                .iter()
                .zip(&self.problem.upper_bounds)
                .map(|(&e, &u)| f64::from(e) * u)
                .sum();
            self.vals[j] = supply - self.problem.demands[r];
            if self.vals[j] < -FEASIBILITY_TOL {
                return Ok(LpSolution::Infeasible);
            }
        }

        let cap = 10 * (self.n + self.m) * (self.n + self.m);
        for _ in 0..=cap {
            let y = self.dual_solution()?;
            let Some((entering, dir)) = self.pick_entering(&y) else {
                return Ok(self.extract());
            };
            self.pivot(entering, dir)?;
        }
        Err(Error::IterationCap { cap })
    }

    /// y solving B^T y = c_B.
    fn dual_solution(&self) -> Result<Vec<f64>> {
        let b = self.basis_matrix();
        let bt: Vec<Vec<f64>> = (0..self.m)
            .map(|r| (0..self.m).map(|c| b[c][r]).collect())
            .collect();
        let rhs: Vec<f64> = self.basis.iter().map(|&j| self.cost_of(j)).collect();
        gauss_solve(bt, rhs).ok_or(Error::IterationCap {
            cap: 0, // singular basis: cannot happen for a valid pivot sequence
        })
    }

    /// Bland's rule: lowest-index nonbasic variable with an improving
    /// reduced cost, moving up from its lower bound or down from its upper.
    fn pick_entering(&self, y: &[f64]) -> Option<(usize, f64)> {
        for j in 0..self.n + self.m {
            if self.in_basis[j] {
                continue;
            }
            let col = self.column(j);
            let reduced: f64 =
                self.cost_of(j) - y.iter().zip(&col).map(|(a, b)| a * b).sum::<f64>();
            match self.at[j] {
                Bound::Lower if reduced < -FEASIBILITY_TOL => return Some((j, 1.0)),
                Bound::Upper if reduced > FEASIBILITY_TOL => return Some((j, -1.0)),
                _ => {}
            }
        }
        None
    }

    fn pivot(&mut self, entering: usize, dir: f64) -> Result<()> {
        let col = self.column(entering);
        let w = gauss_solve(self.basis_matrix(), col).ok_or(Error::IterationCap { cap: 0 })?;

        // Step length limits: each basic variable must stay inside its
        // bounds; the entering variable may at most flip to its other bound.
        let mut t_best = self.upper_of(entering) - self.lower_of(entering);
        let mut leave: Option<usize> = None; // row index
        let mut leave_var = entering; // variable index, for Bland tie-breaks
        let mut leave_to = Bound::Lower;
        for r in 0..self.m {
            let b = self.basis[r];
            let rate = -dir * w[r];
            let (limit, to) = if rate < -FEASIBILITY_TOL {
                ((self.vals[b] - self.lower_of(b)) / -rate, Bound::Lower)
            } else if rate > FEASIBILITY_TOL && self.upper_of(b).is_finite() {
                ((self.upper_of(b) - self.vals[b]) / rate, Bound::Upper)
            } else {
                continue;
            };
            let limit = limit.max(0.0);
            if limit < t_best - FEASIBILITY_TOL
                || (limit < t_best + FEASIBILITY_TOL && b < leave_var)
            {
                t_best = limit.min(t_best);
                leave = Some(r);
                leave_var = b;
                leave_to = to;
            }
        }

        if !t_best.is_finite() {
            // Cannot happen: the structural variables are boxed and the
            // surplus columns never improve the objective without them.
            return Err(Error::IterationCap { cap: 0 });
        }

        match leave {
            None => {
                // Bound flip: the entering variable crosses to its other bound.
                for r in 0..self.m {
                    self.vals[self.basis[r]] -= dir * t_best * w[r];
                }
                self.at[entering] = match self.at[entering] {
                    Bound::Lower => Bound::Upper,
                    Bound::Upper => Bound::Lower,
                };
                self.vals[entering] = match self.at[entering] {
                    Bound::Lower => self.lower_of(entering),
                    Bound::Upper => self.upper_of(entering),
                };
            }
            Some(r) => {
                for rr in 0..self.m {
                    self.vals[self.basis[rr]] -= dir * t_best * w[rr];
                }
                self.vals[entering] += dir * t_best;
                let out = self.basis[r];
                self.in_basis[out] = false;
                self.at[out] = leave_to;
                // Snap to the exact bound to stop drift accumulating.
                self.vals[out] = match leave_to {
                    Bound::Lower => self.lower_of(out),
                    Bound::Upper => self.upper_of(out),
                };
                self.basis[r] = entering;
                self.in_basis[entering] = true;
            }
        }
        Ok(())
    }

    /// Re-derives the basic values from the final basis with a fresh solve,
    /// so the output is a function of the final basis alone, not of the
    /// pivot path taken to reach it.
    fn extract(&mut self) -> LpSolution {
        let mut rhs = self.problem.demands.clone();
        for j in 0..self.n + self.m {
            if self.in_basis[j] {
                continue;
            }
            let col = self.column(j);
            for r in 0..self.m {
                rhs[r] -= col[r] * self.vals[j];
            }
        }
        if let Some(xb) = gauss_solve(self.basis_matrix(), rhs) {
            for (r, v) in xb.into_iter().enumerate() {
                self.vals[self.basis[r]] = v;
            }
        }
        let x: Vec<f64> = (0..self.n)
            .map(|j| self.vals[j].clamp(0.0, self.upper_of(j)))
            .collect();
        let objective = x
            .iter()
            .zip(&self.problem.costs)
            .map(|(a, b)| a * b)
            .sum();
        LpSolution::Optimal { x, objective }
    }
}

/// Gaussian elimination with partial pivoting. Returns None on a singular
/// matrix.
fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .expect("finite matrix entries")
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    for col in (0..n).rev() {
        let mut v = b[col];
        for k in col + 1..n {
            v -= a[col][k] * b[k];
        }
        b[col] = v / a[col][col];
    }
    Some(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Single-item instance with the costs and capacities of the classic
    /// four-supplier example.
    pub(crate) fn four_supplier_lp() -> CoveringLp {
        CoveringLp::new(
            vec![10.0, 8.0, 12.0, 6.0],
            vec![500.0, 500.0, 800.0, 500.0],
            vec![vec![1, 1, 1, 1]],
            vec![1000.0],
        )
        .unwrap()
    }

    #[test]
    fn four_supplier_optimum_fills_with_cheapest_pair() {
        let solution = solve(&four_supplier_lp()).unwrap();
        assert_eq!(
            solution,
            LpSolution::Optimal {
                x: vec![0.0, 500.0, 0.0, 500.0],
                objective: 7000.0
            }
        );
    }

    #[test]
    fn zero_demand_procures_nothing() {
        let lp = CoveringLp::new(
            vec![3.0, 1.0],
            vec![10.0, 10.0],
            vec![vec![1, 1], vec![1, 0]],
            vec![0.0, 0.0],
        )
        .unwrap();
        let solution = solve(&lp).unwrap();
        assert_eq!(solution.x().unwrap(), &[0.0, 0.0]);
        assert_eq!(solution.objective().unwrap(), 0.0);
    }

    #[test]
    fn example3_shape_instance_matches_hand_optimum() {
        // Coverage rows for items A, B, C, D over sellers with bundles
        // {A,B}, {B}, {B,C,D}, {A,B,C,D}. The optimum splits seller 4
        // across the A and C/D rows; optimality is certified by the duals
        // y_A = 2, y_B = 2, y_C + y_D = 1 with all rows tight.
        let lp = CoveringLp::new(
            vec![4.0, 2.0, 3.0, 5.0],
            vec![100.0, 100.0, 150.0, 120.0],
            vec![
                vec![1, 0, 0, 1],
                vec![1, 1, 1, 1],
                vec![0, 0, 1, 1],
                vec![0, 0, 1, 1],
            ],
            vec![100.0, 250.0, 100.0, 100.0],
        )
        .unwrap();
        let solution = solve(&lp).unwrap();
        assert_eq!(solution.x().unwrap(), &[50.0, 100.0, 50.0, 50.0]);
        assert_eq!(solution.objective().unwrap(), 800.0);
    }

    #[test]
    fn infeasible_demand_is_detected() {
        let lp = CoveringLp::new(
            vec![1.0],
            vec![50.0],
            vec![vec![1]],
            vec![100.0],
        )
        .unwrap();
        assert_eq!(solve(&lp).unwrap(), LpSolution::Infeasible);
    }

    #[test]
    fn modified_cost_changes_the_cheapest_pair() {
        let lp = four_supplier_lp();
        let solution = solve_with_modified_cost(&lp, 3, 13.0).unwrap();
        assert_eq!(solution.x().unwrap(), &[500.0, 500.0, 0.0, 0.0]);
        assert_eq!(solution.objective().unwrap(), 9000.0);
    }

    #[test]
    fn modified_cost_with_same_value_is_bitwise_identical() {
        let lp = four_supplier_lp();
        let a = solve(&lp).unwrap();
        let b = solve_with_modified_cost(&lp, 2, 12.0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn dominant_seller_covers_alone() {
        let lp = CoveringLp::new(
            vec![10.0, 8.0, 0.5],
            vec![400.0, 400.0, 1000.0],
            vec![vec![1, 1, 1]],
            vec![1000.0],
        )
        .unwrap();
        let solution = solve(&lp).unwrap();
        assert_eq!(solution.x().unwrap(), &[0.0, 0.0, 1000.0]);
    }

    #[test]
    fn repeated_solves_are_identical() {
        let lp = CoveringLp::new(
            vec![2.0, 2.0, 2.0, 2.0],
            vec![60.0, 60.0, 60.0, 60.0],
            vec![vec![1, 1, 0, 1], vec![0, 1, 1, 1]],
            vec![100.0, 100.0],
        )
        .unwrap();
        let a = solve(&lp).unwrap();
        let b = solve(&lp).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn no_constraints_sends_everything_to_zero() {
        let lp = CoveringLp::new(vec![5.0, 7.0], vec![10.0, 20.0], vec![], vec![]).unwrap();
        let solution = solve(&lp).unwrap();
        assert_eq!(solution.x().unwrap(), &[0.0, 0.0]);
    }

    #[test]
    fn negative_cost_pushes_to_upper_bound() {
        let lp = CoveringLp::new(
            vec![-1.0, 2.0],
            vec![30.0, 50.0],
            vec![vec![1, 1]],
            vec![40.0],
        )
        .unwrap();
        let solution = solve(&lp).unwrap();
        assert_eq!(solution.x().unwrap(), &[30.0, 10.0]);
        assert_eq!(solution.objective().unwrap(), -10.0);
    }
}
