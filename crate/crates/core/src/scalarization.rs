//! Weighted-sum scalarization baseline: weight grids spanning the objective
//! simplex and global solution of the scalarized cardinality-constrained
//! problems.
//!
//! Convex-quadratic scalarizations (expected return, variance, ESG) are
//! solved to global optimality by support enumeration under a budget and by
//! best-bound branch-and-bound on support inclusion past it. Nonconvex
//! scalarizations (Sharpe, skewness) fall back to multistart single-objective
//! penalty decomposition and are labeled local.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};

use crate::constraints::{inequality_system, normalize_project, Polyhedron};
use crate::descent::{mospd, MospdParams};
use crate::error::{Error, Result};
use crate::model::{
    nondominated_filter, super_supports, support_of, EvaluatedPoint, FrontList, ObjectiveId,
    SupportSet, SUPPORT_TOL,
};
use crate::objectives::{
    eval_objectives, ObjectiveModel, ObjectiveTerm, VectorObjective,
};
use crate::qp::{self, QpProblem};
use crate::util::stream_rng;

/// Nonnegative weights over the objectives, summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(pub Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|&w| w < 0.0) {
            return Err(Error::Config("scalarization weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "scalarization weights must sum to one (got {sum})"
            )));
        }
        Ok(WeightVector(weights))
    }

    /// Two-objective weight from the single trade-off parameter of
    /// `f1 + lambda * f2`.
    pub fn from_tradeoff(lambda: f64) -> Self {
        WeightVector(vec![1.0 / (1.0 + lambda), lambda / (1.0 + lambda)])
    }
}

/// Simplex-lattice weight design: the coarsest lattice with at least `count`
/// points, including every vertex. Deterministic order (lexicographically
/// descending lattice coordinates).
pub fn lambda_grid(m: usize, count: usize) -> Result<Vec<WeightVector>> {
    if m == 0 || count < m {
        return Err(Error::Config("weight grid needs count >= m >= 1".into()));
    }
    let mut divisions = 1usize;
    while lattice_size(divisions, m) < count {
        divisions += 1;
    }
    let mut grid = Vec::with_capacity(lattice_size(divisions, m));
    let mut partial = Vec::with_capacity(m);
    compositions(divisions, m, &mut partial, &mut grid);
    Ok(grid
        .into_iter()
        .map(|ks| {
            WeightVector(ks.iter().map(|&k| k as f64 / divisions as f64).collect())
        })
        .collect())
}

fn lattice_size(divisions: usize, m: usize) -> usize {
    // C(divisions + m - 1, m - 1)
    let mut acc = 1usize;
    for i in 0..m - 1 {
        acc = acc.saturating_mul(divisions + i + 1) / (i + 1);
    }
    acc
}

fn compositions(rest: usize, slots: usize, partial: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if slots == 1 {
        let mut full = partial.clone();
        full.push(rest);
        out.push(full);
        return;
    }
    for k in (0..=rest).rev() {
        partial.push(k);
        compositions(rest - k, slots - 1, partial, out);
        partial.pop();
    }
}

/// A solved scalarization.
#[derive(Debug, Clone)]
pub struct ScalarSolution {
    pub x: DVector<f64>,
    /// Scalar objective value (internal minimization convention).
    pub value: f64,
    /// True when the solve is certified globally optimal.
    pub global: bool,
    /// Size-s super support the solution is associated with.
    pub support: SupportSet,
}

/// The scalarized quadratic: sum of lambda-weighted internal objectives,
/// valid only for selections without Sharpe or skewness.
fn scalar_quadratic(
    model: &ObjectiveModel,
    terms: &[ObjectiveTerm],
    weights: &WeightVector,
) -> Result<(DMatrix<f64>, DVector<f64>)> {
    let n = model.dim();
    let mut p = DMatrix::zeros(n, n);
    let mut q = DVector::zeros(n);
    for (term, &w) in terms.iter().zip(weights.0.iter()) {
        let factor = w * term.scale * term.sign();
        match term.id {
            ObjectiveId::V => p += &model.q * factor,
            ObjectiveId::ER => q += &model.c * factor,
            ObjectiveId::ESG => q += &model.esg * factor,
            ObjectiveId::SR | ObjectiveId::SW => {
                return Err(Error::Config(
                    "scalar quadratic undefined for Sharpe/skewness selections".into(),
                ))
            }
        }
    }
    Ok((p, q))
}

/// Solve the quadratic over the polyhedron with the given primal coordinates
/// pinned to zero.
fn solve_pinned(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    poly: &Polyhedron,
    pinned_zero: &[bool],
) -> Result<(DVector<f64>, f64)> {
    let n = poly.n;
    let dim = poly.var_dim;
    let mut p_full = DMatrix::zeros(dim, dim);
    let mut q_full = DVector::zeros(dim);
    for i in 0..n {
        q_full[i] = q[i];
        for j in 0..n {
            p_full[(i, j)] = p[(i, j)];
        }
    }
    let (g, h) = inequality_system(poly);
    let mut prob = QpProblem::new(p_full, q_full, g, h, poly.a_eq.clone(), poly.b_eq.clone());
    for (i, &pin) in pinned_zero.iter().enumerate() {
        if pin {
            prob.fixed[i] = Some(0.0);
        }
    }
    let sol = qp::solve(&prob)?;
    Ok((poly.primal(&sol.z), sol.value))
}

fn better_candidate(
    value: f64,
    support: &SupportSet,
    best: &Option<(f64, SupportSet, DVector<f64>)>,
) -> bool {
    match best {
        None => true,
        Some((bv, bs, _)) => {
            value < bv - 1e-9 || (value <= bv + 1e-9 && support < bs)
        }
    }
}

/// Super support the solution is reported on: the support itself when full,
/// otherwise its lexicographically smallest size-s completion.
fn canonical_support(x: &DVector<f64>, s: usize) -> Result<SupportSet> {
    let sets = super_supports(x.as_slice(), s, SUPPORT_TOL)?;
    Ok(sets.into_iter().next().expect("at least one completion"))
}

fn solve_convex_by_enumeration(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    poly: &Polyhedron,
    s: usize,
) -> Result<ScalarSolution> {
    use itertools::Itertools;
    let n = poly.n;
    let mut best: Option<(f64, SupportSet, DVector<f64>)> = None;
    for combo in (0..n).combinations(s) {
        let support = SupportSet::new(combo);
        let pinned: Vec<bool> = (0..n).map(|i| !support.contains(i)).collect();
        match solve_pinned(p, q, poly, &pinned) {
            Ok((x, value)) => {
                if better_candidate(value, &support, &best) {
                    best = Some((value, support, x));
                }
            }
            Err(Error::Infeasible(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    let (value, support, x) =
        best.ok_or_else(|| Error::Infeasible("no feasible support".into()))?;
    Ok(ScalarSolution { x, value, global: true, support })
}

fn solve_convex_by_branch_and_bound(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    poly: &Polyhedron,
    s: usize,
    node_budget: usize,
) -> Result<ScalarSolution> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    #[derive(PartialEq)]
    struct Node {
        bound: f64,
        order: usize,
        fixed_out: Vec<bool>,
        fixed_in: Vec<usize>,
        relaxed: DVector<f64>,
    }
    impl Eq for Node {}
    impl PartialOrd for Node {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Node {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.bound.total_cmp(&other.bound).then(self.order.cmp(&other.order))
        }
    }

    let n = poly.n;
    let mut solves = 0usize;
    let mut heap: BinaryHeap<Reverse<Node>> = BinaryHeap::new();
    let mut counter = 0usize;
    let mut best: Option<(f64, SupportSet, DVector<f64>)> = None;
    let mut exhausted = false;

    let root_pin = vec![false; n];
    let (x0, bound0) = solve_pinned(p, q, poly, &root_pin)?;
    solves += 1;
    heap.push(Reverse(Node {
        bound: bound0,
        order: counter,
        fixed_out: root_pin,
        fixed_in: Vec::new(),
        relaxed: x0,
    }));

    while let Some(Reverse(node)) = heap.pop() {
        if let Some((bv, _, _)) = &best {
            // Near-ties are still explored so the lexicographic tie rule
            // sees every optimal support.
            if node.bound > bv + 1e-9 {
                break;
            }
        }
        if solves >= node_budget {
            exhausted = true;
            if best.is_none() {
                // Best-effort incumbent: restrict to the s largest relaxed
                // weights and solve once.
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| {
                    node.relaxed[b].abs().total_cmp(&node.relaxed[a].abs()).then(a.cmp(&b))
                });
                let support = SupportSet::new(order.into_iter().take(s).collect());
                let pinned: Vec<bool> = (0..n).map(|i| !support.contains(i)).collect();
                if let Ok((x, value)) = solve_pinned(p, q, poly, &pinned) {
                    best = Some((value, support, x));
                }
            }
            break;
        }
        let free_support = support_of(node.relaxed.as_slice(), SUPPORT_TOL);
        if free_support.len() <= s {
            // Relaxed solution already satisfies the cardinality bound: the
            // node is solved exactly by its relaxation.
            let support = canonical_support(&node.relaxed, s)?;
            if better_candidate(node.bound, &support, &best) {
                best = Some((node.bound, support, node.relaxed.clone()));
            }
            continue;
        }
        if node.fixed_in.len() == s {
            // Everything outside the fixed-in set must vanish.
            let pinned: Vec<bool> = (0..n).map(|i| !node.fixed_in.contains(&i)).collect();
            match solve_pinned(p, q, poly, &pinned) {
                Ok((x, value)) => {
                    solves += 1;
                    let support = SupportSet::new(node.fixed_in.clone());
                    if better_candidate(value, &support, &best) {
                        best = Some((value, support, x));
                    }
                }
                Err(Error::Infeasible(_)) => {}
                Err(e) => return Err(e),
            }
            continue;
        }
        // Branch on the largest relaxed weight outside the fixed-in set.
        let mut pick = None;
        for i in 0..n {
            if node.fixed_out[i] || node.fixed_in.contains(&i) {
                continue;
            }
            let w = node.relaxed[i].abs();
            if pick.map(|(_, bw)| w > bw).unwrap_or(true) {
                pick = Some((i, w));
            }
        }
        let Some((branch, _)) = pick else {
            continue;
        };
        // Include branch: the relaxation is unchanged.
        let mut fixed_in = node.fixed_in.clone();
        fixed_in.push(branch);
        counter += 1;
        heap.push(Reverse(Node {
            bound: node.bound,
            order: counter,
            fixed_out: node.fixed_out.clone(),
            fixed_in,
            relaxed: node.relaxed.clone(),
        }));
        // Exclude branch: re-solve the relaxation.
        let mut fixed_out = node.fixed_out.clone();
        fixed_out[branch] = true;
        match solve_pinned(p, q, poly, &fixed_out) {
            Ok((x, bound)) => {
                solves += 1;
                counter += 1;
                heap.push(Reverse(Node {
                    bound,
                    order: counter,
                    fixed_out,
                    fixed_in: node.fixed_in.clone(),
                    relaxed: x,
                }));
            }
            Err(Error::Infeasible(_)) => {}
            Err(e) => return Err(e),
        }
    }

    let (value, support, x) =
        best.ok_or_else(|| Error::Infeasible("branch-and-bound found no feasible leaf".into()))?;
    Ok(ScalarSolution { x, value, global: !exhausted, support })
}

/// Scalar objective over a weighted sum of the internal objectives
/// (single-objective view for the penalty decomposition fallback).
struct WeightedScalar<'a> {
    model: &'a ObjectiveModel,
    terms: &'a [ObjectiveTerm],
    weights: &'a WeightVector,
}

impl VectorObjective for WeightedScalar<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }
    fn count(&self) -> usize {
        1
    }
    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let f = eval_objectives(self.model, self.terms, x)?;
        let v = f.iter().zip(self.weights.0.iter()).map(|(a, w)| a * w).sum();
        Ok(DVector::from_row_slice(&[v]))
    }
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let jac = crate::objectives::grad_objectives(self.model, self.terms, x)?;
        let mut row = DMatrix::zeros(1, x.len());
        for (r, &w) in self.weights.0.iter().enumerate() {
            for c in 0..x.len() {
                row[(0, c)] += w * jac[(r, c)];
            }
        }
        Ok(row)
    }
}

/// Number of multistarts for nonconvex scalarizations.
const NONCONVEX_MULTISTARTS: usize = 5;

/// Globally solve one scalarized problem. Convex-quadratic selections use
/// support enumeration when C(n, s) fits the budget and branch-and-bound
/// otherwise; selections with Sharpe or skewness run multistart penalty
/// decomposition and return a local solution.
pub fn scalarize_solve(
    model: &ObjectiveModel,
    terms: &[ObjectiveTerm],
    weights: &WeightVector,
    poly: &Polyhedron,
    s: usize,
    budget: usize,
    seed: u64,
) -> Result<ScalarSolution> {
    if weights.0.len() != terms.len() {
        return Err(Error::Config("weight vector length must match objectives".into()));
    }
    let convex = terms
        .iter()
        .all(|t| matches!(t.id, ObjectiveId::ER | ObjectiveId::V | ObjectiveId::ESG));
    if convex {
        let (p, q) = scalar_quadratic(model, terms, weights)?;
        let n = poly.n;
        if supports_fit_budget(n, s, budget) {
            solve_convex_by_enumeration(&p, &q, poly, s)
        } else {
            solve_convex_by_branch_and_bound(&p, &q, poly, s, budget)
        }
    } else {
        let scalar = WeightedScalar { model, terms, weights };
        let mut rng = stream_rng(seed, "scal-multistart", 0);
        let mut best: Option<(f64, SupportSet, DVector<f64>)> = None;
        let params = MospdParams::default();
        let mut successes = 0;
        let mut attempts = 0;
        while successes < NONCONVEX_MULTISTARTS && attempts < 4 * NONCONVEX_MULTISTARTS {
            attempts += 1;
            let start = random_sparse_start(&mut rng, poly.n, s);
            let res = match mospd(&scalar, &start, poly, s, &params, None) {
                Ok(r) => r,
                Err(e) => {
                    log::debug!("scalarization multistart failed: {e}");
                    continue;
                }
            };
            successes += 1;
            let x = res.reported_point(s);
            let value = scalar.evaluate(&x)?[0];
            let support = canonical_support(&x, s)?;
            if better_candidate(value, &support, &best) {
                best = Some((value, support, x));
            }
        }
        let (value, support, x) = best.ok_or_else(|| {
            Error::Numerical("all scalarization multistarts failed".into())
        })?;
        Ok(ScalarSolution { x, value, global: false, support })
    }
}

fn supports_fit_budget(n: usize, s: usize, budget: usize) -> bool {
    let k = s.min(n - s.min(n));
    let _ = k;
    let mut acc: usize = 1;
    let kk = s.min(n - s);
    for i in 0..kk {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc > budget {
            return false;
        }
    }
    acc <= budget
}

fn random_sparse_start(rng: &mut rand_chacha::ChaCha8Rng, n: usize, s: usize) -> DVector<f64> {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut x = DVector::zeros(n);
    for &i in idx.iter().take(s) {
        x[i] = -(rng.gen::<f64>()).ln();
    }
    normalize_project(&x, s)
}

/// Scalarization front: solve every weight in the grid, pair each solution
/// with its super support, and keep the mutually nondominated ones. Per-
/// weight failures are logged and skipped.
pub struct ScalarizationFront {
    pub front: FrontList,
    /// Weight vector that produced each surviving entry, keyed by entry id.
    pub weights: BTreeMap<u64, Vec<f64>>,
    /// True when every solved weight was certified global.
    pub all_global: bool,
}

pub fn scalarization_front(
    model: &ObjectiveModel,
    terms: &[ObjectiveTerm],
    poly: &Polyhedron,
    s: usize,
    grid: &[WeightVector],
    budget: usize,
    seed: u64,
) -> Result<ScalarizationFront> {
    if grid.is_empty() {
        return Err(Error::Config("scalarization grid is empty".into()));
    }
    let mut solutions: Vec<(ScalarSolution, Vec<f64>)> = Vec::new();
    let mut all_global = true;
    for (k, weights) in grid.iter().enumerate() {
        match scalarize_solve(model, terms, weights, poly, s, budget, seed ^ k as u64) {
            Ok(sol) => {
                all_global &= sol.global;
                solutions.push((sol, weights.0.clone()));
            }
            Err(e) => {
                log::warn!("scalarization weight {k} failed: {e}");
                all_global = false;
            }
        }
    }
    if solutions.is_empty() {
        return Err(Error::Numerical("every scalarized solve failed".into()));
    }
    let values: Vec<Vec<f64>> = solutions
        .iter()
        .map(|(sol, _)| Ok(eval_objectives(model, terms, &sol.x)?.as_slice().to_vec()))
        .collect::<Result<_>>()?;
    let keep = nondominated_filter(&values)?;
    let mut front = FrontList::new();
    let mut weight_map = BTreeMap::new();
    for pos in keep {
        let (sol, lam) = &solutions[pos];
        let f = DVector::from_vec(values[pos].clone());
        if let crate::model::InsertOutcome::Inserted { id, .. } = front.insert(
            EvaluatedPoint::new(sol.x.clone(), f, sol.support.clone()),
            "scal",
        ) {
            weight_map.insert(id, lam.clone());
        }
    }
    Ok(ScalarizationFront { front, weights: weight_map, all_global })
}
