//! Direction-finding subproblems: constrained common and partial descent
//! directions (min over d of the worst-case directional derivative plus a
//! quadratic regularizer), and the cardinality-constrained subproblem whose
//! zero value defines L-stationarity.
//!
//! All three reduce to convex QPs through an epigraph scalar: minimize
//! `t + (w/2)||d||^2` subject to `g_j'd <= t` for the selected objectives,
//! the polyhedron rows anchored at the current point, and a coordinate mask.
//! The optimal value theta is nonpositive (d = 0 is always feasible) and
//! zero exactly at stationary points.

use nalgebra::{DMatrix, DVector};

use crate::constraints::Polyhedron;
use crate::error::{Error, Result};
use crate::model::{support_of, SupportSet, SUPPORT_TOL};
use crate::qp::{self, QpProblem};

/// Negativity threshold used to discriminate stationary points.
pub const THETA_TOL: f64 = -1e-7;

/// Default enumeration budget for the L-stationarity subproblem; above it
/// the candidate-pool heuristic is used and results are labeled approximate.
pub const L_STATIONARY_BUDGET: usize = 5000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DirectionStatus {
    /// A strict descent direction was found.
    Optimal,
    /// theta is zero within solver tolerance: the point is stationary.
    Stationary,
    /// No feasible direction subproblem (L-stationarity candidates only).
    Infeasible,
}

#[derive(Debug, Clone)]
pub struct DirectionResult {
    /// Optimal value of the direction subproblem; always <= 0.
    pub theta: f64,
    /// Direction over the portfolio weights (length n).
    pub v: DVector<f64>,
    pub status: DirectionStatus,
    /// False when the cardinality subproblem used the candidate-pool
    /// heuristic instead of full support enumeration.
    pub exact: bool,
}

/// Assembled direction QP: quadratic weight, gradient rows and the
/// polyhedron rows evaluated at the anchor, plus per-coordinate fixings of
/// the direction.
#[derive(Debug, Clone)]
pub struct DirectionQp {
    pub weight: f64,
    /// Gradient rows over the lifted variable space.
    grads: DMatrix<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    a_eq: DMatrix<f64>,
    b_eq: DVector<f64>,
    fixed: Vec<Option<f64>>,
    var_dim: usize,
    primal_dim: usize,
}

impl DirectionQp {
    /// Build the subproblem at a feasible anchor. `fixed_primal` pins
    /// direction coordinates over the portfolio weights; turnover
    /// auxiliaries always stay free.
    pub fn at_anchor(
        grads: &DMatrix<f64>,
        x: &DVector<f64>,
        poly: &Polyhedron,
        fixed_primal: &[Option<f64>],
        weight: f64,
    ) -> Result<Self> {
        let n = poly.n;
        if x.len() != n || grads.ncols() != n || fixed_primal.len() != n {
            return Err(Error::Config("direction subproblem dimension mismatch".into()));
        }
        if !(weight > 0.0) {
            return Err(Error::Config("quadratic weight must be positive".into()));
        }
        let var_dim = poly.var_dim;
        let z = poly.lift(x);

        let lifted_grads = DMatrix::from_fn(grads.nrows(), var_dim, |r, c| {
            if c < n {
                grads[(r, c)]
            } else {
                0.0
            }
        });

        // General rows anchored at z, then finite bounds as rows on d.
        let mut rows: Vec<DVector<f64>> = Vec::new();
        let mut rhs: Vec<f64> = Vec::new();
        for r in 0..poly.a.nrows() {
            let a_row = poly.a.row(r).transpose().into_owned();
            let anchored = poly.b[r] - poly.a.row(r).dot(&z.transpose());
            rows.push(a_row);
            rhs.push(anchored);
        }
        for i in 0..var_dim {
            if poly.lower[i].is_finite() {
                let mut row = DVector::zeros(var_dim);
                row[i] = -1.0;
                rows.push(row);
                rhs.push(z[i] - poly.lower[i]);
            }
            if poly.upper[i].is_finite() {
                let mut row = DVector::zeros(var_dim);
                row[i] = 1.0;
                rows.push(row);
                rhs.push(poly.upper[i] - z[i]);
            }
        }
        let g = DMatrix::from_fn(rows.len(), var_dim, |r, c| rows[r][c]);
        let h = DVector::from_vec(rhs);

        let a_eq = poly.a_eq.clone();
        let b_eq = DVector::from_fn(poly.b_eq.len(), |r, _| {
            poly.b_eq[r] - poly.a_eq.row(r).dot(&z.transpose())
        });

        let mut fixed = vec![None; var_dim];
        fixed[..n].copy_from_slice(fixed_primal);

        Ok(DirectionQp {
            weight,
            grads: lifted_grads,
            g,
            h,
            a_eq,
            b_eq,
            fixed,
            var_dim,
            primal_dim: n,
        })
    }

    /// Unconstrained subproblem over the gradient columns (closed-form
    /// sanity checks and tests).
    pub fn free(grads: &DMatrix<f64>, weight: f64) -> Self {
        let dim = grads.ncols();
        DirectionQp {
            weight,
            grads: grads.clone(),
            g: DMatrix::zeros(0, dim),
            h: DVector::zeros(0),
            a_eq: DMatrix::zeros(0, dim),
            b_eq: DVector::zeros(0),
            fixed: vec![None; dim],
            var_dim: dim,
            primal_dim: dim,
        }
    }
}

/// Solve the epigraph reformulation of the min-max direction problem.
pub fn solve_minmax_qp(dqp: &DirectionQp) -> Result<DirectionResult> {
    let (_, res) = solve_minmax_qp_raw(dqp)?;
    Ok(res)
}

/// As [`solve_minmax_qp`], additionally returning the unclipped optimal
/// value. Candidate supports in the L-stationarity subproblem are compared
/// on raw values: relocating mass off the current support carries a positive
/// quadratic cost that must not be clipped away.
fn solve_minmax_qp_raw(dqp: &DirectionQp) -> Result<(f64, DirectionResult)> {
    let nd = dqp.var_dim;
    let nv = nd + 1; // direction coordinates plus the epigraph scalar
    let m = dqp.grads.nrows();
    if m == 0 {
        return Err(Error::Config("direction subproblem needs at least one gradient".into()));
    }

    let mut p = DMatrix::zeros(nv, nv);
    for i in 0..nd {
        p[(i, i)] = dqp.weight;
    }
    let mut q = DVector::zeros(nv);
    q[nd] = 1.0;

    let mi = m + dqp.g.nrows();
    let mut g = DMatrix::zeros(mi, nv);
    let mut h = DVector::zeros(mi);
    for j in 0..m {
        for c in 0..nd {
            g[(j, c)] = dqp.grads[(j, c)];
        }
        g[(j, nd)] = -1.0;
        h[j] = 0.0;
    }
    for r in 0..dqp.g.nrows() {
        for c in 0..nd {
            g[(m + r, c)] = dqp.g[(r, c)];
        }
        h[m + r] = dqp.h[r];
    }

    let me = dqp.a_eq.nrows();
    let mut a_eq = DMatrix::zeros(me, nv);
    for r in 0..me {
        for c in 0..nd {
            a_eq[(r, c)] = dqp.a_eq[(r, c)];
        }
    }

    let mut prob = QpProblem::new(p, q, g, h, a_eq, dqp.b_eq.clone());
    prob.fixed[..nd].copy_from_slice(&dqp.fixed);

    let sol = qp::solve(&prob)?;
    // d = 0 is feasible with value 0, so the optimum is nonpositive; clip
    // solver noise.
    let theta = sol.value.min(0.0);
    let v = DVector::from_fn(dqp.primal_dim, |i, _| sol.z[i]);
    let status = if theta >= -1e-9 {
        DirectionStatus::Stationary
    } else {
        DirectionStatus::Optimal
    };
    Ok((sol.value, DirectionResult { theta, v, status, exact: true }))
}

/// Constrained common descent direction at `x` in the subspace of the super
/// support set `j`: coordinates outside `j` are pinned to zero.
pub fn common_direction(
    x: &DVector<f64>,
    j: &SupportSet,
    grads: &DMatrix<f64>,
    poly: &Polyhedron,
) -> Result<DirectionResult> {
    let fixed = mask_from_support(j, poly.n);
    let dqp = DirectionQp::at_anchor(grads, x, poly, &fixed, 1.0)?;
    solve_minmax_qp(&dqp)
}

/// Constrained partial descent direction: worst case over the objectives in
/// `subset` only. Equals the common direction when `subset` covers all
/// objectives.
pub fn partial_direction(
    z: &DVector<f64>,
    j: &SupportSet,
    grads: &DMatrix<f64>,
    subset: &[usize],
    poly: &Polyhedron,
) -> Result<DirectionResult> {
    if subset.is_empty() {
        return Err(Error::Config("objective subset must be nonempty".into()));
    }
    let sub = DMatrix::from_fn(subset.len(), grads.ncols(), |r, c| grads[(subset[r], c)]);
    let fixed = mask_from_support(j, poly.n);
    let dqp = DirectionQp::at_anchor(&sub, z, poly, &fixed, 1.0)?;
    solve_minmax_qp(&dqp)
}

fn mask_from_support(j: &SupportSet, n: usize) -> Vec<Option<f64>> {
    (0..n)
        .map(|i| if j.contains(i) { None } else { Some(0.0) })
        .collect()
}

/// Direction subproblem with quadratic weight `l` over the full cardinality-
/// constrained set: the point `x + d` must have at most `s` nonzeros. Solved
/// by support enumeration when C(n, s) fits in `budget`, otherwise by a
/// deterministic candidate pool (completions of the current support plus
/// supports built from top-magnitude coordinates of the gradient steps).
pub fn l_stationary_direction(
    x: &DVector<f64>,
    l: f64,
    grads: &DMatrix<f64>,
    poly: &Polyhedron,
    s: usize,
    budget: usize,
) -> Result<DirectionResult> {
    use itertools::Itertools;
    let n = poly.n;
    if !(l > 0.0) {
        return Err(Error::Config("quadratic weight L must be positive".into()));
    }
    if s >= n {
        // Cardinality is vacuous: plain constrained subproblem, no mask.
        let dqp = DirectionQp::at_anchor(grads, x, poly, &vec![None; n], l)?;
        return solve_minmax_qp(&dqp);
    }

    let exact = binomial_capped(n, s, budget + 1) <= budget;
    let mut candidates: std::collections::BTreeSet<SupportSet> = Default::default();
    if exact {
        for combo in (0..n).combinations(s) {
            candidates.insert(SupportSet::new(combo));
        }
    } else {
        let base = support_of(x.as_slice(), SUPPORT_TOL);
        if base.len() <= s {
            // A bounded slice of the completions of the current support.
            let zeros = base.complement(n);
            let missing = s - base.len();
            for combo in zeros.into_iter().combinations(missing).take(200) {
                let mut idx = base.as_slice().to_vec();
                idx.extend(combo);
                candidates.insert(SupportSet::new(idx));
            }
        }
        // Gradient-step candidates: mean gradient and each single objective.
        let m = grads.nrows();
        let mut steps: Vec<DVector<f64>> = Vec::new();
        let mean = DVector::from_fn(n, |i, _| {
            (0..m).map(|j| grads[(j, i)]).sum::<f64>() / m as f64
        });
        steps.push(x - mean / l);
        for j in 0..m {
            steps.push(x - grads.row(j).transpose() / l);
        }
        for w in steps {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b)));
            let pool: Vec<usize> = order.into_iter().take((2 * s).min(n)).collect();
            if binomial_capped(pool.len(), s, 2001) <= 2000 {
                for combo in pool.iter().copied().combinations(s) {
                    candidates.insert(SupportSet::new(combo));
                }
            } else {
                candidates.insert(SupportSet::new(pool.into_iter().take(s).collect()));
            }
        }
    }

    let mut best: Option<(f64, DirectionResult)> = None;
    for cand in &candidates {
        // Off-candidate coordinates of x + d are forced to zero.
        let fixed: Vec<Option<f64>> = (0..n)
            .map(|i| if cand.contains(i) { None } else { Some(-x[i]) })
            .collect();
        let dqp = match DirectionQp::at_anchor(grads, x, poly, &fixed, l) {
            Ok(d) => d,
            Err(_) => continue,
        };
        match solve_minmax_qp_raw(&dqp) {
            Ok((raw, res)) => {
                // Candidates are compared on raw values: staying on the
                // current support costs zero while relocating carries a
                // positive quadratic cost. Ties keep the lexicographically
                // smallest support (iteration order).
                let better = match &best {
                    None => true,
                    Some((val, _)) => raw < val - 1e-12,
                };
                if better {
                    best = Some((raw, res));
                }
            }
            Err(Error::Infeasible(_)) => continue,
            Err(e) => {
                log::warn!("L-stationary candidate {cand} failed: {e}");
                continue;
            }
        }
    }

    match best {
        Some((raw, mut res)) => {
            res.exact = exact;
            // The stay-put candidate is always in the pool, so the true
            // optimum is nonpositive.
            res.theta = raw.min(0.0);
            res.status = if res.theta >= -1e-9 {
                DirectionStatus::Stationary
            } else {
                DirectionStatus::Optimal
            };
            if res.status == DirectionStatus::Stationary && raw > 1e-9 {
                // Numerical ties resolved toward a relocation candidate must
                // not report a spurious move.
                res.v.fill(0.0);
            }
            Ok(res)
        }
        None => Ok(DirectionResult {
            theta: 0.0,
            v: DVector::zeros(n),
            status: DirectionStatus::Infeasible,
            exact,
        }),
    }
}

/// Binomial coefficient saturating at `cap`.
fn binomial_capped(n: usize, k: usize, cap: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
        if acc >= cap {
            return cap;
        }
    }
    acc
}
