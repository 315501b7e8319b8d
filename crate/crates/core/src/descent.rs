//! Initialization-phase descent solvers: multi-objective projected gradient
//! (the inner workhorse), iterative hard thresholding, sparse penalty
//! decomposition, and the hybrid cascade of the last two.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::constraints::{self, sparse_project, Polyhedron};
use crate::directions::{
    common_direction, l_stationary_direction, DirectionStatus, THETA_TOL,
};
use crate::error::{Error, Result};
use crate::model::{nondominated_filter, support_of, SupportSet, SUPPORT_TOL};
use crate::objectives::VectorObjective;
use crate::sfsd::{armijo_full, LineSearchParams};

/// Penalty decomposition parameters.
#[derive(Debug, Clone)]
pub struct MospdParams {
    /// Initial penalty weight.
    pub tau0: f64,
    /// Penalty growth factor per outer iteration.
    pub sigma: f64,
    /// Initial stationarity tolerance for the inner solver.
    pub eps0: f64,
    /// Multiplicative decay of the stationarity tolerance.
    pub eps_decay: f64,
    /// Stop once ||x - y|| falls below this gap.
    pub xy_gap_stop: f64,
    /// Outer iteration cap; tau reaches ~1e16 at the default, beyond which
    /// the penalty subproblems are numerically stiff in double precision.
    pub max_outer: usize,
    /// Inner projected-gradient iteration cap.
    pub mopg_max_iter: usize,
    /// Cap on alternate-minimization passes per outer iteration.
    pub alt_max_iter: usize,
    pub line: LineSearchParams,
}

impl Default for MospdParams {
    fn default() -> Self {
        MospdParams {
            tau0: 1e-2,
            sigma: 2.0,
            eps0: 1e-3,
            eps_decay: 0.9,
            xy_gap_stop: 1e-3,
            max_outer: 60,
            mopg_max_iter: 500,
            alt_max_iter: 50,
            line: LineSearchParams::default(),
        }
    }
}

impl MospdParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau0 > 0.0 && self.sigma > 1.0 && self.eps0 > 0.0) {
            return Err(Error::Config(
                "penalty parameters require tau0 > 0, sigma > 1, eps0 > 0".into(),
            ));
        }
        if !(self.eps_decay > 0.0 && self.eps_decay < 1.0) {
            return Err(Error::Config("eps decay must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentStatus {
    LStationary,
    MolzStationary,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct DescentResult {
    pub x: DVector<f64>,
    /// Sparse companion iterate (penalty decomposition only).
    pub y: Option<DVector<f64>>,
    pub status: DescentStatus,
    pub iterations: usize,
}

impl DescentResult {
    /// The point handed to downstream phases: when x itself violates the
    /// cardinality bound, the normalized repair of y is reported instead.
    /// Cardinality-feasible points are still passed through the repair,
    /// which zeroes sub-tolerance residue (so equal solutions from
    /// different solvers compare as exact duplicates) and perturbs genuine
    /// weights only at the 1e-12 level.
    pub fn reported_point(&self, s: usize) -> DVector<f64> {
        if support_of(self.x.as_slice(), SUPPORT_TOL).len() <= s {
            return constraints::normalize_project(&self.x, s);
        }
        match &self.y {
            Some(y) => constraints::normalize_project(y, s),
            None => constraints::normalize_project(&self.x, s),
        }
    }
}

/// One row of a solver trace (written as CSV when tracing is enabled).
#[derive(Debug, Clone)]
pub struct TraceRow {
    pub iteration: usize,
    pub theta: f64,
    pub gap: f64,
    pub tau: f64,
    pub eps: f64,
}

/// Multi-objective projected gradient over the convex part of the feasible
/// set (no support mask): full-space common descent directions with an
/// Armijo search, until the point is eps-stationary or the iteration cap is
/// hit.
pub fn mopg<O: VectorObjective>(
    obj: &O,
    x0: &DVector<f64>,
    poly: &Polyhedron,
    eps: f64,
    max_iter: usize,
    line: &LineSearchParams,
) -> Result<DVector<f64>> {
    if eps <= 0.0 {
        return Err(Error::Config("stationarity tolerance must be positive".into()));
    }
    let report = constraints::is_feasible(x0, poly, poly.n, 1e-6);
    if !report.feasible {
        return Err(Error::Infeasible(format!(
            "projected-gradient start infeasible: {}",
            report.violations[0]
        )));
    }
    let full = SupportSet::full(poly.n);
    let mut x = x0.clone();
    let mut f = obj.evaluate(&x)?;
    for _ in 0..max_iter {
        let grads = obj.jacobian(&x)?;
        let dir = common_direction(&x, &full, &grads, poly)?;
        if dir.theta >= -eps {
            break;
        }
        let (alpha, accepted) = armijo_full(obj, &x, &dir.v, dir.theta, &f, line)?;
        match accepted {
            Some((xa, fa)) if alpha > 0.0 => {
                x = xa;
                f = fa;
            }
            _ => break, // line search exhausted; keep the last iterate
        }
    }
    Ok(x)
}

/// Multi-objective iterative hard thresholding: full steps along the
/// L-stationarity direction until its value clears `theta_tol`.
#[allow(clippy::too_many_arguments)]
pub fn moiht<O: VectorObjective>(
    obj: &O,
    x0: &DVector<f64>,
    poly: &Polyhedron,
    s: usize,
    l: f64,
    theta_tol: f64,
    max_iter: usize,
    dir_budget: usize,
) -> Result<DescentResult> {
    let report = constraints::is_feasible(x0, poly, s, 1e-6);
    if !report.feasible {
        return Err(Error::Infeasible(format!(
            "hard-thresholding start infeasible: {}",
            report.violations[0]
        )));
    }
    let mut x = x0.clone();
    for iter in 0..max_iter {
        let grads = obj.jacobian(&x)?;
        let dir = l_stationary_direction(&x, l, &grads, poly, s, dir_budget)?;
        if dir.status == DirectionStatus::Infeasible {
            return Err(Error::Infeasible(
                "no feasible L-stationarity subproblem at the current point".into(),
            ));
        }
        if dir.theta >= theta_tol {
            return Ok(DescentResult {
                x,
                y: None,
                status: DescentStatus::LStationary,
                iterations: iter,
            });
        }
        x += &dir.v;
    }
    Ok(DescentResult {
        x,
        y: None,
        status: DescentStatus::BudgetExhausted,
        iterations: max_iter,
    })
}

/// The objective augmented with a quadratic anchor penalty: every component
/// gains (tau/2)||x - anchor||^2.
pub struct PenaltyObjective<'a, O: VectorObjective> {
    pub inner: &'a O,
    pub anchor: DVector<f64>,
    pub tau: f64,
}

impl<O: VectorObjective> VectorObjective for PenaltyObjective<'_, O> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn count(&self) -> usize {
        self.inner.count()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let mut f = self.inner.evaluate(x)?;
        let pen = 0.5 * self.tau * (x - &self.anchor).norm_squared();
        for v in f.iter_mut() {
            *v += pen;
        }
        Ok(f)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        let mut jac = self.inner.jacobian(x)?;
        let shift = (x - &self.anchor) * self.tau;
        for r in 0..jac.nrows() {
            for c in 0..jac.ncols() {
                jac[(r, c)] += shift[c];
            }
        }
        Ok(jac)
    }
}

/// Stationarity measure of an objective at `u` over the convex set.
fn full_space_theta<O: VectorObjective>(
    obj: &O,
    u: &DVector<f64>,
    poly: &Polyhedron,
) -> Result<f64> {
    let grads = obj.jacobian(u)?;
    let dir = common_direction(u, &SupportSet::full(poly.n), &grads, poly)?;
    Ok(dir.theta)
}

/// Multi-objective sparse penalty decomposition. Alternates a projected
/// gradient run on the penalized objective with a sparse projection, growing
/// the penalty and shrinking the inner tolerance each outer iteration, until
/// the pair gap ||x - y|| closes.
pub fn mospd<O: VectorObjective>(
    obj: &O,
    x0: &DVector<f64>,
    poly: &Polyhedron,
    s: usize,
    params: &MospdParams,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<DescentResult> {
    params.validate()?;
    let report = constraints::is_feasible(x0, poly, s, 1e-6);
    if !report.feasible {
        return Err(Error::Infeasible(format!(
            "penalty-decomposition start infeasible: {}",
            report.violations[0]
        )));
    }
    let f0 = obj.evaluate(x0)?;
    let y0 = x0.clone();
    let mut x = x0.clone();
    let mut y = y0.clone();
    let mut tau = params.tau0;
    let mut eps = params.eps0;

    for outer in 0..params.max_outer {
        // Level-set safeguard: warm start from the current pair only if a
        // trial inner run stays below the initial objective values
        // (componentwise).
        let pen = PenaltyObjective { inner: obj, anchor: y.clone(), tau };
        let x_trial = mopg(&pen, &x, poly, eps, params.mopg_max_iter, &params.line)?;
        let q_trial = pen.evaluate(&x_trial)?;
        let (mut u, mut v) = if q_trial.iter().zip(f0.iter()).all(|(a, b)| a <= b) {
            (x.clone(), y.clone())
        } else {
            (x0.clone(), y0.clone())
        };

        // Alternate minimization at fixed tau.
        for _ in 0..params.alt_max_iter {
            let pen_v = PenaltyObjective { inner: obj, anchor: v.clone(), tau };
            if full_space_theta(&pen_v, &u, poly)? >= -eps {
                break;
            }
            u = mopg(&pen_v, &u, poly, eps, params.mopg_max_iter, &params.line)?;
            v = sparse_project(&u, s);
        }

        x = u;
        y = v;
        let gap = (&x - &y).norm();
        if let Some(t) = trace.as_deref_mut() {
            let pen_y = PenaltyObjective { inner: obj, anchor: y.clone(), tau };
            t.push(TraceRow {
                iteration: outer,
                theta: full_space_theta(&pen_y, &x, poly)?,
                gap,
                tau,
                eps,
            });
        }
        if gap <= params.xy_gap_stop {
            return Ok(DescentResult {
                x,
                y: Some(y),
                status: DescentStatus::MolzStationary,
                iterations: outer + 1,
            });
        }
        tau *= params.sigma;
        eps *= params.eps_decay;
    }
    Ok(DescentResult {
        x,
        y: Some(y),
        status: DescentStatus::BudgetExhausted,
        iterations: params.max_outer,
    })
}

/// Hybrid cascade: hard thresholding first, penalty decomposition from its
/// endpoint, both endpoints merged and dominance-filtered. Per-start
/// failures are logged and skipped; one failure does not abort the batch.
/// The budget is checked between starts only.
#[allow(clippy::too_many_arguments)]
pub fn mohyb<O: VectorObjective>(
    obj: &O,
    starts: &[DVector<f64>],
    poly: &Polyhedron,
    s: usize,
    l: f64,
    moiht_max_iter: usize,
    dir_budget: usize,
    params: &MospdParams,
    budget: &crate::util::Budget,
) -> Result<Vec<DescentResult>> {
    let stopwatch = budget.start();
    let mut results: Vec<DescentResult> = Vec::new();
    for (k, start) in starts.iter().enumerate() {
        if stopwatch.exhausted(k) {
            log::info!("hybrid cascade budget exhausted after {k} starts");
            break;
        }
        match moiht(obj, start, poly, s, l, THETA_TOL, moiht_max_iter, dir_budget) {
            Ok(iht) => {
                match mospd(obj, &iht.x, poly, s, params, None) {
                    Ok(pd) => results.push(pd),
                    Err(e) => log::warn!("penalty decomposition failed from start {k}: {e}"),
                }
                results.push(iht);
            }
            Err(e) => {
                log::warn!("hard thresholding failed from start {k}: {e}");
                // Still try the penalty decomposition from the raw start.
                match mospd(obj, start, poly, s, params, None) {
                    Ok(pd) => results.push(pd),
                    Err(e) => log::warn!("penalty decomposition failed from start {k}: {e}"),
                }
            }
        }
    }
    if results.is_empty() {
        return Ok(results);
    }
    let values: Vec<Vec<f64>> = results
        .iter()
        .map(|r| Ok(obj.evaluate(&r.reported_point(s))?.as_slice().to_vec()))
        .collect::<Result<_>>()?;
    let keep = nondominated_filter(&values)?;
    let mut filtered = Vec::with_capacity(keep.len());
    for (pos, r) in results.into_iter().enumerate() {
        if keep.contains(&pos) {
            filtered.push(r);
        }
    }
    Ok(filtered)
}

/// Upper bound on the gradient Lipschitz constants of the selected
/// objectives. Linear and quadratic objectives have closed forms; Sharpe and
/// skewness are estimated by sampling gradient differences over feasible
/// pairs (callers apply their own safety factor on top).
pub fn lipschitz_bound(
    model: &crate::objectives::ObjectiveModel,
    terms: &[crate::objectives::ObjectiveTerm],
    rng: &mut impl Rng,
) -> Result<f64> {
    use crate::model::ObjectiveId;
    let n = model.dim();
    let lambda_max = model
        .q
        .clone()
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .fold(0.0_f64, |a, &b| a.max(b));
    let mut bound = 0.0_f64;
    let mut needs_sampling = false;
    for term in terms {
        match term.id {
            ObjectiveId::ER | ObjectiveId::ESG => {}
            ObjectiveId::V => bound = bound.max(term.scale * lambda_max),
            ObjectiveId::SR | ObjectiveId::SW => needs_sampling = true,
        }
    }
    if needs_sampling {
        let sampled: Vec<crate::objectives::ObjectiveTerm> = terms
            .iter()
            .copied()
            .filter(|t| matches!(t.id, ObjectiveId::SR | ObjectiveId::SW))
            .collect();
        let mut worst = 0.0_f64;
        let mut attempts = 0;
        let mut collected = 0;
        while collected < 1000 && attempts < 5000 {
            attempts += 1;
            let mut a = DVector::from_fn(n, |_, _| -(rng.gen::<f64>()).ln());
            a /= a.sum();
            let mut b = DVector::from_fn(n, |_, _| -(rng.gen::<f64>()).ln());
            b /= b.sum();
            let ga = match crate::objectives::grad_objectives(model, &sampled, &a) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let gb = match crate::objectives::grad_objectives(model, &sampled, &b) {
                Ok(g) => g,
                Err(_) => continue,
            };
            let dx = (&a - &b).norm();
            if dx < 1e-9 {
                continue;
            }
            for r in 0..sampled.len() {
                let diff = (ga.row(r) - gb.row(r)).norm();
                worst = worst.max(diff / dx);
            }
            collected += 1;
        }
        bound = bound.max(worst);
    }
    if bound <= 0.0 {
        // All-linear selections: any positive weight works.
        bound = 1.0;
    }
    Ok(bound)
}
