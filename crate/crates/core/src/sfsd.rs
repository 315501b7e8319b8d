//! Front steepest descent over sparse supports.
//!
//! From an initial list of feasible points, each paired with a super support
//! set, the engine repeatedly (a) takes a common descent step in the
//! subspace of the point's support, and (b) launches exploration steps along
//! partial descent directions for every nonempty subset of the objectives,
//! keeping any point that is not dominated within its own support group.
//! Dominance comparisons never cross support groups, so distinct segments of
//! the front are spanned in parallel.

use nalgebra::DVector;

use crate::constraints::{is_feasible, Polyhedron};
use crate::directions::{common_direction, partial_direction, THETA_TOL};
use crate::error::{Error, Result};
use crate::model::{
    crowding_distance, nondominated_filter, support_of, EvaluatedPoint, FrontList, InsertOutcome,
    SupportSet, SUPPORT_TOL,
};
use crate::objectives::VectorObjective;
use crate::util::Budget;

/// Backtracking line search parameters shared by every Armijo-type search.
#[derive(Debug, Clone, Copy)]
pub struct LineSearchParams {
    /// Backtracking factor.
    pub delta: f64,
    /// Sufficient-decrease coefficient.
    pub gamma: f64,
    /// Largest backtracking exponent; step sizes run over delta^0..delta^h_max.
    pub h_max: u32,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams { delta: 0.5, gamma: 1e-4, h_max: 30 }
    }
}

/// Exploration engine parameters.
#[derive(Debug, Clone)]
pub struct SfsdParams {
    pub line: LineSearchParams,
    /// Negativity threshold below which a direction is pursued.
    pub theta_tol: f64,
    /// Minimum (normalized) crowding distance a point needs inside its
    /// support group to be granted exploration steps; boundary points are
    /// infinite and always pass.
    pub crowding_gate: f64,
    pub budget: Budget,
}

impl Default for SfsdParams {
    fn default() -> Self {
        SfsdParams {
            line: LineSearchParams::default(),
            theta_tol: THETA_TOL,
            crowding_gate: 0.05,
            budget: Budget::unlimited(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SfsdTermination {
    /// Halted because every surviving point is stationary on its support and
    /// exploration produced nothing new.
    Stationary,
    /// Iteration/time budget hit, or the search stalled with a
    /// non-stationary point whose line searches failed.
    BudgetExhausted,
}

#[derive(Debug)]
pub struct SfsdOutcome {
    pub front: FrontList,
    pub termination: SfsdTermination,
    pub iterations: usize,
}

/// Armijo search enforcing componentwise sufficient decrease:
/// the returned step alpha = delta^h satisfies
/// `F(x + alpha v) <= F(x) + gamma * alpha * theta` in every component.
/// Returns `(0.0, None)` when no exponent up to h_max works.
pub fn armijo_full<O: VectorObjective>(
    obj: &O,
    x: &DVector<f64>,
    v: &DVector<f64>,
    theta: f64,
    f_x: &DVector<f64>,
    params: &LineSearchParams,
) -> Result<(f64, Option<(DVector<f64>, DVector<f64>)>)> {
    if theta >= 0.0 {
        return Err(Error::Config(
            "Armijo search requires a strict descent direction (theta < 0)".into(),
        ));
    }
    let mut alpha = 1.0;
    for _ in 0..=params.h_max {
        let candidate = x + v * alpha;
        match obj.evaluate(&candidate) {
            Ok(fc) => {
                let ok = fc
                    .iter()
                    .zip(f_x.iter())
                    .all(|(c, b)| *c <= b + params.gamma * alpha * theta);
                if ok {
                    return Ok((alpha, Some((candidate, fc))));
                }
            }
            Err(e) => log::debug!("line search trial rejected: {e}"),
        }
        alpha *= params.delta;
    }
    Ok((0.0, None))
}

/// Exploration search: the largest step delta^h whose image improves at
/// least one objective against every same-support front member. An empty
/// front accepts the unit step vacuously.
pub fn armijo_explore<O: VectorObjective>(
    obj: &O,
    z: &DVector<f64>,
    v: &DVector<f64>,
    same_support_front: &[DVector<f64>],
    params: &LineSearchParams,
) -> Result<(f64, Option<(DVector<f64>, DVector<f64>)>)> {
    let mut alpha = 1.0;
    for _ in 0..=params.h_max {
        let candidate = z + v * alpha;
        match obj.evaluate(&candidate) {
            Ok(fc) => {
                let ok = same_support_front
                    .iter()
                    .all(|fy| fc.iter().zip(fy.iter()).any(|(c, y)| c < y));
                if ok {
                    return Ok((alpha, Some((candidate, fc))));
                }
            }
            Err(e) => log::debug!("exploration trial rejected: {e}"),
        }
        alpha *= params.delta;
    }
    Ok((0.0, None))
}

/// Nonempty subsets of {0..m-1}, ascending cardinality, lexicographic within.
fn nonempty_subsets(m: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    let mut out = Vec::new();
    for k in 1..=m {
        for combo in (0..m).combinations(k) {
            out.push(combo);
        }
    }
    out
}

struct SnapshotItem {
    id: u64,
    x: DVector<f64>,
    f: DVector<f64>,
    support: SupportSet,
    origin: String,
    crowding: f64,
    dominated: bool,
}

/// Snapshot of the front in processing order: globally nondominated points
/// first, then by support group, descending crowding distance within each.
fn ordered_snapshot(front: &FrontList) -> Vec<SnapshotItem> {
    let entries: Vec<_> = front.entries().collect();
    let values: Vec<Vec<f64>> =
        entries.iter().map(|e| e.point.f.as_slice().to_vec()).collect();
    let nondominated: std::collections::HashSet<usize> = if values.is_empty() {
        Default::default()
    } else {
        nondominated_filter(&values).unwrap_or_default().into_iter().collect()
    };

    let mut items = Vec::with_capacity(entries.len());
    for support in front.supports() {
        let group = front.group(support);
        let group_values: Vec<Vec<f64>> =
            group.iter().map(|e| e.point.f.as_slice().to_vec()).collect();
        let crowd = crowding_distance(&group_values);
        for (k, entry) in group.iter().enumerate() {
            let global_pos = entries.iter().position(|e| e.id == entry.id).unwrap();
            items.push(SnapshotItem {
                id: entry.id,
                x: entry.point.x.clone(),
                f: entry.point.f.clone(),
                support: entry.point.support.clone(),
                origin: entry.origin.clone(),
                crowding: crowd[k],
                dominated: !nondominated.contains(&global_pos),
            });
        }
    }
    items.sort_by(|a, b| {
        a.dominated
            .cmp(&b.dominated)
            .then_with(|| a.support.cmp(&b.support))
            .then_with(|| b.crowding.total_cmp(&a.crowding))
            .then_with(|| a.id.cmp(&b.id))
    });
    items
}

/// Run the exploration engine from an initial front list. Entries must be
/// feasible and paired with a super support set containing their support;
/// infeasible entries are rejected with a report, and an entirely rejected
/// input is an error.
pub fn sfsd_run<O: VectorObjective>(
    x0: &FrontList,
    obj: &O,
    poly: &Polyhedron,
    params: &SfsdParams,
) -> Result<SfsdOutcome> {
    let mut front = FrontList::new();
    let mut rejections = Vec::new();
    for entry in x0.entries() {
        let x = &entry.point.x;
        let j = &entry.point.support;
        let s = j.len();
        let sup = support_of(x.as_slice(), SUPPORT_TOL);
        let report = is_feasible(x, poly, s, 1e-6);
        if !sup.is_subset_of(j) || !report.feasible {
            let why = if sup.is_subset_of(j) {
                format!("{}", report.violations[0])
            } else {
                format!("support {sup} not contained in paired set {j}")
            };
            log::warn!("rejecting initial point (id {}): {why}", entry.id);
            rejections.push(why);
            continue;
        }
        let f = obj.evaluate(x)?;
        front.insert(EvaluatedPoint::new(x.clone(), f, j.clone()), &entry.origin);
    }
    if front.is_empty() {
        return Err(Error::Data(format!(
            "no feasible initial point for the front search ({} rejected)",
            rejections.len()
        )));
    }

    let subsets = nonempty_subsets(obj.count());
    let stopwatch = params.budget.start();
    let mut iterations = 0;
    let mut termination = SfsdTermination::BudgetExhausted;

    loop {
        if stopwatch.exhausted(iterations) {
            break;
        }
        let snapshot = ordered_snapshot(&front);
        let mut all_stationary = true;
        let mut changed = false;

        for item in snapshot {
            if !front.contains_id(item.id) {
                continue; // displaced earlier this sweep
            }
            let grads = obj.jacobian(&item.x)?;
            let common = common_direction(&item.x, &item.support, &grads, poly)?;
            let mut z = item.x.clone();
            let mut fz = item.f.clone();
            if common.theta < params.theta_tol {
                all_stationary = false;
                let (alpha, accepted) =
                    armijo_full(obj, &item.x, &common.v, common.theta, &item.f, &params.line)?;
                if alpha > 0.0 {
                    if let Some((xa, fa)) = accepted {
                        z = xa;
                        fz = fa;
                    }
                }
            }
            let z_id = match front.insert(
                EvaluatedPoint::new(z.clone(), fz.clone(), item.support.clone()),
                &item.origin,
            ) {
                InsertOutcome::Inserted { id, .. } => {
                    changed = true;
                    id
                }
                InsertOutcome::Duplicate => item.id,
                InsertOutcome::Dominated => continue,
            };

            if item.crowding < params.crowding_gate {
                continue;
            }
            let grads_z = obj.jacobian(&z)?;
            for subset in &subsets {
                if !front.contains_id(z_id) {
                    break;
                }
                let pdir = partial_direction(&z, &item.support, &grads_z, subset, poly)?;
                if pdir.theta >= params.theta_tol {
                    continue;
                }
                let group_values: Vec<DVector<f64>> = front
                    .group(&item.support)
                    .iter()
                    .map(|e| e.point.f.clone())
                    .collect();
                let (alpha, accepted) =
                    armijo_explore(obj, &z, &pdir.v, &group_values, &params.line)?;
                if alpha > 0.0 {
                    if let Some((xh, fh)) = accepted {
                        let outcome = front.insert(
                            EvaluatedPoint::new(xh, fh, item.support.clone()),
                            &item.origin,
                        );
                        changed |= matches!(outcome, InsertOutcome::Inserted { .. });
                    }
                }
            }
        }

        iterations += 1;
        if !changed {
            if all_stationary {
                termination = SfsdTermination::Stationary;
            }
            break;
        }
    }

    Ok(SfsdOutcome { front, termination, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraints::{build_polyhedron, ConstraintSpec};
    use crate::model::{ObjectiveId, Sense};
    use crate::objectives::{ObjectiveModel, ObjectiveSet, ObjectiveTerm};
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    struct Quad1D;

    impl VectorObjective for Quad1D {
        fn dim(&self) -> usize {
            1
        }
        fn count(&self) -> usize {
            1
        }
        fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_row_slice(&[x[0] * x[0]]))
        }
        fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
            Ok(DMatrix::from_row_slice(1, 1, &[2.0 * x[0]]))
        }
    }

    #[test]
    fn armijo_full_backtracks_once_on_the_scalar_parabola() {
        // x = 1, v = -2, theta = -2: the unit step overshoots to f = 1 and
        // fails; half step hits the origin and is accepted.
        let obj = Quad1D;
        let x = DVector::from_row_slice(&[1.0]);
        let v = DVector::from_row_slice(&[-2.0]);
        let f = obj.evaluate(&x).unwrap();
        let (alpha, accepted) =
            armijo_full(&obj, &x, &v, -2.0, &f, &LineSearchParams::default()).unwrap();
        assert_eq!(alpha, 0.5);
        let (xa, fa) = accepted.unwrap();
        assert_relative_eq!(xa[0], 0.0);
        assert_relative_eq!(fa[0], 0.0);
    }

    #[test]
    fn armijo_full_accepts_unit_step_on_exact_minimizer() {
        struct HalfSquare;
        impl VectorObjective for HalfSquare {
            fn dim(&self) -> usize {
                1
            }
            fn count(&self) -> usize {
                1
            }
            fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(DVector::from_row_slice(&[0.5 * x[0] * x[0]]))
            }
            fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
                Ok(DMatrix::from_row_slice(1, 1, &[x[0]]))
            }
        }
        let obj = HalfSquare;
        let x = DVector::from_row_slice(&[1.0]);
        let v = DVector::from_row_slice(&[-1.0]);
        let f = obj.evaluate(&x).unwrap();
        let theta = -0.5; // g v + ||v||^2 / 2
        let (alpha, _) =
            armijo_full(&obj, &x, &v, theta, &f, &LineSearchParams::default()).unwrap();
        assert_eq!(alpha, 1.0);
    }

    #[test]
    fn armijo_full_rejects_nonnegative_theta() {
        let obj = Quad1D;
        let x = DVector::from_row_slice(&[1.0]);
        let v = DVector::from_row_slice(&[-1.0]);
        let f = obj.evaluate(&x).unwrap();
        assert!(armijo_full(&obj, &x, &v, 0.0, &f, &LineSearchParams::default()).is_err());
    }

    fn toy_set() -> (ObjectiveModel, Vec<ObjectiveTerm>) {
        let model = ObjectiveModel::new(
            DVector::from_row_slice(&[4.0, 5.0, 1.0]),
            DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 1.0, 6.0])),
            DVector::zeros(3),
            None,
            DVector::zeros(3),
        )
        .unwrap();
        let terms = vec![
            ObjectiveTerm::new(ObjectiveId::V, 1.0),
            ObjectiveTerm::with_sense(ObjectiveId::ER, 1.0, Sense::Minimize),
        ];
        (model, terms)
    }

    fn simplex_poly(n: usize) -> Polyhedron {
        build_polyhedron(&ConstraintSpec::simplex(n), &DVector::zeros(n)).unwrap()
    }

    fn basis(n: usize, i: usize) -> DVector<f64> {
        let mut x = DVector::zeros(n);
        x[i] = 1.0;
        x
    }

    #[test]
    fn explore_accepts_unit_step_against_empty_front() {
        let obj = Quad1D;
        let z = DVector::from_row_slice(&[1.0]);
        let v = DVector::from_row_slice(&[-1.0]);
        let (alpha, _) =
            armijo_explore(&obj, &z, &v, &[], &LineSearchParams::default()).unwrap();
        assert_eq!(alpha, 1.0);
    }

    #[test]
    fn explore_with_self_in_front_uses_any_improving_objective() {
        let (model, terms) = toy_set();
        let obj = ObjectiveSet::new(&model, &terms).unwrap();
        let z = DVector::from_row_slice(&[0.0, 0.5, 0.5]);
        let fz = obj.evaluate(&z).unwrap();
        // Direction toward the third vertex strictly improves the second
        // objective.
        let v = DVector::from_row_slice(&[0.0, -0.5, 0.5]);
        let (alpha, accepted) =
            armijo_explore(&obj, &z, &v, &[fz.clone()], &LineSearchParams::default()).unwrap();
        assert_eq!(alpha, 1.0);
        let (_, fh) = accepted.unwrap();
        assert!(fh[1] < fz[1]);
    }

    #[test]
    fn explore_exhausts_on_uniformly_worse_direction() {
        // Ascent direction from the scalar minimum: every tested step is
        // worse than the incumbent, so the search returns zero.
        let obj = Quad1D;
        let z = DVector::from_row_slice(&[0.0]);
        let fz = obj.evaluate(&z).unwrap();
        let v = DVector::from_row_slice(&[1.0]);
        let (alpha, accepted) =
            armijo_explore(&obj, &z, &v, &[fz], &LineSearchParams::default()).unwrap();
        assert_eq!(alpha, 0.0);
        assert!(accepted.is_none());
    }

    fn toy_initial_front(obj: &ObjectiveSet<'_>) -> FrontList {
        let mut x0 = FrontList::new();
        for i in 0..3 {
            let x = basis(3, i);
            let f = obj.evaluate(&x).unwrap();
            x0.insert(
                EvaluatedPoint::new(x, f, SupportSet::new(vec![i])),
                "basis",
            );
        }
        x0
    }

    #[test]
    fn toy_run_returns_exactly_the_three_vertices() {
        let (model, terms) = toy_set();
        let obj = ObjectiveSet::new(&model, &terms).unwrap();
        let poly = simplex_poly(3);
        let x0 = toy_initial_front(&obj);
        let out = sfsd_run(&x0, &obj, &poly, &SfsdParams::default()).unwrap();
        assert_eq!(out.termination, SfsdTermination::Stationary);
        assert_eq!(out.front.len(), 3);
        let mut fs: Vec<Vec<f64>> = out
            .front
            .entries()
            .map(|e| e.point.f.as_slice().to_vec())
            .collect();
        fs.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let expected = [[0.5, 5.0], [2.0, 4.0], [3.0, 1.0]];
        for (got, want) in fs.iter().zip(expected.iter()) {
            assert!((got[0] - want[0]).abs() < 1e-9);
            assert!((got[1] - want[1]).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_budget_returns_filtered_input() {
        let (model, terms) = toy_set();
        let obj = ObjectiveSet::new(&model, &terms).unwrap();
        let poly = simplex_poly(3);
        let mut x0 = toy_initial_front(&obj);
        // A dominated same-support duplicate is filtered by insertion.
        let x = DVector::from_row_slice(&[0.0, 1.0, 0.0]);
        let worse = DVector::from_row_slice(&[0.6, 5.1]);
        x0.insert(EvaluatedPoint::new(x, worse, SupportSet::new(vec![1])), "junk");
        let params = SfsdParams { budget: Budget::iterations(0), ..Default::default() };
        let out = sfsd_run(&x0, &obj, &poly, &params).unwrap();
        assert_eq!(out.termination, SfsdTermination::BudgetExhausted);
        assert_eq!(out.iterations, 0);
        assert_eq!(out.front.len(), 3);
    }

    #[test]
    fn infeasible_initial_points_are_rejected() {
        let (model, terms) = toy_set();
        let obj = ObjectiveSet::new(&model, &terms).unwrap();
        let poly = simplex_poly(3);
        let mut x0 = FrontList::new();
        let bad = DVector::from_row_slice(&[0.5, 0.5, 0.0]);
        let f = obj.evaluate(&bad).unwrap();
        // Support {0,1} has size two but is paired with a singleton set.
        x0.insert(EvaluatedPoint::new(bad, f, SupportSet::new(vec![0])), "bad");
        assert!(sfsd_run(&x0, &obj, &poly, &SfsdParams::default()).is_err());
    }

    /// Dense sweep oracle for the two-asset mean-variance segment: solve the
    /// scalarized problem on a fine grid and return the achievable front.
    fn two_asset_front_oracle(
        obj: &ObjectiveSet<'_>,
        steps: usize,
    ) -> Vec<(f64, f64)> {
        let mut pts = Vec::new();
        for k in 0..=steps {
            let t = k as f64 / steps as f64;
            let x = DVector::from_row_slice(&[1.0 - t, t]);
            let f = obj.evaluate(&x).unwrap();
            pts.push((f[0], f[1]));
        }
        pts
    }

    #[test]
    fn two_asset_run_spans_the_segment_and_terminates_stationary() {
        // Mean-variance with two assets, s = 2: a single support segment.
        let model = ObjectiveModel::new(
            DVector::from_row_slice(&[0.10, 0.05]),
            DMatrix::from_row_slice(2, 2, &[0.08, 0.01, 0.01, 0.03]),
            DVector::zeros(2),
            None,
            DVector::zeros(2),
        )
        .unwrap();
        let terms = vec![
            ObjectiveTerm::new(ObjectiveId::V, 1.0),
            ObjectiveTerm::new(ObjectiveId::ER, 1.0),
        ];
        let obj = ObjectiveSet::new(&model, &terms).unwrap();
        let poly = simplex_poly(2);
        let mut x0 = FrontList::new();
        let start = DVector::from_row_slice(&[0.5, 0.5]);
        let f = obj.evaluate(&start).unwrap();
        x0.insert(EvaluatedPoint::new(start, f, SupportSet::new(vec![0, 1])), "seed");

        let params = SfsdParams { budget: Budget::iterations(300), ..Default::default() };
        let out = sfsd_run(&x0, &obj, &poly, &params).unwrap();
        assert_eq!(out.termination, SfsdTermination::Stationary, "no natural termination");
        assert!(out.front.len() >= 5, "only {} points", out.front.len());

        // Mutual nondominance within the (single) support group.
        let values: Vec<Vec<f64>> = out
            .front
            .entries()
            .map(|e| e.point.f.as_slice().to_vec())
            .collect();
        assert_eq!(nondominated_filter(&values).unwrap().len(), values.len());

        // Every output is stationary on its support and sits on the true
        // front traced by the dense sweep.
        let oracle = two_asset_front_oracle(&obj, 4000);
        for entry in out.front.entries() {
            let grads = obj.jacobian(&entry.point.x).unwrap();
            let dir =
                common_direction(&entry.point.x, &entry.point.support, &grads, &poly).unwrap();
            assert!(dir.theta >= -1e-5, "theta {}", dir.theta);
            let f = &entry.point.f;
            let near = oracle
                .iter()
                .any(|(a, b)| (a - f[0]).abs() < 5e-4 && (b - f[1]).abs() < 5e-4);
            assert!(near, "point ({}, {}) off the swept front", f[0], f[1]);
        }

        // The chain spans between the minimum-variance point and the
        // maximum-return vertex.
        let min_f1 = out.front.entries().map(|e| e.point.f[0]).fold(f64::INFINITY, f64::min);
        let min_f2 = out.front.entries().map(|e| e.point.f[1]).fold(f64::INFINITY, f64::min);
        let best_f1_oracle = oracle.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let best_f2_oracle = oracle.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
        assert!((min_f1 - best_f1_oracle).abs() < 1e-3);
        assert!((min_f2 - best_f2_oracle).abs() < 1e-3);
    }
}
