//! Constraint specifications, the convex polyhedron they induce, feasibility
//! tests and the sparse projections used for repair.
//!
//! The polyhedron covers the convex part of the feasible set: simplex,
//! investment bounds, beta window, sector exposure and (linearized) turnover.
//! Turnover introduces auxiliary variables; they are bookkeeping only and are
//! excluded from support counting and from direction-subproblem masks.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{support_of, ROW_TOL, SUPPORT_TOL};
use crate::qp::{self, QpProblem};

/// Sector exposure window over a set of asset indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Sector {
    pub indices: Vec<usize>,
    pub min: f64,
    pub max: f64,
}

/// Turnover limit around a previous allocation.
#[derive(Debug, Clone, PartialEq)]
pub struct Turnover {
    pub x0: Vec<f64>,
    pub tau: f64,
}

/// Declarative constraint specification attached to an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub beta_window: Option<(f64, f64)>,
    pub sectors: Vec<Sector>,
    pub turnover: Option<Turnover>,
}

impl ConstraintSpec {
    /// Simplex-only specification: 0 <= x <= 1, weights summing to one.
    pub fn simplex(n: usize) -> Self {
        ConstraintSpec {
            lower: vec![0.0; n],
            upper: vec![1.0; n],
            beta_window: None,
            sectors: Vec::new(),
            turnover: None,
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.lower.len() != n || self.upper.len() != n {
            return Err(Error::Config("bound vectors must have length n".into()));
        }
        for i in 0..n {
            if self.lower[i] < 0.0 {
                return Err(Error::Config(format!(
                    "lower bound {i} is negative (short selling is not supported)"
                )));
            }
            if self.lower[i] > self.upper[i] {
                return Err(Error::Config(format!("bounds crossed at index {i}")));
            }
        }
        let lo_sum: f64 = self.lower.iter().sum();
        let hi_sum: f64 = self.upper.iter().sum();
        if lo_sum > 1.0 + 1e-12 || hi_sum < 1.0 - 1e-12 {
            return Err(Error::Config(format!(
                "bounds incompatible with the simplex: sum(lower)={lo_sum}, sum(upper)={hi_sum}"
            )));
        }
        if let Some((lo, hi)) = self.beta_window {
            if lo < 0.0 || lo > hi {
                return Err(Error::Config(format!("invalid beta window ({lo}, {hi})")));
            }
        }
        for (k, sector) in self.sectors.iter().enumerate() {
            if sector.min > sector.max {
                return Err(Error::Config(format!("sector {k}: min exceeds max")));
            }
            if sector.indices.iter().any(|&i| i >= n) {
                return Err(Error::Config(format!("sector {k}: index out of range")));
            }
        }
        if let Some(t) = &self.turnover {
            if t.x0.len() != n {
                return Err(Error::Config("turnover anchor must have length n".into()));
            }
            if t.tau < 0.0 {
                return Err(Error::Config("turnover limit must be nonnegative".into()));
            }
        }
        Ok(())
    }
}

/// One violated linear condition, for structured reports.
#[derive(Debug, Clone)]
pub struct Violation {
    pub label: String,
    pub lhs: f64,
    pub rhs: f64,
    /// rhs - lhs for inequalities; negative when violated.
    pub slack: f64,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}: lhs {:.6e}, rhs {:.6e}, slack {:.3e}",
            self.label, self.lhs, self.rhs, self.slack
        )
    }
}

/// Feasibility test outcome with per-row diagnostics.
#[derive(Debug, Clone)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub violations: Vec<Violation>,
}

/// The convex feasible polyhedron in lifted variables (portfolio weights
/// first, turnover auxiliaries after). Immutable after build.
#[derive(Debug, Clone)]
pub struct Polyhedron {
    /// General inequality rows over lifted variables.
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    /// Variable bounds in the lifted space.
    pub lower: DVector<f64>,
    pub upper: DVector<f64>,
    pub var_dim: usize,
    /// Portfolio weights occupy coordinates 0..n.
    pub n: usize,
    row_labels: Vec<String>,
    turnover_anchor: Option<DVector<f64>>,
}

impl Polyhedron {
    pub fn num_aux(&self) -> usize {
        self.var_dim - self.n
    }

    /// Lift a primal weight vector into the full variable space, choosing
    /// the minimal turnover auxiliaries y_i = |x_i - x0_i|.
    pub fn lift(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut z = DVector::zeros(self.var_dim);
        for i in 0..self.n {
            z[i] = x[i];
        }
        if let Some(x0) = &self.turnover_anchor {
            for i in 0..self.n {
                z[self.n + i] = (x[i] - x0[i]).abs();
            }
        }
        z
    }

    pub fn primal(&self, z: &DVector<f64>) -> DVector<f64> {
        z.rows(0, self.n).into_owned()
    }

    /// All row/bound/equality violations of a lifted point beyond `tol`.
    pub fn violations(&self, z: &DVector<f64>, tol: f64) -> Vec<Violation> {
        let mut out = Vec::new();
        for r in 0..self.a.nrows() {
            let lhs = self.a.row(r).dot(&z.transpose());
            let slack = self.b[r] - lhs;
            if slack < -tol {
                out.push(Violation {
                    label: self.row_labels[r].clone(),
                    lhs,
                    rhs: self.b[r],
                    slack,
                });
            }
        }
        for r in 0..self.a_eq.nrows() {
            let lhs = self.a_eq.row(r).dot(&z.transpose());
            let gap = (lhs - self.b_eq[r]).abs();
            if gap > tol {
                out.push(Violation {
                    label: format!("equality {r}"),
                    lhs,
                    rhs: self.b_eq[r],
                    slack: -gap,
                });
            }
        }
        for i in 0..self.var_dim {
            if z[i] < self.lower[i] - tol {
                out.push(Violation {
                    label: format!("lower bound {i}"),
                    lhs: z[i],
                    rhs: self.lower[i],
                    slack: z[i] - self.lower[i],
                });
            }
            if z[i] > self.upper[i] + tol {
                out.push(Violation {
                    label: format!("upper bound {i}"),
                    lhs: z[i],
                    rhs: self.upper[i],
                    slack: self.upper[i] - z[i],
                });
            }
        }
        out
    }

    /// Total constraint violation of a primal point (used by constrained
    /// domination in the evolutionary phase).
    pub fn violation_amount(&self, x: &DVector<f64>, tol: f64) -> f64 {
        self.violations(&self.lift(x), tol)
            .iter()
            .map(|v| v.slack.abs())
            .sum()
    }
}

/// Assemble the polyhedron from a specification. The beta window needs the
/// model's beta vector. Feasibility of the region is certified at build
/// time.
pub fn build_polyhedron(spec: &ConstraintSpec, beta: &DVector<f64>) -> Result<Polyhedron> {
    let n = spec.lower.len();
    spec.validate(n)?;
    let aux = if spec.turnover.is_some() { n + 1 } else { 0 };
    let var_dim = n + if spec.turnover.is_some() { n } else { 0 };
    let _ = aux;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    let mut push = |row: Vec<f64>, b: f64, label: String| {
        rows.push(row);
        rhs.push(b);
        labels.push(label);
    };

    if let Some((beta_min, beta_max)) = spec.beta_window {
        if beta.len() != n {
            return Err(Error::Config("beta vector length mismatch".into()));
        }
        let mut lo_row = vec![0.0; var_dim];
        let mut hi_row = vec![0.0; var_dim];
        for i in 0..n {
            lo_row[i] = -beta[i];
            hi_row[i] = beta[i];
        }
        push(lo_row, -beta_min, "beta_min".into());
        push(hi_row, beta_max, "beta_max".into());
    }
    for (k, sector) in spec.sectors.iter().enumerate() {
        let mut lo_row = vec![0.0; var_dim];
        let mut hi_row = vec![0.0; var_dim];
        for &i in &sector.indices {
            lo_row[i] = -1.0;
            hi_row[i] = 1.0;
        }
        push(lo_row, -sector.min, format!("sector{k}_min"));
        push(hi_row, sector.max, format!("sector{k}_max"));
    }
    if let Some(t) = &spec.turnover {
        // x_i - y_i <= x0_i and -x_i - y_i <= -x0_i, plus sum(y) <= tau.
        for i in 0..n {
            let mut up = vec![0.0; var_dim];
            up[i] = 1.0;
            up[n + i] = -1.0;
            push(up, t.x0[i], format!("turnover_abs+{i}"));
            let mut dn = vec![0.0; var_dim];
            dn[i] = -1.0;
            dn[n + i] = -1.0;
            push(dn, -t.x0[i], format!("turnover_abs-{i}"));
        }
        let mut cap = vec![0.0; var_dim];
        for i in 0..n {
            cap[n + i] = 1.0;
        }
        push(cap, t.tau, "turnover_total".into());
    }

    let a = DMatrix::from_fn(rows.len(), var_dim, |r, c| rows[r][c]);
    let b = DVector::from_vec(rhs);

    let mut a_eq = DMatrix::zeros(1, var_dim);
    for i in 0..n {
        a_eq[(0, i)] = 1.0;
    }
    let b_eq = DVector::from_row_slice(&[1.0]);

    let mut lower = DVector::zeros(var_dim);
    let mut upper = DVector::from_element(var_dim, f64::INFINITY);
    for i in 0..n {
        lower[i] = spec.lower[i];
        upper[i] = spec.upper[i];
    }

    let poly = Polyhedron {
        a,
        b,
        a_eq,
        b_eq,
        lower,
        upper,
        var_dim,
        n,
        row_labels: labels,
        turnover_anchor: spec.turnover.as_ref().map(|t| DVector::from_vec(t.x0.clone())),
    };
    certify_nonempty(&poly)?;
    Ok(poly)
}

/// Certify the region is nonempty: cheap candidate points first, then a
/// least-norm feasibility solve.
fn certify_nonempty(poly: &Polyhedron) -> Result<()> {
    let n = poly.n;
    let mut candidates: Vec<DVector<f64>> = Vec::new();
    if let Some(x0) = &poly.turnover_anchor {
        candidates.push(x0.clone());
    }
    // Fill from the lower bounds toward the upper bounds.
    let mut fill = DVector::from_fn(n, |i, _| poly.lower[i]);
    let mut remaining = 1.0 - fill.sum();
    for i in 0..n {
        if remaining <= 0.0 {
            break;
        }
        let room = poly.upper[i] - fill[i];
        let add = room.min(remaining);
        fill[i] += add;
        remaining -= add;
    }
    candidates.push(fill);
    candidates.push(DVector::from_element(n, 1.0 / n as f64));

    for x in &candidates {
        let z = poly.lift(x);
        if poly.violations(&z, ROW_TOL).is_empty() {
            return Ok(());
        }
    }

    // Phase-1 style solve: least-norm point subject to every row.
    let (g, h) = inequality_system(poly);
    let prob = QpProblem::new(
        DMatrix::identity(poly.var_dim, poly.var_dim),
        DVector::zeros(poly.var_dim),
        g,
        h,
        poly.a_eq.clone(),
        poly.b_eq.clone(),
    );
    match qp::solve(&prob) {
        Ok(sol) => {
            let viol = poly.violations(&sol.z, 1e-7);
            if viol.is_empty() {
                Ok(())
            } else {
                Err(Error::Infeasible(format!(
                    "feasible region appears empty; most violated: {}",
                    viol[0]
                )))
            }
        }
        Err(e) => Err(Error::Infeasible(format!(
            "could not certify a feasible point: {e}"
        ))),
    }
}

/// Stack general rows and finite bounds into a single `G z <= h` system.
pub fn inequality_system(poly: &Polyhedron) -> (DMatrix<f64>, DVector<f64>) {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    for r in 0..poly.a.nrows() {
        rows.push(poly.a.row(r).iter().copied().collect());
        rhs.push(poly.b[r]);
    }
    for i in 0..poly.var_dim {
        if poly.lower[i].is_finite() {
            let mut row = vec![0.0; poly.var_dim];
            row[i] = -1.0;
            rows.push(row);
            rhs.push(-poly.lower[i]);
        }
        if poly.upper[i].is_finite() {
            let mut row = vec![0.0; poly.var_dim];
            row[i] = 1.0;
            rows.push(row);
            rhs.push(poly.upper[i]);
        }
    }
    (
        DMatrix::from_fn(rows.len(), poly.var_dim, |r, c| rows[r][c]),
        DVector::from_vec(rhs),
    )
}

/// Feasibility of a primal point for the full problem: polyhedron rows
/// within `tol` plus the cardinality bound (support counted at the global
/// nonzero tolerance).
pub fn is_feasible(x: &DVector<f64>, poly: &Polyhedron, s: usize, tol: f64) -> FeasibilityReport {
    let mut violations = poly.violations(&poly.lift(x), tol);
    let support = support_of(x.as_slice(), SUPPORT_TOL);
    if support.len() > s {
        violations.push(Violation {
            label: "cardinality".into(),
            lhs: support.len() as f64,
            rhs: s as f64,
            slack: s as f64 - support.len() as f64,
        });
    }
    FeasibilityReport { feasible: violations.is_empty(), violations }
}

/// Euclidean projection onto {v >= 0, ||v||_0 <= s}: clip negatives, keep
/// the s largest remaining components (ties to the lowest index).
pub fn sparse_project(u: &DVector<f64>, s: usize) -> DVector<f64> {
    let n = u.len();
    let clipped = DVector::from_fn(n, |i, _| u[i].max(0.0));
    if s >= n {
        return clipped;
    }
    let mut order: Vec<usize> = (0..n).collect();
    // Sort by value descending, index ascending for ties.
    order.sort_by(|&a, &b| clipped[b].total_cmp(&clipped[a]).then(a.cmp(&b)));
    let mut out = DVector::zeros(n);
    for &i in order.iter().take(s) {
        out[i] = clipped[i];
    }
    out
}

/// Repair operator: sparse projection followed by l1 normalization, so the
/// output is s-sparse and on the simplex. Degenerate all-zero projections
/// fall back to the basis vector of the largest input component.
///
/// This is only an approximate projection onto the feasible set: bounds,
/// beta and sector rows are ignored here and handled by constrained
/// domination instead.
pub fn normalize_project(u: &DVector<f64>, s: usize) -> DVector<f64> {
    let p = sparse_project(u, s);
    let sum = p.sum();
    if sum > 0.0 {
        p / sum
    } else {
        let mut best = 0;
        for i in 1..u.len() {
            if u[i] > u[best] {
                best = i;
            }
        }
        let mut e = DVector::zeros(u.len());
        e[best] = 1.0;
        e
    }
}
