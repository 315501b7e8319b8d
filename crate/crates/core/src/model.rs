//! Core data model: instances, support sets, dominance, crowding and the
//! per-support front list.
//!
//! All types here are immutable value objects except [`FrontList`], which is
//! single-writer; concurrent reads are safe.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::constraints::ConstraintSpec;
use crate::error::{Error, Result};
use crate::objectives::{ObjectiveModel, ObjectiveTerm};

/// Default tolerance for counting a component as nonzero. Single global
/// value; operations take it explicitly so tests can vary it.
pub const SUPPORT_TOL: f64 = 1e-7;

/// Default feasibility tolerance on linear rows.
pub const ROW_TOL: f64 = 1e-8;

/// Cap on explicit super-support enumeration; past it only the completion
/// using the smallest-index zero coordinates is returned (a documented
/// truncation).
pub const SUPER_SUPPORT_CAP: usize = 10_000;

/// Sorted set of asset indices (0-based).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SupportSet {
    indices: Vec<usize>,
}

impl SupportSet {
    pub fn new(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        SupportSet { indices }
    }

    pub fn empty() -> Self {
        SupportSet { indices: Vec::new() }
    }

    /// The full index set {0, ..., n-1}.
    pub fn full(n: usize) -> Self {
        SupportSet { indices: (0..n).collect() }
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.indices.binary_search(&i).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.indices.iter().copied()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.indices
    }

    pub fn is_subset_of(&self, other: &SupportSet) -> bool {
        self.indices.iter().all(|&i| other.contains(i))
    }

    /// Indices of {0..n-1} not in this set.
    pub fn complement(&self, n: usize) -> Vec<usize> {
        (0..n).filter(|&i| !self.contains(i)).collect()
    }
}

impl fmt::Display for SupportSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.indices.iter().map(|i| i.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Support set of `x`: indices with |x_i| > tol.
pub fn support_of(x: &[f64], tol: f64) -> SupportSet {
    SupportSet::new(
        x.iter()
            .enumerate()
            .filter(|(_, &v)| v.abs() > tol)
            .map(|(i, _)| i)
            .collect(),
    )
}

/// All super support sets of `x`: sets J with support(x) ⊆ J and |J| = s.
///
/// Returns a singleton exactly when the support of `x` already has size `s`.
/// The enumeration is capped at [`SUPER_SUPPORT_CAP`]; past the cap, only the
/// completion using the smallest-index zero coordinates is returned.
pub fn super_supports(x: &[f64], s: usize, tol: f64) -> Result<Vec<SupportSet>> {
    let n = x.len();
    let base = support_of(x, tol);
    if base.len() > s {
        return Err(Error::Infeasible(format!(
            "support size {} exceeds cardinality bound {}",
            base.len(),
            s
        )));
    }
    let missing = s - base.len();
    let zeros = base.complement(n);
    let count = binomial(zeros.len(), missing);
    if count > SUPER_SUPPORT_CAP {
        // Truncation: single completion with the smallest-index zeros.
        let mut idx = base.as_slice().to_vec();
        idx.extend(zeros.into_iter().take(missing));
        return Ok(vec![SupportSet::new(idx)]);
    }
    let mut out = Vec::with_capacity(count);
    for combo in combinations(&zeros, missing) {
        let mut idx = base.as_slice().to_vec();
        idx.extend(combo);
        out.push(SupportSet::new(idx));
    }
    out.sort();
    Ok(out)
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}

fn combinations(items: &[usize], k: usize) -> Vec<Vec<usize>> {
    use itertools::Itertools;
    items.iter().copied().combinations(k).collect()
}

/// Outcome of comparing two objective vectors under componentwise order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dominance {
    /// First strictly dominates second (<= everywhere, < somewhere).
    Dominates,
    Dominated,
    Equal,
    Incomparable,
}

/// Compare objective vectors under the componentwise partial order
/// (minimization convention).
pub fn compare(fa: &[f64], fb: &[f64]) -> Result<Dominance> {
    if fa.len() != fb.len() {
        return Err(Error::Data(format!(
            "objective length mismatch: {} vs {}",
            fa.len(),
            fb.len()
        )));
    }
    let mut a_better = false;
    let mut b_better = false;
    for (a, b) in fa.iter().zip(fb.iter()) {
        if a < b {
            a_better = true;
        } else if b < a {
            b_better = true;
        }
    }
    Ok(match (a_better, b_better) {
        (false, false) => Dominance::Equal,
        (true, false) => Dominance::Dominates,
        (false, true) => Dominance::Dominated,
        (true, true) => Dominance::Incomparable,
    })
}

/// Indices of points not strictly dominated by any other, in input order.
/// Exact duplicates all survive.
pub fn nondominated_filter(points: &[Vec<f64>]) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::Data("nondominated filter on empty input".into()));
    }
    let mut keep = Vec::new();
    'outer: for (i, p) in points.iter().enumerate() {
        for (j, q) in points.iter().enumerate() {
            if i != j && compare(q, p)? == Dominance::Dominates {
                continue 'outer;
            }
        }
        keep.push(i);
    }
    Ok(keep)
}

/// NSGA-II crowding distance of a mutually nondominated set. Boundary points
/// per objective get +infinity; interior points accumulate the normalized
/// gap between their neighbors. Fewer than two points: all infinite.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let k = front.len();
    if k < 2 {
        return vec![f64::INFINITY; k];
    }
    let m = front[0].len();
    let mut dist = vec![0.0_f64; k];
    for obj in 0..m {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| front[a][obj].total_cmp(&front[b][obj]));
        let lo = front[order[0]][obj];
        let hi = front[order[k - 1]][obj];
        dist[order[0]] = f64::INFINITY;
        dist[order[k - 1]] = f64::INFINITY;
        let range = hi - lo;
        if range <= 0.0 {
            continue;
        }
        for w in 1..k - 1 {
            let gap = front[order[w + 1]][obj] - front[order[w - 1]][obj];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

/// A feasible point together with its objective vector (minimization
/// convention) and the super support set it is paired with.
#[derive(Debug, Clone)]
pub struct EvaluatedPoint {
    pub x: DVector<f64>,
    pub f: DVector<f64>,
    pub support: SupportSet,
}

impl EvaluatedPoint {
    pub fn new(x: DVector<f64>, f: DVector<f64>, support: SupportSet) -> Self {
        EvaluatedPoint { x, f, support }
    }
}

/// Outcome of a [`FrontList`] insertion.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InsertOutcome {
    /// Candidate accepted; ids of entries it displaced.
    Inserted { id: u64, removed: Vec<u64> },
    /// Candidate strictly dominated by an incumbent with the same support.
    Dominated,
    /// Candidate has exactly the objective vector of an incumbent; the
    /// incumbent wins.
    Duplicate,
}

/// One stored front member.
#[derive(Debug, Clone)]
pub struct FrontEntry {
    pub id: u64,
    pub point: EvaluatedPoint,
    /// Name of the solver that produced the point (carried into front CSVs).
    pub origin: String,
}

/// Set of evaluated points partitioned by super support set, maintaining
/// mutual nondominance within each support group. Dominance is never applied
/// across groups.
#[derive(Debug, Clone, Default)]
pub struct FrontList {
    groups: BTreeMap<SupportSet, Vec<FrontEntry>>,
    next_id: u64,
}

impl FrontList {
    pub fn new() -> Self {
        FrontList::default()
    }

    pub fn len(&self) -> usize {
        self.groups.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.values().all(Vec::is_empty)
    }

    pub fn num_supports(&self) -> usize {
        self.groups.values().filter(|g| !g.is_empty()).count()
    }

    pub fn supports(&self) -> impl Iterator<Item = &SupportSet> {
        self.groups.iter().filter(|(_, g)| !g.is_empty()).map(|(s, _)| s)
    }

    pub fn entries(&self) -> impl Iterator<Item = &FrontEntry> {
        self.groups.values().flatten()
    }

    pub fn group(&self, support: &SupportSet) -> &[FrontEntry] {
        self.groups.get(support).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn contains_id(&self, id: u64) -> bool {
        self.entries().any(|e| e.id == id)
    }

    /// Insert with same-support dominance filtering: the candidate is
    /// rejected if an incumbent of the same support strictly dominates or
    /// equals it; otherwise it displaces every incumbent it strictly
    /// dominates.
    pub fn insert(&mut self, point: EvaluatedPoint, origin: &str) -> InsertOutcome {
        let group = self.groups.entry(point.support.clone()).or_default();
        for entry in group.iter() {
            match compare(entry.point.f.as_slice(), point.f.as_slice())
                .expect("front entries share objective dimension")
            {
                Dominance::Dominates => return InsertOutcome::Dominated,
                Dominance::Equal => return InsertOutcome::Duplicate,
                _ => {}
            }
        }
        let mut removed = Vec::new();
        group.retain(|entry| {
            let dominated = matches!(
                compare(point.f.as_slice(), entry.point.f.as_slice()),
                Ok(Dominance::Dominates)
            );
            if dominated {
                removed.push(entry.id);
            }
            !dominated
        });
        let id = self.next_id;
        self.next_id += 1;
        group.push(FrontEntry { id, point, origin: origin.to_string() });
        InsertOutcome::Inserted { id, removed }
    }
}

/// Identifier of one portfolio objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectiveId {
    /// Expected return, c'x.
    ER,
    /// Variance, x'Qx / 2.
    V,
    /// ESG score, v'x.
    ESG,
    /// Sharpe ratio, expected return over the square root of variance.
    SR,
    /// Skewness, the coskewness tensor contracted three times with x.
    SW,
}

impl ObjectiveId {
    /// Orientation the raw objective is stated in. Internally everything is
    /// minimized; natively maximized objectives are negated at evaluation.
    pub fn natural_sense(self) -> Sense {
        match self {
            ObjectiveId::V => Sense::Minimize,
            _ => Sense::Maximize,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "min")]
    Minimize,
    #[serde(rename = "max")]
    Maximize,
}

/// Full problem instance: asset universe, objective selection, constraint
/// specification and cardinality bound.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub name: String,
    pub n: usize,
    pub s: usize,
    pub objectives: Vec<ObjectiveTerm>,
    pub constraints: ConstraintSpec,
    pub model: ObjectiveModel,
}

impl ProblemInstance {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        s: usize,
        objectives: Vec<ObjectiveTerm>,
        constraints: ConstraintSpec,
        model: ObjectiveModel,
    ) -> Result<Self> {
        if n == 0 || s == 0 || s >= n {
            return Err(Error::Config(format!(
                "cardinality bound must satisfy 1 <= s < n, got s={s}, n={n}"
            )));
        }
        if objectives.is_empty() {
            return Err(Error::Config("at least one objective is required".into()));
        }
        for term in &objectives {
            if !(term.scale > 0.0) {
                return Err(Error::Config(format!(
                    "scale factor for {:?} must be strictly positive",
                    term.id
                )));
            }
        }
        if model.dim() != n {
            return Err(Error::Config(format!(
                "model dimension {} does not match n={n}",
                model.dim()
            )));
        }
        model.check_requirements(&objectives)?;
        constraints.validate(n)?;
        Ok(ProblemInstance { name: name.into(), n, s, objectives, constraints, model })
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = doc::InstanceDoc::from_instance(self);
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: doc::InstanceDoc = serde_json::from_str(text)?;
        doc.into_instance()
    }
}

/// JSON document layout for instance persistence. The document is flat:
/// objective model and constraint fields live next to the instance metadata.
mod doc {
    use super::*;
    use crate::constraints::{Sector, Turnover};

    #[derive(Serialize, Deserialize)]
    pub struct ObjectiveTermDoc {
        pub id: ObjectiveId,
        pub scale: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pub sense: Option<Sense>,
    }

    #[derive(Serialize, Deserialize)]
    pub struct SectorDoc {
        pub indices: Vec<usize>,
        pub min: f64,
        pub max: f64,
    }

    #[derive(Serialize, Deserialize)]
    pub struct TurnoverDoc {
        pub x0: Vec<f64>,
        pub tau: f64,
    }

    #[derive(Serialize, Deserialize)]
    pub struct InstanceDoc {
        pub name: String,
        pub n: usize,
        pub s: usize,
        pub objectives: Vec<ObjectiveTermDoc>,
        pub c: Vec<f64>,
        #[serde(rename = "Q")]
        pub q: Vec<Vec<f64>>,
        pub esg: Vec<f64>,
        /// Flattened row-major n^3 coskewness tensor, or null.
        pub coskew: Option<Vec<f64>>,
        pub beta: Vec<f64>,
        pub beta_min: Option<f64>,
        pub beta_max: Option<f64>,
        pub lower: Vec<f64>,
        pub upper: Vec<f64>,
        pub sectors: Vec<SectorDoc>,
        pub turnover: Option<TurnoverDoc>,
    }

    impl InstanceDoc {
        pub fn from_instance(inst: &ProblemInstance) -> Self {
            let m = &inst.model;
            let n = inst.n;
            let q_rows: Vec<Vec<f64>> =
                (0..n).map(|i| (0..n).map(|j| m.q[(i, j)]).collect()).collect();
            InstanceDoc {
                name: inst.name.clone(),
                n,
                s: inst.s,
                objectives: inst
                    .objectives
                    .iter()
                    .map(|t| ObjectiveTermDoc {
                        id: t.id,
                        scale: t.scale,
                        sense: if t.sense == t.id.natural_sense() {
                            None
                        } else {
                            Some(t.sense)
                        },
                    })
                    .collect(),
                c: m.c.as_slice().to_vec(),
                q: q_rows,
                esg: m.esg.as_slice().to_vec(),
                coskew: m.coskew_dense().map(|t| t.to_vec()),
                beta: m.beta.as_slice().to_vec(),
                beta_min: inst.constraints.beta_window.map(|(lo, _)| lo),
                beta_max: inst.constraints.beta_window.map(|(_, hi)| hi),
                lower: inst.constraints.lower.clone(),
                upper: inst.constraints.upper.clone(),
                sectors: inst
                    .constraints
                    .sectors
                    .iter()
                    .map(|sec| SectorDoc {
                        indices: sec.indices.clone(),
                        min: sec.min,
                        max: sec.max,
                    })
                    .collect(),
                turnover: inst
                    .constraints
                    .turnover
                    .as_ref()
                    .map(|t| TurnoverDoc { x0: t.x0.clone(), tau: t.tau }),
            }
        }

        pub fn into_instance(self) -> Result<ProblemInstance> {
            let model = ObjectiveModel::from_parts(
                self.c,
                self.q,
                self.esg,
                self.coskew,
                self.beta,
            )?;
            let beta_window = match (self.beta_min, self.beta_max) {
                (Some(lo), Some(hi)) => Some((lo, hi)),
                (None, None) => None,
                _ => {
                    return Err(Error::Data(
                        "beta_min and beta_max must both be given or both null".into(),
                    ))
                }
            };
            let constraints = ConstraintSpec {
                lower: self.lower,
                upper: self.upper,
                beta_window,
                sectors: self
                    .sectors
                    .into_iter()
                    .map(|s| Sector { indices: s.indices, min: s.min, max: s.max })
                    .collect(),
                turnover: self.turnover.map(|t| Turnover { x0: t.x0, tau: t.tau }),
            };
            let objectives = self
                .objectives
                .into_iter()
                .map(|t| ObjectiveTerm {
                    id: t.id,
                    scale: t.scale,
                    sense: t.sense.unwrap_or_else(|| t.id.natural_sense()),
                })
                .collect();
            ProblemInstance::new(self.name, self.n, self.s, objectives, constraints, model)
        }
    }
}
