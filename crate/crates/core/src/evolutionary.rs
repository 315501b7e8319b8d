//! Genetic initializers: an NSGA-II adapted to sparse portfolios through a
//! projection repair, and its memetic extension that refines offspring with
//! hard-thresholding steps.
//!
//! Candidates are repaired onto the sparse simplex only; residual violations
//! of bounds, beta or sector rows are handled by constrained domination
//! (feasible beats infeasible, infeasible compared by total violation).

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::constraints::{normalize_project, Polyhedron};
use crate::descent::moiht;
use crate::directions::THETA_TOL;
use crate::error::{Error, Result};
use crate::model::{crowding_distance, ROW_TOL};
use crate::objectives::VectorObjective;
use crate::util::{stream_rng, Budget};

#[derive(Debug, Clone)]
pub struct Individual {
    pub x: DVector<f64>,
    pub f: DVector<f64>,
    /// Total violation of polyhedron rows the repair does not enforce.
    pub violation: f64,
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, Default)]
pub struct Population {
    pub members: Vec<Individual>,
}

impl Population {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Members of the first nondominated rank.
    pub fn rank0(&self) -> Vec<&Individual> {
        self.members.iter().filter(|m| m.rank == 0).collect()
    }
}

#[derive(Debug, Clone)]
pub struct GaParams {
    pub pop_size: usize,
    pub crossover_prob: f64,
    /// Per-gene mutation probability; defaults to 1/n when unset.
    pub mutation_prob: Option<f64>,
    pub sbx_eta: f64,
    pub mutation_eta: f64,
    pub seed: u64,
    pub budget: Budget,
}

impl Default for GaParams {
    fn default() -> Self {
        GaParams {
            pop_size: 100,
            crossover_prob: 0.9,
            mutation_prob: None,
            sbx_eta: 20.0,
            mutation_eta: 20.0,
            seed: 0,
            budget: Budget::iterations(50),
        }
    }
}

/// Refinement hook configuration for the memetic variant.
#[derive(Debug, Clone, Copy)]
pub struct RefineConfig {
    /// Apply refinement every this many generations (0 disables).
    pub every: usize,
    /// Hard-thresholding iterations per refined offspring.
    pub steps: usize,
    /// Quadratic weight for the refinement subproblems.
    pub l: f64,
    /// Support-enumeration budget for the refinement subproblems.
    pub dir_budget: usize,
}

impl RefineConfig {
    pub fn disabled() -> Self {
        RefineConfig { every: 0, steps: 0, l: 1.0, dir_budget: 0 }
    }

    fn active(&self) -> bool {
        self.every > 0 && self.steps > 0
    }
}

/// Constrained-domination order: feasible dominates infeasible, two
/// infeasibles compare by total violation, two feasibles by Pareto
/// dominance.
fn constrained_dominates(a: &Individual, b: &Individual) -> bool {
    const FEAS: f64 = 1e-9;
    let a_feas = a.violation <= FEAS;
    let b_feas = b.violation <= FEAS;
    match (a_feas, b_feas) {
        (true, false) => true,
        (false, true) => false,
        (false, false) => a.violation < b.violation,
        (true, true) => {
            let mut strict = false;
            for (x, y) in a.f.iter().zip(b.f.iter()) {
                if x > y {
                    return false;
                }
                if x < y {
                    strict = true;
                }
            }
            strict
        }
    }
}

/// Fast nondominated sorting; assigns ranks and per-rank crowding.
fn rank_and_crowd(members: &mut [Individual]) {
    let k = members.len();
    let mut dominates: Vec<Vec<usize>> = vec![Vec::new(); k];
    let mut dominated_by = vec![0usize; k];
    for i in 0..k {
        for j in 0..k {
            if i != j && constrained_dominates(&members[i], &members[j]) {
                dominates[i].push(j);
                dominated_by[j] += 1;
            }
        }
    }
    let mut current: Vec<usize> = (0..k).filter(|&i| dominated_by[i] == 0).collect();
    let mut rank = 0;
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            members[i].rank = rank;
        }
        let values: Vec<Vec<f64>> =
            current.iter().map(|&i| members[i].f.as_slice().to_vec()).collect();
        let crowd = crowding_distance(&values);
        for (pos, &i) in current.iter().enumerate() {
            members[i].crowding = crowd[pos];
        }
        for &i in &current {
            for &j in &dominates[i] {
                dominated_by[j] -= 1;
                if dominated_by[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        current = next;
        rank += 1;
    }
}

fn evaluate_member<O: VectorObjective>(
    obj: &O,
    poly: &Polyhedron,
    x: DVector<f64>,
) -> Result<Individual> {
    let f = obj.evaluate(&x)?;
    let violation = poly.violation_amount(&x, ROW_TOL);
    Ok(Individual { x, f, violation, rank: 0, crowding: 0.0 })
}

/// The 2n-point initial population: the n standard basis vectors plus n
/// random s-sparse portfolios (uniform support, flat simplex weights), all
/// repaired onto the sparse simplex. Deterministic per seed.
pub fn initial_population<O: VectorObjective>(
    obj: &O,
    poly: &Polyhedron,
    s: usize,
    seed: u64,
) -> Result<Population> {
    let n = poly.n;
    let mut rng = stream_rng(seed, "ga-init", 0);
    let mut members = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut e = DVector::zeros(n);
        e[i] = 1.0;
        members.push(evaluate_member(obj, poly, normalize_project(&e, s))?);
    }
    for _ in 0..n {
        members.push(evaluate_member(obj, poly, random_sparse(&mut rng, n, s))?);
    }
    let mut pop = Population { members };
    rank_and_crowd(&mut pop.members);
    Ok(pop)
}

/// Uniform random support of size s with flat-Dirichlet weights on it.
fn random_sparse(rng: &mut ChaCha8Rng, n: usize, s: usize) -> DVector<f64> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let support = &idx[..s];
    let mut x = DVector::zeros(n);
    let mut total = 0.0;
    for &i in support {
        let w = -(rng.gen::<f64>()).ln();
        x[i] = w;
        total += w;
    }
    for &i in support {
        x[i] /= total;
    }
    x
}

fn tournament<'a>(pop: &'a [Individual], rng: &mut ChaCha8Rng) -> &'a Individual {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if (a.rank, std::cmp::Reverse(ordered(a.crowding))) <= (b.rank, std::cmp::Reverse(ordered(b.crowding)))
    {
        a
    } else {
        b
    }
}

fn ordered(v: f64) -> ordered_key::OrderedF64 {
    ordered_key::OrderedF64(v)
}

mod ordered_key {
    #[derive(PartialEq, PartialOrd)]
    pub struct OrderedF64(pub f64);
    impl Eq for OrderedF64 {}
    #[allow(clippy::derive_ord_xor_partial_ord)]
    impl Ord for OrderedF64 {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0)
        }
    }
}

/// Simulated binary crossover on [0, 1]-bounded genes.
fn sbx(
    a: &DVector<f64>,
    b: &DVector<f64>,
    eta: f64,
    rng: &mut ChaCha8Rng,
) -> (DVector<f64>, DVector<f64>) {
    let n = a.len();
    let mut c1 = a.clone();
    let mut c2 = b.clone();
    for i in 0..n {
        if rng.gen::<f64>() > 0.5 {
            continue;
        }
        let (x1, x2) = (a[i].min(b[i]), a[i].max(b[i]));
        if (x2 - x1).abs() < 1e-14 {
            continue;
        }
        let u: f64 = rng.gen();
        let beta = if u <= 0.5 {
            (2.0 * u).powf(1.0 / (eta + 1.0))
        } else {
            (1.0 / (2.0 * (1.0 - u))).powf(1.0 / (eta + 1.0))
        };
        let v1 = 0.5 * ((1.0 + beta) * x1 + (1.0 - beta) * x2);
        let v2 = 0.5 * ((1.0 - beta) * x1 + (1.0 + beta) * x2);
        c1[i] = v1.clamp(0.0, 1.0);
        c2[i] = v2.clamp(0.0, 1.0);
    }
    (c1, c2)
}

/// Polynomial mutation on [0, 1]-bounded genes.
fn polynomial_mutation(x: &mut DVector<f64>, prob: f64, eta: f64, rng: &mut ChaCha8Rng) {
    for i in 0..x.len() {
        if rng.gen::<f64>() >= prob {
            continue;
        }
        let u: f64 = rng.gen();
        let v = x[i];
        let delta = if u < 0.5 {
            let base = 2.0 * u + (1.0 - 2.0 * u) * (1.0 - v).powf(eta + 1.0);
            base.powf(1.0 / (eta + 1.0)) - 1.0
        } else {
            let base = 2.0 * (1.0 - u) + (2.0 * u - 1.0) * v.powf(eta + 1.0);
            1.0 - base.powf(1.0 / (eta + 1.0))
        };
        x[i] = (v + delta).clamp(0.0, 1.0);
    }
}

/// Elitist truncation of parents plus offspring to the population size,
/// whole nondominated fronts first, crowding inside the last partial front.
fn truncate(mut all: Vec<Individual>, target: usize) -> Vec<Individual> {
    rank_and_crowd(&mut all);
    let mut order: Vec<usize> = (0..all.len()).collect();
    order.sort_by(|&a, &b| {
        all[a]
            .rank
            .cmp(&all[b].rank)
            .then_with(|| all[b].crowding.total_cmp(&all[a].crowding))
    });
    order.truncate(target);
    order.sort_unstable();
    let mut keep: Vec<Individual> = Vec::with_capacity(target);
    let mut taken = vec![false; all.len()];
    for &i in &order {
        taken[i] = true;
    }
    for (i, ind) in all.into_iter().enumerate() {
        if taken[i] {
            keep.push(ind);
        }
    }
    let mut keep = keep;
    rank_and_crowd(&mut keep);
    keep
}

/// Adapted NSGA-II: tournament selection on (rank, crowding), simulated
/// binary crossover, polynomial mutation, projection repair onto the sparse
/// simplex, elitist truncation. Runs until the generation/time budget.
pub fn nsga2_run<O: VectorObjective>(
    obj: &O,
    poly: &Polyhedron,
    s: usize,
    params: &GaParams,
) -> Result<Population> {
    nsma_run(obj, poly, s, params, RefineConfig::disabled())
}

/// Memetic variant: identical to the plain genetic loop except that every
/// `refine.every` generations each offspring is advanced by `refine.steps`
/// hard-thresholding iterations after repair. With refinement disabled the
/// two runs are identical draw for draw.
pub fn nsma_run<O: VectorObjective>(
    obj: &O,
    poly: &Polyhedron,
    s: usize,
    params: &GaParams,
    refine: RefineConfig,
) -> Result<Population> {
    if params.pop_size == 0 {
        return Err(Error::Config("population size must be positive".into()));
    }
    let n = poly.n;
    let p_mut = params.mutation_prob.unwrap_or(1.0 / n as f64);
    let mut rng = stream_rng(params.seed, "ga-loop", 0);
    let mut pop = initial_population(obj, poly, s, params.seed)?;
    // The initial population has 2n members; trim to the configured size if
    // it is smaller.
    if pop.members.len() > params.pop_size {
        pop.members = truncate(pop.members, params.pop_size);
    }

    let stopwatch = params.budget.start();
    let mut generation = 0;
    while !stopwatch.exhausted(generation) {
        let refine_now = refine.active() && (generation + 1) % refine.every == 0;
        let mut offspring: Vec<Individual> = Vec::with_capacity(params.pop_size);
        while offspring.len() < params.pop_size {
            let pa = tournament(&pop.members, &mut rng).x.clone();
            let pb = tournament(&pop.members, &mut rng).x.clone();
            let (mut c1, mut c2) = if rng.gen::<f64>() < params.crossover_prob {
                sbx(&pa, &pb, params.sbx_eta, &mut rng)
            } else {
                (pa, pb)
            };
            polynomial_mutation(&mut c1, p_mut, params.mutation_eta, &mut rng);
            polynomial_mutation(&mut c2, p_mut, params.mutation_eta, &mut rng);
            for child in [c1, c2] {
                if offspring.len() >= params.pop_size {
                    break;
                }
                let mut repaired = normalize_project(&child, s);
                if refine_now {
                    match moiht(
                        obj,
                        &repaired,
                        poly,
                        s,
                        refine.l,
                        THETA_TOL,
                        refine.steps,
                        refine.dir_budget,
                    ) {
                        Ok(res) => repaired = res.x,
                        Err(e) => log::debug!("offspring refinement skipped: {e}"),
                    }
                }
                offspring.push(evaluate_member(obj, poly, repaired)?);
            }
        }
        let mut all = pop.members;
        all.extend(offspring);
        pop = Population { members: truncate(all, params.pop_size) };
        generation += 1;
    }
    rank_and_crowd(&mut pop.members);
    Ok(pop)
}
