//! Front-quality metrics: purity, gamma-spread, hypervolume and
//! optimal-support recall, plus reference-front construction and
//! Dolan-More performance profiles.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::model::{compare, nondominated_filter, Dominance, SupportSet};

/// One front member carried into metric computations: objective vector
/// (minimization convention) and the support it was produced on.
#[derive(Debug, Clone)]
pub struct FrontPoint {
    pub f: Vec<f64>,
    pub support: SupportSet,
}

/// Approximation of the true front obtained by merging run outputs.
#[derive(Debug, Clone)]
pub struct ReferenceFront {
    pub points: Vec<FrontPoint>,
    /// Names of the runs that were merged.
    pub sources: Vec<String>,
}

impl ReferenceFront {
    pub fn supports(&self) -> BTreeSet<SupportSet> {
        self.points.iter().map(|p| p.support.clone()).collect()
    }
}

/// Per-solver front quality scores.
#[derive(Debug, Clone)]
pub struct MetricReport {
    pub solver: String,
    pub problem: String,
    pub purity: f64,
    pub gamma_spread: f64,
    pub hypervolume: f64,
    pub recall: f64,
}

/// Purity of each solver's front: merge everything, drop strictly dominated
/// points, and score each solver by the surviving fraction of its own
/// points. Exact ties survive for every solver producing them. Empty fronts
/// score zero by convention.
pub fn purity(fronts: &[Vec<Vec<f64>>]) -> Result<Vec<f64>> {
    if fronts.len() < 2 {
        return Err(Error::Config("purity needs at least two solvers".into()));
    }
    let mut merged: Vec<(usize, &Vec<f64>)> = Vec::new();
    for (solver, front) in fronts.iter().enumerate() {
        for f in front {
            merged.push((solver, f));
        }
    }
    let mut out = vec![0.0; fronts.len()];
    if merged.is_empty() {
        return Ok(out);
    }
    let mut survivors = vec![0usize; fronts.len()];
    'point: for (i, (solver, f)) in merged.iter().enumerate() {
        for (j, (_, g)) in merged.iter().enumerate() {
            if i != j && compare(g, f)? == Dominance::Dominates {
                continue 'point;
            }
        }
        survivors[*solver] += 1;
    }
    for (solver, front) in fronts.iter().enumerate() {
        if !front.is_empty() {
            out[solver] = survivors[solver] as f64 / front.len() as f64;
        }
    }
    Ok(out)
}

/// Largest distance between adjacent front points: for each objective, sort
/// by that coordinate and take consecutive l-infinity gaps; gamma is the
/// maximum over all of them. Points equal within 1e-9 are collapsed first; a
/// front that collapses to one point had zero spread, while a genuine
/// single-point front is infinitely spread.
pub fn gamma_spread(front: &[Vec<f64>]) -> f64 {
    if front.len() < 2 {
        return f64::INFINITY;
    }
    let mut unique: Vec<&Vec<f64>> = Vec::new();
    'outer: for p in front {
        for q in &unique {
            if p.iter().zip(q.iter()).all(|(a, b)| (a - b).abs() <= 1e-9) {
                continue 'outer;
            }
        }
        unique.push(p);
    }
    if unique.len() < 2 {
        return 0.0;
    }
    let m = unique[0].len();
    let mut gamma = 0.0_f64;
    for obj in 0..m {
        let mut order: Vec<usize> = (0..unique.len()).collect();
        order.sort_by(|&a, &b| unique[a][obj].total_cmp(&unique[b][obj]));
        for w in order.windows(2) {
            let gap = unique[w[0]]
                .iter()
                .zip(unique[w[1]].iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0_f64, f64::max);
            gamma = gamma.max(gap);
        }
    }
    gamma
}

/// Exact hypervolume dominated by `front` up to `reference` (minimization).
/// Points not below the reference in every coordinate are dropped with a
/// warning. Two objectives use a sorted sweep; more use recursive slicing on
/// the last objective.
pub fn hypervolume(front: &[Vec<f64>], reference: &[f64]) -> f64 {
    let mut pts: Vec<Vec<f64>> = Vec::new();
    for p in front {
        if p.iter().zip(reference.iter()).all(|(a, r)| a <= r) {
            pts.push(p.clone());
        } else {
            log::warn!("hypervolume: dropping point beyond the reference: {p:?}");
        }
    }
    if pts.is_empty() {
        return 0.0;
    }
    hv_recursive(&mut pts, reference)
}

fn hv_recursive(pts: &mut [Vec<f64>], reference: &[f64]) -> f64 {
    let m = reference.len();
    match m {
        1 => {
            let best = pts.iter().map(|p| p[0]).fold(f64::INFINITY, f64::min);
            (reference[0] - best).max(0.0)
        }
        2 => hv_sweep_2d(pts, reference),
        _ => {
            // Slice along the last objective: each slab contributes the
            // (m-1)-dimensional volume of the points already passed.
            pts.sort_by(|a, b| a[m - 1].total_cmp(&b[m - 1]));
            let mut total = 0.0;
            for i in 0..pts.len() {
                let z_lo = pts[i][m - 1];
                let z_hi = if i + 1 < pts.len() { pts[i + 1][m - 1] } else { reference[m - 1] };
                let width = z_hi - z_lo;
                if width <= 0.0 {
                    continue;
                }
                let mut proj: Vec<Vec<f64>> =
                    pts[..=i].iter().map(|p| p[..m - 1].to_vec()).collect();
                let keep = nondominated_filter(&proj).unwrap_or_default();
                let mut reduced: Vec<Vec<f64>> =
                    keep.into_iter().map(|k| std::mem::take(&mut proj[k])).collect();
                total += width * hv_recursive(&mut reduced, &reference[..m - 1]);
            }
            total
        }
    }
}

fn hv_sweep_2d(pts: &mut [Vec<f64>], reference: &[f64]) -> f64 {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    // Staircase of nondominated points: ascending x, strictly descending y.
    let mut stair: Vec<(f64, f64)> = Vec::new();
    let mut best_y = f64::INFINITY;
    for p in pts.iter() {
        if p[1] < best_y {
            stair.push((p[0], p[1]));
            best_y = p[1];
        }
    }
    let mut total = 0.0;
    for (i, &(x, y)) in stair.iter().enumerate() {
        let next_x = if i + 1 < stair.len() { stair[i + 1].0 } else { reference[0] };
        total += (next_x - x) * (reference[1] - y);
    }
    total
}

/// Fraction of reference-front supports recovered by the solver, under exact
/// support-set equality.
pub fn recall(
    solver_supports: &BTreeSet<SupportSet>,
    reference_supports: &BTreeSet<SupportSet>,
) -> Result<f64> {
    if reference_supports.is_empty() {
        return Err(Error::Config("recall is undefined for an empty reference".into()));
    }
    let hits = reference_supports.intersection(solver_supports).count();
    Ok(hits as f64 / reference_supports.len() as f64)
}

/// Merge run fronts into the reference: union, strict-dominance filter,
/// supports retained. Bitwise-identical (objective, support) pairs from
/// different runs collapse to one reference point.
pub fn build_reference(runs: &[(String, Vec<FrontPoint>)]) -> Result<ReferenceFront> {
    if runs.is_empty() {
        return Err(Error::Config("reference needs at least one run".into()));
    }
    let mut union: Vec<FrontPoint> = Vec::new();
    for (_, points) in runs {
        for p in points {
            let duplicate = union.iter().any(|q| {
                q.support == p.support
                    && q.f.len() == p.f.len()
                    && q.f.iter().zip(p.f.iter()).all(|(a, b)| a == b)
            });
            if !duplicate {
                union.push(p.clone());
            }
        }
    }
    if union.is_empty() {
        return Err(Error::Data("all runs are empty; no reference front".into()));
    }
    let values: Vec<Vec<f64>> = union.iter().map(|p| p.f.clone()).collect();
    let keep = nondominated_filter(&values)?;
    let keep: std::collections::HashSet<usize> = keep.into_iter().collect();
    let points = union
        .into_iter()
        .enumerate()
        .filter(|(i, _)| keep.contains(i))
        .map(|(_, p)| p)
        .collect();
    Ok(ReferenceFront {
        points,
        sources: runs.iter().map(|(name, _)| name.clone()).collect(),
    })
}

/// Nadir of the union front pushed 10% of the per-objective range outward:
/// the reference point used for hypervolume comparisons.
pub fn reference_point(fronts: &[Vec<Vec<f64>>]) -> Option<Vec<f64>> {
    let first = fronts.iter().flat_map(|f| f.iter()).next()?;
    let m = first.len();
    let mut lo = vec![f64::INFINITY; m];
    let mut hi = vec![f64::NEG_INFINITY; m];
    for front in fronts {
        for p in front {
            for j in 0..m {
                lo[j] = lo[j].min(p[j]);
                hi[j] = hi[j].max(p[j]);
            }
        }
    }
    Some(
        (0..m)
            .map(|j| {
                let range = (hi[j] - lo[j]).max(1e-12);
                hi[j] + 0.1 * range
            })
            .collect(),
    )
}

/// One solver's performance profile: step curve of (tau, fraction of
/// problems within ratio tau of the per-problem best).
pub type ProfileCurve = Vec<(f64, f64)>;

/// Dolan-More performance profiles. `values[s][p]` scores solver s on
/// problem p; NaN marks a missing cell and counts as the worst ratio.
pub fn performance_profile(values: &[Vec<f64>], higher_is_better: bool) -> Vec<ProfileCurve> {
    let solvers = values.len();
    if solvers == 0 {
        return Vec::new();
    }
    let problems = values[0].len();
    let mut ratios: Vec<Vec<f64>> = vec![Vec::with_capacity(problems); solvers];
    for p in 0..problems {
        let column: Vec<f64> = (0..solvers).map(|s| values[s][p]).collect();
        let finite = column.iter().copied().filter(|v| v.is_finite());
        let best = if higher_is_better {
            finite.fold(f64::NEG_INFINITY, f64::max)
        } else {
            finite.fold(f64::INFINITY, f64::min)
        };
        for (s, &v) in column.iter().enumerate() {
            let ratio = if !v.is_finite() || !best.is_finite() {
                f64::INFINITY
            } else if v == best {
                1.0
            } else if higher_is_better {
                if v <= 0.0 {
                    f64::INFINITY
                } else {
                    best / v
                }
            } else if best <= 0.0 {
                f64::INFINITY
            } else {
                v / best
            };
            ratios[s].push(ratio);
        }
    }
    ratios
        .into_iter()
        .map(|mut r| {
            r.sort_by(f64::total_cmp);
            let mut curve: ProfileCurve = Vec::new();
            let mut covered = 0usize;
            for tau in r.iter().copied().filter(|t| t.is_finite()) {
                covered += 1;
                let frac = covered as f64 / problems as f64;
                match curve.last_mut() {
                    Some(last) if last.0 == tau => last.1 = frac,
                    _ => curve.push((tau, frac)),
                }
            }
            if curve.is_empty() || curve[0].0 > 1.0 {
                curve.insert(0, (1.0, 0.0));
            }
            curve
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;

    #[test]
    fn purity_basic_cases() {
        let a = vec![vec![1.0, 1.0]];
        let b = vec![vec![2.0, 2.0]];
        let p = purity(&[a.clone(), b]).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);

        // Identical fronts: ties survive for both.
        let p = purity(&[a.clone(), a]).unwrap();
        assert_eq!(p, vec![1.0, 1.0]);

        // Empty solver front scores zero.
        let p = purity(&[vec![vec![1.0, 1.0]], vec![]]).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn purity_matches_bruteforce_on_random_fronts() {
        let mut rng = crate::util::stream_rng(61, "purity", 0);
        let fronts: Vec<Vec<Vec<f64>>> = (0..3)
            .map(|_| {
                (0..6)
                    .map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()])
                    .collect()
            })
            .collect();
        let got = purity(&fronts).unwrap();
        // Exhaustive pairwise oracle over the union.
        let mut union: Vec<(usize, Vec<f64>)> = Vec::new();
        for (s, f) in fronts.iter().enumerate() {
            for p in f {
                union.push((s, p.clone()));
            }
        }
        let mut counts = [0usize; 3];
        for (i, (s, p)) in union.iter().enumerate() {
            let dominated = union.iter().enumerate().any(|(j, (_, q))| {
                i != j
                    && q.iter().zip(p.iter()).all(|(a, b)| a <= b)
                    && q.iter().zip(p.iter()).any(|(a, b)| a < b)
            });
            if !dominated {
                counts[*s] += 1;
            }
        }
        for s in 0..3 {
            assert_relative_eq!(got[s], counts[s] as f64 / fronts[s].len() as f64);
        }
    }

    #[test]
    fn gamma_spread_cases() {
        let front = vec![vec![0.0, 3.0], vec![1.0, 1.0], vec![3.0, 0.0]];
        assert_relative_eq!(gamma_spread(&front), 2.0);

        // Two identical points: zero spread.
        assert_eq!(gamma_spread(&[vec![1.0, 2.0], vec![1.0, 2.0]]), 0.0);

        // Single point: infinite.
        assert!(gamma_spread(&[vec![1.0, 2.0]]).is_infinite());

        // Uniform 1D chain with spacing d.
        let chain: Vec<Vec<f64>> = (0..5).map(|k| vec![0.25 * k as f64]).collect();
        assert_relative_eq!(gamma_spread(&chain), 0.25);
    }

    #[test]
    fn gamma_spread_is_translation_invariant_and_scales() {
        let front = vec![vec![0.0, 3.0], vec![1.0, 1.0], vec![3.0, 0.0]];
        let shifted: Vec<Vec<f64>> =
            front.iter().map(|p| vec![p[0] + 5.0, p[1] - 2.0]).collect();
        assert_relative_eq!(gamma_spread(&front), gamma_spread(&shifted));
        let scaled: Vec<Vec<f64>> = front.iter().map(|p| vec![3.0 * p[0], 3.0 * p[1]]).collect();
        assert_relative_eq!(gamma_spread(&scaled), 3.0 * gamma_spread(&front));
    }

    #[test]
    fn hypervolume_two_point_example() {
        let front = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        assert_relative_eq!(hypervolume(&front, &[3.0, 3.0]), 3.0, epsilon = 1e-12);

        // Single point: box volume.
        let front = vec![vec![1.0, 0.5]];
        assert_relative_eq!(hypervolume(&front, &[3.0, 3.0]), 5.0, epsilon = 1e-12);

        // Point beyond the reference is dropped.
        let front = vec![vec![4.0, 0.0]];
        assert_eq!(hypervolume(&front, &[3.0, 3.0]), 0.0);
    }

    /// Inclusion-exclusion oracle for up to three boxes.
    fn hv3_oracle(front: &[Vec<f64>], r: &[f64]) -> f64 {
        let vol = |p: &[f64]| -> f64 {
            p.iter().zip(r.iter()).map(|(a, b)| (b - a).max(0.0)).product()
        };
        let cap = |p: &[f64], q: &[f64]| -> Vec<f64> {
            p.iter().zip(q.iter()).map(|(a, b)| a.max(*b)).collect()
        };
        match front.len() {
            1 => vol(&front[0]),
            2 => vol(&front[0]) + vol(&front[1]) - vol(&cap(&front[0], &front[1])),
            3 => {
                let (a, b, c) = (&front[0], &front[1], &front[2]);
                vol(a) + vol(b) + vol(c) - vol(&cap(a, b)) - vol(&cap(a, c)) - vol(&cap(b, c))
                    + vol(&cap(&cap(a, b), c))
            }
            _ => panic!("oracle handles up to 3 points"),
        }
    }

    #[test]
    fn hypervolume_matches_inclusion_exclusion_on_random_2d_fronts() {
        let mut rng = crate::util::stream_rng(67, "hv2", 0);
        for trial in 0..50 {
            let front: Vec<Vec<f64>> =
                (0..3).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
            let reference = [1.5, 1.5];
            let got = hypervolume(&front, &reference);
            let want = hv3_oracle(&front, &reference);
            assert!(
                (got - want).abs() <= 1e-12,
                "trial {trial}: {got} vs oracle {want} for {front:?}"
            );
        }
    }

    #[test]
    fn hypervolume_3d_matches_monte_carlo() {
        let mut rng = crate::util::stream_rng(71, "hv3", 0);
        let reference = [1.0, 1.0, 1.0];
        for trial in 0..3 {
            let front: Vec<Vec<f64>> = (0..8)
                .map(|_| {
                    vec![
                        0.9 * rng.gen::<f64>(),
                        0.9 * rng.gen::<f64>(),
                        0.9 * rng.gen::<f64>(),
                    ]
                })
                .collect();
            let exact = hypervolume(&front, &reference);
            let samples = 400_000;
            let mut hits = 0usize;
            for _ in 0..samples {
                let z = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                if front
                    .iter()
                    .any(|p| p.iter().zip(z.iter()).all(|(a, b)| a <= b))
                {
                    hits += 1;
                }
            }
            let mc = hits as f64 / samples as f64;
            assert!(
                (exact - mc).abs() <= 0.01 * exact.max(0.01),
                "trial {trial}: exact {exact} vs MC {mc}"
            );
        }
    }

    #[test]
    fn hypervolume_monotonicity() {
        let reference = [3.0, 3.0];
        let mut front = vec![vec![1.0, 2.0], vec![2.0, 1.0]];
        let base = hypervolume(&front, &reference);
        // A dominated point changes nothing.
        front.push(vec![2.5, 2.5]);
        assert_relative_eq!(hypervolume(&front, &reference), base, epsilon = 1e-12);
        // A nondominated point strictly helps.
        front.push(vec![0.5, 2.8]);
        assert!(hypervolume(&front, &reference) > base);
    }

    #[test]
    fn recall_cases() {
        let s = |v: &[&[usize]]| -> BTreeSet<SupportSet> {
            v.iter().map(|idx| SupportSet::new(idx.to_vec())).collect()
        };
        let solver = s(&[&[0, 1], &[2]]);
        let reference = s(&[&[0, 1], &[3]]);
        assert_relative_eq!(recall(&solver, &reference).unwrap(), 0.5);

        let superset = s(&[&[0, 1], &[3], &[4]]);
        assert_relative_eq!(recall(&superset, &reference).unwrap(), 1.0);

        let disjoint = s(&[&[5]]);
        assert_relative_eq!(recall(&disjoint, &reference).unwrap(), 0.0);

        assert!(recall(&solver, &BTreeSet::new()).is_err());
    }

    #[test]
    fn reference_merge_keeps_supports_and_filters() {
        let runs = vec![
            (
                "a".to_string(),
                vec![
                    FrontPoint { f: vec![2.0, 4.0], support: SupportSet::new(vec![0]) },
                    FrontPoint { f: vec![0.5, 5.0], support: SupportSet::new(vec![1]) },
                ],
            ),
            (
                "b".to_string(),
                vec![
                    FrontPoint { f: vec![3.0, 1.0], support: SupportSet::new(vec![2]) },
                    FrontPoint { f: vec![3.5, 4.5], support: SupportSet::new(vec![0]) },
                ],
            ),
        ];
        let reference = build_reference(&runs).unwrap();
        assert_eq!(reference.points.len(), 3);
        assert_eq!(reference.supports().len(), 3);

        // A dominated extra run leaves the reference unchanged.
        let mut with_extra = runs.clone();
        with_extra.push((
            "c".to_string(),
            vec![FrontPoint { f: vec![5.0, 6.0], support: SupportSet::new(vec![1, 2]) }],
        ));
        let reference2 = build_reference(&with_extra).unwrap();
        assert_eq!(reference2.points.len(), 3);
    }

    #[test]
    fn reference_point_is_offset_nadir() {
        let fronts = vec![vec![vec![0.0, 2.0], vec![1.0, 0.0]]];
        let r = reference_point(&fronts).unwrap();
        assert_relative_eq!(r[0], 1.0 + 0.1);
        assert_relative_eq!(r[1], 2.0 + 0.2);
    }

    #[test]
    fn profile_single_solver_is_constant_one() {
        let curves = performance_profile(&[vec![3.0, 5.0]], false);
        assert_eq!(curves.len(), 1);
        assert_eq!(curves[0], vec![(1.0, 1.0)]);
    }

    #[test]
    fn profile_dominant_solver_reaches_one_at_tau_one() {
        let curves = performance_profile(&[vec![1.0, 1.0], vec![2.0, 3.0]], false);
        assert_eq!(curves[0], vec![(1.0, 1.0)]);
        assert!(curves[1][0].0 > 1.0 || curves[1][0].1 < 1.0);
    }

    #[test]
    fn profile_hand_matrix() {
        let curves = performance_profile(&[vec![1.0, 2.0], vec![2.0, 1.0]], false);
        for curve in curves {
            assert_eq!(curve, vec![(1.0, 0.5), (2.0, 1.0)]);
        }
    }

    #[test]
    fn profile_handles_missing_cells() {
        let curves = performance_profile(&[vec![1.0, f64::NAN], vec![2.0, 1.0]], false);
        // Missing cell never reaches fraction 1.
        assert_relative_eq!(curves[0].last().unwrap().1, 0.5);
        assert_relative_eq!(curves[1].last().unwrap().1, 1.0);
    }
}
