//! Dense convex quadratic programming:
//!
//! ```text
//!     minimize    1/2 z'Pz + q'z
//!     subject to  G z <= h,   A z = b,
//! ```
//!
//! with P symmetric positive semidefinite. Problems are small and dense
//! (direction subproblems, restricted scalarizations, feasibility
//! certificates), so a Mehrotra-style primal-dual interior point method with
//! a dense KKT factorization per iteration is used. A projected-gradient
//! fallback with Dykstra projections catches the rare instances the interior
//! point iteration cannot finish.
//!
//! A presolve pass handles fixed variables and recursively eliminates
//! equality rows with a single free variable, which keeps degenerate
//! subproblems (single-point feasible sets) away from the barrier iteration.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

const MAX_IPM_ITERS: usize = 200;
const KKT_TOL: f64 = 1e-9;
const MU_TOL: f64 = 1e-11;
const BASE_REG: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct QpProblem {
    pub p: DMatrix<f64>,
    pub q: DVector<f64>,
    pub g: DMatrix<f64>,
    pub h: DVector<f64>,
    pub a_eq: DMatrix<f64>,
    pub b_eq: DVector<f64>,
    /// Per-variable fixing; `Some(v)` pins the variable to `v` exactly.
    pub fixed: Vec<Option<f64>>,
}

impl QpProblem {
    pub fn new(
        p: DMatrix<f64>,
        q: DVector<f64>,
        g: DMatrix<f64>,
        h: DVector<f64>,
        a_eq: DMatrix<f64>,
        b_eq: DVector<f64>,
    ) -> Self {
        let nv = q.len();
        QpProblem { p, q, g, h, a_eq, b_eq, fixed: vec![None; nv] }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QpStatus {
    Converged,
    /// Solved by the projected-gradient fallback (looser precision).
    Fallback,
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    pub z: DVector<f64>,
    pub value: f64,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub status: QpStatus,
}

/// Reduced problem after variable fixing and singleton-equality elimination.
struct Reduced {
    keep: Vec<usize>,
    values: Vec<f64>,
    p: DMatrix<f64>,
    q: DVector<f64>,
    g: DMatrix<f64>,
    h: DVector<f64>,
    a: DMatrix<f64>,
    b: DVector<f64>,
    constant: f64,
}

fn presolve(prob: &QpProblem) -> Result<Reduced> {
    let nv = prob.q.len();
    let mut value = vec![0.0_f64; nv];
    let mut is_fixed = vec![false; nv];
    for (i, f) in prob.fixed.iter().enumerate() {
        if let Some(v) = f {
            is_fixed[i] = true;
            value[i] = *v;
        }
    }
    let me = prob.a_eq.nrows();
    let mut eq_active = vec![true; me];

    // Recursively pin variables determined by single-free-variable equality
    // rows.
    loop {
        let mut changed = false;
        for r in 0..me {
            if !eq_active[r] {
                continue;
            }
            let mut free_idx = None;
            let mut free_count = 0;
            let mut fixed_part = 0.0;
            for j in 0..nv {
                let coef = prob.a_eq[(r, j)];
                if coef == 0.0 {
                    continue;
                }
                if is_fixed[j] {
                    fixed_part += coef * value[j];
                } else {
                    free_count += 1;
                    free_idx = Some(j);
                }
            }
            match free_count {
                0 => {
                    if (fixed_part - prob.b_eq[r]).abs() > 1e-8 {
                        return Err(Error::Infeasible(format!(
                            "equality row {r} violated by fixed variables \
                             (lhs {fixed_part}, rhs {})",
                            prob.b_eq[r]
                        )));
                    }
                    eq_active[r] = false;
                    changed = true;
                }
                1 => {
                    let j = free_idx.unwrap();
                    let coef = prob.a_eq[(r, j)];
                    value[j] = (prob.b_eq[r] - fixed_part) / coef;
                    is_fixed[j] = true;
                    eq_active[r] = false;
                    changed = true;
                }
                _ => {}
            }
        }
        if !changed {
            break;
        }
    }

    let keep: Vec<usize> = (0..nv).filter(|&j| !is_fixed[j]).collect();
    let nk = keep.len();

    // Objective restricted to the free block plus cross terms with the
    // fixed block folded into the linear part and the constant.
    let mut constant = 0.0;
    for i in 0..nv {
        if is_fixed[i] {
            constant += prob.q[i] * value[i];
            for j in 0..nv {
                if is_fixed[j] {
                    constant += 0.5 * value[i] * prob.p[(i, j)] * value[j];
                }
            }
        }
    }
    let p = DMatrix::from_fn(nk, nk, |a, b| prob.p[(keep[a], keep[b])]);
    let q = DVector::from_fn(nk, |a, _| {
        let i = keep[a];
        let mut v = prob.q[i];
        for j in 0..nv {
            if is_fixed[j] {
                v += prob.p[(i, j)] * value[j];
            }
        }
        v
    });

    // Inequalities: substitute fixed variables, drop rows with no free
    // coefficients (checking satisfiability).
    let mut g_rows = Vec::new();
    let mut h_vals = Vec::new();
    for r in 0..prob.g.nrows() {
        let mut rhs = prob.h[r];
        let mut any_free = false;
        let mut row = vec![0.0; nk];
        for j in 0..nv {
            let coef = prob.g[(r, j)];
            if coef == 0.0 {
                continue;
            }
            if is_fixed[j] {
                rhs -= coef * value[j];
            } else {
                any_free = true;
            }
        }
        if !any_free {
            if rhs < -1e-9 {
                return Err(Error::Infeasible(format!(
                    "inequality row {r} unsatisfiable after fixing (slack {rhs:.3e})"
                )));
            }
            continue;
        }
        for (a, &j) in keep.iter().enumerate() {
            row[a] = prob.g[(r, j)];
        }
        g_rows.push(row);
        h_vals.push(rhs);
    }
    let g = DMatrix::from_fn(g_rows.len(), nk, |r, c| g_rows[r][c]);
    let h = DVector::from_vec(h_vals);

    let mut a_rows = Vec::new();
    let mut b_vals = Vec::new();
    for r in 0..me {
        if !eq_active[r] {
            continue;
        }
        let mut rhs = prob.b_eq[r];
        let mut row = vec![0.0; nk];
        for (a, &j) in keep.iter().enumerate() {
            row[a] = prob.a_eq[(r, j)];
        }
        for j in 0..nv {
            if is_fixed[j] && prob.a_eq[(r, j)] != 0.0 {
                rhs -= prob.a_eq[(r, j)] * value[j];
            }
        }
        a_rows.push(row);
        b_vals.push(rhs);
    }
    let a = DMatrix::from_fn(a_rows.len(), nk, |r, c| a_rows[r][c]);
    let b = DVector::from_vec(b_vals);

    Ok(Reduced { keep, values: value, p, q, g, h, a, b, constant })
}

fn expand(red: &Reduced, z: &DVector<f64>) -> DVector<f64> {
    let mut full = DVector::from_vec(red.values.clone());
    for (a, &j) in red.keep.iter().enumerate() {
        full[j] = z[a];
    }
    full
}

/// Solve an equality-constrained QP through its KKT system.
fn solve_eq_kkt(
    p: &DMatrix<f64>,
    q: &DVector<f64>,
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    reg: f64,
) -> Option<DVector<f64>> {
    let nz = q.len();
    let me = a.nrows();
    let dim = nz + me;
    let mut kkt = DMatrix::zeros(dim, dim);
    for i in 0..nz {
        for j in 0..nz {
            kkt[(i, j)] = p[(i, j)];
        }
        kkt[(i, i)] += reg;
    }
    for r in 0..me {
        for j in 0..nz {
            kkt[(nz + r, j)] = a[(r, j)];
            kkt[(j, nz + r)] = a[(r, j)];
        }
        kkt[(nz + r, nz + r)] = -reg;
    }
    let mut rhs = DVector::zeros(dim);
    for i in 0..nz {
        rhs[i] = -q[i];
    }
    for r in 0..me {
        rhs[nz + r] = b[r];
    }
    kkt.lu().solve(&rhs).map(|sol| sol.rows(0, nz).into_owned())
}

struct IpmOutcome {
    z: DVector<f64>,
    kkt_residual: f64,
    iterations: usize,
    converged: bool,
}

fn ipm(red: &Reduced) -> Result<IpmOutcome> {
    let nz = red.q.len();
    let mi = red.g.nrows();
    let me = red.a.nrows();

    // No inequalities: one KKT solve.
    if mi == 0 {
        let z = solve_eq_kkt(&red.p, &red.q, &red.a, &red.b, BASE_REG)
            .ok_or_else(|| Error::Numerical("singular equality KKT system".into()))?;
        let rd = (&red.p * &z + &red.q).amax();
        let re = if me > 0 { (&red.a * &z - &red.b).amax() } else { 0.0 };
        return Ok(IpmOutcome { z, kkt_residual: rd.max(re), iterations: 1, converged: true });
    }

    // Equality-consistent start.
    let mut z = if me > 0 {
        solve_eq_kkt(&DMatrix::identity(nz, nz), &DVector::zeros(nz), &red.a, &red.b, BASE_REG)
            .unwrap_or_else(|| DVector::zeros(nz))
    } else {
        DVector::zeros(nz)
    };
    let gz = &red.g * &z;
    let mut s = DVector::from_fn(mi, |i, _| (red.h[i] - gz[i]).max(1.0));
    let mut lam = DVector::from_element(mi, 1.0);
    let mut nu = DVector::zeros(me.max(0));

    let mut best_kkt = f64::INFINITY;
    for iter in 0..MAX_IPM_ITERS {
        let rd = &red.p * &z + &red.q + red.g.transpose() * &lam
            + if me > 0 { red.a.transpose() * &nu } else { DVector::zeros(nz) };
        let rp = &red.g * &z + &s - &red.h;
        let re = if me > 0 { &red.a * &z - &red.b } else { DVector::zeros(0) };
        let mu = s.dot(&lam) / mi as f64;
        let kkt = rd.amax().max(rp.amax()).max(if me > 0 { re.amax() } else { 0.0 });
        best_kkt = best_kkt.min(kkt.max(mu));
        if kkt <= KKT_TOL && mu <= MU_TOL {
            return Ok(IpmOutcome { z, kkt_residual: kkt.max(mu), iterations: iter, converged: true });
        }

        // Normal-equations form of the Newton system, factored once and
        // reused for predictor and corrector.
        let w = DVector::from_fn(mi, |i, _| lam[i] / s[i]);
        let mut reg = BASE_REG;
        let (lu, dim) = loop {
            let mut m = red.p.clone();
            for r in 0..mi {
                let wr = w[r];
                for i in 0..nz {
                    let gri = red.g[(r, i)];
                    if gri == 0.0 {
                        continue;
                    }
                    for j in 0..nz {
                        m[(i, j)] += wr * gri * red.g[(r, j)];
                    }
                }
            }
            let dim = nz + me;
            let mut kktm = DMatrix::zeros(dim, dim);
            for i in 0..nz {
                for j in 0..nz {
                    kktm[(i, j)] = m[(i, j)];
                }
                kktm[(i, i)] += reg;
            }
            for r in 0..me {
                for j in 0..nz {
                    kktm[(nz + r, j)] = red.a[(r, j)];
                    kktm[(j, nz + r)] = red.a[(r, j)];
                }
                kktm[(nz + r, nz + r)] = -reg.max(1e-12);
            }
            let lu = kktm.lu();
            if lu.is_invertible() || reg > 1e-4 {
                break (lu, dim);
            }
            reg *= 100.0;
        };

        let solve_step = |rc: &DVector<f64>| -> Option<(DVector<f64>, DVector<f64>, DVector<f64>, DVector<f64>)> {
            // dl = W(rp + G dz) - rc/s ; plug into the stationarity row.
            let mut rhs = DVector::zeros(dim);
            let gterm = DVector::from_fn(mi, |i, _| w[i] * rp[i] - rc[i] / s[i]);
            let top = -&rd - red.g.transpose() * &gterm;
            for i in 0..nz {
                rhs[i] = top[i];
            }
            for r in 0..me {
                rhs[nz + r] = -re[r];
            }
            let sol = lu.solve(&rhs)?;
            let dz = sol.rows(0, nz).into_owned();
            let dnu = if me > 0 { sol.rows(nz, me).into_owned() } else { DVector::zeros(0) };
            let gdz = &red.g * &dz;
            let ds = -&rp - &gdz;
            let dl = DVector::from_fn(mi, |i, _| w[i] * (rp[i] + gdz[i]) - rc[i] / s[i]);
            Some((dz, dnu, ds, dl))
        };

        // Predictor.
        let rc_aff = DVector::from_fn(mi, |i, _| s[i] * lam[i]);
        let Some((_dz_a, _dnu_a, ds_a, dl_a)) = solve_step(&rc_aff) else {
            break;
        };
        let step_len = |v: &DVector<f64>, dv: &DVector<f64>| -> f64 {
            let mut alpha: f64 = 1.0;
            for i in 0..v.len() {
                if dv[i] < 0.0 {
                    alpha = alpha.min(-v[i] / dv[i]);
                }
            }
            alpha
        };
        let ap = step_len(&s, &ds_a);
        let ad = step_len(&lam, &dl_a);
        let mu_aff = (0..mi)
            .map(|i| (s[i] + ap * ds_a[i]) * (lam[i] + ad * dl_a[i]))
            .sum::<f64>()
            / mi as f64;
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);

        // Corrector.
        let rc = DVector::from_fn(mi, |i, _| s[i] * lam[i] - sigma * mu + ds_a[i] * dl_a[i]);
        let Some((dz, dnu, ds, dl)) = solve_step(&rc) else {
            break;
        };
        let eta = 0.99;
        let ap = (eta * step_len(&s, &ds)).min(1.0);
        let ad = (eta * step_len(&lam, &dl)).min(1.0);
        z += ap * &dz;
        s += ap * &ds;
        lam += ad * &dl;
        if me > 0 {
            nu += ad * &dnu;
        }
    }

    Ok(IpmOutcome { z, kkt_residual: best_kkt, iterations: MAX_IPM_ITERS, converged: false })
}

/// Dykstra's alternating projection onto {Az = b} and the halfspaces of
/// G z <= h.
fn dykstra_project(red: &Reduced, point: &DVector<f64>, cycles: usize) -> DVector<f64> {
    let mi = red.g.nrows();
    let me = red.a.nrows();
    let nsets = mi + if me > 0 { 1 } else { 0 };
    if nsets == 0 {
        return point.clone();
    }
    let aat_lu = if me > 0 {
        let mut aat = &red.a * red.a.transpose();
        for i in 0..me {
            aat[(i, i)] += 1e-12;
        }
        Some(aat.lu())
    } else {
        None
    };
    let row_norm2: Vec<f64> = (0..mi).map(|r| red.g.row(r).norm_squared()).collect();
    let mut z = point.clone();
    let mut corrections = vec![DVector::zeros(z.len()); nsets];
    for _ in 0..cycles {
        let mut shift = 0.0;
        for set in 0..nsets {
            let y = &z + &corrections[set];
            let projected = if me > 0 && set == 0 {
                let resid = &red.a * &y - &red.b;
                let lam = aat_lu.as_ref().unwrap().solve(&resid).unwrap_or_else(|| resid.clone());
                &y - red.a.transpose() * lam
            } else {
                let r = if me > 0 { set - 1 } else { set };
                let viol = red.g.row(r).dot(&y.transpose()) - red.h[r];
                if viol > 0.0 && row_norm2[r] > 0.0 {
                    &y - red.g.row(r).transpose() * (viol / row_norm2[r])
                } else {
                    y.clone()
                }
            };
            corrections[set] = &y - &projected;
            shift += (&projected - &z).amax();
            z = projected;
        }
        if shift < 1e-13 {
            break;
        }
    }
    z
}

fn projected_gradient(red: &Reduced) -> Result<(DVector<f64>, f64, usize)> {
    let nz = red.q.len();
    let lip = (0..nz)
        .map(|i| (0..nz).map(|j| red.p[(i, j)].abs()).sum::<f64>())
        .fold(0.0_f64, f64::max)
        + 1.0;
    let eta = 1.0 / lip;
    let mut z = dykstra_project(red, &DVector::zeros(nz), 400);
    let mut residual = f64::INFINITY;
    let max_iters = 20_000;
    for iter in 0..max_iters {
        let grad = &red.p * &z + &red.q;
        let next = dykstra_project(red, &(&z - eta * &grad), 120);
        let moved = (&next - &z).amax();
        z = next;
        if iter % 50 == 0 || moved < 1e-13 {
            let grad = &red.p * &z + &red.q;
            let fixed_point = dykstra_project(red, &(&z - &grad), 400);
            residual = (&fixed_point - &z).amax();
            if residual < 1e-8 {
                return Ok((z, residual, iter + 1));
            }
        }
    }
    Ok((z, residual, max_iters))
}

/// Solve the QP: presolve, interior point, projected-gradient fallback.
pub fn solve(prob: &QpProblem) -> Result<QpSolution> {
    let red = presolve(prob)?;
    if red.keep.is_empty() {
        // Fully determined by fixings and equalities.
        let z = DVector::from_vec(red.values.clone());
        return Ok(QpSolution {
            value: red.constant,
            z,
            kkt_residual: 0.0,
            iterations: 0,
            status: QpStatus::Converged,
        });
    }
    let outcome = ipm(&red)?;
    let objective =
        |z: &DVector<f64>| 0.5 * z.dot(&(&red.p * z)) + red.q.dot(z) + red.constant;
    if outcome.converged {
        return Ok(QpSolution {
            value: objective(&outcome.z),
            z: expand(&red, &outcome.z),
            kkt_residual: outcome.kkt_residual,
            iterations: outcome.iterations,
            status: QpStatus::Converged,
        });
    }
    let (z, residual, pg_iters) = projected_gradient(&red)?;
    if residual > 1e-7 {
        return Err(Error::Numerical(format!(
            "QP solver did not converge: interior point residual {:.3e} after {} iterations, \
             fallback residual {:.3e}",
            outcome.kkt_residual, outcome.iterations, residual
        )));
    }
    Ok(QpSolution {
        value: objective(&z),
        z: expand(&red, &z),
        kkt_residual: residual,
        iterations: outcome.iterations + pg_iters,
        status: QpStatus::Fallback,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// min t + d^2/2 s.t. 2d <= t. Optimal at d = -2, t = -4, value -2.
    #[test]
    fn epigraph_of_scalar_quadratic() {
        let mut p = DMatrix::zeros(2, 2);
        p[(0, 0)] = 1.0;
        let q = DVector::from_row_slice(&[0.0, 1.0]);
        let g = DMatrix::from_row_slice(1, 2, &[2.0, -1.0]);
        let h = DVector::from_row_slice(&[0.0]);
        let prob = QpProblem::new(p, q, g, h, DMatrix::zeros(0, 2), DVector::zeros(0));
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.status, QpStatus::Converged);
        assert_relative_eq!(sol.z[0], -2.0, epsilon = 1e-7);
        assert_relative_eq!(sol.value, -2.0, epsilon = 1e-8);
    }

    #[test]
    fn equality_only_least_norm() {
        let prob = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::zeros(2),
            DMatrix::zeros(0, 2),
            DVector::zeros(0),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_row_slice(&[1.0]),
        );
        let sol = solve(&prob).unwrap();
        assert_relative_eq!(sol.z[0], 0.5, epsilon = 1e-9);
        assert_relative_eq!(sol.z[1], 0.5, epsilon = 1e-9);
    }

    /// Projection of a point onto the probability simplex, checked against
    /// the sort-based closed form.
    fn simplex_projection_oracle(c: &[f64]) -> Vec<f64> {
        let mut u: Vec<f64> = c.to_vec();
        u.sort_by(|a, b| b.total_cmp(a));
        let mut css = 0.0;
        let mut rho = 0;
        for (i, &ui) in u.iter().enumerate() {
            css += ui;
            if ui - (css - 1.0) / (i + 1) as f64 > 0.0 {
                rho = i + 1;
            }
        }
        let theta = (u[..rho].iter().sum::<f64>() - 1.0) / rho as f64;
        c.iter().map(|&v| (v - theta).max(0.0)).collect()
    }

    #[test]
    fn simplex_projection_matches_sort_oracle() {
        use rand::Rng;
        let mut rng = crate::util::stream_rng(17, "qp-simplex", 0);
        for trial in 0..25 {
            let n = 2 + trial % 6;
            let c: Vec<f64> = (0..n).map(|_| 4.0 * rng.gen::<f64>() - 2.0).collect();
            // min 1/2||z - c||^2 = 1/2 z'z - c'z (+ const) over the simplex.
            let g = {
                let mut m = DMatrix::zeros(n, n);
                for i in 0..n {
                    m[(i, i)] = -1.0;
                }
                m
            };
            let prob = QpProblem::new(
                DMatrix::identity(n, n),
                DVector::from_vec(c.iter().map(|v| -v).collect()),
                g,
                DVector::zeros(n),
                DMatrix::from_row_slice(1, n, &vec![1.0; n]),
                DVector::from_row_slice(&[1.0]),
            );
            let sol = solve(&prob).unwrap();
            let oracle = simplex_projection_oracle(&c);
            for i in 0..n {
                assert!(
                    (sol.z[i] - oracle[i]).abs() < 1e-7,
                    "trial {trial}: component {i}: {} vs oracle {}",
                    sol.z[i],
                    oracle[i]
                );
            }
        }
    }

    #[test]
    fn fixed_variables_are_eliminated() {
        // Simplex in 3 vars with two pinned to zero forces the third to one.
        let n = 3;
        let mut prob = QpProblem::new(
            DMatrix::identity(n, n),
            DVector::zeros(n),
            DMatrix::zeros(0, n),
            DVector::zeros(0),
            DMatrix::from_row_slice(1, n, &[1.0, 1.0, 1.0]),
            DVector::from_row_slice(&[1.0]),
        );
        prob.fixed[1] = Some(0.0);
        prob.fixed[2] = Some(0.0);
        let sol = solve(&prob).unwrap();
        assert_eq!(sol.z[0], 1.0);
        assert_eq!(sol.iterations, 0);
    }

    #[test]
    fn presolve_detects_fixed_infeasibility() {
        let n = 2;
        let mut prob = QpProblem::new(
            DMatrix::identity(n, n),
            DVector::zeros(n),
            DMatrix::zeros(0, n),
            DVector::zeros(0),
            DMatrix::from_row_slice(1, n, &[1.0, 1.0]),
            DVector::from_row_slice(&[1.0]),
        );
        prob.fixed[0] = Some(0.3);
        prob.fixed[1] = Some(0.3);
        assert!(matches!(solve(&prob), Err(Error::Infeasible(_))));
    }

    #[test]
    fn bounded_qp_with_active_box() {
        // min 1/2 (z1^2 + z2^2) - 2 z1 s.t. z1 <= 1, -z2 <= 0, z1 + z2 = 1.
        // Forces z = (1, 0).
        let prob = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::from_row_slice(&[-2.0, 0.0]),
            DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]),
            DVector::from_row_slice(&[1.0, 0.0]),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_row_slice(&[1.0]),
        );
        let sol = solve(&prob).unwrap();
        assert_relative_eq!(sol.z[0], 1.0, epsilon = 1e-7);
        assert_relative_eq!(sol.z[1], 0.0, epsilon = 1e-7);
    }

    #[test]
    fn fallback_projected_gradient_agrees_with_ipm() {
        // Exercise the fallback path directly on a small problem.
        let prob = QpProblem::new(
            DMatrix::identity(2, 2),
            DVector::from_row_slice(&[-1.0, -4.0]),
            DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]),
            DVector::zeros(2),
            DMatrix::from_row_slice(1, 2, &[1.0, 1.0]),
            DVector::from_row_slice(&[1.0]),
        );
        let red = presolve(&prob).unwrap();
        let (z, residual, _) = projected_gradient(&red).unwrap();
        let sol = solve(&prob).unwrap();
        assert!(residual < 1e-7);
        assert!((z[0] - sol.z[0]).abs() < 1e-5);
        assert!((z[1] - sol.z[1]).abs() < 1e-5);
    }
}
