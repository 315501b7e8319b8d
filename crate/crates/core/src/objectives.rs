//! Evaluation and differentiation of the five portfolio objectives, plus
//! sample estimation of the model parameters from return data.
//!
//! The internal convention is pure minimization: natively maximized
//! objectives (expected return, ESG, Sharpe, skewness) are negated at
//! evaluation time, and reporting layers restore the natural sign.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{ObjectiveId, Sense};

/// Beyond this dimension the coskewness tensor is not materialized; skewness
/// is contracted on the fly from centered returns.
pub const DENSE_COSKEW_LIMIT: usize = 128;

/// One selected objective: identifier, positive scale factor and the
/// orientation it is optimized in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveTerm {
    pub id: ObjectiveId,
    pub scale: f64,
    pub sense: Sense,
}

impl ObjectiveTerm {
    /// Term with the objective's natural orientation.
    pub fn new(id: ObjectiveId, scale: f64) -> Self {
        ObjectiveTerm { id, scale, sense: id.natural_sense() }
    }

    pub fn with_sense(id: ObjectiveId, scale: f64, sense: Sense) -> Self {
        ObjectiveTerm { id, scale, sense }
    }

    /// +1 if the raw objective is minimized as stated, -1 if it is maximized
    /// and therefore negated internally.
    pub fn sign(&self) -> f64 {
        match self.sense {
            Sense::Minimize => 1.0,
            Sense::Maximize => -1.0,
        }
    }
}

/// Dense row-major n^3 coskewness tensor.
#[derive(Debug, Clone)]
pub struct CoskewTensor {
    n: usize,
    data: Vec<f64>,
}

impl CoskewTensor {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n * n {
            return Err(Error::Data(format!(
                "coskewness tensor length {} is not {}^3",
                data.len(),
                n
            )));
        }
        Ok(CoskewTensor { n, data })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// Largest deviation from symmetry under index permutations.
    fn asymmetry(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    let base = self.get(i, j, k);
                    for &v in &[
                        self.get(i, k, j),
                        self.get(j, i, k),
                        self.get(j, k, i),
                        self.get(k, i, j),
                        self.get(k, j, i),
                    ] {
                        worst = worst.max((v - base).abs());
                    }
                }
            }
        }
        worst
    }
}

/// Estimated model parameters: expected returns, covariance, ESG scores,
/// coskewness and market betas.
#[derive(Debug, Clone)]
pub struct ObjectiveModel {
    pub c: DVector<f64>,
    pub q: DMatrix<f64>,
    pub esg: DVector<f64>,
    coskew: Option<CoskewTensor>,
    /// Centered return series (T x n), kept when the dense tensor would be
    /// too large; used for on-the-fly skewness contraction.
    centered_returns: Option<DMatrix<f64>>,
    pub beta: DVector<f64>,
}

impl ObjectiveModel {
    pub fn new(
        c: DVector<f64>,
        q: DMatrix<f64>,
        esg: DVector<f64>,
        coskew: Option<CoskewTensor>,
        beta: DVector<f64>,
    ) -> Result<Self> {
        let n = c.len();
        if q.nrows() != n || q.ncols() != n {
            return Err(Error::Data(format!(
                "covariance is {}x{}, expected {n}x{n}",
                q.nrows(),
                q.ncols()
            )));
        }
        if esg.len() != n || beta.len() != n {
            return Err(Error::Data("esg/beta vectors must have length n".into()));
        }
        let sym = (&q - q.transpose()).abs().max();
        if sym > 1e-10 {
            return Err(Error::Data(format!("covariance asymmetry {sym:.3e} exceeds 1e-10")));
        }
        let min_eig = q
            .clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .fold(f64::INFINITY, |a, &b| a.min(b));
        if min_eig < -1e-8 {
            return Err(Error::Data(format!(
                "covariance has eigenvalue {min_eig:.3e}, not PSD within tolerance"
            )));
        }
        if let Some(t) = &coskew {
            if t.n != n {
                return Err(Error::Data("coskewness dimension mismatch".into()));
            }
            let asym = t.asymmetry();
            if asym > 1e-10 {
                return Err(Error::Data(format!(
                    "coskewness asymmetry {asym:.3e} exceeds 1e-10"
                )));
            }
        }
        Ok(ObjectiveModel { c, q, esg, coskew, centered_returns: None, beta })
    }

    /// Build from plain JSON-document parts.
    pub fn from_parts(
        c: Vec<f64>,
        q_rows: Vec<Vec<f64>>,
        esg: Vec<f64>,
        coskew: Option<Vec<f64>>,
        beta: Vec<f64>,
    ) -> Result<Self> {
        let n = c.len();
        if q_rows.len() != n || q_rows.iter().any(|r| r.len() != n) {
            return Err(Error::Data("covariance rows must form an n x n matrix".into()));
        }
        let q = DMatrix::from_fn(n, n, |i, j| q_rows[i][j]);
        let tensor = coskew.map(|data| CoskewTensor::new(n, data)).transpose()?;
        ObjectiveModel::new(
            DVector::from_vec(c),
            q,
            DVector::from_vec(esg),
            tensor,
            DVector::from_vec(beta),
        )
    }

    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn coskew_dense(&self) -> Option<&[f64]> {
        self.coskew.as_ref().map(|t| t.as_slice())
    }

    pub fn has_coskew(&self) -> bool {
        self.coskew.is_some() || self.centered_returns.is_some()
    }

    /// Verify that the model carries every field the selected objectives
    /// need.
    pub fn check_requirements(&self, terms: &[ObjectiveTerm]) -> Result<()> {
        for term in terms {
            if term.id == ObjectiveId::SW && !self.has_coskew() {
                return Err(Error::Config(
                    "skewness objective selected but no coskewness data present".into(),
                ));
            }
        }
        Ok(())
    }

    /// Raw portfolio skewness x'C(x (x) x) and its gradient 3 C(x (x) x).
    fn skewness(&self, x: &DVector<f64>) -> Result<(f64, DVector<f64>)> {
        let n = self.dim();
        if let Some(t) = &self.coskew {
            // Contract over the support of x only; the gradient still spans
            // all coordinates.
            let sup: Vec<usize> =
                (0..n).filter(|&i| x[i] != 0.0).collect();
            let mut grad = DVector::zeros(n);
            for i in 0..n {
                let mut acc = 0.0;
                for &j in &sup {
                    for &k in &sup {
                        acc += t.get(i, j, k) * x[j] * x[k];
                    }
                }
                grad[i] = acc;
            }
            let value = (0..n).map(|i| x[i] * grad[i]).sum::<f64>();
            grad *= 3.0;
            Ok((value, grad))
        } else if let Some(r) = &self.centered_returns {
            // x'C(x (x) x) = mean over t of (r_t'x)^3.
            let t_count = r.nrows();
            let proj = r * x;
            let value = proj.iter().map(|p| p.powi(3)).sum::<f64>() / t_count as f64;
            let mut grad = DVector::zeros(n);
            for t in 0..t_count {
                let p2 = proj[t] * proj[t];
                for i in 0..n {
                    grad[i] += p2 * r[(t, i)];
                }
            }
            grad *= 3.0 / t_count as f64;
            Ok((value, grad))
        } else {
            Err(Error::Config("no coskewness data available".into()))
        }
    }
}

/// Raw (unscaled, natural-form) objective value and gradient.
fn raw_objective(
    model: &ObjectiveModel,
    id: ObjectiveId,
    x: &DVector<f64>,
    qx: &DVector<f64>,
) -> Result<(f64, DVector<f64>)> {
    match id {
        ObjectiveId::ER => Ok((model.c.dot(x), model.c.clone())),
        ObjectiveId::V => Ok((0.5 * x.dot(qx), qx.clone())),
        ObjectiveId::ESG => Ok((model.esg.dot(x), model.esg.clone())),
        ObjectiveId::SR => {
            let var = 0.5 * x.dot(qx);
            if var <= 0.0 {
                return Err(Error::Domain(
                    "Sharpe ratio undefined at a zero-variance point".into(),
                ));
            }
            let er = model.c.dot(x);
            let sd = var.sqrt();
            let value = er / sd;
            // Quotient rule: d/dx [er / sqrt(var)] with grad(var) = Qx.
            let grad = &model.c / sd - qx * (er / (2.0 * var * sd));
            Ok((value, grad))
        }
        ObjectiveId::SW => model.skewness(x),
    }
}

/// Objective vector in the minimization convention: component j equals
/// scale_j * (raw value, negated when the objective is maximized).
pub fn eval_objectives(
    model: &ObjectiveModel,
    terms: &[ObjectiveTerm],
    x: &DVector<f64>,
) -> Result<DVector<f64>> {
    let qx = &model.q * x;
    let mut f = DVector::zeros(terms.len());
    for (j, term) in terms.iter().enumerate() {
        let (value, _) = raw_objective(model, term.id, x, &qx)?;
        f[j] = term.scale * term.sign() * value;
    }
    Ok(f)
}

/// Jacobian (m x n) of the internal objective vector at x.
pub fn grad_objectives(
    model: &ObjectiveModel,
    terms: &[ObjectiveTerm],
    x: &DVector<f64>,
) -> Result<DMatrix<f64>> {
    let qx = &model.q * x;
    let mut jac = DMatrix::zeros(terms.len(), x.len());
    for (j, term) in terms.iter().enumerate() {
        let (_, grad) = raw_objective(model, term.id, x, &qx)?;
        let factor = term.scale * term.sign();
        for i in 0..x.len() {
            jac[(j, i)] = factor * grad[i];
        }
    }
    Ok(jac)
}

/// Recover natural-orientation raw values from an internal objective vector.
pub fn natural_values(terms: &[ObjectiveTerm], internal: &[f64]) -> Vec<f64> {
    terms
        .iter()
        .zip(internal)
        .map(|(t, &v)| t.sign() * v / t.scale)
        .collect()
}

/// An evaluable multi-objective function; implemented by the scaled
/// portfolio objective set, penalty wrappers and test objectives.
pub trait VectorObjective {
    /// Number of decision variables.
    fn dim(&self) -> usize;
    /// Number of objectives.
    fn count(&self) -> usize;
    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    /// Jacobian, one row per objective.
    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>>;
}

/// The selected portfolio objectives over a model, in the minimization
/// convention. Pure and reentrant.
#[derive(Debug, Clone)]
pub struct ObjectiveSet<'a> {
    pub model: &'a ObjectiveModel,
    pub terms: &'a [ObjectiveTerm],
}

impl<'a> ObjectiveSet<'a> {
    pub fn new(model: &'a ObjectiveModel, terms: &'a [ObjectiveTerm]) -> Result<Self> {
        model.check_requirements(terms)?;
        Ok(ObjectiveSet { model, terms })
    }

    /// True when every selected objective is linear or quadratic (no Sharpe
    /// ratio or skewness), so weighted sums stay convex quadratics.
    pub fn is_convex_quadratic(&self) -> bool {
        self.terms
            .iter()
            .all(|t| matches!(t.id, ObjectiveId::ER | ObjectiveId::V | ObjectiveId::ESG))
    }
}

impl VectorObjective for ObjectiveSet<'_> {
    fn dim(&self) -> usize {
        self.model.dim()
    }

    fn count(&self) -> usize {
        self.terms.len()
    }

    fn evaluate(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        eval_objectives(self.model, self.terms, x)
    }

    fn jacobian(&self, x: &DVector<f64>) -> Result<DMatrix<f64>> {
        grad_objectives(self.model, self.terms, x)
    }
}

/// Divisor convention for covariance and coskewness estimation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CovarianceDivisor {
    /// Divide by T (population moments).
    #[default]
    Population,
    /// Divide by T - 1.
    Sample,
}

/// Estimate model parameters from a T x n return matrix, the market return
/// series and per-asset ESG scores. Moments divide by T by default.
pub fn estimate_model(
    returns: &DMatrix<f64>,
    market_returns: &DVector<f64>,
    esg_scores: &DVector<f64>,
    divisor: CovarianceDivisor,
) -> Result<ObjectiveModel> {
    let t_count = returns.nrows();
    let n = returns.ncols();
    if t_count < 2 {
        return Err(Error::Data(format!(
            "need at least 2 return periods, got {t_count}"
        )));
    }
    if market_returns.len() != t_count {
        return Err(Error::Data("market return series length mismatch".into()));
    }
    if esg_scores.len() != n {
        return Err(Error::Data("ESG score vector length mismatch".into()));
    }
    if returns.iter().any(|v| !v.is_finite()) || market_returns.iter().any(|v| !v.is_finite()) {
        return Err(Error::Data("returns contain non-finite values".into()));
    }
    let denom = match divisor {
        CovarianceDivisor::Population => t_count as f64,
        CovarianceDivisor::Sample => (t_count - 1) as f64,
    };

    let c = DVector::from_fn(n, |i, _| returns.column(i).mean());
    let centered = DMatrix::from_fn(t_count, n, |t, i| returns[(t, i)] - c[i]);
    let q = centered.transpose() * &centered / denom;

    let m_mean = market_returns.mean();
    let m_centered = market_returns.map(|v| v - m_mean);
    let m_var = m_centered.dot(&m_centered);
    if m_var <= 1e-16 * (1.0 + market_returns.norm_squared()) {
        return Err(Error::Data(
            "market return variance is zero; betas are undefined".into(),
        ));
    }
    let beta = DVector::from_fn(n, |i, _| centered.column(i).dot(&m_centered) / m_var);

    let mut model = if n <= DENSE_COSKEW_LIMIT {
        let mut data = vec![0.0; n * n * n];
        for t in 0..t_count {
            for i in 0..n {
                let ri = centered[(t, i)];
                if ri == 0.0 {
                    continue;
                }
                for j in 0..n {
                    let rij = ri * centered[(t, j)];
                    if rij == 0.0 {
                        continue;
                    }
                    let base = (i * n + j) * n;
                    for k in 0..n {
                        data[base + k] += rij * centered[(t, k)];
                    }
                }
            }
        }
        for v in &mut data {
            *v /= denom;
        }
        ObjectiveModel::new(c, q, esg_scores.clone(), Some(CoskewTensor::new(n, data)?), beta)?
    } else {
        let mut m = ObjectiveModel::new(c, q, esg_scores.clone(), None, beta)?;
        // Keep centered returns for on-the-fly skewness. Note the divisor is
        // T in this path; the sample divisor is only honored for the dense
        // tensor.
        m.centered_returns = Some(centered);
        m
    };
    // Symmetrize tiny floating point drift in Q so the PSD/symmetry checks
    // in downstream constructors stay well inside tolerance.
    let q_sym = (&model.q + model.q.transpose()) * 0.5;
    model.q = q_sym;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn toy_model() -> ObjectiveModel {
        // Quadratic form 2x1^2 + 0.5x2^2 + 3x3^2 expressed through the
        // half-convention: Q = diag(4, 1, 6).
        ObjectiveModel::new(
            DVector::from_row_slice(&[4.0, 5.0, 1.0]),
            DMatrix::from_diagonal(&DVector::from_row_slice(&[4.0, 1.0, 6.0])),
            DVector::zeros(3),
            None,
            DVector::zeros(3),
        )
        .unwrap()
    }

    fn toy_terms() -> Vec<ObjectiveTerm> {
        vec![
            ObjectiveTerm::new(ObjectiveId::V, 1.0),
            // The toy's return-like objective is minimized as stated.
            ObjectiveTerm::with_sense(ObjectiveId::ER, 1.0, Sense::Minimize),
        ]
    }

    #[test]
    fn toy_vertex_values() {
        let model = toy_model();
        let terms = toy_terms();
        let e = |i: usize| {
            let mut x = DVector::zeros(3);
            x[i] = 1.0;
            x
        };
        let f1 = eval_objectives(&model, &terms, &e(0)).unwrap();
        let f2 = eval_objectives(&model, &terms, &e(1)).unwrap();
        let f3 = eval_objectives(&model, &terms, &e(2)).unwrap();
        assert_relative_eq!(f1[0], 2.0);
        assert_relative_eq!(f1[1], 4.0);
        assert_relative_eq!(f2[0], 0.5);
        assert_relative_eq!(f2[1], 5.0);
        assert_relative_eq!(f3[0], 3.0);
        assert_relative_eq!(f3[1], 1.0);
    }

    #[test]
    fn expected_return_at_basis_vector_reads_c() {
        let model = toy_model();
        let terms = [ObjectiveTerm::new(ObjectiveId::ER, 1.0)];
        let mut x = DVector::zeros(3);
        x[1] = 1.0;
        let f = eval_objectives(&model, &terms, &x).unwrap();
        // Natively maximized, so the internal value is negated.
        assert_relative_eq!(f[0], -5.0);
        assert_eq!(natural_values(&terms, f.as_slice()), vec![5.0]);
    }

    #[test]
    fn variance_gradient_with_identity_covariance_is_x() {
        let n = 4;
        let model = ObjectiveModel::new(
            DVector::zeros(n),
            DMatrix::identity(n, n),
            DVector::zeros(n),
            None,
            DVector::zeros(n),
        )
        .unwrap();
        let terms = [ObjectiveTerm::new(ObjectiveId::V, 1.0)];
        let x = DVector::from_row_slice(&[0.1, 0.2, 0.3, 0.4]);
        let jac = grad_objectives(&model, &terms, &x).unwrap();
        for i in 0..n {
            assert_relative_eq!(jac[(0, i)], x[i]);
        }
    }

    #[test]
    fn single_asset_third_moment_is_zero() {
        // Returns [0.1, -0.1, 0.0]: mean 0, Q11 = 0.02/3, C111 = 0.
        let returns = DMatrix::from_column_slice(3, 1, &[0.1, -0.1, 0.0]);
        let market = DVector::from_row_slice(&[0.1, -0.1, 0.0]);
        let esg = DVector::from_row_slice(&[1.0]);
        let model =
            estimate_model(&returns, &market, &esg, CovarianceDivisor::Population).unwrap();
        assert_relative_eq!(model.c[0], 0.0);
        assert_relative_eq!(model.q[(0, 0)], 0.02 / 3.0, max_relative = 1e-12);
        assert_relative_eq!(model.coskew_dense().unwrap()[0], 0.0);
        // Asset identical to market: beta = 1.
        assert_relative_eq!(model.beta[0], 1.0);

        let terms = [ObjectiveTerm::new(ObjectiveId::SW, 1.0)];
        let x = DVector::from_row_slice(&[1.0]);
        let f = eval_objectives(&model, &terms, &x).unwrap();
        assert_relative_eq!(f[0], 0.0);
    }

    #[test]
    fn two_asset_estimation_matches_hand_computation() {
        let returns =
            DMatrix::from_columns(&[
                DVector::from_row_slice(&[0.1, -0.1, 0.0]),
                DVector::from_row_slice(&[0.2, 0.0, 0.1]),
            ]);
        let market = DVector::from_row_slice(&[0.1, -0.1, 0.0]);
        let esg = DVector::from_row_slice(&[1.0, 2.0]);
        let model =
            estimate_model(&returns, &market, &esg, CovarianceDivisor::Population).unwrap();
        assert_relative_eq!(model.c[1], 0.1, max_relative = 1e-12);
        assert_relative_eq!(model.q[(0, 1)], 0.02 / 3.0, max_relative = 1e-12);
    }

    #[test]
    fn estimation_rejects_degenerate_inputs() {
        let returns = DMatrix::from_column_slice(1, 1, &[0.1]);
        let market = DVector::from_row_slice(&[0.1]);
        let esg = DVector::from_row_slice(&[0.0]);
        assert!(estimate_model(&returns, &market, &esg, CovarianceDivisor::Population).is_err());

        let returns = DMatrix::from_column_slice(3, 1, &[0.1, -0.1, 0.0]);
        let flat_market = DVector::from_row_slice(&[0.05, 0.05, 0.05]);
        assert!(
            estimate_model(&returns, &flat_market, &esg, CovarianceDivisor::Population).is_err()
        );
    }

    #[test]
    fn sharpe_errors_at_zero_variance() {
        let model = ObjectiveModel::new(
            DVector::from_row_slice(&[1.0, 1.0]),
            DMatrix::zeros(2, 2),
            DVector::zeros(2),
            None,
            DVector::zeros(2),
        )
        .unwrap();
        let terms = [ObjectiveTerm::new(ObjectiveId::SR, 1.0)];
        let x = DVector::from_row_slice(&[0.5, 0.5]);
        assert!(matches!(
            eval_objectives(&model, &terms, &x),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn skewness_requires_coskew_data() {
        let model = toy_model();
        let terms = [ObjectiveTerm::new(ObjectiveId::SW, 1.0)];
        assert!(matches!(
            ObjectiveSet::new(&model, &terms),
            Err(Error::Config(_))
        ));
    }

    /// Central finite difference oracle, h = 1e-6.
    fn fd_gradient<F: Fn(&DVector<f64>) -> f64>(f: F, x: &DVector<f64>) -> DVector<f64> {
        let h = 1e-6;
        DVector::from_fn(x.len(), |i, _| {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[i] += h;
            xm[i] -= h;
            (f(&xp) - f(&xm)) / (2.0 * h)
        })
    }

    #[test]
    fn gradients_match_finite_differences() {
        use rand::Rng;
        let n = 5;
        let mut rng = crate::util::stream_rng(3, "fd", 0);
        // Random PSD covariance with a ridge, random remaining data.
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen::<f64>() - 0.5);
        let q = &a * a.transpose() / n as f64 + DMatrix::identity(n, n) * 0.1;
        let t_count = 12;
        let returns = DMatrix::from_fn(t_count, n, |_, _| 0.1 * (rng.gen::<f64>() - 0.5));
        let market = DVector::from_fn(t_count, |_, _| 0.1 * (rng.gen::<f64>() - 0.5));
        let esg = DVector::from_fn(n, |_, _| rng.gen::<f64>());
        let mut model =
            estimate_model(&returns, &market, &esg, CovarianceDivisor::Population).unwrap();
        model.q = q; // stronger curvature than the tiny sample covariance

        let terms = vec![
            ObjectiveTerm::new(ObjectiveId::ER, 100.0),
            ObjectiveTerm::new(ObjectiveId::V, 100.0),
            ObjectiveTerm::new(ObjectiveId::ESG, 0.01),
            ObjectiveTerm::new(ObjectiveId::SR, 1.0),
            ObjectiveTerm::new(ObjectiveId::SW, 0.1),
        ];
        for _ in 0..20 {
            // Random point on the simplex.
            let mut x = DVector::from_fn(n, |_, _| -(rng.gen::<f64>()).ln());
            x /= x.sum();
            let jac = grad_objectives(&model, &terms, &x).unwrap();
            for (j, term) in terms.iter().enumerate() {
                let term = *term;
                let model_ref = &model;
                let fd = fd_gradient(
                    |y| eval_objectives(model_ref, &[term], y).unwrap()[0],
                    &x,
                );
                let row = jac.row(j);
                let denom = 1.0 + row.amax();
                let err = (0..n)
                    .map(|i| (row[i] - fd[i]).abs())
                    .fold(0.0_f64, f64::max);
                assert!(
                    err / denom < 1e-5,
                    "objective {:?}: FD mismatch {err:.3e} (denom {denom:.3e})",
                    term.id
                );
            }
        }
    }

    #[test]
    fn scaling_is_exactly_linear() {
        let model = toy_model();
        let x = DVector::from_row_slice(&[0.2, 0.5, 0.3]);
        let base = [ObjectiveTerm::new(ObjectiveId::V, 1.0)];
        let scaled = [ObjectiveTerm::new(ObjectiveId::V, 3.0)];
        let f1 = eval_objectives(&model, &base, &x).unwrap();
        let f3 = eval_objectives(&model, &scaled, &x).unwrap();
        assert_eq!(f3[0], 3.0 * f1[0]);
        let g1 = grad_objectives(&model, &base, &x).unwrap();
        let g3 = grad_objectives(&model, &scaled, &x).unwrap();
        for i in 0..3 {
            assert_eq!(g3[(0, i)], 3.0 * g1[(0, i)]);
        }
    }

    #[test]
    fn skewness_gradient_is_zero_at_origin() {
        let returns = DMatrix::from_column_slice(3, 1, &[0.3, -0.2, -0.1]);
        let market = DVector::from_row_slice(&[0.3, -0.2, -0.1]);
        let esg = DVector::from_row_slice(&[0.0]);
        let model =
            estimate_model(&returns, &market, &esg, CovarianceDivisor::Population).unwrap();
        let terms = [ObjectiveTerm::new(ObjectiveId::SW, 1.0)];
        let jac = grad_objectives(&model, &terms, &DVector::zeros(1)).unwrap();
        assert_eq!(jac[(0, 0)], 0.0);
    }

    #[test]
    fn on_the_fly_skewness_matches_dense_tensor() {
        use rand::Rng;
        let n = 3;
        let t_count = 9;
        let mut rng = crate::util::stream_rng(5, "sw", 0);
        let returns = DMatrix::from_fn(t_count, n, |_, _| 0.2 * (rng.gen::<f64>() - 0.5));
        let market = DVector::from_fn(t_count, |_, _| 0.1 * rng.gen::<f64>());
        let esg = DVector::zeros(n);
        let dense =
            estimate_model(&returns, &market, &esg, CovarianceDivisor::Population).unwrap();
        let mut streamed = dense.clone();
        streamed.coskew = None;
        let c = dense.c.clone();
        streamed.centered_returns =
            Some(DMatrix::from_fn(t_count, n, |t, i| returns[(t, i)] - c[i]));
        let terms = [ObjectiveTerm::new(ObjectiveId::SW, 1.0)];
        let x = DVector::from_row_slice(&[0.5, 0.2, 0.3]);
        let fd = eval_objectives(&dense, &terms, &x).unwrap();
        let fs = eval_objectives(&streamed, &terms, &x).unwrap();
        assert_relative_eq!(fd[0], fs[0], max_relative = 1e-10);
        let gd = grad_objectives(&dense, &terms, &x).unwrap();
        let gs = grad_objectives(&streamed, &terms, &x).unwrap();
        for i in 0..n {
            assert_relative_eq!(gd[(0, i)], gs[(0, i)], max_relative = 1e-10);
        }
    }
}
