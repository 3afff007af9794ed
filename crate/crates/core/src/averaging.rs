//! Weight solvers over the four constraint sets and the averaging estimator.
//!
//! Every solver returns weights satisfying `λᵀJ = I`. The maximal solver
//! uses the closed form `Σ⁻¹J(JᵀΣ⁻¹J)⁻¹`; the component-wise, convex and
//! selection solvers work block by block since their feasible columns are
//! supported inside the owning group.

use nalgebra::{Cholesky, DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::group::GroupStructure;
use crate::matrix::{MseMatrix, WeightMatrix};

/// Groups up to this size are solved by exhaustive support enumeration.
pub const CONVEX_ENUMERATION_LIMIT: usize = 12;
const PG_TOLERANCE: f64 = 1e-10;
const PG_MAX_ITER: usize = 10_000;

/// Stacked estimators `T = (T_1ᵀ, ..., T_dᵀ)ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorVector {
    values: DVector<f64>,
    group: GroupStructure,
}

impl EstimatorVector {
    pub fn new(values: Vec<f64>, group: GroupStructure) -> Result<Self> {
        if values.len() != group.k() {
            return Err(Error::DimensionMismatch { expected: group.k(), got: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("estimator vector"));
        }
        Ok(Self { values: DVector::from_vec(values), group })
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn group(&self) -> &GroupStructure {
        &self.group
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintSet {
    /// `{λ : λᵀJ = I}`
    Maximal,
    /// Maximal, with each column supported on its own group.
    ComponentWise,
    /// Component-wise with nonnegative entries.
    Convex,
    /// One canonical basis vector per column.
    Selection,
}

impl ConstraintSet {
    pub fn solve(self, sigma: &MseMatrix, group: &GroupStructure) -> Result<WeightMatrix> {
        match self {
            ConstraintSet::Maximal => solve_weights_maximal(sigma, group),
            ConstraintSet::ComponentWise => solve_weights_componentwise(sigma, group),
            ConstraintSet::Convex => solve_weights_convex(sigma, group),
            ConstraintSet::Selection => solve_weights_selection(sigma, group),
        }
    }

    /// Convex sets are the ones covered by the oracle error bound.
    pub fn is_convex(self) -> bool {
        !matches!(self, ConstraintSet::Selection)
    }
}

fn check_dims(sigma: &MseMatrix, group: &GroupStructure) -> Result<()> {
    if sigma.dim() != group.k() {
        return Err(Error::DimensionMismatch { expected: group.k(), got: sigma.dim() });
    }
    Ok(())
}

pub fn solve_weights_maximal(sigma: &MseMatrix, group: &GroupStructure) -> Result<WeightMatrix> {
    check_dims(sigma, group)?;
    let j = group.selector();
    let chol = sigma.cholesky()?;
    let sinv_j = chol.solve(&j);
    let gram = j.transpose() * &sinv_j;
    let gram_chol = Cholesky::new(gram).ok_or(Error::Singular(f64::INFINITY))?;
    // λ = Σ⁻¹J (JᵀΣ⁻¹J)⁻¹, computed as ((JᵀΣ⁻¹J)⁻¹ (Σ⁻¹J)ᵀ)ᵀ
    let lambda = gram_chol.solve(&sinv_j.transpose()).transpose();
    WeightMatrix::new(lambda, group.clone())
}

/// `Σ_b⁻¹1 / 1ᵀΣ_b⁻¹1` for an SPD block, or `None` if the block is not SPD.
fn affine_weights(block: DMatrix<f64>) -> Option<(DVector<f64>, f64)> {
    let m = block.nrows();
    let chol = Cholesky::new(block)?;
    let raw = chol.solve(&DVector::from_element(m, 1.0));
    let total = raw.sum();
    if !(total.is_finite() && total > 0.0) {
        return None;
    }
    Some((raw / total, total))
}

pub fn solve_weights_componentwise(sigma: &MseMatrix, group: &GroupStructure) -> Result<WeightMatrix> {
    check_dims(sigma, group)?;
    let mut lambda = DMatrix::zeros(group.k(), group.d());
    for j in 0..group.d() {
        let idx: Vec<usize> = group.range(j).collect();
        let (w, _) = affine_weights(sigma.principal(&idx)).ok_or(Error::Singular(f64::INFINITY))?;
        for (r, &i) in idx.iter().enumerate() {
            lambda[(i, j)] = w[r];
        }
    }
    WeightMatrix::new(lambda, group.clone())
}

/// Minimizes `wᵀ Σ w` over the simplex by trying every support `m` and
/// keeping the admissible one (all of `Σ_m⁻¹1` positive) with the largest
/// `1ᵀΣ_m⁻¹1`.
pub fn simplex_weights_enumerated(block: &DMatrix<f64>) -> Result<DVector<f64>> {
    let m = block.nrows();
    if m == 0 || m > 63 {
        return Err(Error::InvalidArgument(format!("cannot enumerate supports of size {m}")));
    }
    let mut best: Option<(f64, Vec<usize>, DVector<f64>)> = None;
    for mask in 1u64..(1u64 << m) {
        let support: Vec<usize> = (0..m).filter(|&i| mask & (1 << i) != 0).collect();
        let sub = DMatrix::from_fn(support.len(), support.len(), |r, c| block[(support[r], support[c])]);
        let Some(chol) = Cholesky::new(sub) else { continue };
        let raw = chol.solve(&DVector::from_element(support.len(), 1.0));
        if raw.iter().any(|&v| !(v > 0.0)) {
            continue;
        }
        let score = raw.sum();
        if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
            best = Some((score, support, raw));
        }
    }
    let (score, support, raw) = best.ok_or(Error::NoAdmissibleSupport)?;
    let mut w = DVector::zeros(m);
    for (r, &i) in support.iter().enumerate() {
        w[i] = raw[r] / score;
    }
    Ok(w)
}

/// Euclidean projection onto `{w ≥ 0, Σw = 1}`.
fn project_simplex(v: &DVector<f64>) -> DVector<f64> {
    let mut u: Vec<f64> = v.iter().copied().collect();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut tau = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cum += ui;
        let t = (cum - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            tau = t;
        }
    }
    v.map(|x| (x - tau).max(0.0))
}

/// Projected-gradient fallback for large groups, polished by solving the
/// equality-constrained problem on the final support.
pub fn simplex_weights_projected(block: &DMatrix<f64>) -> Result<DVector<f64>> {
    let m = block.nrows();
    let lmax = nalgebra::SymmetricEigen::new(block.clone()).eigenvalues.max();
    if !(lmax > 0.0) {
        return Err(Error::Singular(f64::INFINITY));
    }
    let step = 1.0 / (2.0 * lmax);
    let objective = |w: &DVector<f64>| w.dot(&(block * w));
    let mut w = DVector::from_element(m, 1.0 / m as f64);
    let mut obj = objective(&w);
    for _ in 0..PG_MAX_ITER {
        let grad = block * &w * 2.0;
        let next = project_simplex(&(&w - grad * step));
        let next_obj = objective(&next);
        let decrease = obj - next_obj;
        w = next;
        obj = next_obj;
        if decrease <= PG_TOLERANCE * obj.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    let support: Vec<usize> = (0..m).filter(|&i| w[i] > 1e-12).collect();
    let sub = DMatrix::from_fn(support.len(), support.len(), |r, c| block[(support[r], support[c])]);
    if let Some((polished, _)) = affine_weights(sub) {
        if polished.iter().all(|&v| v > 0.0) {
            let mut candidate = DVector::zeros(m);
            for (r, &i) in support.iter().enumerate() {
                candidate[i] = polished[r];
            }
            if objective(&candidate) <= obj {
                return Ok(candidate);
            }
        }
    }
    Ok(w)
}

pub fn solve_weights_convex(sigma: &MseMatrix, group: &GroupStructure) -> Result<WeightMatrix> {
    check_dims(sigma, group)?;
    let mut lambda = DMatrix::zeros(group.k(), group.d());
    for j in 0..group.d() {
        let idx: Vec<usize> = group.range(j).collect();
        let block = sigma.principal(&idx);
        let w = if idx.len() <= CONVEX_ENUMERATION_LIMIT {
            simplex_weights_enumerated(&block)?
        } else {
            simplex_weights_projected(&block)?
        };
        for (r, &i) in idx.iter().enumerate() {
            lambda[(i, j)] = w[r];
        }
    }
    WeightMatrix::new(lambda, group.clone())
}

pub fn solve_weights_selection(sigma: &MseMatrix, group: &GroupStructure) -> Result<WeightMatrix> {
    check_dims(sigma, group)?;
    let s = sigma.entries();
    let mut lambda = DMatrix::zeros(group.k(), group.d());
    for j in 0..group.d() {
        // strict comparison keeps the lowest index on ties
        let best = group.range(j).fold(None, |acc: Option<usize>, i| match acc {
            Some(b) if s[(b, b)] <= s[(i, i)] => Some(b),
            _ => Some(i),
        });
        lambda[(best.unwrap(), j)] = 1.0;
    }
    WeightMatrix::new(lambda, group.clone())
}

/// `θ̂ = λᵀT`
pub fn combine(t: &EstimatorVector, weights: &WeightMatrix) -> Result<DVector<f64>> {
    if t.group() != weights.group() {
        return Err(Error::InvalidGroup("estimators and weights use different groups".into()));
    }
    Ok(weights.entries().transpose() * t.values())
}

/// `tr(λᵀΣλ)`
pub fn risk_trace(weights: &WeightMatrix, sigma: &MseMatrix) -> f64 {
    (0..weights.group().d()).map(|j| component_risk(weights, sigma, j)).sum()
}

/// `λ_jᵀ Σ λ_j` for column `j`.
pub fn component_risk(weights: &WeightMatrix, sigma: &MseMatrix, j: usize) -> f64 {
    sigma.quadratic_form(&weights.column(j)).max(0.0)
}

/// Two-sided standard-normal quantile `z_{1-(1-level)/2}`.
pub fn normal_critical_value(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!("confidence level {level} outside (0, 1)")));
    }
    let normal = Normal::standard();
    Ok(normal.inverse_cdf(1.0 - (1.0 - level) / 2.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub level: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.low <= x && x <= self.high
    }
}

/// Gaussian intervals `θ̂_j ± z √α̂_j`.
pub fn confidence_intervals(theta_hat: &DVector<f64>, risks: &[f64], level: f64) -> Result<Vec<Interval>> {
    if theta_hat.len() != risks.len() {
        return Err(Error::DimensionMismatch { expected: theta_hat.len(), got: risks.len() });
    }
    let z = normal_critical_value(level)?;
    theta_hat
        .iter()
        .zip(risks)
        .map(|(&t, &a)| {
            if !(a > 0.0) {
                return Err(Error::InvalidArgument(format!("component risk {a} must be positive")));
            }
            let half = z * a.sqrt();
            Ok(Interval { low: t - half, high: t + half, level })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AveragingResult {
    pub theta_hat: DVector<f64>,
    pub weights: WeightMatrix,
    /// `α̂_j = λ̂_jᵀ Σ̂ λ̂_j`
    pub component_risks: Vec<f64>,
    pub intervals: Option<Vec<Interval>>,
}

impl AveragingResult {
    /// Attaches Gaussian intervals at `level`.
    pub fn with_intervals(mut self, level: f64) -> Result<Self> {
        self.intervals = Some(confidence_intervals(&self.theta_hat, &self.component_risks, level)?);
        Ok(self)
    }
}

/// Solves for `λ̂` under `constraint` and combines `t`.
pub fn average(t: &EstimatorVector, sigma: &MseMatrix, constraint: ConstraintSet) -> Result<AveragingResult> {
    let weights = constraint.solve(sigma, t.group())?;
    let theta_hat = combine(t, &weights)?;
    let component_risks = (0..t.group().d()).map(|j| component_risk(&weights, sigma, j)).collect();
    Ok(AveragingResult { theta_hat, weights, component_risks, intervals: None })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn mse(rows: usize, data: &[f64]) -> MseMatrix {
        MseMatrix::new(DMatrix::from_row_slice(rows, rows, data)).unwrap()
    }

    /// Grid oracle over `λ_1 ∈ [0, 1]`, `λ_2 = 1 - λ_1`.
    fn grid_min_two(s: &DMatrix<f64>) -> f64 {
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..=100_000 {
            let a = i as f64 / 100_000.0;
            let w = DVector::from_vec(vec![a, 1.0 - a]);
            let v = w.dot(&(s * &w));
            if v < best.0 {
                best = (v, a);
            }
        }
        best.1
    }

    #[test]
    fn maximal_identity_is_equal_weights() {
        let g = GroupStructure::single(2).unwrap();
        let w = solve_weights_maximal(&MseMatrix::identity(2), &g).unwrap();
        assert_abs_diff_eq!(w.column(0), DVector::from_vec(vec![0.5, 0.5]), epsilon = 1e-14);
    }

    #[test]
    fn maximal_diag_one_three_matches_grid() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 3.0]);
        let oracle = grid_min_two(&s);
        assert_abs_diff_eq!(oracle, 0.75, epsilon = 1e-5);
        let g = GroupStructure::single(2).unwrap();
        let w = solve_weights_maximal(&MseMatrix::new(s).unwrap(), &g).unwrap();
        assert_abs_diff_eq!(w.entries()[(0, 0)], 0.75, epsilon = 1e-12);
        assert_abs_diff_eq!(w.entries()[(1, 0)], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn maximal_one_one_is_identity() {
        let g = GroupStructure::new(vec![1, 1]).unwrap();
        let s = mse(2, &[2.0, 0.7, 0.7, 1.0]);
        let w = solve_weights_maximal(&s, &g).unwrap();
        assert_abs_diff_eq!(*w.entries(), DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn componentwise_examples() {
        let g = GroupStructure::new(vec![2, 1]).unwrap();
        let s = mse(3, &[1.0, 0.0, 0.3, 0.0, 1.0, 0.2, 0.3, 0.2, 2.0]);
        let w = solve_weights_componentwise(&s, &g).unwrap();
        assert_abs_diff_eq!(w.column(0), DVector::from_vec(vec![0.5, 0.5, 0.0]), epsilon = 1e-14);
        assert_abs_diff_eq!(w.column(1), DVector::from_vec(vec![0.0, 0.0, 1.0]), epsilon = 1e-14);

        let block = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 4.0]);
        assert_abs_diff_eq!(grid_min_two(&block), 0.8, epsilon = 1e-5);
        let s = mse(3, &[1.0, 0.0, 0.1, 0.0, 4.0, 0.1, 0.1, 0.1, 1.0]);
        let w = solve_weights_componentwise(&s, &g).unwrap();
        assert_abs_diff_eq!(w.column(0), DVector::from_vec(vec![0.8, 0.2, 0.0]), epsilon = 1e-12);
    }

    #[test]
    fn componentwise_equals_maximal_when_uncorrelated() {
        let g = GroupStructure::new(vec![2, 2]).unwrap();
        let s = mse(4, &[2.0, 0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.0, 3.0, -0.4, 0.0, 0.0, -0.4, 1.5]);
        let a = solve_weights_componentwise(&s, &g).unwrap();
        let b = solve_weights_maximal(&s, &g).unwrap();
        assert_abs_diff_eq!(*a.entries(), *b.entries(), epsilon = 1e-12);
    }

    #[test]
    fn convex_examples() {
        let g = GroupStructure::single(2).unwrap();
        let w = solve_weights_convex(&mse(2, &[1.0, 2.0, 2.0, 5.0]), &g).unwrap();
        assert_abs_diff_eq!(w.column(0), DVector::from_vec(vec![1.0, 0.0]), epsilon = 1e-14);

        let g3 = GroupStructure::single(3).unwrap();
        let w = solve_weights_convex(&MseMatrix::identity(3), &g3).unwrap();
        assert_abs_diff_eq!(w.column(0), DVector::from_element(3, 1.0 / 3.0), epsilon = 1e-14);

        let w = solve_weights_convex(&mse(2, &[1.0, 0.0, 0.0, 3.0]), &g).unwrap();
        assert_abs_diff_eq!(w.column(0), DVector::from_vec(vec![0.75, 0.25]), epsilon = 1e-12);
    }

    #[test]
    fn projected_fallback_matches_enumeration() {
        // 13 estimators: beyond the enumeration limit.
        let m = 13;
        let mut s = DMatrix::from_fn(m, m, |r, c| 0.3f64.powi((r as i32 - c as i32).abs()));
        for i in 0..m {
            s[(i, i)] += 0.2 * i as f64;
        }
        s[(0, 1)] = 0.95;
        s[(1, 0)] = 0.95;
        let a = simplex_weights_projected(&s).unwrap();
        let b = simplex_weights_enumerated(&s).unwrap();
        assert_abs_diff_eq!(a, b, epsilon = 1e-8);
        assert!(a.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn selection_examples() {
        let g = GroupStructure::single(3).unwrap();
        let w = solve_weights_selection(&mse(3, &[2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 3.0]), &g).unwrap();
        assert_eq!(w.column(0).as_slice(), &[0.0, 1.0, 0.0]);

        let g = GroupStructure::new(vec![1, 1]).unwrap();
        let w = solve_weights_selection(&MseMatrix::identity(2), &g).unwrap();
        assert_eq!(*w.entries(), DMatrix::identity(2, 2));

        let g = GroupStructure::single(2).unwrap();
        let w = solve_weights_selection(&MseMatrix::identity(2), &g).unwrap();
        assert_eq!(w.column(0).as_slice(), &[1.0, 0.0]);
    }

    #[test]
    fn combine_examples() {
        let g = GroupStructure::single(2).unwrap();
        let t = EstimatorVector::new(vec![1.0, 3.0], g.clone()).unwrap();
        let half = WeightMatrix::new(DMatrix::from_element(2, 1, 0.5), g.clone()).unwrap();
        assert_eq!(combine(&t, &half).unwrap()[0], 2.0);
        let pick = WeightMatrix::new(DMatrix::from_column_slice(2, 1, &[1.0, 0.0]), g).unwrap();
        assert_eq!(combine(&t, &pick).unwrap()[0], 1.0);

        let g = GroupStructure::new(vec![1, 1]).unwrap();
        let t = EstimatorVector::new(vec![-4.0, 9.5], g.clone()).unwrap();
        let id = WeightMatrix::new(DMatrix::identity(2, 2), g).unwrap();
        assert_eq!(combine(&t, &id).unwrap().as_slice(), &[-4.0, 9.5]);
    }

    #[test]
    fn risk_examples() {
        let g = GroupStructure::single(2).unwrap();
        let half = WeightMatrix::new(DMatrix::from_element(2, 1, 0.5), g.clone()).unwrap();
        assert_abs_diff_eq!(risk_trace(&half, &MseMatrix::identity(2)), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(component_risk(&half, &MseMatrix::identity(2), 0), 0.5, epsilon = 1e-15);

        // (JᵀΣ⁻¹J)⁻¹ = 1 / (1 + 1/3)
        let s = mse(2, &[1.0, 0.0, 0.0, 3.0]);
        let w = solve_weights_maximal(&s, &g).unwrap();
        assert_abs_diff_eq!(risk_trace(&w, &s), 0.75, epsilon = 1e-12);
    }

    #[test]
    fn selection_risk_is_selected_diagonal() {
        let g = GroupStructure::new(vec![2, 1]).unwrap();
        let s = mse(3, &[2.0, 0.1, 0.2, 0.1, 1.5, 0.3, 0.2, 0.3, 0.7]);
        let w = solve_weights_selection(&s, &g).unwrap();
        assert_abs_diff_eq!(component_risk(&w, &s, 0), 1.5, epsilon = 1e-15);
        assert_abs_diff_eq!(component_risk(&w, &s, 1), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(risk_trace(&w, &s), 2.2, epsilon = 1e-15);
    }

    #[test]
    fn interval_examples() {
        let iv = confidence_intervals(&DVector::from_vec(vec![0.0]), &[1.0], 0.95).unwrap();
        assert_abs_diff_eq!(iv[0].low, -1.959963984540054, epsilon = 1e-9);
        assert_abs_diff_eq!(iv[0].high, 1.959963984540054, epsilon = 1e-9);
        let iv = confidence_intervals(&DVector::from_vec(vec![2.0]), &[0.25], 0.95).unwrap();
        assert_abs_diff_eq!(iv[0].low, 1.02002, epsilon = 1e-5);
        assert_abs_diff_eq!(iv[0].high, 2.97998, epsilon = 1e-5);
        assert!(confidence_intervals(&DVector::from_vec(vec![2.0]), &[0.0], 0.95).is_err());
        assert!(normal_critical_value(1.0).is_err());
    }

    #[test]
    fn average_attaches_intervals() {
        let g = GroupStructure::single(2).unwrap();
        let t = EstimatorVector::new(vec![1.0, 3.0], g).unwrap();
        let r = average(&t, &MseMatrix::identity(2), ConstraintSet::Maximal).unwrap().with_intervals(0.9).unwrap();
        let iv = r.intervals.unwrap()[0];
        assert!(iv.low <= r.theta_hat[0] && r.theta_hat[0] <= iv.high);
        assert_abs_diff_eq!(r.component_risks[0], 0.5, epsilon = 1e-14);
    }
}
