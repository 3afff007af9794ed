//! Randomized checks of the solver guarantees and error bounds.
//!
//! Each check draws its own cases from a seeded stream and reports the
//! worst violation it saw.

use estavg_core::averaging::{solve_weights_convex, solve_weights_maximal, solve_weights_selection};
use estavg_core::divergence::{
    divergence_sampled, divergence_upper_bound, oracle_distance_bound, random_feasible, standardized_norm_sq,
};
use estavg_core::{average, risk_trace, ConstraintSet, EstimatorVector, GroupStructure, MseMatrix, RngStream};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

pub const ALL_CONSTRAINTS: [ConstraintSet; 4] =
    [ConstraintSet::Maximal, ConstraintSet::ComponentWise, ConstraintSet::Convex, ConstraintSet::Selection];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub cases: usize,
    pub failures: usize,
    /// Largest observed violation measure (residual, excess or gap).
    pub worst: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.cases > 0 && self.failures == 0
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {}: {} cases, {} failures, worst {:.3e} (tolerance {:.0e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.failures,
            self.worst,
            self.tolerance
        )
    }
}

struct Tally {
    result: CheckResult,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { result: CheckResult { name, cases: 0, failures: 0, worst: 0.0, tolerance } }
    }

    /// Records one case whose violation is `excess` (≤ tolerance passes).
    fn case(&mut self, excess: f64) {
        self.result.cases += 1;
        if !(excess <= self.result.tolerance) {
            self.result.failures += 1;
        }
        if excess.is_nan() || excess > self.result.worst {
            self.result.worst = excess;
        }
    }
}

/// Random group sizes in `1..=3`, at most 3 groups and 6 estimators.
pub fn random_group<R: Rng + ?Sized>(rng: &mut R) -> GroupStructure {
    loop {
        let d = rng.random_range(1..=3);
        let sizes: Vec<usize> = (0..d).map(|_| rng.random_range(1..=3)).collect();
        if sizes.iter().sum::<usize>() <= 6 {
            return GroupStructure::new(sizes).expect("positive sizes");
        }
    }
}

/// `AAᵀ + 0.05 I` with uniform entries in `A`.
pub fn random_spd<R: Rng + ?Sized>(k: usize, rng: &mut R) -> MseMatrix {
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    MseMatrix::new(&a * a.transpose() + DMatrix::identity(k, k) * 0.05).expect("loaded Gram matrix")
}

fn trace_form(lambda: &DMatrix<f64>, sigma: &DMatrix<f64>) -> f64 {
    (lambda.transpose() * sigma * lambda).trace()
}

/// `λᵀJ = I` for every solver, plus sign and vertex structure.
pub fn check_feasibility(cases: usize, seed: u64) -> CheckResult {
    let mut rng = RngStream::new(seed, 1);
    let mut t = Tally::new("constraint lambda^T J = I for all solvers", 1e-10);
    for _ in 0..cases {
        let g = random_group(&mut rng);
        let s = random_spd(g.k(), &mut rng);
        let mut worst: f64 = 0.0;
        for c in ALL_CONSTRAINTS {
            match c.solve(&s, &g) {
                Ok(w) => worst = worst.max(w.constraint_residual()),
                Err(_) => worst = f64::INFINITY,
            }
        }
        if let Ok(w) = solve_weights_convex(&s, &g) {
            let negative = w.entries().iter().fold(0.0f64, |m, &v| m.max(-v));
            if negative > 1e-12 {
                worst = worst.max(negative.max(1.0));
            }
        }
        if let Ok(w) = solve_weights_selection(&s, &g) {
            for j in 0..g.d() {
                let col = w.column(j);
                let ones: Vec<usize> = (0..g.k()).filter(|&i| col[i] == 1.0).collect();
                let zeros = col.iter().filter(|&&v| v == 0.0).count();
                if ones.len() != 1 || zeros != g.k() - 1 || g.group_of(ones[0]) != j {
                    worst = f64::INFINITY;
                }
            }
        }
        t.case(worst);
    }
    t.result
}

/// The maximal solver beats random feasible weights, and the risk gap equals
/// `tr((λ - λ*)ᵀ Σ (λ - λ*))`.
pub fn check_maximal(cases: usize, seed: u64) -> (CheckResult, CheckResult) {
    let mut rng = RngStream::new(seed, 2);
    let mut opt = Tally::new("maximal solver optimal against random feasible weights", 1e-9);
    let mut ident = Tally::new("risk gap identity for the maximal solver", 1e-8);
    for _ in 0..cases {
        let g = random_group(&mut rng);
        let s = random_spd(g.k(), &mut rng);
        let star = solve_weights_maximal(&s, &g).expect("SPD input");
        let r_star = trace_form(star.entries(), s.entries());
        let lambda = random_feasible(ConstraintSet::Maximal, &g, &mut rng);
        let r = trace_form(&lambda, s.entries());
        opt.case((r_star - r) / r.abs().max(1.0));
        let diff = &lambda - star.entries();
        let lhs =
            lambda.transpose() * s.entries() * &lambda - star.entries().transpose() * s.entries() * star.entries();
        let rhs = diff.transpose() * s.entries() * &diff;
        ident.case((lhs - rhs).amax() / r.abs().max(1.0));
    }
    (opt.result, ident.result)
}

/// Minimizer of `wᵀSw` over the simplex by visiting every support.
pub fn brute_force_simplex(s: &DMatrix<f64>) -> DVector<f64> {
    let k = s.nrows();
    let mut best = (f64::INFINITY, DVector::zeros(k));
    for mask in 1u32..(1 << k) {
        let idx: Vec<usize> = (0..k).filter(|&i| mask >> i & 1 == 1).collect();
        let sub = DMatrix::from_fn(idx.len(), idx.len(), |a, b| s[(idx[a], idx[b])]);
        let Some(x) = sub.lu().solve(&DVector::from_element(idx.len(), 1.0)) else {
            continue;
        };
        let total = x.sum();
        if total.abs() < 1e-300 {
            continue;
        }
        let w_sub = x / total;
        if w_sub.iter().any(|&v| v < -1e-13) {
            continue;
        }
        let mut w = DVector::zeros(k);
        for (a, &i) in idx.iter().enumerate() {
            w[i] = w_sub[a].max(0.0);
        }
        let obj = w.dot(&(s * &w));
        if obj < best.0 {
            best = (obj, w);
        }
    }
    best.1
}

/// The convex solver equals brute-force support enumeration block by block.
pub fn check_convex_enumeration(cases: usize, seed: u64) -> CheckResult {
    let mut rng = RngStream::new(seed, 3);
    let mut t = Tally::new("convex solver matches exhaustive enumeration", 1e-10);
    for _ in 0..cases {
        let g = random_group(&mut rng);
        let s = random_spd(g.k(), &mut rng);
        let w = solve_weights_convex(&s, &g).expect("SPD input");
        let mut worst: f64 = 0.0;
        for j in 0..g.d() {
            let r: Vec<usize> = g.range(j).collect();
            let block = s.principal(&r);
            let oracle = brute_force_simplex(&block);
            let got = DVector::from_iterator(r.len(), r.iter().map(|&i| w.entries()[(i, j)]));
            let o_obj = oracle.dot(&(&block * &oracle));
            let g_obj = got.dot(&(&block * &got));
            worst = worst.max((g_obj - o_obj).abs() / o_obj.max(1e-300));
        }
        t.case(worst);
    }
    t.result
}

/// Sampled divergence never exceeds the operator-norm bound.
pub fn check_divergence_bound(cases: usize, seed: u64) -> CheckResult {
    let mut rng = RngStream::new(seed, 4);
    let mut t = Tally::new("sampled divergence below the operator-norm bound", 1e-9);
    for _ in 0..cases {
        let k = rng.random_range(1..=6);
        let a = random_spd(k, &mut rng);
        let b = random_spd(k, &mut rng);
        let bound = divergence_upper_bound(&a, &b).expect("SPD pair");
        let g = random_group_of_size(k, &mut rng);
        let mut worst = f64::NEG_INFINITY;
        for c in ALL_CONSTRAINTS {
            let d = divergence_sampled(&a, &b, c, &g, 20, &mut rng).expect("matching sizes");
            worst = worst.max((d - bound) / bound.max(1.0));
        }
        t.case(worst.max(0.0));
    }
    t.result
}

fn random_group_of_size<R: Rng + ?Sized>(k: usize, rng: &mut R) -> GroupStructure {
    let mut sizes = Vec::new();
    let mut left = k;
    while left > 0 {
        let s = rng.random_range(1..=left.min(3));
        sizes.push(s);
        left -= s;
    }
    GroupStructure::new(sizes).expect("positive sizes")
}

/// `‖θ̂ - θ̂*‖² ≤ (2δ + δ²)‖S‖² R*` on synthetic replicates with a known `Σ`
/// and a sample-covariance `Σ̂`, for each convex constraint set.
pub fn check_oracle_distance(cases: usize, seed: u64) -> CheckResult {
    let mut rng = RngStream::new(seed, 5);
    let mut t = Tally::new("distance to the oracle within the error bound", 1e-9);
    let convex = [ConstraintSet::Maximal, ConstraintSet::ComponentWise, ConstraintSet::Convex];
    for case in 0..cases {
        let g = random_group(&mut rng);
        let k = g.k();
        let sigma = random_spd(k, &mut rng);
        let l = sigma.cholesky().expect("SPD").l();
        let draw = |rng: &mut RngStream| &l * DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let theta = DVector::from_fn(g.d(), |_, _| rng.random_range(-5.0..5.0));
        let error = draw(&mut rng);
        let m = rng.random_range(k + 1..=k + 40);
        let mut gram = DMatrix::zeros(k, k);
        for _ in 0..m {
            let e = draw(&mut rng);
            gram.ger(1.0, &e, &e, 1.0);
        }
        let sigma_hat = MseMatrix::new(gram / m as f64).expect("finite Gram matrix");
        let values = g.selector() * &theta + &error;
        let tvec = EstimatorVector::new(values.iter().copied().collect(), g.clone()).expect("length k");
        let constraint = convex[case % convex.len()];
        let excess = (|| -> estavg_core::Result<f64> {
            let av = average(&tvec, &sigma_hat, constraint)?;
            let oracle = average(&tvec, &sigma, constraint)?;
            let delta = divergence_upper_bound(&sigma_hat, &sigma)?;
            let bound = oracle_distance_bound(
                delta,
                standardized_norm_sq(&error, &sigma)?,
                risk_trace(&oracle.weights, &sigma),
            );
            let gap = (&av.theta_hat - &oracle.theta_hat).norm_squared();
            Ok((gap - bound) / bound.max(1.0))
        })()
        .unwrap_or(f64::INFINITY);
        t.case(excess.max(0.0));
    }
    t.result
}

/// Case counts of the full suite.
#[derive(Debug, Clone, Copy)]
pub struct SuiteSize {
    pub solver_cases: usize,
    pub divergence_cases: usize,
    pub oracle_cases: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        Self { solver_cases: 1000, divergence_cases: 500, oracle_cases: 10_000 }
    }
}

pub fn run_suite(size: SuiteSize, seed: u64) -> Vec<CheckResult> {
    let (opt, ident) = check_maximal(size.solver_cases, seed);
    vec![
        check_feasibility(size.solver_cases, seed),
        opt,
        check_convex_enumeration(size.solver_cases, seed),
        check_divergence_bound(size.divergence_cases, seed),
        check_oracle_distance(size.oracle_cases, seed),
        ident,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_on_diagonal() {
        // inverse-variance weights are interior for a diagonal matrix
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0, 4.0]));
        let w = brute_force_simplex(&s);
        let expect = DVector::from_vec(vec![4.0, 2.0, 1.0]) / 7.0;
        assert!((w - expect).amax() < 1e-12);
    }

    #[test]
    fn small_suite_passes() {
        let size = SuiteSize { solver_cases: 50, divergence_cases: 20, oracle_cases: 100 };
        for r in run_suite(size, 7) {
            assert!(r.passed(), "{r}");
        }
    }
}
