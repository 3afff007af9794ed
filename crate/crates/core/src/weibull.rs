//! Weibull shape and scale estimators: maximum likelihood, moments, and the
//! Weibull-plot regression.

use statrs::function::gamma::ln_gamma;

use crate::averaging::EstimatorVector;
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::group::GroupStructure;
use crate::mse::{EstimatorBank, ModelSimulator};
use crate::rng::RngStream;

/// Shape values outside this bracket are reported as failures.
pub const SHAPE_BRACKET: (f64, f64) = (1e-3, 1e3);
const MAX_NEWTON: usize = 200;

fn check_positive_sample(data: &[f64]) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 observations, got {}", data.len())));
    }
    if data.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::InvalidArgument("Weibull data must be positive and finite".into()));
    }
    Ok(())
}

/// Centered logs `ln x_i - mean(ln x)` and their mean.
fn centered_logs(data: &[f64]) -> (Vec<f64>, f64) {
    let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
    let m = logs.iter().sum::<f64>() / logs.len() as f64;
    (logs.into_iter().map(|l| l - m).collect(), m)
}

/// `g(β)/n = 1/β - Σ w_i l_i` with `w ∝ exp(β l_i)`, and its derivative.
fn profile_score(l: &[f64], l_max: f64, beta: f64) -> (f64, f64) {
    let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &li in l {
        let w = (beta * (li - l_max)).exp();
        s0 += w;
        s1 += w * li;
        s2 += w * li * li;
    }
    let m1 = s1 / s0;
    let var = (s2 / s0 - m1 * m1).max(0.0);
    (1.0 / beta - m1, -1.0 / (beta * beta) - var)
}

/// `ln((1/n) Σ exp(β l_i))`, computed without overflow.
fn log_mean_exp(l: &[f64], l_max: f64, beta: f64) -> f64 {
    let s: f64 = l.iter().map(|&li| (beta * (li - l_max)).exp()).sum();
    beta * l_max + (s / l.len() as f64).ln()
}

/// Maximum-likelihood `(β̂, η̂)`.
pub fn weibull_ml(data: &[f64]) -> Result<(f64, f64)> {
    check_positive_sample(data)?;
    let (l, mean_log) = centered_logs(data);
    let l_max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(l_max > 0.0) {
        return Err(Error::Degenerate("all observations equal".into()));
    }
    let (mut lo, mut hi) = SHAPE_BRACKET;
    if profile_score(&l, l_max, lo).0 <= 0.0 || profile_score(&l, l_max, hi).0 >= 0.0 {
        return Err(Error::OutOfBracket { what: "Weibull likelihood equation", lo, hi });
    }
    let n = l.len() as f64;
    let var_l = l.iter().map(|v| v * v).sum::<f64>() / (n - 1.0);
    // moment start from the Gumbel law of ln x
    let mut beta = (std::f64::consts::PI / (6.0 * var_l).sqrt()).clamp(lo * 2.0, hi / 2.0);
    let mut converged = false;
    for _ in 0..MAX_NEWTON {
        let (g, dg) = profile_score(&l, l_max, beta);
        if g.abs() * beta <= 1e-12 {
            converged = true;
            break;
        }
        if g > 0.0 {
            lo = beta;
        } else {
            hi = beta;
        }
        let mut next = beta - g / dg;
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if (next - beta).abs() <= 1e-14 * beta {
            beta = next;
            converged = true;
            break;
        }
        beta = next;
    }
    if !converged {
        return Err(Error::NoConvergence("Weibull maximum likelihood"));
    }
    let eta = (mean_log + log_mean_exp(&l, l_max, beta) / beta).exp();
    Ok((beta, eta))
}

/// `Γ(1+2/β)/Γ(1+1/β)² - 1`, the squared coefficient of variation.
pub fn weibull_cv_sq(beta: f64) -> f64 {
    (ln_gamma(1.0 + 2.0 / beta) - 2.0 * ln_gamma(1.0 + 1.0 / beta)).exp() - 1.0
}

/// Method-of-moments `(β̂, η̂)` from the mean and the unbiased variance.
pub fn weibull_mm(data: &[f64]) -> Result<(f64, f64)> {
    check_positive_sample(data)?;
    let n = data.len() as f64;
    let m = data.iter().sum::<f64>() / n;
    let s_sq = data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    if !(s_sq > 0.0) {
        return Err(Error::Degenerate("zero sample variance".into()));
    }
    let target = s_sq / (m * m);
    let (mut lo, mut hi) = SHAPE_BRACKET;
    if !(weibull_cv_sq(lo) > target && weibull_cv_sq(hi) < target) {
        return Err(Error::OutOfBracket { what: "Weibull moment equation", lo, hi });
    }
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if weibull_cv_sq(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let beta = 0.5 * (lo + hi);
    Ok((beta, m * (-ln_gamma(1.0 + 1.0 / beta)).exp()))
}

/// Slope of `ln(-ln(1 - i/(n+1)))` on `ln x₍ᵢ₎`.
pub fn weibull_ols(data: &[f64]) -> Result<f64> {
    check_positive_sample(data)?;
    let mut logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
    logs.sort_unstable_by(f64::total_cmp);
    let n = logs.len();
    let np1 = (n + 1) as f64;
    let ys: Vec<f64> = (1..=n).map(|i| (-(-(i as f64) / np1).ln_1p()).ln()).collect();
    let mx = logs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (x, y) in logs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("zero regressor variance".into()));
    }
    Ok(sxy / sxx)
}

/// `T = (β̂_ML, β̂_MM, β̂_OLS, η̂_ML)` with groups (3, 1).
#[derive(Debug, Clone)]
pub struct WeibullBank {
    group: GroupStructure,
}

impl WeibullBank {
    pub const LABELS: [&'static str; 4] = ["beta_ml", "beta_mm", "beta_ols", "eta_ml"];

    pub fn new() -> Self {
        Self { group: GroupStructure::new(vec![3, 1]).unwrap() }
    }

    pub fn evaluate(&self, data: &[f64]) -> Result<EstimatorVector> {
        let (b_ml, e_ml) = weibull_ml(data)?;
        let (b_mm, _) = weibull_mm(data)?;
        let b_ols = weibull_ols(data)?;
        EstimatorVector::new(vec![b_ml, b_mm, b_ols, e_ml], self.group.clone())
    }

    /// Bootstrap center `(mean of the β estimators, η̂_ML)`.
    pub fn initial_estimate(t: &EstimatorVector) -> [f64; 2] {
        let v = t.values();
        [(v[0] + v[1] + v[2]) / 3.0, v[3]]
    }
}

impl Default for WeibullBank {
    fn default() -> Self {
        Self::new()
    }
}

impl EstimatorBank for WeibullBank {
    type Sample = [f64];

    fn group(&self) -> &GroupStructure {
        &self.group
    }

    fn estimate(&self, sample: &[f64], _rng: &mut RngStream) -> Result<EstimatorVector> {
        self.evaluate(sample)
    }
}

/// Draws `n` observations from Weibull(θ₀, θ₁).
#[derive(Debug, Clone, Copy)]
pub struct WeibullSimulator {
    pub n: usize,
}

impl ModelSimulator for WeibullSimulator {
    type Sample = [f64];
    type Owned = Vec<f64>;

    fn simulate(&self, theta: &[f64], rng: &mut RngStream) -> Result<Vec<f64>> {
        Distribution::Weibull { shape: theta[0], scale: theta[1] }.sample(self.n, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quasi_sample(shape: f64, scale: f64, n: usize, plot: impl Fn(usize) -> f64) -> Vec<f64> {
        let d = Distribution::Weibull { shape, scale };
        (1..=n).map(|i| d.quantile(plot(i)).unwrap()).collect()
    }

    #[test]
    fn ml_on_quasi_sample() {
        let x = quasi_sample(2.0, 1.0, 200, |i| (i as f64 - 0.5) / 200.0);
        let (b, e) = weibull_ml(&x).unwrap();
        assert!(b > 1.9 && b < 2.1, "{b}");
        assert!((e - 1.0).abs() < 0.05);
    }

    #[test]
    fn ml_solves_likelihood_equation() {
        let x = quasi_sample(0.7, 3.0, 57, |i| (i as f64 - 0.3) / 57.2);
        let (b, _) = weibull_ml(&x).unwrap();
        // unscaled score: n/β + Σ ln x - n Σ x^β ln x / Σ x^β
        let n = x.len() as f64;
        let sl: f64 = x.iter().map(|v| v.ln()).sum();
        let sxb: f64 = x.iter().map(|v| v.powf(b)).sum();
        let sxbl: f64 = x.iter().map(|v| v.powf(b) * v.ln()).sum();
        let g = n / b + sl - n * sxbl / sxb;
        assert!(g.abs() < 1e-8, "{g}");
    }

    #[test]
    fn ml_consistent_for_exponential() {
        let mut rng = RngStream::new(4, 0);
        let x = Distribution::Weibull { shape: 1.0, scale: 2.0 }.sample(20_000, &mut rng).unwrap();
        let (b, e) = weibull_ml(&x).unwrap();
        // asymptotic sd of β̂ is 0.78 β/√n ≈ 0.0055
        assert!((b - 1.0).abs() < 0.025, "{b}");
        assert!((e - 2.0).abs() < 0.06);
    }

    #[test]
    fn mm_examples() {
        // two points with mean m and unbiased variance m²
        let m: f64 = 2.0;
        let x = [m - m / 2f64.sqrt(), m + m / 2f64.sqrt()];
        let (b, e) = weibull_mm(&x).unwrap();
        assert_abs_diff_eq!(b, 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(e, m, epsilon = 1e-8);
        assert_abs_diff_eq!(weibull_cv_sq(1.0), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mm_recovers_shape_three() {
        let target = weibull_cv_sq(3.0);
        // two points symmetric about 1 with unbiased variance = target
        let dev = (target / 2.0).sqrt();
        let (b, _) = weibull_mm(&[1.0 - dev, 1.0 + dev]).unwrap();
        assert_abs_diff_eq!(b, 3.0, epsilon = 1e-9);
    }

    #[test]
    fn ols_exact_on_mean_rank_sample() {
        let x = quasi_sample(2.5, 7.0, 80, |i| i as f64 / 81.0);
        assert_abs_diff_eq!(weibull_ols(&x).unwrap(), 2.5, epsilon = 1e-9);
        let scaled: Vec<f64> = x.iter().map(|v| 4.0 * v).collect();
        assert_abs_diff_eq!(weibull_ols(&scaled).unwrap(), 2.5, epsilon = 1e-9);
    }

    #[test]
    fn scale_equivariance() {
        let x = quasi_sample(1.7, 1.0, 40, |i| (i as f64 - 0.4) / 40.1);
        let c = 3.5;
        let y: Vec<f64> = x.iter().map(|v| c * v).collect();
        let (bx, ex) = weibull_ml(&x).unwrap();
        let (by, ey) = weibull_ml(&y).unwrap();
        assert_abs_diff_eq!(bx, by, epsilon = 1e-9);
        assert_abs_diff_eq!(ey, c * ex, epsilon = 1e-9);
        assert_abs_diff_eq!(weibull_mm(&x).unwrap().0, weibull_mm(&y).unwrap().0, epsilon = 1e-9);
    }

    #[test]
    fn bank_on_quasi_sample() {
        let x = quasi_sample(2.0, 10.0, 500, |i| (i as f64 - 0.5) / 500.0);
        let t = WeibullBank::new().evaluate(&x).unwrap();
        let v = t.values();
        for b in &v.as_slice()[..3] {
            assert!((b - 2.0).abs() < 0.1, "{v}");
        }
        assert!((v[3] - 10.0).abs() < 0.3);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(weibull_ml(&[1.0, 1.0, 1.0]).is_err());
        assert!(weibull_mm(&[1.0, 1.0]).is_err());
        assert!(weibull_ols(&[-1.0, 2.0]).is_err());
    }

    #[test]
    fn score_is_decreasing() {
        let x = quasi_sample(3.0, 2.0, 30, |i| (i as f64 - 0.5) / 30.0);
        let (l, _) = centered_logs(&x);
        let l_max = l.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut prev = f64::INFINITY;
        for i in 0..=60 {
            let beta = 1e-3 * 10f64.powf(i as f64 / 10.0);
            let (g, dg) = profile_score(&l, l_max, beta);
            assert!(g < prev && dg < 0.0);
            prev = g;
        }
    }
}
