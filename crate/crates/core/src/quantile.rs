//! High-quantile estimators: the empirical order statistic and plug-in
//! quantiles of Weibull, Gamma and Burr XII maximum-likelihood fits.

use statrs::function::gamma::digamma;

use crate::averaging::EstimatorVector;
use crate::distributions::Distribution;
use crate::error::{Error, Result};
use crate::group::GroupStructure;
use crate::mse::EstimatorBank;
use crate::rng::RngStream;
use crate::weibull::weibull_ml;

const MAX_ITER: usize = 200;
/// Fixed starting shapes `c` for the Burr fit.
pub const BURR_STARTS: [f64; 3] = [0.5, 2.0, 5.0];
const BURR_C_BOUNDS: (f64, f64) = (1e-3, 1e3);

/// The `⌊np⌋`-th order statistic (1-based).
pub fn quantile_np(data: &[f64], p: f64) -> Result<f64> {
    let n = data.len();
    let k = (n as f64 * p).floor();
    if !(k >= 1.0 && k <= n as f64) {
        return Err(Error::InvalidArgument(format!("order statistic {k} outside 1..={n}")));
    }
    let mut v = data.to_vec();
    let (_, x, _) = v.select_nth_unstable_by(k as usize - 1, f64::total_cmp);
    Ok(*x)
}

/// `ψ'(x)` by upward recurrence and the asymptotic series.
pub fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let z = 1.0 / (x * x);
    // 1/x + 1/2x² + Σ B₂ⱼ / x^{2j+1}
    acc + 1.0 / x
        + z / 2.0
        + z / x
            * (1.0 / 6.0
                - z * (1.0 / 30.0 - z * (1.0 / 42.0 - z * (1.0 / 30.0 - z * (5.0 / 66.0 - z * 691.0 / 2730.0)))))
}

fn check_positive(data: &[f64], min_n: usize) -> Result<()> {
    if data.len() < min_n {
        return Err(Error::InvalidArgument(format!("need at least {min_n} observations, got {}", data.len())));
    }
    if data.iter().any(|&x| !(x.is_finite() && x > 0.0)) {
        return Err(Error::InvalidArgument("data must be positive and finite".into()));
    }
    Ok(())
}

/// Maximum-likelihood Gamma `(shape, scale)`.
pub fn gamma_ml(data: &[f64]) -> Result<(f64, f64)> {
    check_positive(data, 3)?;
    let n = data.len() as f64;
    let mean = data.iter().sum::<f64>() / n;
    let mean_log = data.iter().map(|x| x.ln()).sum::<f64>() / n;
    let s = mean.ln() - mean_log;
    if !(s > 0.0) {
        return Err(Error::Degenerate("all observations equal".into()));
    }
    // solves ln k - ψ(k) = s, starting from Minka's approximation
    let mut k = (3.0 - s + ((s - 3.0) * (s - 3.0) + 24.0 * s).sqrt()) / (12.0 * s);
    for _ in 0..MAX_ITER {
        let f = k.ln() - digamma(k) - s;
        let df = 1.0 / k - trigamma(k);
        let mut next = k - f / df;
        if !(next > 0.0) {
            next = k / 2.0;
        }
        if (next - k).abs() <= 1e-12 * k {
            let shape = next;
            return Ok((shape, mean / shape));
        }
        k = next;
    }
    Err(Error::NoConvergence("Gamma maximum likelihood"))
}

/// Sums `S = Σ ln(1 + x^c)`, `S' = dS/dc`, `S'' = d²S/dc²` from the logs.
fn burr_sums(logs: &[f64], c: f64) -> (f64, f64, f64) {
    let (mut s, mut s1, mut s2) = (0.0, 0.0, 0.0);
    for &l in logs {
        let t = c * l;
        // softplus(t) and the logistic σ(t), stable for large |t|
        let (sp, sig) = if t > 0.0 {
            let e = (-t).exp();
            (t + e.ln_1p(), 1.0 / (1.0 + e))
        } else {
            let e = t.exp();
            (e.ln_1p(), e / (1.0 + e))
        };
        s += sp;
        s1 += l * sig;
        s2 += l * l * sig * (1.0 - sig);
    }
    (s, s1, s2)
}

/// Profile log-likelihood in `u = ln c` and its first two derivatives,
/// with `k` profiled out as `n / S(c)`.
fn burr_profile(logs: &[f64], sum_log: f64, u: f64) -> (f64, f64, f64) {
    let n = logs.len() as f64;
    let c = u.exp();
    let (s, s1, s2) = burr_sums(logs, c);
    let ll = n * c.ln() + n * n.ln() - n * s.ln() + (c - 1.0) * sum_log - n - s;
    let dc = n / c - n * s1 / s + sum_log - s1;
    let d2c = -n / (c * c) - n * (s2 / s - s1 * s1 / (s * s)) - s2;
    (ll, c * dc, c * dc + c * c * d2c)
}

fn burr_ascent(logs: &[f64], sum_log: f64, c0: f64) -> Option<(f64, f64)> {
    let (lo, hi) = (BURR_C_BOUNDS.0.ln(), BURR_C_BOUNDS.1.ln());
    let n = logs.len() as f64;
    let mut u = c0.ln();
    let (mut ll, mut g, mut h) = burr_profile(logs, sum_log, u);
    for _ in 0..MAX_ITER {
        if g.abs() <= 1e-8 * n {
            return Some((u.exp(), ll));
        }
        // Newton where concave, otherwise a bounded gradient step
        let mut step = if h < 0.0 { -g / h } else { g.signum() };
        step = step.clamp(-1.0, 1.0);
        let mut accepted = false;
        for _ in 0..50 {
            let cand = (u + step).clamp(lo, hi);
            let (cll, cg, ch) = burr_profile(logs, sum_log, cand);
            if cll.is_finite() && cll >= ll - 1e-12 * ll.abs() {
                u = cand;
                ll = cll;
                g = cg;
                h = ch;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return None;
        }
        if (u <= lo || u >= hi) && g.signum() == (u - 0.5 * (lo + hi)).signum() {
            // optimum pushed against the bound
            return None;
        }
    }
    None
}

/// Maximum-likelihood Burr XII `(c, k)`, best of three fixed starts.
pub fn burr_ml(data: &[f64]) -> Result<(f64, f64)> {
    check_positive(data, 3)?;
    let logs: Vec<f64> = data.iter().map(|x| x.ln()).collect();
    let sum_log: f64 = logs.iter().sum();
    let best = BURR_STARTS.iter().filter_map(|&c0| burr_ascent(&logs, sum_log, c0)).fold(
        None,
        |acc: Option<(f64, f64)>, cand| match acc {
            Some(a) if a.1 >= cand.1 => Some(a),
            _ => Some(cand),
        },
    );
    let (c, _) = best.ok_or(Error::NoConvergence("Burr maximum likelihood"))?;
    let (s, _, _) = burr_sums(&logs, c);
    Ok((c, logs.len() as f64 / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QuantileEstimator {
    Weibull,
    Gamma,
    Burr,
    Nonparametric,
}

impl QuantileEstimator {
    pub const ALL: [QuantileEstimator; 4] = [
        QuantileEstimator::Weibull,
        QuantileEstimator::Gamma,
        QuantileEstimator::Burr,
        QuantileEstimator::Nonparametric,
    ];

    pub fn label(self) -> &'static str {
        match self {
            QuantileEstimator::Weibull => "q_weibull",
            QuantileEstimator::Gamma => "q_gamma",
            QuantileEstimator::Burr => "q_burr",
            QuantileEstimator::Nonparametric => "q_np",
        }
    }

    pub fn estimate(self, data: &[f64], p: f64) -> Result<f64> {
        let fitted = match self {
            QuantileEstimator::Nonparametric => return quantile_np(data, p),
            QuantileEstimator::Weibull => {
                let (shape, scale) = weibull_ml(data)?;
                Distribution::Weibull { shape, scale }
            }
            QuantileEstimator::Gamma => {
                let (shape, scale) = gamma_ml(data)?;
                Distribution::Gamma { shape, scale }
            }
            QuantileEstimator::Burr => {
                let (c, k) = burr_ml(data)?;
                Distribution::BurrXII { c, k }
            }
        };
        let q = fitted.quantile(p)?;
        if !q.is_finite() {
            return Err(Error::NonFinite("fitted quantile"));
        }
        Ok(q)
    }
}

/// The quantile estimators that succeeded on a sample, combined as one group.
#[derive(Debug, Clone)]
pub struct QuantileBank {
    p: f64,
    active: Vec<QuantileEstimator>,
    group: GroupStructure,
}

impl QuantileBank {
    pub fn new(p: f64, active: Vec<QuantileEstimator>) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidArgument(format!("probability {p} outside (0, 1)")));
        }
        let group = GroupStructure::single(active.len())?;
        Ok(Self { p, active, group })
    }

    /// Fits every estimator on `data`, keeping those that succeed.
    pub fn fit(data: &[f64], p: f64) -> Result<(Self, EstimatorVector)> {
        let mut active = Vec::new();
        let mut values = Vec::new();
        for e in QuantileEstimator::ALL {
            match e.estimate(data, p) {
                Ok(q) => {
                    active.push(e);
                    values.push(q);
                }
                Err(err) => log::debug!("{} dropped: {err}", e.label()),
            }
        }
        if !active.contains(&QuantileEstimator::Nonparametric) {
            return Err(Error::InvalidArgument(format!("no order statistic at p = {p}")));
        }
        let bank = Self::new(p, active)?;
        let t = EstimatorVector::new(values, bank.group.clone())?;
        Ok((bank, t))
    }

    pub fn active(&self) -> &[QuantileEstimator] {
        &self.active
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn evaluate(&self, data: &[f64]) -> Result<EstimatorVector> {
        let values = self.active.iter().map(|e| e.estimate(data, self.p)).collect::<Result<Vec<_>>>()?;
        EstimatorVector::new(values, self.group.clone())
    }
}

impl EstimatorBank for QuantileBank {
    type Sample = [f64];

    fn group(&self) -> &GroupStructure {
        &self.group
    }

    fn estimate(&self, sample: &[f64], _rng: &mut RngStream) -> Result<EstimatorVector> {
        self.evaluate(sample)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn quasi(d: Distribution, n: usize) -> Vec<f64> {
        (1..=n).map(|i| d.quantile((i as f64 - 0.5) / n as f64).unwrap()).collect()
    }

    #[test]
    fn np_examples() {
        let data: Vec<f64> = (1..=10).rev().map(f64::from).collect();
        assert_eq!(quantile_np(&data, 0.5).unwrap(), 5.0);
        let data: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(quantile_np(&data, 0.99).unwrap(), 99.0);
        assert!(quantile_np(&data, 0.005).is_err());
    }

    #[test]
    fn trigamma_values() {
        // ψ'(1) = π²/6, ψ'(1/2) = π²/2
        let pi2 = std::f64::consts::PI.powi(2);
        assert_abs_diff_eq!(trigamma(1.0), pi2 / 6.0, epsilon = 1e-12);
        assert_abs_diff_eq!(trigamma(0.5), pi2 / 2.0, epsilon = 1e-12);
        // finite-difference oracle on digamma
        for &x in &[0.3, 2.7, 11.0, 150.0] {
            let h = 1e-5 * x;
            let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
            assert!((trigamma(x) - fd).abs() < 1e-6 * trigamma(x), "{x}");
        }
    }

    #[test]
    fn gamma_fit_on_quasi_sample() {
        let x = quasi(Distribution::Gamma { shape: 3.0, scale: 2.0 }, 500);
        let (k, theta) = gamma_ml(&x).unwrap();
        assert!(k > 2.9 && k < 3.1, "{k}");
        assert!((theta - 2.0).abs() < 0.1);
    }

    #[test]
    fn gamma_fit_exponential() {
        let mut rng = RngStream::new(2, 0);
        let x = Distribution::Weibull { shape: 1.0, scale: 1.0 }.sample(20_000, &mut rng).unwrap();
        let (k, _) = gamma_ml(&x).unwrap();
        assert!((k - 1.0).abs() < 0.03, "{k}");
    }

    #[test]
    fn burr_fit_on_quasi_sample() {
        let x = quasi(Distribution::BurrXII { c: 2.0, k: 1.0 }, 1000);
        let (c, k) = burr_ml(&x).unwrap();
        assert!((c - 2.0).abs() < 0.1, "{c}");
        assert!((k - 1.0).abs() < 0.1, "{k}");
    }

    #[test]
    fn burr_profile_derivatives_match_finite_differences() {
        let x = quasi(Distribution::Lognormal { mu: 0.0, sigma: 1.0 }, 50);
        let logs: Vec<f64> = x.iter().map(|v| v.ln()).collect();
        let sl: f64 = logs.iter().sum();
        let u = 0.3;
        let h = 1e-5;
        let (_, g, hs) = burr_profile(&logs, sl, u);
        let (lp, gp, _) = burr_profile(&logs, sl, u + h);
        let (lm, gm, _) = burr_profile(&logs, sl, u - h);
        assert!((g - (lp - lm) / (2.0 * h)).abs() < 1e-5 * (1.0 + g.abs()));
        assert!((hs - (gp - gm) / (2.0 * h)).abs() < 1e-5 * (1.0 + hs.abs()));
    }

    #[test]
    fn weibull_quantile_on_quasi_sample() {
        let d = Distribution::Weibull { shape: 3.0, scale: 2.0 };
        let x = quasi(d, 1000);
        let q = QuantileEstimator::Weibull.estimate(&x, 0.99).unwrap();
        let truth = d.quantile(0.99).unwrap();
        assert!((q / truth - 1.0).abs() < 0.01);
    }

    #[test]
    fn bank_fits_all_on_weibull_data() {
        let x = quasi(Distribution::Weibull { shape: 3.0, scale: 2.0 }, 100);
        let (bank, t) = QuantileBank::fit(&x, 0.99).unwrap();
        assert_eq!(bank.active(), &QuantileEstimator::ALL);
        assert_eq!(t.len(), 4);
        assert!(t.values().iter().all(|v| v.is_finite() && *v > 0.0));
    }
}
