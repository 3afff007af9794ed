//! Averaging the sample mean and the sample median of a symmetric location
//! model.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::averaging::EstimatorVector;
use crate::error::{Error, Result};
use crate::group::GroupStructure;
use crate::mse::EstimatorBank;
use crate::rng::RngStream;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

pub fn mean(data: &[f64]) -> f64 {
    data.iter().sum::<f64>() / data.len() as f64
}

/// Unbiased sample variance.
pub fn sample_variance(data: &[f64]) -> f64 {
    let m = mean(data);
    data.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (data.len() as f64 - 1.0)
}

fn sorted(data: &[f64]) -> Vec<f64> {
    let mut v = data.to_vec();
    v.sort_unstable_by(f64::total_cmp);
    v
}

/// Median of sorted data; the midpoint of the two central values for even `n`.
fn median_sorted(s: &[f64]) -> f64 {
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

pub fn median(data: &[f64]) -> f64 {
    median_sorted(&sorted(data))
}

/// Linearly interpolated empirical quantile of sorted data.
fn interpolated_quantile(s: &[f64], p: f64) -> f64 {
    let h = (s.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    s[lo] + (h - lo as f64) * (s[hi] - s[lo])
}

fn check_sample(data: &[f64]) -> Result<()> {
    if data.len() < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 observations, got {}", data.len())));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("sample"));
    }
    Ok(())
}

/// `0.9 min(s, IQR/1.34) n^{-1/5}`; falls back to `s` when the IQR vanishes.
pub fn silverman_bandwidth(data: &[f64]) -> Result<f64> {
    check_sample(data)?;
    let s = sample_variance(data).sqrt();
    if !(s > 0.0) {
        return Err(Error::Degenerate("zero spread".into()));
    }
    let sorted = sorted(data);
    let iqr = interpolated_quantile(&sorted, 0.75) - interpolated_quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { s.min(iqr / 1.34) } else { s };
    Ok(0.9 * spread * (data.len() as f64).powf(-0.2))
}

/// Gaussian kernel density estimate at `x`.
pub fn kernel_density_at(data: &[f64], x: f64, h: f64) -> f64 {
    let inv_h = 1.0 / h;
    let sum: f64 = data
        .iter()
        .map(|&xi| {
            let z = (x - xi) * inv_h;
            (-0.5 * z * z).exp()
        })
        .sum();
    sum * INV_SQRT_2PI * inv_h / data.len() as f64
}

/// Data-driven entries of the asymptotic MSE matrix of (mean, median).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocationPlugins {
    pub s_sq: f64,
    /// Mean absolute deviation about `theta0`.
    pub m_hat: f64,
    /// Density estimate at `theta0`.
    pub f_hat: f64,
    pub h: f64,
    /// The sample median.
    pub theta0: f64,
}

impl LocationPlugins {
    pub fn from_data(data: &[f64]) -> Result<Self> {
        check_sample(data)?;
        let theta0 = median(data);
        let h = silverman_bandwidth(data)?;
        let f_hat = kernel_density_at(data, theta0, h);
        if !(f_hat > 0.0) {
            return Err(Error::Degenerate("density estimate vanished at the median".into()));
        }
        Ok(Self {
            s_sq: sample_variance(data),
            m_hat: data.iter().map(|x| (x - theta0).abs()).sum::<f64>() / data.len() as f64,
            f_hat,
            h,
            theta0,
        })
    }

    /// Plug-ins of the standard normal evaluated exactly.
    pub fn standard_normal() -> Self {
        Self { s_sq: 1.0, m_hat: (2.0 / PI).sqrt(), f_hat: INV_SQRT_2PI, h: f64::NAN, theta0: 0.0 }
    }
}

/// `W = [[σ², E|X-θ|/(2f)], [·, 1/(4f²)]]`
pub fn laplace_w_matrix(p: &LocationPlugins) -> DMatrix<f64> {
    let off = p.m_hat / (2.0 * p.f_hat);
    DMatrix::from_row_slice(2, 2, &[p.s_sq, off, off, 1.0 / (4.0 * p.f_hat * p.f_hat)])
}

/// Closed-form optimal weights `(w_mean, w_median)` for `n⁻¹W`.
pub fn location_av_weights(p: &LocationPlugins) -> (f64, f64) {
    let p1 = 1.0 / (4.0 * p.f_hat) - p.m_hat / 2.0;
    let p2 = p.s_sq * p.f_hat - p.m_hat / 2.0;
    let total = p1 + p2;
    if total.abs() <= 1e-14 {
        log::warn!("mean/median weights undefined; using equal weights");
        return (0.5, 0.5);
    }
    (p1 / total, p2 / total)
}

/// `T = (x̄, median)`.
#[derive(Debug, Clone)]
pub struct MeanMedianBank {
    group: GroupStructure,
}

impl MeanMedianBank {
    pub fn new() -> Self {
        Self { group: GroupStructure::single(2).unwrap() }
    }

    pub fn evaluate(&self, data: &[f64]) -> Result<EstimatorVector> {
        check_sample(data)?;
        EstimatorVector::new(vec![mean(data), median(data)], self.group.clone())
    }
}

impl Default for MeanMedianBank {
    fn default() -> Self {
        Self::new()
    }
}

impl EstimatorBank for MeanMedianBank {
    type Sample = [f64];

    fn group(&self) -> &GroupStructure {
        &self.group
    }

    fn estimate(&self, sample: &[f64], _rng: &mut RngStream) -> Result<EstimatorVector> {
        self.evaluate(sample)
    }
}
