//! Estimating the MSE matrix `Σ` by plug-in, nonparametric bootstrap, or
//! parametric bootstrap.
//!
//! Bootstrap replicate `b` always draws from `rng.child(b)`, so `Σ̂` is a pure
//! function of the stream identity and raising `B` only appends replicates.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::averaging::EstimatorVector;
use crate::error::{Error, Result};
use crate::group::GroupStructure;
use crate::matrix::MseMatrix;
use crate::rng::RngStream;

/// Draws a sample from the model at a given parameter.
pub trait ModelSimulator {
    type Sample: ?Sized;
    type Owned: std::borrow::Borrow<Self::Sample>;

    fn simulate(&self, theta: &[f64], rng: &mut RngStream) -> Result<Self::Owned>;
}

/// Maps a sample to the stacked estimators `T`.
pub trait EstimatorBank {
    type Sample: ?Sized;

    fn group(&self) -> &GroupStructure;

    fn estimate(&self, sample: &Self::Sample, rng: &mut RngStream) -> Result<EstimatorVector>;
}

/// A bootstrap estimate together with its replicate accounting.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapMse {
    pub sigma: MseMatrix,
    pub successes: usize,
    pub failures: usize,
}

/// Minimum number of successful replicates out of `b`.
pub fn min_successes(b: usize) -> usize {
    (b / 2).max(2)
}

/// `Σ̂ = sigma_map(θ̂₀)`, SPD-repaired.
pub fn plugin_mse<F>(sigma_map: F, theta0: &[f64]) -> Result<MseMatrix>
where
    F: FnOnce(&[f64]) -> Result<DMatrix<f64>>,
{
    MseMatrix::new(sigma_map(theta0)?)
}

/// Running `(1/B) Σ (T⁽ᵇ⁾ - c)(T⁽ᵇ⁾ - c)ᵀ` in replicate order.
struct GramAccumulator {
    center: DVector<f64>,
    sum: DMatrix<f64>,
    successes: usize,
    failures: usize,
}

impl GramAccumulator {
    fn new(center: DVector<f64>) -> Self {
        let k = center.len();
        Self { center, sum: DMatrix::zeros(k, k), successes: 0, failures: 0 }
    }

    fn push(&mut self, t: Result<EstimatorVector>) {
        match t {
            Ok(t) if t.len() == self.center.len() => {
                let e = t.values() - &self.center;
                self.sum.ger(1.0, &e, &e, 1.0);
                self.successes += 1;
            }
            Ok(_) => self.failures += 1,
            Err(err) => {
                log::debug!("bootstrap replicate dropped: {err}");
                self.failures += 1;
            }
        }
    }

    fn finish(self, requested: usize) -> Result<BootstrapMse> {
        if self.successes < min_successes(requested) {
            return Err(Error::TooFewReplicates { successes: self.successes, requested });
        }
        if self.failures > 0 {
            log::debug!("{} of {requested} bootstrap replicates dropped", self.failures);
        }
        let sigma = MseMatrix::new(self.sum / self.successes as f64)?;
        Ok(BootstrapMse { sigma, successes: self.successes, failures: self.failures })
    }
}

fn check_b(b: usize) -> Result<()> {
    if b < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 bootstrap replicates, got {b}")));
    }
    Ok(())
}

/// Simulates `b` samples at `theta0` and centers the estimators at `Jθ̂₀`.
pub fn parametric_bootstrap_mse<S, K, Q>(
    sim: &S,
    bank: &K,
    theta0: &[f64],
    b: usize,
    rng: &RngStream,
) -> Result<BootstrapMse>
where
    S: ModelSimulator<Sample = Q>,
    K: EstimatorBank<Sample = Q>,
    Q: ?Sized,
{
    use std::borrow::Borrow;

    check_b(b)?;
    let group = bank.group();
    if theta0.len() != group.d() {
        return Err(Error::DimensionMismatch { expected: group.d(), got: theta0.len() });
    }
    let center = group.selector() * DVector::from_column_slice(theta0);
    let mut acc = GramAccumulator::new(center);
    for i in 0..b {
        let mut stream = rng.child(i as u64);
        let t = sim.simulate(theta0, &mut stream).and_then(|sample| bank.estimate(sample.borrow(), &mut stream));
        acc.push(t);
    }
    acc.finish(b)
}

/// Resamples `data` with replacement `b` times and centers at `center`.
pub fn nonparametric_bootstrap_mse<K>(
    data: &[f64],
    bank: &K,
    center: &DVector<f64>,
    b: usize,
    rng: &RngStream,
) -> Result<BootstrapMse>
where
    K: EstimatorBank<Sample = [f64]>,
{
    check_b(b)?;
    if data.is_empty() {
        return Err(Error::InvalidArgument("cannot resample an empty sample".into()));
    }
    if center.len() != bank.group().k() {
        return Err(Error::DimensionMismatch { expected: bank.group().k(), got: center.len() });
    }
    let n = data.len();
    let mut acc = GramAccumulator::new(center.clone());
    let mut resample = vec![0.0; n];
    for i in 0..b {
        let mut stream = rng.child(i as u64);
        for slot in resample.iter_mut() {
            *slot = data[stream.random_range(0..n)];
        }
        acc.push(bank.estimate(&resample, &mut stream));
    }
    acc.finish(b)
}
