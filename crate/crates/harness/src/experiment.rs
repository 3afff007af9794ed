//! Replicated simulation runs for each study.
//!
//! Replicate `i` draws everything from `RngStream::new(seed, 0).child(i)`,
//! so records do not depend on the worker count or scheduling order.

use estavg_core::boolean::{simulate_boolean, BooleanBank, BooleanMeasurements, BooleanSimulator, DiscSet, Window};
use estavg_core::divergence::{divergence_upper_bound, oracle_distance_bound, standardized_norm_sq};
use estavg_core::location::{laplace_w_matrix, LocationPlugins, MeanMedianBank};
use estavg_core::mse::{nonparametric_bootstrap_mse, parametric_bootstrap_mse, plugin_mse};
use estavg_core::quantile::{QuantileBank, QuantileEstimator};
use estavg_core::weibull::{WeibullBank, WeibullSimulator};
use estavg_core::{
    average, risk_trace, AveragingResult, ConstraintSet, Distribution, EstimatorVector, GroupStructure, MseMatrix,
    RngStream,
};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::config::{ConfigError, ExperimentConfig, SigmaMethod, Study};
use crate::summary::{mse_summary, SummaryTable};

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{failed} of {reps} replicates failed; first failure: {first}")]
    ExcessFailures { failed: usize, reps: usize, first: String },
    #[error("cannot build worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Everything observed in one replicate.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicationRecord {
    pub index: usize,
    /// One entry per table row; `None` when that estimator was unavailable.
    pub values: Vec<Option<f64>>,
    /// Whether the row's interval covered the truth, for rows with intervals.
    pub hits: Vec<Option<bool>>,
    /// Estimated risk `α̂_j` behind each interval.
    pub risks: Vec<Option<f64>>,
    /// Study-specific side measurements, `NaN` when unavailable.
    pub diagnostics: Vec<f64>,
    pub failure: Option<String>,
}

impl ReplicationRecord {
    fn failed(index: usize, rows: usize, diagnostics: Vec<f64>, err: impl ToString) -> Self {
        Self {
            index,
            values: vec![None; rows],
            hits: vec![None; rows],
            risks: vec![None; rows],
            diagnostics,
            failure: Some(err.to_string()),
        }
    }

    pub fn is_failed(&self) -> bool {
        self.failure.is_some()
    }
}

/// Row labels, true values and diagnostic names of a study.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub labels: Vec<String>,
    pub truth: Vec<f64>,
    pub diagnostics: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub layout: Layout,
    pub records: Vec<ReplicationRecord>,
    pub summary: SummaryTable,
}

impl RunOutput {
    pub fn failures(&self) -> usize {
        self.records.iter().filter(|r| r.is_failed()).count()
    }

    /// Values of diagnostic `name` over the records where it is finite.
    pub fn diagnostic(&self, name: &str) -> Vec<f64> {
        let Some(j) = self.layout.diagnostics.iter().position(|d| d == name) else {
            return Vec::new();
        };
        self.records.iter().map(|r| r.diagnostics[j]).filter(|v| v.is_finite()).collect()
    }
}

/// Validated, precomputed state shared read-only by all replicates.
struct Plan {
    cfg: ExperimentConfig,
    constraint: ConstraintSet,
    method: SigmaMethod,
    layout: Layout,
    kind: Kind,
}

enum Kind {
    Location { dist: Distribution, bank: MeanMedianBank },
    Weibull { dist: Distribution, bank: WeibullBank },
    Boolean { bank: BooleanBank },
    Quantile { dist: Distribution },
    Synthetic { group: GroupStructure, sigma: MseMatrix, chol: DMatrix<f64> },
}

fn strs(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

/// The known synthetic `Σ = AAᵀ/k + 0.1 I` drawn from a reserved stream.
pub fn synthetic_sigma(seed: u64, k: usize) -> MseMatrix {
    let mut rng = RngStream::new(seed, u64::MAX);
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    MseMatrix::new(&a * a.transpose() / k as f64 + DMatrix::identity(k, k) * 0.1)
        .expect("diagonally loaded Gram matrix is SPD")
}

impl Plan {
    fn new(cfg: &ExperimentConfig) -> Result<Self, ConfigError> {
        cfg.validate()?;
        let invalid = |e: estavg_core::Error| ConfigError::Invalid(e.to_string());
        let method = cfg.sigma_method();
        let (kind, layout) = match cfg.study {
            Study::Location => {
                let av = if method == SigmaMethod::Plugin { "av" } else { "avb" };
                let layout =
                    Layout { labels: strs(&["mean", "median", av]), truth: vec![0.0; 3], diagnostics: Vec::new() };
                (Kind::Location { dist: cfg.distribution()?, bank: MeanMedianBank::new() }, layout)
            }
            Study::Weibull => {
                let (beta, eta) = (cfg.param1, cfg.param2);
                let mut labels = strs(&WeibullBank::LABELS);
                labels.extend(strs(&["beta_av", "eta_av"]));
                let layout = Layout { labels, truth: vec![beta, beta, beta, eta, beta, eta], diagnostics: Vec::new() };
                let dist = Distribution::Weibull { shape: beta, scale: eta };
                (Kind::Weibull { dist, bank: WeibullBank::new() }, layout)
            }
            Study::Boolean => {
                let mut labels = strs(&BooleanBank::LABELS);
                labels.extend(strs(&["rho_av", "alpha_av"]));
                let (rho, alpha) = (cfg.rho, cfg.alpha);
                let layout =
                    Layout { labels, truth: vec![rho, rho, alpha, rho, alpha], diagnostics: strs(&["a_obs", "p_obs"]) };
                (Kind::Boolean { bank: BooleanBank::new(cfg.resolution, cfg.n_directions).map_err(invalid)? }, layout)
            }
            Study::Quantile => {
                let dist = cfg.distribution()?;
                let q = dist.quantile(cfg.p).map_err(invalid)?;
                let mut labels: Vec<String> = QuantileEstimator::ALL.iter().map(|e| e.label().to_string()).collect();
                labels.push("q_av".into());
                let layout = Layout { labels, truth: vec![q; 5], diagnostics: Vec::new() };
                (Kind::Quantile { dist }, layout)
            }
            Study::Synthetic => {
                let group = GroupStructure::new(cfg.sizes.clone()).map_err(invalid)?;
                let (k, d) = (group.k(), group.d());
                let sigma = synthetic_sigma(cfg.seed, k);
                let chol = sigma.cholesky().map_err(invalid)?.l();
                let mut labels: Vec<String> = (1..=k).map(|i| format!("t{i}")).collect();
                labels.extend((1..=d).map(|j| format!("av{j}")));
                labels.extend((1..=d).map(|j| format!("oracle{j}")));
                let layout = Layout {
                    labels,
                    truth: vec![0.0; k + 2 * d],
                    diagnostics: strs(&["oracle_gap_ratio", "delta_bound"]),
                };
                (Kind::Synthetic { group, sigma, chol }, layout)
            }
        };
        Ok(Self { cfg: cfg.clone(), constraint: cfg.constraint().into(), method, layout, kind })
    }

    fn rows(&self) -> usize {
        self.layout.labels.len()
    }

    fn replicate(&self, index: usize) -> ReplicationRecord {
        let mut rng = replicate_stream(self.cfg.seed, index);
        match &self.kind {
            Kind::Location { dist, bank } => self.finish(index, self.location(dist, bank, &mut rng), Vec::new()),
            Kind::Weibull { dist, bank } => self.finish(index, self.weibull(dist, bank, &mut rng), Vec::new()),
            Kind::Boolean { bank } => self.boolean(index, bank, &mut rng),
            Kind::Quantile { dist } => self.finish(index, self.quantile(dist, &mut rng), Vec::new()),
            Kind::Synthetic { group, sigma, chol } => self.synthetic(index, group, sigma, chol, &mut rng),
        }
    }

    fn finish(&self, index: usize, outcome: estavg_core::Result<Outcome>, diagnostics: Vec<f64>) -> ReplicationRecord {
        match outcome {
            Ok(o) => o.into_record(index, &self.layout, diagnostics),
            Err(e) => {
                log::debug!("replicate {index} failed: {e}");
                ReplicationRecord::failed(index, self.rows(), diagnostics, e)
            }
        }
    }

    fn averaged(&self, t: &EstimatorVector, sigma: &MseMatrix) -> estavg_core::Result<AveragingResult> {
        average(t, sigma, self.constraint)?.with_intervals(self.cfg.level)
    }

    fn location(
        &self,
        dist: &Distribution,
        bank: &MeanMedianBank,
        rng: &mut RngStream,
    ) -> estavg_core::Result<Outcome> {
        let data = dist.sample(self.cfg.n, rng)?;
        let t = bank.evaluate(&data)?;
        let sigma = match self.method {
            SigmaMethod::Plugin => {
                let p = LocationPlugins::from_data(&data)?;
                let n = data.len() as f64;
                plugin_mse(|_| Ok(laplace_w_matrix(&p) / n), &[p.theta0])?
            }
            _ => nonparametric_bootstrap_mse(&data, bank, t.values(), self.cfg.b, rng)?.sigma,
        };
        Ok(Outcome::new(&t, self.averaged(&t, &sigma)?))
    }

    fn weibull(&self, dist: &Distribution, bank: &WeibullBank, rng: &mut RngStream) -> estavg_core::Result<Outcome> {
        let data = dist.sample(self.cfg.n, rng)?;
        let t = bank.evaluate(&data)?;
        let sigma = match self.method {
            SigmaMethod::Pboot => {
                let theta0 = WeibullBank::initial_estimate(&t);
                let sim = WeibullSimulator { n: self.cfg.n };
                parametric_bootstrap_mse(&sim, bank, &theta0, self.cfg.b, rng)?.sigma
            }
            _ => nonparametric_bootstrap_mse(&data, bank, t.values(), self.cfg.b, rng)?.sigma,
        };
        Ok(Outcome::new(&t, self.averaged(&t, &sigma)?))
    }

    fn boolean(&self, index: usize, bank: &BooleanBank, rng: &mut RngStream) -> ReplicationRecord {
        let measured = simulate_boolean(self.cfg.rho, self.cfg.alpha, Window::unit(), rng)
            .and_then(|discs| BooleanMeasurements::measure(&discs, bank.resolution, bank.n_directions, rng));
        let m = match measured {
            Ok(m) => m,
            Err(e) => return self.finish(index, Err(e), vec![f64::NAN; 2]),
        };
        let diagnostics = vec![m.a_obs, m.p_obs];
        let outcome = (|| {
            let t = bank.from_measurements(&m, &Window::unit())?;
            let theta0 = BooleanBank::initial_estimate(&t);
            if !(theta0[0] > 0.0 && theta0[1] > 0.0) {
                return Err(estavg_core::Error::Degenerate(format!(
                    "bootstrap center ({}, {}) outside the parameter space",
                    theta0[0], theta0[1]
                )));
            }
            let sim = BooleanSimulator { window: Window::unit() };
            let sigma = parametric_bootstrap_mse(&sim, bank, &theta0, self.cfg.b, rng)?.sigma;
            Ok(Outcome::new(&t, self.averaged(&t, &sigma)?))
        })();
        self.finish(index, outcome, diagnostics)
    }

    fn quantile(&self, dist: &Distribution, rng: &mut RngStream) -> estavg_core::Result<Outcome> {
        let data = dist.sample(self.cfg.n, rng)?;
        let (bank, t) = QuantileBank::fit(&data, self.cfg.p)?;
        let np = bank.active().iter().position(|&e| e == QuantileEstimator::Nonparametric).expect("fit keeps NP");
        // every estimator targets the same quantile, so J·q̂_NP is constant
        let center = DVector::from_element(t.len(), t.values()[np]);
        let sigma = nonparametric_bootstrap_mse(&data, &bank, &center, self.cfg.b, rng)?.sigma;
        let av = self.averaged(&t, &sigma)?;
        let mut values = vec![None; QuantileEstimator::ALL.len()];
        for (e, &v) in bank.active().iter().zip(t.values().iter()) {
            let slot = QuantileEstimator::ALL.iter().position(|a| a == e).expect("estimator listed");
            values[slot] = Some(v);
        }
        Ok(Outcome::from_parts(values, av))
    }

    fn synthetic(
        &self,
        index: usize,
        group: &GroupStructure,
        sigma: &MseMatrix,
        chol: &DMatrix<f64>,
        rng: &mut RngStream,
    ) -> ReplicationRecord {
        let k = group.k();
        let draw = |rng: &mut RngStream| chol * DVector::from_fn(k, |_, _| rng.sample::<f64, _>(StandardNormal));
        let error = draw(rng);
        let mut gram = DMatrix::zeros(k, k);
        for _ in 0..self.cfg.b {
            let e = draw(rng);
            gram.ger(1.0, &e, &e, 1.0);
        }
        let outcome = (|| -> estavg_core::Result<(Outcome, Vec<f64>)> {
            let t = EstimatorVector::new(error.iter().copied().collect(), group.clone())?;
            let sigma_hat = MseMatrix::new(gram / self.cfg.b as f64)?;
            let av = self.averaged(&t, &sigma_hat)?;
            let oracle = average(&t, sigma, self.constraint)?.with_intervals(self.cfg.level)?;
            let delta = divergence_upper_bound(&sigma_hat, sigma)?;
            let bound =
                oracle_distance_bound(delta, standardized_norm_sq(&error, sigma)?, risk_trace(&oracle.weights, sigma));
            let gap = (&av.theta_hat - &oracle.theta_hat).norm_squared();
            let ratio = if bound > 0.0 {
                gap / bound
            } else if gap == 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            let mut o = Outcome::new(&t, av);
            o.append(oracle);
            Ok((o, vec![ratio, delta]))
        })();
        match outcome {
            Ok((o, diagnostics)) => o.into_record(index, &self.layout, diagnostics),
            Err(e) => ReplicationRecord::failed(index, self.rows(), vec![f64::NAN; 2], e),
        }
    }
}

/// Per-row values of a successful replicate before the truth is known.
struct Outcome {
    values: Vec<Option<f64>>,
    intervals: Vec<Option<(f64, f64, f64)>>,
}

impl Outcome {
    fn new(t: &EstimatorVector, av: AveragingResult) -> Self {
        Self::from_parts(t.values().iter().map(|&v| Some(v)).collect(), av)
    }

    fn from_parts(values: Vec<Option<f64>>, av: AveragingResult) -> Self {
        let mut o = Self { intervals: vec![None; values.len()], values };
        o.append(av);
        o
    }

    fn append(&mut self, av: AveragingResult) {
        let intervals = av.intervals.unwrap_or_default();
        for (j, &theta) in av.theta_hat.iter().enumerate() {
            self.values.push(Some(theta));
            self.intervals.push(intervals.get(j).map(|i| (i.low, i.high, av.component_risks[j])));
        }
    }

    fn into_record(self, index: usize, layout: &Layout, diagnostics: Vec<f64>) -> ReplicationRecord {
        debug_assert_eq!(self.values.len(), layout.labels.len());
        let hits = self
            .intervals
            .iter()
            .zip(&layout.truth)
            .map(|(iv, &truth)| iv.map(|(lo, hi, _)| lo <= truth && truth <= hi))
            .collect();
        let risks = self.intervals.iter().map(|iv| iv.map(|(_, _, a)| a)).collect();
        ReplicationRecord { index, values: self.values, hits, risks, diagnostics, failure: None }
    }
}

/// The stream owned by replicate `index`.
pub fn replicate_stream(seed: u64, index: usize) -> RngStream {
    RngStream::new(seed, 0).child(index as u64)
}

/// Regenerates the disc set observed by replicate `index` of a Boolean run.
pub fn boolean_realization(cfg: &ExperimentConfig, index: usize) -> Result<DiscSet, ConfigError> {
    if cfg.study != Study::Boolean {
        return Err(ConfigError::Invalid(format!("study {} has no disc sets", cfg.study)));
    }
    cfg.validate()?;
    let mut rng = replicate_stream(cfg.seed, index);
    simulate_boolean(cfg.rho, cfg.alpha, Window::unit(), &mut rng).map_err(|e| ConfigError::Invalid(e.to_string()))
}

/// Runs every replicate of `cfg` and summarizes the results.
///
/// Fails when more than half of the replicates fail.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunOutput, RunError> {
    let plan = Plan::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build()?;
    log::info!("running {} replicates of study {} on {} threads", cfg.reps, cfg.study, cfg.threads);
    let records: Vec<ReplicationRecord> =
        pool.install(|| (0..cfg.reps).into_par_iter().map(|i| plan.replicate(i)).collect());
    let failed = records.iter().filter(|r| r.is_failed()).count();
    if 2 * failed > cfg.reps {
        let first = records.iter().find_map(|r| r.failure.clone()).unwrap_or_default();
        return Err(RunError::ExcessFailures { failed, reps: cfg.reps, first });
    }
    if failed > 0 {
        log::warn!("{failed} of {} replicates failed and were dropped", cfg.reps);
    }
    let summary = mse_summary(&records, &plan.layout.labels, &plan.layout.truth);
    Ok(RunOutput { layout: plan.layout, records, summary })
}
