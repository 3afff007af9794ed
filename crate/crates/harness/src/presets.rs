//! Named configurations covering the standard simulation grid of each study.
//!
//! All presets run 10⁴ replicates. [`Preset::scaled`] shrinks `R` and `B`
//! for desk-scale runs.

use crate::config::{ExperimentConfig, Family, SigmaMethod, Study};

#[derive(Debug, Clone, PartialEq)]
pub struct Preset {
    pub name: String,
    pub description: String,
    pub config: ExperimentConfig,
}

impl Preset {
    /// A copy with `R` and `B` multiplied by the given factors (at least 1 and 2).
    pub fn scaled(&self, reps: f64, b: f64) -> ExperimentConfig {
        let mut cfg = self.config.clone();
        cfg.reps = ((cfg.reps as f64 * reps).round() as usize).max(1);
        cfg.b = ((cfg.b as f64 * b).round() as usize).max(2);
        cfg
    }
}

const TABLE_REPS: usize = 10_000;
const SEED: u64 = 20_160_101;

fn base(study: Study, name: &str) -> ExperimentConfig {
    ExperimentConfig { study, name: name.to_string(), seed: SEED, reps: TABLE_REPS, ..ExperimentConfig::default() }
}

fn location() -> Vec<Preset> {
    let families: [(&str, Family, f64, &str); 6] = [
        ("cauchy", Family::Cauchy, 0.0, "Cauchy"),
        ("st4", Family::Student, 4.0, "Student t(4)"),
        ("st7", Family::Student, 7.0, "Student t(7)"),
        ("logistic", Family::Logistic, 0.0, "logistic"),
        ("gauss", Family::Gauss, 0.0, "standard Gaussian"),
        ("mix", Family::Mixture, 0.0, "Gaussian mixture 0.5 N(-2,1) + 0.5 N(2,1)"),
    ];
    let mut out = Vec::new();
    for (tag, family, nu, label) in families {
        for n in [30, 50, 100] {
            for (suffix, method) in [("av", SigmaMethod::Plugin), ("avb", SigmaMethod::Npboot)] {
                let name = format!("location-{tag}-n{n}-{suffix}");
                let mut cfg = base(Study::Location, &name);
                cfg.family = family;
                cfg.nu = if nu > 0.0 { nu } else { cfg.nu };
                cfg.n = n;
                cfg.sigma_method = Some(method);
                let how = if method == SigmaMethod::Plugin { "plug-in" } else { "bootstrap" };
                out.push(Preset {
                    name,
                    description: format!("mean/median averaging, {label}, n = {n}, {how} MSE matrix"),
                    config: cfg,
                });
            }
        }
    }
    out
}

fn weibull() -> Vec<Preset> {
    let mut out = Vec::new();
    for beta in [0.5, 1.0, 2.0, 3.0] {
        for n in [10, 20, 50] {
            let name = format!("weibull-b{beta}-n{n}");
            let mut cfg = base(Study::Weibull, &name);
            cfg.param1 = beta;
            cfg.param2 = 10.0;
            cfg.n = n;
            out.push(Preset {
                name,
                description: format!("Weibull shape/scale averaging, beta = {beta}, eta = 10, n = {n}"),
                config: cfg,
            });
        }
    }
    out
}

fn boolean() -> Vec<Preset> {
    [25.0, 50.0, 100.0, 150.0]
        .into_iter()
        .map(|rho| {
            let name = format!("boolean-rho{rho}");
            let mut cfg = base(Study::Boolean, &name);
            cfg.rho = rho;
            cfg.alpha = 1.0;
            cfg.b = 100;
            Preset {
                name,
                description: format!("Boolean model intensity/radius averaging, rho = {rho}, alpha = 1"),
                config: cfg,
            }
        })
        .collect()
}

fn quantile() -> Vec<Preset> {
    let truths: [(&str, Family, f64, f64, &str); 4] = [
        ("weibull", Family::Weibull, 3.0, 2.0, "Weibull(3, 2)"),
        ("gamma", Family::Gamma, 3.0, 2.0, "Gamma(3, 2)"),
        ("burr", Family::Burr, 2.0, 1.0, "Burr XII(2, 1)"),
        ("lognormal", Family::Lognormal, 0.0, 1.0, "standard lognormal"),
    ];
    let mut out = Vec::new();
    for (tag, family, a, b, label) in truths {
        for n in [100, 1000] {
            let name = format!("quantile-{tag}-n{n}");
            let mut cfg = base(Study::Quantile, &name);
            cfg.family = family;
            cfg.param1 = a;
            cfg.param2 = b;
            cfg.n = n;
            cfg.p = 0.99;
            out.push(Preset {
                name,
                description: format!("0.99-quantile convex averaging, {label} truth, n = {n}"),
                config: cfg,
            });
        }
    }
    out
}

fn synthetic() -> Vec<Preset> {
    let mut cfg = base(Study::Synthetic, "synthetic-k4");
    cfg.sizes = vec![3, 1];
    cfg.b = 50;
    vec![Preset {
        name: "synthetic-k4".into(),
        description: "known MSE matrix, sampled estimate from 50 draws, groups (3, 1)".into(),
        config: cfg,
    }]
}

pub fn all() -> Vec<Preset> {
    let mut out = location();
    out.extend(weibull());
    out.extend(boolean());
    out.extend(quantile());
    out.extend(synthetic());
    out
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}
