//! Distribution families used by the simulation studies.
//!
//! Location families are standardized (center 0). Families with a closed-form
//! quantile are sampled by inversion; the rest use `rand_distr`.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use statrs::distribution::{Continuous, ContinuousCDF, Gamma as StatGamma, Normal, StudentsT};

use crate::error::{Error, Result};

/// Upper end of the support of [`Distribution::BetaScaled`].
pub const BETA_SCALED_MAX: f64 = 0.1;
/// Component means of the Gaussian mixture.
pub const MIXTURE_SHIFT: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Distribution {
    Gaussian,
    Cauchy,
    Student {
        nu: f64,
    },
    Logistic,
    /// `0.5 N(-2, 1) + 0.5 N(2, 1)`
    GaussianMixture,
    Weibull {
        shape: f64,
        scale: f64,
    },
    Gamma {
        shape: f64,
        scale: f64,
    },
    /// cdf `1 - (1 + x^c)^{-k}`
    BurrXII {
        c: f64,
        k: f64,
    },
    Lognormal {
        mu: f64,
        sigma: f64,
    },
    /// Beta(1, α) stretched onto `[0, 0.1]`.
    BetaScaled {
        alpha: f64,
    },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

fn check_p(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("probability {p} outside (0, 1)")))
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Distribution::Student { nu } => positive("nu", nu),
            Distribution::Weibull { shape, scale } | Distribution::Gamma { shape, scale } => {
                positive("shape", shape)?;
                positive("scale", scale)
            }
            Distribution::BurrXII { c, k } => {
                positive("c", c)?;
                positive("k", k)
            }
            Distribution::Lognormal { mu, sigma } => {
                if !mu.is_finite() {
                    return Err(Error::InvalidArgument(format!("mu must be finite, got {mu}")));
                }
                positive("sigma", sigma)
            }
            Distribution::BetaScaled { alpha } => positive("alpha", alpha),
            _ => Ok(()),
        }
    }

    /// Short label used in configs and output.
    pub fn name(&self) -> String {
        match *self {
            Distribution::Gaussian => "gauss".into(),
            Distribution::Cauchy => "cauchy".into(),
            Distribution::Student { nu } => format!("student({nu})"),
            Distribution::Logistic => "logistic".into(),
            Distribution::GaussianMixture => "mixture".into(),
            Distribution::Weibull { shape, scale } => format!("weibull({shape},{scale})"),
            Distribution::Gamma { shape, scale } => format!("gamma({shape},{scale})"),
            Distribution::BurrXII { c, k } => format!("burr({c},{k})"),
            Distribution::Lognormal { mu, sigma } => format!("lognormal({mu},{sigma})"),
            Distribution::BetaScaled { alpha } => format!("beta_scaled({alpha})"),
        }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Distribution::Gaussian => rng.sample(StandardNormal),
            Distribution::Student { nu } => rand_distr::StudentT::new(nu).unwrap().sample(rng),
            Distribution::GaussianMixture => {
                let z: f64 = rng.sample(StandardNormal);
                if rng.random::<bool>() {
                    z + MIXTURE_SHIFT
                } else {
                    z - MIXTURE_SHIFT
                }
            }
            Distribution::Gamma { shape, scale } => rand_distr::Gamma::new(shape, scale).unwrap().sample(rng),
            Distribution::Lognormal { mu, sigma } => {
                let z: f64 = rng.sample(StandardNormal);
                (mu + sigma * z).exp()
            }
            _ => {
                // open interval keeps closed-form quantiles finite
                let u: f64 = rng.random();
                let u = if u == 0.0 { f64::MIN_POSITIVE } else { u };
                self.quantile_unchecked(u)
            }
        }
    }

    /// `n` iid draws.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<f64>> {
        self.validate()?;
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        Ok((0..n).map(|_| self.draw(rng)).collect())
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Gaussian => std_normal().cdf(x),
            Distribution::Cauchy => 0.5 + x.atan() / PI,
            Distribution::Student { nu } => StudentsT::new(0.0, 1.0, nu).unwrap().cdf(x),
            Distribution::Logistic => 1.0 / (1.0 + (-x).exp()),
            Distribution::GaussianMixture => {
                let n = std_normal();
                0.5 * (n.cdf(x - MIXTURE_SHIFT) + n.cdf(x + MIXTURE_SHIFT))
            }
            Distribution::Weibull { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-(x / scale).powf(shape)).exp_m1()
                }
            }
            Distribution::Gamma { shape, scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    StatGamma::new(shape, 1.0 / scale).unwrap().cdf(x)
                }
            }
            Distribution::BurrXII { c, k } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-k * x.powf(c).ln_1p()).exp_m1()
                }
            }
            Distribution::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    0.0
                } else {
                    std_normal().cdf((x.ln() - mu) / sigma)
                }
            }
            Distribution::BetaScaled { alpha } => {
                if x <= 0.0 {
                    0.0
                } else if x >= BETA_SCALED_MAX {
                    1.0
                } else {
                    1.0 - (1.0 - x / BETA_SCALED_MAX).powf(alpha)
                }
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Distribution::Gaussian => std_normal().pdf(x),
            Distribution::Cauchy => 1.0 / (PI * (1.0 + x * x)),
            Distribution::Student { nu } => StudentsT::new(0.0, 1.0, nu).unwrap().pdf(x),
            Distribution::Logistic => {
                let e = (-x.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            Distribution::GaussianMixture => {
                let n = std_normal();
                0.5 * (n.pdf(x - MIXTURE_SHIFT) + n.pdf(x + MIXTURE_SHIFT))
            }
            Distribution::Weibull { shape, scale } => {
                if x < 0.0 {
                    return 0.0;
                }
                let z = x / scale;
                shape / scale * z.powf(shape - 1.0) * (-z.powf(shape)).exp()
            }
            Distribution::Gamma { shape, scale } => {
                if x < 0.0 {
                    0.0
                } else {
                    StatGamma::new(shape, 1.0 / scale).unwrap().pdf(x)
                }
            }
            Distribution::BurrXII { c, k } => {
                if x <= 0.0 {
                    return 0.0;
                }
                let xc = x.powf(c);
                c * k * xc / x * (-(k + 1.0) * xc.ln_1p()).exp()
            }
            Distribution::Lognormal { mu, sigma } => {
                if x <= 0.0 {
                    return 0.0;
                }
                std_normal().pdf((x.ln() - mu) / sigma) / (x * sigma)
            }
            Distribution::BetaScaled { alpha } => {
                if !(0.0..=BETA_SCALED_MAX).contains(&x) {
                    return 0.0;
                }
                alpha / BETA_SCALED_MAX * (1.0 - x / BETA_SCALED_MAX).powf(alpha - 1.0)
            }
        }
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        self.validate()?;
        check_p(p)?;
        Ok(self.quantile_unchecked(p))
    }

    fn quantile_unchecked(&self, p: f64) -> f64 {
        match *self {
            Distribution::Gaussian => std_normal().inverse_cdf(p),
            Distribution::Cauchy => (PI * (p - 0.5)).tan(),
            Distribution::Student { nu } => StudentsT::new(0.0, 1.0, nu).unwrap().inverse_cdf(p),
            Distribution::Logistic => (p / (1.0 - p)).ln(),
            Distribution::GaussianMixture => self.invert_numerically(p),
            Distribution::Weibull { shape, scale } => scale * (-(-p).ln_1p()).powf(1.0 / shape),
            Distribution::Gamma { shape, scale } => StatGamma::new(shape, 1.0 / scale).unwrap().inverse_cdf(p),
            Distribution::BurrXII { c, k } => (-(-p).ln_1p() / k).exp_m1().powf(1.0 / c),
            Distribution::Lognormal { mu, sigma } => (mu + sigma * std_normal().inverse_cdf(p)).exp(),
            Distribution::BetaScaled { alpha } => BETA_SCALED_MAX * (1.0 - (1.0 - p).powf(1.0 / alpha)),
        }
    }

    fn invert_numerically(&self, p: f64) -> f64 {
        let (mut lo, mut hi) = (-1.0, 1.0);
        while self.cdf(lo) > p {
            lo *= 2.0;
        }
        while self.cdf(hi) < p {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * (1.0 + mid.abs()) {
                break;
            }
        }
        0.5 * (lo + hi)
    }

    /// Center of symmetry for the location families.
    pub fn location(&self) -> Option<f64> {
        match self {
            Distribution::Gaussian
            | Distribution::Cauchy
            | Distribution::Student { .. }
            | Distribution::Logistic
            | Distribution::GaussianMixture => Some(0.0),
            _ => None,
        }
    }

    /// Variance where finite and known in closed form.
    pub fn variance(&self) -> Option<f64> {
        match *self {
            Distribution::Gaussian => Some(1.0),
            Distribution::Student { nu } if nu > 2.0 => Some(nu / (nu - 2.0)),
            Distribution::Logistic => Some(PI * PI / 3.0),
            Distribution::GaussianMixture => Some(1.0 + MIXTURE_SHIFT * MIXTURE_SHIFT),
            _ => None,
        }
    }
}
