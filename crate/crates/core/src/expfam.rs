//! One-parameter exponential families with canonical statistic `T(y) = y`.
//!
//! Densities are written as `h(y) exp((θ y - A(θ)) / φ)` where `φ` is the
//! Gaussian variance and 1 for every other family. The Gamma shape `k` is
//! folded into the log-partition, `A(θ) = -k log(-θ)`, so that `A'(θ)` is
//! the mean and `A''(θ)` the variance without a separate scale.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Normal, Poisson};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Result, SglmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FamilyKind {
    Gaussian,
    Poisson,
    Bernoulli,
    Gamma,
}

impl FamilyKind {
    pub fn name(self) -> &'static str {
        match self {
            FamilyKind::Gaussian => "gaussian",
            FamilyKind::Poisson => "poisson",
            FamilyKind::Bernoulli => "bernoulli",
            FamilyKind::Gamma => "gamma",
        }
    }
}

impl std::str::FromStr for FamilyKind {
    type Err = SglmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(FamilyKind::Gaussian),
            "poisson" => Ok(FamilyKind::Poisson),
            "bernoulli" | "binomial" | "logistic" => Ok(FamilyKind::Bernoulli),
            "gamma" => Ok(FamilyKind::Gamma),
            other => Err(SglmError::Config(format!("unknown family '{other}'"))),
        }
    }
}

/// An exponential-family descriptor.
///
/// `dispersion` is the variance for Gaussian, the shape for Gamma, and
/// exactly 1 for Poisson and Bernoulli.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Family {
    kind: FamilyKind,
    dispersion: f64,
}

/// A natural parameter that has been checked against its family's domain.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct NaturalParam(f64);

impl NaturalParam {
    pub fn new(family: &Family, value: f64) -> Result<Self> {
        family.check_theta(value)?;
        Ok(NaturalParam(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Family {
    pub fn new(kind: FamilyKind, dispersion: f64) -> Result<Self> {
        if !(dispersion.is_finite() && dispersion > 0.0) {
            return Err(SglmError::domain(format!(
                "dispersion must be positive and finite, got {dispersion}"
            )));
        }
        if matches!(kind, FamilyKind::Poisson | FamilyKind::Bernoulli) && dispersion != 1.0 {
            return Err(SglmError::domain(format!(
                "{} family has fixed dispersion 1, got {dispersion}",
                kind.name()
            )));
        }
        Ok(Family { kind, dispersion })
    }

    pub fn gaussian(variance: f64) -> Result<Self> {
        Family::new(FamilyKind::Gaussian, variance)
    }

    pub fn poisson() -> Self {
        Family {
            kind: FamilyKind::Poisson,
            dispersion: 1.0,
        }
    }

    pub fn bernoulli() -> Self {
        Family {
            kind: FamilyKind::Bernoulli,
            dispersion: 1.0,
        }
    }

    pub fn gamma(shape: f64) -> Result<Self> {
        Family::new(FamilyKind::Gamma, shape)
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn dispersion(&self) -> f64 {
        self.dispersion
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// The `φ` in `exp((θy - A(θ))/φ)`: Gaussian variance, otherwise 1.
    pub fn scale(&self) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => self.dispersion,
            _ => 1.0,
        }
    }

    pub fn in_domain(&self, theta: f64) -> bool {
        match self.kind {
            FamilyKind::Gamma => theta.is_finite() && theta < 0.0,
            _ => theta.is_finite(),
        }
    }

    pub(crate) fn check_theta(&self, theta: f64) -> Result<()> {
        if self.in_domain(theta) {
            Ok(())
        } else {
            Err(SglmError::domain(format!(
                "natural parameter {theta} outside the {} domain",
                self.name()
            )))
        }
    }

    pub fn in_support(&self, y: f64) -> bool {
        match self.kind {
            FamilyKind::Gaussian => y.is_finite(),
            // non-integer counts keep a well-defined canonical likelihood via lnΓ(y+1)
            FamilyKind::Poisson => y.is_finite() && y >= 0.0,
            FamilyKind::Bernoulli => y == 0.0 || y == 1.0,
            FamilyKind::Gamma => y.is_finite() && y > 0.0,
        }
    }

    pub(crate) fn check_support(&self, y: f64) -> Result<()> {
        if self.in_support(y) {
            Ok(())
        } else {
            Err(SglmError::domain(format!(
                "response {y} outside the {} support",
                self.name()
            )))
        }
    }

    pub fn valid_mean(&self, mu: f64) -> bool {
        match self.kind {
            FamilyKind::Gaussian => mu.is_finite(),
            FamilyKind::Poisson | FamilyKind::Gamma => mu.is_finite() && mu > 0.0,
            FamilyKind::Bernoulli => mu > 0.0 && mu < 1.0,
        }
    }

    /// `A(θ)`.
    pub fn log_partition(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.log_partition_raw(theta))
    }

    /// `A'(θ) = E[Y]`.
    pub fn mean(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.mean_raw(theta))
    }

    /// `A''(θ)`, the per-observation Fisher information of the canonical form.
    pub fn fisher_info(&self, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        Ok(self.fisher_raw(theta))
    }

    /// `Var(Y) = φ A''(θ)`.
    pub fn variance(&self, theta: f64) -> Result<f64> {
        Ok(self.scale() * self.fisher_info(theta)?)
    }

    /// Natural parameter whose mean is `mu` (the canonical link).
    pub fn link(&self, mu: f64) -> Result<f64> {
        if !self.valid_mean(mu) {
            return Err(self.bad_mean(mu));
        }
        Ok(match self.kind {
            FamilyKind::Gaussian => mu,
            FamilyKind::Poisson => mu.ln(),
            FamilyKind::Bernoulli => (mu / (1.0 - mu)).ln(),
            FamilyKind::Gamma => -self.dispersion / mu,
        })
    }

    pub(crate) fn log_partition_raw(&self, theta: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => 0.5 * theta * theta,
            FamilyKind::Poisson => theta.exp(),
            FamilyKind::Bernoulli => theta.max(0.0) + (-theta.abs()).exp().ln_1p(),
            FamilyKind::Gamma => -self.dispersion * (-theta).ln(),
        }
    }

    pub(crate) fn mean_raw(&self, theta: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => theta,
            FamilyKind::Poisson => theta.exp(),
            FamilyKind::Bernoulli => logistic(theta),
            FamilyKind::Gamma => -self.dispersion / theta,
        }
    }

    pub(crate) fn fisher_raw(&self, theta: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => 1.0,
            FamilyKind::Poisson => theta.exp(),
            FamilyKind::Bernoulli => {
                // e^{-|θ|} / (1 + e^{-|θ|})^2 stays positive where p(1-p) rounds to 0
                let e = (-theta.abs()).exp();
                e / ((1.0 + e) * (1.0 + e))
            }
            FamilyKind::Gamma => self.dispersion / (theta * theta),
        }
    }

    /// `log h(y)`.
    pub(crate) fn log_base_measure(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian => {
                let s2 = self.dispersion;
                -0.5 * y * y / s2 - 0.5 * (2.0 * std::f64::consts::PI * s2).ln()
            }
            FamilyKind::Poisson => -ln_gamma(y + 1.0),
            FamilyKind::Bernoulli => 0.0,
            FamilyKind::Gamma => (self.dispersion - 1.0) * y.ln() - ln_gamma(self.dispersion),
        }
    }

    /// Log-density of one observation at natural parameter `theta`.
    pub fn log_density(&self, y: f64, theta: f64) -> Result<f64> {
        self.check_theta(theta)?;
        self.check_support(y)?;
        Ok((theta * y - self.log_partition_raw(theta)) / self.scale() + self.log_base_measure(y))
    }

    /// `2 (log p(y | saturated) - log p(y | mu))`.
    pub fn unit_deviance(&self, y: f64, mu: f64) -> Result<f64> {
        if !self.valid_mean(mu) {
            return Err(self.bad_mean(mu));
        }
        self.check_support(y)?;
        let d = match self.kind {
            FamilyKind::Gaussian => (y - mu) * (y - mu) / self.dispersion,
            FamilyKind::Poisson => 2.0 * (xlogy(y, y / mu) - (y - mu)),
            FamilyKind::Bernoulli => {
                2.0 * (xlogy(y, y / mu) + xlogy(1.0 - y, (1.0 - y) / (1.0 - mu)))
            }
            FamilyKind::Gamma => {
                let r = y / mu;
                2.0 * self.dispersion * (r - 1.0 - r.ln())
            }
        };
        // rounding can leave a tiny negative value at the saturated mean
        Ok(d.max(0.0))
    }

    /// One draw from the family at `theta`.
    pub fn sample<R: Rng + ?Sized>(&self, theta: NaturalParam, rng: &mut R) -> f64 {
        let theta = theta.value();
        match self.kind {
            FamilyKind::Gaussian => Normal::new(theta, self.dispersion.sqrt())
                .expect("positive variance")
                .sample(rng),
            FamilyKind::Poisson => {
                let lambda = theta.exp();
                if lambda <= 0.0 {
                    0.0
                } else {
                    Poisson::new(lambda).expect("positive rate").sample(rng)
                }
            }
            FamilyKind::Bernoulli => {
                let u: f64 = rng.random();
                if u < logistic(theta) {
                    1.0
                } else {
                    0.0
                }
            }
            FamilyKind::Gamma => {
                // shape k, rate -θ
                let draw = Gamma::new(self.dispersion, -1.0 / theta)
                    .expect("valid gamma parameters")
                    .sample(rng);
                // a Gamma draw can underflow to exactly 0 for tiny shapes
                draw.max(f64::MIN_POSITIVE)
            }
        }
    }

    fn bad_mean(&self, mu: f64) -> SglmError {
        SglmError::domain(format!(
            "mean {mu} is not valid for the {} family",
            self.name()
        ))
    }
}

pub(crate) fn logistic(theta: f64) -> f64 {
    if theta >= 0.0 {
        1.0 / (1.0 + (-theta).exp())
    } else {
        let e = theta.exp();
        e / (1.0 + e)
    }
}

/// `x log(r)` with the convention `0 log(anything) = 0`.
fn xlogy(x: f64, r: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * r.ln()
    }
}
