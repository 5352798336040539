//! Synthetic noise-confounded panels with ground truth.
//!
//! Series `j` at observation `i` is drawn from the family at
//! `θᵢⱼ = w_X[j]·xᵢ + w_N[j]·nᵢ + εᵢⱼ (+ offset)` with `x, n ~ U[-1, 1]`
//! shared across series and `ε ~ N(0, σ_ε²)` independent per cell.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SglmError};
use crate::expfam::{Family, FamilyKind, NaturalParam};
use crate::glm::{Design, GlmFit};
use crate::linalg::{self, LeastSquares};
use crate::rng;
use crate::sibling::{Panel, SglmResult};

/// Base shift applied to Gamma natural parameters so they stay negative.
pub const GAMMA_SHIFT: f64 = 3.0;
pub const GAMMA_SHIFT_MARGIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CoefficientScheme {
    Uniform { low: f64, high: f64 },
    Fixed { value: f64 },
}

impl CoefficientScheme {
    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            CoefficientScheme::Uniform { low, high } if high > low => rng.random_range(low..high),
            CoefficientScheme::Uniform { low, .. } => low,
            CoefficientScheme::Fixed { value } => value,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub family: Family,
    pub m: usize,
    pub q: usize,
    pub sigma_eps: f64,
    pub seed: u64,
    pub coefficient_scheme: CoefficientScheme,
    pub noise_scheme: CoefficientScheme,
    /// Whether the fitted design carries an intercept column; `None` picks
    /// the family default (Gamma needs one to absorb the domain shift).
    pub intercept: Option<bool>,
}

impl SimConfig {
    pub fn new(family: Family, m: usize, q: usize, seed: u64) -> Self {
        SimConfig {
            family,
            m,
            q,
            sigma_eps: 0.1,
            seed,
            coefficient_scheme: CoefficientScheme::Uniform {
                low: 0.5,
                high: 1.5,
            },
            noise_scheme: CoefficientScheme::Uniform {
                low: -1.0,
                high: 1.0,
            },
            intercept: None,
        }
    }

    pub fn with_intercept(&self) -> bool {
        self.intercept
            .unwrap_or(self.family.kind() == FamilyKind::Gamma)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 2 {
            return Err(SglmError::Config(format!(
                "m must be at least 2, got {}",
                self.m
            )));
        }
        if self.q < 2 {
            return Err(SglmError::Config(format!(
                "q must be at least 2 (one target and one auxiliary series), got {}",
                self.q
            )));
        }
        if !(self.sigma_eps >= 0.0 && self.sigma_eps.is_finite()) {
            return Err(SglmError::Config(format!(
                "sigma_eps must be >= 0, got {}",
                self.sigma_eps
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimTruth {
    pub family: Family,
    pub intercept: bool,
    pub x: DVector<f64>,
    pub noise: DVector<f64>,
    pub w_x: Vec<f64>,
    pub w_n: Vec<f64>,
    /// `w_X[j]·xᵢ`
    pub z: DMatrix<f64>,
    pub eps: DMatrix<f64>,
    pub theta: DMatrix<f64>,
    pub y: DMatrix<f64>,
    /// Constant added to every natural parameter (nonzero only for Gamma).
    pub offset: f64,
}

// sub-stream labels
const STREAM_X: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_WX: u64 = 3;
const STREAM_WN: u64 = 4;
const STREAM_EPS: u64 = 5;
const STREAM_Y: u64 = 6;

pub fn generate(config: &SimConfig) -> Result<SimTruth> {
    config.validate()?;
    let (m, q) = (config.m, config.q);
    let family = config.family;

    let mut rx = rng::stream(config.seed, &[STREAM_X]);
    let x = DVector::from_fn(m, |_, _| rx.random_range(-1.0..1.0));
    let mut rn = rng::stream(config.seed, &[STREAM_NOISE]);
    let noise = DVector::from_fn(m, |_, _| rn.random_range(-1.0..1.0));

    let w_x: Vec<f64> = (0..q)
        .map(|j| {
            config
                .coefficient_scheme
                .draw(&mut rng::stream(config.seed, &[STREAM_WX, j as u64]))
        })
        .collect();
    let w_n: Vec<f64> = (0..q)
        .map(|j| {
            config
                .noise_scheme
                .draw(&mut rng::stream(config.seed, &[STREAM_WN, j as u64]))
        })
        .collect();

    let mut eps = DMatrix::zeros(m, q);
    if config.sigma_eps > 0.0 {
        let normal = Normal::new(0.0, config.sigma_eps).expect("finite sigma");
        for j in 0..q {
            let mut r = rng::stream(config.seed, &[STREAM_EPS, j as u64]);
            for i in 0..m {
                eps[(i, j)] = normal.sample(&mut r);
            }
        }
    }

    let offset = if family.kind() == FamilyKind::Gamma {
        -(GAMMA_SHIFT + GAMMA_SHIFT_MARGIN)
    } else {
        0.0
    };
    let z = DMatrix::from_fn(m, q, |i, j| w_x[j] * x[i]);
    let theta = DMatrix::from_fn(m, q, |i, j| {
        z[(i, j)] + w_n[j] * noise[i] + eps[(i, j)] + offset
    });
    if let Some(((i, j), t)) = theta
        .iter()
        .enumerate()
        .map(|(k, t)| ((k % m, k / m), *t))
        .find(|(_, t)| !family.in_domain(*t))
    {
        return Err(SglmError::domain(format!(
            "generated natural parameter {t} at observation {i}, series {j} is outside the {} domain (offset {offset})",
            family.name()
        )));
    }

    let mut y = DMatrix::zeros(m, q);
    for j in 0..q {
        let mut r = rng::stream(config.seed, &[STREAM_Y, j as u64]);
        for i in 0..m {
            y[(i, j)] = family.sample(NaturalParam::new(&family, theta[(i, j)])?, &mut r);
        }
    }

    Ok(SimTruth {
        family,
        intercept: config.with_intercept(),
        x,
        noise,
        w_x,
        w_n,
        z,
        eps,
        theta,
        y,
        offset,
    })
}

impl SimTruth {
    pub fn nobs(&self) -> usize {
        self.x.len()
    }

    pub fn nseries(&self) -> usize {
        self.w_x.len()
    }

    /// Design with column `x_1` (after `intercept` when enabled).
    pub fn design(&self) -> Result<Design> {
        let d = Design::new(
            DMatrix::from_column_slice(self.nobs(), 1, self.x.as_slice()),
            vec!["x_1".into()],
        )?;
        if self.intercept {
            d.with_intercept()
        } else {
            Ok(d)
        }
    }

    /// Index of the `x_1` column in [`SimTruth::design`].
    pub fn x_column(&self) -> usize {
        usize::from(self.intercept)
    }

    pub fn panel(&self, target: usize) -> Result<Panel> {
        let names = (1..=self.nseries()).map(|j| format!("y_{j}")).collect();
        Panel::new(self.design()?, self.y.clone(), names, target, self.family)
    }

    /// Systematic natural parameter of series `j` without noise: `z + offset`.
    pub fn signal(&self, j: usize) -> DVector<f64> {
        self.z.column(j).add_scalar(self.offset)
    }
}

/// What an estimator produced for the target series.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub z_hat: DVector<f64>,
    pub w_x_hat: f64,
    pub noise_hat: Option<DVector<f64>>,
}

impl Estimate {
    pub fn from_glm(fit: &GlmFit, design: &Design, x_column: usize) -> Self {
        Estimate {
            z_hat: design.x() * &fit.beta,
            w_x_hat: fit.beta[x_column],
            noise_hat: None,
        }
    }

    pub fn from_sglm(result: &SglmResult, x_column: usize) -> Self {
        Estimate {
            z_hat: result.z_hat.clone(),
            w_x_hat: result.refit.beta[x_column],
            noise_hat: Some(result.noise_hat.clone()),
        }
    }

    /// For estimators that only output a denoised series: the slope comes from
    /// regressing `z_hat` on the design.
    pub fn from_series(
        z_hat: DVector<f64>,
        design: &Design,
        x_column: usize,
        noise_hat: Option<DVector<f64>>,
    ) -> Result<Self> {
        let beta = LeastSquares::new(design.x())?.coefficients(&z_hat);
        Ok(Estimate {
            w_x_hat: beta[x_column],
            z_hat,
            noise_hat,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    /// Mean squared error of `ẑ` against the true `z`, both centered.
    pub mse: f64,
    /// Signed relative error `(ŵ_X - w_X) / w_X`.
    pub bias: f64,
    /// Pearson correlation of `N̂` with the true noise.
    pub noise_corr: Option<f64>,
}

pub fn metrics(truth: &SimTruth, target: usize, estimate: &Estimate) -> Result<MetricsRecord> {
    if target >= truth.nseries() {
        return Err(SglmError::dim(format!("target {target} out of range")));
    }
    score(
        &truth.signal(target),
        truth.w_x[target],
        &truth.noise,
        estimate,
    )
}

/// Metrics against an explicit truth: the systematic natural parameter of the
/// target, its true coefficient and the true noise series.
pub fn score(
    signal: &DVector<f64>,
    w_x: f64,
    noise: &DVector<f64>,
    estimate: &Estimate,
) -> Result<MetricsRecord> {
    let m = signal.len();
    if estimate.z_hat.len() != m || noise.len() != m {
        return Err(SglmError::dim(
            "estimate length differs from the simulated panel",
        ));
    }
    // the level of Z is not identified once an intercept or the noise's
    // average effect is absorbed, so both sides are compared centered
    let err = &estimate.z_hat - signal;
    let mse = err.map(|e| e - linalg::mean(&err)).norm_squared() / m as f64;
    let bias = (estimate.w_x_hat - w_x) / w_x;
    let noise_corr = match &estimate.noise_hat {
        Some(n) if n.len() == m => Some(linalg::correlation(n, noise)),
        Some(_) => {
            return Err(SglmError::dim(
                "noise estimate length differs from the simulated panel",
            ))
        }
        None => None,
    };
    Ok(MetricsRecord {
        mse,
        bias,
        noise_corr,
    })
}
