//! Residuals of a fitted GLM.
//!
//! `FisherScaled` divides the raw residual by the per-observation Fisher
//! information `A''(η̂ᵢ)`. To first order in `θᵢ - η̂ᵢ` its conditional mean
//! is the natural-parameter gap `θᵢ - η̂ᵢ`, which is what lets residuals of
//! sibling series be regressed on each other linearly.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SglmError};
use crate::glm::{hat_diagonal, Design, GlmFit};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResidualKind {
    Raw,
    Student,
    Deviance,
    #[serde(rename = "fisher")]
    FisherScaled,
}

impl ResidualKind {
    pub const ALL: [ResidualKind; 4] = [
        ResidualKind::FisherScaled,
        ResidualKind::Raw,
        ResidualKind::Student,
        ResidualKind::Deviance,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ResidualKind::Raw => "raw",
            ResidualKind::Student => "student",
            ResidualKind::Deviance => "deviance",
            ResidualKind::FisherScaled => "fisher",
        }
    }
}

impl std::str::FromStr for ResidualKind {
    type Err = SglmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "raw" => Ok(ResidualKind::Raw),
            "student" | "studentized" => Ok(ResidualKind::Student),
            "deviance" => Ok(ResidualKind::Deviance),
            "fisher" | "fisher_scaled" | "fisher-scaled" => Ok(ResidualKind::FisherScaled),
            other => Err(SglmError::Config(format!(
                "unknown residual kind '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidualVector {
    pub kind: ResidualKind,
    pub values: DVector<f64>,
}

fn check_len(fit: &GlmFit, y: &DVector<f64>) -> Result<()> {
    if y.len() != fit.nobs() {
        return Err(SglmError::dim(format!(
            "response has {} entries, fit has {}",
            y.len(),
            fit.nobs()
        )));
    }
    Ok(())
}

/// `(yᵢ - μ̂ᵢ) / A''(η̂ᵢ)`.
pub fn fisher_scaled(fit: &GlmFit, y: &DVector<f64>) -> Result<ResidualVector> {
    check_len(fit, y)?;
    let values = (y - &fit.mu).component_div(&fit.fisher_diag);
    Ok(ResidualVector {
        kind: ResidualKind::FisherScaled,
        values,
    })
}

pub fn raw(fit: &GlmFit, y: &DVector<f64>) -> Result<ResidualVector> {
    check_len(fit, y)?;
    Ok(ResidualVector {
        kind: ResidualKind::Raw,
        values: y - &fit.mu,
    })
}

/// `(yᵢ - μ̂ᵢ) / sqrt(Var(μ̂ᵢ)(1 - hᵢ))` with leverages from the fitted weights.
pub fn studentized(fit: &GlmFit, design: &Design, y: &DVector<f64>) -> Result<ResidualVector> {
    studentized_impl(fit, design, y, false)
}

/// As [`studentized`], but a saturated point that is fitted exactly gets 0
/// instead of a leverage error. Saturated points with a nonzero raw residual
/// still fail.
pub fn studentized_saturated_zero(
    fit: &GlmFit,
    design: &Design,
    y: &DVector<f64>,
) -> Result<ResidualVector> {
    studentized_impl(fit, design, y, true)
}

fn studentized_impl(
    fit: &GlmFit,
    design: &Design,
    y: &DVector<f64>,
    exact_is_zero: bool,
) -> Result<ResidualVector> {
    check_len(fit, y)?;
    let h = hat_diagonal(fit, design)?;
    let scale = fit.family.scale();
    let mut values = DVector::zeros(y.len());
    for i in 0..y.len() {
        let diff = y[i] - fit.mu[i];
        if h[i] >= 1.0 - 1e-12 {
            if exact_is_zero && diff.abs() <= 1e-10 * (1.0 + fit.mu[i].abs()) {
                continue;
            }
            return Err(SglmError::Leverage {
                index: i,
                leverage: h[i],
            });
        }
        let var = scale * fit.fisher_diag[i];
        values[i] = diff / (var * (1.0 - h[i])).sqrt();
    }
    Ok(ResidualVector {
        kind: ResidualKind::Student,
        values,
    })
}

/// `sign(yᵢ - μ̂ᵢ) sqrt(dᵢ)` with `dᵢ` the unit deviance.
pub fn deviance_residual(fit: &GlmFit, y: &DVector<f64>) -> Result<ResidualVector> {
    check_len(fit, y)?;
    let mut values = DVector::zeros(y.len());
    for i in 0..y.len() {
        let d = fit.family.unit_deviance(y[i], fit.mu[i])?;
        let diff = y[i] - fit.mu[i];
        values[i] = if diff > 0.0 {
            d.sqrt()
        } else if diff < 0.0 {
            -d.sqrt()
        } else {
            0.0
        };
    }
    Ok(ResidualVector {
        kind: ResidualKind::Deviance,
        values,
    })
}

pub fn compute(
    kind: ResidualKind,
    fit: &GlmFit,
    design: &Design,
    y: &DVector<f64>,
) -> Result<ResidualVector> {
    match kind {
        ResidualKind::Raw => raw(fit, y),
        ResidualKind::Student => studentized(fit, design, y),
        ResidualKind::Deviance => deviance_residual(fit, y),
        ResidualKind::FisherScaled => fisher_scaled(fit, y),
    }
}
