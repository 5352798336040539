//! Sibling-regression estimators.
//!
//! `half_sibling` and `three_quarter_sibling` are the linear estimators: they
//! subtract from the target whatever a least-squares regression on sibling
//! series can explain (beyond the shared covariates). `sglm_denoise` is the
//! GLM version: fit a GLM per series, turn each series into residuals,
//! regress the target's residuals on its siblings' residuals to build a
//! noise proxy `N̂`, then refit the target GLM with `N̂` as an extra
//! covariate.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SglmError};
use crate::expfam::Family;
use crate::glm::{fit_glm, Design, FitOptions, GlmFit};
use crate::linalg::{self, LeastSquares};
use crate::residuals::{self, ResidualKind};

/// Shared covariates plus several response series of the same family.
#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    design: Design,
    responses: DMatrix<f64>,
    response_names: Vec<String>,
    target: usize,
    family: Family,
}

impl Panel {
    pub fn new(
        design: Design,
        responses: DMatrix<f64>,
        response_names: Vec<String>,
        target: usize,
        family: Family,
    ) -> Result<Self> {
        let (m, q) = responses.shape();
        if m != design.nrows() {
            return Err(SglmError::dim(format!(
                "responses have {m} rows, design has {}",
                design.nrows()
            )));
        }
        if q < 2 {
            return Err(SglmError::Config(format!(
                "a panel needs at least 2 response series, got {q}"
            )));
        }
        if response_names.len() != q {
            return Err(SglmError::dim("one name per response series is required"));
        }
        if target >= q {
            return Err(SglmError::dim(format!(
                "target index {target} out of range for {q} series"
            )));
        }
        for (j, name) in response_names.iter().enumerate() {
            for &v in responses.column(j).iter() {
                family
                    .check_support(v)
                    .map_err(|e| e.in_series(name.clone()))?;
            }
        }
        Ok(Panel {
            design,
            responses,
            response_names,
            target,
            family,
        })
    }

    pub fn design(&self) -> &Design {
        &self.design
    }

    pub fn responses(&self) -> &DMatrix<f64> {
        &self.responses
    }

    pub fn response_names(&self) -> &[String] {
        &self.response_names
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn target_index(&self) -> usize {
        self.target
    }

    pub fn nseries(&self) -> usize {
        self.responses.ncols()
    }

    pub fn nobs(&self) -> usize {
        self.responses.nrows()
    }

    pub fn target(&self) -> DVector<f64> {
        self.responses.column(self.target).into_owned()
    }

    pub fn series(&self, j: usize) -> DVector<f64> {
        self.responses.column(j).into_owned()
    }

    /// Indices of the auxiliary (non-target) series, in column order.
    pub fn auxiliary(&self) -> Vec<usize> {
        (0..self.nseries()).filter(|&j| j != self.target).collect()
    }

    pub fn with_target(&self, target: usize) -> Result<Panel> {
        Panel::new(
            self.design.clone(),
            self.responses.clone(),
            self.response_names.clone(),
            target,
            self.family,
        )
    }

    /// Keeps the first `q` series (the target must be among them).
    pub fn truncated(&self, q: usize) -> Result<Panel> {
        let q = q.min(self.nseries());
        Panel::new(
            self.design.clone(),
            self.responses.columns(0, q).into_owned(),
            self.response_names[..q].to_vec(),
            self.target,
            self.family,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseStrategy {
    /// One multivariate regression of the target residual on every auxiliary residual.
    Regression,
    /// Plain average of the auxiliary residuals.
    MeanOfResiduals,
}

impl NoiseStrategy {
    pub fn name(self) -> &'static str {
        match self {
            NoiseStrategy::Regression => "regression",
            NoiseStrategy::MeanOfResiduals => "mean_of_residuals",
        }
    }
}

impl std::str::FromStr for NoiseStrategy {
    type Err = SglmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "regression" => Ok(NoiseStrategy::Regression),
            "mean_of_residuals" | "mean" | "average" => Ok(NoiseStrategy::MeanOfResiduals),
            other => Err(SglmError::Config(format!(
                "unknown noise strategy '{other}'"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SglmOptions {
    pub residual_kind: ResidualKind,
    pub include_x_in_step3: bool,
    pub noise_strategy: NoiseStrategy,
    pub fit: FitOptions,
}

impl Default for SglmOptions {
    fn default() -> Self {
        SglmOptions {
            residual_kind: ResidualKind::FisherScaled,
            include_x_in_step3: false,
            noise_strategy: NoiseStrategy::Regression,
            fit: FitOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDiagnostics {
    pub residual_kind: ResidualKind,
    pub noise_strategy: NoiseStrategy,
    pub include_x_in_step3: bool,
    pub auxiliary_count: usize,
    /// R² of the target residual on the full step-3 regressors.
    pub r2_full: f64,
    /// R² of the target residual on the baseline regressors (intercept, optionally X).
    pub r2_baseline: f64,
}

#[derive(Debug, Clone)]
pub struct NoiseEstimate {
    pub noise_hat: DVector<f64>,
    /// Step-1 fits, one per series in panel column order.
    pub fits: Vec<GlmFit>,
    /// Step-2 residuals, one column per series.
    pub residuals: DMatrix<f64>,
    pub diagnostics: NoiseDiagnostics,
}

#[derive(Debug, Clone)]
pub struct SglmResult {
    pub noise_hat: DVector<f64>,
    pub base_fit: GlmFit,
    pub refit: GlmFit,
    pub refit_design: Design,
    /// Design-only part of the refit linear predictor.
    pub z_hat: DVector<f64>,
    pub diagnostics: NoiseDiagnostics,
}

impl SglmResult {
    /// Refit coefficients on the original design columns.
    pub fn design_coefficients(&self) -> DVector<f64> {
        let p = self.refit.ncoef() - 1;
        self.refit.beta.rows(0, p).into_owned()
    }

    pub fn noise_coefficient(&self) -> f64 {
        self.refit.beta[self.refit.ncoef() - 1]
    }
}

fn check_rows(y1: &DVector<f64>, other: &DMatrix<f64>) -> Result<()> {
    if y1.len() != other.nrows() {
        return Err(SglmError::dim(format!(
            "target has {} observations, conditioning set has {}",
            y1.len(),
            other.nrows()
        )));
    }
    Ok(())
}

fn fitted_with_intercept(regressors: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    let x = linalg::with_intercept(&linalg::drop_constant_columns(regressors));
    Ok(LeastSquares::rank_revealing(&x)?.fitted(y))
}

/// `Ẑ₁ = Y₁ - Ê[Y₁ | Y₂] + mean(Y₁)` with an intercept-augmented least-squares fit.
pub fn half_sibling(y1: &DVector<f64>, y2: &DMatrix<f64>) -> Result<DVector<f64>> {
    check_rows(y1, y2)?;
    let fitted = fitted_with_intercept(y2, y1)?;
    Ok((y1 - fitted).add_scalar(linalg::mean(y1)))
}

/// `Ẑ₁ = Y₁ - Ê[Y₁ | X, Y₂] + Ê[Y₁ | X]`.
pub fn three_quarter_sibling(
    x: &DMatrix<f64>,
    y1: &DVector<f64>,
    y2: &DMatrix<f64>,
) -> Result<DVector<f64>> {
    check_rows(y1, x)?;
    check_rows(y1, y2)?;
    let full = fitted_with_intercept(&linalg::hstack(x, y2), y1)?;
    let base = fitted_with_intercept(x, y1)?;
    Ok(y1 - full + base)
}

/// Returns the conditional-expectation form and the residual form of the
/// half-sibling (no `x`) or three-quarter-sibling (with `x`) estimator.
///
/// The residual form computes `Rᵢ = Yᵢ - Ê[Yᵢ | X]` (or `Yᵢ - mean(Yᵢ)`) for
/// every series and returns `Y₁ - Ê[R₁ | R₂]`; least squares makes the two
/// forms agree exactly.
pub fn residual_form_equivalence(
    y1: &DVector<f64>,
    y2: &DMatrix<f64>,
    x: Option<&DMatrix<f64>>,
) -> Result<(DVector<f64>, DVector<f64>)> {
    check_rows(y1, y2)?;
    let (lhs, base) = match x {
        Some(x) => (three_quarter_sibling(x, y1, y2)?, x.clone()),
        None => (half_sibling(y1, y2)?, DMatrix::zeros(y1.len(), 0)),
    };
    let residualize =
        |y: &DVector<f64>| -> Result<DVector<f64>> { Ok(y - fitted_with_intercept(&base, y)?) };
    let r1 = residualize(y1)?;
    let mut r2 = DMatrix::zeros(y2.nrows(), y2.ncols());
    for j in 0..y2.ncols() {
        r2.set_column(j, &residualize(&y2.column(j).into_owned())?);
    }
    let rhs = y1 - fitted_with_intercept(&r2, &r1)?;
    Ok((lhs, rhs))
}

fn r_squared(y: &DVector<f64>, fitted: &DVector<f64>) -> f64 {
    let mean = linalg::mean(y);
    let tss: f64 = y.iter().map(|v| (v - mean) * (v - mean)).sum();
    let rss: f64 = (y - fitted).norm_squared();
    if tss == 0.0 {
        0.0
    } else {
        1.0 - rss / tss
    }
}

/// Fits one GLM per series on the shared design.
pub fn fit_all_series(panel: &Panel, fit: FitOptions) -> Result<Vec<GlmFit>> {
    let fits = crate::par::map(panel.nseries(), |j| {
        fit_glm(panel.design(), &panel.series(j), panel.family(), fit)
            .map_err(|e| e.in_series(panel.response_names()[j].clone()))
    });
    fits.into_iter().collect()
}

/// Residual matrix (one column per series) for already fitted series.
pub fn residual_matrix(panel: &Panel, fits: &[GlmFit], kind: ResidualKind) -> Result<DMatrix<f64>> {
    let mut out = DMatrix::zeros(panel.nobs(), panel.nseries());
    for (j, fit) in fits.iter().enumerate() {
        let r = residuals::compute(kind, fit, panel.design(), &panel.series(j))
            .map_err(|e| e.in_series(panel.response_names()[j].clone()))?;
        out.set_column(j, &r.values);
    }
    Ok(out)
}

/// Builds the noise proxy `N̂` for the panel's target series.
pub fn estimate_noise(panel: &Panel, options: &SglmOptions) -> Result<NoiseEstimate> {
    let fits = fit_all_series(panel, options.fit)?;
    let residuals = residual_matrix(panel, &fits, options.residual_kind)?;
    let (noise_hat, diagnostics) = noise_from_residuals(panel, &residuals, options)?;
    Ok(NoiseEstimate {
        noise_hat,
        fits,
        residuals,
        diagnostics,
    })
}

/// Steps 3-4: turns a residual matrix into `N̂` for the panel's target.
pub fn noise_from_residuals(
    panel: &Panel,
    residuals: &DMatrix<f64>,
    options: &SglmOptions,
) -> Result<(DVector<f64>, NoiseDiagnostics)> {
    let target = panel.target_index();
    let aux = panel.auxiliary();
    let r1 = residuals.column(target).into_owned();
    let raux = residuals.select_columns(&aux);
    let baseline_regressors = if options.include_x_in_step3 {
        linalg::drop_constant_columns(panel.design().x())
    } else {
        DMatrix::zeros(panel.nobs(), 0)
    };
    let baseline = fitted_with_intercept(&baseline_regressors, &r1)?;

    let (noise_hat, r2_full) = match options.noise_strategy {
        NoiseStrategy::Regression => {
            let full_regressors = linalg::hstack(&raux, &baseline_regressors);
            let full = fitted_with_intercept(&full_regressors, &r1).map_err(|e| {
                e.in_series(format!(
                    "residual regression for {}",
                    panel.response_names()[target]
                ))
            })?;
            let r2 = r_squared(&r1, &full);
            (full - &baseline, r2)
        }
        NoiseStrategy::MeanOfResiduals => {
            let avg = DVector::from_iterator(raux.nrows(), raux.row_iter().map(|r| r.mean()));
            let centered = &avg - fitted_with_intercept(&baseline_regressors, &avg)?;
            let r2 = linalg::correlation(&centered, &r1).powi(2);
            (centered, r2)
        }
    };

    Ok((
        noise_hat,
        NoiseDiagnostics {
            residual_kind: options.residual_kind,
            noise_strategy: options.noise_strategy,
            include_x_in_step3: options.include_x_in_step3,
            auxiliary_count: aux.len(),
            r2_full,
            r2_baseline: r_squared(&r1, &baseline),
        },
    ))
}

/// Full pipeline: noise proxy, then the target GLM refit with `N̂` appended.
pub fn sglm_denoise(panel: &Panel, options: &SglmOptions) -> Result<SglmResult> {
    let est = estimate_noise(panel, options)?;
    let base_fit = est.fits[panel.target_index()].clone();
    refit_with_noise(panel, base_fit, est.noise_hat, est.diagnostics, options.fit)
}

/// Step 5 with a caller-supplied noise series (for example the true noise in a simulation).
pub fn sglm_with_noise(
    panel: &Panel,
    noise: &DVector<f64>,
    options: &SglmOptions,
) -> Result<SglmResult> {
    let base_fit = fit_glm(panel.design(), &panel.target(), panel.family(), options.fit)?;
    let diagnostics = NoiseDiagnostics {
        residual_kind: options.residual_kind,
        noise_strategy: options.noise_strategy,
        include_x_in_step3: options.include_x_in_step3,
        auxiliary_count: 0,
        r2_full: f64::NAN,
        r2_baseline: f64::NAN,
    };
    refit_with_noise(panel, base_fit, noise.clone(), diagnostics, options.fit)
}

fn refit_with_noise(
    panel: &Panel,
    base_fit: GlmFit,
    noise_hat: DVector<f64>,
    diagnostics: NoiseDiagnostics,
    fit: FitOptions,
) -> Result<SglmResult> {
    let refit_design = panel.design().with_column("noise_hat", &noise_hat)?;
    let target_name = panel.response_names()[panel.target_index()].clone();
    let refit = fit_glm(&refit_design, &panel.target(), panel.family(), fit)
        .map_err(|e| e.in_series(target_name))?;
    let p = panel.design().ncols();
    let z_hat = panel.design().x() * refit.beta.rows(0, p);
    Ok(SglmResult {
        noise_hat,
        base_fit,
        refit,
        refit_design,
        z_hat,
        diagnostics,
    })
}
