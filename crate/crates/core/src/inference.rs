//! Huber-White sandwich covariance for canonical GLM fits.
//!
//! Uses empirical plug-ins for both expectations and no small-sample
//! degrees-of-freedom correction.

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SglmError};
use crate::glm::{Design, GlmFit};
use crate::linalg;

#[derive(Debug, Clone, PartialEq)]
pub struct SandwichCovariance {
    /// `(1/m) Σ A''(ηᵢ) xᵢxᵢᵀ`
    pub a_bar: DMatrix<f64>,
    /// `(1/m) Σ (yᵢ - μᵢ)² xᵢxᵢᵀ`
    pub b_bar: DMatrix<f64>,
    /// `Ā⁻¹ B̄ Ā⁻¹`, the asymptotic covariance of `√m (β̂ - β*)`.
    pub c: DMatrix<f64>,
    /// `sqrt(diag(C) / m)`
    pub standard_errors: DVector<f64>,
    pub nobs: usize,
}

impl SandwichCovariance {
    /// Finite-sample variance of coefficient `index`, `C_ii / m`.
    pub fn variance(&self, index: usize) -> Result<f64> {
        if index >= self.c.nrows() {
            return Err(SglmError::dim(format!(
                "coefficient index {index} out of range for {} coefficients",
                self.c.nrows()
            )));
        }
        Ok(self.c[(index, index)] / self.nobs as f64)
    }

    /// Model-based (inverse Fisher information) covariance `Ā⁻¹`, for comparison.
    pub fn inverse_fisher(&self) -> Result<DMatrix<f64>> {
        linalg::spd_inverse(&self.a_bar)
    }
}

pub fn sandwich(fit: &GlmFit, design: &Design, y: &DVector<f64>) -> Result<SandwichCovariance> {
    let (m, p) = (design.nrows(), design.ncols());
    if fit.nobs() != m || fit.ncoef() != p || y.len() != m {
        return Err(SglmError::dim("fit, design and response are not aligned"));
    }
    let x = design.x();
    let mut a_bar = DMatrix::zeros(p, p);
    let mut b_bar = DMatrix::zeros(p, p);
    for i in 0..m {
        let xi = x.row(i).transpose();
        let outer = &xi * xi.transpose();
        let r = y[i] - fit.mu[i];
        a_bar += &outer * fit.fisher_diag[i];
        b_bar += outer * (r * r);
    }
    a_bar /= m as f64;
    b_bar /= m as f64;
    let a_inv = linalg::spd_inverse(&a_bar)
        .map_err(|_| SglmError::SingularDesign("expected Hessian is singular".into()))?;
    let mut c = &a_inv * &b_bar * &a_inv;
    // symmetrize away rounding from the triple product
    c = (&c + c.transpose()) * 0.5;
    let standard_errors = c.diagonal().map(|v| (v.max(0.0) / m as f64).sqrt());
    Ok(SandwichCovariance {
        a_bar,
        b_bar,
        c,
        standard_errors,
        nobs: m,
    })
}

/// Ratio of sandwich variances `Var_direct / Var_sglm` for one coefficient;
/// above 1 means the SGLM refit estimates it more precisely.
pub fn relative_efficiency(
    direct: &SandwichCovariance,
    sglm: &SandwichCovariance,
    coef_index: usize,
) -> Result<f64> {
    Ok(direct.variance(coef_index)? / sglm.variance(coef_index)?)
}
