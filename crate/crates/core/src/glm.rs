//! Canonical-link GLM fitting by iteratively reweighted least squares.
//!
//! With a canonical link the Newton step and Fisher scoring coincide: each
//! iteration solves the weighted least-squares problem
//! `min ‖W^{1/2} X Δ - W^{-1/2}(y - μ)‖` with `W = diag(A''(η))`. Steps are
//! halved until the new iterate is inside the natural-parameter domain and
//! does not decrease the log-likelihood.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SglmError};
use crate::expfam::{Family, FamilyKind};
use crate::linalg::{self, LeastSquares};

/// Covariate matrix with named columns; rows are observations.
#[derive(Debug, Clone, PartialEq)]
pub struct Design {
    x: DMatrix<f64>,
    column_names: Vec<String>,
}

impl Design {
    pub fn new(x: DMatrix<f64>, column_names: Vec<String>) -> Result<Self> {
        let p = x.ncols();
        if p == 0 {
            return Err(SglmError::dim("design needs at least one column"));
        }
        if column_names.len() != p {
            return Err(SglmError::dim(format!(
                "{} column names for {p} columns",
                column_names.len()
            )));
        }
        for (i, name) in column_names.iter().enumerate() {
            if column_names[..i].contains(name) {
                return Err(SglmError::Config(format!("duplicate column name '{name}'")));
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SglmError::domain("design contains non-finite entries"));
        }
        Ok(Design { x, column_names })
    }

    /// Builds a design from unnamed columns, named `x0, x1, ...`.
    pub fn from_matrix(x: DMatrix<f64>) -> Result<Self> {
        let names = (0..x.ncols()).map(|j| format!("x{j}")).collect();
        Design::new(x, names)
    }

    /// Prepends an `intercept` column.
    pub fn with_intercept(&self) -> Result<Self> {
        let mut names = vec!["intercept".to_string()];
        names.extend(self.column_names.iter().cloned());
        Design::new(linalg::with_intercept(&self.x), names)
    }

    /// Appends one named column.
    pub fn with_column(&self, name: &str, values: &DVector<f64>) -> Result<Self> {
        if values.len() != self.nrows() {
            return Err(SglmError::dim(
                "appended column length differs from design rows",
            ));
        }
        let x = linalg::hstack(
            &self.x,
            &DMatrix::from_column_slice(values.len(), 1, values.as_slice()),
        );
        let mut names = self.column_names.clone();
        names.push(name.to_string());
        Design::new(x, names)
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.column_names.iter().position(|n| n == name)
    }

    pub fn nrows(&self) -> usize {
        self.x.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.x.ncols()
    }

    /// Index of a column whose entries are all equal and nonzero.
    pub fn constant_column(&self) -> Option<usize> {
        (0..self.ncols()).find(|&j| {
            let c = self.x.column(j);
            c[0] != 0.0 && c.iter().all(|&v| v == c[0])
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub max_iters: usize,
    pub max_halvings: usize,
    /// Relative log-likelihood change treated as converged.
    pub tol_loglik: f64,
    /// Score tolerance per observation: converged when `‖Xᵀ(y-μ)‖∞ ≤ m·tol_score`.
    pub tol_score: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            max_iters: 100,
            max_halvings: 30,
            tol_loglik: 1e-10,
            tol_score: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlmFit {
    pub family: Family,
    pub beta: DVector<f64>,
    pub eta: DVector<f64>,
    pub mu: DVector<f64>,
    pub fisher_diag: DVector<f64>,
    pub loglik: f64,
    pub converged: bool,
    pub iterations: usize,
    /// Log-likelihood after each accepted iterate, starting with the initial point.
    pub loglik_trace: Vec<f64>,
}

impl GlmFit {
    pub fn nobs(&self) -> usize {
        self.eta.len()
    }

    pub fn ncoef(&self) -> usize {
        self.beta.len()
    }

    /// Wraps a given linear predictor as an unfitted model (no likelihood, not converged).
    pub fn from_linear_predictor(
        family: Family,
        beta: DVector<f64>,
        eta: DVector<f64>,
    ) -> Result<Self> {
        for &t in eta.iter() {
            family.check_theta(t)?;
        }
        Ok(GlmFit {
            family,
            beta,
            mu: eta.map(|t| family.mean_raw(t)),
            fisher_diag: eta.map(|t| family.fisher_raw(t)),
            eta,
            loglik: f64::NAN,
            converged: false,
            iterations: 0,
            loglik_trace: Vec::new(),
        })
    }
}

const STEP_TOL: f64 = 1e-6;

struct Iterate {
    beta: DVector<f64>,
    eta: DVector<f64>,
    loglik: f64,
}

fn evaluate(
    family: &Family,
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    beta: DVector<f64>,
) -> Option<Iterate> {
    let eta = x * &beta;
    if !eta.iter().all(|&t| family.in_domain(t)) {
        return None;
    }
    let loglik = loglik_at(family, y, &eta);
    if !loglik.is_finite() {
        return None;
    }
    Some(Iterate { beta, eta, loglik })
}

fn loglik_at(family: &Family, y: &DVector<f64>, eta: &DVector<f64>) -> f64 {
    let scale = family.scale();
    y.iter()
        .zip(eta.iter())
        .map(|(&yi, &t)| {
            (t * yi - family.log_partition_raw(t)) / scale + family.log_base_measure(yi)
        })
        .sum()
}

fn starting_point(
    family: &Family,
    design: &Design,
    ls: &LeastSquares,
    y: &DVector<f64>,
) -> Result<DVector<f64>> {
    let p = design.ncols();
    let zero = DVector::zeros(p);
    if family.kind() != FamilyKind::Gamma {
        return Ok(zero);
    }
    // θ = 0 is outside the Gamma domain; regress the saturated natural parameters instead
    let target = y.map(|v| -family.dispersion() / v);
    let beta = ls.coefficients(&target);
    if (design.x() * &beta).iter().all(|&t| family.in_domain(t)) {
        return Ok(beta);
    }
    if let Some(c) = design.constant_column() {
        let mut beta = zero;
        beta[c] = -family.dispersion() / (linalg::mean(y) * design.x()[(0, c)]);
        if (design.x() * &beta).iter().all(|&t| family.in_domain(t)) {
            return Ok(beta);
        }
    }
    Err(SglmError::domain(
        "no in-domain starting point for the gamma fit (add an intercept column)",
    ))
}

/// Maximum-likelihood fit of a canonical-link GLM.
pub fn fit_glm(
    design: &Design,
    y: &DVector<f64>,
    family: Family,
    options: FitOptions,
) -> Result<GlmFit> {
    let x = design.x();
    let m = design.nrows();
    if y.len() != m {
        return Err(SglmError::dim(format!(
            "response has {} entries, design has {m} rows",
            y.len()
        )));
    }
    for &v in y.iter() {
        family.check_support(v)?;
    }
    let ls = LeastSquares::new(x)?;

    let beta0 = starting_point(&family, design, &ls, y)?;
    let mut cur = evaluate(&family, x, y, beta0)
        .ok_or_else(|| SglmError::domain("starting point outside the natural-parameter domain"))?;
    let mut trace = vec![cur.loglik];
    let score_tol = m as f64 * options.tol_score;

    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iters {
        let mu = cur.eta.map(|t| family.mean_raw(t));
        let w = cur.eta.map(|t| family.fisher_raw(t));
        let resid = y - &mu;
        let score = x.transpose() * &resid;

        let sw = w.map(f64::sqrt);
        let mut wx = x.clone();
        for (i, mut row) in wx.row_iter_mut().enumerate() {
            row *= sw[i];
        }
        let z = resid.component_div(&sw);
        // X has full rank, so a singular weighted design means weights have
        // collapsed towards zero on the way to a boundary solution
        let delta = match LeastSquares::new(&wx) {
            Ok(ls) => ls.coefficients(&z),
            Err(SglmError::SingularDesign(_)) => {
                return Err(SglmError::NonConvergence {
                    iterations,
                    loglik: cur.loglik,
                    beta: cur.beta.iter().copied().collect(),
                })
            }
            Err(e) => return Err(e),
        };
        // a small score alone is not enough: under separation the score
        // vanishes while the Newton step does not
        let step_small = delta.amax() <= STEP_TOL * (1.0 + cur.beta.amax());
        if score.amax() <= score_tol && step_small {
            // one last full Newton step is nearly free and squares the error
            if let Some(next) = evaluate(&family, x, y, &cur.beta + &delta) {
                if next.loglik >= cur.loglik - 1e-12 * (1.0 + cur.loglik.abs()) {
                    cur = next;
                }
            }
            converged = true;
            break;
        }
        iterations += 1;

        let slack = 1e-12 * (1.0 + cur.loglik.abs());
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=options.max_halvings {
            if let Some(next) = evaluate(&family, x, y, &cur.beta + &delta * step) {
                if next.loglik >= cur.loglik - slack {
                    accepted = Some(next);
                    break;
                }
            }
            step *= 0.5;
        }
        let Some(next) = accepted else {
            return Err(SglmError::NonConvergence {
                iterations,
                loglik: cur.loglik,
                beta: cur.beta.iter().copied().collect(),
            });
        };

        let rel_change = (next.loglik - cur.loglik).abs() / (cur.loglik.abs() + 1e-300);
        cur = next;
        trace.push(cur.loglik);
        if rel_change < options.tol_loglik && step == 1.0 && step_small {
            converged = true;
            break;
        }
    }

    if !converged {
        return Err(SglmError::NonConvergence {
            iterations,
            loglik: cur.loglik,
            beta: cur.beta.iter().copied().collect(),
        });
    }

    let mu = cur.eta.map(|t| family.mean_raw(t));
    let fisher_diag = cur.eta.map(|t| family.fisher_raw(t));
    Ok(GlmFit {
        family,
        beta: cur.beta,
        eta: cur.eta,
        mu,
        fisher_diag,
        loglik: cur.loglik,
        converged,
        iterations,
        loglik_trace: trace,
    })
}

/// Linear predictors and means for a (possibly new) design.
pub fn predict(fit: &GlmFit, design: &Design) -> Result<(DVector<f64>, DVector<f64>)> {
    if design.ncols() != fit.ncoef() {
        return Err(SglmError::dim(format!(
            "design has {} columns, fit has {} coefficients",
            design.ncols(),
            fit.ncoef()
        )));
    }
    let eta = design.x() * &fit.beta;
    let mu = eta
        .iter()
        .map(|&t| fit.family.mean(t))
        .collect::<Result<Vec<_>>>()?;
    Ok((eta, DVector::from_vec(mu)))
}

/// Leverages: `diag(W^{1/2} X (XᵀWX)⁻¹ Xᵀ W^{1/2})` at the fitted weights.
pub fn hat_diagonal(fit: &GlmFit, design: &Design) -> Result<DVector<f64>> {
    check_aligned(fit, design)?;
    let mut wx = design.x().clone();
    for (i, mut row) in wx.row_iter_mut().enumerate() {
        row *= fit.fisher_diag[i].sqrt();
    }
    Ok(LeastSquares::new(&wx)?.leverages())
}

/// `Σ log p(yᵢ | θᵢ = ηᵢ)` including the base measure.
pub fn log_likelihood(fit: &GlmFit, y: &DVector<f64>) -> Result<f64> {
    if y.len() != fit.nobs() {
        return Err(SglmError::dim("response length differs from the fit"));
    }
    y.iter()
        .zip(fit.eta.iter())
        .map(|(&yi, &t)| fit.family.log_density(yi, t))
        .sum()
}

/// Canonical score `Xᵀ(y - μ)`.
pub fn score(fit: &GlmFit, design: &Design, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_aligned(fit, design)?;
    Ok(design.x().transpose() * (y - &fit.mu))
}

/// Ordinary least squares, no intercept added.
pub fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.nrows() != y.len() {
        return Err(SglmError::dim("response length differs from design rows"));
    }
    Ok(LeastSquares::new(x)?.coefficients(y))
}

fn check_aligned(fit: &GlmFit, design: &Design) -> Result<()> {
    if design.nrows() != fit.nobs() || design.ncols() != fit.ncoef() {
        return Err(SglmError::dim(format!(
            "design is {}x{} but fit has {} observations and {} coefficients",
            design.nrows(),
            design.ncols(),
            fit.nobs(),
            fit.ncoef()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expfam::NaturalParam;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ones(m: usize) -> Design {
        Design::new(DMatrix::from_element(m, 1, 1.0), vec!["intercept".into()]).unwrap()
    }

    fn two_point() -> Design {
        Design::from_matrix(DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0])).unwrap()
    }

    fn fit(d: &Design, y: &[f64], f: Family) -> GlmFit {
        fit_glm(d, &DVector::from_column_slice(y), f, FitOptions::default()).unwrap()
    }

    #[test]
    fn intercept_only_fits_match_sample_means() {
        let f = fit(&ones(3), &[1.0, 2.0, 3.0], Family::poisson());
        assert!((f.beta[0] - 2f64.ln()).abs() < 1e-10);
        let g = fit(&ones(3), &[-1.0, 0.0, 4.0], Family::gaussian(1.0).unwrap());
        assert!((g.beta[0] - 1.0).abs() < 1e-12);
        let gm = fit(&ones(4), &[0.5, 1.0, 2.0, 4.5], Family::gamma(2.0).unwrap());
        assert!((gm.mu[0] - 2.0).abs() < 1e-10, "{gm:?}");
    }

    #[test]
    fn saturated_two_point_poisson() {
        let e = std::f64::consts::E;
        let f = fit(&two_point(), &[1.0, e], Family::poisson());
        // analytic solution of exp(b0) = 1, exp(b0 + b1) = e
        assert!(f.beta[0].abs() < 1e-6);
        assert!((f.beta[1] - 1.0).abs() < 1e-6);
        // grid search on the slope with the intercept held at its analytic value
        let ll = |b1: f64| e * b1 - b1.exp();
        let best = (0..=20_000).map(|i| -10.0 + i as f64 * 1e-3).fold(
            (f64::NEG_INFINITY, 0.0),
            |acc, b| if ll(b) > acc.0 { (ll(b), b) } else { acc },
        );
        assert!((best.1 - f.beta[1]).abs() < 1e-3);
    }

    #[test]
    fn responses_outside_support_are_rejected() {
        let r = fit_glm(
            &two_point(),
            &DVector::from_vec(vec![1.0, -1.0]),
            Family::poisson(),
            FitOptions::default(),
        );
        assert!(matches!(r, Err(SglmError::Domain(_))));
        let r = fit_glm(
            &two_point(),
            &DVector::from_vec(vec![0.0, 0.5]),
            Family::bernoulli(),
            FitOptions::default(),
        );
        assert!(matches!(r, Err(SglmError::Domain(_))));
    }

    #[test]
    fn predictions() {
        let g = Family::gaussian(1.0).unwrap();
        let mut f = fit(&ones(1), &[2.0], g);
        f.beta = DVector::from_vec(vec![2.0]);
        let (eta, mu) = predict(&f, &ones(1)).unwrap();
        assert_eq!((eta[0], mu[0]), (2.0, 2.0));

        let mut p = fit(&ones(2), &[1.0, 1.0], Family::poisson());
        p.beta[0] = 0.0;
        assert_eq!(predict(&p, &ones(1)).unwrap().1[0], 1.0);

        let d = Design::from_matrix(DMatrix::from_row_slice(1, 2, &[1.0, 1.0])).unwrap();
        assert!(fit_glm(&d, &DVector::from_element(1, 1.0), g, FitOptions::default()).is_err());
        let mut b = fit(&two_point(), &[0.0, 1.0], g);
        b.family = Family::bernoulli();
        b.beta = DVector::from_vec(vec![1.0, -1.0]);
        let (eta, mu) = predict(&b, &d).unwrap();
        assert_eq!((eta[0], mu[0]), (0.0, 0.5));
        assert!(matches!(
            predict(&b, &ones(1)),
            Err(SglmError::Dimension(_))
        ));
    }

    #[test]
    fn hat_diagonal_values() {
        let g = Family::gaussian(1.0).unwrap();
        let d = ones(4);
        let f = fit(&d, &[1.0, 2.0, 0.0, 5.0], g);
        let h = hat_diagonal(&f, &d).unwrap();
        assert!(h.iter().all(|&v| (v - 0.25).abs() < 1e-14));

        let d = two_point();
        let f = fit(&d, &[1.0, 3.0], Family::poisson());
        let h = hat_diagonal(&f, &d).unwrap();
        // explicit W^{1/2} X (XᵀWX)⁻¹ Xᵀ W^{1/2}
        let w = DMatrix::from_diagonal(&f.fisher_diag.map(f64::sqrt));
        let wx = &w * d.x();
        let explicit = &wx * (wx.transpose() * &wx).try_inverse().unwrap() * wx.transpose();
        for i in 0..2 {
            assert!((h[i] - 1.0).abs() < 1e-10);
            assert!((h[i] - explicit[(i, i)]).abs() < 1e-10);
        }
    }

    #[test]
    fn log_likelihood_values() {
        let g = Family::gaussian(1.0).unwrap();
        let f = fit(&ones(1), &[0.0], g);
        let ll = log_likelihood(&f, &DVector::from_vec(vec![0.0])).unwrap();
        assert!((ll + 0.5 * (2.0 * std::f64::consts::PI).ln()).abs() < 1e-14);

        let mut p = fit(&ones(1), &[1.0], Family::poisson());
        p.eta[0] = 0.0;
        assert!((log_likelihood(&p, &DVector::from_vec(vec![0.0])).unwrap() + 1.0).abs() < 1e-14);

        let mut p2 = fit(&ones(2), &[1.0, 3.0], Family::poisson());
        p2.eta = DVector::from_element(2, 2f64.ln());
        let pmf =
            |k: u32, lam: f64| lam.powi(k as i32) * (-lam).exp() / (1..=k).product::<u32>() as f64;
        let oracle = (pmf(1, 2.0) * pmf(3, 2.0)).ln();
        let ll = log_likelihood(&p2, &DVector::from_vec(vec![1.0, 3.0])).unwrap();
        assert!((ll - oracle).abs() < 1e-12);
    }

    #[test]
    fn ols_examples() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let b = ols(&x, &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!((b[0]).abs() < 1e-15 && (b[1] - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = DMatrix::from_fn(20, 3, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        let b = ols(&x, &DVector::from_element(20, 4.5)).unwrap();
        assert!((b[0] - 4.5).abs() < 1e-12 && b[1].abs() < 1e-12 && b[2].abs() < 1e-12);

        let dup = DMatrix::from_fn(5, 2, |i, _| i as f64);
        assert!(matches!(
            ols(&dup, &DVector::zeros(5)),
            Err(SglmError::SingularDesign(_))
        ));
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        let x = DMatrix::from_fn(6, 2, |i, _| 1.0 + i as f64);
        let d = Design::from_matrix(x).unwrap();
        let r = fit_glm(
            &d,
            &DVector::from_element(6, 1.0),
            Family::poisson(),
            FitOptions::default(),
        );
        assert!(matches!(r, Err(SglmError::SingularDesign(_))));
    }

    #[test]
    fn separated_logistic_fails_to_converge() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, -2.0, 1.0, -1.0, 1.0, 1.0, 1.0, 2.0]);
        let d = Design::from_matrix(x).unwrap();
        let y = DVector::from_vec(vec![0.0, 0.0, 1.0, 1.0]);
        let r = fit_glm(&d, &y, Family::bernoulli(), FitOptions::default());
        match r {
            Err(SglmError::NonConvergence { beta, .. }) => assert_eq!(beta.len(), 2),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn design_validation() {
        let x = DMatrix::from_element(3, 2, 1.0);
        assert!(Design::new(x.clone(), vec!["a".into(), "a".into()]).is_err());
        assert!(Design::new(x.clone(), vec!["a".into()]).is_err());
        assert!(Design::new(DMatrix::zeros(3, 0), vec![]).is_err());
        let mut bad = x;
        bad[(0, 0)] = f64::NAN;
        assert!(Design::new(bad, vec!["a".into(), "b".into()]).is_err());
    }

    fn simulate_1d(family: Family, beta: &[f64], m: usize, seed: u64) -> (Design, DVector<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = beta.len();
        let x = DMatrix::from_fn(m, p, |_, j| {
            if j == 0 {
                1.0
            } else {
                rng.random_range(-1.0..1.0)
            }
        });
        let b = DVector::from_column_slice(beta);
        let eta = &x * &b;
        let y = eta.map(|t| family.sample(NaturalParam::new(&family, t).unwrap(), &mut rng));
        (Design::from_matrix(x).unwrap(), y)
    }

    #[test]
    fn converged_fits_satisfy_the_score_equation_and_monotone_likelihood() {
        let cases = [
            (Family::poisson(), vec![0.3, 0.8, -0.5]),
            (Family::bernoulli(), vec![-0.2, 1.5]),
            (Family::gamma(2.0).unwrap(), vec![-2.0, 0.5]),
            (Family::gaussian(0.5).unwrap(), vec![1.0, -1.0, 2.0]),
        ];
        for (seed, (f, b)) in cases.into_iter().enumerate() {
            let (d, y) = simulate_1d(f, &b, 300, seed as u64);
            let fit = fit_glm(&d, &y, f, FitOptions::default()).unwrap();
            let s = score(&fit, &d, &y).unwrap();
            assert!(s.amax() <= 300.0 * 1e-8, "{f:?} score {}", s.amax());
            for w in fit.loglik_trace.windows(2) {
                assert!(w[1] >= w[0] - 1e-12 * (1.0 + w[0].abs()), "{f:?}");
            }
            for i in 0..fit.nobs() {
                assert_eq!(fit.mu[i], f.mean(fit.eta[i]).unwrap());
                assert!(fit.fisher_diag[i] > 0.0);
            }
            let h = hat_diagonal(&fit, &d).unwrap();
            assert!(h.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
            assert!((h.sum() - d.ncols() as f64).abs() < 1e-8);
            assert!(
                (log_likelihood(&fit, &y).unwrap() - fit.loglik).abs()
                    < 1e-8 * fit.loglik.abs().max(1.0)
            );
        }
    }

    #[test]
    fn one_parameter_fits_match_grid_search() {
        for (seed, f) in [
            Family::poisson(),
            Family::bernoulli(),
            Family::gaussian(1.0).unwrap(),
        ]
        .into_iter()
        .enumerate()
        {
            let mut rng = ChaCha8Rng::seed_from_u64(40 + seed as u64);
            let x = DVector::from_fn(80, |_, _| rng.random_range(-1.0..1.0));
            let eta = &x * 0.7;
            let y = eta.map(|t| f.sample(NaturalParam::new(&f, t).unwrap(), &mut rng));
            let d = Design::from_matrix(DMatrix::from_column_slice(80, 1, x.as_slice())).unwrap();
            let fitted = fit_glm(&d, &y, f, FitOptions::default()).unwrap();
            let ll = |b: f64| loglik_at(&f, &y, &(&x * b));
            let best = (0..=20_000).map(|i| -10.0 + i as f64 * 1e-3).fold(
                (f64::NEG_INFINITY, 0.0),
                |acc, b| {
                    let v = ll(b);
                    if v > acc.0 {
                        (v, b)
                    } else {
                        acc
                    }
                },
            );
            assert!((best.1 - fitted.beta[0]).abs() < 1e-3, "{f:?}");
        }
    }

    #[test]
    fn gaussian_glm_equals_ols() {
        for seed in 0..5 {
            let (d, y) = simulate_1d(
                Family::gaussian(1.0).unwrap(),
                &[0.5, 1.0, -2.0, 0.1],
                60,
                seed,
            );
            let fit = fit_glm(
                &d,
                &y,
                Family::gaussian(1.0).unwrap(),
                FitOptions::default(),
            )
            .unwrap();
            let b = ols(d.x(), &y).unwrap();
            assert!((fit.beta - b).amax() < 1e-8);
        }
    }

    #[test]
    fn fits_are_deterministic() {
        let (d, y) = simulate_1d(Family::poisson(), &[0.1, 0.4], 100, 9);
        let a = fit_glm(&d, &y, Family::poisson(), FitOptions::default()).unwrap();
        let b = fit_glm(&d, &y, Family::poisson(), FitOptions::default()).unwrap();
        assert_eq!(a, b);
    }
}
