//! Browser bindings for the demo page. Every export takes plain numbers and
//! strings and returns a JSON document, so the page needs no glue beyond
//! `JSON.parse`.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use sglm_core::benchmark::{self, BenchmarkConfig};
use sglm_core::glm::{fit_glm, FitOptions};
use sglm_core::residuals::{self, ResidualKind};
use sglm_core::simulate::{self, Estimate, MetricsRecord, SimConfig};
use sglm_core::{linalg, sibling, Family, FamilyKind, SglmOptions};

type Result<T> = std::result::Result<T, String>;

fn family(name: &str) -> Result<Family> {
    let kind: FamilyKind = name.parse().map_err(|e| format!("{e}"))?;
    let dispersion = if kind == FamilyKind::Gamma { 2.0 } else { 1.0 };
    Family::new(kind, dispersion).map_err(|e| e.to_string())
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Serialize)]
struct DenoiseView {
    x: Vec<f64>,
    z_true: Vec<f64>,
    z_glm: Vec<f64>,
    z_sglm: Vec<f64>,
    noise: Vec<f64>,
    noise_hat: Vec<f64>,
    glm: MetricsRecord,
    sglm: MetricsRecord,
}

/// Center a series so curves with unidentified levels overlay.
fn centered(v: &nalgebra::DVector<f64>) -> Vec<f64> {
    let m = linalg::mean(v);
    v.iter().map(|x| x - m).collect()
}

pub fn denoise_json(
    family_name: &str,
    m: usize,
    q: usize,
    seed: u64,
    residual: &str,
) -> Result<String> {
    let f = family(family_name)?;
    let truth = simulate::generate(&SimConfig::new(f, m, q, seed)).map_err(err)?;
    let panel = truth.panel(0).map_err(err)?;
    let design = panel.design();
    let xcol = truth.x_column();
    let options = SglmOptions {
        residual_kind: residual.parse().map_err(err)?,
        ..SglmOptions::default()
    };

    let fit = fit_glm(design, &panel.target(), f, FitOptions::default()).map_err(err)?;
    let glm = Estimate::from_glm(&fit, design, xcol);
    let r = sibling::sglm_denoise(&panel, &options).map_err(err)?;
    let sglm = Estimate::from_sglm(&r, xcol);

    let view = DenoiseView {
        x: truth.x.iter().copied().collect(),
        z_true: centered(&truth.signal(0)),
        z_glm: centered(&glm.z_hat),
        z_sglm: centered(&sglm.z_hat),
        noise: truth.noise.iter().copied().collect(),
        noise_hat: r.noise_hat.iter().copied().collect(),
        glm: simulate::metrics(&truth, 0, &glm).map_err(err)?,
        sglm: simulate::metrics(&truth, 0, &sglm).map_err(err)?,
    };
    serde_json::to_string(&view).map_err(err)
}

#[derive(Serialize)]
struct SweepPoint {
    q: usize,
    estimator: &'static str,
    mse: f64,
    mse_se: f64,
    bias: f64,
    bias_se: f64,
    failures: usize,
}

pub fn sweep_json(
    family_name: &str,
    m: usize,
    q_max: usize,
    replicates: usize,
    seed: u64,
) -> Result<String> {
    let f = family(family_name)?;
    let q_grid: Vec<usize> = (2..=q_max.max(2)).collect();
    let config = BenchmarkConfig {
        m,
        ..BenchmarkConfig::new(f, q_grid, replicates, seed)
    };
    let cells = benchmark::run(&config).map_err(err)?;
    let points: Vec<SweepPoint> = cells
        .iter()
        .map(|c| SweepPoint {
            q: c.key.q,
            estimator: c.key.estimator.name(),
            mse: c.mse.map_or(f64::NAN, |s| s.mean),
            mse_se: c.mse.map_or(f64::NAN, |s| s.se),
            bias: c.bias.map_or(f64::NAN, |s| s.mean),
            bias_se: c.bias.map_or(f64::NAN, |s| s.se),
            failures: c.failures,
        })
        .collect();
    serde_json::to_string(&points).map_err(err)
}

#[derive(Serialize)]
struct ResidualView {
    noise: Vec<f64>,
    kinds: Vec<ResidualSeries>,
}

#[derive(Serialize)]
struct ResidualSeries {
    kind: &'static str,
    values: Vec<f64>,
    /// Correlation with the true noise, averaged in absolute value over all series.
    mean_abs_corr: f64,
}

pub fn residuals_json(family_name: &str, m: usize, q: usize, seed: u64) -> Result<String> {
    let f = family(family_name)?;
    let truth = simulate::generate(&SimConfig::new(f, m, q, seed)).map_err(err)?;
    let design = truth.design().map_err(err)?;
    let mut kinds: Vec<ResidualSeries> = ResidualKind::ALL
        .iter()
        .map(|k| ResidualSeries {
            kind: k.name(),
            values: Vec::new(),
            mean_abs_corr: 0.0,
        })
        .collect();
    for j in 0..truth.nseries() {
        let y = truth.y.column(j).into_owned();
        let fit = fit_glm(&design, &y, f, FitOptions::default()).map_err(err)?;
        for (slot, &kind) in kinds.iter_mut().zip(ResidualKind::ALL.iter()) {
            let r = residuals::compute(kind, &fit, &design, &y).map_err(err)?;
            slot.mean_abs_corr +=
                linalg::correlation(&r.values, &truth.noise).abs() / truth.nseries() as f64;
            if j == 0 {
                slot.values = r.values.iter().copied().collect();
            }
        }
    }
    let view = ResidualView {
        noise: truth.noise.iter().copied().collect(),
        kinds,
    };
    serde_json::to_string(&view).map_err(err)
}

/// Simulates a panel and denoises its first series with and without siblings.
#[wasm_bindgen]
pub fn denoise(
    family: &str,
    m: usize,
    q: usize,
    seed: u64,
    residual: &str,
) -> std::result::Result<String, JsError> {
    denoise_json(family, m, q, seed, residual).map_err(|e| JsError::new(&e))
}

/// Mean squared error and bias of the plain GLM and the sibling GLM as the number of series grows.
#[wasm_bindgen]
pub fn sweep(
    family: &str,
    m: usize,
    q_max: usize,
    replicates: usize,
    seed: u64,
) -> std::result::Result<String, JsError> {
    sweep_json(family, m, q_max, replicates, seed).map_err(|e| JsError::new(&e))
}

/// The four residual kinds of one simulated series against the true noise.
#[wasm_bindgen]
pub fn compare_residuals(
    family: &str,
    m: usize,
    q: usize,
    seed: u64,
) -> std::result::Result<String, JsError> {
    residuals_json(family, m, q, seed).map_err(|e| JsError::new(&e))
}
