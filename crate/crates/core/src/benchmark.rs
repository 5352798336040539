//! Monte-Carlo sweeps comparing estimators across panel sizes.
//!
//! Every replicate simulates one panel with the largest requested `q` and
//! truncates it for smaller `q`, so all cells of a replicate share the same
//! draws. Replicates run in parallel; results are assembled in a fixed order.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SglmError};
use crate::expfam::{Family, FamilyKind};
use crate::glm::{fit_glm, FitOptions};
use crate::residuals::ResidualKind;
use crate::rng;
use crate::sibling::{self, NoiseStrategy, Panel, SglmOptions};
use crate::simulate::{self, CoefficientScheme, Estimate, MetricsRecord, SimConfig, SimTruth};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Glm,
    HalfSibling,
    ThreeQuarter,
    Sglm,
}

impl Estimator {
    pub const ALL: [Estimator; 4] = [
        Estimator::Glm,
        Estimator::HalfSibling,
        Estimator::ThreeQuarter,
        Estimator::Sglm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Estimator::Glm => "glm",
            Estimator::HalfSibling => "half_sibling",
            Estimator::ThreeQuarter => "three_quarter",
            Estimator::Sglm => "sglm",
        }
    }

    /// Whether the estimator's output depends on the residual kind.
    pub fn uses_residuals(self) -> bool {
        self == Estimator::Sglm
    }
}

impl std::str::FromStr for Estimator {
    type Err = SglmError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "glm" => Ok(Estimator::Glm),
            "half_sibling" | "hs" => Ok(Estimator::HalfSibling),
            "three_quarter" | "three_quarter_sibling" | "3qs" => Ok(Estimator::ThreeQuarter),
            "sglm" => Ok(Estimator::Sglm),
            other => Err(SglmError::Config(format!("unknown estimator '{other}'"))),
        }
    }
}

/// Maps responses onto the natural-parameter scale for the linear sibling
/// estimators: `ln(1 + y)` for counts, the canonical link otherwise.
pub fn transform_response(family: Family, y: f64) -> f64 {
    match family.kind() {
        FamilyKind::Poisson => y.ln_1p(),
        FamilyKind::Gamma => -family.dispersion() / y.max(f64::MIN_POSITIVE),
        FamilyKind::Gaussian | FamilyKind::Bernoulli => y,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub family: Family,
    pub m: usize,
    /// Total series counts (target included).
    pub q_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub sigma_eps: f64,
    pub estimators: Vec<Estimator>,
    pub residual_kinds: Vec<ResidualKind>,
    pub noise_strategy: NoiseStrategy,
    pub include_x_in_step3: bool,
    pub coefficient_scheme: CoefficientScheme,
    pub noise_scheme: CoefficientScheme,
    pub intercept: Option<bool>,
    pub fit: FitOptions,
}

impl BenchmarkConfig {
    pub fn new(family: Family, q_grid: Vec<usize>, replicates: usize, seed: u64) -> Self {
        let base = SimConfig::new(family, 120, 2, seed);
        BenchmarkConfig {
            family,
            m: base.m,
            q_grid,
            replicates,
            seed,
            sigma_eps: base.sigma_eps,
            estimators: vec![Estimator::Glm, Estimator::Sglm],
            residual_kinds: vec![ResidualKind::FisherScaled],
            noise_strategy: NoiseStrategy::Regression,
            include_x_in_step3: false,
            coefficient_scheme: base.coefficient_scheme,
            noise_scheme: base.noise_scheme,
            intercept: None,
            fit: FitOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.q_grid.is_empty() {
            return Err(SglmError::Config("q grid is empty".into()));
        }
        if let Some(q) = self.q_grid.iter().find(|&&q| q < 2) {
            return Err(SglmError::Config(format!(
                "q grid entry {q}: every panel needs at least 2 series"
            )));
        }
        if self.replicates == 0 {
            return Err(SglmError::Config("replicates must be at least 1".into()));
        }
        if self.estimators.is_empty() {
            return Err(SglmError::Config("no estimators selected".into()));
        }
        if self.estimators.contains(&Estimator::Sglm) && self.residual_kinds.is_empty() {
            return Err(SglmError::Config("no residual kinds selected".into()));
        }
        self.sim_config(0).validate()
    }

    /// Simulation settings of one replicate (with the largest `q` of the grid).
    pub fn sim_config(&self, replicate: usize) -> SimConfig {
        SimConfig {
            family: self.family,
            m: self.m,
            q: self.q_grid.iter().copied().max().unwrap_or(2),
            sigma_eps: self.sigma_eps,
            seed: rng::derive_seed(self.seed, &[replicate as u64]),
            coefficient_scheme: self.coefficient_scheme,
            noise_scheme: self.noise_scheme,
            intercept: self.intercept,
        }
    }

    pub fn sglm_options(&self, kind: ResidualKind) -> SglmOptions {
        SglmOptions {
            residual_kind: kind,
            include_x_in_step3: self.include_x_in_step3,
            noise_strategy: self.noise_strategy,
            fit: self.fit,
        }
    }

    /// Cells in output order: q, then estimator, then residual kind.
    pub fn cells(&self) -> Vec<CellKey> {
        let mut out = Vec::new();
        for &q in &self.q_grid {
            for &estimator in &self.estimators {
                if estimator.uses_residuals() {
                    for &kind in &self.residual_kinds {
                        out.push(CellKey {
                            q,
                            estimator,
                            residual_kind: Some(kind),
                        });
                    }
                } else {
                    out.push(CellKey {
                        q,
                        estimator,
                        residual_kind: None,
                    });
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellKey {
    pub q: usize,
    pub estimator: Estimator,
    pub residual_kind: Option<ResidualKind>,
}

/// Mean and standard error over the successful replicates of a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Stat {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Stat {
    pub fn from_values(values: &[f64]) -> Option<Stat> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let se = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            f64::NAN
        };
        Some(Stat { mean, se, n })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub key: CellKey,
    pub failures: usize,
    pub first_error: Option<String>,
    /// Signed relative error of `ŵ_X`.
    pub bias: Option<Stat>,
    /// Absolute relative error of `ŵ_X`.
    pub abs_error: Option<Stat>,
    pub mse: Option<Stat>,
    /// Absolute correlation of `N̂` with the true noise.
    pub noise_corr: Option<Stat>,
    /// Summed compute time of the cell over replicates.
    #[serde(skip)]
    pub elapsed: Duration,
}

/// Per-replicate outcomes, one per cell in [`BenchmarkConfig::cells`] order.
pub type ReplicateOutcome = Vec<(Result<MetricsRecord>, Duration)>;

fn estimate_cell(
    truth: &SimTruth,
    full: &Panel,
    key: CellKey,
    config: &BenchmarkConfig,
) -> Result<MetricsRecord> {
    let panel = full.truncated(key.q)?;
    let design = panel.design();
    let xcol = truth.x_column();
    let est = match key.estimator {
        Estimator::Glm => {
            let fit = fit_glm(design, &panel.target(), panel.family(), config.fit)?;
            Estimate::from_glm(&fit, design, xcol)
        }
        Estimator::Sglm => {
            let kind = key.residual_kind.unwrap_or(ResidualKind::FisherScaled);
            let result = sibling::sglm_denoise(&panel, &config.sglm_options(kind))?;
            Estimate::from_sglm(&result, xcol)
        }
        Estimator::HalfSibling | Estimator::ThreeQuarter => {
            let t = panel
                .responses()
                .map(|v| transform_response(panel.family(), v));
            let y1 = t.column(panel.target_index()).into_owned();
            let aux = t.select_columns(&panel.auxiliary());
            let z_hat = if key.estimator == Estimator::HalfSibling {
                sibling::half_sibling(&y1, &aux)?
            } else {
                sibling::three_quarter_sibling(design.x(), &y1, &aux)?
            };
            Estimate::from_series(z_hat, design, xcol, None)?
        }
    };
    simulate::metrics(truth, panel.target_index(), &est)
}

// no clock on bare wasm; timings read zero there
#[cfg(not(all(target_arch = "wasm32", target_os = "unknown")))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed())
}

#[cfg(all(target_arch = "wasm32", target_os = "unknown"))]
fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    (f(), Duration::ZERO)
}

/// Runs every cell for one replicate.
pub fn run_replicate(config: &BenchmarkConfig, replicate: usize) -> ReplicateOutcome {
    let keys = config.cells();
    let setup = simulate::generate(&config.sim_config(replicate)).and_then(|t| {
        let p = t.panel(0)?;
        Ok((t, p))
    });
    match setup {
        Err(e) => keys
            .iter()
            .map(|_| (Err(e.clone()), Duration::ZERO))
            .collect(),
        Ok((truth, panel)) => keys
            .iter()
            .map(|&key| timed(|| estimate_cell(&truth, &panel, key, config)))
            .collect(),
    }
}

pub fn summarize(config: &BenchmarkConfig, outcomes: &[ReplicateOutcome]) -> Vec<CellSummary> {
    config
        .cells()
        .into_iter()
        .enumerate()
        .map(|(c, key)| {
            let mut failures = 0;
            let mut first_error = None;
            let mut elapsed = Duration::ZERO;
            let (mut bias, mut abs_error, mut mse, mut corr) = (vec![], vec![], vec![], vec![]);
            for rep in outcomes {
                let (r, t) = &rep[c];
                elapsed += *t;
                match r {
                    Ok(m) => {
                        bias.push(m.bias);
                        abs_error.push(m.bias.abs());
                        mse.push(m.mse);
                        if let Some(nc) = m.noise_corr {
                            corr.push(nc.abs());
                        }
                    }
                    Err(e) => {
                        failures += 1;
                        if first_error.is_none() {
                            first_error = Some(format!("{}: {e}", e.class()));
                        }
                    }
                }
            }
            CellSummary {
                key,
                failures,
                first_error,
                bias: Stat::from_values(&bias),
                abs_error: Stat::from_values(&abs_error),
                mse: Stat::from_values(&mse),
                noise_corr: Stat::from_values(&corr),
                elapsed,
            }
        })
        .collect()
}

/// Per-replicate outcomes for every cell, in replicate order.
pub fn run_outcomes(config: &BenchmarkConfig) -> Result<Vec<ReplicateOutcome>> {
    config.validate()?;
    Ok(crate::par::map(config.replicates, |r| {
        run_replicate(config, r)
    }))
}

/// Runs the whole sweep. Individual cell failures are recorded, not returned.
pub fn run(config: &BenchmarkConfig) -> Result<Vec<CellSummary>> {
    Ok(summarize(config, &run_outcomes(config)?))
}

/// One row of the long-format output table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongRow {
    pub q: usize,
    pub auxiliary: usize,
    pub estimator: String,
    pub residual: String,
    pub metric: String,
    pub mean: f64,
    pub se: f64,
    pub n: usize,
    pub failures: usize,
}

pub fn long_rows(cells: &[CellSummary]) -> Vec<LongRow> {
    let mut rows = Vec::new();
    for cell in cells {
        let metrics = [
            ("bias", cell.bias),
            ("abs_error", cell.abs_error),
            ("mse", cell.mse),
            ("noise_corr", cell.noise_corr),
        ];
        for (name, stat) in metrics {
            if stat.is_none() && name == "noise_corr" {
                continue;
            }
            let s = stat.unwrap_or(Stat {
                mean: f64::NAN,
                se: f64::NAN,
                n: 0,
            });
            rows.push(LongRow {
                q: cell.key.q,
                auxiliary: cell.key.q - 1,
                estimator: cell.key.estimator.name().into(),
                residual: cell.key.residual_kind.map_or("none", |k| k.name()).into(),
                metric: name.into(),
                mean: s.mean,
                se: s.se,
                n: s.n,
                failures: cell.failures,
            });
        }
    }
    rows
}

/// Looks up a cell by its key.
pub fn find(
    cells: &[CellSummary],
    q: usize,
    estimator: Estimator,
    residual_kind: Option<ResidualKind>,
) -> Option<&CellSummary> {
    cells.iter().find(|c| {
        c.key.q == q
            && c.key.estimator == estimator
            && (residual_kind.is_none() || c.key.residual_kind == residual_kind)
    })
}
