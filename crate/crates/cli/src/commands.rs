use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};

use sglm_core::benchmark::{self, transform_response, BenchmarkConfig, Estimator};
use sglm_core::csvpanel::{self, format_number, Table, COVARIATE_PREFIX};
use sglm_core::glm::{fit_glm, Design, FitOptions, GlmFit};
use sglm_core::inference::{sandwich, SandwichCovariance};
use sglm_core::residuals::{self, ResidualKind};
use sglm_core::simulate::{self, CoefficientScheme, Estimate, SimConfig};
use sglm_core::{linalg, sibling, Family, SglmError, SglmOptions};

use crate::config::Settings;

fn read_panel(settings: &Settings) -> Result<Table> {
    let path = settings.input()?;
    let file = File::open(path)
        .map_err(SglmError::from)
        .with_context(|| format!("opening {path}"))?;
    csvpanel::read_table(std::io::BufReader::new(file)).with_context(|| format!("reading {path}"))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path)
        .map_err(SglmError::from)
        .with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn write_csv(settings: &Settings, names: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let path = settings.output()?;
    let mut w = create(path)?;
    for line in settings.header() {
        writeln!(w, "# {line}")?;
    }
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(names)?;
    for r in rows {
        out.write_record(r)?;
    }
    out.flush()?;
    Ok(())
}

fn write_table(settings: &Settings, table: Table) -> Result<()> {
    let path = settings.output()?;
    let table = table.with_comments(settings.header());
    csvpanel::write_table(create(path)?, &table)?;
    Ok(())
}

fn write_summary(settings: &Settings, mut body: Value) -> Result<()> {
    let path = settings.summary_path()?;
    body["settings"] = serde_json::to_value(settings)?;
    let mut w = create(&path)?;
    serde_json::to_writer_pretty(&mut w, &body)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn noise_scheme(settings: &Settings) -> CoefficientScheme {
    match settings.noise_weight {
        Some(value) => CoefficientScheme::Fixed { value },
        None => SimConfig::new(Family::poisson(), 2, 2, 0).noise_scheme,
    }
}

fn fit_options() -> FitOptions {
    FitOptions::default()
}

fn sglm_options(settings: &Settings) -> Result<SglmOptions> {
    Ok(SglmOptions {
        residual_kind: settings.residual_kind()?,
        include_x_in_step3: settings.step3_with_x,
        noise_strategy: settings.noise_strategy()?,
        fit: fit_options(),
    })
}

/// Index of the first `x_` column in a design, if any.
fn x_column(design: &Design) -> Option<usize> {
    design
        .column_names()
        .iter()
        .position(|n| n.starts_with(COVARIATE_PREFIX))
}

fn num(v: f64) -> String {
    format_number(v)
}

pub fn simulate(settings: &Settings) -> Result<()> {
    let config = SimConfig {
        family: settings.family()?,
        m: settings.m,
        q: settings.q,
        sigma_eps: settings.sigma_eps,
        seed: settings.seed,
        noise_scheme: noise_scheme(settings),
        intercept: settings.intercept_choice()?,
        ..SimConfig::new(settings.family()?, settings.m, settings.q, settings.seed)
    };
    let truth = simulate::generate(&config)?;
    write_table(settings, Table::from_truth(&truth)?)?;
    println!("seed = {}", settings.seed);
    Ok(())
}

struct SeriesFit {
    name: String,
    fit: GlmFit,
    cov: SandwichCovariance,
}

fn fit_series(design: &Design, y: &DVector<f64>, family: Family, name: &str) -> Result<SeriesFit> {
    let fit = fit_glm(design, y, family, fit_options())
        .with_context(|| format!("fitting series {name}"))?;
    let cov = sandwich(&fit, design, y).with_context(|| format!("covariance of series {name}"))?;
    Ok(SeriesFit {
        name: name.to_string(),
        fit,
        cov,
    })
}

pub fn fit(settings: &Settings) -> Result<()> {
    let table = read_panel(settings)?;
    table.check_panel_layout()?;
    let family = settings.family()?;
    let design = table.design(settings.intercept()?)?;
    let names = table.response_names();
    let selected: Vec<&String> = match &settings.target {
        Some(t) => vec![names
            .iter()
            .find(|n| *n == t)
            .ok_or_else(|| SglmError::Config(format!("unknown target column '{t}'")))?],
        None => names.iter().collect(),
    };
    let mut rows = Vec::new();
    for name in selected {
        let y = table.column(name).expect("response column exists");
        let s = fit_series(&design, &y, family, name)?;
        let model = s.cov.inverse_fisher()?;
        for (k, term) in design.column_names().iter().enumerate() {
            rows.push(vec![
                s.name.clone(),
                term.clone(),
                num(s.fit.beta[k]),
                num(s.cov.standard_errors[k]),
                num((model[(k, k)].max(0.0) / s.fit.nobs() as f64).sqrt()),
                num(s.fit.loglik),
                s.fit.iterations.to_string(),
                s.fit.converged.to_string(),
            ]);
        }
    }
    write_csv(
        settings,
        &[
            "series",
            "term",
            "estimate",
            "std_error",
            "model_std_error",
            "loglik",
            "iterations",
            "converged",
        ],
        &rows,
    )
}

/// Estimator output in the shared per-observation schema.
struct Denoised {
    noise_hat: DVector<f64>,
    z_hat: DVector<f64>,
    mu_hat: DVector<f64>,
    estimate: Option<Estimate>,
    summary: Value,
}

fn coefficient_json(names: &[String], beta: &DVector<f64>, se: Option<&DVector<f64>>) -> Value {
    let items: Vec<Value> = names
        .iter()
        .enumerate()
        .map(|(k, n)| {
            json!({
                "term": n,
                "estimate": beta[k],
                "std_error": se.map(|s| s[k]),
            })
        })
        .collect();
    Value::Array(items)
}

fn fit_json(fit: &GlmFit) -> Value {
    json!({
        "converged": fit.converged,
        "iterations": fit.iterations,
        "loglik": fit.loglik,
    })
}

fn denoise_glm(panel: &sibling::Panel) -> Result<Denoised> {
    let design = panel.design();
    let y = panel.target();
    let name = &panel.response_names()[panel.target_index()];
    let s = fit_series(design, &y, panel.family(), name)?;
    let z_hat = design.x() * &s.fit.beta;
    Ok(Denoised {
        noise_hat: DVector::zeros(panel.nobs()),
        estimate: x_column(design).map(|c| Estimate::from_glm(&s.fit, design, c)),
        summary: json!({
            "coefficients": coefficient_json(design.column_names(), &s.fit.beta, Some(&s.cov.standard_errors)),
            "fit": fit_json(&s.fit),
        }),
        mu_hat: s.fit.mu,
        z_hat,
    })
}

fn denoise_sglm(panel: &sibling::Panel, options: &SglmOptions) -> Result<Denoised> {
    let r = sibling::sglm_denoise(panel, options).context("running the sibling GLM")?;
    let y = panel.target();
    let cov = sandwich(&r.refit, &r.refit_design, &y)?;
    Ok(Denoised {
        estimate: x_column(panel.design()).map(|c| Estimate::from_sglm(&r, c)),
        summary: json!({
            "coefficients": coefficient_json(r.refit_design.column_names(), &r.refit.beta, Some(&cov.standard_errors)),
            "fit": fit_json(&r.refit),
            "base_fit": fit_json(&r.base_fit),
            "diagnostics": r.diagnostics,
        }),
        noise_hat: r.noise_hat,
        z_hat: r.z_hat,
        mu_hat: r.refit.mu,
    })
}

fn denoise_linear(panel: &sibling::Panel, estimator: Estimator) -> Result<Denoised> {
    let family = panel.family();
    let t = panel.responses().map(|v| transform_response(family, v));
    let y1 = t.column(panel.target_index()).into_owned();
    let aux: DMatrix<f64> = t.select_columns(&panel.auxiliary());
    let design = panel.design();
    let z_hat = match estimator {
        Estimator::HalfSibling => sibling::half_sibling(&y1, &aux)?,
        _ => sibling::three_quarter_sibling(design.x(), &y1, &aux)?,
    };
    // what the estimator removed from the transformed target
    let noise_hat = &y1 - &z_hat;
    let mu_hat = z_hat.map(|z| {
        if family.in_domain(z) {
            family.mean(z).unwrap_or(f64::NAN)
        } else {
            f64::NAN
        }
    });
    let estimate = match x_column(design) {
        Some(c) => Some(Estimate::from_series(
            z_hat.clone(),
            design,
            c,
            Some(noise_hat.clone()),
        )?),
        None => None,
    };
    Ok(Denoised {
        noise_hat,
        z_hat,
        mu_hat,
        estimate,
        summary: json!({ "coefficients": null, "fit": null }),
    })
}

pub fn denoise(settings: &Settings) -> Result<()> {
    let table = read_panel(settings)?;
    let family = settings.family()?;
    let panel = table.panel(family, settings.target.as_deref(), settings.intercept()?)?;
    let estimator = settings.estimator()?;
    let out = match estimator {
        Estimator::Glm => denoise_glm(&panel)?,
        Estimator::Sglm => denoise_sglm(&panel, &sglm_options(settings)?)?,
        Estimator::HalfSibling | Estimator::ThreeQuarter => denoise_linear(&panel, estimator)?,
    };

    let m = panel.nobs();
    let mut data = DMatrix::zeros(m, 4);
    for i in 0..m {
        data[(i, 0)] = (i + 1) as f64;
        data[(i, 1)] = out.noise_hat[i];
        data[(i, 2)] = out.z_hat[i];
        data[(i, 3)] = out.mu_hat[i];
    }
    let names = ["observation", "noise_hat", "z_hat", "mu_hat"]
        .map(String::from)
        .to_vec();
    write_table(settings, Table::new(names, data)?)?;

    let target = &panel.response_names()[panel.target_index()];
    let mut summary = out.summary;
    summary["estimator"] = json!(estimator.name());
    summary["target"] = json!(target);
    if let (Some(truth), Some(est)) = (table.series_truth(target), &out.estimate) {
        let signal = truth.z.add_scalar(truth.offset);
        summary["metrics"] =
            serde_json::to_value(simulate::score(&signal, truth.w_x, &truth.noise, est)?)?;
    }
    write_summary(settings, summary)
}

pub fn residuals(settings: &Settings) -> Result<()> {
    let table = read_panel(settings)?;
    table.check_panel_layout()?;
    let family = settings.family()?;
    let design = table.design(settings.intercept()?)?;
    let proxy = match &settings.proxy_column {
        Some(name) => Some((
            name.clone(),
            table
                .column(name)
                .ok_or_else(|| SglmError::Config(format!("unknown proxy column '{name}'")))?,
        )),
        None => None,
    };

    let mut names = Vec::new();
    let mut cols = Vec::new();
    let mut corr = serde_json::Map::new();
    for series in table.response_names() {
        let y = table.column(&series).expect("response column exists");
        let fit = fit_glm(&design, &y, family, fit_options())
            .with_context(|| format!("fitting series {series}"))?;
        let mut per_kind = serde_json::Map::new();
        for kind in ResidualKind::ALL {
            // an exactly fitted saturated point reports 0 rather than failing the file
            let r = match kind {
                ResidualKind::Student => residuals::studentized_saturated_zero(&fit, &design, &y),
                _ => residuals::compute(kind, &fit, &design, &y),
            }
            .with_context(|| format!("{} residuals of {series}", kind.name()))?;
            if let Some((_, p)) = &proxy {
                per_kind.insert(kind.name().into(), json!(linalg::correlation(&r.values, p)));
            }
            names.push(format!("{}_{series}", kind.name()));
            cols.push(r.values);
        }
        if proxy.is_some() {
            corr.insert(series, Value::Object(per_kind));
        }
    }
    write_table(settings, Table::new(names, DMatrix::from_columns(&cols))?)?;
    if let Some((name, _)) = proxy {
        write_summary(
            settings,
            json!({ "proxy_column": name, "correlations": corr }),
        )?;
    }
    Ok(())
}

pub fn benchmark(settings: &Settings) -> Result<()> {
    let family = settings.family()?;
    let base = SimConfig::new(family, settings.m, 2, settings.seed);
    let config = BenchmarkConfig {
        m: settings.m,
        sigma_eps: settings.sigma_eps,
        estimators: settings.estimators()?,
        residual_kinds: settings.residual_kinds()?,
        noise_strategy: settings.noise_strategy()?,
        include_x_in_step3: settings.step3_with_x,
        coefficient_scheme: base.coefficient_scheme,
        noise_scheme: noise_scheme(settings),
        intercept: settings.intercept_choice()?,
        ..BenchmarkConfig::new(
            family,
            settings.q_grid.clone(),
            settings.replicates,
            settings.seed,
        )
    };
    config.validate()?;

    let start = Instant::now();
    let cells = run_with_jobs(&config, settings.jobs)?;
    for c in &cells {
        let key = &c.key;
        eprintln!(
            "q={:<3} {:<14} {:<9} {:>9.3}s{}",
            key.q,
            key.estimator.name(),
            key.residual_kind.map_or("-", |k| k.name()),
            c.elapsed.as_secs_f64(),
            match &c.first_error {
                Some(e) => format!("  {} failed, first: {e}", c.failures),
                None => String::new(),
            }
        );
    }
    eprintln!("total {:.3}s", start.elapsed().as_secs_f64());

    let rows: Vec<Vec<String>> = benchmark::long_rows(&cells)
        .into_iter()
        .map(|r| {
            vec![
                r.q.to_string(),
                r.auxiliary.to_string(),
                r.estimator,
                r.residual,
                r.metric,
                num(r.mean),
                num(r.se),
                r.n.to_string(),
                r.failures.to_string(),
            ]
        })
        .collect();
    write_csv(
        settings,
        &[
            "q",
            "auxiliary",
            "estimator",
            "residual",
            "metric",
            "mean",
            "se",
            "n",
            "failures",
        ],
        &rows,
    )
}

#[cfg(feature = "parallel")]
fn run_with_jobs(
    config: &BenchmarkConfig,
    jobs: Option<usize>,
) -> Result<Vec<benchmark::CellSummary>> {
    match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build()?;
            Ok(pool.install(|| benchmark::run(config))?)
        }
        None => Ok(benchmark::run(config)?),
    }
}

#[cfg(not(feature = "parallel"))]
fn run_with_jobs(
    config: &BenchmarkConfig,
    _jobs: Option<usize>,
) -> Result<Vec<benchmark::CellSummary>> {
    Ok(benchmark::run(config)?)
}

/// Error class for the one-line failure report.
pub fn error_class(e: &anyhow::Error) -> &'static str {
    for cause in e.chain() {
        if let Some(s) = cause.downcast_ref::<SglmError>() {
            return s.class();
        }
        if cause.downcast_ref::<std::io::Error>().is_some()
            || cause.downcast_ref::<csv::Error>().is_some()
        {
            return "io";
        }
        if cause.downcast_ref::<serde_json::Error>().is_some() {
            return "io";
        }
    }
    "internal"
}
