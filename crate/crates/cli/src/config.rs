//! Settings resolution: command-line flags override the optional TOML config
//! file, which overrides built-in defaults.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{ArgAction, Args};
use serde::{Deserialize, Serialize};

use sglm_core::benchmark::Estimator;
use sglm_core::expfam::{Family, FamilyKind};
use sglm_core::residuals::ResidualKind;
use sglm_core::sibling::NoiseStrategy;
use sglm_core::SglmError;

/// Flags shared by every subcommand. All are optional so that unset flags
/// fall through to the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// TOML file with default settings (flags take precedence)
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Response family: poisson, gamma, bernoulli or gaussian
    #[arg(long)]
    pub family: Option<String>,

    /// Gamma shape or Gaussian variance
    #[arg(long)]
    pub dispersion: Option<f64>,

    /// Estimator: glm, half_sibling, three_quarter or sglm (comma-separated for benchmark)
    #[arg(long)]
    pub estimator: Option<String>,

    /// Residual kind: fisher, raw, student or deviance (comma-separated or `all` for benchmark)
    #[arg(long)]
    pub residual: Option<String>,

    /// Number of observations
    #[arg(long)]
    pub m: Option<usize>,

    /// Number of series, target included
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    pub q: Option<u64>,

    /// Comma-separated series counts for benchmark sweeps
    #[arg(long, value_name = "LIST")]
    pub q_grid: Option<String>,

    /// Monte-Carlo replicates per benchmark cell
    #[arg(long)]
    pub replicates: Option<usize>,

    /// Root seed; every random draw derives from it
    #[arg(long)]
    pub seed: Option<u64>,

    /// Worker threads for benchmark replicates
    #[arg(long)]
    pub jobs: Option<usize>,

    /// Condition the residual regression on the covariates as well
    #[arg(long, action = ArgAction::SetTrue)]
    pub step3_with_x: bool,

    /// How the noise proxy is built: regression or mean_of_residuals
    #[arg(long)]
    pub noise_strategy: Option<String>,

    /// Standard deviation of the per-series natural-parameter jitter
    #[arg(long)]
    pub sigma_eps: Option<f64>,

    /// Fix every series' noise loading instead of drawing it from U[-1, 1]
    #[arg(long, allow_hyphen_values = true)]
    pub noise_weight: Option<f64>,

    /// Intercept column in fitted designs: auto, true or false
    #[arg(long)]
    pub intercept: Option<String>,

    /// Target response column (default: the first y_ column)
    #[arg(long)]
    pub target: Option<String>,

    /// Panel CSV to read
    #[arg(long, value_name = "PATH")]
    pub input: Option<PathBuf>,

    /// CSV file to write
    #[arg(long, value_name = "PATH")]
    pub output: Option<PathBuf>,

    /// Summary file (default: the output path with a .summary.json extension)
    #[arg(long, value_name = "PATH")]
    pub summary: Option<PathBuf>,

    /// Column to correlate residuals with
    #[arg(long)]
    pub proxy_column: Option<String>,
}

/// Contents of a `--config` file; every key is optional.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub family: Option<String>,
    pub dispersion: Option<f64>,
    pub estimator: Option<String>,
    pub residual: Option<String>,
    pub m: Option<usize>,
    pub q: Option<usize>,
    pub q_grid: Option<Vec<usize>>,
    pub replicates: Option<usize>,
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub step3_with_x: Option<bool>,
    pub noise_strategy: Option<String>,
    pub sigma_eps: Option<f64>,
    pub noise_weight: Option<f64>,
    pub intercept: Option<String>,
    pub target: Option<String>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    pub proxy_column: Option<String>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text)
            .map_err(|e| SglmError::Config(format!("{}: {}", path.display(), e.message())).into())
    }
}

/// Fully resolved settings. Serialized into output headers, so it holds no
/// output paths.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub command: String,
    pub family: String,
    pub dispersion: f64,
    pub estimator: String,
    pub residual: String,
    pub m: usize,
    pub q: usize,
    pub q_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub step3_with_x: bool,
    pub noise_strategy: String,
    pub sigma_eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_weight: Option<f64>,
    pub intercept: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub proxy_column: Option<String>,
    #[serde(skip)]
    pub jobs: Option<usize>,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    #[serde(skip)]
    pub summary: Option<PathBuf>,
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

fn parse_list(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|v| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| SglmError::Config(format!("'{v}' in q grid is not a count")).into())
        })
        .collect()
}

impl Settings {
    pub fn resolve(command: &str, flags: &Flags) -> Result<Self> {
        let file = match &flags.config {
            Some(p) => FileConfig::load(p)?,
            None => FileConfig::default(),
        };
        let f = flags.clone();
        let family = pick(f.family, file.family, "poisson".into()).to_ascii_lowercase();
        let kind: FamilyKind = family.parse()?;
        let default_dispersion = if kind == FamilyKind::Gamma { 2.0 } else { 1.0 };
        let default_estimator = if command == "benchmark" {
            "glm,sglm"
        } else {
            "sglm"
        };
        let q_grid = match f.q_grid {
            Some(s) => parse_list(&s)?,
            None => file.q_grid.unwrap_or_else(|| vec![2, 6, 11, 21]),
        };
        let settings = Settings {
            command: command.into(),
            family: kind.name().into(),
            dispersion: pick(f.dispersion, file.dispersion, default_dispersion),
            estimator: pick(f.estimator, file.estimator, default_estimator.into()),
            residual: pick(f.residual, file.residual, "fisher".into()),
            m: pick(f.m, file.m, 120),
            q: pick(f.q.map(|q| q as usize), file.q, 20),
            q_grid,
            replicates: pick(f.replicates, file.replicates, 200),
            seed: pick(f.seed, file.seed, 0),
            step3_with_x: f.step3_with_x || file.step3_with_x.unwrap_or(false),
            noise_strategy: pick(f.noise_strategy, file.noise_strategy, "regression".into()),
            sigma_eps: pick(f.sigma_eps, file.sigma_eps, 0.1),
            noise_weight: f.noise_weight.or(file.noise_weight),
            intercept: pick(f.intercept, file.intercept, "auto".into()).to_ascii_lowercase(),
            target: f.target.or(file.target),
            input: f.input.or(file.input).map(|p| p.display().to_string()),
            proxy_column: f.proxy_column.or(file.proxy_column),
            jobs: f.jobs.or(file.jobs),
            output: f.output.or(file.output),
            summary: f.summary.or(file.summary),
        };
        settings.validate()?;
        Ok(settings)
    }

    fn validate(&self) -> Result<()> {
        self.family()?;
        self.noise_strategy()?;
        self.intercept_choice()?;
        if self.command == "benchmark" {
            self.estimators()?;
            self.residual_kinds()?;
            if self.q_grid.is_empty() || self.q_grid.iter().any(|&q| q < 2) {
                bail!(SglmError::Config(format!(
                    "q grid {:?}: every entry must be at least 2 (one target plus auxiliaries)",
                    self.q_grid
                )));
            }
        } else {
            self.estimator()?;
            self.residual_kind()?;
        }
        if self.q < 2 {
            bail!(SglmError::Config(format!(
                "q must be at least 2, got {}",
                self.q
            )));
        }
        if self.jobs == Some(0) {
            bail!(SglmError::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn family(&self) -> Result<Family> {
        Ok(Family::new(self.family.parse()?, self.dispersion)?)
    }

    pub fn estimator(&self) -> Result<Estimator> {
        Ok(self.estimator.parse()?)
    }

    pub fn estimators(&self) -> Result<Vec<Estimator>> {
        self.estimator
            .split(',')
            .map(|s| s.trim().parse::<Estimator>().map_err(Into::into))
            .collect()
    }

    pub fn residual_kind(&self) -> Result<ResidualKind> {
        Ok(self.residual.parse()?)
    }

    pub fn residual_kinds(&self) -> Result<Vec<ResidualKind>> {
        if self.residual.eq_ignore_ascii_case("all") {
            return Ok(ResidualKind::ALL.to_vec());
        }
        self.residual
            .split(',')
            .map(|s| s.trim().parse::<ResidualKind>().map_err(Into::into))
            .collect()
    }

    pub fn noise_strategy(&self) -> Result<NoiseStrategy> {
        Ok(self.noise_strategy.parse()?)
    }

    /// `None` means the family default.
    pub fn intercept_choice(&self) -> Result<Option<bool>> {
        match self.intercept.as_str() {
            "auto" => Ok(None),
            "true" | "yes" => Ok(Some(true)),
            "false" | "no" => Ok(Some(false)),
            other => bail!(SglmError::Config(format!(
                "intercept must be auto, true or false, got '{other}'"
            ))),
        }
    }

    /// Intercept rule for fitted designs; matches the simulator's default.
    pub fn intercept(&self) -> Result<bool> {
        Ok(self
            .intercept_choice()?
            .unwrap_or(self.family()?.kind() == FamilyKind::Gamma))
    }

    pub fn input(&self) -> Result<&str> {
        self.input
            .as_deref()
            .ok_or_else(|| SglmError::Config(format!("{} needs --input", self.command)).into())
    }

    pub fn output(&self) -> Result<&Path> {
        self.output
            .as_deref()
            .ok_or_else(|| SglmError::Config(format!("{} needs --output", self.command)).into())
    }

    pub fn summary_path(&self) -> Result<PathBuf> {
        match &self.summary {
            Some(p) => Ok(p.clone()),
            None => Ok(self.output()?.with_extension("summary.json")),
        }
    }

    /// Header comment lines echoing these settings.
    pub fn header(&self) -> Vec<String> {
        let body = toml::to_string(self).expect("settings serialize");
        let mut lines = vec![format!("sglm {}", env!("CARGO_PKG_VERSION"))];
        lines.extend(body.lines().map(str::to_string));
        lines
    }
}
