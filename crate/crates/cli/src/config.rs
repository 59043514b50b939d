use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::Args;
use uqbench_core::harness::RegressionMethod;
use uqbench_core::methods::{Aggregator, Method};

/// Problem with the command line or config file; exits with status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// Options shared by `sweep` and `toy`. Every field is optional so that
/// flags can be layered over a config file.
#[derive(Debug, Clone, Default, PartialEq, Args)]
pub struct RunArgs {
    /// Dataset name: two_moons, mnist, fashion_mnist, cifar10 or any IDX directory under --data-dir
    #[arg(long)]
    pub dataset: Option<String>,
    /// Out-of-distribution dataset name
    #[arg(long)]
    pub ood_dataset: Option<String>,
    /// Directory holding one sub-directory per dataset
    #[arg(long)]
    pub data_dir: Option<PathBuf>,
    /// Comma-separated method names, or "all"
    #[arg(long)]
    pub method: Option<String>,
    /// Comma-separated gradient aggregators (l1_norm, l2_norm, mean, std, min, max), or "all"
    #[arg(long)]
    pub aggregator: Option<String>,
    /// Comma-separated samples per class (sample counts for the regression toy)
    #[arg(long)]
    pub spc: Option<String>,
    /// Trials per SPC value
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Monte-Carlo forward passes for stochastic methods
    #[arg(long)]
    pub mc_samples: Option<usize>,
    #[arg(long)]
    pub ensemble_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Points per axis of the Two Moons grid, or points of the regression grid
    #[arg(long)]
    pub grid_resolution: Option<usize>,
    /// Flat key=value file; flags take precedence over its entries
    #[arg(long)]
    pub config: Option<PathBuf>,
}

const KEYS: [&str; 14] = [
    "dataset",
    "ood-dataset",
    "data-dir",
    "method",
    "aggregator",
    "spc",
    "trials",
    "epochs",
    "batch-size",
    "mc-samples",
    "ensemble-size",
    "seed",
    "out-dir",
    "grid-resolution",
];

fn parse_num<T: FromStr>(key: &str, v: &str) -> anyhow::Result<T> {
    v.trim().parse().map_err(|_| usage(format!("{key}: cannot parse '{v}'")))
}

impl RunArgs {
    /// Parses a config file. Blank lines, `#` comments and keys under
    /// `run.` (written by manifests) are skipped; unknown keys are errors.
    pub fn parse_config(text: &str) -> anyhow::Result<Self> {
        let mut out = RunArgs::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| usage(format!("config line {}: expected key=value", lineno + 1)))?;
            let key = k.trim().replace('_', "-");
            let v = v.trim();
            if key.starts_with("run.") {
                continue;
            }
            match key.as_str() {
                "dataset" => out.dataset = Some(v.into()),
                "ood-dataset" => out.ood_dataset = Some(v.into()),
                "data-dir" => out.data_dir = Some(v.into()),
                "method" => out.method = Some(v.into()),
                "aggregator" => out.aggregator = Some(v.into()),
                "spc" => out.spc = Some(v.into()),
                "trials" => out.trials = Some(parse_num(&key, v)?),
                "epochs" => out.epochs = Some(parse_num(&key, v)?),
                "batch-size" => out.batch_size = Some(parse_num(&key, v)?),
                "mc-samples" => out.mc_samples = Some(parse_num(&key, v)?),
                "ensemble-size" => out.ensemble_size = Some(parse_num(&key, v)?),
                "seed" => out.seed = Some(parse_num(&key, v)?),
                "out-dir" => out.out_dir = Some(v.into()),
                "grid-resolution" => out.grid_resolution = Some(parse_num(&key, v)?),
                _ => return Err(usage(format!("config line {}: unknown key '{}'", lineno + 1, k.trim()))),
            }
        }
        Ok(out)
    }

    pub fn load_config(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_config(&text)
    }

    /// Fills every unset field from `base`.
    pub fn or(self, base: RunArgs) -> RunArgs {
        RunArgs {
            dataset: self.dataset.or(base.dataset),
            ood_dataset: self.ood_dataset.or(base.ood_dataset),
            data_dir: self.data_dir.or(base.data_dir),
            method: self.method.or(base.method),
            aggregator: self.aggregator.or(base.aggregator),
            spc: self.spc.or(base.spc),
            trials: self.trials.or(base.trials),
            epochs: self.epochs.or(base.epochs),
            batch_size: self.batch_size.or(base.batch_size),
            mc_samples: self.mc_samples.or(base.mc_samples),
            ensemble_size: self.ensemble_size.or(base.ensemble_size),
            seed: self.seed.or(base.seed),
            out_dir: self.out_dir.or(base.out_dir),
            grid_resolution: self.grid_resolution.or(base.grid_resolution),
            config: None,
        }
    }

    /// Flags over the `--config` file.
    pub fn resolve_file(self) -> anyhow::Result<RunArgs> {
        match &self.config {
            Some(path) => {
                let file = Self::load_config(path)?;
                Ok(self.or(file))
            }
            None => Ok(self),
        }
    }

    /// The set fields as config lines, in a fixed order.
    pub fn to_config(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let v = match key {
                "dataset" => self.dataset.clone(),
                "ood-dataset" => self.ood_dataset.clone(),
                "data-dir" => self.data_dir.as_ref().map(|p| p.display().to_string()),
                "method" => self.method.clone(),
                "aggregator" => self.aggregator.clone(),
                "spc" => self.spc.clone(),
                "trials" => self.trials.map(|v| v.to_string()),
                "epochs" => self.epochs.map(|v| v.to_string()),
                "batch-size" => self.batch_size.map(|v| v.to_string()),
                "mc-samples" => self.mc_samples.map(|v| v.to_string()),
                "ensemble-size" => self.ensemble_size.map(|v| v.to_string()),
                "seed" => self.seed.map(|v| v.to_string()),
                "out-dir" => self.out_dir.as_ref().map(|p| p.display().to_string()),
                "grid-resolution" => self.grid_resolution.map(|v| v.to_string()),
                _ => unreachable!(),
            };
            if let Some(v) = v {
                out.push_str(&format!("{key}={v}\n"));
            }
        }
        out
    }
}

pub fn parse_list<T: FromStr>(key: &str, s: &str) -> anyhow::Result<Vec<T>> {
    let items: Vec<&str> = s.split(',').map(str::trim).filter(|t| !t.is_empty()).collect();
    if items.is_empty() {
        return Err(usage(format!("--{key}: empty list")));
    }
    items
        .into_iter()
        .map(|t| t.parse().map_err(|_| usage(format!("--{key}: invalid value '{t}'"))))
        .collect()
}

pub fn parse_methods(s: &str) -> anyhow::Result<Vec<Method>> {
    if s.trim() == "all" {
        return Ok(Method::ALL.to_vec());
    }
    parse_list("method", s)
}

pub fn parse_regression_methods(s: &str) -> anyhow::Result<Vec<RegressionMethod>> {
    if s.trim() == "all" {
        return Ok(RegressionMethod::ALL.to_vec());
    }
    parse_list("method", s)
}

pub fn parse_aggregators(s: &str) -> anyhow::Result<Vec<Aggregator>> {
    if s.trim() == "all" {
        return Ok(Aggregator::ALL.to_vec());
    }
    parse_list("aggregator", s)
}
