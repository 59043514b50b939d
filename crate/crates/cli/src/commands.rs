use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use clap::ValueEnum;
use uqbench_core::harness::{
    csv_file_name, run_regression_toy, run_sweep, run_two_moons_toy, write_atomic, write_csv, write_manifest, SweepData,
    SweepPlan, ToyConfig,
};
use uqbench_core::methods::{Aggregator, Method, MethodConfig};
use uqbench_core::nn::{standard_suite, TrainConfig};

use crate::config::{parse_aggregators, parse_list, parse_methods, parse_regression_methods, RunArgs, UsageError};

const TWO_MOONS_SPC: &str = "1,5,10,50,100";
const IMAGE_SPC: &str = "1,5,10,50,100,250,500,1000,5000";
const TWO_MOONS_EPOCHS: usize = 500;
const IMAGE_EPOCHS: usize = 100;
const GRADCHECK_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ToyMode {
    TwoMoons,
    Regression,
}

/// Removes files registered so far unless disarmed.
struct Cleanup(Vec<PathBuf>);

impl Cleanup {
    fn disarm(mut self) {
        self.0.clear();
    }
}

impl Drop for Cleanup {
    fn drop(&mut self) {
        for p in &self.0 {
            let _ = fs::remove_file(p);
        }
    }
}

fn method_jobs(methods: &[Method], aggregators: &[Aggregator]) -> Vec<(Method, Option<Aggregator>)> {
    let mut jobs = Vec::new();
    for &m in methods {
        if m == Method::Gradient {
            jobs.extend(aggregators.iter().map(|&a| (m, Some(a))));
        } else {
            jobs.push((m, None));
        }
    }
    jobs
}

fn method_config(method: Method, aggregator: Option<Aggregator>, a: &RunArgs) -> MethodConfig {
    let mut cfg = MethodConfig::new(method);
    cfg.mc_samples = a.mc_samples.unwrap_or(cfg.mc_samples);
    cfg.ensemble_size = a.ensemble_size.unwrap_or(cfg.ensemble_size);
    if let Some(agg) = aggregator {
        cfg.aggregator = agg;
    }
    cfg
}

/// Fills in every default for a sweep so the manifest records the full configuration.
pub fn resolve_sweep(args: RunArgs) -> anyhow::Result<RunArgs> {
    let a = args.resolve_file()?;
    let dataset = a.dataset.clone().ok_or_else(|| UsageError("--dataset is required".into()))?;
    let two_moons = dataset == "two_moons";
    let defaults = RunArgs {
        dataset: Some(dataset),
        ood_dataset: two_moons.then(|| "uniform_box".to_string()),
        data_dir: Some("data".into()),
        method: Some("all".into()),
        aggregator: Some(Aggregator::L2.name().into()),
        spc: Some(if two_moons { TWO_MOONS_SPC } else { IMAGE_SPC }.into()),
        trials: Some(5),
        epochs: Some(if two_moons { TWO_MOONS_EPOCHS } else { IMAGE_EPOCHS }),
        batch_size: Some(64),
        mc_samples: Some(50),
        ensemble_size: Some(5),
        seed: Some(0),
        out_dir: Some("results".into()),
        grid_resolution: None,
        config: None,
    };
    Ok(a.or(defaults))
}

pub fn sweep(args: RunArgs) -> anyhow::Result<()> {
    let a = resolve_sweep(args)?;
    let dataset = a.dataset.clone().unwrap_or_default();
    let methods = parse_methods(a.method.as_deref().unwrap_or("all"))?;
    let aggregators = parse_aggregators(a.aggregator.as_deref().unwrap_or("l2_norm"))?;
    let plan = SweepPlan {
        spc_values: parse_list("spc", a.spc.as_deref().unwrap_or(TWO_MOONS_SPC))?,
        trials: a.trials.unwrap_or(5),
        base_seed: a.seed.unwrap_or(0),
    };
    plan.validate().map_err(|e| UsageError(e.to_string()))?;
    let train_cfg = TrainConfig {
        epochs: a.epochs.unwrap_or(TWO_MOONS_EPOCHS),
        batch_size: a.batch_size.unwrap_or(64),
        ..TrainConfig::default()
    };
    if train_cfg.epochs == 0 || train_cfg.batch_size == 0 {
        return Err(UsageError("--epochs and --batch-size must be positive".into()).into());
    }
    let jobs = method_jobs(&methods, &aggregators);
    for &(m, agg) in &jobs {
        method_config(m, agg, &a).validate().map_err(|e| UsageError(e.to_string()))?;
    }

    let data_dir = a.data_dir.clone().unwrap_or_else(|| "data".into());
    let data = SweepData::load(&dataset, a.ood_dataset.as_deref(), &data_dir, plan.base_seed)
        .with_context(|| format!("loading {dataset}"))?;
    let spec = data.default_spec();
    let out_dir = a.out_dir.clone().unwrap_or_else(|| "results".into());
    fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let config_echo = a.to_config();
    let mut written = Cleanup(Vec::new());
    for (method, agg) in jobs {
        let cfg = method_config(method, agg, &a);
        let label = match agg {
            Some(x) => format!("{}-{}", method.name(), x.name()),
            None => method.name().to_string(),
        };
        let started = Instant::now();
        let rows = run_sweep(&cfg, &spec, &train_cfg, &data, &plan, |spc, trial, r| {
            eprintln!("{label} spc={spc} trial={trial} acc={:.4}", r.acc);
        })?;
        let kind = if method.has_entropy() { "entropy" } else { "maxprob" };
        let name = csv_file_name(kind, &data.name, method.name(), agg.map(|x| x.name()));
        let csv_path = out_dir.join(&name);
        written.0.push(csv_path.clone());
        write_csv(&rows, &csv_path)?;

        let mut entries: Vec<(String, String)> = config_echo
            .lines()
            .filter_map(|l| l.split_once('='))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect();
        entries.push(("run.csv".into(), name.clone()));
        entries.push(("run.method".into(), label.clone()));
        for &spc in &plan.spc_values {
            for trial in 0..plan.trials {
                entries.push((format!("run.trial_seed.spc{spc}.trial{trial}"), plan.trial_seed(spc, trial).to_string()));
            }
        }
        entries.push(("run.wall_time_secs".into(), format!("{:.3}", started.elapsed().as_secs_f64())));
        let manifest = out_dir.join(format!("{}.manifest", name.trim_end_matches(".csv")));
        written.0.push(manifest.clone());
        write_manifest(&manifest, &entries)?;
        println!("{}", csv_path.display());
    }
    written.disarm();
    Ok(())
}

/// Returns whether every check passed.
pub fn gradcheck(seed: u64, inject_fault: bool) -> anyhow::Result<bool> {
    let started = Instant::now();
    let entries = standard_suite(seed, inject_fault)?;
    let mut worst: f64 = 0.0;
    for e in &entries {
        let err = e.report.max_relative_error;
        worst = worst.max(err);
        let verdict = if err < GRADCHECK_TOLERANCE { "ok" } else { "FAIL" };
        println!("{:<5} {:<14} max_rel_err={:.3e} {verdict}", e.group, e.name, err);
    }
    println!("worst relative error {worst:.3e} (tolerance {GRADCHECK_TOLERANCE:.0e})");
    eprintln!("gradcheck finished in {:.2}s", started.elapsed().as_secs_f64());
    Ok(entries.iter().all(|e| e.report.max_relative_error < GRADCHECK_TOLERANCE))
}

fn write_rows(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> anyhow::Result<()> {
    let mut text = String::from(header);
    text.push('\n');
    for r in rows {
        text.push_str(&r);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn toy(mode: ToyMode, args: RunArgs) -> anyhow::Result<()> {
    let a = args.resolve_file()?;
    let seed = a.seed.unwrap_or(0);
    let out_dir = a.out_dir.clone().unwrap_or_else(|| "results".into());
    let mut written = Cleanup(Vec::new());
    match mode {
        ToyMode::TwoMoons => {
            let methods = parse_methods(a.method.as_deref().unwrap_or("all"))?;
            let aggregators = parse_aggregators(a.aggregator.as_deref().unwrap_or("l2_norm"))?;
            let spcs: Vec<usize> = parse_list("spc", a.spc.as_deref().unwrap_or(TWO_MOONS_SPC))?;
            let resolution = a.grid_resolution.unwrap_or(100);
            if resolution < 2 || spcs.contains(&0) {
                return Err(UsageError("--grid-resolution must be at least 2 and SPC values positive".into()).into());
            }
            let train_cfg = TrainConfig {
                epochs: a.epochs.unwrap_or(TWO_MOONS_EPOCHS),
                batch_size: a.batch_size.unwrap_or(64),
                ..TrainConfig::default()
            };
            let jobs = method_jobs(&methods, &aggregators);
            for &(m, agg) in &jobs {
                method_config(m, agg, &a).validate().map_err(|e| UsageError(e.to_string()))?;
            }
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for (method, agg) in jobs {
                let cfg = method_config(method, agg, &a);
                let label = match agg {
                    Some(x) => format!("{}-{}", method.name(), x.name()),
                    None => method.name().to_string(),
                };
                for &spc in &spcs {
                    let grid = run_two_moons_toy(&cfg, spc, &train_cfg, resolution, seed)?;
                    let path = out_dir.join(format!("two-moons-grid-{label}-spc{spc}.csv"));
                    written.0.push(path.clone());
                    write_rows(&path, "x;y;confidence", grid.iter().map(|p| format!("{};{};{}", p.x, p.y, p.confidence)))?;
                    println!("{}", path.display());
                }
            }
        }
        ToyMode::Regression => {
            let methods = parse_regression_methods(a.method.as_deref().unwrap_or("all"))?;
            let ns: Vec<usize> = parse_list("spc", a.spc.as_deref().unwrap_or("20,200"))?;
            let defaults = ToyConfig::default();
            let cfg = ToyConfig {
                epochs: a.epochs.unwrap_or(defaults.epochs),
                batch_size: a.batch_size.unwrap_or(defaults.batch_size),
                mc_samples: a.mc_samples.unwrap_or(defaults.mc_samples),
                ensemble_size: a.ensemble_size.unwrap_or(defaults.ensemble_size),
                grid_points: a.grid_resolution.unwrap_or(defaults.grid_points),
                seed,
                ..defaults
            };
            if ns.iter().any(|&n| n < 2) || cfg.grid_points == 0 {
                return Err(UsageError("regression needs at least two samples and one grid point".into()).into());
            }
            fs::create_dir_all(&out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
            for method in methods {
                for &n in &ns {
                    let c = run_regression_toy(method, n, &cfg)?;
                    let path = out_dir.join(format!("regression-{}-n{n}.csv", method.name()));
                    written.0.push(path.clone());
                    let rows = (0..c.x.len()).map(|i| {
                        let ale = c.aleatoric_var.as_ref().map(|v| v[i].sqrt());
                        let epi = c.epistemic_std.as_ref().map(|v| v[i]);
                        format!("{};{};{};{}", c.x[i], c.mean[i], opt(ale), opt(epi))
                    });
                    write_rows(&path, "x;mean;sigma_aleatoric;sigma_epistemic", rows)?;
                    println!("{}", path.display());
                }
            }
        }
    }
    written.disarm();
    Ok(())
}
