use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use uqbench_core::harness::parse_csv;
use uqbench_core::nn::LayerKind;

fn uqbench(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uqbench"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

const QUICK: [&str; 6] = ["--epochs", "10", "--mc-samples", "3", "--ensemble-size", "2"];

#[test]
fn sweep_writes_one_row_per_spc() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--dataset", "two_moons", "--method", "baseline", "--spc", "1,5,10", "--trials", "2"];
    args.extend(QUICK);
    let o = uqbench(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("results/entropy-vs-SPC-two_moons-baseline-combined.csv");
    let rows = parse_csv(&fs::read_to_string(csv).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.spc).collect::<Vec<_>>(), vec![1, 5, 10]);
    assert!(dir.path().join("results/entropy-vs-SPC-two_moons-baseline-combined.manifest").exists());
}

#[test]
fn gradient_sweep_names_the_aggregator() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "--dataset", "two_moons", "--method", "gradient", "--aggregator", "l1_norm,max"];
    args.extend(["--spc", "2", "--trials", "1", "--out-dir", "o"]);
    args.extend(QUICK);
    let o = uqbench(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let mut names: Vec<String> =
        fs::read_dir(dir.path().join("o")).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(
        names,
        [
            "maxprob-vs-SPC-two_moons-gradient-l1_norm-combined.csv",
            "maxprob-vs-SPC-two_moons-gradient-l1_norm-combined.manifest",
            "maxprob-vs-SPC-two_moons-gradient-max-combined.csv",
            "maxprob-vs-SPC-two_moons-gradient-max-combined.manifest",
        ]
    );
}

#[test]
fn usage_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["sweep", "--dataset", "two_moons", "--method", "nonsense"],
        vec!["sweep", "--dataset", "two_moons", "--no-such-flag"],
        vec!["sweep", "--method", "baseline"],
        vec!["sweep", "--dataset", "two_moons", "--spc", "5,1"],
        vec!["toy", "regression", "--method", "baseline"],
        vec!["frobnicate"],
    ] {
        let o = uqbench(&args, dir.path());
        assert_eq!(o.status.code(), Some(2), "{args:?}");
    }
    assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn missing_data_is_a_runtime_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = uqbench(&["sweep", "--dataset", "fashion_mnist", "--data-dir", "absent", "--method", "baseline"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("train-images-idx3-ubyte"));
}

#[test]
fn failed_sweep_leaves_no_outputs() {
    let dir = tempfile::tempdir().unwrap();
    // baseline is written first; a directory squatting on the dropout CSV path makes the second write fail
    let blocker = dir.path().join("o/entropy-vs-SPC-two_moons-dropout-combined.csv");
    fs::create_dir_all(&blocker).unwrap();
    let mut args = vec!["sweep", "--dataset", "two_moons", "--method", "baseline,dropout", "--spc", "1,2"];
    args.extend(["--trials", "1", "--out-dir", "o"]);
    args.extend(QUICK);
    let o = uqbench(&args, dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("baseline-combined.csv"));
    let left: Vec<_> = fs::read_dir(dir.path().join("o")).unwrap().map(|e| e.unwrap().path()).collect();
    assert_eq!(left, vec![blocker]);

    let o = uqbench(&["sweep", "--dataset", "two_moons", "--method", "baseline", "--spc", "1,2000"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!dir.path().join("results").join("entropy-vs-SPC-two_moons-baseline-combined.csv").exists());
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("run.cfg"),
        "# quick run\ndataset=two_moons\nmethod=baseline\nspc=1,2\ntrials=1\nepochs=10\nout-dir=from_file\n",
    )
    .unwrap();
    let o = uqbench(&["sweep", "--config", "run.cfg", "--spc", "3", "--out-dir", "from_flag"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!dir.path().join("from_file").exists());
    let csv = fs::read_to_string(dir.path().join("from_flag/entropy-vs-SPC-two_moons-baseline-combined.csv")).unwrap();
    assert_eq!(parse_csv(&csv).unwrap().len(), 1);
    let manifest =
        fs::read_to_string(dir.path().join("from_flag/entropy-vs-SPC-two_moons-baseline-combined.manifest")).unwrap();
    assert!(manifest.contains("spc=3\n") && manifest.contains("epochs=10\n"));

    // the manifest is itself a config reproducing the run
    fs::write(dir.path().join("again.cfg"), manifest.replace("out-dir=from_flag", "out-dir=again")).unwrap();
    let o = uqbench(&["sweep", "--config", "again.cfg"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let again = fs::read_to_string(dir.path().join("again/entropy-vs-SPC-two_moons-baseline-combined.csv")).unwrap();
    assert_eq!(again, csv);

    fs::write(dir.path().join("bad.cfg"), "dataset=two_moons\ncolour=blue\n").unwrap();
    assert_eq!(uqbench(&["sweep", "--config", "bad.cfg"], dir.path()).status.code(), Some(2));
}

#[test]
fn help_lists_every_flag() {
    let dir = tempfile::tempdir().unwrap();
    let help = stdout(&uqbench(&["sweep", "--help"], dir.path()));
    for flag in [
        "--dataset",
        "--ood-dataset",
        "--data-dir",
        "--method",
        "--aggregator",
        "--spc",
        "--trials",
        "--epochs",
        "--batch-size",
        "--mc-samples",
        "--ensemble-size",
        "--seed",
        "--out-dir",
        "--grid-resolution",
        "--config",
    ] {
        assert!(help.contains(flag), "{flag}");
    }
}

#[test]
fn gradcheck_lists_each_kind_once() {
    let dir = tempfile::tempdir().unwrap();
    let o = uqbench(&["gradcheck"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let out = stdout(&o);
    for kind in LayerKind::ALL {
        let n = out.lines().filter(|l| l.split_whitespace().nth(1) == Some(kind.name())).count();
        assert_eq!(n, 1, "{kind}");
    }
    for loss in ["categorical_ce", "binary_ce", "mse", "gaussian_nll"] {
        assert!(out.lines().any(|l| l.starts_with("loss") && l.contains(loss)), "{loss}");
    }
    assert_eq!(uqbench(&["gradcheck", "--inject-fault"], dir.path()).status.code(), Some(1));
}

#[test]
fn two_moons_grid_dump() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["toy", "two-moons", "--method", "baseline", "--spc", "100", "--grid-resolution", "100", "--epochs", "50"];
    let o = uqbench(&args, dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(dir.path().join("results/two-moons-grid-baseline-spc100.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x;y;confidence"));
    let conf: Vec<f64> = lines.map(|l| l.rsplit(';').next().unwrap().parse().unwrap()).collect();
    assert_eq!(conf.len(), 10_000);
    assert!(conf.iter().all(|&c| (0.5..=1.0).contains(&c)));
}

#[test]
fn regression_dump_columns() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["toy", "regression", "--method", "baseline-mse,flipout-nll", "--spc", "30", "--epochs", "20"];
    let o = uqbench(&[&args[..], &["--grid-resolution", "7", "--mc-samples", "4"]].concat(), dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let base = fs::read_to_string(dir.path().join("results/regression-baseline-mse-n30.csv")).unwrap();
    assert_eq!(base.lines().next(), Some("x;mean;sigma_aleatoric;sigma_epistemic"));
    assert_eq!(base.lines().count(), 8);
    assert!(base.lines().skip(1).all(|l| l.ends_with(";;")));
    let flip = fs::read_to_string(dir.path().join("results/regression-flipout-nll-n30.csv")).unwrap();
    for l in flip.lines().skip(1) {
        let cols: Vec<f64> = l.split(';').map(|c| c.parse().unwrap()).collect();
        assert!(cols[2] > 0.0 && cols[3] >= 0.0);
    }
}

#[test]
fn fixed_seed_outputs_are_byte_identical() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    for d in &dirs {
        let mut args = vec!["sweep", "--dataset", "two_moons", "--method", "dropout,ensemble", "--spc", "2,4"];
        args.extend(["--trials", "2", "--seed", "9"]);
        args.extend(QUICK);
        assert!(uqbench(&args, d.path()).status.success());
        let toy = ["toy", "two-moons", "--method", "flipout", "--spc", "3", "--grid-resolution", "5", "--seed", "9"];
        assert!(uqbench(&[&toy[..], &QUICK[..]].concat(), d.path()).status.success());
    }
    let files = |d: &Path| {
        let mut v: Vec<_> = fs::read_dir(d.join("results"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        v.sort();
        v
    };
    let (a, b) = (files(dirs[0].path()), files(dirs[1].path()));
    assert_eq!(a.len(), 3);
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(fs::read(x).unwrap(), fs::read(y).unwrap(), "{}", x.display());
    }
}
