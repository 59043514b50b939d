use proptest::prelude::*;

use uqbench_core::harness::{
    aggregate, evaluate, format_csv, parse_csv, run_sweep, trial_predictions, two_moons_data, SweepPlan, TrialResult,
};
use uqbench_core::methods::{Aggregator, Method, MethodConfig};
use uqbench_core::nn::{ModelSpec, TrainConfig};

fn quick_cfg() -> TrainConfig {
    TrainConfig {
        epochs: 8,
        batch_size: 16,
        ..TrainConfig::default()
    }
}

fn quick_method(method: Method) -> MethodConfig {
    let mut cfg = MethodConfig::new(method);
    cfg.mc_samples = 4;
    cfg.ensemble_size = 2;
    cfg
}

#[test]
fn every_method_produces_bounded_metrics() {
    let data = two_moons_data(4, 60, 30, 40);
    let spec = ModelSpec::mlp(2, vec![16, 16], 2);
    for method in Method::ALL {
        let preds = trial_predictions(&quick_method(method), &spec, &quick_cfg(), &data, 10, 77).unwrap();
        assert_eq!(preds.pred_test.len(), 60);
        assert_eq!(preds.pred_ood.len(), 40);
        let r = evaluate(&preds, data.test.labels()).unwrap();
        for (stem, v) in TrialResult::STEMS.iter().zip(r.values()) {
            let entropy_field = stem.contains("entropy");
            if entropy_field && !method.has_entropy() {
                assert!(v.is_nan(), "{method} {stem}");
            } else {
                assert!(v.is_finite() && v >= 0.0, "{method} {stem} = {v}");
                if stem != &"mean_entropy" {
                    assert!(v <= 1.0, "{method} {stem} = {v}");
                }
            }
        }
        assert!(r.mean_entropy.is_nan() || r.mean_entropy <= 2f64.ln() + 1e-12);
    }
}

#[test]
fn sweep_is_reproducible_and_csv_stable() {
    let data = two_moons_data(1, 50, 20, 30);
    let spec = ModelSpec::mlp(2, vec![8], 2);
    let plan = SweepPlan {
        spc_values: vec![1, 3, 6],
        trials: 3,
        base_seed: 5,
    };
    let mut cfg = quick_method(Method::Gradient);
    cfg.aggregator = Aggregator::Std;
    let a = run_sweep(&cfg, &spec, &quick_cfg(), &data, &plan, |_, _, _| {}).unwrap();
    let b = run_sweep(&cfg, &spec, &quick_cfg(), &data, &plan, |_, _, _| {}).unwrap();
    assert_eq!(format_csv(&a), format_csv(&b));
    let back = parse_csv(&format_csv(&a)).unwrap();
    assert_eq!(format_csv(&back), format_csv(&a));
    assert!(a.iter().all(|r| r.mean.mean_entropy.is_nan()));

    let other = SweepPlan { base_seed: 6, ..plan };
    let c = run_sweep(&cfg, &spec, &quick_cfg(), &data, &other, |_, _, _| {}).unwrap();
    assert_ne!(format_csv(&a), format_csv(&c));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregate_matches_population_moments(
        rows in prop::collection::vec(prop::array::uniform11(0.0f64..1.0), 1..8)
    ) {
        let trials: Vec<TrialResult> = rows.iter().map(|v| TrialResult::from_values(*v)).collect();
        let agg = aggregate(7, &trials);
        prop_assert_eq!(agg.spc, 7);
        let k = rows.len() as f64;
        for j in 0..11 {
            let mean = rows.iter().map(|r| r[j]).sum::<f64>() / k;
            let var = rows.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / k;
            prop_assert!((agg.mean.values()[j] - mean).abs() < 1e-12);
            prop_assert!((agg.std.values()[j] - var.sqrt()).abs() < 1e-12);
        }
    }
}
