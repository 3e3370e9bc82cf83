use super::*;
use crate::tabular::ColumnSchema;
use proptest::prelude::*;
use rand::Rng;
use std::collections::HashSet;

fn mixed(n: usize, seed: u64) -> TabularDataset {
    let schema = Schema::new(vec![
        ColumnSchema::numeric("id", ColumnKind::Float),
        ColumnSchema::numeric("x", ColumnKind::Float),
        ColumnSchema::numeric("k", ColumnKind::Integer),
        ColumnSchema::categorical("c", ["a", "b", "c", "d"]),
        ColumnSchema::categorical("flag", ["no", "yes"]),
    ])
    .unwrap();
    let mut rng = rng_from_seed(seed);
    let rows = (0..n)
        .map(|i| {
            vec![
                Cell::Num(i as f64 + seed as f64 * 1e6),
                Cell::Num(rng.random_range(-1.0..1.0)),
                Cell::Num(rng.random_range(0..20) as f64),
                Cell::Cat(rng.random_range(0..4)),
                Cell::Cat(rng.random_range(0..2)),
            ]
        })
        .collect();
    TabularDataset::new("mixed", schema, rows).unwrap()
}

fn ids(ds: &TabularDataset) -> HashSet<u64> {
    ds.rows().iter().map(|r| r[0].as_num().unwrap().to_bits()).collect()
}

fn fast_settings() -> MetricSettings {
    MetricSettings {
        bootstrap_resamples: 50,
        attack: AttackConfig {
            n_attrs: vec![1, 3],
            requested: 200,
            ..AttackConfig::default()
        },
        encoder: EncoderConfig {
            embedding_dim: 4,
            hidden_layers: vec![16],
            batch_size: 64,
            max_epochs: 2,
            ..EncoderConfig::default()
        },
        ..MetricSettings::default()
    }
}

#[test]
fn float_noise_mean_within_clt_bound() {
    let schema = Schema::new(vec![ColumnSchema::numeric("x", ColumnKind::Float)]).unwrap();
    let spec = NoiseSpec::new(0.05, 0.0, 0.0);
    let mut rng = rng_from_seed(1);
    let n = 100_000;
    let total: f64 = (0..n)
        .map(|_| inject_noise(&[Cell::Num(0.0)], &schema, &spec, &mut rng)[0].as_num().unwrap())
        .sum();
    assert!((total / n as f64).abs() < 3.0 * 0.05 / (n as f64).sqrt());
}

#[test]
fn forced_flip_of_binary_category() {
    let schema = Schema::new(vec![ColumnSchema::categorical("s", ["M", "F"])]).unwrap();
    let spec = NoiseSpec::new(0.0, 0.0, 1.0);
    let mut rng = rng_from_seed(2);
    for c in [0, 1, 0, 1, 1] {
        assert_eq!(inject_noise(&[Cell::Cat(c)], &schema, &spec, &mut rng)[0], Cell::Cat(1 - c));
    }
}

#[test]
fn category_replacement_is_uniform_over_others() {
    let schema = Schema::new(vec![ColumnSchema::categorical("c", ["a", "b", "c", "d"])]).unwrap();
    let spec = NoiseSpec::new(0.0, 0.0, 1.0);
    let mut rng = rng_from_seed(3);
    let mut counts = [0usize; 4];
    for _ in 0..30_000 {
        counts[inject_noise(&[Cell::Cat(2)], &schema, &spec, &mut rng)[0].as_cat().unwrap() as usize] += 1;
    }
    assert_eq!(counts[2], 0);
    for c in [0, 1, 3] {
        assert!((counts[c] as f64 / 10_000.0 - 1.0).abs() < 0.05);
    }
}

#[test]
fn poisson_sign_modes() {
    let schema = Schema::new(vec![ColumnSchema::numeric("k", ColumnKind::Integer)]).unwrap();
    let mut rng = rng_from_seed(4);
    let positive = NoiseSpec {
        poisson_sign: PoissonSign::Positive,
        ..NoiseSpec::new(0.0, 2.0, 0.0)
    };
    let sym = NoiseSpec::new(0.0, 2.0, 0.0);
    let n = 50_000;
    let mut sum = 0.0;
    for _ in 0..n {
        let d = inject_noise(&[Cell::Num(10.0)], &schema, &positive, &mut rng)[0].as_num().unwrap() - 10.0;
        assert!(d >= 0.0 && d.fract() == 0.0);
        sum += inject_noise(&[Cell::Num(10.0)], &schema, &sym, &mut rng)[0].as_num().unwrap() - 10.0;
    }
    // Symmetric noise has mean 0 and variance λ + λ² = 6.
    assert!((sum / n as f64).abs() < 3.0 * (6.0 / n as f64).sqrt());
}

proptest! {
    #[test]
    fn zero_noise_is_bit_exact(seed in 0u64..1000) {
        let ds = mixed(20, seed);
        let mut rng = rng_from_seed(seed);
        for row in ds.rows() {
            let out = inject_noise(row, ds.schema(), &NoiseSpec::default(), &mut rng);
            for (a, b) in out.iter().zip(row) {
                match (a, b) {
                    (Cell::Num(x), Cell::Num(y)) => prop_assert_eq!(x.to_bits(), y.to_bits()),
                    _ => prop_assert_eq!(a, b),
                }
            }
        }
    }
}

#[test]
fn leaky_extremes() {
    let train = mixed(100, 1);
    let release = mixed(100, 2);
    let none = make_leaky(&train, &release, 0.0, &NoiseSpec::default(), &mut rng_from_seed(0)).unwrap();
    assert_eq!(ids(&none), ids(&release));
    let all = make_leaky(&train, &release, 1.0, &NoiseSpec::default(), &mut rng_from_seed(0)).unwrap();
    let mut a: Vec<String> = all.rows().iter().map(|r| format!("{r:?}")).collect();
    let mut b: Vec<String> = train.rows().iter().map(|r| format!("{r:?}")).collect();
    a.sort();
    b.sort();
    assert_eq!(a, b);
    let half = make_leaky(&train, &release, 0.5, &NoiseSpec::default(), &mut rng_from_seed(0)).unwrap();
    assert_eq!(half.len(), 100);
    assert_eq!(ids(&half).intersection(&ids(&train)).count(), 50);
    assert_eq!(ids(&half).intersection(&ids(&release)).count(), 50);
}

#[test]
fn leaky_noise_touches_only_train_rows() {
    let train = mixed(100, 1);
    let release = mixed(100, 2);
    let noise = NoiseSpec::new(0.0, 0.0, 1.0);
    let half = make_leaky(&train, &release, 0.5, &noise, &mut rng_from_seed(5)).unwrap();
    let clean: HashSet<String> = release.rows().iter().map(|r| format!("{r:?}")).collect();
    let train_ids = ids(&train);
    for row in half.rows() {
        if train_ids.contains(&row[0].as_num().unwrap().to_bits()) {
            assert!(!clean.contains(&format!("{row:?}")));
        } else {
            assert!(clean.contains(&format!("{row:?}")));
        }
    }
}

#[test]
fn leaky_is_seeded_and_validated() {
    let train = mixed(60, 1);
    let release = mixed(60, 2);
    let noise = NoiseSpec::new(0.05, 0.05, 0.05);
    let a = make_leaky(&train, &release, 0.3, &noise, &mut rng_from_seed(7)).unwrap();
    let b = make_leaky(&train, &release, 0.3, &noise, &mut rng_from_seed(7)).unwrap();
    assert_eq!(a, b);
    assert!(make_leaky(&train, &release, 1.5, &noise, &mut rng_from_seed(7)).is_err());
    let small = mixed(10, 3);
    assert!(matches!(
        make_leaky(&train, &small, 0.5, &noise, &mut rng_from_seed(7)),
        Err(Error::Insufficient(_))
    ));
}

#[test]
fn dcr_grid_orders_fractions_and_has_full_size() {
    let real = mixed(600, 11);
    let cfg = LeakyConfig {
        dataset: "mixed".into(),
        leak_fractions: vec![0.0, 1.0],
        metrics: vec![Metric::Dcr],
        settings: fast_settings(),
        ..LeakyConfig::default()
    };
    let grid = run_leaky_experiment(&real, &cfg).unwrap();
    assert_eq!(grid.len(), 8 * 2);
    let clean: Vec<&GridRow> = grid.rows.iter().filter(|r| r.sigma == Some(0.0) && r.lambda == Some(0.0) && r.p == Some(0.0)).collect();
    let at = |f: f64| clean.iter().find(|r| r.f_l == Some(f)).unwrap().value;
    assert_eq!(at(1.0), 1.0);
    assert!(at(1.0) > at(0.0));
    let again = run_leaky_experiment(&real, &cfg).unwrap();
    let values = |g: &ExperimentGrid| g.rows.iter().map(|r| r.value).collect::<Vec<_>>();
    assert_eq!(values(&grid), values(&again));
}

#[test]
fn grid_points_can_be_skipped_and_observed() {
    let real = mixed(300, 12);
    let cfg = LeakyConfig {
        leak_fractions: vec![0.0, 0.5, 1.0],
        noise: vec![NoiseSpec::default()],
        metrics: vec![Metric::Dcr, Metric::So],
        settings: fast_settings(),
        ..LeakyConfig::default()
    };
    let seen = std::sync::Mutex::new(Vec::new());
    let grid = run_leaky_points(
        &real,
        &cfg,
        |k| k.fraction == 1,
        |k, rows| {
            assert_eq!(rows.len(), 2);
            seen.lock().unwrap().push(k);
            Ok(())
        },
    )
    .unwrap();
    assert_eq!(grid.len(), 4);
    let mut seen = seen.into_inner().unwrap();
    seen.sort();
    assert_eq!(seen.iter().map(|k| k.fraction).collect::<Vec<_>>(), vec![0, 2]);
    let full = run_leaky_experiment(&real, &cfg).unwrap();
    let kept: Vec<&GridRow> = full.rows.iter().filter(|r| r.f_l != Some(0.5)).collect();
    for (a, b) in grid.rows.iter().zip(kept) {
        assert_eq!(a.value, b.value);
    }
}

#[test]
fn leaky_config_validation() {
    let bad = LeakyConfig { leak_fractions: vec![0.5, 0.0], ..LeakyConfig::default() };
    assert!(bad.validate().is_err());
    let out = LeakyConfig { leak_fractions: vec![0.0, 1.2], ..LeakyConfig::default() };
    assert!(out.validate().is_err());
    assert_eq!(LeakyConfig::default().noise.len(), 8);
}

#[test]
fn embedding_metrics_run_end_to_end() {
    let real = mixed(450, 13);
    let cfg = LeakyConfig {
        leak_fractions: vec![1.0],
        noise: vec![NoiseSpec::default()],
        metrics: Metric::ALL.to_vec(),
        settings: fast_settings(),
        ..LeakyConfig::default()
    };
    let grid = run_leaky_experiment(&real, &cfg).unwrap();
    assert_eq!(grid.len(), 4);
    for row in &grid.rows {
        assert!(row.value.is_finite() && row.seconds > 0.0, "{row:?}");
        if matches!(row.metric, Metric::So | Metric::SoCl) {
            assert!(row.ci_lo <= row.value && row.value <= row.ci_hi);
        }
    }
    assert_eq!(grid.metric(Metric::DcrCl).next().unwrap().value, 1.0);
}

#[test]
fn overfit_toy_trend_and_errors() {
    let real = mixed(900, 14);
    let parts = split(&real, &SplitSpec::new(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0, 1).unwrap()).unwrap();
    let settings = fast_settings();
    let eval = Evaluator::new(&parts.train, &parts.control, &settings, None).unwrap();
    let sets: Vec<(OverfitRun, TabularDataset)> = [2.0, 1.0]
        .iter()
        .map(|&f| {
            let run = OverfitRun { synthetic_path: PathBuf::new(), f_o: f, generator_label: "toy".into() };
            (run, toy_generate(&parts.train, parts.train.len(), f, 3).unwrap())
        })
        .collect();
    let grid = evaluate_overfit_sets(&eval, "mixed", sets, &[Metric::Dcr, Metric::So], 0);
    assert_eq!(grid.rows[0].f_o, Some(1.0));
    let v = |f: f64, m: Metric| grid.rows.iter().find(|r| r.f_o == Some(f) && r.metric == m).unwrap().value;
    assert!(v(2.0, Metric::Dcr) > v(1.0, Metric::Dcr));
    assert!(v(2.0, Metric::So) > v(1.0, Metric::So));
    assert!(grid.rows.iter().all(|r| r.seconds > 0.0));

    let empty = run_overfit_eval(&eval, "mixed", &[], &[Metric::Dcr], 0);
    assert!(empty.is_empty());

    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.csv");
    toy_generate(&parts.train, 100, 1.5, 4).unwrap().write_csv(&good).unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "u,v\n1,2\n").unwrap();
    let runs = vec![
        OverfitRun { synthetic_path: bad, f_o: 1.8, generator_label: "broken".into() },
        OverfitRun { synthetic_path: good, f_o: 1.5, generator_label: "toy".into() },
        OverfitRun { synthetic_path: dir.path().join("missing.csv"), f_o: 1.1, generator_label: "gone".into() },
    ];
    let grid = run_overfit_eval(&eval, "mixed", &runs, &[Metric::Dcr], 0);
    assert_eq!(grid.len(), 3);
    assert_eq!(grid.rows.iter().map(|r| r.f_o.unwrap()).collect::<Vec<_>>(), vec![1.1, 1.5, 1.8]);
    assert!(grid.rows[0].error.is_some() && grid.rows[2].error.is_some());
    assert!(grid.rows[1].error.is_none() && grid.rows[1].value.is_finite());
}

#[test]
fn toy_generator_extremes() {
    let train = mixed(200, 15);
    let fresh = toy_generate(&train, 200, 1.0, 1).unwrap();
    let copy = toy_generate(&train, 200, 2.0, 1).unwrap();
    let train_ids = ids(&train);
    assert!(copy.rows().iter().all(|r| train_ids.contains(&r[0].as_num().unwrap().to_bits()) || r[0].as_num().unwrap().fract() != 0.0));
    assert_eq!(toy_generate(&train, 200, 1.0, 1).unwrap(), fresh);
    assert!(toy_generate(&train, 10, 2.5, 1).is_err());
}

#[test]
fn timing_table_shape() {
    let real = mixed(300, 16);
    let rows = timing_profile(&real, &[300], &[Metric::Dcr, Metric::So], &fast_settings(), None, 0).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.rows == 300 && r.seconds > 0.0));
    assert!(timing_profile(&real, &[301], &[Metric::Dcr], &fast_settings(), None, 0).is_err());
    assert!(timing_profile(&real, &[300], &[Metric::DcrCl], &fast_settings(), None, 0).is_err());
}

#[test]
fn grid_csv_round_trip_and_summary() {
    let row = |seed: u64, value: f64| GridRow {
        dataset: "d".into(),
        f_l: Some(0.5),
        sigma: Some(0.0),
        lambda: Some(0.0),
        p: Some(0.05),
        f_o: None,
        generator: None,
        metric: Metric::SoCl,
        seed,
        value,
        ci_lo: value - 0.1,
        ci_hi: value + 0.1,
        seconds: 1.5,
        error: None,
    };
    let grid = ExperimentGrid { rows: vec![row(0, 0.2), row(1, 0.4)] };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.csv");
    grid.write_csv(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("dataset,f_l,sigma,lambda,p,f_o,generator,metric,seed,value,ci_lo,ci_hi,seconds,error"));
    assert!(text.contains("SO+CL"));
    assert_eq!(ExperimentGrid::read_csv(&path).unwrap(), grid);
    let summary = grid.summary();
    assert_eq!(summary.len(), 1);
    assert!((summary[0].mean - 0.3).abs() < 1e-12);
    assert_eq!(summary[0].n_seeds, 2);
}

#[test]
fn metric_names_parse() {
    for m in Metric::ALL {
        assert_eq!(m.label().parse::<Metric>().unwrap(), m);
    }
    assert_eq!("so_cl".parse::<Metric>().unwrap(), Metric::SoCl);
    assert!("xyz".parse::<Metric>().is_err());
}

#[test]
fn adult_like_shape() {
    let ds = adult_like(2000, 1);
    assert_eq!(ds.n_columns(), 15);
    let numeric = ds.schema().columns().iter().filter(|c| c.kind.is_numeric()).count();
    assert_eq!(numeric, 6);
    assert_eq!(ds, adult_like(2000, 1));
    let unique: HashSet<String> = ds.rows().iter().map(|r| format!("{r:?}")).collect();
    assert!(unique.len() > 1990);
}

#[test]
fn mean_dcr_score_rises_with_leak_fraction() {
    let real = mixed(900, 21);
    let fractions = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let cfg = LeakyConfig {
        dataset: "mixed".into(),
        leak_fractions: fractions.clone(),
        noise: vec![NoiseSpec::default()],
        metrics: vec![Metric::Dcr],
        seeds: (0..5).collect(),
        settings: fast_settings(),
        ..LeakyConfig::default()
    };
    let grid = run_leaky_experiment(&real, &cfg).unwrap();
    let means: Vec<f64> = fractions
        .iter()
        .map(|&f| {
            let v: Vec<f64> = grid.rows.iter().filter(|r| r.f_l == Some(f)).map(|r| r.value).collect();
            assert_eq!(v.len(), 5);
            v.iter().sum::<f64>() / 5.0
        })
        .collect();
    let inversions = means.windows(2).filter(|w| w[1] < w[0]).count();
    assert!(inversions <= 1, "means {means:?}");
}
