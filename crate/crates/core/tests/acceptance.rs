//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Binomial, Distribution, Normal};
use tabpriv::attacks::{
    self, evaluate_guesses, rank_outliers, run_singling_out, wilson_with_z, AttackConfig,
    Source, DEFAULT_Z,
};
use tabpriv::dcr::{self, bootstrap_score, DistanceSpace, SpaceTag};
use tabpriv::embedder::{self, masked_batch, EmbeddingModel, EncoderConfig, RiskEstimate};
use tabpriv::harness::{
    self, adult_like, run_leaky_experiment, Evaluator, GridRow, LeakyConfig, Metric, MetricSettings, NoiseSpec,
};
use tabpriv::seed::rng_from_seed;
use tabpriv::tabular::{
    self, Cell, ColumnKind, ColumnSchema, EncodedMatrix, Encoding, Schema, SplitSpec, TabularDataset,
};

/// Privacy score at α = 2 with no synthetic record below the threshold, as
/// tabulated to five decimals (truncated).
const TABLE_FLOOR: f64 = -0.02040;

fn encoded(values: Array2<f64>) -> EncodedMatrix {
    let column_map = (0..values.ncols()).collect();
    EncodedMatrix {
        values,
        column_map,
        encoding: Encoding::RawMetric,
    }
}

/// 5k / 5k / 5k split of a census-style table.
fn adult_split(seed: u64) -> tabular::Split {
    let real = adult_like(15_000, 1000 + seed);
    let third = 1.0 / 3.0;
    tabular::split(&real, &SplitSpec::new(third, third, third, seed).unwrap()).unwrap()
}

/// Encoder small enough to train on one core within the time budgets.
fn compact_encoder(seed: u64) -> EncoderConfig {
    EncoderConfig {
        hidden_layers: vec![128, 128],
        batch_size: 256,
        max_epochs: 40,
        seed,
        ..EncoderConfig::default()
    }
}

fn pearson(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    (sxy / (sxx * syy).sqrt(), sxy / sxx)
}

fn brute_nearest(q: &Array2<f64>, r: &Array2<f64>) -> Vec<f64> {
    q.rows()
        .into_iter()
        .map(|a| {
            r.rows()
                .into_iter()
                .map(|b| a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .fold(f64::INFINITY, f64::min)
                .sqrt()
        })
        .collect()
}

fn brute_outliers(p: &Array2<f64>, k: usize) -> Vec<usize> {
    let n = p.nrows();
    let score: Vec<f64> = (0..n)
        .map(|i| {
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| p.row(i).iter().zip(p.row(j).iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
                .collect();
            d.sort_by(f64::total_cmp);
            d[k - 1].sqrt()
        })
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| score[b].partial_cmp(&score[a]).unwrap().then(a.cmp(&b)));
    order
}

type Outcome = Result<String, String>;

fn check(cond: bool, msg: String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg)
    }
}

fn c1_floor() -> Outcome {
    // Training and holdout rows sit together; every synthetic row is far away.
    let mut rng = rng_from_seed(1);
    let real = |rng: &mut _| Array2::from_shape_fn((500, 3), |_| Normal::new(0.0, 1.0).unwrap().sample(rng));
    let d1 = real(&mut rng);
    let d2 = real(&mut rng);
    let synth = d1.mapv(|v| v + 100.0);
    let space = DistanceSpace::new(SpaceTag::Raw, encoded(synth), encoded(d1), encoded(d2)).unwrap();
    let rep = bootstrap_score(&space, 2.0, 1000, 3).unwrap();
    let oracle = -2.0 / 98.0;
    check((rep.privacy_score - oracle).abs() < 1e-6, format!("score {} vs {oracle}", rep.privacy_score))?;
    check(
        (rep.privacy_score * 1e5).trunc() / 1e5 == TABLE_FLOOR,
        format!("score {} vs table value {TABLE_FLOOR}", rep.privacy_score),
    )?;
    check(dcr::score_floor(2.0) == rep.privacy_score, "floor helper disagrees".into())?;
    Ok(format!("score = {:.6}", rep.privacy_score))
}

fn c2_copy() -> Outcome {
    let s = adult_split(0);
    let synth = s.train.clone();
    let space = DistanceSpace::raw(&synth, &s.train, &s.control).unwrap();
    let rep = bootstrap_score(&space, 2.0, 1000, 5).unwrap();
    check(rep.privacy_score == 1.0, format!("privacy score {}", rep.privacy_score))?;

    let report = run_singling_out(&synth, &s.train, &s.control, &AttackConfig::default(), None).unwrap();
    let mut total = 0;
    for (row, gs) in report.per_config.iter().zip(&report.guesses) {
        let hits = evaluate_guesses(gs, &synth);
        check(hits == gs.n_a(), format!("n_attrs {}: N_S {hits} != N_A {}", row.n_attrs, gs.n_a()))?;
        check(
            row.n_s_train == row.n_a,
            format!("n_attrs {}: train N_S {} != N_A {}", row.n_attrs, row.n_s_train, row.n_a),
        )?;
        total += gs.n_a();
    }
    Ok(format!("score = 1, {total} guesses all single out their row"))
}

fn c3_null() -> Outcome {
    let mut parts = Vec::new();
    for seed in 0..5 {
        let s = adult_split(seed);
        let space = DistanceSpace::raw(&s.release, &s.train, &s.control).unwrap();
        let rep = bootstrap_score(&space, 2.0, 1000, 100 + seed).unwrap();
        let (score, sd) = (rep.privacy_score, rep.bootstrap.std);
        check(score.abs() <= 3.0 * sd, format!("seed {seed}: |{score:.5}| > 3 x {sd:.5}"))?;
        parts.push(format!("{score:+.4}/{sd:.4}"));
    }
    Ok(format!("score/std per seed: {}", parts.join(" ")))
}

fn leaky_values(rows: &[GridRow], metric: Metric, noise: &NoiseSpec, fractions: &[f64]) -> Vec<GridRow> {
    fractions
        .iter()
        .map(|&f| {
            rows.iter()
                .find(|r| {
                    r.metric == metric
                        && r.f_l == Some(f)
                        && r.sigma == Some(noise.sigma)
                        && r.lambda == Some(noise.lambda)
                        && r.p == Some(noise.p)
                })
                .cloned()
                .unwrap_or_else(|| panic!("missing grid row for {metric} at f_l = {f}"))
        })
        .collect()
}

fn c4_linearity() -> Outcome {
    let real = adult_like(15_000, 1000);
    let fractions = vec![0.0, 0.25, 0.5, 0.75, 1.0];
    let cfg = LeakyConfig {
        dataset: "adult_like".into(),
        leak_fractions: fractions.clone(),
        noise: vec![NoiseSpec::new(0.0, 0.0, 0.0)],
        metrics: vec![Metric::Dcr, Metric::So],
        seeds: vec![0],
        ..LeakyConfig::default()
    };
    let grid = run_leaky_experiment(&real, &cfg).unwrap();
    let mut notes = Vec::new();
    for metric in [Metric::Dcr, Metric::So] {
        let rows = leaky_values(&grid.rows, metric, &cfg.noise[0], &fractions);
        let y: Vec<f64> = rows.iter().map(|r| r.value).collect();
        let (r, slope) = pearson(&fractions, &y);
        check(r > 0.9 && slope > 0.0, format!("{metric}: r = {r:.3}, slope = {slope:.3}, values {y:?}"))?;
        notes.push(format!("{metric} r={r:.3} slope={slope:.3}"));
        if metric == Metric::So {
            let r0 = &rows[0];
            check(
                r0.ci_lo <= 0.0 && 0.0 <= r0.ci_hi,
                format!("R(0) = {:.4} with interval [{:.4}, {:.4}]", r0.value, r0.ci_lo, r0.ci_hi),
            )?;
            notes.push(format!("R(0)={:.4}±{:.4}", r0.value, r0.ci_hi - r0.value));
        }
    }
    Ok(notes.join(", "))
}

fn c5_noise() -> Outcome {
    let real = adult_like(15_000, 1000);
    let fractions = vec![0.0, 1.0];
    let noise = NoiseSpec::grid(&[0.0, 0.05]);
    let cfg = LeakyConfig {
        dataset: "adult_like".into(),
        leak_fractions: fractions.clone(),
        noise: noise.clone(),
        metrics: Metric::ALL.to_vec(),
        seeds: vec![0],
        settings: MetricSettings {
            encoder: compact_encoder(0),
            ..MetricSettings::default()
        },
        ..LeakyConfig::default()
    };
    let grid = run_leaky_experiment(&real, &cfg).unwrap();
    check(grid.len() == noise.len() * 2 * 4, format!("{} grid rows", grid.len()))?;
    let mut min_gap = f64::INFINITY;
    for spec in &noise {
        for metric in Metric::ALL {
            let rows = leaky_values(&grid.rows, metric, spec, &fractions);
            check(
                rows[1].value > rows[0].value,
                format!("{metric} at {spec:?}: f_l=1 {} <= f_l=0 {}", rows[1].value, rows[0].value),
            )?;
            min_gap = min_gap.min(rows[1].value - rows[0].value);
        }
    }
    Ok(format!("{} noise points x 4 metrics ordered, smallest gap {min_gap:.3}", noise.len()))
}

fn c6_wilson() -> Outcome {
    let n_a = 2000u64;
    let trials = 10_000;
    let mut rng = rng_from_seed(6);
    let mut notes = Vec::new();
    for p in [0.05, 0.5, 0.95] {
        let bin = Binomial::new(n_a, p).unwrap();
        let covered = (0..trials)
            .filter(|_| {
                let n_s = bin.sample(&mut rng) as usize;
                let rate = wilson_with_z(n_s, n_a as usize, DEFAULT_Z).unwrap();
                (rate.r - p).abs() <= rate.delta
            })
            .count();
        let coverage = covered as f64 / trials as f64;
        check(coverage >= 0.93, format!("p = {p}: coverage {coverage}"))?;
        notes.push(format!("p={p}: {coverage:.4}"));
    }
    Ok(notes.join(", "))
}

fn gradient_fixture() -> TabularDataset {
    let schema = Schema::new(vec![
        ColumnSchema::numeric("a", ColumnKind::Float),
        ColumnSchema::categorical("b", ["x", "y", "z"]),
        ColumnSchema::numeric("c", ColumnKind::Integer),
        ColumnSchema::categorical("d", ["u", "v"]),
    ])
    .unwrap();
    let mut rng = rng_from_seed(70);
    let rows = (0..12)
        .map(|_| {
            vec![
                Cell::Num(rng.random_range(-2.0..2.0)),
                Cell::Cat(rng.random_range(0..3)),
                Cell::Num(rng.random_range(0..40) as f64),
                Cell::Cat(rng.random_range(0..2)),
            ]
        })
        .collect();
    TabularDataset::new("grad", schema, rows).unwrap()
}

fn c7_gradient() -> Outcome {
    let ds = gradient_fixture();
    let cfg = EncoderConfig {
        embedding_dim: 3,
        hidden_layers: vec![6, 5],
        seed: 71,
        ..EncoderConfig::default()
    };
    let mut model = EmbeddingModel::new(&ds, cfg).unwrap();
    let input = model.encode_input(&ds).unwrap();
    let mut rng = rng_from_seed(72);
    let rows: Vec<usize> = (0..8).collect();
    let v1 = masked_batch(&input, &rows, &mut rng).unwrap();
    let v2 = masked_batch(&input, &rows, &mut rng).unwrap();
    let exact = model.loss_and_gradient(&v1, &v2, Some(73)).unwrap().gradient;
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut groups = 0;
    for (name, range) in model.layout().groups() {
        groups += 1;
        for i in range {
            let orig = model.parameters()[i];
            model.parameters_mut()[i] = orig + h;
            let up = model.loss_and_gradient(&v1, &v2, Some(73)).unwrap().loss;
            model.parameters_mut()[i] = orig - h;
            let down = model.loss_and_gradient(&v1, &v2, Some(73)).unwrap().loss;
            model.parameters_mut()[i] = orig;
            let numeric = (up - down) / (2.0 * h);
            let scale = numeric.abs().max(exact[i].abs()).max(1e-8);
            let rel = (numeric - exact[i]).abs() / scale;
            check(rel < 1e-4, format!("{name}[{i}]: analytic {} vs numeric {numeric}", exact[i]))?;
            worst = worst.max(rel);
        }
    }
    Ok(format!("{} parameters in {groups} groups, max relative error {worst:.2e}", exact.len()))
}

fn c8_neighbors() -> Outcome {
    let mut rng = rng_from_seed(8);
    let mut checked = 0;
    for inst in 0..50 {
        let n = rng.random_range(7..=300);
        let m = rng.random_range(1..=300);
        let d = rng.random_range(1..=12);
        // Coarse grids produce ties.
        let coarse = inst % 3 == 0;
        let mut draw = |rows: usize| {
            Array2::from_shape_fn((rows, d), |_| {
                if coarse {
                    rng.random_range(0..4) as f64
                } else {
                    rng.random_range(-1.0..1.0)
                }
            })
        };
        let q = draw(m);
        let r = draw(n);
        let got = dcr::nearest_distances(q.view(), r.view(), dcr::DistanceKind::Srd).unwrap();
        check(got.values == brute_nearest(&q, &r), format!("instance {inst}: nearest distances differ"))?;
        check(
            rank_outliers(r.view(), 5).unwrap() == brute_outliers(&r, 5),
            format!("instance {inst}: outlier ranking differs"),
        )?;
        checked += 1;
    }
    Ok(format!("{checked} instances identical"))
}

/// Each row is one of `n_ids` entities, repeated `copies` times. Every entity
/// is spelled out in eight categorical columns through different bijections;
/// the last column is its cluster.
fn two_clusters(n_ids: usize, copies: usize, seed: u64) -> (TabularDataset, Vec<usize>) {
    let n_cat = 8;
    let mut cols: Vec<ColumnSchema> = (0..n_cat)
        .map(|j| ColumnSchema::categorical(format!("id{j}"), (0..n_ids).map(|i| format!("c{j}_{i}"))))
        .collect();
    cols.push(ColumnSchema::categorical("group", ["left", "right"]));
    let schema = Schema::new(cols).unwrap();
    let mut ids: Vec<usize> = (0..n_ids).flat_map(|i| std::iter::repeat_n(i, copies)).collect();
    ids.shuffle(&mut rng_from_seed(seed));
    let labels: Vec<usize> = ids.iter().map(|id| id % 2).collect();
    let rows = ids
        .iter()
        .map(|&id| {
            let mut row: Vec<Cell> = (0..n_cat).map(|j| Cell::Cat(((id * (2 * j + 1) + j) % n_ids) as u32)).collect();
            row.push(Cell::Cat((id % 2) as u32));
            row
        })
        .collect();
    (TabularDataset::new("clusters", schema, rows).unwrap(), labels)
}

fn c9_training() -> Outcome {
    let (ds, labels) = two_clusters(1000, 5, 9);
    let (tr, va) = embedder::validation_split(&ds, 0.1, 90).unwrap();
    let cfg = EncoderConfig {
        embedding_dim: 8,
        hidden_layers: vec![64, 64],
        batch_size: 64,
        max_epochs: 300,
        learning_rate: 3e-3,
        seed: 91,
        ..EncoderConfig::default()
    };
    let (model, log) = embedder::train(&tr, &va, &cfg).unwrap();
    let best = log.best().unwrap();
    check(best.val_acc > 0.9, format!("validation accuracy {:.3}", best.val_acc))?;
    let emb = model.embed_dataset(&ds).unwrap().values;
    let (mut within, mut nw, mut across, mut na) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..ds.len() {
        for j in (i + 1)..ds.len() {
            let cos = emb.row(i).dot(&emb.row(j));
            if labels[i] == labels[j] {
                within += cos;
                nw += 1;
            } else {
                across += cos;
                na += 1;
            }
        }
    }
    let (within, across) = (within / nw as f64, across / na as f64);
    check(within > across, format!("within-cluster cosine {within:.3} <= cross-cluster {across:.3}"))?;
    Ok(format!(
        "val acc {:.3} after {} epochs, cosine within {within:.3} vs across {across:.3}",
        best.val_acc,
        log.epochs.len()
    ))
}

fn c10_overfit() -> Outcome {
    let settings = MetricSettings::default();
    let (mut dcr_gap, mut so_gap) = (0.0, 0.0);
    let seeds = 5;
    for seed in 0..seeds {
        let s = adult_split(seed);
        let eval = Evaluator::new(&s.train, &s.control, &settings, None).unwrap();
        let mut values = [[0.0; 2]; 2];
        for (k, f_o) in [1.0, 2.0].into_iter().enumerate() {
            let synth = harness::toy_generate(&s.train, s.train.len(), f_o, 500 + seed).unwrap();
            values[k][0] = eval.evaluate(Metric::Dcr, &synth, seed).unwrap().value;
            values[k][1] = eval.evaluate(Metric::So, &synth, seed).unwrap().value;
        }
        dcr_gap += (values[1][0] - values[0][0]) / seeds as f64;
        so_gap += (values[1][1] - values[0][1]) / seeds as f64;
    }
    check(dcr_gap > 0.0, format!("mean DCR gap {dcr_gap}"))?;
    check(so_gap > 0.0, format!("mean SO gap {so_gap}"))?;
    Ok(format!("mean overfit minus non-overfit: DCR {dcr_gap:+.3}, SO {so_gap:+.3}"))
}

fn c11_sweep() -> Outcome {
    let real = adult_like(6_000, 1100);
    let third = 1.0 / 3.0;
    let s = tabular::split(&real, &SplitSpec::new(third, third, third, 11).unwrap()).unwrap();
    let synth = harness::make_leaky(&s.train, &s.release, 0.5, &NoiseSpec::default(), &mut rng_from_seed(12)).unwrap();
    let (tr, va) = embedder::validation_split(&s.train, 0.1, 13).unwrap();
    let base = EncoderConfig {
        max_epochs: 25,
        ..compact_encoder(14)
    };
    let attack_cfg = AttackConfig {
        sources: vec![Source::EmbeddingOutlier],
        seed: 15,
        ..AttackConfig::default()
    };
    let dims: Vec<usize> = (3..=8).collect();
    let table = embedder::sweep_embedding_dim(&tr, &va, &dims, &base, |model| {
        let emb = model.embed_dataset(&synth)?.values;
        let rep = run_singling_out(&synth, &s.train, &s.control, &attack_cfg, Some(emb.view()))?;
        let h = rep.headline.expect("attack produced a risk");
        Ok(RiskEstimate {
            risk: h.risk.unwrap(),
            ci: h.d_risk.unwrap(),
        })
    })
    .unwrap();
    check(table.rows.len() == dims.len(), format!("{} rows", table.rows.len()))?;
    for r in &table.rows {
        check(
            r.risk.is_finite() && r.ci.is_finite() && r.val_loss.is_finite() && (0.0..=1.0).contains(&r.val_acc),
            format!("malformed row {r:?}"),
        )?;
        println!(
            "    dim {}: R = {:.3} ± {:.3}, val loss {:.3}, val acc {:.3}",
            r.dim, r.risk, r.ci, r.val_loss, r.val_acc
        );
    }
    let best = table.rows.iter().find(|r| r.dim == table.best_dim).unwrap();
    let overlapping = table
        .rows
        .iter()
        .filter(|r| r.dim != best.dim && (r.risk - best.risk).abs() <= r.ci + best.ci)
        .count();
    Ok(format!(
        "best dim {}, {overlapping} of {} other dims overlap its interval",
        table.best_dim,
        dims.len() - 1
    ))
}

fn c12_timing() -> Outcome {
    let real = adult_like(15_000, 1200);
    let settings = MetricSettings::default();
    let rows = harness::timing_profile(&real, &[15_000], &[Metric::Dcr, Metric::So], &settings, None, 12).unwrap();
    let dcr = rows.iter().find(|r| r.metric == Metric::Dcr).unwrap().seconds;
    let so = rows.iter().find(|r| r.metric == Metric::So).unwrap().seconds;
    check(dcr < so, format!("DCR {dcr:.2}s >= SO {so:.2}s"))?;
    Ok(format!("DCR {dcr:.2}s, SO {so:.2}s at 5000 rows per set"))
}

#[test]
fn acceptance() {
    let criteria: Vec<(&str, u64, fn() -> Outcome)> = vec![
        ("privacy score floor at alpha = 2", 1, c1_floor),
        ("exact copy ceiling", 10, c2_copy),
        ("independent sample null", 60, c3_null),
        ("leak fraction linearity", 15 * 60, c4_linearity),
        ("noise robustness sweep", 30 * 60, c5_noise),
        ("Wilson interval coverage", 60, c6_wilson),
        ("gradient check", 60, c7_gradient),
        ("nearest neighbor oracles", 60, c8_neighbors),
        ("contrastive training sanity", 5 * 60, c9_training),
        ("overfit trend", 10 * 60, c10_overfit),
        ("embedding width sweep", 20 * 60, c11_sweep),
        ("timing ordering", u64::MAX, c12_timing),
    ];
    let mut failed = Vec::new();
    for (k, (name, limit, run)) in criteria.into_iter().enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > Duration::from_secs(limit) => {
                Err(format!("{detail}; took {:.1}s, limit {limit}s", elapsed.as_secs_f64()))
            }
            o => o,
        };
        let id = k + 1;
        match &outcome {
            Ok(detail) => println!("PASS {id:>2} {name} ({:.1}s): {detail}", elapsed.as_secs_f64()),
            Err(why) => {
                println!("FAIL {id:>2} {name} ({:.1}s): {why}", elapsed.as_secs_f64());
                failed.push(id);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn wilson_interval_matches_closed_form() {
    // Direct evaluation of the score interval for 49 of 50.
    let (n_s, n_a, z) = (49.0f64, 50.0f64, DEFAULT_Z);
    let p = n_s / n_a;
    let centre = (p + z * z / (2.0 * n_a)) / (1.0 + z * z / n_a);
    let half = z / (1.0 + z * z / n_a) * (p * (1.0 - p) / n_a + z * z / (4.0 * n_a * n_a)).sqrt();
    let rate = attacks::wilson_with_z(49, 50, z).unwrap();
    assert!((rate.r - centre).abs() < 1e-12 && (rate.delta - half).abs() < 1e-12);
}
