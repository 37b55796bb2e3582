//! Acceptance suite: one test per release criterion, each printing a
//! `criterion NN (...): PASS` line when it holds. Oracles here are
//! deliberately independent of the library's implementation paths
//! (Cholesky instead of Gauss-Jordan, numeric quadrature instead of the
//! incomplete beta, brute-force nearest-site instead of clipped polygons).

use exposome::align::{fuse, interpolate_linear, FusedFrameTable, InterpolationPoint};
use exposome::classify::{
    kfold_cv, logistic, modality_ablation, statistical_features, LabeledDataset, Modality,
    Provenance, RandomForestTrainer,
};
use exposome::dbn::{cd1_step, train_dbn, RbmLayer, TrainConfig};
use exposome::ingest::{generate_synthetic_session, ChannelKind, ChannelSpec, SynthConfig};
use exposome::pipeline::{build_row_dataset, default_stats_channels, run_pipeline, PipelineConfig};
use exposome::seed::derive_seed;
use exposome::spatial::{
    classify_cells, grid_heatmap, point_in_polygon, polygon_area, sites_from_table,
    tessellation_to_geojson, voronoi, Rect, Site, SiteValue,
};
use exposome::stats::{ols_regress, pca, pearson_matrix, qq_data};
use ndarray::{array, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn table_from_columns(cols: &[(&str, Vec<f64>)]) -> FusedFrameTable {
    let n = cols[0].1.len();
    FusedFrameTable {
        times_s: (0..n as i64).collect(),
        channels: cols
            .iter()
            .map(|(name, _)| ChannelSpec {
                name: name.to_string(),
                unit: String::new(),
                native_period_s: 1.0,
                kind: ChannelKind::Environment,
            })
            .collect(),
        columns: cols.iter().map(|(_, v)| v.iter().map(|x| Some(*x)).collect()).collect(),
        geo: vec![None; n],
        labels: vec![None; n],
        norm: vec![(0.0, 1.0); cols.len()],
        excluded: vec![],
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: OLS oracle equivalence
// ---------------------------------------------------------------------------

/// Lower-triangular Cholesky factor; the oracle's solve route.
#[allow(clippy::needless_range_loop)]
fn cholesky(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                assert!(sum > 0.0, "oracle: matrix not positive definite");
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    l
}

fn chol_solve(l: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
    let n = l.len();
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut sum = b[i];
        for k in 0..i {
            sum -= l[i][k] * y[k];
        }
        y[i] = sum / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut sum = y[i];
        for k in i + 1..n {
            sum -= l[k][i] * x[k];
        }
        x[i] = sum / l[i][i];
    }
    x
}

fn chol_inverse_diag(l: &[Vec<f64>]) -> Vec<f64> {
    let n = l.len();
    (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            chol_solve(l, &e)[i]
        })
        .collect()
}

/// Two-sided Student-t p-value by Simpson quadrature of the unnormalised
/// density; no gamma functions involved. The ratio of the upper tail to
/// half the mass is exactly `2 P(T > |t|)`.
fn t_p_value_quadrature(t_abs: f64, df: f64) -> f64 {
    if !t_abs.is_finite() {
        return 0.0;
    }
    let pdf = |x: f64| (1.0 + x * x / df).powf(-0.5 * (df + 1.0));
    let simpson = |a: f64, b: f64, steps: usize| {
        let h = (b - a) / steps as f64;
        let mut sum = pdf(a) + pdf(b);
        for k in 1..steps {
            let x = a + k as f64 * h;
            sum += pdf(x) * if k % 2 == 1 { 4.0 } else { 2.0 };
        }
        sum * h / 3.0
    };
    let half_mass = simpson(0.0, 400.0, 200_000);
    let tail = if t_abs >= 400.0 { 0.0 } else { simpson(t_abs, 400.0, 200_000) };
    tail / half_mass
}

#[test]
fn criterion_01_ols_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1);
    for case in 0..100 {
        let n = 50;
        let p = 2 + case % 5; // p in 2..=6
        let mut cols: Vec<(String, Vec<f64>)> = Vec::new();
        let mut x = vec![vec![1.0; p + 1]; n];
        for j in 0..p {
            let col: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
            for (i, row) in x.iter_mut().enumerate() {
                row[j + 1] = col[i];
            }
            cols.push((format!("x{j}"), col));
        }
        let beta: Vec<f64> = (0..=p).map(|_| rng.random_range(-3.0..3.0)).collect();
        let y: Vec<f64> = (0..n)
            .map(|i| {
                let mut v = 0.0;
                for j in 0..=p {
                    v += beta[j] * x[i][j];
                }
                let noise: f64 = rng.random::<f64>() - 0.5;
                v + noise
            })
            .collect();

        // Oracle: normal equations solved by Cholesky.
        let mut xtx = vec![vec![0.0; p + 1]; p + 1];
        let mut xty = vec![0.0; p + 1];
        for i in 0..n {
            for a in 0..=p {
                xty[a] += x[i][a] * y[i];
                for b in 0..=p {
                    xtx[a][b] += x[i][a] * x[i][b];
                }
            }
        }
        let l = cholesky(&xtx);
        let beta_hat = chol_solve(&l, &xty);
        let inv_diag = chol_inverse_diag(&l);
        let rss: f64 = (0..n)
            .map(|i| {
                let fit: f64 = (0..=p).map(|j| beta_hat[j] * x[i][j]).sum();
                (y[i] - fit) * (y[i] - fit)
            })
            .sum();
        let df = (n - p - 1) as f64;
        let sigma2 = rss / df;

        // Implementation under test.
        let mut table_cols: Vec<(&str, Vec<f64>)> = vec![("y", y.clone())];
        for (name, col) in &cols {
            table_cols.push((name.as_str(), col.clone()));
        }
        let table = table_from_columns(&table_cols);
        let predictors: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let fit = ols_regress(&table, "y", &predictors).unwrap();

        for j in 0..=p {
            let se_oracle = (sigma2 * inv_diag[j]).sqrt();
            let t_oracle = beta_hat[j] / se_oracle;
            let p_oracle = t_p_value_quadrature(t_oracle.abs(), df);
            assert!(
                (fit.coefficients[j] - beta_hat[j]).abs() <= 1e-8,
                "case {case} coef {j}: {} vs {}",
                fit.coefficients[j],
                beta_hat[j]
            );
            assert!(
                (fit.standard_errors[j] - se_oracle).abs() <= 1e-8,
                "case {case} se {j}: {} vs {se_oracle}",
                fit.standard_errors[j]
            );
            assert!(
                (fit.t_stats[j] - t_oracle).abs() <= 1e-8 * t_oracle.abs().max(1.0),
                "case {case} t {j}: {} vs {t_oracle}",
                fit.t_stats[j]
            );
            assert!(
                (fit.p_values[j] - p_oracle).abs() <= 1e-6,
                "case {case} p {j}: {} vs {p_oracle}",
                fit.p_values[j]
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 10.0, "took {elapsed:?}, budget 10 s");
    println!("criterion 01 (OLS oracle equivalence, 100 instances): PASS in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// Criterion 2: Voronoi oracle equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_voronoi_oracle_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0xC2);
    let mut agree = 0u64;
    let mut judged = 0u64;
    for set in 0..20 {
        let n = 1 + (set * 37 + 11) % 200;
        let w = rng.random_range(5.0..200.0);
        let h = rng.random_range(5.0..200.0);
        let x0 = rng.random_range(-100.0..100.0);
        let y0 = rng.random_range(-100.0..100.0);
        let bbox = Rect { min_x: x0, min_y: y0, max_x: x0 + w, max_y: y0 + h };
        let sites: Vec<Site> = (0..n)
            .map(|_| Site {
                x: rng.random_range(x0..x0 + w),
                y: rng.random_range(y0..y0 + h),
                value: rng.random::<f64>(),
            })
            .collect();
        let tess = voronoi(&sites, bbox).unwrap();

        let total: f64 = tess.total_cell_area();
        assert!(
            (total - bbox.area()).abs() <= 1e-6 * bbox.area(),
            "set {set}: areas {total} vs bbox {}",
            bbox.area()
        );

        let cell_sites: Vec<Site> = tess.cells.iter().map(|c| c.site).collect();
        for _ in 0..10_000 {
            let qx = rng.random_range(x0..x0 + w);
            let qy = rng.random_range(y0..y0 + h);
            let dist = |s: &Site| ((qx - s.x).powi(2) + (qy - s.y).powi(2)).sqrt();
            let mut nearest = 0usize;
            for (j, s) in cell_sites.iter().enumerate().skip(1) {
                if dist(s) < dist(&cell_sites[nearest]) {
                    nearest = j;
                }
            }
            let own = dist(&cell_sites[nearest]);
            let tie = cell_sites
                .iter()
                .enumerate()
                .any(|(j, s)| j != nearest && dist(s) - own < 1e-9);
            if tie {
                continue;
            }
            judged += 1;
            if point_in_polygon(qx, qy, &tess.cells[nearest].polygon) {
                agree += 1;
            }
        }
    }
    let rate = agree as f64 / judged as f64;
    assert!(rate >= 0.999, "agreement {rate} over {judged} judged queries");
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}, budget 30 s");
    println!(
        "criterion 02 (Voronoi oracle, 20 sets, agreement {:.5}): PASS in {elapsed:?}",
        rate
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: interpolation exactness on affine functions
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_interpolation_exactness() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC3);
    for case in 0..10_000 {
        let a = rng.random_range(-5.0..5.0);
        let b = rng.random_range(-5.0..5.0);
        let x1 = rng.random_range(-100.0..100.0);
        let mut dx = rng.random_range(1e-3..100.0);
        if rng.random::<bool>() {
            dx = -dx;
        }
        let x2 = x1 + dx;
        let x = x1 + rng.random::<f64>() * (x2 - x1);
        let p = InterpolationPoint { x1, y1: a * x1 + b, x2, y2: a * x2 + b };
        let got = interpolate_linear(&p, x).unwrap();
        let exact = a * x + b;
        let scale = exact.abs().max(p.y1.abs()).max(p.y2.abs()).max(1.0);
        assert!(
            (got - exact).abs() <= 1e-12 * scale,
            "case {case}: {got} vs {exact} (scale {scale})"
        );
    }
    println!("criterion 03 (interpolation exact on 10,000 affine cases): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 4: RBM correctness
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_rbm_correctness() {
    let start = Instant::now();

    // Zero parameters: probabilities are exactly one half.
    let layer = RbmLayer::zeros(5, 4);
    let h = layer.hidden_probs(array![0.3, 0.9, 0.1, 0.5, 0.7].view()).unwrap();
    assert!(h.iter().all(|&p| p == 0.5));
    let v = layer.visible_probs(array![1.0, 0.0, 0.25, 0.75].view()).unwrap();
    assert!(v.iter().all(|&p| p == 0.5));

    // Brute-force free energy over all four visible states of a 2x2 RBM
    // trained on one pattern.
    let pattern = array![[1.0, 0.0]];
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut trained = RbmLayer::random(2, 2, 0.01, &mut rng);
    for _ in 0..500 {
        let (next, _) = cd1_step(&trained, pattern.view(), 0.2, &mut rng, true).unwrap();
        trained = next;
    }
    let f = |a: f64, b: f64| trained.free_energy(array![a, b].view()).unwrap();
    for (a, b) in [(0.0, 0.0), (0.0, 1.0), (1.0, 1.0)] {
        assert!(f(1.0, 0.0) < f(a, b), "free energy of (1,0) vs ({a},{b})");
    }

    // CD-1 reconstruction error decreases on the two-pattern task for at
    // least 18 of 20 seeds. One epoch = one pass over both patterns.
    let patterns = [array![[0.0, 1.0]], array![[1.0, 0.0]]];
    let mut improved = 0;
    for seed in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layer = RbmLayer::random(2, 2, 0.01, &mut rng);
        let mut errors = Vec::with_capacity(200);
        for _ in 0..200 {
            let mut epoch_err = 0.0;
            for pattern in &patterns {
                let (next, err) = cd1_step(&layer, pattern.view(), 0.1, &mut rng, true).unwrap();
                layer = next;
                epoch_err += err;
            }
            errors.push(epoch_err / patterns.len() as f64);
        }
        let first: f64 = errors[..10].iter().sum::<f64>() / 10.0;
        let last: f64 = errors[190..].iter().sum::<f64>() / 10.0;
        if last < first {
            improved += 1;
        }
    }
    assert!(improved >= 18, "reconstruction improved for only {improved}/20 seeds");

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}, budget 60 s");
    println!(
        "criterion 04 (RBM: half-probabilities, free energy, CD-1 improves {improved}/20): PASS in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// Criterion 5: logistic-regression gradient check
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_logistic_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xC5);
    for case in 0..20 {
        let n = rng.random_range(6..30);
        let p = rng.random_range(1..6);
        let k = rng.random_range(2..=5);
        let x = Array2::from_shape_fn((n, p), |_| rng.random_range(-2.0..2.0));
        let y_idx: Vec<usize> = (0..n).map(|i| if i < k { i } else { rng.random_range(0..k) }).collect();
        let x_aug = logistic::augment(&x);
        let w = Array2::from_shape_fn((p + 1, k), |_| rng.random_range(-0.5..0.5));

        let (_, grad) = logistic::loss_and_gradient(&x_aug, &y_idx, &w);
        let h = 1e-5;
        for i in 0..p + 1 {
            for j in 0..k {
                let mut wp = w.clone();
                wp[[i, j]] += h;
                let (lp, _) = logistic::loss_and_gradient(&x_aug, &y_idx, &wp);
                let mut wm = w.clone();
                wm[[i, j]] -= h;
                let (lm, _) = logistic::loss_and_gradient(&x_aug, &y_idx, &wm);
                let numeric = (lp - lm) / (2.0 * h);
                let analytic = grad[[i, j]];
                let rel =
                    (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
                assert!(rel <= 1e-4, "case {case} grad[{i},{j}]: rel err {rel}");
            }
        }
    }
    println!("criterion 05 (logistic gradient vs central differences, 20 instances): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 6: planted-signal end to end
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_planted_signal_end_to_end() {
    let start = Instant::now();
    let seed = 42u64;
    let session = generate_synthetic_session(&SynthConfig::default(), seed).unwrap();
    let table = fuse(&session.bundle).unwrap();
    assert!(
        (1400..=1600).contains(&table.n_rows()),
        "expected ~1500 fused rows, got {}",
        table.n_rows()
    );

    let channels = default_stats_channels(&table);
    let raw = build_row_dataset(&table, &channels, Modality::All).unwrap();

    // DBN features: single hidden layer of 10 (the pipeline default).
    let cfg = TrainConfig { seed: derive_seed(seed, "dbn:all"), ..TrainConfig::default() };
    let sizes = vec![raw.n_features(), 10];
    let model = train_dbn(raw.x.view(), &cfg, &sizes).unwrap();
    let features = model.extract_features(raw.x.view()).unwrap();
    let names = (0..features.ncols()).map(|i| format!("dbn_{i}")).collect();
    let dbn_ds = LabeledDataset::new(
        features,
        raw.y.clone(),
        names,
        Provenance::DbnFeatures,
        Modality::All,
    )
    .unwrap();

    let stat_ds = statistical_features(&table.select_channels(&channels), 10, 10).unwrap();

    let rf = RandomForestTrainer::default();
    let cv_seed = derive_seed(seed, "cv");
    let dbn_report = kfold_cv(&rf, &dbn_ds, 10, cv_seed).unwrap();
    let stat_report = kfold_cv(&rf, &stat_ds, 10, cv_seed).unwrap();

    assert!(
        dbn_report.mean_accuracy >= 0.60,
        "DBN+RF accuracy {} below 0.60 (chance 0.20)",
        dbn_report.mean_accuracy
    );
    assert!(
        dbn_report.mean_accuracy >= stat_report.mean_accuracy - 0.05,
        "DBN+RF {} must stay within 0.05 of statistical-feature RF {}",
        dbn_report.mean_accuracy,
        stat_report.mean_accuracy
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}, budget 5 min");
    println!(
        "criterion 06 (planted signal: DBN+RF {:.3} vs stat RF {:.3} on {} rows): PASS in {elapsed:?}",
        dbn_report.mean_accuracy,
        stat_report.mean_accuracy,
        table.n_rows()
    );
}

// ---------------------------------------------------------------------------
// Criterion 7: modality ablation pattern
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_modality_ablation_pattern() {
    let start = Instant::now();
    // Labels derive from the pollution latent (with a minor body share),
    // so pollution genuinely drives them.
    let seed = 11u64;
    let session = generate_synthetic_session(&SynthConfig::default(), seed).unwrap();
    let table = fuse(&session.bundle).unwrap();

    let d_all =
        build_row_dataset(&table, &default_stats_channels(&table), Modality::All).unwrap();
    let d_pollution = build_row_dataset(
        &table,
        &table.channels_of_kind(ChannelKind::Environment),
        Modality::Pollution,
    )
    .unwrap();
    let d_physio = build_row_dataset(
        &table,
        &table.channels_of_kind(ChannelKind::Physiology),
        Modality::Physiological,
    )
    .unwrap();

    let rf = RandomForestTrainer::default();
    let [all, pollution, physio] =
        modality_ablation(&d_all, &d_pollution, &d_physio, &rf, 10, derive_seed(seed, "cv"))
            .unwrap();

    assert!(
        pollution.mean_accuracy >= physio.mean_accuracy,
        "pollution-only {} should reach physio-only {}",
        pollution.mean_accuracy,
        physio.mean_accuracy
    );
    assert!(
        all.mean_accuracy >= pollution.mean_accuracy - 0.02,
        "all {} vs pollution {}",
        all.mean_accuracy,
        pollution.mean_accuracy
    );
    assert!(
        all.mean_accuracy >= physio.mean_accuracy - 0.02,
        "all {} vs physio {}",
        all.mean_accuracy,
        physio.mean_accuracy
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}, budget 5 min");
    println!(
        "criterion 07 (ablation: all {:.3} >= pollution {:.3} - 0.02 >= physio {:.3} pattern): PASS in {elapsed:?}",
        all.mean_accuracy, pollution.mean_accuracy, physio.mean_accuracy
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: PCA properties
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_pca_properties() {
    // Points exactly on a line explain everything with one component.
    let x: Vec<f64> = (0..200).map(|i| i as f64 / 199.0).collect();
    let y: Vec<f64> = x.iter().map(|v| -0.7 * v + 0.2).collect();
    let line = table_from_columns(&[("x", x), ("y", y)]);
    let p = pca(&line, &["x".into(), "y".into()]).unwrap();
    assert!((p.explained_ratio[0] - 1.0).abs() <= 1e-9);
    assert!(p.explained_ratio[1].abs() <= 1e-9);

    // Random 5-channel table: full reconstruction and variance budget.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC8);
    let cols: Vec<(String, Vec<f64>)> = (0..5)
        .map(|j| {
            (
                format!("c{j}"),
                (0..200).map(|_| rng.random::<f64>()).collect::<Vec<f64>>(),
            )
        })
        .collect();
    let borrowed: Vec<(&str, Vec<f64>)> =
        cols.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
    let table = table_from_columns(&borrowed);
    let names: Vec<String> = cols.iter().map(|(n, _)| n.clone()).collect();
    let p = pca(&table, &names).unwrap();

    let n = 200.0;
    let mut total_var = 0.0;
    let mut centered = Array2::zeros((200, 5));
    for (j, (_, col)) in cols.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        total_var += var;
        for (i, v) in col.iter().enumerate() {
            centered[[i, j]] = v - mean;
        }
    }
    let eigen_sum: f64 = p.eigenvalues.iter().sum();
    assert!((eigen_sum - total_var).abs() <= 1e-9, "{eigen_sum} vs {total_var}");

    let recon = p.scores.dot(&p.loadings.t());
    for (a, b) in centered.iter().zip(recon.iter()) {
        assert!((a - b).abs() <= 1e-9);
    }
    let ratio_sum: f64 = p.explained_ratio.iter().sum();
    assert!((ratio_sum - 1.0).abs() <= 1e-9);
    println!("criterion 08 (PCA line ratios, reconstruction, variance budget): PASS");
}

// ---------------------------------------------------------------------------
// Criterion 9: end-to-end determinism
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_run_determinism() {
    let dir_a = tempfile::tempdir().unwrap();
    let dir_b = tempfile::tempdir().unwrap();
    let mut cfg = PipelineConfig { seed: Some(7), ..PipelineConfig::default() };

    cfg.out_dir = Some(dir_a.path().to_path_buf());
    let report_a = run_pipeline(&cfg).unwrap();
    assert!(report_a.success, "first run failed: {:?}", report_a.failed_stage());

    cfg.out_dir = Some(dir_b.path().to_path_buf());
    let report_b = run_pipeline(&cfg).unwrap();
    assert!(report_b.success);

    assert_eq!(report_a.artifacts, report_b.artifacts, "artifact hash inventories differ");
    assert!(report_a.artifacts.len() >= 10, "expected a full artifact set");
    for name in report_a.artifacts.keys() {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "artifact {name} differs between runs");
    }
    println!(
        "criterion 09 (two seed-7 runs byte-identical across {} artifacts): PASS",
        report_a.artifacts.len()
    );
}

// ---------------------------------------------------------------------------
// Criterion 10: full-study-scale smoke
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_scale_smoke() {
    // A 13,660 s session fuses to 13,661 grid rows (the 20 s loggers bind
    // the overlap to multiples of 20); trim to exactly the study-scale
    // 13,658 rows before timing the analyses.
    let cfg = SynthConfig { duration_s: 13_660, ..SynthConfig::default() };
    let session = generate_synthetic_session(&cfg, 7).unwrap();

    let start = Instant::now();
    let mut table = fuse(&session.bundle).unwrap();
    table.times_s.truncate(13_658);
    for col in &mut table.columns {
        col.truncate(13_658);
    }
    table.geo.truncate(13_658);
    table.labels.truncate(13_658);
    assert_eq!(table.n_rows(), 13_658);
    assert_eq!(table.channels.len(), 14, "all channels minus the constant one");

    let channels = default_stats_channels(&table);
    pearson_matrix(&table, &channels).unwrap();
    pca(&table, &channels).unwrap();
    let reg = ols_regress(
        &table,
        "eda",
        &[
            "nh3".into(),
            "noise".into(),
            "oxidised".into(),
            "pm1".into(),
            "pm10".into(),
            "pm25".into(),
            "reduced".into(),
        ],
    )
    .unwrap();
    qq_data(&reg.residuals).unwrap();

    let (sites, projection) = sites_from_table(&table, &SiteValue::Label).unwrap();
    assert!(sites.len() > 10_000, "route should produce many distinct sites");
    let planar: Vec<(f64, f64)> = sites.iter().map(|s| (s.x, s.y)).collect();
    let bbox = Rect::around_points(&planar, 25.0).unwrap();
    let tess = voronoi(&sites, bbox).unwrap();
    let tess = classify_cells(&tess, &[1.5, 2.5, 3.5, 4.5]).unwrap();
    let geojson = tessellation_to_geojson(&tess, &projection);
    assert!(geojson.len() > 1000);
    let area: f64 = tess.cells.iter().map(|c| polygon_area(&c.polygon)).sum();
    assert!((area - bbox.area()).abs() <= 1e-6 * bbox.area());
    grid_heatmap(&table, "pm25", 25.0).unwrap();

    let elapsed = start.elapsed();
    assert!(
        elapsed.as_secs_f64() < 30.0,
        "fuse+stats+spatial took {elapsed:?}, budget 30 s"
    );
    println!(
        "criterion 10 (scale smoke: {} rows, {} sites in {elapsed:?}): PASS",
        table.n_rows(),
        sites.len()
    );
}
