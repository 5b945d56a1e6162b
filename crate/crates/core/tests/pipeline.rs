use dga_core::evaluation::rng_for;
use dga_core::features::build_features;
use dga_core::gbt::{GbtConfig, GbtModel};
use dga_core::io::{
    dataset_to_csv, generate_synthetic, load_model, parse_dataset, save_model, write_dataset,
    ModelFile, DEFAULT_CLASS_COUNTS,
};
use dga_core::itd::{itd_decompose, itd_single_stage};
use dga_core::ranking::{canonical_rank_order, rank_params};
use dga_core::FaultLabel;
use rand::Rng;
use std::path::Path;

fn small_config() -> GbtConfig {
    GbtConfig {
        rounds: 15,
        ..GbtConfig::default()
    }
}

#[test]
fn saved_model_predicts_identically_on_random_rows() {
    let samples = generate_synthetic(5, &DEFAULT_CLASS_COUNTS);
    let order = rank_params(&samples).unwrap();
    let fm = build_features(&samples, &order, 24).unwrap();
    let labels = fm.require_labels().unwrap();
    let model = GbtModel::train(&fm.rows, &labels, &small_config(), 5).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.json");
    save_model(&path, &ModelFile::new(model.clone(), order.clone(), 24)).unwrap();
    let loaded = load_model(&path).unwrap();
    assert_eq!(loaded.rank_order, order);
    assert_eq!(loaded.k, 24);

    let mut rng = rng_for(99, 0);
    for _ in 0..100 {
        let row: Vec<f64> = (0..24).map(|_| rng.gen_range(-50.0..50.0)).collect();
        let (a, b) = (
            model.predict_proba(&row).unwrap(),
            loaded.model.predict_proba(&row).unwrap(),
        );
        assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
    }
}

#[test]
fn per_feature_rescaling_keeps_training_predictions() {
    let mut rng = rng_for(3, 0);
    let labels: Vec<FaultLabel> = (0..120).map(|i| FaultLabel::ALL[i % 6]).collect();
    // Values on a 1/8 grid so scaling by 10 is exact and order-preserving.
    let rows: Vec<Vec<f64>> = labels
        .iter()
        .map(|l| {
            (0..5)
                .map(|d| (l.index() as f64 * (d as f64 + 1.0) + rng.gen_range(-4..4) as f64) / 8.0)
                .collect()
        })
        .collect();
    let scaled: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| r.iter().map(|v| v * 10.0).collect())
        .collect();
    let a = GbtModel::train(&rows, &labels, &small_config(), 1).unwrap();
    let b = GbtModel::train(&scaled, &labels, &small_config(), 1).unwrap();
    for (r, s) in rows.iter().zip(&scaled) {
        assert_eq!(a.predict_proba(r).unwrap(), b.predict_proba(s).unwrap());
    }
}

#[test]
fn csv_write_then_load_is_identity() {
    let samples = generate_synthetic(12, &[3, 2, 4, 1, 0, 2]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("data.csv");
    write_dataset(&path, &samples).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text, dataset_to_csv(&samples));
    assert_eq!(
        parse_dataset(text.as_bytes(), Path::new("mem")).unwrap(),
        samples
    );
}

#[test]
fn multi_stage_parts_sum_back_to_signal() {
    // Later-stage baselines leave the input's binary grid, so each of the
    // three stages may leave half an ulp of its parts (all below 4 here).
    let tol = 3.0 * 0.5 * f64::EPSILON * 4.0;
    let mut rng = rng_for(64, 0);
    for _ in 0..50 {
        let x: Vec<f64> = (0..64).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let d = itd_decompose(&x, 3, 0.5).unwrap();
        assert_eq!(d.prcs.len(), 3);
        for (a, b) in x.iter().zip(d.reconstruct()) {
            assert!((a - b).abs() <= tol);
        }
    }
}

#[test]
fn wide_range_residual_stays_below_half_ulp() {
    // Exact splits are not always representable here; the residual is bounded.
    let mut rng = rng_for(7, 1);
    for _ in 0..200 {
        let n = rng.gen_range(3..100);
        let x: Vec<f64> = (0..n)
            .map(|_| 10f64.powf(rng.gen_range(-3.0..4.0)))
            .collect();
        let r = itd_single_stage(&x, 0.5).unwrap();
        for ((l, h), xv) in r.baseline.iter().zip(&r.prc).zip(&x) {
            assert!((l + h - xv).abs() <= 0.5 * f64::EPSILON * l.abs().max(h.abs()));
        }
    }
}

#[test]
fn canonical_features_are_deterministic_and_finite() {
    let samples = generate_synthetic(1, &DEFAULT_CLASS_COUNTS);
    let order = canonical_rank_order();
    let a = build_features(&samples, &order, 24).unwrap();
    let b = build_features(&samples, &order, 24).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.rows.len(), 376);
    assert!(a
        .rows
        .iter()
        .all(|r| r.len() == 24 && r.iter().all(|v| v.is_finite())));
}
