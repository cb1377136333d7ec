mod common;

use std::collections::{BTreeSet, HashMap};

use proptest::prelude::*;

use common::{averaged_curve, calibrated, frame_std, noiseless, sweep};
use taxel_calib::fit::evaluate_polynomial;
use taxel_calib::force::{activated_taxels, estimate_force, taxel_pressure};
use taxel_calib::io::render_model;
use taxel_calib::pipeline::{average_duplicates, calibrate, taxel_series, CalibrationConfig};
use taxel_calib::sim::{pressure_for_counts, SimConfig, SimSkin, GRAVITY};
use taxel_calib::{CapacitanceFrame, ExclusionReason, RawCount, TaxelId};

#[test]
fn noiseless_series_is_monotone() {
    let (_, dataset) = sweep(&noiseless());
    for t in dataset.geometry().taxel_ids() {
        let series = taxel_series(&dataset, t).unwrap();
        assert!(series.windows(2).all(|w| w[0].1 <= w[1].1), "taxel {t:?}");
    }
}

#[test]
fn dead_taxels_barely_move() {
    let config = SimConfig {
        noise_sigma: 0.3,
        ..Default::default()
    };
    let (skin, dataset) = sweep(&config);
    let dead = skin.dead_taxels();
    assert_eq!(dead.len(), 11);
    for &t in &dead {
        let series = taxel_series(&dataset, t).unwrap();
        let lo = series.iter().map(|s| s.1).min().unwrap();
        let hi = series.iter().map(|s| s.1).max().unwrap();
        assert!(
            hi.abs_diff(lo) <= 2,
            "dead taxel {t:?} spans {lo:?}..{hi:?}"
        );
    }
}

#[test]
fn binning_matches_hash_grouping() {
    let (_, dataset) = sweep(&SimConfig::default());
    let width = 2_500.0;
    for t in [TaxelId(0), TaxelId(57), TaxelId(229)] {
        let series = taxel_series(&dataset, t).unwrap();
        let mut groups: HashMap<i64, Vec<(f64, f64)>> = HashMap::new();
        for &(p, r) in &series {
            groups
                .entry((p / width).floor() as i64)
                .or_default()
                .push((p, r.as_f64()));
        }
        let mut keys: Vec<_> = groups.keys().copied().collect();
        keys.sort_unstable();
        let got = average_duplicates(&series, width);
        assert_eq!(got.len(), keys.len());
        for (pt, k) in got.iter().zip(keys) {
            let g = &groups[&k];
            let n = g.len() as f64;
            let p = g.iter().map(|x| x.0).sum::<f64>() / n;
            let r = g.iter().map(|x| x.1).sum::<f64>() / n;
            assert!((pt.pressure - p).abs() <= 1e-9 * p.max(1.0));
            assert!((pt.mean_raw - r).abs() <= 1e-12 * r.max(1.0));
        }
    }
}

#[test]
fn default_skin_excludes_exactly_dead_set() {
    let (skin, _, model) = calibrated(&SimConfig::default());
    let excluded: BTreeSet<TaxelId> = model
        .taxels()
        .iter()
        .filter(|t| t.is_excluded())
        .map(|t| t.taxel)
        .collect();
    assert_eq!(excluded, skin.dead_taxels());
    assert!(model
        .taxels()
        .iter()
        .filter_map(|t| t.exclusion())
        .all(|r| r == ExclusionReason::LowAmplitude));
}

#[test]
fn exclusion_grows_with_threshold() {
    let (_, dataset) = sweep(&SimConfig::default());
    let mut previous: Option<BTreeSet<TaxelId>> = None;
    for threshold in [0u8, 5, 10, 40, 60, 90, 130] {
        let config = CalibrationConfig {
            amplitude_threshold: threshold,
            ..Default::default()
        };
        let excluded: BTreeSet<TaxelId> = match calibrate(&dataset, &config) {
            Ok(m) => m
                .taxels()
                .iter()
                .filter(|t| t.is_excluded())
                .map(|t| t.taxel)
                .collect(),
            Err(_) => dataset.geometry().taxel_ids().collect(),
        };
        if let Some(prev) = &previous {
            assert!(prev.is_subset(&excluded), "threshold {threshold}");
        }
        previous = Some(excluded);
    }
}

#[test]
fn model_output_is_bitwise_deterministic() {
    let config = SimConfig {
        seed: 99,
        ..Default::default()
    };
    let (_, _, a) = calibrated(&config);
    let (_, _, b) = calibrated(&config);
    assert_eq!(render_model(&a, 0), render_model(&b, 0));
}

#[test]
fn spread_grows_with_pressure() {
    let mut skin = SimSkin::from_config(&SimConfig::default()).unwrap();
    let low = frame_std(&skin.sample_frame(0.0).unwrap().frame);
    let high = frame_std(&skin.sample_frame(70_000.0).unwrap().frame);
    assert!(high >= 3.0 * low, "std {low} at rest vs {high} at 70 kPa");
}

#[test]
fn c_min_is_near_zero_load_reading() {
    let (skin, _, model) = calibrated(&noiseless());
    for (t, truth) in model.taxels().iter().zip(skin.taxels()) {
        assert_eq!(t.c_min, RawCount::quantize(truth.offset));
    }
}

#[test]
fn simulated_noise_has_configured_spread() {
    let config = SimConfig {
        noise_sigma: 2.0,
        dead_fraction: 0.0,
        ..Default::default()
    };
    let mut skin = SimSkin::from_config(&config).unwrap();
    let frames: Vec<CapacitanceFrame> = (0..400)
        .map(|_| skin.sample_frame(20_000.0).unwrap().frame)
        .collect();
    let n = frames.len() as f64;
    let mut var = 0.0;
    let taxels = skin.geometry().n_taxels();
    for i in 0..taxels {
        let xs: Vec<f64> = frames.iter().map(|f| f.counts()[i].as_f64()).collect();
        let m = xs.iter().sum::<f64>() / n;
        var += xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    }
    // Quantization adds 1/12 count² of variance on top of the Gaussian noise.
    let std = (var / taxels as f64 - 1.0 / 12.0).sqrt();
    assert!((std - 2.0).abs() <= 0.15 * 2.0, "measured {std}");
}

#[test]
fn averaged_curve_is_monotone_and_concave() {
    let (_, dataset) = sweep(&SimConfig::default());
    let curve = averaged_curve(&dataset);
    assert!(curve.windows(2).all(|w| w[1].1 > w[0].1));
    // Each point averages 230 taxels x 3 samples of Gaussian plus
    // quantization noise; a second difference carries six times that variance.
    let point_var = (0.5f64.powi(2) + 1.0 / 12.0) / (230.0 * 3.0);
    let tolerance = 4.0 * (6.0 * point_var).sqrt();
    let worst = curve
        .windows(3)
        .map(|w| w[2].1 - 2.0 * w[1].1 + w[0].1)
        .fold(f64::MIN, f64::max);
    assert!(
        worst <= tolerance,
        "largest second difference {worst} > {tolerance}"
    );
    // At 10 kPa spacing the curvature dominates the noise outright.
    let coarse: Vec<f64> = curve.iter().step_by(10).map(|c| c.1).collect();
    assert!(coarse.windows(3).all(|w| w[2] - 2.0 * w[1] + w[0] < 0.0));
}

#[test]
fn mid_range_pressure_tracks_ground_truth() {
    let (skin, _, model) = calibrated(&noiseless());
    let area = skin.geometry().taxel_area();
    for (t, truth) in model.taxels().iter().zip(skin.taxels()) {
        let rms = t.residual_rms().unwrap();
        let mid = ((t.c_min.as_f64() + t.c_max.as_f64()) / 2.0).round();
        let (estimate, clamped) = taxel_pressure(&model, t.taxel, RawCount(mid as u8)).unwrap();
        let actual = pressure_for_counts(truth, mid, area).unwrap();
        assert!(!clamped);
        assert!(
            (estimate - actual).abs() <= 3.0 * rms.max(100.0),
            "taxel {:?}: {estimate} vs {actual} (rms {rms})",
            t.taxel
        );
    }
}

#[test]
fn one_kilogram_patch_activates_its_live_taxels() {
    let config = SimConfig {
        noise_sigma: 0.0,
        ..Default::default()
    };
    let (mut skin, _, model) = calibrated(&config);
    let baseline = skin.capture_baseline(16).unwrap();
    let patch: BTreeSet<TaxelId> = (100..130).map(TaxelId).collect();
    let (frame, force) = skin.generate_validation_frame(1.0, &patch).unwrap();
    assert_eq!(force, GRAVITY);
    let live: BTreeSet<TaxelId> = patch.difference(&skin.dead_taxels()).copied().collect();
    assert_eq!(activated_taxels(&frame, &baseline, &model).unwrap(), live);
}

#[test]
fn excluded_taxels_never_contribute() {
    let (_, _, model) = calibrated(&SimConfig::default());
    let excluded: Vec<TaxelId> = model
        .taxels()
        .iter()
        .filter(|t| t.is_excluded())
        .map(|t| t.taxel)
        .collect();
    assert!(!excluded.is_empty());
    let n = model.geometry().n_taxels();
    let baseline = CapacitanceFrame::from_u8(&vec![0; n]);
    let mut frame = CapacitanceFrame::from_u8(&vec![0; n]);
    for t in &excluded {
        frame.counts_mut()[t.index()] = RawCount(255);
    }
    let est = estimate_force(&frame, &baseline, &model).unwrap();
    assert_eq!(est.total_force.to_bits(), 0.0f64.to_bits());
    assert_eq!(est.n_activated, 0);
}

#[test]
fn force_scales_with_taxel_area() {
    let (mut skin, _, model) = calibrated(&SimConfig::default());
    let baseline = skin.capture_baseline(8).unwrap();
    let patch: BTreeSet<TaxelId> = (0..40).map(TaxelId).collect();
    let (frame, _) = skin.generate_validation_frame(0.6, &patch).unwrap();
    let a = estimate_force(&frame, &baseline, &model).unwrap();
    let doubled = model
        .with_taxel_area(2.0 * model.geometry().taxel_area())
        .unwrap();
    let b = estimate_force(&frame, &baseline, &doubled).unwrap();
    assert_eq!(b.total_force, 2.0 * a.total_force);
}

mod properties {
    use super::*;
    use std::sync::OnceLock;
    use taxel_calib::SkinModel;

    fn fixture() -> &'static (SkinModel, CapacitanceFrame) {
        static CELL: OnceLock<(SkinModel, CapacitanceFrame)> = OnceLock::new();
        CELL.get_or_init(|| {
            let (mut skin, _, model) = calibrated(&SimConfig::default());
            let baseline = skin.capture_baseline(16).unwrap();
            (model, baseline)
        })
    }

    fn frame_strategy() -> impl Strategy<Value = Vec<u8>> {
        prop::collection::vec(any::<u8>(), 230)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn force_is_additive_over_disjoint_taxels(raw in frame_strategy(), split in 1usize..229) {
            let (model, baseline) = fixture();
            let full = CapacitanceFrame::from_u8(&raw);
            let mut left = baseline.clone();
            let mut right = baseline.clone();
            left.counts_mut()[..split].copy_from_slice(&full.counts()[..split]);
            right.counts_mut()[split..].copy_from_slice(&full.counts()[split..]);
            let f = estimate_force(&full, baseline, model).unwrap().total_force;
            let l = estimate_force(&left, baseline, model).unwrap().total_force;
            let r = estimate_force(&right, baseline, model).unwrap().total_force;
            prop_assert!((f - (l + r)).abs() <= 1e-9 * f.abs().max(1e-9));
        }

        #[test]
        fn pressure_is_non_negative_and_bounded(taxel in 0usize..230, raw in any::<u8>()) {
            let (model, _) = fixture();
            let t = model.taxel(TaxelId(taxel)).unwrap();
            if let Some(coeffs) = t.coeffs() {
                let (p, clamped) = taxel_pressure(model, t.taxel, RawCount(raw)).unwrap();
                prop_assert!(p >= 0.0);
                prop_assert_eq!(clamped, RawCount(raw) < t.c_min || RawCount(raw) > t.c_max);
                if RawCount(raw) > t.c_max {
                    prop_assert_eq!(p, evaluate_polynomial(coeffs, 1.0).max(0.0));
                }
            }
        }
    }

    #[test]
    fn force_grows_with_uniform_pressure() {
        let (mut skin, _, model) = calibrated(&noiseless());
        let baseline = skin.capture_baseline(1).unwrap();
        let mut last = 0.0;
        for kpa in [5.0, 15.0, 30.0, 45.0, 60.0] {
            let frame = skin.sample_frame(kpa * 1000.0).unwrap().frame;
            let f = estimate_force(&frame, &baseline, &model)
                .unwrap()
                .total_force;
            assert!(f > last, "{kpa} kPa gave {f} N after {last} N");
            last = f;
        }
    }
}
