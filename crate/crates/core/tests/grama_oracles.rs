use plastic_replay_core::grama::{grad_l1, grama_scores, inactive_fraction, GramaReport};
use plastic_replay_core::nn::{GradientRecord, Mlp};
use plastic_replay_core::seeding::stream;
use proptest::prelude::*;
use rand::Rng;

fn layers() -> impl Strategy<Value = Vec<Vec<f64>>> {
    proptest::collection::vec(proptest::collection::vec(0.0f64..5.0, 1..40), 1..5)
}

proptest! {
    #[test]
    fn layer_mean_is_one(mags in layers()) {
        let scores = grama_scores(&mags);
        for (layer, s) in mags.iter().zip(&scores) {
            let mean = layer.iter().sum::<f64>() / layer.len() as f64;
            if mean >= 1e-12 {
                let m = s.iter().sum::<f64>() / s.len() as f64;
                prop_assert!((m - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn inactive_fraction_counts(mags in layers(), tau in 0.0f64..2.0) {
        let scores = grama_scores(&mags);
        let flat: Vec<f64> = scores.iter().flatten().copied().collect();
        let brute = flat.iter().filter(|&&s| s <= tau).count() as f64 / flat.len() as f64;
        prop_assert_eq!(inactive_fraction(&scores, tau), brute);
    }
}

#[test]
fn pinned_example() {
    assert_eq!(
        grama_scores(&[vec![2.0, 0.0, 0.0, 2.0]]),
        vec![vec![2.0, 0.0, 0.0, 2.0]]
    );
}

#[test]
fn l1_matches_flatten_and_sum() {
    for seed in 0..10 {
        let mut rng = stream(seed, "record", 0);
        let net = Mlp::init(&[3, 8, 8, 2], &mut rng).unwrap();
        let mut record = GradientRecord::zeros_like(&net);
        for _ in 0..16 {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            let (_, cache) = net.forward(&x).unwrap();
            let g = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
            record
                .accumulate(&net.backward(&cache, &g).unwrap())
                .unwrap();
        }
        let flat: f64 = record.params.iter().map(|g| g.abs()).sum::<f64>() / 16.0;
        assert!((grad_l1(&record) - flat).abs() < 1e-12);
        let report = GramaReport::from_record(&record, 0.1);
        assert_eq!(report.scores.len(), 2);
    }
}
