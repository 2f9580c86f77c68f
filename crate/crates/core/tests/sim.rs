mod common;

use embkernel::seq::ExposureModel;
use embkernel::sim::{
    empirical_distribution, mixture_distribution, random_unit_vector, rankings_for_user, recovery_with_exposure,
    sample_items, simulate, total_variation, zipf_exposure, SimConfig,
};
use embkernel::EmbeddingTable;
use proptest::prelude::*;

fn naive_mixture(t: &EmbeddingTable, p0: &[f64], lambda: f64, s: &[f64]) -> Vec<f64> {
    let e: Vec<f64> = (0..t.len()).map(|i| t.row(i).iter().zip(s).map(|(a, b)| a * b).sum::<f64>().exp()).collect();
    let z: f64 = e.iter().sum();
    assert!(z > 0.0);
    p0.iter().zip(&e).map(|(p, x)| lambda * p + (1.0 - lambda) * x / z).collect()
}

fn softmax(t: &EmbeddingTable, s: &[f64]) -> Vec<f64> {
    naive_mixture(t, &vec![0.0; t.len()], 0.0, s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mixture_is_a_distribution(seed in any::<u64>(), lambda in 0.001f64..0.999, skew in 0.0f64..3.0) {
        let t = common::gaussian_table(60, 5, seed);
        let p0 = zipf_exposure(60, skew);
        let s = random_unit_vector(5, seed);
        let p = mixture_distribution(&t, &p0, lambda, &s);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| *x > 0.0));
        for (a, b) in p.iter().zip(naive_mixture(&t, &p0, lambda, &s)) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zipf_is_normalised_and_decreasing(n in 1usize..500, skew in 0.0f64..4.0) {
        let p = zipf_exposure(n, skew);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.windows(2).all(|w| w[0] >= w[1]));
    }
}

#[test]
fn mixture_survives_large_logits() {
    // the max-shift keeps Z finite where a plain exp overflows
    let t = EmbeddingTable::from_rows(&[vec![800.0], vec![790.0], vec![0.0]]).unwrap();
    let p = mixture_distribution(&t, &[0.2, 0.3, 0.5], 0.5, &[1.0]);
    assert!(p.iter().all(|x| x.is_finite()));
    assert!((p[0] - (0.1 + 0.5 / (1.0 + (-10.0f64).exp()))).abs() < 1e-12);
}

#[test]
fn empirical_draws_match_mixture() {
    let t = common::gaussian_table(100, 8, 4);
    let p0 = zipf_exposure(100, 1.5);
    let p = mixture_distribution(&t, &p0, 0.5, &random_unit_vector(8, 4));
    let draws = sample_items(&p, 200_000, 9);
    let tv = total_variation(&p, &empirical_distribution(&draws, 100));
    assert!(tv < 0.02, "tv {tv}");
}

#[test]
fn lambda_limits_reach_the_components() {
    let t = common::gaussian_table(100, 8, 6);
    let p0 = zipf_exposure(100, 1.2);
    let s = random_unit_vector(8, 6);
    let near_exposure = mixture_distribution(&t, &p0, 0.999, &s);
    assert!(total_variation(&near_exposure, &p0) <= 0.001);
    let near_softmax = mixture_distribution(&t, &p0, 0.001, &s);
    assert!(total_variation(&near_softmax, &softmax(&t, &s)) <= 0.001);
}

#[test]
fn total_variation_examples() {
    assert_eq!(total_variation(&[0.5, 0.5], &[0.5, 0.5]), 0.0);
    assert_eq!(total_variation(&[1.0, 0.0], &[0.0, 1.0]), 1.0);
    assert!((total_variation(&[0.2, 0.3, 0.5], &[0.3, 0.3, 0.4]) - 0.1).abs() < 1e-15);
}

#[test]
fn uniform_exposure_is_a_null_control() {
    // with flat p0 every weight is equal, so weighting cannot change a ranking
    let sim = simulate(&SimConfig {
        catalog_size: 120,
        num_users: 60,
        ..Default::default()
    })
    .unwrap();
    let flat = ExposureModel::new(vec![1.0 / 120.0; 120], 1.0 / 120.0).unwrap();
    let r = recovery_with_exposure(&sim, &flat, &[1e-3, 1.0]).unwrap();
    assert_eq!(r.identical_rank_fraction, 1.0);
    assert!(r.mrr_gain.abs() < 1e-12);
    for u in 0..sim.sequences.len() {
        let (a, b) = rankings_for_user(&sim, &flat, u).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn recovery_report_shape() {
    let sim = simulate(&SimConfig {
        catalog_size: 80,
        num_users: 40,
        ..Default::default()
    })
    .unwrap();
    let grid = [1e-3, 1e-2, 1e-1];
    let r = recovery_with_exposure(&sim, &sim.exposure, &grid).unwrap();
    assert_eq!(r.users, 40);
    assert_eq!(r.rows.len(), 3);
    assert!(r.unweighted.alpha.is_none());
    assert!(grid.contains(&r.best_mrr_alpha) && grid.contains(&r.best_cosine_alpha));
    let best = r.rows.iter().map(|x| x.mean_cosine).fold(f64::MIN, f64::max);
    assert!((r.cosine_gain - (best - r.unweighted.mean_cosine)).abs() < 1e-12);
    for row in &r.rows {
        assert!((0.0..=1.0).contains(&row.mean_mrr) && (-1.0..=1.0).contains(&row.mean_cosine));
    }
}

#[test]
fn simulation_dataset_holds_out_last_item() {
    let sim = simulate(&SimConfig {
        catalog_size: 30,
        num_users: 10,
        history_len: 5,
        ..Default::default()
    })
    .unwrap();
    let d = sim.dataset().unwrap();
    for u in 0..10 {
        assert_eq!(d.test(u) as usize, sim.truth(u));
        assert_eq!(sim.history(u).len(), 5);
    }
}
