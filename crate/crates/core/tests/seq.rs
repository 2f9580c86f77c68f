mod common;

use common::{gaussian_table, rel_close};
use embkernel::seq::{
    build_exposure, rank_and_measure, rank_by_vector, score_candidates, score_candidates_by_kernel_sum, sequence_embed,
    sequence_kernel, sequence_ridge_predict, ExposureModel,
};
use embkernel::{kernel, random_rotation, EmbeddingTable, Error};
use proptest::prelude::*;

/// Sorts every non-excluded item by (score desc, index asc) and reads off
/// the truth's position.
fn oracle_rank(t: &EmbeddingTable, query: &[f64], truth: usize, exclude: &[usize]) -> usize {
    let mut items: Vec<(f64, usize)> = (0..t.len())
        .filter(|c| !exclude.contains(c))
        .map(|c| (t.row(c).iter().zip(query).map(|(a, b)| a * b).sum(), c))
        .collect();
    items.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    items.iter().position(|&(_, c)| c == truth).unwrap() + 1
}

fn exposure_strategy(n: usize) -> impl Strategy<Value = ExposureModel> {
    (proptest::collection::vec(0.0f64..1000.0, n), 1e-4f64..10.0)
        .prop_map(|(counts, alpha)| build_exposure(&counts, Some(alpha)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregated_scores_equal_double_sum(seed in any::<u64>(), exp in exposure_strategy(12), hist in proptest::collection::vec(0usize..12, 1..8)) {
        let t = gaussian_table(12, 5, seed);
        let cands: Vec<usize> = (0..12).collect();
        let a = score_candidates(&t, &hist, &exp, &cands).unwrap();
        let b = score_candidates_by_kernel_sum(&t, &hist, &exp, &cands).unwrap();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0));
        }
    }

    #[test]
    fn weight_strictly_decreasing_in_p0(p in proptest::collection::vec(0.01f64..1.0, 2..20), alpha in 1e-4f64..10.0) {
        let total: f64 = p.iter().sum();
        let p0: Vec<f64> = p.iter().map(|x| x / total).collect();
        let exp = ExposureModel::new(p0.clone(), alpha).unwrap();
        for i in 0..p0.len() {
            for j in 0..p0.len() {
                if p0[i] > p0[j] {
                    prop_assert!(exp.weight(i) < exp.weight(j));
                }
            }
        }
    }

    #[test]
    fn ranking_matches_full_sort(n in 2usize..200, seed in any::<u64>(), truth in 0usize..200, n_excl in 0usize..20) {
        let truth = truth % n;
        let t = gaussian_table(n, 4, seed);
        let q = gaussian_table(1, 4, seed ^ 3).row(0).to_vec();
        let exclude: Vec<usize> = (0..n_excl).map(|k| (truth + 1 + 7 * k) % n).filter(|&c| c != truth).collect();
        let r = rank_by_vector(&t, &q, truth, &exclude, &[10]).unwrap();
        let want = oracle_rank(&t, &q, truth, &exclude);
        prop_assert_eq!(r.rank_of_truth, want);
        prop_assert_eq!(r.reciprocal_rank, 1.0 / want as f64);
        prop_assert_eq!(r.ndcg, 1.0 / ((want + 1) as f64).log2());
        prop_assert_eq!(r.hit(10), Some(want <= 10));
    }

    #[test]
    fn ranking_ties_follow_index_order(levels in proptest::collection::vec(0i32..3, 2..60), truth in 0usize..60) {
        // integer embeddings give exact ties
        let n = levels.len();
        let truth = truth % n;
        let rows: Vec<Vec<f64>> = levels.iter().map(|&l| vec![l as f64, 1.0]).collect();
        let t = EmbeddingTable::from_rows(&rows).unwrap();
        let r = rank_by_vector(&t, &[1.0, 0.0], truth, &[], &[1, 10]).unwrap();
        prop_assert_eq!(r.rank_of_truth, oracle_rank(&t, &[1.0, 0.0], truth, &[]));
    }

    #[test]
    fn rankings_rotation_invariant(seed in any::<u64>(), exp in exposure_strategy(40)) {
        // well-separated scores, so round-off cannot reorder
        let t = gaussian_table(40, 6, seed);
        let rot = random_rotation(&t, seed ^ 5);
        let hist = [1, 4, 9, 16];
        for truth in [0, 2, 25, 39] {
            let a = rank_and_measure(&t, &hist, &exp, truth, &hist, &[10]).unwrap();
            let b = rank_and_measure(&rot, &hist, &exp, truth, &hist, &[10]).unwrap();
            let ea = sequence_embed(&t, &hist, &exp).unwrap();
            let scores: Vec<f64> = (0..40).map(|c| t.row(c).iter().zip(&ea.vector).map(|(x, y)| x * y).sum()).collect();
            let target = scores[truth];
            let close = scores.iter().enumerate().any(|(c, s)| c != truth && (s - target).abs() < 1e-9);
            if !close {
                prop_assert_eq!(a, b);
            }
        }
    }
}

#[test]
fn alpha_limits() {
    let p0 = vec![0.5, 0.3, 0.15, 0.05];
    let big = ExposureModel::new(p0.clone(), 1e9).unwrap();
    assert!((0..4).all(|i| (big.weight(i) - 1.0).abs() < 1e-8));
    let tiny = ExposureModel::new(p0.clone(), 1e-12).unwrap();
    for i in 0..4 {
        assert!(tiny.weight(i) < 1e-10);
        for j in 0..4 {
            assert!(rel_close(tiny.weight(i) / tiny.weight(j), p0[j] / p0[i], 1e-9));
        }
    }
}

#[test]
fn weighted_history_example() {
    let t = EmbeddingTable::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.3, 0.3]]).unwrap();
    let exp = ExposureModel::new(vec![0.4, 0.1, 0.5], 0.1).unwrap();
    let e = sequence_embed(&t, &[0, 1], &exp).unwrap();
    assert!((e.weights[0] - 0.2).abs() < 1e-15 && (e.weights[1] - 0.5).abs() < 1e-15);
    assert!((e.vector[0] - 0.2).abs() < 1e-15 && (e.vector[1] - 0.5).abs() < 1e-15);
}

#[test]
fn truth_second_of_three() {
    let t = EmbeddingTable::from_rows(&[vec![3.0], vec![2.0], vec![1.0]]).unwrap();
    let r = rank_by_vector(&t, &[1.0], 1, &[], &[1]).unwrap();
    assert_eq!(r.rank_of_truth, 2);
    assert_eq!(r.reciprocal_rank, 0.5);
    assert!((r.ndcg - 0.630_929_753_571_457_4).abs() < 1e-15);
    assert!(matches!(rank_by_vector(&t, &[1.0], 1, &[1], &[1]), Err(Error::InvalidConfig(_))));
}

#[test]
fn sequence_kernel_is_sum_of_item_kernels() {
    let t = gaussian_table(10, 3, 77);
    let (s, s2) = ([1, 5, 2, 9], [0, 5, 7, 3]);
    let want: f64 = s.iter().zip(&s2).map(|(&a, &b)| kernel(&t, a, b).unwrap()).sum();
    assert!((sequence_kernel(&t, &s, &s2).unwrap() - want).abs() < 1e-12);
}

/// Gaussian elimination with partial pivoting on a dense system.
fn solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap()).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    x
}

#[test]
fn ridge_matches_elimination_oracle() {
    let t = gaussian_table(8, 3, 12);
    let seqs = vec![vec![0, 1], vec![2, 3], vec![4, 5]];
    let y = [1.0, -0.5, 2.0];
    let ridge = 0.3;
    let query = [6, 7];
    let k = |a: &[usize], b: &[usize]| sequence_kernel(&t, a, b).unwrap();
    let mut a = vec![vec![0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            a[i][j] = k(&seqs[i], &seqs[j]) + if i == j { ridge } else { 0.0 };
        }
    }
    let coef = solve(a, y.to_vec());
    let want: f64 = (0..3).map(|i| k(&query, &seqs[i]) * coef[i]).sum();
    let got = sequence_ridge_predict(&t, &seqs, &y, ridge, &query).unwrap();
    assert!((got - want).abs() < 1e-8, "{got} vs {want}");
}

#[test]
fn ridge_refuses_singular_system() {
    // identical training sequences make K rank one
    let t = gaussian_table(4, 3, 1);
    let seqs = vec![vec![0, 1], vec![0, 1], vec![2, 3]];
    assert!(matches!(
        sequence_ridge_predict(&t, &seqs, &[1.0, 1.0, 0.0], 0.0, &[0, 1]),
        Err(Error::IllConditioned(_))
    ));
    assert!(sequence_ridge_predict(&t, &seqs, &[1.0, 1.0, 0.0], 1e-3, &[0, 1]).is_ok());
}
