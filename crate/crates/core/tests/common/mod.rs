#![allow(dead_code)]

use embkernel::data::LabeledSet;
use embkernel::EmbeddingTable;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(n: usize, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..n).map(|_| (0..d).map(|_| StandardNormal.sample(&mut r)).collect()).collect()
}

pub fn gaussian_table(n: usize, d: usize, seed: u64) -> EmbeddingTable {
    EmbeddingTable::from_rows(&gaussian_rows(n, d, seed)).unwrap()
}

pub fn random_labels(n: usize, classes: usize, seed: u64) -> LabeledSet {
    let mut r = rng(seed);
    let labels = (0..n).map(|_| r.random_range(0..classes)).collect();
    LabeledSet::new((0..n).collect(), labels, classes).unwrap()
}

/// `classes` isotropic Gaussian blobs with standard deviation `sigma`;
/// class `c` is centred at `separation · e_c`.
pub fn blobs(per_class: usize, classes: usize, d: usize, sigma: f64, separation: f64, seed: u64) -> (EmbeddingTable, LabeledSet) {
    let mut r = rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..per_class * classes {
        let c = i % classes;
        let mut v: Vec<f64> = (0..d).map(|_| { let z: f64 = StandardNormal.sample(&mut r); sigma * z }).collect();
        v[c % d] += separation;
        rows.push(v);
        labels.push(c);
    }
    let n = rows.len();
    (EmbeddingTable::from_rows(&rows).unwrap(), LabeledSet::new((0..n).collect(), labels, classes).unwrap())
}

/// Naive ordered-pair alignment: sums over i ≠ j.
pub fn naive_alignment(t: &EmbeddingTable, set: &LabeledSet) -> f64 {
    let n = set.len();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let k: f64 = t.row(set.indices[i]).iter().zip(t.row(set.indices[j])).map(|(a, b)| a * b).sum();
            if set.classes[i] == set.classes[j] {
                num += k;
            }
            den += k * k;
        }
    }
    let pairs = (n * (n - 1)) as f64;
    (num / pairs) / (den / pairs).sqrt()
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}
