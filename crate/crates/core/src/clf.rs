//! Classification-side kernel metrics: the kernel/target alignment score,
//! the mean-kernel classifier, F1 and the resampled risk-bound check.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::LabeledSet;
use crate::embedding::{dot, EmbeddingTable};
use crate::error::{Error, Result};
use crate::report::F1Scores;
use crate::rng;

/// Rows per partition of the pair sum. Fixed so the reduction order does
/// not depend on the thread count.
const PAIR_CHUNK: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlignmentScore {
    pub value: f64,
    /// Mean of `K_Y · K_φ` over ordered pairs `i ≠ j`.
    pub numerator: f64,
    /// Root mean of `K_φ²` over the same pairs.
    pub denominator: f64,
    pub pair_count: u64,
    /// All items share one label, so `K_Y ≡ 1`.
    pub degenerate: bool,
    pub sampled: bool,
}

#[derive(Debug, Clone)]
pub struct AlignmentOptions {
    /// Above this many items the pair sum is estimated from sampled pairs.
    pub max_exact_items: usize,
    pub sampled_pairs: u64,
    pub seed: u64,
}

impl Default for AlignmentOptions {
    fn default() -> Self {
        Self {
            max_exact_items: 20_000,
            sampled_pairs: 10_000_000,
            seed: 0,
        }
    }
}

fn gather(table: &EmbeddingTable, indices: &[usize]) -> Result<Vec<f64>> {
    let mut rows = Vec::with_capacity(indices.len() * table.dim());
    for &i in indices {
        rows.extend_from_slice(table.try_row(i)?);
    }
    Ok(rows)
}

pub fn alignment(table: &EmbeddingTable, set: &LabeledSet) -> Result<AlignmentScore> {
    alignment_with(table, set, &AlignmentOptions::default())
}

/// U-statistic estimate of `E[K_Y K_φ] / sqrt(E[K_φ²])` with
/// `K_Y(y, y') = 1[y = y']`.
pub fn alignment_with(table: &EmbeddingTable, set: &LabeledSet, opts: &AlignmentOptions) -> Result<AlignmentScore> {
    let n = set.len();
    if n < 2 {
        return Err(Error::EmptyInput("alignment needs at least two labelled items"));
    }
    let d = table.dim();
    let rows = gather(table, &set.indices)?;
    let row = |p: usize| &rows[p * d..(p + 1) * d];
    let y = &set.classes;

    let sampled = n > opts.max_exact_items;
    let (num, sq, pairs) = if !sampled {
        let partial: Vec<(f64, f64)> = (0..n.div_ceil(PAIR_CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut num = 0.0;
                let mut sq = 0.0;
                for i in chunk * PAIR_CHUNK..((chunk + 1) * PAIR_CHUNK).min(n) {
                    let a = row(i);
                    for j in 0..n {
                        if i == j {
                            continue;
                        }
                        let k = dot(a, row(j));
                        if y[i] == y[j] {
                            num += k;
                        }
                        sq += k * k;
                    }
                }
                (num, sq)
            })
            .collect();
        let (num, sq) = partial.iter().fold((0.0, 0.0), |(a, b), (x, z)| (a + x, b + z));
        (num, sq, (n as u64) * (n as u64 - 1))
    } else {
        let chunks = 64u64;
        let per = opts.sampled_pairs.div_ceil(chunks);
        let partial: Vec<(f64, f64, u64)> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = rng::indexed_rng(opts.seed, "alignment-pairs", c);
                let (mut num, mut sq, mut cnt) = (0.0, 0.0, 0u64);
                let todo = per.min(opts.sampled_pairs.saturating_sub(c * per));
                for _ in 0..todo {
                    let i = rng.random_range(0..n);
                    let mut j = rng.random_range(0..n - 1);
                    if j >= i {
                        j += 1;
                    }
                    let k = dot(row(i), row(j));
                    if y[i] == y[j] {
                        num += k;
                    }
                    sq += k * k;
                    cnt += 1;
                }
                (num, sq, cnt)
            })
            .collect();
        partial
            .iter()
            .fold((0.0, 0.0, 0u64), |(a, b, c), (x, z, w)| (a + x, b + z, c + w))
    };

    let numerator = num / pairs as f64;
    let denominator = (sq / pairs as f64).sqrt();
    if denominator <= 0.0 {
        return Err(Error::Degenerate("all pairwise kernel values are zero".into()));
    }
    Ok(AlignmentScore {
        value: numerator / denominator,
        numerator,
        denominator,
        pair_count: pairs,
        degenerate: set.distinct_classes() < 2,
        sampled,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class: usize,
    /// One-vs-rest score per class: mean over training points of
    /// `(+1 if y' = c else -1) · K(query, x')`.
    pub scores: Vec<f64>,
}

fn argmax_first(scores: &[f64]) -> usize {
    let mut best = 0;
    for (c, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = c;
        }
    }
    best
}

/// Mean-kernel classifier. With two classes this is the sign of the mean of
/// `y' K(query, x')`; ties go to the smaller class index.
pub fn kernel_classifier_predict(table: &EmbeddingTable, train: &LabeledSet, query: usize) -> Result<Prediction> {
    if train.is_empty() {
        return Err(Error::EmptyInput("kernel classifier needs training points"));
    }
    let q = table.try_row(query)?;
    let mut class_sum = vec![0.0; train.num_classes];
    let mut total = 0.0;
    for (&i, &c) in train.indices.iter().zip(&train.classes) {
        let k = dot(q, table.try_row(i)?);
        class_sum[c] += k;
        total += k;
    }
    let n = train.len() as f64;
    let scores: Vec<f64> = class_sum.iter().map(|&s| (2.0 * s - total) / n).collect();
    Ok(Prediction {
        class: argmax_first(&scores),
        scores,
    })
}

pub fn kernel_classifier_predict_many(table: &EmbeddingTable, train: &LabeledSet, queries: &[usize]) -> Result<Vec<usize>> {
    queries
        .par_iter()
        .map(|&q| kernel_classifier_predict(table, train, q).map(|p| p.class))
        .collect()
}

/// Micro F1 (equal to accuracy for single-label data) and macro F1 over the
/// classes present in `truths`.
pub fn f1_scores(predictions: &[usize], truths: &[usize]) -> Result<F1Scores> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if truths.is_empty() {
        return Err(Error::EmptyInput("f1 needs at least one prediction"));
    }
    let classes = predictions.iter().chain(truths).max().unwrap() + 1;
    let mut tp = vec![0usize; classes];
    let mut pred_n = vec![0usize; classes];
    let mut true_n = vec![0usize; classes];
    for (&p, &t) in predictions.iter().zip(truths) {
        pred_n[p] += 1;
        true_n[t] += 1;
        if p == t {
            tp[p] += 1;
        }
    }
    let correct: usize = tp.iter().sum();
    let micro = correct as f64 / truths.len() as f64;
    let present: Vec<usize> = (0..classes).filter(|&c| true_n[c] > 0).collect();
    let macro_sum: f64 = present
        .iter()
        .map(|&c| {
            if tp[c] == 0 {
                return 0.0;
            }
            let p = tp[c] as f64 / pred_n[c] as f64;
            let r = tp[c] as f64 / true_n[c] as f64;
            2.0 * p * r / (p + r)
        })
        .sum();
    Ok(F1Scores {
        micro_f1: micro,
        macro_f1: macro_sum / present.len() as f64,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundCheckResult {
    pub delta: f64,
    pub resamples: usize,
    pub positive_class: usize,
    /// Fraction of resamples where the held-out 0-1 risk is within the bound.
    pub pass_fraction: f64,
    pub mean_risk: f64,
    pub mean_bound: f64,
}

/// Resampled check of `risk ≤ 1 - alignment · sqrt(δ)` for the binary
/// mean-kernel classifier.
///
/// Each resample draws a bootstrap training sample, computes the alignment on
/// it and measures the classifier's error on the out-of-bag points.
pub fn bound_check(
    table: &EmbeddingTable,
    set: &LabeledSet,
    delta: f64,
    resamples: usize,
    seed: u64,
    positive_class: Option<usize>,
) -> Result<BoundCheckResult> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidConfig(format!("delta must lie in (0, 1), got {delta}")));
    }
    if resamples == 0 {
        return Err(Error::InvalidConfig("resamples must be positive".into()));
    }
    let positive = match positive_class {
        Some(c) if c < set.num_classes => c,
        Some(c) => return Err(Error::InvalidConfig(format!("positive class {c} out of range"))),
        None if set.num_classes <= 2 => 0,
        None => {
            return Err(Error::InvalidConfig(
                "bound check needs binary labels or a designated positive class".into(),
            ))
        }
    };
    let binary = LabeledSet::new(
        set.indices.clone(),
        set.classes.iter().map(|&c| usize::from(c != positive)).collect(),
        2,
    )?;
    if binary.distinct_classes() < 2 {
        return Err(Error::Degenerate("bound check needs both classes present".into()));
    }
    let n = binary.len();
    let sqrt_delta = delta.sqrt();
    let outcomes: Vec<Option<(f64, f64)>> = (0..resamples)
        .into_par_iter()
        .map(|r| -> Result<Option<(f64, f64)>> {
            let mut rng = rng::indexed_rng(seed, "bound-check", r as u64);
            let mut in_bag = vec![false; n];
            let picks: Vec<usize> = (0..n)
                .map(|_| {
                    let p = rng.random_range(0..n);
                    in_bag[p] = true;
                    p
                })
                .collect();
            let oob: Vec<usize> = (0..n).filter(|&p| !in_bag[p]).collect();
            let train = binary.subset(&picks);
            if oob.is_empty() || train.distinct_classes() < 2 {
                return Ok(None);
            }
            let score = alignment(table, &train)?;
            let mut errors = 0usize;
            for &p in &oob {
                let pred = kernel_classifier_predict(table, &train, binary.indices[p])?;
                if pred.class != binary.classes[p] {
                    errors += 1;
                }
            }
            let risk = errors as f64 / oob.len() as f64;
            Ok(Some((risk, 1.0 - score.value * sqrt_delta)))
        })
        .collect::<Result<_>>()?;
    let used: Vec<(f64, f64)> = outcomes.into_iter().flatten().collect();
    if used.is_empty() {
        return Err(Error::Degenerate("no usable resample".into()));
    }
    let m = used.len() as f64;
    Ok(BoundCheckResult {
        delta,
        resamples: used.len(),
        positive_class: positive,
        pass_fraction: used.iter().filter(|(risk, bound)| risk <= bound).count() as f64 / m,
        mean_risk: used.iter().map(|u| u.0).sum::<f64>() / m,
        mean_bound: used.iter().map(|u| u.1).sum::<f64>() / m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn four_items() -> (EmbeddingTable, LabeledSet) {
        let t = EmbeddingTable::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let s = LabeledSet::new(vec![0, 1, 2, 3], vec![0, 0, 1, 1], 2).unwrap();
        (t, s)
    }

    #[test]
    fn alignment_two_by_two() {
        let (t, s) = four_items();
        let a = alignment(&t, &s).unwrap();
        assert_eq!(a.pair_count, 12);
        assert!((a.numerator - 1.0 / 3.0).abs() < 1e-15);
        assert!((a.denominator - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert!((a.value - 0.577_350_269_189_625_8).abs() < 1e-12);
        assert!(!a.degenerate);
    }

    #[test]
    fn alignment_degenerate_cases() {
        let (t, _) = four_items();
        let same = LabeledSet::new(vec![0, 1, 2], vec![0, 0, 0], 1).unwrap();
        assert!(alignment(&t, &same).unwrap().degenerate);
        let z = EmbeddingTable::from_rows(&[vec![0.0], vec![0.0]]).unwrap();
        let s = LabeledSet::new(vec![0, 1], vec![0, 1], 2).unwrap();
        assert!(matches!(alignment(&z, &s), Err(Error::Degenerate(_))));
        assert!(alignment(&t, &LabeledSet::new(vec![0], vec![0], 1).unwrap()).is_err());
    }

    #[test]
    fn sampled_alignment_close_to_exact() {
        let (t, s) = four_items();
        let opts = AlignmentOptions {
            max_exact_items: 2,
            sampled_pairs: 200_000,
            seed: 5,
        };
        let a = alignment_with(&t, &s, &opts).unwrap();
        assert!(a.sampled);
        assert!((a.value - 0.577_350_269_189_625_8).abs() < 0.01);
    }

    #[test]
    fn classifier_lone_point_and_tie() {
        let t = EmbeddingTable::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let lone = LabeledSet::new(vec![1], vec![1], 2).unwrap();
        assert_eq!(kernel_classifier_predict(&t, &lone, 1).unwrap().class, 1);
        let two = LabeledSet::new(vec![0, 1], vec![0, 1], 2).unwrap();
        let p = kernel_classifier_predict(&t, &two, 2).unwrap();
        assert_eq!(p.scores[0], p.scores[1]);
        assert_eq!(p.class, 0);
    }

    #[test]
    fn f1_examples() {
        let f = f1_scores(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!((f.micro_f1, f.macro_f1), (1.0, 1.0));
        let f = f1_scores(&[1, 0, 0, 0], &[1, 1, 0, 0]).unwrap();
        assert!((f.micro_f1 - 0.75).abs() < 1e-15);
        assert!((f.macro_f1 - (2.0 / 3.0 + 0.8) / 2.0).abs() < 1e-15);
        let f = f1_scores(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap();
        assert!((f.micro_f1 - 0.5).abs() < 1e-15);
        assert!((f.macro_f1 - 1.0 / 3.0).abs() < 1e-15);
        assert!(f1_scores(&[], &[]).is_err());
        assert!(f1_scores(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn bound_on_separable_data() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| if i % 2 == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).collect();
        let t = EmbeddingTable::from_rows(&rows).unwrap();
        let s = LabeledSet::new((0..20).collect(), (0..20).map(|i| i % 2).collect(), 2).unwrap();
        for delta in [0.9, 0.25, 1e-9] {
            let r = bound_check(&t, &s, delta, 30, 1, None).unwrap();
            assert_eq!(r.pass_fraction, 1.0);
            assert_eq!(r.mean_risk, 0.0);
        }
        let tiny = bound_check(&t, &s, 1e-12, 5, 1, None).unwrap();
        assert!(tiny.mean_bound > 1.0 - 1e-5);
    }

    #[test]
    fn bound_needs_binary() {
        let t = EmbeddingTable::from_rows(&[vec![1.0], vec![2.0], vec![3.0]]).unwrap();
        let s = LabeledSet::new(vec![0, 1, 2], vec![0, 1, 2], 3).unwrap();
        assert!(matches!(bound_check(&t, &s, 0.1, 5, 0, None), Err(Error::InvalidConfig(_))));
        assert!(bound_check(&t, &s, 0.1, 5, 0, Some(2)).is_ok());
        assert!(bound_check(&t, &s, 1.0, 5, 0, Some(2)).is_err());
    }
}
