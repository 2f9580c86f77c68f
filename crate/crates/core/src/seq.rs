//! Sequence-side kernel metrics.
//!
//! A user history `x_1..x_k` is summarized by the exposure-discounted sum
//! `Σ α/(p₀(x_i)+α) φ(x_i)`; candidates are scored by their inner product
//! with it, which is the same as `Σ_i α/(p₀(x_i)+α) K(c, x_i)`. Ranking is
//! always over the full catalog.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::InteractionDataset;
use crate::embedding::{dot, kernel, EmbeddingTable};
use crate::error::{Error, Result};

const RANK_SHARD: usize = 4096;

/// Per-item exposure probabilities plus the discount constant `α`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExposureModel {
    p0: Vec<f64>,
    alpha: f64,
}

impl ExposureModel {
    pub fn new(p0: Vec<f64>, alpha: f64) -> Result<Self> {
        if p0.is_empty() {
            return Err(Error::EmptyInput("exposure model needs at least one item"));
        }
        if p0.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidConfig("exposure probabilities must be finite and non-negative".into()));
        }
        let total: f64 = p0.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!("exposure probabilities sum to {total}, not 1")));
        }
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidConfig(format!("alpha must be positive, got {alpha}")));
        }
        Ok(Self { p0, alpha })
    }

    pub fn uniform(n: usize, alpha: Option<f64>) -> Result<Self> {
        let p = 1.0 / n as f64;
        Self::new(vec![p; n], alpha.unwrap_or(p))
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.p0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p0.is_empty()
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.p0.clone(), alpha)
    }

    /// Discount weight `α / (p₀(item) + α)`.
    pub fn weight(&self, item: usize) -> f64 {
        self.alpha / (self.p0[item] + self.alpha)
    }

    fn check(&self, item: usize) -> Result<()> {
        if item >= self.p0.len() {
            return Err(Error::Lookup {
                index: item,
                len: self.p0.len(),
            });
        }
        Ok(())
    }
}

/// Log-popularity exposure proxy: `p₀(i) ∝ ln(1 + count_i)`. `α` defaults to
/// the mean exposure probability, `1 / n`.
pub fn build_exposure(counts: &[f64], alpha_override: Option<f64>) -> Result<ExposureModel> {
    if counts.iter().any(|&c| !(c >= 0.0)) {
        return Err(Error::InvalidConfig("counts must be non-negative".into()));
    }
    if !counts.iter().any(|&c| c > 0.0) {
        return Err(Error::Degenerate("exposure needs at least one positive count".into()));
    }
    let logs: Vec<f64> = counts.iter().map(|&c| c.ln_1p()).collect();
    let total: f64 = logs.iter().sum();
    let p0: Vec<f64> = logs.iter().map(|l| l / total).collect();
    let alpha = alpha_override.unwrap_or(1.0 / counts.len() as f64);
    ExposureModel::new(p0, alpha)
}

pub fn build_exposure_from_counts(counts: &[u64], alpha_override: Option<f64>) -> Result<ExposureModel> {
    build_exposure(&counts.iter().map(|&c| c as f64).collect::<Vec<_>>(), alpha_override)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequenceEmbedding {
    pub vector: Vec<f64>,
    pub weights: Vec<f64>,
}

pub fn sequence_embed(table: &EmbeddingTable, history: &[usize], exp: &ExposureModel) -> Result<SequenceEmbedding> {
    if history.is_empty() {
        return Err(Error::EmptyInput("history must contain at least one item"));
    }
    let mut vector = vec![0.0; table.dim()];
    let mut weights = Vec::with_capacity(history.len());
    for &item in history {
        exp.check(item)?;
        let row = table.try_row(item)?;
        let w = exp.weight(item);
        for (v, x) in vector.iter_mut().zip(row) {
            *v += w * x;
        }
        weights.push(w);
    }
    Ok(SequenceEmbedding { vector, weights })
}

/// Unweighted history sum, the `α → ∞` limit of [`sequence_embed`].
pub fn unweighted_embed(table: &EmbeddingTable, history: &[usize]) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::EmptyInput("history must contain at least one item"));
    }
    let mut vector = vec![0.0; table.dim()];
    for &item in history {
        for (v, x) in vector.iter_mut().zip(table.try_row(item)?) {
            *v += x;
        }
    }
    Ok(vector)
}

/// Scores through the aggregated history vector.
pub fn score_candidates(table: &EmbeddingTable, history: &[usize], exp: &ExposureModel, candidates: &[usize]) -> Result<Vec<f64>> {
    let emb = sequence_embed(table, history, exp)?;
    candidates
        .iter()
        .map(|&c| Ok(dot(table.try_row(c)?, &emb.vector)))
        .collect()
}

/// Scores as the explicit weighted kernel sum `Σ_i w_i K(c, x_i)`.
pub fn score_candidates_by_kernel_sum(
    table: &EmbeddingTable,
    history: &[usize],
    exp: &ExposureModel,
    candidates: &[usize],
) -> Result<Vec<f64>> {
    if history.is_empty() {
        return Err(Error::EmptyInput("history must contain at least one item"));
    }
    for &h in history {
        exp.check(h)?;
    }
    candidates
        .iter()
        .map(|&c| {
            history
                .iter()
                .map(|&h| Ok(exp.weight(h) * kernel(table, c, h)?))
                .sum::<Result<f64>>()
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HitAtK {
    pub k: usize,
    pub hit: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankingResult {
    /// 1-based rank among the non-excluded catalog.
    pub rank_of_truth: usize,
    pub hits: Vec<HitAtK>,
    pub ndcg: f64,
    pub reciprocal_rank: f64,
}

impl RankingResult {
    fn from_rank(rank: usize, ks: &[usize]) -> Self {
        Self {
            rank_of_truth: rank,
            hits: ks.iter().map(|&k| HitAtK { k, hit: rank <= k }).collect(),
            ndcg: 1.0 / ((rank + 1) as f64).log2(),
            reciprocal_rank: 1.0 / rank as f64,
        }
    }

    pub fn hit(&self, k: usize) -> Option<bool> {
        self.hits.iter().find(|h| h.k == k).map(|h| h.hit)
    }
}

/// Ranks the whole catalog (minus `exclude`) by `⟨φ(c), query⟩`, ties broken
/// by ascending index.
pub fn rank_by_vector(table: &EmbeddingTable, query: &[f64], truth: usize, exclude: &[usize], ks: &[usize]) -> Result<RankingResult> {
    table.check(truth)?;
    let mut masked = vec![false; table.len()];
    for &e in exclude {
        table.check(e)?;
        masked[e] = true;
    }
    if masked[truth] {
        return Err(Error::InvalidConfig("truth item is in the excluded set".into()));
    }
    let target = dot(table.row(truth), query);
    let ahead: usize = (0..table.len().div_ceil(RANK_SHARD))
        .into_par_iter()
        .map(|shard| {
            let lo = shard * RANK_SHARD;
            let hi = (lo + RANK_SHARD).min(table.len());
            (lo..hi)
                .filter(|&c| {
                    if masked[c] || c == truth {
                        return false;
                    }
                    let s = dot(table.row(c), query);
                    s > target || (s == target && c < truth)
                })
                .count()
        })
        .sum();
    Ok(RankingResult::from_rank(ahead + 1, ks))
}

pub fn rank_and_measure(
    table: &EmbeddingTable,
    history: &[usize],
    exp: &ExposureModel,
    truth: usize,
    exclude: &[usize],
    ks: &[usize],
) -> Result<RankingResult> {
    let emb = sequence_embed(table, history, exp)?;
    rank_by_vector(table, &emb.vector, truth, exclude, ks)
}

/// Position-aligned sum of item kernels.
pub fn sequence_kernel(table: &EmbeddingTable, s: &[usize], s_prime: &[usize]) -> Result<f64> {
    if s.len() != s_prime.len() {
        return Err(Error::LengthMismatch {
            left: s.len(),
            right: s_prime.len(),
        });
    }
    if s.is_empty() {
        return Err(Error::EmptyInput("sequence kernel needs length >= 1"));
    }
    s.iter().zip(s_prime).map(|(&a, &b)| kernel(table, a, b)).sum()
}

/// Condition number above which an unregularized solve is refused.
pub const MAX_CONDITION: f64 = 1e12;

/// Kernel ridge regression with the sequence kernel as Gram matrix:
/// `k_qᵀ (K + ridge·I)⁻¹ y`.
pub fn sequence_ridge_predict(
    table: &EmbeddingTable,
    train_sequences: &[Vec<usize>],
    train_targets: &[f64],
    ridge: f64,
    query: &[usize],
) -> Result<f64> {
    if train_sequences.len() != train_targets.len() {
        return Err(Error::LengthMismatch {
            left: train_sequences.len(),
            right: train_targets.len(),
        });
    }
    if train_sequences.is_empty() {
        return Err(Error::EmptyInput("ridge prediction needs training sequences"));
    }
    if !(ridge >= 0.0) {
        return Err(Error::InvalidConfig(format!("ridge must be >= 0, got {ridge}")));
    }
    let n = train_sequences.len();
    let mut gram = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let k = sequence_kernel(table, &train_sequences[i], &train_sequences[j])?;
            gram[(i, j)] = k;
            gram[(j, i)] = k;
        }
        gram[(i, i)] += ridge;
    }
    let sv = gram.singular_values();
    let (max, min) = sv.iter().fold((0.0f64, f64::INFINITY), |(a, b), &s| (a.max(s), b.min(s)));
    let cond = if min > 0.0 { max / min } else { f64::INFINITY };
    if cond > MAX_CONDITION {
        return Err(Error::IllConditioned(cond));
    }
    let y = DVector::from_column_slice(train_targets);
    let coef = gram.lu().solve(&y).ok_or(Error::IllConditioned(f64::INFINITY))?;
    let mut pred = 0.0;
    for (i, s) in train_sequences.iter().enumerate() {
        pred += sequence_kernel(table, query, s)? * coef[i];
    }
    Ok(pred)
}

/// How a user history is turned into a query vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum HistoryScorer {
    /// Exposure-discounted sum.
    ExposureWeighted,
    /// Unweighted sum of all history items.
    MeanHistory,
    /// The most recent history item alone.
    LastItem,
}

/// Mean ranking metrics over a set of users.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RankingSummary {
    pub scorer: HistoryScorer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub users: usize,
    pub hit_at_10: f64,
    pub mrr: f64,
    pub ndcg: f64,
}

/// Options for [`evaluate_next_item`].
#[derive(Debug, Clone)]
pub struct EvalOptions {
    /// Drop history items from the ranked catalog (the truth itself is always kept).
    pub exclude_history: bool,
    /// Evaluate the validation item (history = training prefix) instead of the test item.
    pub validation: bool,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            exclude_history: true,
            validation: false,
        }
    }
}

/// Maps dataset item indices to table rows by id.
pub fn item_rows(table: &EmbeddingTable, data: &InteractionDataset) -> Result<Vec<usize>> {
    data.item_ids()
        .iter()
        .map(|id| table.index_of(id).ok_or_else(|| Error::UnknownId(id.clone())))
        .collect()
}

/// Exposure model over table rows from the dataset's training counts.
pub fn exposure_for_table(table: &EmbeddingTable, data: &InteractionDataset, alpha: Option<f64>) -> Result<ExposureModel> {
    let rows = item_rows(table, data)?;
    let mut counts = vec![0.0; table.len()];
    for (item, &c) in data.item_counts().iter().enumerate() {
        counts[rows[item]] += c as f64;
    }
    build_exposure(&counts, alpha)
}

/// Leave-last-out next-item evaluation over every user in `data`.
pub fn evaluate_next_item(
    table: &EmbeddingTable,
    data: &InteractionDataset,
    exp: &ExposureModel,
    scorer: HistoryScorer,
    opts: &EvalOptions,
) -> Result<RankingSummary> {
    let rows = item_rows(table, data)?;
    if exp.len() != table.len() {
        return Err(Error::LengthMismatch {
            left: exp.len(),
            right: table.len(),
        });
    }
    let per_user: Vec<RankingResult> = (0..data.num_users())
        .into_par_iter()
        .map(|u| {
            let (history, truth) = if opts.validation {
                (data.train(u), data.valid(u))
            } else {
                (data.test_history(u), data.test(u))
            };
            let history: Vec<usize> = history.iter().map(|&i| rows[i as usize]).collect();
            let truth = rows[truth as usize];
            let query = match scorer {
                HistoryScorer::ExposureWeighted => sequence_embed(table, &history, exp)?.vector,
                HistoryScorer::MeanHistory => unweighted_embed(table, &history)?,
                HistoryScorer::LastItem => table.try_row(*history.last().unwrap())?.to_vec(),
            };
            let exclude: Vec<usize> = if opts.exclude_history {
                history.iter().copied().filter(|&h| h != truth).collect()
            } else {
                Vec::new()
            };
            rank_by_vector(table, &query, truth, &exclude, &[10])
        })
        .collect::<Result<_>>()?;
    let n = per_user.len() as f64;
    Ok(RankingSummary {
        scorer,
        alpha: (scorer == HistoryScorer::ExposureWeighted).then_some(exp.alpha()),
        users: per_user.len(),
        hit_at_10: per_user.iter().filter(|r| r.rank_of_truth <= 10).count() as f64 / n,
        mrr: per_user.iter().map(|r| r.reciprocal_rank).sum::<f64>() / n,
        ndcg: per_user.iter().map(|r| r.ndcg).sum::<f64>() / n,
    })
}

/// Exposure-weighted evaluation repeated over several `α` values.
pub fn alpha_sweep(
    table: &EmbeddingTable,
    data: &InteractionDataset,
    exp: &ExposureModel,
    alphas: &[f64],
    opts: &EvalOptions,
) -> Result<Vec<RankingSummary>> {
    alphas
        .iter()
        .map(|&a| evaluate_next_item(table, data, &exp.with_alpha(a)?, HistoryScorer::ExposureWeighted, opts))
        .collect()
}
