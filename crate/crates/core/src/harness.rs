//! Downstream comparators and the studies that tie kernel metrics to
//! realized downstream performance.
//!
//! Two heads are trained on frozen embeddings:
//!
//! - the LR head: multinomial logistic regression on raw coordinates,
//!   randomly initialized, so it sees the coordinate system;
//! - the IP head: one-vs-rest kernel logistic regression whose decision
//!   `Σ_i β_i K(x, x_i) + b` touches the embedding only through the kernel.

use std::collections::BTreeMap;
use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clf::{alignment, f1_scores, kernel_classifier_predict_many};
use crate::data::{InteractionDataset, LabelCatalog, LabeledSet};
use crate::embedding::{dot, gram, EmbeddingTable};
use crate::error::{Error, Result};
use crate::report::F1Scores;
use crate::rng;
use crate::seq::{evaluate_next_item, exposure_for_table, EvalOptions, HistoryScorer};
use crate::sgns::{self, controlled_cl_sample, train_triplets, SgnsConfig};
use crate::stats;

/// Positions into a [`LabeledSet`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub valid: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded 80/10/10 shuffle split of `n` items.
pub fn split_80_10_10(n: usize, seed: u64) -> Split {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stage_rng(seed, "item-split"));
    let n_train = (n * 8) / 10;
    let n_valid = n / 10;
    Split {
        train: order[..n_train].to_vec(),
        valid: order[n_train..n_train + n_valid].to_vec(),
        test: order[n_train + n_valid..].to_vec(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HeadConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub l2: f64,
}

impl Default for HeadConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            iterations: 500,
            l2: 1e-4,
        }
    }
}

#[derive(Debug, Clone)]
pub struct HeadOutcome {
    pub f1: F1Scores,
    pub predictions: Vec<usize>,
    /// Training objective before each iteration plus the final value.
    pub losses: Vec<f64>,
}

fn check_train(set: &LabeledSet, split: &Split) -> Result<()> {
    if split.train.is_empty() || split.test.is_empty() {
        return Err(Error::EmptyInput("head needs non-empty train and test splits"));
    }
    if set.subset(&split.train).distinct_classes() < 2 {
        return Err(Error::Degenerate("training split contains a single class".into()));
    }
    Ok(())
}

/// Multinomial logistic regression parameters: `weights` is `classes × dim`
/// row-major, followed by `classes` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub classes: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl LinearParams {
    fn logits(&self, x: &[f64], out: &mut [f64]) {
        let bias = &self.values[self.classes * self.dim..];
        for c in 0..self.classes {
            out[c] = dot(&self.values[c * self.dim..(c + 1) * self.dim], x) + bias[c];
        }
    }
}

fn log_softmax_in_place(z: &mut [f64]) {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z.iter_mut().for_each(|v| *v -= lse);
}

/// Mean cross-entropy plus `l2/2 · ‖W‖²` (biases unregularized) and its gradient.
pub fn linear_loss_and_grad(params: &LinearParams, features: &[Vec<f64>], labels: &[usize], l2: f64) -> (f64, Vec<f64>) {
    let (c_n, d) = (params.classes, params.dim);
    let mut grad = vec![0.0; params.values.len()];
    let mut loss = 0.0;
    let mut z = vec![0.0; c_n];
    let n = features.len() as f64;
    for (x, &y) in features.iter().zip(labels) {
        params.logits(x, &mut z);
        log_softmax_in_place(&mut z);
        loss -= z[y];
        for c in 0..c_n {
            let r = z[c].exp() - f64::from(u8::from(c == y));
            for k in 0..d {
                grad[c * d + k] += r * x[k] / n;
            }
            grad[c_n * d + c] += r / n;
        }
    }
    loss /= n;
    let w = &params.values[..c_n * d];
    loss += 0.5 * l2 * dot(w, w);
    for k in 0..c_n * d {
        grad[k] += l2 * params.values[k];
    }
    (loss, grad)
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

/// Full-batch gradient descent on multinomial logistic regression over the
/// raw coordinates, evaluated on the test split.
pub fn lr_head(table: &EmbeddingTable, set: &LabeledSet, split: &Split, seed: u64, cfg: &HeadConfig) -> Result<HeadOutcome> {
    check_train(set, split)?;
    let (c_n, d) = (set.num_classes, table.dim());
    let feats = |pos: &[usize]| -> Result<Vec<Vec<f64>>> {
        pos.iter().map(|&p| table.try_row(set.indices[p]).map(<[f64]>::to_vec)).collect()
    };
    let x_train = feats(&split.train)?;
    let y_train: Vec<usize> = split.train.iter().map(|&p| set.classes[p]).collect();
    let limit = (6.0 / (d + c_n) as f64).sqrt();
    let mut init = rng::stage_rng(seed, "lr-head-init");
    let mut params = LinearParams {
        classes: c_n,
        dim: d,
        values: (0..c_n * d)
            .map(|_| init.random_range(-limit..limit))
            .chain(std::iter::repeat_n(0.0, c_n))
            .collect(),
    };
    let mut losses = Vec::with_capacity(cfg.iterations + 1);
    for _ in 0..cfg.iterations {
        let (loss, grad) = linear_loss_and_grad(&params, &x_train, &y_train, cfg.l2);
        losses.push(loss);
        params.values.iter_mut().zip(&grad).for_each(|(v, g)| *v -= cfg.learning_rate * g);
    }
    losses.push(linear_loss_and_grad(&params, &x_train, &y_train, cfg.l2).0);

    let mut z = vec![0.0; c_n];
    let predictions: Vec<usize> = feats(&split.test)?
        .iter()
        .map(|x| {
            params.logits(x, &mut z);
            argmax_first(&z)
        })
        .collect();
    let truths: Vec<usize> = split.test.iter().map(|&p| set.classes[p]).collect();
    Ok(HeadOutcome {
        f1: f1_scores(&predictions, &truths)?,
        predictions,
        losses,
    })
}

pub fn lr_head_train_eval(table: &EmbeddingTable, set: &LabeledSet, split: &Split, seed: u64) -> Result<F1Scores> {
    lr_head(table, set, split, seed, &HeadConfig::default()).map(|o| o.f1)
}

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Objective of one one-vs-rest kernel logistic model:
/// mean `softplus(−t_i f_i)` plus `l2/2 · βᵀKβ`, with `f = Kβ + b`.
pub fn kernel_objective(gram: &[f64], n: usize, beta: &[f64], bias: f64, targets: &[f64], l2: f64) -> f64 {
    let mut loss = 0.0;
    let mut reg = 0.0;
    for i in 0..n {
        let kb = dot(&gram[i * n..(i + 1) * n], beta);
        loss += softplus(-targets[i] * (kb + bias));
        reg += beta[i] * kb;
    }
    loss / n as f64 + 0.5 * l2 * reg
}

/// Functional (RKHS) gradient of [`kernel_objective`] expressed in
/// representer coefficients: `(r/n + l2·β, mean r)` with
/// `r_i = −t_i σ(−t_i f_i)`. The Euclidean gradient in `β` is `K` times the
/// first component.
pub fn kernel_functional_grad(gram: &[f64], n: usize, beta: &[f64], bias: f64, targets: &[f64], l2: f64) -> (Vec<f64>, f64) {
    let mut g = vec![0.0; n];
    let mut gb = 0.0;
    for i in 0..n {
        let f = dot(&gram[i * n..(i + 1) * n], beta) + bias;
        let r = -targets[i] * sigmoid(-targets[i] * f);
        g[i] = r / n as f64 + l2 * beta[i];
        gb += r / n as f64;
    }
    (g, gb)
}

/// One-vs-rest kernel logistic regression in representer form, trained by
/// functional gradient descent from `β = 0`.
pub fn ip_head(table: &EmbeddingTable, set: &LabeledSet, split: &Split, _seed: u64, cfg: &HeadConfig) -> Result<HeadOutcome> {
    check_train(set, split)?;
    let train_rows: Vec<usize> = split.train.iter().map(|&p| set.indices[p]).collect();
    let test_rows: Vec<usize> = split.test.iter().map(|&p| set.indices[p]).collect();
    let n = train_rows.len();
    let k_train = gram(table, &train_rows, &train_rows, 64)?.data;
    let k_test = gram(table, &test_rows, &train_rows, 64)?;
    let y_train: Vec<usize> = split.train.iter().map(|&p| set.classes[p]).collect();

    let per_class: Vec<(Vec<f64>, f64, Vec<f64>)> = (0..set.num_classes)
        .into_par_iter()
        .map(|c| {
            let targets: Vec<f64> = y_train.iter().map(|&y| if y == c { 1.0 } else { -1.0 }).collect();
            let mut beta = vec![0.0; n];
            let mut bias = 0.0;
            let mut losses = Vec::with_capacity(cfg.iterations + 1);
            for _ in 0..cfg.iterations {
                losses.push(kernel_objective(&k_train, n, &beta, bias, &targets, cfg.l2));
                let (g, gb) = kernel_functional_grad(&k_train, n, &beta, bias, &targets, cfg.l2);
                beta.iter_mut().zip(&g).for_each(|(b, gi)| *b -= cfg.learning_rate * gi);
                bias -= cfg.learning_rate * gb;
            }
            losses.push(kernel_objective(&k_train, n, &beta, bias, &targets, cfg.l2));
            (beta, bias, losses)
        })
        .collect();

    let predictions: Vec<usize> = (0..test_rows.len())
        .map(|t| {
            let k = &k_test.data[t * n..(t + 1) * n];
            let scores: Vec<f64> = per_class.iter().map(|(beta, b, _)| dot(k, beta) + b).collect();
            argmax_first(&scores)
        })
        .collect();
    let truths: Vec<usize> = split.test.iter().map(|&p| set.classes[p]).collect();
    // summed one-vs-rest objectives
    let losses = (0..=cfg.iterations)
        .map(|it| per_class.iter().map(|(_, _, l)| l[it]).sum())
        .collect();
    Ok(HeadOutcome {
        f1: f1_scores(&predictions, &truths)?,
        predictions,
        losses,
    })
}

pub fn ip_head_train_eval(table: &EmbeddingTable, set: &LabeledSet, split: &Split, seed: u64) -> Result<F1Scores> {
    ip_head(table, set, split, seed, &HeadConfig::default()).map(|o| o.f1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StructureConfig {
    pub sgns: SgnsConfig,
    /// Controlled triplets drawn per run.
    pub triplets: usize,
    pub head: HeadConfig,
}

impl Default for StructureConfig {
    fn default() -> Self {
        Self {
            sgns: SgnsConfig {
                dim: 16,
                ..SgnsConfig::default()
            },
            triplets: 3000,
            head: HeadConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeadStats {
    pub macro_f1: Vec<f64>,
    pub micro_f1: Vec<f64>,
    pub mean_macro_f1: f64,
    pub sd_macro_f1: f64,
    pub mean_micro_f1: f64,
    pub sd_micro_f1: f64,
}

impl HeadStats {
    fn from_runs(f1s: &[F1Scores]) -> Self {
        let ma: Vec<f64> = f1s.iter().map(|f| f.macro_f1).collect();
        let mi: Vec<f64> = f1s.iter().map(|f| f.micro_f1).collect();
        Self {
            mean_macro_f1: stats::mean(&ma),
            sd_macro_f1: stats::std_dev(&ma),
            mean_micro_f1: stats::mean(&mi),
            sd_micro_f1: stats::std_dev(&mi),
            macro_f1: ma,
            micro_f1: mi,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureReport {
    pub runs: usize,
    pub lr: HeadStats,
    pub ip: HeadStats,
}

/// Pretrains on controlled contrastive triplets and evaluates both heads,
/// `runs` times with independent seeds.
pub fn structure_experiment(labels: &LabelCatalog, cfg: &StructureConfig, runs: usize) -> Result<StructureReport> {
    if runs < 5 {
        return Err(Error::InvalidConfig("structure experiment needs at least 5 runs".into()));
    }
    // one split for all runs, so the spread reflects pretraining alone
    let split_seed = rng::derive_seed(cfg.sgns.seed, "structure-split");
    let results = (0..runs)
        .into_par_iter()
        .map(|r| -> Result<(F1Scores, F1Scores)> {
            let seed = rng::derive_indexed_seed(cfg.sgns.seed, "structure-run", r as u64);
            let triplets = controlled_cl_sample(labels, cfg.triplets, seed)?;
            let sg = SgnsConfig {
                seed,
                ..cfg.sgns.clone()
            };
            let table = train_triplets(labels.item_ids().to_vec(), &triplets, &sg)?.table;
            structure_heads(&table, labels, split_seed, seed, &cfg.head)
        })
        .collect::<Result<Vec<_>>>()?;
    let (lr, ip): (Vec<F1Scores>, Vec<F1Scores>) = results.into_iter().unzip();
    Ok(StructureReport {
        runs,
        lr: HeadStats::from_runs(&lr),
        ip: HeadStats::from_runs(&ip),
    })
}

/// Evaluates both heads on one table with a seeded 80/10/10 item split.
/// `head_seed` drives the linear head's initialization.
pub fn structure_heads(
    table: &EmbeddingTable,
    labels: &LabelCatalog,
    split_seed: u64,
    head_seed: u64,
    head: &HeadConfig,
) -> Result<(F1Scores, F1Scores)> {
    let set = labels.join(table)?;
    let split = split_80_10_10(set.len(), split_seed);
    let lr = lr_head(table, &set, &split, head_seed, head)?.f1;
    let ip = ip_head(table, &set, &split, head_seed, head)?.f1;
    Ok((lr, ip))
}

/// One pretrained table and the metrics measured on it.
#[derive(Debug, Clone)]
pub struct EmbeddingVariant {
    pub name: String,
    pub config: SgnsConfig,
    pub table: EmbeddingTable,
    pub metrics: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationReport {
    pub pearson: f64,
    pub spearman: f64,
    pub n_variants: usize,
    pub metric_pair: (String, String),
}

pub fn correlate(variants: &[EmbeddingVariant], kernel_metric: &str, downstream_metric: &str) -> Result<CorrelationReport> {
    if variants.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "correlation needs at least 3 variants, got {}",
            variants.len()
        )));
    }
    let pick = |name: &str| -> Result<Vec<f64>> {
        variants
            .iter()
            .map(|v| {
                v.metrics
                    .get(name)
                    .copied()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::InvalidConfig(format!("variant `{}` lacks metric `{name}`", v.name)))
            })
            .collect()
    };
    let xs = pick(kernel_metric)?;
    let ys = pick(downstream_metric)?;
    correlate_values(&xs, &ys, kernel_metric, downstream_metric)
}

pub fn correlate_values(xs: &[f64], ys: &[f64], x_name: &str, y_name: &str) -> Result<CorrelationReport> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            left: xs.len(),
            right: ys.len(),
        });
    }
    if xs.len() < 3 {
        return Err(Error::InvalidConfig("correlation needs at least 3 points".into()));
    }
    let undefined = || Error::UndefinedCorrelation(format!("`{x_name}` or `{y_name}` has zero variance"));
    Ok(CorrelationReport {
        pearson: stats::pearson(xs, ys).ok_or_else(undefined)?,
        spearman: stats::spearman(xs, ys).ok_or_else(undefined)?,
        n_variants: xs.len(),
        metric_pair: (x_name.to_string(), y_name.to_string()),
    })
}

/// Writes one `kernel_metric,downstream_metric,variant,x,y` row per variant
/// and metric pair, for external plotting.
pub fn write_scatter_csv<W: Write>(variants: &[EmbeddingVariant], pairs: &[(String, String)], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.into());
    w.write_record(["kernel_metric", "downstream_metric", "variant", "x", "y"]).map_err(io)?;
    for (x, y) in pairs {
        for v in variants {
            let get = |k: &str| v.metrics.get(k).map_or_else(String::new, f64::to_string);
            w.write_record([x.as_str(), y.as_str(), v.name.as_str(), &get(x), &get(y)]).map_err(io)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Metric names filled in by [`evaluate_variant`].
pub mod metric {
    pub const ALIGNMENT: &str = "alignment";
    pub const KERNEL_CLF_MACRO_F1: &str = "kernel_clf_macro_f1";
    pub const KERNEL_CLF_MICRO_F1: &str = "kernel_clf_micro_f1";
    pub const LR_MACRO_F1: &str = "lr_macro_f1";
    pub const SEQ_MRR: &str = "seq_mrr";
    pub const SEQ_NDCG: &str = "seq_ndcg";
    pub const SEQ_HIT_AT_10: &str = "seq_hit_at_10";
    pub const LAST_ITEM_MRR: &str = "last_item_mrr";
    pub const MEAN_HISTORY_MRR: &str = "mean_history_mrr";
}

/// Measures the kernel metrics and the cheap downstream comparators of one table.
pub fn evaluate_variant(
    table: &EmbeddingTable,
    data: &InteractionDataset,
    labels: &LabelCatalog,
    seed: u64,
) -> Result<BTreeMap<String, f64>> {
    let mut m = BTreeMap::new();
    let set = labels.join(table)?;
    m.insert(metric::ALIGNMENT.into(), alignment(table, &set)?.value);

    let split = split_80_10_10(set.len(), seed);
    let train = set.subset(&split.train);
    let test = set.subset(&split.test);
    let preds = kernel_classifier_predict_many(table, &train, &test.indices)?;
    let f1 = f1_scores(&preds, &test.classes)?;
    m.insert(metric::KERNEL_CLF_MACRO_F1.into(), f1.macro_f1);
    m.insert(metric::KERNEL_CLF_MICRO_F1.into(), f1.micro_f1);
    m.insert(metric::LR_MACRO_F1.into(), lr_head(table, &set, &split, seed, &HeadConfig::default())?.f1.macro_f1);

    let exp = exposure_for_table(table, data, None)?;
    let opts = EvalOptions::default();
    let seq = evaluate_next_item(table, data, &exp, HistoryScorer::ExposureWeighted, &opts)?;
    m.insert(metric::SEQ_MRR.into(), seq.mrr);
    m.insert(metric::SEQ_NDCG.into(), seq.ndcg);
    m.insert(metric::SEQ_HIT_AT_10.into(), seq.hit_at_10);
    let last = evaluate_next_item(table, data, &exp, HistoryScorer::LastItem, &opts)?;
    m.insert(metric::LAST_ITEM_MRR.into(), last.mrr);
    let mean = evaluate_next_item(table, data, &exp, HistoryScorer::MeanHistory, &opts)?;
    m.insert(metric::MEAN_HISTORY_MRR.into(), mean.mrr);
    Ok(m)
}

/// Pretrains one table per (window, negatives) pair and evaluates each.
/// Results are ordered by variant name.
pub fn run_variant_grid(
    data: &InteractionDataset,
    labels: &LabelCatalog,
    base: &SgnsConfig,
    windows: &[usize],
    negatives: &[usize],
) -> Result<Vec<EmbeddingVariant>> {
    let grid: Vec<(usize, usize)> = windows
        .iter()
        .flat_map(|&w| negatives.iter().map(move |&n| (w, n)))
        .collect();
    let mut variants = grid
        .par_iter()
        .map(|&(w, n)| -> Result<EmbeddingVariant> {
            let config = SgnsConfig {
                window: w,
                negatives: n,
                ..base.clone()
            };
            let table = sgns::train(data, &config)?.table;
            let metrics = evaluate_variant(&table, data, labels, base.seed)?;
            Ok(EmbeddingVariant {
                name: format!("w{w}n{n}"),
                config,
                table,
                metrics,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    variants.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(variants)
}

/// Shape of the synthetic clustered interaction corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorpusConfig {
    pub num_items: usize,
    pub num_users: usize,
    pub num_clusters: usize,
    pub min_len: usize,
    pub max_len: usize,
    /// Probability of staying in the current cluster at each step.
    pub stay: f64,
    /// Probability that a step draws a uniformly random item instead.
    pub noise: f64,
    pub seed: u64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        Self {
            num_items: 2000,
            num_users: 5000,
            num_clusters: 40,
            min_len: 8,
            max_len: 20,
            stay: 0.7,
            noise: 0.4,
            seed: 0,
        }
    }
}

/// Users wander between item clusters; each item's class is its cluster.
/// Items do not repeat within a user.
pub fn clustered_corpus(cfg: &CorpusConfig) -> Result<(InteractionDataset, LabelCatalog)> {
    if cfg.num_clusters < 2 || cfg.num_items < 2 * cfg.num_clusters {
        return Err(Error::InvalidConfig("need >= 2 clusters with >= 2 items each".into()));
    }
    if cfg.min_len < 3 || cfg.max_len < cfg.min_len || cfg.max_len > cfg.num_items / cfg.num_clusters {
        return Err(Error::InvalidConfig("sequence lengths must satisfy 3 <= min <= max <= cluster size".into()));
    }
    let item_ids: Vec<String> = (0..cfg.num_items).map(|i| format!("item{i}")).collect();
    let cluster_of = |i: usize| i % cfg.num_clusters;
    let members: Vec<Vec<usize>> = (0..cfg.num_clusters)
        .map(|c| (0..cfg.num_items).filter(|&i| cluster_of(i) == c).collect())
        .collect();
    let sequences: Vec<Vec<u32>> = (0..cfg.num_users)
        .into_par_iter()
        .map(|u| {
            let mut rng = rng::indexed_rng(cfg.seed, "corpus-user", u as u64);
            let len = rng.random_range(cfg.min_len..=cfg.max_len);
            let mut cluster = rng.random_range(0..cfg.num_clusters);
            let mut seen = std::collections::HashSet::new();
            let mut seq = Vec::with_capacity(len);
            while seq.len() < len {
                if rng.random::<f64>() >= cfg.stay {
                    cluster = rng.random_range(0..cfg.num_clusters);
                }
                let item = if rng.random::<f64>() < cfg.noise {
                    rng.random_range(0..cfg.num_items)
                } else {
                    // popularity skew inside the cluster: earlier members are likelier
                    let m = &members[cluster];
                    let r: f64 = rng.random();
                    m[((r * r) * m.len() as f64) as usize]
                };
                if seen.insert(item) {
                    seq.push(item as u32);
                }
            }
            seq
        })
        .collect();
    let data = InteractionDataset::from_sequences(
        (0..cfg.num_users).map(|u| format!("user{u}")).collect(),
        item_ids.clone(),
        sequences,
    )?;
    let labels = LabelCatalog::from_pairs(
        item_ids
            .into_iter()
            .enumerate()
            .map(|(i, id)| (id, format!("c{}", cluster_of(i)))),
    )?;
    Ok((data, labels))
}

/// Catalog of `classes × per_class` items named `item<k>` with classes `c<j>`.
pub fn balanced_catalog(classes: usize, per_class: usize) -> Result<LabelCatalog> {
    LabelCatalog::from_pairs((0..classes * per_class).map(|i| (format!("item{i}"), format!("c{}", i % classes))))
}
