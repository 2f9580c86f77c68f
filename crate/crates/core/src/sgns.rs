//! Skip-gram pretraining with negative sampling over behavior sequences.
//!
//! Items that occur within `window` positions of each other in a user's
//! training prefix form positive (center, context) pairs. Each positive is
//! contrasted with `negatives` items drawn from the smoothed unigram
//! distribution under the pairwise logistic loss
//!
//! ```text
//! −log σ(⟨u_c, v_p⟩ − ⟨u_c, v_n⟩) = softplus(⟨u_c, v_n⟩ − ⟨u_c, v_p⟩)
//! ```
//!
//! where `u` is the input (exported) matrix and `v` the context matrix.
//! Training is single-threaded per run and fully determined by the seed.

use nalgebra::DMatrix;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{InteractionDataset, LabelCatalog};
use crate::embedding::{dot, EmbeddingTable};
use crate::error::{Error, Result};
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    RmsProp,
    Sgd,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SgnsConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub max_epochs: usize,
    pub early_stop_delta: f64,
    pub early_stop_patience: usize,
    pub optimizer: Optimizer,
    pub seed: u64,
}

impl Default for SgnsConfig {
    fn default() -> Self {
        Self {
            dim: 32,
            window: 3,
            negatives: 3,
            learning_rate: 0.005,
            batch_size: 256,
            l2: 1e-6,
            max_epochs: 50,
            early_stop_delta: 1e-6,
            early_stop_patience: 3,
            optimizer: Optimizer::RmsProp,
            seed: 0,
        }
    }
}

impl SgnsConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if self.dim == 0 {
            return bad("dim must be >= 1");
        }
        if self.window == 0 {
            return bad("window must be >= 1");
        }
        if self.negatives == 0 {
            return bad("negatives must be >= 1");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate must be > 0");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.l2 >= 0.0) || self.l2 * self.learning_rate >= 1.0 {
            return bad("l2 must be >= 0 and learning_rate * l2 < 1");
        }
        if self.max_epochs == 0 {
            return bad("max_epochs must be >= 1");
        }
        Ok(())
    }
}

const RMS_DECAY: f64 = 0.9;
const RMS_EPSILON: f64 = 1e-8;
const UNIGRAM_POWER: f64 = 0.75;

/// One contrastive unit: the anchor should score its positive above its negative.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub anchor: usize,
    pub positive: usize,
    pub negative: usize,
}

/// `softplus(⟨a, n⟩ − ⟨a, p⟩)`, computed stably.
pub fn triplet_loss(anchor: &[f64], positive: &[f64], negative: &[f64]) -> f64 {
    let z = dot(anchor, negative) - dot(anchor, positive);
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

/// Gradients of [`triplet_loss`] with respect to anchor, positive and negative.
pub fn triplet_grad(anchor: &[f64], positive: &[f64], negative: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let g = sigmoid(dot(anchor, negative) - dot(anchor, positive));
    let ga = negative.iter().zip(positive).map(|(n, p)| g * (n - p)).collect();
    let gp = anchor.iter().map(|a| -g * a).collect();
    let gn = anchor.iter().map(|a| g * a).collect();
    (ga, gp, gn)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSummary {
    pub epochs: usize,
    pub batches: u64,
    /// Mean triplet loss per epoch.
    pub losses: Vec<f64>,
    /// Fraction of triplets whose positive outscored the negative, per epoch.
    pub accuracies: Vec<f64>,
    pub early_stopped: bool,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub table: EmbeddingTable,
    pub summary: TrainSummary,
}

/// Dense parameter block with sparse, lazily-decayed updates.
struct Params {
    dim: usize,
    values: Vec<f64>,
    cache: Vec<f64>,
    grad: Vec<f64>,
    touched: Vec<usize>,
    is_touched: Vec<bool>,
    decayed_to: Vec<u64>,
}

impl Params {
    fn glorot(rows: usize, dim: usize, rng: &mut rng::Rng) -> Self {
        let limit = (6.0 / (2.0 * dim as f64)).sqrt();
        Self {
            dim,
            values: (0..rows * dim).map(|_| rng.random_range(-limit..limit)).collect(),
            cache: vec![0.0; rows * dim],
            grad: vec![0.0; rows * dim],
            touched: Vec::new(),
            is_touched: vec![false; rows],
            decayed_to: vec![0; rows],
        }
    }

    fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.dim..(r + 1) * self.dim]
    }

    /// Applies the ℓ₂ shrink `(1 − lr·l2)` once for every batch since the row was last brought up to date.
    fn catch_up(&mut self, r: usize, step: u64, shrink: f64) {
        let pending = step - self.decayed_to[r];
        if pending > 0 {
            let f = shrink.powi(pending as i32);
            self.values[r * self.dim..(r + 1) * self.dim].iter_mut().for_each(|v| *v *= f);
            self.decayed_to[r] = step;
        }
    }

    fn add_grad(&mut self, r: usize, scale: f64, dir: &[f64]) {
        if !self.is_touched[r] {
            self.is_touched[r] = true;
            self.touched.push(r);
        }
        let g = &mut self.grad[r * self.dim..(r + 1) * self.dim];
        for (gi, di) in g.iter_mut().zip(dir) {
            *gi += scale * di;
        }
    }

    fn apply(&mut self, opt: Optimizer, lr: f64) {
        let d = self.dim;
        for &r in &self.touched {
            let span = r * d..(r + 1) * d;
            for k in span {
                let g = self.grad[k];
                match opt {
                    Optimizer::RmsProp => {
                        self.cache[k] = RMS_DECAY * self.cache[k] + (1.0 - RMS_DECAY) * g * g;
                        self.values[k] -= lr * g / (self.cache[k].sqrt() + RMS_EPSILON);
                    }
                    Optimizer::Sgd => self.values[k] -= lr * g,
                }
                self.grad[k] = 0.0;
            }
            self.is_touched[r] = false;
        }
        self.touched.clear();
    }

    fn flush(&mut self, step: u64, shrink: f64) {
        for r in 0..self.is_touched.len() {
            self.catch_up(r, step, shrink);
        }
    }
}

struct Trainer<'a> {
    cfg: &'a SgnsConfig,
    input: Params,
    output: Params,
    step: u64,
    shrink: f64,
}

impl<'a> Trainer<'a> {
    fn new(rows: usize, cfg: &'a SgnsConfig) -> Self {
        let mut init = rng::stage_rng(cfg.seed, "sgns-init");
        let input = Params::glorot(rows, cfg.dim, &mut init);
        let output = Params::glorot(rows, cfg.dim, &mut init);
        Self {
            cfg,
            input,
            output,
            step: 0,
            shrink: 1.0 - cfg.learning_rate * cfg.l2,
        }
    }

    /// One minibatch step; returns (summed loss, correct count).
    fn batch(&mut self, triplets: &[Triplet]) -> (f64, usize) {
        let d = self.cfg.dim;
        for t in triplets {
            self.input.catch_up(t.anchor, self.step, self.shrink);
            self.output.catch_up(t.positive, self.step, self.shrink);
            self.output.catch_up(t.negative, self.step, self.shrink);
        }
        let scale = 1.0 / triplets.len() as f64;
        let mut loss = 0.0;
        let mut correct = 0;
        let mut diff = vec![0.0; d];
        let mut anchor = vec![0.0; d];
        for t in triplets {
            anchor.copy_from_slice(self.input.row(t.anchor));
            let p = self.output.row(t.positive);
            let n = self.output.row(t.negative);
            let sp = dot(&anchor, p);
            let sn = dot(&anchor, n);
            if sp > sn {
                correct += 1;
            }
            loss += triplet_loss(&anchor, p, n);
            let g = sigmoid(sn - sp);
            for ((o, ni), pi) in diff.iter_mut().zip(n).zip(p) {
                *o = ni - pi;
            }
            self.input.add_grad(t.anchor, g * scale, &diff);
            self.output.add_grad(t.positive, -g * scale, &anchor);
            self.output.add_grad(t.negative, g * scale, &anchor);
        }
        self.input.apply(self.cfg.optimizer, self.cfg.learning_rate);
        self.output.apply(self.cfg.optimizer, self.cfg.learning_rate);
        self.step += 1;
        (loss, correct)
    }

    fn run<F>(mut self, ids: Vec<String>, mut epoch_triplets: F) -> Result<TrainOutcome>
    where
        F: FnMut(usize) -> Vec<Triplet>,
    {
        let mut losses = Vec::new();
        let mut accuracies = Vec::new();
        let mut best = f64::NEG_INFINITY;
        let mut stale = 0;
        let mut early_stopped = false;
        for epoch in 0..self.cfg.max_epochs {
            let triplets = epoch_triplets(epoch);
            let (mut loss, mut correct) = (0.0, 0usize);
            for chunk in triplets.chunks(self.cfg.batch_size * self.unit()) {
                let (l, c) = self.batch(chunk);
                loss += l;
                correct += c;
            }
            let m = triplets.len() as f64;
            if !(loss / m).is_finite() {
                return Err(Error::Untrainable(format!("loss diverged at epoch {epoch}")));
            }
            losses.push(loss / m);
            let acc = correct as f64 / m;
            accuracies.push(acc);
            if acc > best + self.cfg.early_stop_delta {
                best = acc;
                stale = 0;
            } else {
                stale += 1;
                if stale >= self.cfg.early_stop_patience {
                    early_stopped = true;
                    break;
                }
            }
        }
        self.input.flush(self.step, self.shrink);
        let table = EmbeddingTable::new(ids, self.input.values, self.cfg.dim)?;
        Ok(TrainOutcome {
            table,
            summary: TrainSummary {
                epochs: losses.len(),
                batches: self.step,
                losses,
                accuracies,
                early_stopped,
            },
        })
    }

    /// Triplets per positive pair.
    fn unit(&self) -> usize {
        self.cfg.negatives
    }
}

/// All (center, context) pairs within `window` of each other in each
/// user's training prefix.
pub fn positive_pairs(data: &InteractionDataset, window: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for u in 0..data.num_users() {
        let seq = data.train(u);
        for (i, &c) in seq.iter().enumerate() {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(seq.len() - 1);
            for (j, &ctx) in seq.iter().enumerate().take(hi + 1).skip(lo) {
                if j != i {
                    pairs.push((c as usize, ctx as usize));
                }
            }
        }
    }
    pairs
}

/// Trains item embeddings on the training prefixes; rows follow the
/// dataset's item order.
pub fn train(data: &InteractionDataset, cfg: &SgnsConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let counts = data.item_counts();
    let distinct = counts.iter().filter(|&&c| c > 0).count();
    if distinct < 2 {
        return Err(Error::Untrainable(format!("{distinct} distinct training items; need at least 2")));
    }
    let pairs = positive_pairs(data, cfg.window);
    if pairs.is_empty() {
        return Err(Error::Untrainable("no positive pairs in the training prefixes".into()));
    }
    let weights: Vec<f64> = counts.iter().map(|&c| (c as f64).powf(UNIGRAM_POWER)).collect();
    let noise = WeightedIndex::new(&weights).map_err(|e| Error::Untrainable(e.to_string()))?;
    let trainer = Trainer::new(data.num_items(), cfg);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    trainer.run(data.item_ids().to_vec(), |epoch| {
        let mut rng = rng::indexed_rng(cfg.seed, "sgns-epoch", epoch as u64);
        order.shuffle(&mut rng);
        let mut out = Vec::with_capacity(pairs.len() * cfg.negatives);
        for &p in &order {
            let (center, context) = pairs[p];
            for _ in 0..cfg.negatives {
                let mut neg = noise.sample(&mut rng);
                for _ in 0..8 {
                    if neg != context {
                        break;
                    }
                    neg = noise.sample(&mut rng);
                }
                out.push(Triplet {
                    anchor: center,
                    positive: context,
                    negative: neg,
                });
            }
        }
        out
    })
}

/// Trains directly on explicit triplets over `ids.len()` entities.
pub fn train_triplets(ids: Vec<String>, triplets: &[Triplet], cfg: &SgnsConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    if triplets.is_empty() {
        return Err(Error::Untrainable("empty triplet list".into()));
    }
    let n = ids.len();
    if let Some(t) = triplets.iter().find(|t| t.anchor.max(t.positive).max(t.negative) >= n) {
        return Err(Error::Lookup {
            index: t.anchor.max(t.positive).max(t.negative),
            len: n,
        });
    }
    let unit_cfg = SgnsConfig {
        negatives: 1,
        ..cfg.clone()
    };
    let trainer = Trainer::new(n, &unit_cfg);
    let mut order = triplets.to_vec();
    trainer.run(ids, |epoch| {
        let mut rng = rng::indexed_rng(cfg.seed, "sgns-epoch", epoch as u64);
        order.shuffle(&mut rng);
        order.clone()
    })
}

/// Draws `(anchor, positive, negative)` triplets where the positive shares
/// the anchor's class and the negative comes from another class.
pub fn controlled_cl_sample(labels: &LabelCatalog, n: usize, seed: u64) -> Result<Vec<Triplet>> {
    if labels.num_classes() < 2 {
        return Err(Error::Sampling("need at least two classes".into()));
    }
    let members = labels.members();
    let classes = labels.classes();
    let total = labels.len();
    let mut rng = rng::stage_rng(seed, "controlled-cl");
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let anchor = rng.random_range(0..total);
        let class = &members[classes[anchor]];
        if class.len() < 2 {
            return Err(Error::Sampling(format!(
                "class `{}` has a single member",
                labels.class_names()[classes[anchor]]
            )));
        }
        let mut positive = class[rng.random_range(0..class.len() - 1)];
        if positive == anchor {
            positive = *class.last().unwrap();
        }
        let negative = loop {
            let cand = rng.random_range(0..total);
            if classes[cand] != classes[anchor] {
                break cand;
            }
        };
        out.push(Triplet {
            anchor,
            positive,
            negative,
        });
    }
    Ok(out)
}

/// Orthogonal `R` minimizing `‖source·R − target‖_F`.
pub fn procrustes_rotation(source: &EmbeddingTable, target: &EmbeddingTable) -> Result<DMatrix<f64>> {
    if source.len() != target.len() || source.dim() != target.dim() {
        return Err(Error::LengthMismatch {
            left: source.len() * source.dim(),
            right: target.len() * target.dim(),
        });
    }
    let x = DMatrix::from_row_slice(source.len(), source.dim(), source.vectors());
    let y = DMatrix::from_row_slice(target.len(), target.dim(), target.vectors());
    let svd = (x.transpose() * y).svd(true, true);
    let (u, v_t) = (svd.u.unwrap(), svd.v_t.unwrap());
    Ok(u * v_t)
}

/// Rotates `source` onto `target` with [`procrustes_rotation`].
pub fn procrustes_align(source: &EmbeddingTable, target: &EmbeddingTable) -> Result<EmbeddingTable> {
    let r = procrustes_rotation(source, target)?;
    // rows are row vectors here, so x·R is Rᵀ applied to each column vector
    Ok(source.transformed(&r.transpose()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySummary {
    pub run_count: usize,
    pub mean_coordinate_sd: f64,
    pub mean_abs_coordinate: f64,
    /// Coordinate SD after rotating every run onto run 0.
    pub mean_aligned_coordinate_sd: f64,
    pub mean_kernel_sd: f64,
    pub mean_abs_kernel: f64,
    /// Mean Spearman correlation of sampled kernel values between runs.
    pub mean_kernel_rank_corr: f64,
    /// Mean Spearman correlation of raw coordinates between runs.
    pub mean_coordinate_rank_corr: f64,
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    /// Row-major `entities × dim` standard deviations across runs.
    pub per_entry_sd: Vec<f64>,
    pub pairs: Vec<(usize, usize)>,
    pub per_pair_kernel_sd: Vec<f64>,
    pub run_count: usize,
    pub summary: StabilitySummary,
}

pub const STABILITY_PAIRS: usize = 1000;

/// Trains `runs` independent tables with seeds `seed, seed+1, ...` and
/// compares them coordinate-wise and kernel-wise.
pub fn stability_study(data: &InteractionDataset, cfg: &SgnsConfig, runs: usize) -> Result<StabilityReport> {
    if runs < 2 {
        return Err(Error::InvalidConfig("stability study needs at least 2 runs".into()));
    }
    let tables = (0..runs)
        .into_par_iter()
        .map(|r| {
            let c = SgnsConfig {
                seed: cfg.seed.wrapping_add(r as u64),
                ..cfg.clone()
            };
            train(data, &c).map(|o| o.table)
        })
        .collect::<Result<Vec<_>>>()?;
    stability_from_tables(&tables, cfg.seed)
}

fn sd_of(values: &[f64]) -> f64 {
    // population SD across runs
    let m = stats::mean(values);
    (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64).sqrt()
}

fn mean_pairwise_spearman(series: &[Vec<f64>]) -> f64 {
    let mut acc = Vec::new();
    for a in 0..series.len() {
        for b in a + 1..series.len() {
            acc.push(stats::spearman(&series[a], &series[b]).unwrap_or(1.0));
        }
    }
    stats::mean(&acc)
}

pub fn stability_from_tables(tables: &[EmbeddingTable], pair_seed: u64) -> Result<StabilityReport> {
    let runs = tables.len();
    if runs < 2 {
        return Err(Error::InvalidConfig("stability study needs at least 2 runs".into()));
    }
    let (n, d) = (tables[0].len(), tables[0].dim());
    if tables.iter().any(|t| t.len() != n || t.dim() != d || t.ids() != tables[0].ids()) {
        return Err(Error::InvalidConfig("tables must share ids and dimension".into()));
    }
    if n < 2 {
        return Err(Error::EmptyInput("stability study needs at least 2 entities"));
    }
    let entry_sd = |ts: &[EmbeddingTable]| -> Vec<f64> {
        (0..n * d)
            .map(|k| sd_of(&ts.iter().map(|t| t.vectors()[k]).collect::<Vec<_>>()))
            .collect()
    };
    let per_entry_sd = entry_sd(tables);
    let aligned: Vec<EmbeddingTable> = std::iter::once(Ok(tables[0].clone()))
        .chain(tables[1..].iter().map(|t| procrustes_align(t, &tables[0])))
        .collect::<Result<_>>()?;
    let aligned_sd = entry_sd(&aligned);

    let mut rng = rng::stage_rng(pair_seed, "stability-pairs");
    let pairs: Vec<(usize, usize)> = (0..STABILITY_PAIRS)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect();
    let kernels: Vec<Vec<f64>> = tables
        .iter()
        .map(|t| pairs.iter().map(|&(i, j)| dot(t.row(i), t.row(j))).collect())
        .collect();
    let per_pair_kernel_sd: Vec<f64> = (0..pairs.len())
        .map(|p| sd_of(&kernels.iter().map(|k| k[p]).collect::<Vec<_>>()))
        .collect();
    let coords: Vec<Vec<f64>> = tables.iter().map(|t| t.vectors().to_vec()).collect();

    let summary = StabilitySummary {
        run_count: runs,
        mean_coordinate_sd: stats::mean(&per_entry_sd),
        mean_abs_coordinate: stats::mean(&coords.concat().iter().map(|v| v.abs()).collect::<Vec<_>>()),
        mean_aligned_coordinate_sd: stats::mean(&aligned_sd),
        mean_kernel_sd: stats::mean(&per_pair_kernel_sd),
        mean_abs_kernel: stats::mean(&kernels.concat().iter().map(|v| v.abs()).collect::<Vec<_>>()),
        mean_kernel_rank_corr: mean_pairwise_spearman(&kernels),
        mean_coordinate_rank_corr: mean_pairwise_spearman(&coords),
    };
    Ok(StabilityReport {
        per_entry_sd,
        pairs,
        per_pair_kernel_sd,
        run_count: runs,
        summary,
    })
}
