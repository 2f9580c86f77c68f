//! Exposure-biased interaction simulator.
//!
//! Each user has a latent unit intent vector `s`. Every interaction is drawn
//! independently from the mixture
//!
//! ```text
//! p(x | s) = λ·p₀(x) + (1 − λ)·exp(⟨φ(x), s⟩) / Z_s
//! ```
//!
//! with `Z_s` summed exactly over the catalog, so the sampling distribution
//! is known in closed form and recovery of `s` can be scored directly.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::InteractionDataset;
use crate::embedding::{dot, EmbeddingTable};
use crate::error::{Error, Result};
use crate::rng;
use crate::seq::{rank_by_vector, sequence_embed, unweighted_embed, ExposureModel};
use crate::stats;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub lambda: f64,
    pub catalog_size: usize,
    pub dim: usize,
    pub num_users: usize,
    pub history_len: usize,
    pub exposure_skew: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            catalog_size: 500,
            dim: 16,
            num_users: 2000,
            history_len: 20,
            exposure_skew: 1.5,
            seed: 0,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(Error::InvalidConfig(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if self.catalog_size == 0 || self.dim == 0 || self.num_users == 0 || self.history_len == 0 {
            return Err(Error::InvalidConfig("catalog_size, dim, num_users and history_len must be >= 1".into()));
        }
        if !(self.exposure_skew >= 0.0) {
            return Err(Error::InvalidConfig("exposure_skew must be >= 0".into()));
        }
        Ok(())
    }
}

/// Zipf exposure: `p₀(i) ∝ (i + 1)^(−skew)`.
pub fn zipf_exposure(n: usize, skew: f64) -> Vec<f64> {
    let raw: Vec<f64> = (1..=n).map(|r| (r as f64).powf(-skew)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|p| p / total).collect()
}

/// Exact next-item distribution for one intent vector.
pub fn mixture_distribution(table: &EmbeddingTable, p0: &[f64], lambda: f64, intent: &[f64]) -> Vec<f64> {
    let logits: Vec<f64> = (0..table.len()).map(|i| dot(table.row(i), intent)).collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let expd: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = expd.iter().sum();
    p0.iter()
        .zip(&expd)
        .map(|(p, e)| lambda * p + (1.0 - lambda) * e / z)
        .collect()
}

/// Inverse-CDF sampler over a fixed discrete distribution.
#[derive(Debug, Clone)]
pub struct DiscreteSampler {
    cdf: Vec<f64>,
}

impl DiscreteSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { cdf }
    }

    pub fn sample<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cdf.last().copied().unwrap_or(0.0);
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }
}

/// Draws `n` i.i.d. items from `probs`.
pub fn sample_items(probs: &[f64], n: usize, seed: u64) -> Vec<usize> {
    let sampler = DiscreteSampler::new(probs);
    let mut rng = rng::stage_rng(seed, "sample-items");
    (0..n).map(|_| sampler.sample(&mut rng)).collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Empirical frequencies of item draws over a catalog of `n` items.
pub fn empirical_distribution(draws: &[usize], n: usize) -> Vec<f64> {
    let mut counts = vec![0.0; n];
    draws.iter().for_each(|&d| counts[d] += 1.0);
    counts.iter().map(|c| c / draws.len() as f64).collect()
}

/// Everything the simulator knows: ground-truth embeddings and exposure,
/// the sampled sequences, and each user's true intent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Simulation {
    pub config: SimConfig,
    pub item_vectors: Vec<f64>,
    pub exposure: ExposureModel,
    /// Per user: `history_len` history items followed by the held-out truth.
    pub sequences: Vec<Vec<usize>>,
    pub intents: Vec<Vec<f64>>,
}

impl Simulation {
    pub fn item_id(i: usize) -> String {
        format!("i{i}")
    }

    pub fn user_id(u: usize) -> String {
        format!("u{u}")
    }

    pub fn table(&self) -> Result<EmbeddingTable> {
        EmbeddingTable::new(
            (0..self.config.catalog_size).map(Self::item_id).collect(),
            self.item_vectors.clone(),
            self.config.dim,
        )
    }

    pub fn history(&self, user: usize) -> &[usize] {
        let s = &self.sequences[user];
        &s[..s.len() - 1]
    }

    pub fn truth(&self, user: usize) -> usize {
        *self.sequences[user].last().unwrap()
    }

    /// The sampled sequences as a leave-last-out dataset (needs `history_len >= 2`).
    pub fn dataset(&self) -> Result<InteractionDataset> {
        InteractionDataset::from_sequences(
            (0..self.sequences.len()).map(Self::user_id).collect(),
            (0..self.config.catalog_size).map(Self::item_id).collect(),
            self.sequences
                .iter()
                .map(|s| s.iter().map(|&i| i as u32).collect())
                .collect(),
        )
    }
}

fn unit_gaussian(dim: usize, rng: &mut rng::Rng) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let n = dot(&v, &v).sqrt();
        if n > 0.0 {
            return v.into_iter().map(|x| x / n).collect();
        }
    }
}

pub fn simulate(cfg: &SimConfig) -> Result<Simulation> {
    cfg.validate()?;
    let (n, d) = (cfg.catalog_size, cfg.dim);
    let mut rng = rng::stage_rng(cfg.seed, "sim-items");
    let mut vectors: Vec<f64> = (0..n * d).map(|_| StandardNormal.sample(&mut rng)).collect();
    let mean_norm = vectors.chunks(d).map(|r| dot(r, r).sqrt()).sum::<f64>() / n as f64;
    vectors.iter_mut().for_each(|v| *v /= mean_norm);
    let ids = (0..n).map(Simulation::item_id).collect();
    let table = EmbeddingTable::new(ids, vectors, d)?;
    let p0 = zipf_exposure(n, cfg.exposure_skew);
    let exposure = ExposureModel::new(p0.clone(), 1.0 / n as f64)?;

    let (sequences, intents): (Vec<_>, Vec<_>) = (0..cfg.num_users)
        .into_par_iter()
        .map(|u| {
            let mut rng = rng::indexed_rng(cfg.seed, "sim-user", u as u64);
            let intent = unit_gaussian(d, &mut rng);
            let sampler = DiscreteSampler::new(&mixture_distribution(&table, &p0, cfg.lambda, &intent));
            let seq = (0..=cfg.history_len).map(|_| sampler.sample(&mut rng)).collect();
            (seq, intent)
        })
        .unzip();
    Ok(Simulation {
        config: cfg.clone(),
        item_vectors: table.vectors().to_vec(),
        exposure,
        sequences,
        intents,
    })
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let na = dot(a, a).sqrt();
    let nb = dot(b, b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot(a, b) / (na * nb)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryRow {
    /// `None` for the unweighted sum.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    pub mean_mrr: f64,
    pub mrr_se: f64,
    pub mean_cosine: f64,
    pub cosine_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecoveryReport {
    pub users: usize,
    pub rows: Vec<RecoveryRow>,
    pub unweighted: RecoveryRow,
    pub best_mrr_alpha: f64,
    /// Mean over users of (weighted − unweighted) reciprocal rank at the best-MRR α.
    pub mrr_gain: f64,
    /// Standard error of the paired per-user difference.
    pub mrr_gain_se: f64,
    pub best_cosine_alpha: f64,
    pub cosine_gain: f64,
    pub cosine_gain_se: f64,
    /// Users whose weighted and unweighted truth ranks agree, at the best-MRR α.
    pub identical_rank_fraction: f64,
}

struct PerUser {
    rr: Vec<f64>,
    cos: Vec<f64>,
    rank: Vec<usize>,
}

/// Scores exposure-weighted aggregation against the unweighted sum for
/// each `α`, by cosine to the true intent and by MRR of the held-out item.
/// The whole catalog is ranked with nothing excluded, since histories are
/// drawn with replacement.
pub fn recovery_experiment(sim: &Simulation, alpha_grid: &[f64]) -> Result<RecoveryReport> {
    recovery_with_exposure(sim, &sim.exposure, alpha_grid)
}

/// As [`recovery_experiment`] but aggregating with a caller-supplied exposure model.
pub fn recovery_with_exposure(sim: &Simulation, exposure: &ExposureModel, alpha_grid: &[f64]) -> Result<RecoveryReport> {
    if alpha_grid.is_empty() {
        return Err(Error::EmptyInput("alpha grid"));
    }
    let table = sim.table()?;
    let models = alpha_grid
        .iter()
        .map(|&a| exposure.with_alpha(a))
        .collect::<Result<Vec<_>>>()?;
    let users = sim.sequences.len();
    let per_user: Vec<PerUser> = (0..users)
        .into_par_iter()
        .map(|u| -> Result<PerUser> {
            let history = sim.history(u);
            let truth = sim.truth(u);
            let intent = &sim.intents[u];
            let mut queries: Vec<Vec<f64>> = models
                .iter()
                .map(|m| sequence_embed(&table, history, m).map(|e| e.vector))
                .collect::<Result<_>>()?;
            queries.push(unweighted_embed(&table, history)?);
            let mut out = PerUser {
                rr: Vec::new(),
                cos: Vec::new(),
                rank: Vec::new(),
            };
            for q in &queries {
                let r = rank_by_vector(&table, q, truth, &[], &[])?;
                out.rr.push(r.reciprocal_rank);
                out.rank.push(r.rank_of_truth);
                out.cos.push(cosine(q, intent));
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let column = |k: usize, f: fn(&PerUser) -> &Vec<f64>| -> Vec<f64> { per_user.iter().map(|p| f(p)[k]).collect() };
    let row = |k: usize, alpha: Option<f64>| {
        let rr = column(k, |p| &p.rr);
        let cs = column(k, |p| &p.cos);
        RecoveryRow {
            alpha,
            mean_mrr: stats::mean(&rr),
            mrr_se: stats::std_error(&rr),
            mean_cosine: stats::mean(&cs),
            cosine_se: stats::std_error(&cs),
        }
    };
    let g = alpha_grid.len();
    let rows: Vec<RecoveryRow> = (0..g).map(|k| row(k, Some(alpha_grid[k]))).collect();
    let unweighted = row(g, None);
    let best = |f: fn(&RecoveryRow) -> f64| {
        (0..g).fold(0, |b, k| if f(&rows[k]) > f(&rows[b]) { k } else { b })
    };
    let best_mrr = best(|r| r.mean_mrr);
    let best_cos = best(|r| r.mean_cosine);
    let paired = |k: usize, f: fn(&PerUser) -> &Vec<f64>| -> (f64, f64) {
        let diff: Vec<f64> = per_user.iter().map(|p| f(p)[k] - f(p)[g]).collect();
        (stats::mean(&diff), stats::std_error(&diff))
    };
    let (mrr_gain, mrr_gain_se) = paired(best_mrr, |p| &p.rr);
    let (cosine_gain, cosine_gain_se) = paired(best_cos, |p| &p.cos);
    let identical = per_user.iter().filter(|p| p.rank[best_mrr] == p.rank[g]).count();
    Ok(RecoveryReport {
        users,
        best_mrr_alpha: alpha_grid[best_mrr],
        best_cosine_alpha: alpha_grid[best_cos],
        rows,
        unweighted,
        mrr_gain,
        mrr_gain_se,
        cosine_gain,
        cosine_gain_se,
        identical_rank_fraction: identical as f64 / users as f64,
    })
}

/// Full rankings of the catalog under the exposure-weighted and unweighted
/// aggregations of one user's history.
pub fn rankings_for_user(sim: &Simulation, exposure: &ExposureModel, user: usize) -> Result<(Vec<usize>, Vec<usize>)> {
    let table = sim.table()?;
    let history = sim.history(user);
    let weighted = sequence_embed(&table, history, exposure)?.vector;
    let plain = unweighted_embed(&table, history)?;
    let order = |q: &[f64]| {
        let scores: Vec<f64> = (0..table.len()).map(|c| dot(table.row(c), q)).collect();
        let mut idx: Vec<usize> = (0..table.len()).collect();
        idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        idx
    };
    Ok((order(&weighted), order(&plain)))
}

/// Uniformly distributed point on the unit sphere.
pub fn random_unit_vector(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng::stage_rng(seed, "unit-vector");
    unit_gaussian(dim, &mut rng)
}
