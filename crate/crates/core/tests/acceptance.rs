//! End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
//! exits non-zero on any outcome other than the expected one.
//!
//! A criterion listed in `EXPECTED_FAIL` is one whose threshold the method
//! does not reach at the stated scale. It still runs in full at the stated
//! tolerance and prints FAIL; the run only breaks if it unexpectedly passes,
//! so the list cannot silently go stale.

mod common;

use std::time::{Duration, Instant};

use embkernel::clf::{alignment, bound_check, kernel_classifier_predict_many};
use embkernel::data::LabeledSet;
use embkernel::harness::{
    balanced_catalog, clustered_corpus, correlate, metric, run_variant_grid, split_80_10_10, structure_experiment,
    CorpusConfig, StructureConfig,
};
use embkernel::seq::{rank_and_measure, score_candidates, ExposureModel};
use embkernel::sgns::{stability_study, train, triplet_grad, triplet_loss, SgnsConfig};
use embkernel::sim::{
    empirical_distribution, mixture_distribution, random_unit_vector, recovery_experiment, recovery_with_exposure,
    sample_items, simulate, total_variation, SimConfig,
};
use embkernel::{random_rotation, EmbeddingTable};
use rand::Rng;

/// Criteria known to miss their threshold; see the decisions ledger.
const EXPECTED_FAIL: &[usize] = &[5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn c1_alignment_oracle() -> Outcome {
    let mut r = common::rng(101);
    let mut worst = 0.0f64;
    for case in 0..50u64 {
        let n = r.random_range(2..=200);
        let d = r.random_range(1..=16);
        let classes = r.random_range(2..=5);
        let t = common::gaussian_table(n, d, 1000 + case);
        let set = common::random_labels(n, classes, 2000 + case);
        let got = alignment(&t, &set).unwrap().value;
        worst = worst.max(rel_err(got, common::naive_alignment(&t, &set)));
    }
    outcome(worst <= 1e-12, format!("50 instances, worst relative error {worst:.2e}"))
}

/// Full sort of the non-excluded catalog by (score desc, index asc).
fn oracle_rank(scores: &[f64], truth: usize, exclude: &[usize]) -> usize {
    let mut items: Vec<usize> = (0..scores.len()).filter(|c| !exclude.contains(c)).collect();
    items.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    items.iter().position(|&c| c == truth).unwrap() + 1
}

fn c2_ranking_oracle() -> Outcome {
    let mut r = common::rng(202);
    let (mut cases, mut mismatches, mut ties) = (0, 0, 0);
    for case in 0..60u64 {
        let n = r.random_range(2..=1000);
        let d = r.random_range(1..=8);
        let mut rows = common::gaussian_rows(n, d, 3000 + case);
        // duplicate rows produce exact score ties, some of them with the truth
        let truth = r.random_range(0..n);
        for _ in 0..n / 4 {
            let (a, b) = (r.random_range(0..n), r.random_range(0..n));
            rows[a] = rows[b].clone();
        }
        if n > 2 && case % 2 == 0 {
            let other = (truth + n / 2) % n;
            rows[other] = rows[truth].clone();
        }
        let t = EmbeddingTable::from_rows(&rows).unwrap();
        let p: Vec<f64> = (0..n).map(|_| r.random_range(0.01..1.0)).collect();
        let total: f64 = p.iter().sum();
        let exp = ExposureModel::new(p.iter().map(|x| x / total).collect(), 1.0 / n as f64).unwrap();
        let hist: Vec<usize> = (0..r.random_range(1..=10)).map(|_| r.random_range(0..n)).collect();
        let exclude: Vec<usize> = if case % 3 == 0 { vec![] } else { hist.iter().copied().filter(|&h| h != truth).collect() };
        let got = rank_and_measure(&t, &hist, &exp, truth, &exclude, &[10]).unwrap();
        let scores = score_candidates(&t, &hist, &exp, &(0..n).collect::<Vec<_>>()).unwrap();
        let want = oracle_rank(&scores, truth, &exclude);
        if (0..n).any(|c| c != truth && !exclude.contains(&c) && scores[c] == scores[truth]) {
            ties += 1;
        }
        let ok = got.rank_of_truth == want
            && got.reciprocal_rank == 1.0 / want as f64
            && got.ndcg == 1.0 / ((want + 1) as f64).log2()
            && got.hit(10) == Some(want <= 10);
        cases += 1;
        mismatches += usize::from(!ok);
    }
    outcome(mismatches == 0, format!("{cases} catalogs (up to 1000 items, {ties} with score ties), {mismatches} mismatches"))
}

fn c3_invariance() -> Outcome {
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for seed in 0..20u64 {
        let t = common::gaussian_table(150, 8, 4000 + seed);
        let rot = random_rotation(&t, seed);
        let scale = 0.1 + 9.9 * (seed as f64 / 19.0);
        let scaled = t.scaled(scale);
        let set = common::random_labels(150, 3, 5000 + seed);
        let (a, b) = (alignment(&t, &set).unwrap().value, alignment(&rot, &set).unwrap().value);
        worst = worst.max(rel_err(a, b));
        if rel_err(a, b) > 1e-9 {
            failures.push(format!("alignment seed {seed}"));
        }

        let split = split_80_10_10(150, seed);
        let train: LabeledSet = set.subset(&split.train);
        let queries: Vec<usize> = split.test.iter().map(|&p| set.indices[p]).collect();
        let base = kernel_classifier_predict_many(&t, &train, &queries).unwrap();
        if base != kernel_classifier_predict_many(&rot, &train, &queries).unwrap() {
            failures.push(format!("classifier rotation seed {seed}"));
        }
        if base != kernel_classifier_predict_many(&scaled, &train, &queries).unwrap() {
            failures.push(format!("classifier scale seed {seed}"));
        }

        let p0: Vec<f64> = (1..=150).map(|i| 1.0 / i as f64).collect();
        let total: f64 = p0.iter().sum();
        let exp = ExposureModel::new(p0.iter().map(|p| p / total).collect(), 1e-2).unwrap();
        let hist = [seed as usize % 150, 7, 42, 99, 120];
        let cands: Vec<usize> = (0..150).collect();
        let s0 = score_candidates(&t, &hist, &exp, &cands).unwrap();
        let s1 = score_candidates(&rot, &hist, &exp, &cands).unwrap();
        // scores near zero are compared on the scale of the largest score
        let top = s0.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let e = s0.iter().zip(&s1).map(|(x, y)| (x - y).abs() / top).fold(0.0, f64::max);
        worst = worst.max(e);
        if e > 1e-9 {
            failures.push(format!("sequence scores seed {seed}"));
        }
        for truth in [0, 13, 77, 149] {
            let seen: Vec<usize> = hist.iter().copied().filter(|&h| h != truth).collect();
            let a = rank_and_measure(&t, &hist, &exp, truth, &seen, &[10]).unwrap();
            let b = rank_and_measure(&rot, &hist, &exp, truth, &seen, &[10]).unwrap();
            let c = rank_and_measure(&scaled, &hist, &exp, truth, &seen, &[10]).unwrap();
            if a.rank_of_truth != b.rank_of_truth || rel_err(a.ndcg, b.ndcg) > 1e-9 || rel_err(a.reciprocal_rank, b.reciprocal_rank) > 1e-9 {
                failures.push(format!("ranking rotation seed {seed}"));
            }
            if a.rank_of_truth != c.rank_of_truth {
                failures.push(format!("ranking scale seed {seed}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("20 seeds, worst relative deviation {worst:.2e}")
    } else {
        format!("broken: {}", failures.join(", "))
    };
    outcome(failures.is_empty(), detail)
}

fn c4_risk_bound() -> Outcome {
    // two classes, means at ±σ·e₁ so they sit 2σ apart
    let mut r = common::rng(404);
    let (n, d) = (400, 8);
    let mut rows = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        let mut v: Vec<f64> = (0..d).map(|_| r.sample::<f64, _>(rand_distr::StandardNormal)).collect();
        v[0] += if c == 0 { 1.0 } else { -1.0 };
        rows.push(v);
        classes.push(c);
    }
    let t = EmbeddingTable::from_rows(&rows).unwrap();
    let set = LabeledSet::new((0..n).collect(), classes, 2).unwrap();
    let b = bound_check(&t, &set, 0.25, 200, 0, None).unwrap();
    outcome(
        b.pass_fraction >= 0.75,
        format!(
            "bound held in {:.1}% of 200 resamples (mean risk {:.3}, mean bound {:.3})",
            100.0 * b.pass_fraction,
            b.mean_risk,
            b.mean_bound
        ),
    )
}

fn c5_recovery() -> Outcome {
    let cfg = SimConfig::default();
    let sim = simulate(&cfg).unwrap();
    let grid = [1e-4, 1e-3, 1.0 / cfg.catalog_size as f64, 1e-2, 1e-1, 1.0];
    let rec = recovery_experiment(&sim, &grid).unwrap();
    let flat = ExposureModel::new(vec![1.0 / cfg.catalog_size as f64; cfg.catalog_size], 1.0 / cfg.catalog_size as f64).unwrap();
    let control = recovery_with_exposure(&sim, &flat, &grid).unwrap();
    let mrr_ok = rec.mrr_gain > 2.0 * rec.mrr_gain_se;
    let cos_ok = rec.cosine_gain > 2.0 * rec.cosine_gain_se;
    let control_ok = control.identical_rank_fraction == 1.0;
    outcome(
        mrr_ok && cos_ok && control_ok,
        format!(
            "MRR gain {:+.4} (SE {:.4}, alpha {}) {}; cosine gain {:+.4} (SE {:.4}, alpha {}) {}; uniform control {:.0}% identical",
            rec.mrr_gain,
            rec.mrr_gain_se,
            rec.best_mrr_alpha,
            if mrr_ok { "ok" } else { "below 2 SE" },
            rec.cosine_gain,
            rec.cosine_gain_se,
            rec.best_cosine_alpha,
            if cos_ok { "ok" } else { "below 2 SE" },
            100.0 * control.identical_rank_fraction
        ),
    )
}

fn c6_simulator_fidelity() -> Outcome {
    let cfg = SimConfig {
        catalog_size: 100,
        num_users: 1,
        ..SimConfig::default()
    };
    let sim = simulate(&cfg).unwrap();
    let t = sim.table().unwrap();
    let p0 = sim.exposure.p0().to_vec();
    let intent = random_unit_vector(cfg.dim, 606);
    let n = cfg.catalog_size;
    let p = mixture_distribution(&t, &p0, cfg.lambda, &intent);
    let tv_mix = total_variation(&p, &empirical_distribution(&sample_items(&p, 1_000_000, 1), n));
    // the λ → 0 and λ → 1 limits are the softmax and exposure components
    let softmax = mixture_distribution(&t, &vec![0.0; n], 0.0, &intent);
    let near0 = mixture_distribution(&t, &p0, 1e-4, &intent);
    let near1 = mixture_distribution(&t, &p0, 1.0 - 1e-4, &intent);
    let tv0 = total_variation(&softmax, &empirical_distribution(&sample_items(&near0, 100_000, 2), n));
    let tv1 = total_variation(&p0, &empirical_distribution(&sample_items(&near1, 100_000, 3), n));
    outcome(
        tv_mix <= 0.01 && tv0 <= 0.02 && tv1 <= 0.02,
        format!("catalog {n}: TV {tv_mix:.4} at 1e6 draws; limits TV {tv0:.4} (lambda→0), {tv1:.4} (lambda→1) at 1e5 draws"),
    )
}

fn c7_structure() -> Outcome {
    let labels = balanced_catalog(3, 100).unwrap();
    let r = structure_experiment(&labels, &StructureConfig::default(), 10).unwrap();
    let mean_ok = r.ip.mean_macro_f1 >= r.lr.mean_macro_f1;
    let sd_ok = r.ip.sd_macro_f1 <= r.lr.sd_macro_f1;
    outcome(
        mean_ok && sd_ok,
        format!(
            "macro-F1 IP {:.4} ± {:.4} vs LR {:.4} ± {:.4} over 10 runs",
            r.ip.mean_macro_f1, r.ip.sd_macro_f1, r.lr.mean_macro_f1, r.lr.sd_macro_f1
        ),
    )
}

fn c8_correlation() -> Outcome {
    let (data, labels) = clustered_corpus(&CorpusConfig::default()).unwrap();
    let base = SgnsConfig {
        max_epochs: 3,
        ..SgnsConfig::default()
    };
    let variants = run_variant_grid(&data, &labels, &base, &[2, 3], &[2, 3, 4]).unwrap();
    let clf = correlate(&variants, metric::ALIGNMENT, metric::KERNEL_CLF_MACRO_F1).unwrap();
    let seq = correlate(&variants, metric::SEQ_MRR, metric::LAST_ITEM_MRR).unwrap();
    outcome(
        clf.spearman >= 0.6 && seq.spearman >= 0.6,
        format!(
            "{} variants: spearman(alignment, kernel-clf macro-F1) {:+.3}, spearman(seq MRR, last-item MRR) {:+.3}",
            variants.len(),
            clf.spearman,
            seq.spearman
        ),
    )
}

fn c9_gradients_and_threads() -> Outcome {
    let mut r = common::rng(909);
    let h = 1e-5;
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let v: Vec<Vec<f64>> = (0..3).map(|_| (0..8).map(|_| r.random_range(-1.5..1.5)).collect()).collect();
        let (ga, gp, gn) = triplet_grad(&v[0], &v[1], &v[2]);
        for (which, g) in [ga, gp, gn].iter().enumerate() {
            for k in 0..8 {
                let (mut up, mut dn) = (v.clone(), v.clone());
                up[which][k] += h;
                dn[which][k] -= h;
                let num = (triplet_loss(&up[0], &up[1], &up[2]) - triplet_loss(&dn[0], &dn[1], &dn[2])) / (2.0 * h);
                worst = worst.max((g[k] - num).abs() / g[k].abs().max(num.abs()).max(1e-3));
            }
        }
    }
    let (data, _) = clustered_corpus(&CorpusConfig {
        num_items: 400,
        num_users: 1000,
        num_clusters: 10,
        ..CorpusConfig::default()
    })
    .unwrap();
    let cfg = SgnsConfig {
        dim: 16,
        max_epochs: 3,
        ..SgnsConfig::default()
    };
    let in_pool = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| (train(&data, &cfg).unwrap(), stability_study(&data, &cfg, 3).unwrap().summary))
    };
    let (one, eight) = (in_pool(1), in_pool(8));
    let bits = |t: &EmbeddingTable| t.vectors().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    let same = bits(&one.0.table) == bits(&eight.0.table) && one.0.summary == eight.0.summary && one.1 == eight.1;
    outcome(
        worst <= 1e-4 && same,
        format!(
            "worst gradient relative error {worst:.2e} at 20 points; 1 vs 8 threads {}",
            if same { "bit-identical" } else { "differ" }
        ),
    )
}

fn c10_stability() -> Outcome {
    let (data, _) = clustered_corpus(&CorpusConfig::default()).unwrap();
    let s = stability_study(&data, &SgnsConfig::default(), 10).unwrap().summary;
    let sd_ok = s.mean_coordinate_sd > 0.05 * s.mean_abs_coordinate;
    let corr_ok = s.mean_kernel_rank_corr > s.mean_coordinate_rank_corr;
    outcome(
        sd_ok && corr_ok,
        format!(
            "coordinate SD {:.4} vs mean |coordinate| {:.4}; cross-run rank correlation kernels {:.3} vs coordinates {:.3}",
            s.mean_coordinate_sd, s.mean_abs_coordinate, s.mean_kernel_rank_corr, s.mean_coordinate_rank_corr
        ),
    )
}

fn main() {
    let criteria: [(usize, &str, Option<u64>, fn() -> Outcome); 10] = [
        (1, "alignment oracle", Some(5), c1_alignment_oracle),
        (2, "ranking oracle", Some(10), c2_ranking_oracle),
        (3, "rotation and scale invariance", None, c3_invariance),
        (4, "risk bound", Some(30), c4_risk_bound),
        (5, "exposure-weighted recovery", Some(120), c5_recovery),
        (6, "simulator fidelity", Some(60), c6_simulator_fidelity),
        (7, "structure experiment", Some(300), c7_structure),
        (8, "metric-performance correlation", Some(900), c8_correlation),
        (9, "gradient check and thread reproducibility", None, c9_gradients_and_threads),
        (10, "stability study", Some(600), c10_stability),
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|s| s.parse().ok());
    let mut unexpected = Vec::new();
    for (id, name, limit, run) in criteria {
        if only.is_some_and(|o| o != id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed <= Duration::from_secs(l));
        let pass = out.pass && in_time;
        let budget = limit.map_or(String::new(), |l| format!(" / {l} s"));
        println!(
            "criterion {id:>2} {}: {name}: {}{} [{:.1} s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            if in_time { "" } else { "; over time budget" },
            elapsed.as_secs_f64()
        );
        if pass == EXPECTED_FAIL.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
    println!("acceptance: all outcomes as expected (known failures: {EXPECTED_FAIL:?})");
}
