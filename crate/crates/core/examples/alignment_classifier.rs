//! Alignment with the label kernel, the mean-kernel classifier and the
//! resampled risk-bound check on two Gaussian blobs.

use embkernel::clf::{alignment, bound_check, f1_scores, kernel_classifier_predict_many};
use embkernel::data::LabeledSet;
use embkernel::harness::split_80_10_10;
use embkernel::EmbeddingTable;
use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};

fn main() -> embkernel::Result<()> {
    let (n, d) = (400, 8);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut rows = Vec::with_capacity(n);
    let mut classes = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 2;
        // means at +e0 and -e0, so two standard deviations apart
        let mut v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
        v[0] += if c == 0 { 1.0 } else { -1.0 };
        rows.push(v);
        classes.push(c);
    }
    let table = EmbeddingTable::from_rows(&rows)?;
    let set = LabeledSet::new((0..n).collect(), classes, 2)?;

    let a = alignment(&table, &set)?;
    println!("alignment = {:.4} over {} pairs", a.value, a.pair_count);

    let split = split_80_10_10(n, 7);
    let train = set.subset(&split.train);
    let test = set.subset(&split.test);
    let preds = kernel_classifier_predict_many(&table, &train, &test.indices)?;
    let f1 = f1_scores(&preds, &test.classes)?;
    println!("kernel classifier: micro-F1 {:.3}, macro-F1 {:.3}", f1.micro_f1, f1.macro_f1);

    let b = bound_check(&table, &set, 0.25, 200, 3, None)?;
    println!(
        "risk <= 1 - value*sqrt(delta) in {:.1}% of resamples (mean risk {:.3}, mean bound {:.3})",
        100.0 * b.pass_fraction,
        b.mean_risk,
        b.mean_bound
    );
    Ok(())
}
