//! Pretraining variants, their kernel metrics and downstream metrics, and
//! the rank correlation between the two.

use embkernel::harness::{clustered_corpus, correlate, metric, run_variant_grid, CorpusConfig};
use embkernel::sgns::SgnsConfig;

fn main() -> embkernel::Result<()> {
    let (data, labels) = clustered_corpus(&CorpusConfig {
        num_items: 300,
        num_users: 800,
        num_clusters: 6,
        ..CorpusConfig::default()
    })?;
    let base = SgnsConfig {
        dim: 16,
        max_epochs: 8,
        ..SgnsConfig::default()
    };
    let variants = run_variant_grid(&data, &labels, &base, &[1, 2, 3], &[1, 3])?;
    for v in &variants {
        println!(
            "{}: alignment {:.4}, kernel-clf macro-F1 {:.3}, seq MRR {:.4}, last-item MRR {:.4}",
            v.name,
            v.metrics[metric::ALIGNMENT],
            v.metrics[metric::KERNEL_CLF_MACRO_F1],
            v.metrics[metric::SEQ_MRR],
            v.metrics[metric::LAST_ITEM_MRR]
        );
    }
    for (x, y) in [
        (metric::ALIGNMENT, metric::KERNEL_CLF_MACRO_F1),
        (metric::SEQ_MRR, metric::LAST_ITEM_MRR),
    ] {
        let c = correlate(&variants, x, y)?;
        println!("{x} vs {y}: spearman {:+.3}, pearson {:+.3}", c.spearman, c.pearson);
    }
    Ok(())
}
