//! Skip-gram negative-sampling pretraining on a synthetic clustered corpus.

use embkernel::clf::alignment;
use embkernel::harness::{clustered_corpus, CorpusConfig};
use embkernel::sgns::{train, SgnsConfig};

fn main() -> embkernel::Result<()> {
    let (data, labels) = clustered_corpus(&CorpusConfig {
        num_items: 300,
        num_users: 800,
        num_clusters: 6,
        ..CorpusConfig::default()
    })?;
    let cfg = SgnsConfig {
        dim: 16,
        max_epochs: 15,
        seed: 11,
        ..SgnsConfig::default()
    };
    let out = train(&data, &cfg)?;
    for (e, (loss, acc)) in out.summary.losses.iter().zip(&out.summary.accuracies).enumerate() {
        println!("epoch {e:>2}: loss {loss:.4}, pair accuracy {acc:.3}");
    }
    if out.summary.early_stopped {
        println!("stopped early after {} epochs", out.summary.epochs);
    }
    let set = labels.join(&out.table)?;
    println!("alignment with cluster labels: {:.4}", alignment(&out.table, &set)?.value);
    Ok(())
}
