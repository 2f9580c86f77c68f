//! Linear head on raw coordinates versus a kernel head on inner products,
//! over several contrastive pretraining runs.

use embkernel::harness::{balanced_catalog, structure_experiment, StructureConfig};

fn main() -> embkernel::Result<()> {
    let labels = balanced_catalog(3, 100)?;
    let rep = structure_experiment(&labels, &StructureConfig::default(), 5)?;
    for (name, h) in [("LR", &rep.lr), ("IP", &rep.ip)] {
        println!(
            "{name}: macro-F1 {:.3} +/- {:.3}   per run {:?}",
            h.mean_macro_f1,
            h.sd_macro_f1,
            h.macro_f1.iter().map(|f| (f * 1000.0).round() / 1000.0).collect::<Vec<_>>()
        );
    }
    Ok(())
}
