//! Exposure-discounted history embeddings, full-catalog ranking and the
//! sequence-kernel ridge predictor.

use embkernel::seq::{
    build_exposure_from_counts, rank_and_measure, sequence_embed, sequence_kernel, sequence_ridge_predict,
    unweighted_embed,
};
use embkernel::EmbeddingTable;

fn main() -> embkernel::Result<()> {
    let table = EmbeddingTable::from_rows(&[
        vec![1.0, 0.0],
        vec![0.9, 0.1],
        vec![0.0, 1.0],
        vec![-0.7, 0.7],
        vec![0.5, 0.5],
    ])?;
    // item 0 is very popular, so its presence in a history says little
    let exposure = build_exposure_from_counts(&[500, 3, 4, 2, 6], None)?;
    for i in 0..table.len() {
        println!("item {i}: p0 {:.3}, weight {:.3}", exposure.p0()[i], exposure.weight(i));
    }

    let history = [0, 0, 2];
    let weighted = sequence_embed(&table, &history, &exposure)?;
    println!("weighted history embedding {:?}", weighted.vector);
    println!("unweighted history embedding {:?}", unweighted_embed(&table, &history)?);

    let r = rank_and_measure(&table, &history, &exposure, 3, &[0, 2], &[1, 3])?;
    println!(
        "truth 3 ranks {} among the {} unseen items: MRR {:.3}, NDCG {:.3}",
        r.rank_of_truth,
        table.len() - 2,
        r.reciprocal_rank,
        r.ndcg
    );

    // the sequence kernel compares equal-length sequences position by position
    let seqs = [vec![0, 1], vec![2, 3], vec![4, 0]];
    println!("K_seq(s0, s1) = {:.3}", sequence_kernel(&table, &seqs[0], &seqs[1])?);
    let pred = sequence_ridge_predict(&table, &seqs, &[1.0, -1.0, 0.5], 0.1, &[1, 4])?;
    println!("ridge prediction for [1, 4]: {pred:.4}");
    Ok(())
}
