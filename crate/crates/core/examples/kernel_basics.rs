//! Inner-product kernel, its arc-cosine transform and a blocked Gram matrix,
//! before and after a random rotation of the embedding space.

use embkernel::{arc_cosine_ntk, gram, kernel, random_rotation, EmbeddingTable};

fn main() -> embkernel::Result<()> {
    let table = EmbeddingTable::new(
        vec!["a".into(), "b".into(), "c".into()],
        vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.5],
        3,
    )?;
    println!("K(a,b) = {}", kernel(&table, 0, 1)?);
    println!("K(a,c) = {}", kernel(&table, 0, 2)?);
    println!("NTK(a,b) = {}", arc_cosine_ntk(&table, 0, 1)?);

    let all: Vec<usize> = (0..table.len()).collect();
    let g = gram(&table, &all, &all, 2)?;
    let rotated = random_rotation(&table, 42);
    let g_rot = gram(&rotated, &all, &all, 2)?;
    let max_diff = g.data.iter().zip(&g_rot.data).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("Gram matrix:\n{}", g.to_dmatrix());
    println!("largest change under rotation: {max_diff:.2e}");
    println!("coordinate a[0] before/after: {} / {:.4}", table.row(0)[0], rotated.row(0)[0]);
    Ok(())
}
