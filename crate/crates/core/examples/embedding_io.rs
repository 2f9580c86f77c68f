//! Saving and loading embedding tables in the text and binary formats.

use embkernel::EmbeddingTable;

fn main() -> embkernel::Result<()> {
    let table = EmbeddingTable::new(
        vec!["item-1".into(), "item-2".into()],
        vec![0.25, -1.5, 3.0, 0.125],
        2,
    )?;
    let dir = std::env::temp_dir().join(format!("embkernel-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let bin = dir.join("emb.bin");
    let txt = dir.join("emb.tsv");
    table.save_binary(&bin)?;
    table.save_text(&txt)?;
    println!("binary: {} bytes, text: {} bytes", std::fs::metadata(&bin)?.len(), std::fs::metadata(&txt)?.len());
    print!("{}", std::fs::read_to_string(&txt)?);

    // load() sniffs the format
    let back = EmbeddingTable::load(&bin)?;
    assert_eq!(back.vectors(), table.vectors());
    println!("reloaded {} rows of dim {} from {}", back.len(), back.dim(), bin.display());
    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
