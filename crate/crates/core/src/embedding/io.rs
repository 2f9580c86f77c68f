//! On-disk embedding formats.
//!
//! Text: one entity per line, `<id>\t<v1> <v2> ... <vd>`.
//!
//! Binary: `EMBK`, version byte `1`, `dim: u32le`, `count: u32le`, then
//! `count` records of `(id_len: u16le, id utf-8 bytes, dim × f32le)`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::EmbeddingTable;
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"EMBK";
pub const BINARY_VERSION: u8 = 1;

pub fn write_text<W: Write>(table: &EmbeddingTable, mut out: W) -> Result<()> {
    for i in 0..table.len() {
        write!(out, "{}\t", table.id(i))?;
        for (k, v) in table.row(i).iter().enumerate() {
            if k > 0 {
                out.write_all(b" ")?;
            }
            write!(out, "{v}")?;
        }
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_text<R: BufRead>(input: R) -> Result<EmbeddingTable> {
    let mut ids = Vec::new();
    let mut vectors = Vec::new();
    let mut dim = None;
    for (n, line) in input.lines().enumerate() {
        let line = line?;
        let lineno = n + 1;
        if line.trim().is_empty() {
            continue;
        }
        let (id, values) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: lineno,
            message: "expected `<id>\\t<values>`".into(),
        })?;
        let row = values
            .split_whitespace()
            .map(|v| {
                v.parse::<f64>().map_err(|e| Error::Parse {
                    line: lineno,
                    message: format!("bad float `{v}`: {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("expected {d} values, found {}", row.len()),
                })
            }
            _ => {}
        }
        ids.push(id.to_string());
        vectors.extend(row);
    }
    let dim = dim.ok_or(Error::EmptyInput("embedding text file"))?;
    EmbeddingTable::new(ids, vectors, dim)
}

pub fn write_binary<W: Write>(table: &EmbeddingTable, mut out: W) -> Result<()> {
    out.write_all(BINARY_MAGIC)?;
    out.write_all(&[BINARY_VERSION])?;
    out.write_all(&(table.dim() as u32).to_le_bytes())?;
    out.write_all(&(table.len() as u32).to_le_bytes())?;
    for i in 0..table.len() {
        let id = table.id(i).as_bytes();
        let len = u16::try_from(id.len()).map_err(|_| Error::Format(format!("id `{}` longer than 65535 bytes", table.id(i))))?;
        out.write_all(&len.to_le_bytes())?;
        out.write_all(id)?;
        for &v in table.row(i) {
            out.write_all(&(v as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn read_exact<R: Read, const N: usize>(input: &mut R, what: &str) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|_| Error::Format(format!("truncated while reading {what}")))?;
    Ok(buf)
}

pub fn read_binary<R: Read>(mut input: R) -> Result<EmbeddingTable> {
    let magic: [u8; 4] = read_exact(&mut input, "magic")?;
    if &magic != BINARY_MAGIC {
        return Err(Error::Format("bad magic bytes".into()));
    }
    let [version] = read_exact::<_, 1>(&mut input, "version")?;
    if version != BINARY_VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let dim = u32::from_le_bytes(read_exact(&mut input, "dim")?) as usize;
    let count = u32::from_le_bytes(read_exact(&mut input, "count")?) as usize;
    let mut ids = Vec::with_capacity(count);
    let mut vectors = Vec::with_capacity(count.saturating_mul(dim).min(1 << 26));
    for _ in 0..count {
        let len = u16::from_le_bytes(read_exact(&mut input, "id length")?) as usize;
        let mut id = vec![0u8; len];
        input
            .read_exact(&mut id)
            .map_err(|_| Error::Format("truncated id".into()))?;
        ids.push(String::from_utf8(id).map_err(|e| Error::Format(e.to_string()))?);
        for _ in 0..dim {
            vectors.push(f64::from(f32::from_le_bytes(read_exact(&mut input, "value")?)));
        }
    }
    EmbeddingTable::new(ids, vectors, dim)
}

impl EmbeddingTable {
    /// Loads either format, choosing by the magic bytes.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let mut reader = BufReader::new(File::open(path)?);
        let is_binary = reader.fill_buf()?.starts_with(BINARY_MAGIC);
        if is_binary {
            read_binary(reader)
        } else {
            read_text(reader)
        }
    }

    pub fn save_binary(&self, path: impl AsRef<Path>) -> Result<()> {
        write_binary(self, BufWriter::new(File::create(path)?))
    }

    pub fn save_text(&self, path: impl AsRef<Path>) -> Result<()> {
        write_text(self, BufWriter::new(File::create(path)?))
    }
}
