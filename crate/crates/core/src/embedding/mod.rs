//! Embedding storage and the inner-product kernel.
//!
//! An [`EmbeddingTable`] maps opaque entity ids to dense `u32` indices and
//! stores one `dim`-dimensional row per entity. Everything downstream reads
//! the embedding exclusively through [`kernel`] (or [`gram`]), so any two
//! tables related by an orthogonal transform produce the same metrics.

mod io;

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::Range;

use nalgebra::DMatrix;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng;

pub use io::{read_binary, read_text, write_binary, write_text, BINARY_MAGIC, BINARY_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    ids: Vec<String>,
    index: HashMap<String, u32>,
    vectors: Vec<f64>,
    dim: usize,
    norm_bound: Option<f64>,
}

impl EmbeddingTable {
    /// Builds a table from ids and a row-major `ids.len() x dim` buffer.
    pub fn new(ids: Vec<String>, vectors: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidConfig("embedding dimension must be positive".into()));
        }
        if vectors.len() != ids.len() * dim {
            return Err(Error::LengthMismatch {
                left: vectors.len(),
                right: ids.len() * dim,
            });
        }
        if let Some(pos) = vectors.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("row {} of embedding `{}`", pos / dim, ids[pos / dim])));
        }
        if ids.len() > u32::MAX as usize {
            return Err(Error::InvalidConfig("too many entities".into()));
        }
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if index.insert(id.clone(), i as u32).is_some() {
                return Err(Error::InvalidConfig(format!("duplicate entity id `{id}`")));
            }
        }
        Ok(Self {
            ids,
            index,
            vectors,
            dim,
            norm_bound: None,
        })
    }

    /// Builds a table from rows; ids default to the row number.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::InvalidConfig("ragged rows".into()));
        }
        let ids = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::new(ids, rows.concat(), dim)
    }

    /// Declares `‖row‖₂ ≤ bound` for every row, failing if any row violates it.
    pub fn with_norm_bound(mut self, bound: f64) -> Result<Self> {
        for i in 0..self.len() {
            let n = self.norm(i);
            if n > bound {
                return Err(Error::Domain(format!(
                    "row `{}` has norm {n} above the declared bound {bound}",
                    self.ids[i]
                )));
            }
        }
        self.norm_bound = Some(bound);
        Ok(self)
    }

    pub fn norm_bound(&self) -> Option<f64> {
        self.norm_bound
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).map(|&i| i as usize)
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.vectors[i * self.dim..(i + 1) * self.dim]
    }

    pub fn try_row(&self, i: usize) -> Result<&[f64]> {
        self.check(i)?;
        Ok(self.row(i))
    }

    pub fn vectors(&self) -> &[f64] {
        &self.vectors
    }

    pub fn norm(&self, i: usize) -> f64 {
        dot(self.row(i), self.row(i)).sqrt()
    }

    pub(crate) fn check(&self, i: usize) -> Result<()> {
        if i >= self.len() {
            return Err(Error::Lookup {
                index: i,
                len: self.len(),
            });
        }
        Ok(())
    }

    /// Returns a copy with every coordinate multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.vectors.iter_mut().for_each(|v| *v *= c);
        out.norm_bound = self.norm_bound.map(|b| b * c.abs());
        out
    }

    /// Returns a copy where each row `v` is replaced by `m · v`.
    pub fn transformed(&self, m: &DMatrix<f64>) -> Self {
        assert_eq!(m.nrows(), self.dim);
        assert_eq!(m.ncols(), self.dim);
        let mut out = self.clone();
        for (src, dst) in self.vectors.chunks(self.dim).zip(out.vectors.chunks_mut(self.dim)) {
            for (r, d) in dst.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (c, s) in src.iter().enumerate() {
                    acc += m[(r, c)] * s;
                }
                *d = acc;
            }
        }
        out
    }
}

/// Dot product accumulated left to right in double precision.
#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        acc += x * y;
    }
    acc
}

/// `K(i, j) = ⟨φ(i), φ(j)⟩`.
pub fn kernel(table: &EmbeddingTable, i: usize, j: usize) -> Result<f64> {
    Ok(dot(table.try_row(i)?, table.try_row(j)?))
}

/// Two-layer ReLU network tangent kernel as a function of the embedding
/// kernel: `1 - arccos(cos θ) / π`.
pub fn arc_cosine_ntk(table: &EmbeddingTable, i: usize, j: usize) -> Result<f64> {
    let k = kernel(table, i, j)?;
    let (ni, nj) = (table.norm(i), table.norm(j));
    if ni <= 0.0 || nj <= 0.0 {
        let zero = if ni <= 0.0 { i } else { j };
        return Err(Error::Domain(format!(
            "entity `{}` has a zero-norm embedding; cosine undefined",
            table.id(zero)
        )));
    }
    let cos = (k / (ni * nj)).clamp(-1.0, 1.0);
    Ok(1.0 - cos.acos() / PI)
}

/// Tile description for [`gram_block`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GramBlockSpec {
    pub row_range: Range<usize>,
    pub col_range: Range<usize>,
    pub block_size: usize,
}

/// Dense row-major matrix returned by the Gram routines.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl GramMatrix {
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }
}

/// Kernel matrix between two index sets, computed tile by tile in parallel.
///
/// Each entry is one [`dot`] call, so the output is bit-identical for every
/// block size and thread count.
pub fn gram(table: &EmbeddingTable, rows: &[usize], cols: &[usize], block_size: usize) -> Result<GramMatrix> {
    if block_size == 0 {
        return Err(Error::InvalidConfig("block_size must be at least 1".into()));
    }
    for &i in rows.iter().chain(cols) {
        table.check(i)?;
    }
    let ncols = cols.len();
    let mut data = vec![0.0; rows.len() * ncols];
    if ncols == 0 || rows.is_empty() {
        return Ok(GramMatrix {
            rows: rows.len(),
            cols: ncols,
            data,
        });
    }
    data.par_chunks_mut(block_size * ncols)
        .zip(rows.par_chunks(block_size))
        .for_each(|(out, row_block)| {
            for col_start in (0..ncols).step_by(block_size) {
                let col_end = (col_start + block_size).min(ncols);
                for (r, &ri) in row_block.iter().enumerate() {
                    let a = table.row(ri);
                    for c in col_start..col_end {
                        out[r * ncols + c] = dot(a, table.row(cols[c]));
                    }
                }
            }
        });
    Ok(GramMatrix {
        rows: rows.len(),
        cols: ncols,
        data,
    })
}

pub fn gram_block(table: &EmbeddingTable, spec: &GramBlockSpec) -> Result<GramMatrix> {
    if spec.row_range.end > table.len() || spec.col_range.end > table.len() {
        return Err(Error::Lookup {
            index: spec.row_range.end.max(spec.col_range.end).saturating_sub(1),
            len: table.len(),
        });
    }
    let rows: Vec<usize> = spec.row_range.clone().collect();
    let cols: Vec<usize> = spec.col_range.clone().collect();
    gram(table, &rows, &cols, spec.block_size)
}

/// Seeded Haar-distributed orthogonal matrix (QR of a Gaussian matrix with
/// the sign of `R`'s diagonal folded into `Q`).
pub fn random_orthogonal(dim: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng::stage_rng(seed, "random-rotation");
    let g = DMatrix::from_fn(dim, dim, |_, _| StandardNormal.sample(&mut rng));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for c in 0..dim {
        if r[(c, c)] < 0.0 {
            q.column_mut(c).neg_mut();
        }
    }
    q
}

pub fn random_rotation(table: &EmbeddingTable, seed: u64) -> EmbeddingTable {
    table.transformed(&random_orthogonal(table.dim(), seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(rows: &[&[f64]]) -> EmbeddingTable {
        EmbeddingTable::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn kernel_examples() {
        let t = table(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 2.0], &[3.0, 4.0]]);
        assert_eq!(kernel(&t, 0, 1).unwrap(), 0.0);
        assert_eq!(kernel(&t, 2, 3).unwrap(), 11.0);
        assert_eq!(kernel(&t, 3, 3).unwrap(), 25.0);
        assert!(matches!(kernel(&t, 0, 4), Err(Error::Lookup { index: 4, len: 4 })));
    }

    #[test]
    fn ntk_examples() {
        let t = table(&[&[3.0, 4.0], &[1.0, 0.0], &[0.0, 2.0], &[-2.0, 0.0], &[0.0, 0.0]]);
        assert_eq!(arc_cosine_ntk(&t, 0, 0).unwrap(), 1.0);
        assert!((arc_cosine_ntk(&t, 1, 2).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(arc_cosine_ntk(&t, 1, 3).unwrap(), 0.0);
        assert!(matches!(arc_cosine_ntk(&t, 1, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn gram_identity_and_empty() {
        let t = table(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let g = gram(&t, &[0, 1], &[0, 1], 1).unwrap();
        assert_eq!(g.data, vec![1.0, 0.0, 0.0, 1.0]);
        let e = gram(&t, &[], &[0], 4).unwrap();
        assert!(e.data.is_empty());
        assert!(gram(&t, &[0], &[0], 0).is_err());
    }

    #[test]
    fn one_dimensional_rotation_is_a_sign() {
        let t = table(&[&[2.0], &[-3.0]]);
        let q = random_orthogonal(1, 11);
        assert_eq!(q[(0, 0)].abs(), 1.0);
        let r = random_rotation(&t, 11);
        assert_eq!(kernel(&r, 0, 1).unwrap(), kernel(&t, 0, 1).unwrap());
    }

    #[test]
    fn rotation_is_orthogonal() {
        for d in [2, 5, 16] {
            let q = random_orthogonal(d, 3);
            let qtq = q.transpose() * &q;
            for r in 0..d {
                for c in 0..d {
                    let want = if r == c { 1.0 } else { 0.0 };
                    assert!((qtq[(r, c)] - want).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn rejects_bad_tables() {
        assert!(EmbeddingTable::new(vec!["a".into(), "a".into()], vec![0.0; 2], 1).is_err());
        assert!(EmbeddingTable::new(vec!["a".into()], vec![f64::NAN], 1).is_err());
        assert!(EmbeddingTable::new(vec!["a".into()], vec![1.0, 2.0], 1).is_err());
        let t = table(&[&[3.0, 4.0]]);
        assert!(t.clone().with_norm_bound(4.9).is_err());
        assert_eq!(t.with_norm_bound(5.0).unwrap().norm_bound(), Some(5.0));
    }
}
