//! Interaction logs, label catalogs and their on-disk forms.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

/// Default minimum interaction count for users and items.
pub const DEFAULT_MIN_COUNT: usize = 5;

/// Per-user chronologically ordered item sequences.
///
/// The last item of every sequence is the test item, the second-to-last the
/// validation item and the remainder the training prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionDataset {
    user_ids: Vec<String>,
    item_ids: Vec<String>,
    sequences: Vec<Vec<u32>>,
    item_counts: Vec<u64>,
}

/// One raw interaction in input order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interaction {
    pub user: String,
    pub item: String,
    pub timestamp: i64,
}

impl InteractionDataset {
    /// Builds a dataset from already-ordered sequences without filtering.
    pub fn from_sequences(user_ids: Vec<String>, item_ids: Vec<String>, sequences: Vec<Vec<u32>>) -> Result<Self> {
        if user_ids.len() != sequences.len() {
            return Err(Error::LengthMismatch {
                left: user_ids.len(),
                right: sequences.len(),
            });
        }
        if sequences.is_empty() {
            return Err(Error::DatasetEmpty);
        }
        for (u, seq) in sequences.iter().enumerate() {
            if seq.len() < 3 {
                return Err(Error::InvalidConfig(format!(
                    "user `{}` has {} interactions; at least 3 are needed for a split",
                    user_ids[u],
                    seq.len()
                )));
            }
            if let Some(&bad) = seq.iter().find(|&&i| i as usize >= item_ids.len()) {
                return Err(Error::Lookup {
                    index: bad as usize,
                    len: item_ids.len(),
                });
            }
        }
        let mut item_counts = vec![0u64; item_ids.len()];
        for seq in &sequences {
            for &i in &seq[..seq.len() - 2] {
                item_counts[i as usize] += 1;
            }
        }
        Ok(Self {
            user_ids,
            item_ids,
            sequences,
            item_counts,
        })
    }

    /// Orders, filters to the `min_count`-core fixed point and splits raw interactions.
    /// Users also need three interactions to yield a train/valid/test split,
    /// so that requirement takes part in the fixed point.
    pub fn from_interactions(records: &[Interaction], min_count: usize) -> Result<Self> {
        let min_user = min_count.max(3);
        let mut alive = vec![true; records.len()];
        loop {
            let mut user_n: HashMap<&str, usize> = HashMap::new();
            let mut item_n: HashMap<&str, usize> = HashMap::new();
            for (r, _) in records.iter().zip(&alive).filter(|(_, &a)| a) {
                *user_n.entry(&r.user).or_default() += 1;
                *item_n.entry(&r.item).or_default() += 1;
            }
            let mut changed = false;
            for (r, a) in records.iter().zip(alive.iter_mut()) {
                if *a && (user_n[r.user.as_str()] < min_user || item_n[r.item.as_str()] < min_count) {
                    *a = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }

        let mut user_index: HashMap<&str, usize> = HashMap::new();
        let mut user_ids = Vec::new();
        let mut per_user: Vec<Vec<(i64, usize)>> = Vec::new();
        for (pos, r) in records.iter().enumerate().filter(|(p, _)| alive[*p]) {
            let u = *user_index.entry(&r.user).or_insert_with(|| {
                user_ids.push(r.user.clone());
                per_user.push(Vec::new());
                user_ids.len() - 1
            });
            per_user[u].push((r.timestamp, pos));
        }

        let mut item_index: HashMap<&str, u32> = HashMap::new();
        let mut item_ids = Vec::new();
        let mut kept_users = Vec::new();
        let mut sequences = Vec::new();
        for (u, mut events) in per_user.into_iter().enumerate() {
            // stable: equal timestamps keep file order
            events.sort_by_key(|&(t, _)| t);
            let seq = events
                .iter()
                .map(|&(_, pos)| {
                    let item = &records[pos].item;
                    *item_index.entry(item).or_insert_with(|| {
                        item_ids.push(item.clone());
                        (item_ids.len() - 1) as u32
                    })
                })
                .collect();
            kept_users.push(user_ids[u].clone());
            sequences.push(seq);
        }
        if sequences.is_empty() {
            return Err(Error::DatasetEmpty);
        }
        Self::from_sequences(kept_users, item_ids, sequences)
    }

    pub fn num_users(&self) -> usize {
        self.user_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn user_ids(&self) -> &[String] {
        &self.user_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.item_ids.iter().position(|x| x == id)
    }

    pub fn sequences(&self) -> &[Vec<u32>] {
        &self.sequences
    }

    pub fn sequence(&self, user: usize) -> &[u32] {
        &self.sequences[user]
    }

    pub fn train(&self, user: usize) -> &[u32] {
        let s = &self.sequences[user];
        &s[..s.len() - 2]
    }

    pub fn valid(&self, user: usize) -> u32 {
        let s = &self.sequences[user];
        s[s.len() - 2]
    }

    pub fn test(&self, user: usize) -> u32 {
        *self.sequences[user].last().unwrap()
    }

    /// Everything before the test item (train prefix plus validation item).
    pub fn test_history(&self, user: usize) -> &[u32] {
        let s = &self.sequences[user];
        &s[..s.len() - 1]
    }

    /// Interaction counts per item over the training prefixes.
    pub fn item_counts(&self) -> &[u64] {
        &self.item_counts
    }

    pub fn num_interactions(&self) -> usize {
        self.sequences.iter().map(Vec::len).sum()
    }

    /// Re-expands the dataset into raw interactions with positional timestamps.
    pub fn to_interactions(&self) -> Vec<Interaction> {
        let mut out = Vec::with_capacity(self.num_interactions());
        for (u, seq) in self.sequences.iter().enumerate() {
            for (t, &i) in seq.iter().enumerate() {
                out.push(Interaction {
                    user: self.user_ids[u].clone(),
                    item: self.item_ids[i as usize].clone(),
                    timestamp: t as i64,
                });
            }
        }
        out
    }
}

fn csv_reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(input)
}

fn csv_line(record: &csv::StringRecord, fallback: usize) -> usize {
    record.position().map_or(fallback, |p| p.line() as usize)
}

/// Parses `user_id,item_id,timestamp[,...]` rows. A first row whose
/// timestamp is not an integer is treated as a header; extra columns such
/// as ratings are ignored.
pub fn parse_interactions<R: Read>(input: R) -> Result<Vec<Interaction>> {
    let mut out = Vec::new();
    for (n, rec) in csv_reader(input).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: e.position().map_or(n + 1, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = csv_line(&rec, n + 1);
        if rec.len() < 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected user_id,item_id,timestamp; found {} fields", rec.len()),
            });
        }
        let timestamp = match rec[2].parse::<i64>() {
            Ok(t) => t,
            Err(_) if n == 0 => continue,
            Err(e) => {
                return Err(Error::Parse {
                    line,
                    message: format!("bad timestamp `{}`: {e}", &rec[2]),
                })
            }
        };
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::Parse {
                line,
                message: "empty user or item id".into(),
            });
        }
        out.push(Interaction {
            user: rec[0].to_string(),
            item: rec[1].to_string(),
            timestamp,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InteractionFormat {
    Csv,
}

pub fn load_interactions(path: impl AsRef<Path>, format: InteractionFormat, min_count: usize) -> Result<InteractionDataset> {
    match format {
        InteractionFormat::Csv => {
            let records = parse_interactions(BufReader::new(File::open(path)?))?;
            InteractionDataset::from_interactions(&records, min_count)
        }
    }
}

pub fn write_interactions_csv<W: Write>(data: &InteractionDataset, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["user_id", "item_id", "timestamp"]).map_err(csv_io)?;
    for r in data.to_interactions() {
        w.write_record([r.user.as_str(), r.item.as_str(), &r.timestamp.to_string()])
            .map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

const CACHE_MAGIC: &[u8; 4] = b"EMBD";
const CACHE_VERSION: u8 = 1;

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    let len = u16::try_from(s.len()).map_err(|_| Error::Format(format!("id `{s}` longer than 65535 bytes")))?;
    out.write_all(&len.to_le_bytes())?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    input.read_exact(&mut b).map_err(|_| Error::Format("truncated cache".into()))?;
    Ok(u32::from_le_bytes(b))
}

fn read_str<R: Read>(input: &mut R) -> Result<String> {
    let mut b = [0u8; 2];
    input.read_exact(&mut b).map_err(|_| Error::Format("truncated cache".into()))?;
    let mut s = vec![0u8; u16::from_le_bytes(b) as usize];
    input.read_exact(&mut s).map_err(|_| Error::Format("truncated cache".into()))?;
    String::from_utf8(s).map_err(|e| Error::Format(e.to_string()))
}

/// Writes the filtered dataset as `EMBD`, version `1`, `num_items: u32le`,
/// item ids as `(u16le len, bytes)`, `num_users: u32le`, then per user the
/// id, `len: u32le` and `len` item indices as `u32le`.
pub fn write_dataset_cache<W: Write>(data: &InteractionDataset, mut out: W) -> Result<()> {
    out.write_all(CACHE_MAGIC)?;
    out.write_all(&[CACHE_VERSION])?;
    out.write_all(&(data.num_items() as u32).to_le_bytes())?;
    for id in &data.item_ids {
        write_str(&mut out, id)?;
    }
    out.write_all(&(data.num_users() as u32).to_le_bytes())?;
    for (id, seq) in data.user_ids.iter().zip(&data.sequences) {
        write_str(&mut out, id)?;
        out.write_all(&(seq.len() as u32).to_le_bytes())?;
        for &i in seq {
            out.write_all(&i.to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset_cache<R: Read>(mut input: R) -> Result<InteractionDataset> {
    let mut head = [0u8; 5];
    input.read_exact(&mut head).map_err(|_| Error::Format("truncated cache".into()))?;
    if &head[..4] != CACHE_MAGIC || head[4] != CACHE_VERSION {
        return Err(Error::Format("not a dataset cache".into()));
    }
    let n_items = read_u32(&mut input)? as usize;
    let item_ids = (0..n_items).map(|_| read_str(&mut input)).collect::<Result<Vec<_>>>()?;
    let n_users = read_u32(&mut input)? as usize;
    let mut user_ids = Vec::with_capacity(n_users);
    let mut sequences = Vec::with_capacity(n_users);
    for _ in 0..n_users {
        user_ids.push(read_str(&mut input)?);
        let len = read_u32(&mut input)? as usize;
        sequences.push((0..len).map(|_| read_u32(&mut input)).collect::<Result<Vec<_>>>()?);
    }
    InteractionDataset::from_sequences(user_ids, item_ids, sequences)
}

/// Item-to-class assignments with dense class indices in first-seen order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelCatalog {
    item_ids: Vec<String>,
    classes: Vec<usize>,
    class_names: Vec<String>,
}

impl LabelCatalog {
    /// Builds a catalog from `(item, class)` pairs; repeats with the same
    /// class collapse, conflicting repeats fail.
    pub fn from_pairs<I, S, T>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        let mut item_pos: HashMap<String, usize> = HashMap::new();
        let mut class_pos: HashMap<String, usize> = HashMap::new();
        let mut cat = LabelCatalog {
            item_ids: Vec::new(),
            classes: Vec::new(),
            class_names: Vec::new(),
        };
        for (item, class) in pairs {
            let (item, class) = (item.into(), class.into());
            let c = *class_pos.entry(class.clone()).or_insert_with(|| {
                cat.class_names.push(class.clone());
                cat.class_names.len() - 1
            });
            match item_pos.get(&item) {
                Some(&p) if cat.classes[p] != c => {
                    return Err(Error::LabelConflict {
                        item,
                        first: cat.class_names[cat.classes[p]].clone(),
                        second: class,
                    })
                }
                Some(_) => {}
                None => {
                    item_pos.insert(item.clone(), cat.item_ids.len());
                    cat.item_ids.push(item);
                    cat.classes.push(c);
                }
            }
        }
        Ok(cat)
    }

    pub fn len(&self) -> usize {
        self.item_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.item_ids.is_empty()
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    /// Class index of each catalog item, parallel to [`item_ids`](Self::item_ids).
    pub fn classes(&self) -> &[usize] {
        &self.classes
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    /// Catalog positions grouped by class.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_classes()];
        for (i, &c) in self.classes.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    /// Resolves every labelled item against an embedding table.
    pub fn join(&self, table: &EmbeddingTable) -> Result<LabeledSet> {
        let indices = self
            .item_ids
            .iter()
            .map(|id| table.index_of(id).ok_or_else(|| Error::UnknownId(id.clone())))
            .collect::<Result<Vec<_>>>()?;
        LabeledSet::new(indices, self.classes.clone(), self.num_classes())
    }

    /// Drops items the table does not know. Class indices are renumbered.
    pub fn restricted_to(&self, table: &EmbeddingTable) -> Result<LabelCatalog> {
        LabelCatalog::from_pairs(
            self.item_ids
                .iter()
                .zip(&self.classes)
                .filter(|(id, _)| table.index_of(id).is_some())
                .map(|(id, &c)| (id.clone(), self.class_names[c].clone())),
        )
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["item_id", "class_id"]).map_err(csv_io)?;
        for (id, &c) in self.item_ids.iter().zip(&self.classes) {
            w.write_record([id.as_str(), self.class_names[c].as_str()]).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn parse_labels<R: Read>(input: R) -> Result<LabelCatalog> {
    let mut pairs = Vec::new();
    for (n, rec) in csv_reader(input).records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        let line = csv_line(&rec, n + 1);
        if rec.len() < 2 || rec[0].is_empty() || rec[1].is_empty() {
            return Err(Error::Parse {
                line,
                message: "expected item_id,class_id".into(),
            });
        }
        if n == 0 && &rec[0] == "item_id" && &rec[1] == "class_id" {
            continue;
        }
        pairs.push((rec[0].to_string(), rec[1].to_string()));
    }
    LabelCatalog::from_pairs(pairs)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<LabelCatalog> {
    parse_labels(BufReader::new(File::open(path)?))
}

/// Table indices paired with dense class indices; the unit the metric
/// and downstream modules work on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSet {
    pub indices: Vec<usize>,
    pub classes: Vec<usize>,
    pub num_classes: usize,
}

impl LabeledSet {
    pub fn new(indices: Vec<usize>, classes: Vec<usize>, num_classes: usize) -> Result<Self> {
        if indices.len() != classes.len() {
            return Err(Error::LengthMismatch {
                left: indices.len(),
                right: classes.len(),
            });
        }
        if let Some(&c) = classes.iter().find(|&&c| c >= num_classes) {
            return Err(Error::InvalidConfig(format!("class index {c} >= {num_classes}")));
        }
        Ok(Self {
            indices,
            classes,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Picks the given positions (not table indices).
    pub fn subset(&self, positions: &[usize]) -> Self {
        Self {
            indices: positions.iter().map(|&p| self.indices[p]).collect(),
            classes: positions.iter().map(|&p| self.classes[p]).collect(),
            num_classes: self.num_classes,
        }
    }

    pub fn distinct_classes(&self) -> usize {
        let mut seen = vec![false; self.num_classes];
        self.classes.iter().for_each(|&c| seen[c] = true);
        seen.iter().filter(|&&s| s).count()
    }
}

/// Writes a dataset cache to `path`.
pub fn save_dataset_cache(data: &InteractionDataset, path: impl AsRef<Path>) -> Result<()> {
    write_dataset_cache(data, BufWriter::new(File::create(path)?))
}

pub fn load_dataset_cache(path: impl AsRef<Path>) -> Result<InteractionDataset> {
    read_dataset_cache(BufReader::new(File::open(path)?))
}
