use std::collections::HashMap;
use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::tokenize::tokenize;
use crate::error::{Error, Result};

/// Half-width of the uniform range the UNK vector is drawn from.
pub const UNK_RANGE: f64 = 0.1;

/// Pretrained word vectors plus one shared vector for unknown tokens.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
    unk: Vec<f64>,
    unk_seed: u64,
}

fn draw_unk(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.gen_range(-UNK_RANGE..UNK_RANGE)).collect()
}

impl WordVectorTable {
    pub fn new(dim: usize, vectors: HashMap<String, Vec<f64>>, unk_seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("word vector dimension must be positive".into()));
        }
        if let Some((tok, v)) = vectors.iter().find(|(_, v)| v.len() != dim) {
            return Err(Error::Config(format!(
                "vector for `{tok}` has length {}, expected {dim}",
                v.len()
            )));
        }
        Ok(WordVectorTable {
            dim,
            vectors,
            unk: draw_unk(dim, unk_seed),
            unk_seed,
        })
    }

    /// Rebuilds a table whose UNK vector was stored explicitly.
    pub fn with_unk(dim: usize, vectors: HashMap<String, Vec<f64>>, unk: Vec<f64>, unk_seed: u64) -> Result<Self> {
        if unk.len() != dim {
            return Err(Error::dim("unk vector", dim, unk.len()));
        }
        let mut table = Self::new(dim, vectors, unk_seed)?;
        table.unk = unk;
        Ok(table)
    }

    /// Random vectors in `(-scale, scale)` for each token; used for synthetic corpora.
    pub fn random<S: AsRef<str>>(tokens: &[S], dim: usize, scale: f64, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ed0f_ec70);
        let vectors = tokens
            .iter()
            .map(|t| {
                (
                    t.as_ref().to_string(),
                    (0..dim).map(|_| rng.gen_range(-scale..scale)).collect(),
                )
            })
            .collect();
        Self::new(dim, vectors, seed)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn unk_vector(&self) -> &[f64] {
        &self.unk
    }

    pub fn unk_seed(&self) -> u64 {
        self.unk_seed
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.vectors.get(token).map(Vec::as_slice)
    }

    /// Exact match, then lowercase match, then the UNK vector.
    pub fn lookup(&self, token: &str) -> &[f64] {
        self.vectors
            .get(token)
            .or_else(|| self.vectors.get(&token.to_lowercase()))
            .map_or(&self.unk, Vec::as_slice)
    }

    /// Entries sorted by token, for deterministic serialization.
    pub fn sorted_entries(&self) -> Vec<(&str, &[f64])> {
        let mut entries: Vec<_> = self.vectors.iter().map(|(k, v)| (k.as_str(), v.as_slice())).collect();
        entries.sort_by(|a, b| a.0.cmp(b.0));
        entries
    }

    /// Keeps only the tokens in `keep` (plus their lowercase forms).
    pub fn restricted_to<'a>(&self, keep: impl IntoIterator<Item = &'a str>) -> Self {
        let mut vectors = HashMap::new();
        for tok in keep {
            for key in [tok.to_string(), tok.to_lowercase()] {
                if let Some(v) = self.vectors.get(&key) {
                    vectors.insert(key, v.clone());
                }
            }
        }
        WordVectorTable {
            dim: self.dim,
            vectors,
            unk: self.unk.clone(),
            unk_seed: self.unk_seed,
        }
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (tok, v) in self.sorted_entries() {
            write!(out, "{tok}")?;
            for x in v {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Reads the `<count> <dim>` header format, one `<token> <v1> ... <vdim>` row per line.
///
/// Duplicate tokens keep the last row. Blank lines are skipped.
pub fn load_vectors<R: BufRead>(reader: R, unk_seed: u64) -> Result<WordVectorTable> {
    let mut lines = reader.lines();
    let header = lines.next().ok_or_else(|| Error::parse(1, "missing header"))??;
    let mut fields = header.split_ascii_whitespace();
    let (Some(count), Some(dim), None) = (fields.next(), fields.next(), fields.next()) else {
        return Err(Error::parse(
            1,
            format!("expected `<count> <dim>` header, got `{header}`"),
        ));
    };
    let count: usize = count
        .parse()
        .map_err(|_| Error::parse(1, format!("bad count `{count}`")))?;
    let dim: usize = dim
        .parse()
        .map_err(|_| Error::parse(1, format!("bad dimension `{dim}`")))?;
    if dim == 0 {
        return Err(Error::parse(1, "dimension must be positive"));
    }

    let mut vectors = HashMap::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line?;
        let mut fields = line.split_ascii_whitespace();
        let Some(token) = fields.next() else { continue };
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::parse(lineno, format!("non-numeric component `{f}`")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if values.len() != dim {
            return Err(Error::parse(
                lineno,
                format!("token `{token}` has {} components, header says {dim}", values.len()),
            ));
        }
        vectors.insert(token.to_string(), values);
    }
    WordVectorTable::new(dim, vectors, unk_seed)
}

/// One row per token of `text`, in order.
pub fn encode_comment(text: &str, table: &WordVectorTable) -> Result<Vec<Vec<f64>>> {
    Ok(tokenize(text)?.iter().map(|t| table.lookup(t).to_vec()).collect())
}
