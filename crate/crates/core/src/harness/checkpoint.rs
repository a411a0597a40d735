use std::collections::HashMap;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::corpus::AuthorStatsTable;
use crate::error::{Error, Result};
use crate::model::{ModelParams, Variant};
use crate::textprep::{load_vectors, WordVectorTable};
use crate::trainer::TrainConfig;

pub const CHECKPOINT_FORMAT: &str = "author-sarcasm-checkpoint";
pub const CHECKPOINT_VERSION: u64 = 1;

/// Word vectors are either embedded in the checkpoint or referenced by path.
/// The UNK vector is always stored so reloads reproduce it exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StoredVectors {
    pub dim: usize,
    pub unk_seed: u64,
    pub unk: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<(String, Vec<f64>)>>,
}

impl StoredVectors {
    pub fn inline(table: &WordVectorTable) -> Self {
        StoredVectors {
            dim: table.dim(),
            unk_seed: table.unk_seed(),
            unk: table.unk_vector().to_vec(),
            source: None,
            entries: Some(
                table
                    .sorted_entries()
                    .into_iter()
                    .map(|(t, v)| (t.to_string(), v.to_vec()))
                    .collect(),
            ),
        }
    }

    pub fn by_path(table: &WordVectorTable, path: impl Into<PathBuf>) -> Self {
        StoredVectors {
            dim: table.dim(),
            unk_seed: table.unk_seed(),
            unk: table.unk_vector().to_vec(),
            source: Some(path.into()),
            entries: None,
        }
    }

    pub fn restore(&self) -> Result<WordVectorTable> {
        let vectors: HashMap<String, Vec<f64>> = match (&self.entries, &self.source) {
            (Some(entries), _) => entries.iter().cloned().collect(),
            (None, Some(path)) => {
                let file = fs::File::open(path)?;
                let table = load_vectors(BufReader::new(file), self.unk_seed)?;
                if table.dim() != self.dim {
                    return Err(Error::dim("referenced word vectors", self.dim, table.dim()));
                }
                table
                    .sorted_entries()
                    .into_iter()
                    .map(|(t, v)| (t.to_string(), v.to_vec()))
                    .collect()
            }
            (None, None) => return Err(Error::Checkpoint("vectors have neither entries nor a source".into())),
        };
        WordVectorTable::with_unk(self.dim, vectors, self.unk.clone(), self.unk_seed)
    }
}

/// Everything needed to rebuild a trained predictor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u64,
    pub train_config: TrainConfig,
    pub params: ModelParams,
    /// Training-split counts; required by the prior variant.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author_stats: Option<AuthorStatsTable>,
    pub vectors: StoredVectors,
}

impl Checkpoint {
    pub fn new(
        params: ModelParams,
        train_config: TrainConfig,
        author_stats: Option<AuthorStatsTable>,
        vectors: StoredVectors,
    ) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            train_config,
            params,
            author_stats,
            vectors,
        }
    }

    pub fn variant(&self) -> Variant {
        self.params.variant()
    }

    /// Counts the model reads author features from; empty when none were stored.
    pub fn stats(&self) -> AuthorStatsTable {
        self.author_stats.clone().unwrap_or_default()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| Error::Checkpoint("top level is not an object".into()))?;
        if obj.get("format").and_then(Value::as_str) != Some(CHECKPOINT_FORMAT) {
            return Err(Error::Checkpoint("missing or foreign format marker".into()));
        }
        let version = obj
            .get("version")
            .and_then(Value::as_u64)
            .ok_or_else(|| Error::Checkpoint("missing version".into()))?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::CheckpointVersion {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let tag = obj
            .get("params")
            .and_then(|p| p.get("config"))
            .and_then(|c| c.get("variant"))
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Checkpoint("missing variant tag".into()))?;
        tag.parse::<Variant>()?;
        let ckpt: Checkpoint = serde_json::from_value(value).map_err(|e| Error::Checkpoint(e.to_string()))?;
        ckpt.params.validate()?;
        if ckpt.vectors.dim != ckpt.params.config.embedding_dim {
            return Err(Error::dim(
                "checkpoint vectors",
                ckpt.params.config.embedding_dim,
                ckpt.vectors.dim,
            ));
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
