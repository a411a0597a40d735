use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One labeled comment. `label` is 1 for sarcastic, 0 otherwise.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommentRecord {
    pub id: String,
    pub text: String,
    pub author: String,
    pub subreddit: String,
    pub label: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_id: Option<String>,
}

impl CommentRecord {
    pub fn is_sarcastic(&self) -> bool {
        self.label == 1
    }
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    text: String,
    author: String,
    subreddit: String,
    label: i64,
    #[serde(default)]
    pair_id: Option<String>,
}

/// Parses one JSON object per line; blank lines are skipped.
pub fn load_jsonl<R: BufRead>(reader: R) -> Result<Vec<CommentRecord>> {
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::parse(lineno, e.to_string()))?;
        let label = match raw.label {
            0 => 0,
            1 => 1,
            other => return Err(Error::parse(lineno, format!("label {other} is not 0 or 1"))),
        };
        if raw.text.trim().is_empty() {
            return Err(Error::parse(lineno, "empty comment text"));
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::parse(lineno, format!("duplicate id `{}`", raw.id)));
        }
        records.push(CommentRecord {
            id: raw.id,
            text: raw.text,
            author: raw.author,
            subreddit: raw.subreddit,
            label,
            pair_id: raw.pair_id,
        });
    }
    Ok(records)
}

pub fn write_jsonl<W: Write>(records: &[CommentRecord], mut out: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
