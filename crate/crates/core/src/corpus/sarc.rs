//! Adapter from the raw SARC distribution to [`CommentRecord`]s.
//!
//! SARC ships a `comments.json` object keyed by comment id and index files
//! whose lines read `ancestor ids|response ids|labels`, each field a
//! space-separated list. Responses on one line answer the same parent; in
//! the balanced files they form the sarcastic/non-sarcastic pair, so the
//! line number becomes the `pair_id`.

use std::collections::HashMap;
use std::io::{BufRead, Read};

use serde::Deserialize;

use super::record::CommentRecord;
use crate::error::{Error, Result};

#[derive(Debug, Deserialize)]
pub struct RawComment {
    pub text: String,
    pub author: String,
    pub subreddit: String,
}

pub fn read_comments<R: Read>(reader: R) -> Result<HashMap<String, RawComment>> {
    Ok(serde_json::from_reader(reader)?)
}

/// Converts one index file. Responses with empty text are dropped.
pub fn convert_index<R: BufRead>(
    index: R,
    comments: &HashMap<String, RawComment>,
    paired: bool,
) -> Result<Vec<CommentRecord>> {
    let mut out = Vec::new();
    for (i, line) in index.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim_end().split('|').collect();
        let [_, responses, labels] = fields[..] else {
            return Err(Error::parse(lineno, "expected `ancestors|responses|labels`"));
        };
        let responses: Vec<&str> = responses.split_ascii_whitespace().collect();
        let labels: Vec<&str> = labels.split_ascii_whitespace().collect();
        if responses.len() != labels.len() {
            return Err(Error::parse(lineno, "response and label counts differ"));
        }
        for (id, label) in responses.iter().zip(labels) {
            let label = match label {
                "0" => 0,
                "1" => 1,
                other => return Err(Error::parse(lineno, format!("label `{other}` is not 0 or 1"))),
            };
            let c = comments
                .get(*id)
                .ok_or_else(|| Error::parse(lineno, format!("comment `{id}` missing from comments file")))?;
            if c.text.trim().is_empty() {
                continue;
            }
            out.push(CommentRecord {
                id: id.to_string(),
                text: c.text.clone(),
                author: c.author.clone(),
                subreddit: c.subreddit.clone(),
                label,
                pair_id: paired.then(|| format!("line{lineno}")),
            });
        }
    }
    Ok(out)
}
