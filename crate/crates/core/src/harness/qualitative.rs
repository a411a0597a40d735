use std::io::Write;

use serde::{Deserialize, Serialize};

use super::checkpoint::Checkpoint;
use crate::corpus::CommentRecord;
use crate::error::{Error, Result};
use crate::model::Variant;
use crate::textprep::encode_comment;

/// Sarcasm probabilities of the three variants for one comment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualitativeRow {
    pub text: String,
    pub author: String,
    pub gold: u8,
    pub p_noauthor: f64,
    pub p_bayes: f64,
    pub p_embed: f64,
}

fn probability(ckpt: &Checkpoint, record: &CommentRecord) -> Result<f64> {
    let vectors = ckpt.vectors.restore()?;
    let stats = ckpt.stats();
    let feature = ckpt.params.author_feature(&record.author, &stats);
    ckpt.params
        .predict_proba(&encode_comment(&record.text, &vectors)?, &feature)
}

/// Scores `records` with one checkpoint per variant, given in
/// no-author, prior, embedding order.
pub fn qualitative_rows(checkpoints: [&Checkpoint; 3], records: &[CommentRecord]) -> Result<Vec<QualitativeRow>> {
    for (ckpt, want) in checkpoints.iter().zip(Variant::ALL) {
        if ckpt.variant() != want {
            return Err(Error::Config(format!(
                "expected a {want} checkpoint, got {}",
                ckpt.variant()
            )));
        }
    }
    records
        .iter()
        .map(|r| {
            Ok(QualitativeRow {
                text: r.text.clone(),
                author: r.author.clone(),
                gold: r.label,
                p_noauthor: probability(checkpoints[0], r)?,
                p_bayes: probability(checkpoints[1], r)?,
                p_embed: probability(checkpoints[2], r)?,
            })
        })
        .collect()
}

pub fn write_tsv<W: Write>(rows: &[QualitativeRow], mut out: W) -> Result<()> {
    writeln!(out, "text\tauthor\tgold\tp_noauthor\tp_bayes\tp_embed")?;
    for r in rows {
        let text = r.text.replace(['\t', '\n', '\r'], " ");
        writeln!(
            out,
            "{text}\t{}\t{}\t{:.4}\t{:.4}\t{:.4}",
            r.author, r.gold, r.p_noauthor, r.p_bayes, r.p_embed
        )?;
    }
    Ok(())
}
