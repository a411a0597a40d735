use crate::corpus::{AuthorStatsTable, CommentRecord};
use crate::model::UNK_AUTHOR;

/// Replaces authors with fewer than `threshold` training comments by the
/// reserved UNK author, so their examples train the UNK vector. `None` is
/// the identity.
pub fn remap_rare_authors(
    records: &[CommentRecord],
    stats: &AuthorStatsTable,
    threshold: Option<usize>,
) -> Vec<CommentRecord> {
    let Some(threshold) = threshold else {
        return records.to_vec();
    };
    records
        .iter()
        .map(|r| {
            if stats.get(&r.author).total() < threshold as u64 {
                CommentRecord {
                    author: UNK_AUTHOR.to_string(),
                    ..r.clone()
                }
            } else {
                r.clone()
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::author_stats;

    fn recs(counts: &[(&str, usize)]) -> Vec<CommentRecord> {
        let mut out = Vec::new();
        for (author, n) in counts {
            for i in 0..*n {
                out.push(CommentRecord {
                    id: format!("{author}{i}"),
                    text: format!("text {i}"),
                    author: author.to_string(),
                    subreddit: "s".into(),
                    label: (i % 2) as u8,
                    pair_id: None,
                });
            }
        }
        out
    }

    #[test]
    fn threshold_is_strict() {
        let data = recs(&[("four", 4), ("five", 5)]);
        let stats = author_stats(&data);
        let out = remap_rare_authors(&data, &stats, Some(5));
        assert!(out[..4].iter().all(|r| r.author == UNK_AUTHOR));
        assert!(out[4..].iter().all(|r| r.author == "five"));
    }

    #[test]
    fn off_is_identity() {
        let data = recs(&[("a", 1), ("b", 7)]);
        let stats = author_stats(&data);
        assert_eq!(remap_rare_authors(&data, &stats, None), data);
    }

    #[test]
    fn only_authors_change() {
        let data = recs(&[("a", 1), ("b", 3), ("c", 9)]);
        let stats = author_stats(&data);
        let out = remap_rare_authors(&data, &stats, Some(5));
        assert_eq!(out.len(), data.len());
        for (a, b) in out.iter().zip(&data) {
            assert_eq!((&a.id, &a.text, a.label), (&b.id, &b.text, b.label));
        }
    }
}
