use std::collections::BTreeMap;

use serde::Deserialize;

use crate::model::Variant;

/// Allowed distance, in macro-F1 points, from a published mean.
pub const REFERENCE_TOLERANCE: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ReferenceScore {
    pub mean: f64,
    pub ci: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
pub struct ReferenceStats {
    pub count: usize,
    pub percent_sarcastic: f64,
}

#[derive(Clone, Debug, Deserialize)]
pub struct ReferenceTable {
    /// Dataset name to variant tag to score (in percent).
    pub scores: BTreeMap<String, BTreeMap<String, ReferenceScore>>,
    pub corpus_stats: BTreeMap<String, ReferenceStats>,
}

impl ReferenceTable {
    pub fn builtin() -> Self {
        serde_json::from_str(include_str!("../../data/reference_scores.json")).expect("bundled reference table parses")
    }

    pub fn score(&self, dataset: &str, variant: Variant) -> Option<&ReferenceScore> {
        self.scores.get(dataset)?.get(variant.tag())
    }

    /// True when `observed` (a fraction in [0, 1]) is within tolerance of the reference.
    pub fn agrees(&self, dataset: &str, variant: Variant, observed: f64) -> Option<bool> {
        self.score(dataset, variant)
            .map(|r| (100.0 * observed - r.mean).abs() <= REFERENCE_TOLERANCE)
    }
}
