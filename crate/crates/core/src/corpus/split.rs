use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::record::CommentRecord;
use crate::error::{Error, Result};

/// Seeded random partition into `(train, holdout)`.
///
/// Records sharing a `pair_id` land on the same side. Without pairs the
/// holdout has exactly `round(fraction · N)` records; with pairs it has the
/// largest size not exceeding that target which whole groups can reach.
/// Both sides keep the input order.
pub fn split_holdout(
    records: &[CommentRecord],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<CommentRecord>, Vec<CommentRecord>)> {
    if !(fraction > 0.0 && fraction < 0.5) {
        return Err(Error::Config(format!(
            "holdout fraction {fraction} must lie in (0, 0.5)"
        )));
    }
    let target = (fraction * records.len() as f64).round() as usize;

    // Groups in first-appearance order, so the shuffle is input-determined.
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut by_pair: HashMap<&str, usize> = HashMap::new();
    for (i, r) in records.iter().enumerate() {
        match &r.pair_id {
            Some(p) => match by_pair.get(p.as_str()) {
                Some(&g) => groups[g].push(i),
                None => {
                    by_pair.insert(p, groups.len());
                    groups.push(vec![i]);
                }
            },
            None => groups.push(vec![i]),
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    groups.shuffle(&mut rng);

    let mut in_holdout = vec![false; records.len()];
    let mut remaining = target;
    for g in &groups {
        if remaining == 0 {
            break;
        }
        if g.len() <= remaining {
            remaining -= g.len();
            for &i in g {
                in_holdout[i] = true;
            }
        }
    }

    let (mut train, mut holdout) = (Vec::new(), Vec::new());
    for (r, held) in records.iter().zip(in_holdout) {
        if held {
            holdout.push(r.clone());
        } else {
            train.push(r.clone());
        }
    }
    Ok((train, holdout))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::HashSet;

    fn recs(n: usize, paired: bool) -> Vec<CommentRecord> {
        (0..n)
            .map(|i| CommentRecord {
                id: format!("c{i}"),
                text: "t".into(),
                author: format!("a{}", i % 7),
                subreddit: "s".into(),
                label: (i % 2) as u8,
                pair_id: paired.then(|| format!("p{}", i / 2)),
            })
            .collect()
    }

    #[test]
    fn five_percent_of_thousand() {
        let (train, hold) = split_holdout(&recs(1000, false), 0.05, 1).unwrap();
        assert_eq!((train.len(), hold.len()), (950, 50));
    }

    #[test]
    fn one_percent_of_thousand() {
        let (train, hold) = split_holdout(&recs(1000, false), 0.01, 1).unwrap();
        assert_eq!((train.len(), hold.len()), (990, 10));
    }

    #[test]
    fn same_seed_same_partition() {
        let data = recs(300, false);
        let a = split_holdout(&data, 0.1, 5).unwrap();
        let b = split_holdout(&data, 0.1, 5).unwrap();
        let c = split_holdout(&data, 0.1, 6).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn rejects_bad_fraction() {
        let data = recs(10, false);
        for f in [0.0, 0.5, 0.7, -0.1, f64::NAN] {
            assert!(matches!(split_holdout(&data, f, 0), Err(Error::Config(_))));
        }
    }

    #[test]
    fn pairs_stay_together() {
        let data = recs(1000, true);
        let (train, hold) = split_holdout(&data, 0.05, 3).unwrap();
        assert_eq!(hold.len(), 50);
        let held: HashSet<_> = hold.iter().map(|r| r.pair_id.clone().unwrap()).collect();
        assert!(train.iter().all(|r| !held.contains(r.pair_id.as_ref().unwrap())));
        assert_eq!(held.len(), 25);
    }

    #[test]
    fn odd_target_with_pairs_rounds_down() {
        // 0.05 · 1020 = 51, which pairs cannot hit exactly.
        let (train, hold) = split_holdout(&recs(1020, true), 0.05, 3).unwrap();
        assert_eq!(hold.len(), 50);
        assert_eq!(train.len(), 970);
    }

    proptest! {
        #[test]
        fn partition_is_exact(n in 1usize..400, frac in 0.01f64..0.49, seed in any::<u64>()) {
            let data = recs(n, false);
            let (train, hold) = split_holdout(&data, frac, seed).unwrap();
            prop_assert_eq!(hold.len(), (frac * n as f64).round() as usize);
            prop_assert_eq!(train.len() + hold.len(), n);
            let mut ids: Vec<_> = train.iter().chain(&hold).map(|r| r.id.clone()).collect();
            ids.sort();
            let mut want: Vec<_> = data.iter().map(|r| r.id.clone()).collect();
            want.sort();
            prop_assert_eq!(ids, want);
        }
    }
}
