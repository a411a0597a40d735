use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use author_sarcasm::corpus::{author_stats, CommentRecord};
use author_sarcasm::model::{init_model, CountTransform, ModelConfig, Variant};
use author_sarcasm::numerics::{grad_check, grad_check_with_floor, Mode, Parameters};
use author_sarcasm::trainer::{accumulate_gradients, batch_loss, Example};

fn history(author: &str, sarcastic: usize, plain: usize) -> Vec<CommentRecord> {
    (0..sarcastic + plain)
        .map(|j| CommentRecord {
            id: format!("{author}-{j}"),
            text: "x".into(),
            author: author.into(),
            subreddit: "s".into(),
            label: u8::from(j < sarcastic),
            pair_id: None,
        })
        .collect()
}

fn check(config: &ModelConfig, seed: u64, seq_len: usize, l2: f64, floor: Option<f64>) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = history("a", 4, 1);
    counts.extend(history("b", 0, 2));
    let stats = author_stats(&counts);
    let examples: Vec<Example> = ["a", "b", "new"]
        .iter()
        .enumerate()
        .map(|(i, author)| Example {
            encoded: (0..seq_len)
                .map(|_| (0..config.embedding_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect(),
            author: author.to_string(),
            label: (i % 2) as u8,
        })
        .collect();
    let mut params = init_model(config, ["a", "b"], &mut rng).unwrap();
    let batch: Vec<&Example> = examples.iter().collect();
    params.zero_grad();
    accumulate_gradients(&mut params, &batch, &stats, l2, Mode::Eval, &mut rng).unwrap();
    let loss = |p: &_| batch_loss(p, &examples, &stats, l2).unwrap();
    match floor {
        Some(f) => grad_check_with_floor(&mut params, 1e-5, f, loss).max_rel_error,
        None => grad_check(&mut params, 1e-5, loss).max_rel_error,
    }
}

#[test]
fn reference_shapes_pass_for_every_variant() {
    for variant in Variant::ALL {
        let config = ModelConfig {
            variant,
            embedding_dim: 8,
            hidden: 4,
            author_dim: 15,
            head_layers: 2,
            head_hidden: 8,
            dropout: 0.5,
            count_transform: CountTransform::Log1p,
        };
        let err = check(&config, 3, 5, 1e-3, None);
        assert!(err < 1e-4, "{variant}: {err}");
    }
}

#[test]
fn raw_counts_and_single_layer_head() {
    for head_layers in [1, 2] {
        let config = ModelConfig {
            variant: Variant::BayesPrior,
            embedding_dim: 3,
            hidden: 2,
            head_layers,
            head_hidden: 3,
            count_transform: CountTransform::Raw,
            ..ModelConfig::default()
        };
        let err = check(&config, 8, 4, 0.0, None);
        assert!(err < 1e-4, "head_layers {head_layers}: {err}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    // Central differences at eps 1e-5 carry roughly 1e-11 of rounding noise,
    // so entries with gradients near 1e-8 are judged against a 1e-6 floor.
    #[test]
    fn random_small_models(v in 0usize..3, hidden in 1usize..4, dim in 1usize..4, seq_len in 1usize..5, seed in any::<u64>()) {
        let config = ModelConfig {
            variant: Variant::ALL[v],
            embedding_dim: dim,
            hidden,
            author_dim: 4,
            head_layers: 2,
            head_hidden: 3,
            dropout: 0.2,
            count_transform: CountTransform::Log1p,
        };
        let err = check(&config, seed, seq_len, 1e-2, Some(1e-6));
        prop_assert!(err < 1e-4, "{:?}: {}", config, err);
    }
}
