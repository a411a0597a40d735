//! BiGRU comment encoder with an optional author feature and a one- or
//! two-layer classifier head.
//!
//! The author feature is concatenated to the encoder output before the first
//! head layer. Its width is the only structural difference between variants:
//! 0 for [`Variant::NoAuthor`], 2 for [`Variant::BayesPrior`] (the author's
//! sarcastic / non-sarcastic training counts) and `author_dim` for
//! [`Variant::AuthorEmbed`] (a learned vector per training author, with a
//! shared UNK vector for everyone else).

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::corpus::AuthorStatsTable;
use crate::error::{Error, Result};
use crate::numerics::{
    check_rate, relu, sigmoid, BiGruTrace, DropoutMask, GruParams, LinearParams, Mode, Parameters, Tensor,
};

/// Half-width of the uniform init range for author vectors and the UNK vector.
pub const AUTHOR_INIT_RANGE: f64 = 0.1;

/// Author id that always maps to the UNK vector.
pub const UNK_AUTHOR: &str = "<unk-author>";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "noauthor")]
    NoAuthor,
    #[serde(rename = "bayes")]
    BayesPrior,
    #[serde(rename = "embed")]
    AuthorEmbed,
}

impl Variant {
    pub const ALL: [Variant; 3] = [Variant::NoAuthor, Variant::BayesPrior, Variant::AuthorEmbed];

    pub fn tag(self) -> &'static str {
        match self {
            Variant::NoAuthor => "noauthor",
            Variant::BayesPrior => "bayes",
            Variant::AuthorEmbed => "embed",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.tag() == s)
            .ok_or_else(|| Error::UnknownVariant(s.to_string()))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CountTransform {
    Raw,
    Log1p,
}

impl CountTransform {
    pub fn apply(self, count: u64) -> f64 {
        match self {
            CountTransform::Raw => count as f64,
            CountTransform::Log1p => (count as f64).ln_1p(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub variant: Variant,
    /// Word-vector dimension fed to the GRU.
    pub embedding_dim: usize,
    /// Hidden size per direction.
    pub hidden: usize,
    pub author_dim: usize,
    pub head_layers: usize,
    pub head_hidden: usize,
    pub dropout: f64,
    pub count_transform: CountTransform,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            variant: Variant::NoAuthor,
            embedding_dim: 300,
            hidden: 100,
            author_dim: 15,
            head_layers: 2,
            head_hidden: 64,
            dropout: 0.5,
            count_transform: CountTransform::Log1p,
        }
    }
}

impl ModelConfig {
    pub fn feature_width(&self) -> usize {
        match self.variant {
            Variant::NoAuthor => 0,
            Variant::BayesPrior => 2,
            Variant::AuthorEmbed => self.author_dim,
        }
    }

    pub fn head_input_width(&self) -> usize {
        2 * self.hidden + self.feature_width()
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.hidden == 0 {
            return Err(Error::Config("embedding_dim and hidden must be positive".into()));
        }
        if !(1..=2).contains(&self.head_layers) {
            return Err(Error::Config(format!(
                "head_layers must be 1 or 2, got {}",
                self.head_layers
            )));
        }
        if self.head_layers == 2 && self.head_hidden == 0 {
            return Err(Error::Config(
                "head_hidden must be positive for a two-layer head".into(),
            ));
        }
        if self.variant == Variant::AuthorEmbed && self.author_dim == 0 {
            return Err(Error::Config(
                "author_dim must be positive for the embedding variant".into(),
            ));
        }
        check_rate(self.dropout)
    }
}

/// Learned author vectors plus the UNK vector.
#[derive(Clone, Debug)]
pub struct AuthorTable {
    index: HashMap<String, usize>,
    names: Vec<String>,
    rows: Vec<Tensor>,
    pub unk: Tensor,
}

impl AuthorTable {
    fn init<'a, R: Rng + ?Sized>(authors: impl IntoIterator<Item = &'a str>, dim: usize, rng: &mut R) -> Self {
        let unk = Tensor::uniform(&[dim], AUTHOR_INIT_RANGE, rng);
        let mut table = AuthorTable {
            index: HashMap::new(),
            names: Vec::new(),
            rows: Vec::new(),
            unk,
        };
        for a in authors {
            if a == UNK_AUTHOR || table.index.contains_key(a) {
                continue;
            }
            table.index.insert(a.to_string(), table.names.len());
            table.names.push(a.to_string());
            table.rows.push(Tensor::uniform(&[dim], AUTHOR_INIT_RANGE, rng));
        }
        table
    }

    pub fn from_parts(entries: Vec<(String, Vec<f64>)>, unk: Vec<f64>) -> Result<Self> {
        let dim = unk.len();
        let mut table = AuthorTable {
            index: HashMap::new(),
            names: Vec::new(),
            rows: Vec::new(),
            unk: Tensor::from_vec(vec![dim], unk)?,
        };
        for (name, v) in entries {
            if v.len() != dim {
                return Err(Error::dim("author vector", dim, v.len()));
            }
            if table.index.insert(name.clone(), table.names.len()).is_some() {
                return Err(Error::Config(format!("duplicate author `{name}` in embedding table")));
            }
            table.names.push(name);
            table.rows.push(Tensor::from_vec(vec![dim], v)?);
        }
        Ok(table)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.unk.len()
    }

    pub fn get(&self, author: &str) -> Option<&Tensor> {
        self.index.get(author).map(|&i| &self.rows[i])
    }

    pub fn entries(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.rows)
    }
}

impl PartialEq for AuthorTable {
    fn eq(&self, other: &Self) -> bool {
        self.unk == other.unk && self.len() == other.len() && self.entries().all(|(name, v)| other.get(name) == Some(v))
    }
}

#[derive(Serialize, Deserialize)]
struct AuthorTableRepr {
    authors: Vec<(String, Vec<f64>)>,
    unk: Vec<f64>,
}

impl Serialize for AuthorTable {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut authors: Vec<(String, Vec<f64>)> = self
            .entries()
            .map(|(n, t)| (n.to_string(), t.values().to_vec()))
            .collect();
        authors.sort_by(|a, b| a.0.cmp(&b.0));
        AuthorTableRepr {
            authors,
            unk: self.unk.values().to_vec(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for AuthorTable {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = AuthorTableRepr::deserialize(d)?;
        AuthorTable::from_parts(repr.authors, repr.unk).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub fwd: GruParams,
    pub bwd: GruParams,
    pub head: Vec<LinearParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub authors: Option<AuthorTable>,
}

/// Where an author feature came from, so gradients can flow back into it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureSource {
    Empty,
    Counts,
    Author(usize),
    Unk,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuthorFeature {
    pub values: Vec<f64>,
    pub source: FeatureSource,
}

impl AuthorFeature {
    pub fn width(&self) -> usize {
        self.values.len()
    }
}

/// Builds parameters for `config`. For the embedding variant, `authors` are
/// the training authors that receive their own vector; other variants ignore it.
pub fn init_model<'a, R: Rng + ?Sized>(
    config: &ModelConfig,
    authors: impl IntoIterator<Item = &'a str>,
    rng: &mut R,
) -> Result<ModelParams> {
    config.validate()?;
    let (d, h) = (config.embedding_dim, config.hidden);
    let fwd = GruParams::xavier(d, h, rng);
    let bwd = GruParams::xavier(d, h, rng);
    let width = config.head_input_width();
    let head = if config.head_layers == 1 {
        vec![LinearParams::xavier(width, 1, rng)]
    } else {
        vec![
            LinearParams::xavier(width, config.head_hidden, rng),
            LinearParams::xavier(config.head_hidden, 1, rng),
        ]
    };
    let authors = (config.variant == Variant::AuthorEmbed).then(|| AuthorTable::init(authors, config.author_dim, rng));
    Ok(ModelParams {
        config: config.clone(),
        fwd,
        bwd,
        head,
        authors,
    })
}

/// Intermediate values of one forward pass.
#[derive(Clone, Debug)]
pub struct ForwardTrace {
    encoder: BiGruTrace,
    input: Vec<f64>,
    input_mask: DropoutMask,
    hidden_pre: Vec<f64>,
    hidden_mask: Option<DropoutMask>,
    pub logit: f64,
}

impl ForwardTrace {
    pub fn probability(&self) -> f64 {
        sigmoid(self.logit)
    }
}

impl ModelParams {
    pub fn variant(&self) -> Variant {
        self.config.variant
    }

    /// Checks every shape against the stored config.
    pub fn validate(&self) -> Result<()> {
        let c = &self.config;
        c.validate()?;
        self.fwd.validate()?;
        self.bwd.validate()?;
        for g in [&self.fwd, &self.bwd] {
            if g.input_dim() != c.embedding_dim || g.hidden_dim() != c.hidden {
                return Err(Error::Config("GRU shape disagrees with config".into()));
            }
        }
        if self.head.len() != c.head_layers {
            return Err(Error::Config("head depth disagrees with config".into()));
        }
        let mut width = c.head_input_width();
        for (i, layer) in self.head.iter().enumerate() {
            if layer.input_dim() != width {
                return Err(Error::dim("head layer input", width, layer.input_dim()));
            }
            if layer.bias.len() != layer.output_dim() {
                return Err(Error::dim("head layer bias", layer.output_dim(), layer.bias.len()));
            }
            width = layer.output_dim();
            if i + 1 == self.head.len() && width != 1 {
                return Err(Error::dim("head output", 1, width));
            }
        }
        match (&self.authors, c.variant) {
            (Some(t), Variant::AuthorEmbed) if t.dim() == c.author_dim => Ok(()),
            (None, Variant::NoAuthor | Variant::BayesPrior) => Ok(()),
            _ => Err(Error::Config("author table disagrees with variant".into())),
        }
    }

    pub fn author_feature(&self, author: &str, stats: &AuthorStatsTable) -> AuthorFeature {
        match self.config.variant {
            Variant::NoAuthor => AuthorFeature {
                values: Vec::new(),
                source: FeatureSource::Empty,
            },
            Variant::BayesPrior => {
                let c = stats.get(author);
                let t = self.config.count_transform;
                AuthorFeature {
                    values: vec![t.apply(c.sarcastic), t.apply(c.not_sarcastic)],
                    source: FeatureSource::Counts,
                }
            }
            Variant::AuthorEmbed => {
                let table = self.authors.as_ref().expect("embedding variant has an author table");
                match table.index.get(author) {
                    Some(&i) => AuthorFeature {
                        values: table.rows[i].values().to_vec(),
                        source: FeatureSource::Author(i),
                    },
                    None => AuthorFeature {
                        values: table.unk.values().to_vec(),
                        source: FeatureSource::Unk,
                    },
                }
            }
        }
    }

    pub fn forward_trace<R: Rng + ?Sized>(
        &self,
        encoded: &[Vec<f64>],
        feature: &AuthorFeature,
        mode: Mode,
        rng: &mut R,
    ) -> Result<ForwardTrace> {
        let expected = self.head[0].input_dim() - 2 * self.config.hidden;
        if feature.width() != expected {
            return Err(Error::dim("author feature", expected, feature.width()));
        }
        let encoder = BiGruTrace::run(encoded, &self.fwd, &self.bwd)?;
        let mut input = encoder.output();
        input.extend_from_slice(&feature.values);

        let rate = self.config.dropout;
        let input_mask = DropoutMask::sample(input.len(), rate, mode, rng)?;
        let hidden_pre = crate::numerics::linear(&input_mask.apply(&input), &self.head[0])?;
        let (logit, hidden_mask) = match self.head.get(1) {
            None => (hidden_pre[0], None),
            Some(out) => {
                let act: Vec<f64> = hidden_pre.iter().map(|&v| relu(v)).collect();
                let mask = DropoutMask::sample(act.len(), rate, mode, rng)?;
                (crate::numerics::linear(&mask.apply(&act), out)?[0], Some(mask))
            }
        };
        Ok(ForwardTrace {
            encoder,
            input,
            input_mask,
            hidden_pre,
            hidden_mask,
            logit,
        })
    }

    /// Probability of sarcasm.
    pub fn forward<R: Rng + ?Sized>(
        &self,
        encoded: &[Vec<f64>],
        feature: &AuthorFeature,
        mode: Mode,
        rng: &mut R,
    ) -> Result<f64> {
        Ok(self.forward_trace(encoded, feature, mode, rng)?.probability())
    }

    /// Eval-mode probability; needs no randomness.
    pub fn predict_proba(&self, encoded: &[Vec<f64>], feature: &AuthorFeature) -> Result<f64> {
        self.forward(encoded, feature, Mode::Eval, &mut NoRng)
    }

    /// Accumulates gradients of a loss whose derivative with respect to the
    /// logit of `trace` is `d_logit`.
    pub fn backward(&mut self, trace: &ForwardTrace, encoded: &[Vec<f64>], feature: &AuthorFeature, d_logit: f64) {
        let dropped_input = trace.input_mask.apply(&trace.input);
        let d_hidden_pre = match (&trace.hidden_mask, self.head.len()) {
            (Some(mask), 2) => {
                let act: Vec<f64> = trace.hidden_pre.iter().map(|&v| relu(v)).collect();
                let d_act = mask.backward(&self.head[1].backward(&mask.apply(&act), &[d_logit]));
                d_act
                    .iter()
                    .zip(&trace.hidden_pre)
                    .map(|(d, &u)| if u > 0.0 { *d } else { 0.0 })
                    .collect()
            }
            _ => vec![d_logit],
        };
        let d_input = trace
            .input_mask
            .backward(&self.head[0].backward(&dropped_input, &d_hidden_pre));
        let (d_enc, d_feat) = d_input.split_at(2 * self.config.hidden);
        trace.encoder.backward(encoded, d_enc, &mut self.fwd, &mut self.bwd);
        match feature.source {
            FeatureSource::Author(i) => {
                if let Some(t) = &mut self.authors {
                    t.rows[i].add_grad(d_feat);
                }
            }
            FeatureSource::Unk => {
                if let Some(t) = &mut self.authors {
                    t.unk.add_grad(d_feat);
                }
            }
            FeatureSource::Empty | FeatureSource::Counts => {}
        }
    }

    /// Σ of squared entries of the head weight matrices (biases excluded).
    pub fn head_weight_sq_norm(&self) -> f64 {
        self.head.iter().map(|l| l.weight.sum_of_squares()).sum()
    }
}

impl Parameters for ModelParams {
    fn tensors(&self) -> Vec<&Tensor> {
        let mut out: Vec<&Tensor> = Vec::new();
        out.extend(self.fwd.tensors());
        out.extend(self.bwd.tensors());
        for l in &self.head {
            out.push(&l.weight);
            out.push(&l.bias);
        }
        if let Some(t) = &self.authors {
            out.extend(&t.rows);
            out.push(&t.unk);
        }
        out
    }

    fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out: Vec<&mut Tensor> = Vec::new();
        out.extend(self.fwd.tensors_mut());
        out.extend(self.bwd.tensors_mut());
        for l in &mut self.head {
            out.push(&mut l.weight);
            out.push(&mut l.bias);
        }
        if let Some(t) = &mut self.authors {
            out.extend(t.rows.iter_mut());
            out.push(&mut t.unk);
        }
        out
    }
}

/// Label 1 iff `p >= threshold`.
pub fn predict(p: f64, threshold: f64) -> u8 {
    u8::from(p >= threshold)
}

/// Rng for eval-mode calls; dropout never draws in eval mode.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("eval mode draws no random numbers")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("eval mode draws no random numbers")
    }
    fn fill_bytes(&mut self, _: &mut [u8]) {
        unreachable!("eval mode draws no random numbers")
    }
    fn try_fill_bytes(&mut self, _: &mut [u8]) -> std::result::Result<(), rand::Error> {
        unreachable!("eval mode draws no random numbers")
    }
}
