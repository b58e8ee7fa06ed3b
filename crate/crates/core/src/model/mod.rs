//! Full tagger assembly: baseline Bi-LSTM-CRF and the two dictionary
//! integration architectures, with training, decoding and serialization.

mod serialize;
mod train;

pub use serialize::{load_model, load_model_str, save_model, save_model_string};
pub use train::{evaluate_model, train, train_with_init, EpochMetrics, TrainOutcome};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    bieos_transition_allowed, tags_to_spans_lenient, EntitySpan, LabeledSentence, Tag, Vocabulary,
    DEFAULT_CLAUSE_DELIMITERS, NUM_TAGS,
};
use crate::crf::{viterbi_decode, viterbi_decode_masked, EmissionScores, TransitionMatrix};
use crate::dictionary::Dictionary;
use crate::error::Error;
use crate::features::{encode_sentence, FeatureColumns, FeatureScheme};
use crate::nn::{
    bilstm_backward, bilstm_forward_cached, dropout_backward, dropout_forward,
    parse_embedding_text, BiLstmCache, BiLstmGrads, BiLstmParams, EmbeddingTable, Matrix, Mode,
};

/// The three tagger architectures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArchKind {
    Baseline,
    ModelI,
    ModelII,
}

impl ArchKind {
    pub fn name(self) -> &'static str {
        match self {
            ArchKind::Baseline => "baseline",
            ArchKind::ModelI => "model1",
            ArchKind::ModelII => "model2",
        }
    }

    pub fn parse(s: &str) -> Option<ArchKind> {
        match s {
            "baseline" => Some(ArchKind::Baseline),
            "model1" => Some(ArchKind::ModelI),
            "model2" => Some(ArchKind::ModelII),
            _ => None,
        }
    }
}

/// Hyperparameters and architectural choices. Defaults: d_e = d_d = 128,
/// d_h = 256, d_hx = d_hd = 128, dropout 0.2, batch 128.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub arch: ArchKind,
    pub scheme: Option<FeatureScheme>,
    pub d_e: usize,
    pub d_d: usize,
    pub d_h: usize,
    pub d_hx: usize,
    pub d_hd: usize,
    pub dropout: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub learning_rate: f64,
    pub clip_norm: Option<f64>,
    pub split_clauses: bool,
    pub mask_decode: bool,
    pub dev_fraction: f64,
    pub patience: Option<usize>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            arch: ArchKind::ModelI,
            scheme: Some(FeatureScheme::PdetEmbed),
            d_e: 128,
            d_d: 128,
            d_h: 256,
            d_hx: 128,
            d_hd: 128,
            dropout: 0.2,
            batch_size: 128,
            epochs: 30,
            seed: 42,
            learning_rate: 0.001,
            clip_norm: None,
            split_clauses: true,
            mask_decode: false,
            dev_fraction: 0.0,
            patience: None,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), Error> {
        if self.arch == ArchKind::Baseline {
            if self.scheme.is_some() {
                return Err(Error::Config("baseline takes no feature scheme".into()));
            }
        } else if self.scheme.is_none() {
            return Err(Error::Config(format!(
                "{} requires a feature scheme",
                self.arch.name()
            )));
        }
        let sizes = [self.d_e, self.d_h, self.batch_size];
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::Config("sizes must be >= 1".into()));
        }
        if self.arch == ArchKind::ModelII && (self.d_hx == 0 || self.d_hd == 0) {
            return Err(Error::Config("model2 requires d_hx and d_hd >= 1".into()));
        }
        if matches!(
            self.scheme,
            Some(FeatureScheme::PietEmbed | FeatureScheme::PdetEmbed)
        ) && self.d_d == 0
        {
            return Err(Error::Config("embedding schemes require d_d >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} out of range", self.dropout)));
        }
        if !(0.0..1.0).contains(&self.dev_fraction) {
            return Err(Error::Config("dev fraction must be in [0, 1)".into()));
        }
        Ok(())
    }

    /// Width of the per-character feature vector (0 for Baseline).
    pub fn feature_width(&self) -> usize {
        self.scheme.map(|s| s.width(self.d_d)).unwrap_or(0)
    }

    /// Width of the encoder output fed to the scoring layer.
    pub fn crf_input_width(&self) -> usize {
        match self.arch {
            ArchKind::Baseline | ArchKind::ModelI => 2 * self.d_h,
            ArchKind::ModelII => 2 * self.d_hx + 2 * self.d_hd,
        }
    }
}

/// Sequence encoders: one Bi-LSTM, or two independent parallel ones.
#[derive(Debug, Clone, PartialEq)]
pub enum Encoders {
    Single(BiLstmParams),
    Dual {
        chars: BiLstmParams,
        feats: BiLstmParams,
    },
}

/// Complete parameter container for a trained or initialized tagger.
#[derive(Debug, Clone, PartialEq)]
pub struct TaggerModel {
    pub config: ModelConfig,
    pub vocab: Vocabulary,
    pub char_table: EmbeddingTable,
    pub feat_table: Option<EmbeddingTable>,
    pub encoders: Encoders,
    pub proj_w: Matrix,
    pub proj_b: Vec<f64>,
    pub transitions: TransitionMatrix,
    pub dict_fingerprint: String,
}

/// Builds a freshly initialized model; all randomness comes from the
/// config seed.
pub fn build_model(config: &ModelConfig, vocab: Vocabulary) -> Result<TaggerModel, Error> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let char_table = EmbeddingTable::init(vocab.size(), config.d_e, &mut rng);
    let feat_table = config
        .scheme
        .and_then(|s| s.label_count())
        .map(|rows| EmbeddingTable::init(rows, config.d_d, &mut rng));
    let encoders = match config.arch {
        ArchKind::Baseline => Encoders::Single(BiLstmParams::init(config.d_e, config.d_h, &mut rng)),
        ArchKind::ModelI => Encoders::Single(BiLstmParams::init(
            config.d_e + config.feature_width(),
            config.d_h,
            &mut rng,
        )),
        ArchKind::ModelII => Encoders::Dual {
            chars: BiLstmParams::init(config.d_e, config.d_hx, &mut rng),
            feats: BiLstmParams::init(config.feature_width(), config.d_hd, &mut rng),
        },
    };
    let enc_out = config.crf_input_width();
    let mut proj_w = Matrix::zeros(NUM_TAGS, enc_out);
    let bound = (6.0 / (enc_out + NUM_TAGS) as f64).sqrt();
    for v in proj_w.as_mut_slice() {
        *v = rand::Rng::gen_range(&mut rng, -bound..=bound);
    }
    Ok(TaggerModel {
        config: config.clone(),
        vocab,
        char_table,
        feat_table,
        encoders,
        proj_w,
        proj_b: vec![0.0; NUM_TAGS],
        transitions: TransitionMatrix::zeros(NUM_TAGS),
        dict_fingerprint: String::new(),
    })
}

fn lstm_tensors(p: &crate::nn::LstmParams) -> Vec<&[f64]> {
    let mut v = Vec::with_capacity(12);
    for m in &p.w {
        v.push(m.as_slice());
    }
    for m in &p.u {
        v.push(m.as_slice());
    }
    for b in &p.b {
        v.push(b.as_slice());
    }
    v
}

fn lstm_tensors_mut(p: &mut crate::nn::LstmParams) -> Vec<&mut [f64]> {
    let mut v = Vec::with_capacity(12);
    for m in &mut p.w {
        v.push(m.as_mut_slice());
    }
    for m in &mut p.u {
        v.push(m.as_mut_slice());
    }
    for b in &mut p.b {
        v.push(b.as_mut_slice());
    }
    v
}

fn lstm_grad_tensors(g: &crate::nn::LstmGrads) -> Vec<&[f64]> {
    let mut v = Vec::with_capacity(12);
    for m in &g.w {
        v.push(m.as_slice());
    }
    for m in &g.u {
        v.push(m.as_slice());
    }
    for b in &g.b {
        v.push(b.as_slice());
    }
    v
}

fn lstm_grad_tensors_mut(g: &mut crate::nn::LstmGrads) -> Vec<&mut [f64]> {
    let mut v = Vec::with_capacity(12);
    for m in &mut g.w {
        v.push(m.as_mut_slice());
    }
    for m in &mut g.u {
        v.push(m.as_mut_slice());
    }
    for b in &mut g.b {
        v.push(b.as_mut_slice());
    }
    v
}

impl TaggerModel {
    /// All trainable tensors in canonical order.
    pub fn param_tensors(&self) -> Vec<&[f64]> {
        let mut v = vec![self.char_table.weights.as_slice()];
        if let Some(t) = &self.feat_table {
            v.push(t.weights.as_slice());
        }
        match &self.encoders {
            Encoders::Single(p) => {
                v.extend(lstm_tensors(&p.fwd));
                v.extend(lstm_tensors(&p.bwd));
            }
            Encoders::Dual { chars, feats } => {
                v.extend(lstm_tensors(&chars.fwd));
                v.extend(lstm_tensors(&chars.bwd));
                v.extend(lstm_tensors(&feats.fwd));
                v.extend(lstm_tensors(&feats.bwd));
            }
        }
        v.push(self.proj_w.as_slice());
        v.push(self.proj_b.as_slice());
        v.push(self.transitions.a.as_slice());
        v
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = vec![self.char_table.weights.as_mut_slice()];
        if let Some(t) = &mut self.feat_table {
            v.push(t.weights.as_mut_slice());
        }
        match &mut self.encoders {
            Encoders::Single(p) => {
                v.extend(lstm_tensors_mut(&mut p.fwd));
                v.extend(lstm_tensors_mut(&mut p.bwd));
            }
            Encoders::Dual { chars, feats } => {
                v.extend(lstm_tensors_mut(&mut chars.fwd));
                v.extend(lstm_tensors_mut(&mut chars.bwd));
                v.extend(lstm_tensors_mut(&mut feats.fwd));
                v.extend(lstm_tensors_mut(&mut feats.bwd));
            }
        }
        v.push(self.proj_w.as_mut_slice());
        v.push(self.proj_b.as_mut_slice());
        v.push(self.transitions.a.as_mut_slice());
        v
    }
}

/// Gradient mirror of [`TaggerModel`], same tensor layout.
#[derive(Debug, Clone)]
pub enum EncGrads {
    Single(BiLstmGrads),
    Dual {
        chars: BiLstmGrads,
        feats: BiLstmGrads,
    },
}

#[derive(Debug, Clone)]
pub struct ModelGrads {
    pub char_table: Matrix,
    pub feat_table: Option<Matrix>,
    pub encoders: EncGrads,
    pub proj_w: Matrix,
    pub proj_b: Vec<f64>,
    pub transitions: Matrix,
}

impl ModelGrads {
    pub fn zeros_like(model: &TaggerModel) -> ModelGrads {
        ModelGrads {
            char_table: Matrix::zeros(model.char_table.rows(), model.char_table.dim()),
            feat_table: model
                .feat_table
                .as_ref()
                .map(|t| Matrix::zeros(t.rows(), t.dim())),
            encoders: match &model.encoders {
                Encoders::Single(p) => EncGrads::Single(BiLstmGrads::zeros_like(p)),
                Encoders::Dual { chars, feats } => EncGrads::Dual {
                    chars: BiLstmGrads::zeros_like(chars),
                    feats: BiLstmGrads::zeros_like(feats),
                },
            },
            proj_w: Matrix::zeros(model.proj_w.rows(), model.proj_w.cols()),
            proj_b: vec![0.0; model.proj_b.len()],
            transitions: Matrix::zeros(model.transitions.a.rows(), model.transitions.a.cols()),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut v = vec![self.char_table.as_slice()];
        if let Some(t) = &self.feat_table {
            v.push(t.as_slice());
        }
        match &self.encoders {
            EncGrads::Single(g) => {
                v.extend(lstm_grad_tensors(&g.fwd));
                v.extend(lstm_grad_tensors(&g.bwd));
            }
            EncGrads::Dual { chars, feats } => {
                v.extend(lstm_grad_tensors(&chars.fwd));
                v.extend(lstm_grad_tensors(&chars.bwd));
                v.extend(lstm_grad_tensors(&feats.fwd));
                v.extend(lstm_grad_tensors(&feats.bwd));
            }
        }
        v.push(self.proj_w.as_slice());
        v.push(self.proj_b.as_slice());
        v.push(self.transitions.as_slice());
        v
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut v = vec![self.char_table.as_mut_slice()];
        if let Some(t) = &mut self.feat_table {
            v.push(t.as_mut_slice());
        }
        match &mut self.encoders {
            EncGrads::Single(g) => {
                v.extend(lstm_grad_tensors_mut(&mut g.fwd));
                v.extend(lstm_grad_tensors_mut(&mut g.bwd));
            }
            EncGrads::Dual { chars, feats } => {
                v.extend(lstm_grad_tensors_mut(&mut chars.fwd));
                v.extend(lstm_grad_tensors_mut(&mut chars.bwd));
                v.extend(lstm_grad_tensors_mut(&mut feats.fwd));
                v.extend(lstm_grad_tensors_mut(&mut feats.bwd));
            }
        }
        v.push(self.proj_w.as_mut_slice());
        v.push(self.proj_b.as_mut_slice());
        v.push(self.transitions.as_mut_slice());
        v
    }

    pub fn zero(&mut self) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x = 0.0);
        }
    }

    /// Global L2 norm over every tensor.
    pub fn global_norm(&self) -> f64 {
        self.tensors()
            .iter()
            .flat_map(|t| t.iter())
            .map(|&x| x * x)
            .sum::<f64>()
            .sqrt()
    }

    pub fn scale(&mut self, k: f64) {
        for t in self.tensors_mut() {
            t.iter_mut().for_each(|x| *x *= k);
        }
    }
}

/// Dense feature vectors per position, resolved from the feature columns and,
/// for embedding schemes, the feature table.
fn resolve_features(
    model: &TaggerModel,
    features: Option<&FeatureColumns>,
) -> (Vec<Vec<f64>>, Option<Vec<usize>>) {
    match features {
        None => (Vec::new(), None),
        Some(FeatureColumns::Dense(cols)) => (cols.clone(), None),
        Some(FeatureColumns::Indices(idx)) => {
            let table = model
                .feat_table
                .as_ref()
                .expect("embedding scheme without feature table");
            let dense = idx.iter().map(|&i| table.lookup(i).to_vec()).collect();
            (dense, Some(idx.clone()))
        }
    }
}

enum EncCache {
    Single {
        inputs: Vec<Vec<f64>>,
        cache: BiLstmCache,
    },
    Dual {
        char_inputs: Vec<Vec<f64>>,
        char_cache: BiLstmCache,
        feat_inputs: Vec<Vec<f64>>,
        feat_cache: BiLstmCache,
    },
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardCache {
    char_idx: Vec<usize>,
    feat_idx: Option<Vec<usize>>,
    enc: EncCache,
    dropout_masks: Vec<Vec<f64>>,
    hidden: Vec<Vec<f64>>,
}

/// Runs the configured architecture over one sentence, producing per-position
/// emission scores for the CRF. Character indices must be vocabulary indices;
/// `features` must match the configured scheme (None for Baseline).
pub fn forward(
    model: &TaggerModel,
    char_idx: &[usize],
    features: Option<&FeatureColumns>,
    mode: Mode,
    rng: &mut ChaCha8Rng,
) -> (EmissionScores, ForwardCache) {
    let n = char_idx.len();
    if let Some(f) = features {
        assert_eq!(f.len(), n, "feature/char length mismatch");
    }
    assert_eq!(
        features.is_some(),
        model.config.arch != ArchKind::Baseline,
        "features required exactly when the architecture uses them"
    );
    let (feat_dense, feat_idx) = resolve_features(model, features);

    let embeds: Vec<Vec<f64>> = char_idx
        .iter()
        .map(|&i| model.char_table.lookup(i).to_vec())
        .collect();

    let enc_cache;
    let enc_out: Vec<Vec<f64>>;
    match (&model.encoders, model.config.arch) {
        (Encoders::Single(p), ArchKind::Baseline) => {
            let (out, cache) = bilstm_forward_cached(p, &embeds);
            enc_out = out;
            enc_cache = EncCache::Single {
                inputs: embeds,
                cache,
            };
        }
        (Encoders::Single(p), _) => {
            let inputs: Vec<Vec<f64>> = embeds
                .iter()
                .zip(&feat_dense)
                .map(|(e, d)| {
                    let mut m = e.clone();
                    m.extend_from_slice(d);
                    m
                })
                .collect();
            let (out, cache) = bilstm_forward_cached(p, &inputs);
            enc_out = out;
            enc_cache = EncCache::Single { inputs, cache };
        }
        (Encoders::Dual { chars, feats }, _) => {
            let (char_out, char_cache) = bilstm_forward_cached(chars, &embeds);
            let (feat_out, feat_cache) = bilstm_forward_cached(feats, &feat_dense);
            enc_out = char_out
                .into_iter()
                .zip(feat_out)
                .map(|(mut a, b)| {
                    a.extend(b);
                    a
                })
                .collect();
            enc_cache = EncCache::Dual {
                char_inputs: embeds,
                char_cache,
                feat_inputs: feat_dense,
                feat_cache,
            };
        }
    }

    let mut hidden = Vec::with_capacity(n);
    let mut masks = Vec::with_capacity(n);
    for h in &enc_out {
        let (y, mask) = dropout_forward(h, model.config.dropout, mode, rng);
        hidden.push(y);
        masks.push(mask);
    }

    let mut em = Matrix::zeros(n, NUM_TAGS);
    for (t, h) in hidden.iter().enumerate() {
        let scores = model.proj_w.matvec(h);
        for (j, s) in scores.iter().enumerate() {
            em.set(t, j, s + model.proj_b[j]);
        }
    }

    (
        em,
        ForwardCache {
            char_idx: char_idx.to_vec(),
            feat_idx,
            enc: enc_cache,
            dropout_masks: masks,
            hidden,
        },
    )
}

/// Backpropagates emission gradients through the network, accumulating into
/// `grads` (transition gradients are accumulated separately by the caller).
pub fn backward(
    model: &TaggerModel,
    cache: &ForwardCache,
    d_em: &Matrix,
    grads: &mut ModelGrads,
) {
    let n = cache.char_idx.len();
    let d_e = model.config.d_e;
    assert_eq!(d_em.rows(), n);

    // scoring layer
    let mut d_hidden = Vec::with_capacity(n);
    for t in 0..n {
        let de = d_em.row(t);
        grads.proj_w.add_outer(de, &cache.hidden[t]);
        for (j, v) in de.iter().enumerate() {
            grads.proj_b[j] += v;
        }
        let mut dh = vec![0.0; model.proj_w.cols()];
        model.proj_w.matvec_transpose_into(de, &mut dh);
        d_hidden.push(dropout_backward(&dh, &cache.dropout_masks[t]));
    }

    // encoders and embeddings
    match (&model.encoders, &mut grads.encoders, &cache.enc) {
        (Encoders::Single(p), EncGrads::Single(g), EncCache::Single { inputs, cache: c }) => {
            let dx = bilstm_backward(p, inputs, c, &d_hidden, g);
            for (t, dxt) in dx.iter().enumerate() {
                let row = grads.char_table.row_mut(cache.char_idx[t]);
                for k in 0..d_e {
                    row[k] += dxt[k];
                }
                if let (Some(idx), Some(ft)) = (&cache.feat_idx, grads.feat_table.as_mut()) {
                    let row = ft.row_mut(idx[t]);
                    for (k, r) in row.iter_mut().enumerate() {
                        *r += dxt[d_e + k];
                    }
                }
            }
        }
        (
            Encoders::Dual { chars, feats },
            EncGrads::Dual {
                chars: gc,
                feats: gf,
            },
            EncCache::Dual {
                char_inputs,
                char_cache,
                feat_inputs,
                feat_cache,
            },
        ) => {
            let split = chars.out_width();
            let mut d_char_out = Vec::with_capacity(n);
            let mut d_feat_out = Vec::with_capacity(n);
            for dh in &d_hidden {
                d_char_out.push(dh[..split].to_vec());
                d_feat_out.push(dh[split..].to_vec());
            }
            let dx_char = bilstm_backward(chars, char_inputs, char_cache, &d_char_out, gc);
            let dx_feat = bilstm_backward(feats, feat_inputs, feat_cache, &d_feat_out, gf);
            for (t, dxt) in dx_char.iter().enumerate() {
                let row = grads.char_table.row_mut(cache.char_idx[t]);
                for k in 0..d_e {
                    row[k] += dxt[k];
                }
            }
            if let (Some(idx), Some(ft)) = (&cache.feat_idx, grads.feat_table.as_mut()) {
                for (t, dxt) in dx_feat.iter().enumerate() {
                    let row = ft.row_mut(idx[t]);
                    for (k, r) in row.iter_mut().enumerate() {
                        *r += dxt[k];
                    }
                }
            }
        }
        _ => unreachable!("encoder/gradient/cache shape mismatch"),
    }
}

/// Loss and full parameter gradients for one tagged sentence.
pub fn sentence_loss_and_grads(
    model: &TaggerModel,
    char_idx: &[usize],
    features: Option<&FeatureColumns>,
    gold: &[usize],
    mode: Mode,
    rng: &mut ChaCha8Rng,
    grads: &mut ModelGrads,
) -> f64 {
    let (em, cache) = forward(model, char_idx, features, mode, rng);
    let loss = crate::crf::crf_nll(&em, &model.transitions, gold);
    let (d_em, d_a) = crate::crf::crf_nll_backward(&em, &model.transitions, gold);
    for (dst, src) in grads
        .transitions
        .as_mut_slice()
        .iter_mut()
        .zip(d_a.as_slice())
    {
        *dst += src;
    }
    backward(model, &cache, &d_em, grads);
    loss
}

/// Decoded result for one input sentence.
#[derive(Debug, Clone, PartialEq)]
pub struct TagOutput {
    pub tags: Vec<Tag>,
    pub spans: Vec<EntitySpan>,
}

/// Whether the transition between extended CRF state indices is BIEOS-valid.
pub fn decode_mask(from: usize, to: usize) -> bool {
    let tag_of = |i: usize| -> Option<Tag> {
        if i < NUM_TAGS {
            Some(Tag::from_code(i).unwrap())
        } else {
            None
        }
    };
    bieos_transition_allowed(tag_of(from), tag_of(to))
}

fn decode_clause(model: &TaggerModel, chars: &[char], dict: &Dictionary) -> Vec<Tag> {
    if chars.is_empty() {
        return Vec::new();
    }
    let idx: Vec<usize> = chars.iter().map(|&c| model.vocab.lookup(c)).collect();
    let features = model
        .config
        .scheme
        .map(|s| encode_sentence(chars, dict, s));
    let mut rng = ChaCha8Rng::seed_from_u64(0); // eval mode draws nothing
    let (em, _) = forward(model, &idx, features.as_ref(), Mode::Eval, &mut rng);
    let path = if model.config.mask_decode {
        viterbi_decode_masked(&em, &model.transitions, decode_mask)
    } else {
        viterbi_decode(&em, &model.transitions)
    };
    path.tags
        .iter()
        .map(|&c| Tag::from_code(c).expect("decoded tag code in range"))
        .collect()
}

/// Tags arbitrary text with a trained model. Unknown characters map to UNK;
/// spans are extracted leniently from the decoded sequence.
pub fn tag(model: &TaggerModel, sentence: &LabeledSentence, dict: &Dictionary) -> TagOutput {
    let clauses = if model.config.split_clauses {
        crate::corpus::split_clauses(sentence, &DEFAULT_CLAUSE_DELIMITERS)
    } else {
        vec![sentence.clone()]
    };
    let mut tags = Vec::with_capacity(sentence.len());
    for clause in &clauses {
        tags.extend(decode_clause(model, &clause.chars, dict));
    }
    debug_assert_eq!(tags.len(), sentence.len());
    let spans = tags_to_spans_lenient(&tags);
    TagOutput { tags, spans }
}

/// Which embedding table a pretrained vector file targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbeddingTarget {
    Chars,
    Features,
}

/// Overwrites table rows for tokens found in the file; returns the fraction
/// of table rows covered. Character tables are keyed by single characters,
/// feature tables by label names (`None`, `b`, `B-b`, ...).
pub fn load_pretrained_embeddings(
    model: &mut TaggerModel,
    text: &str,
    target: EmbeddingTarget,
) -> Result<f64, Error> {
    let (vectors, dim) = parse_embedding_text(text)?;
    if vectors.is_empty() {
        return Ok(0.0);
    }
    match target {
        EmbeddingTarget::Chars => {
            if dim != model.config.d_e {
                return Err(Error::Embedding {
                    line: 1,
                    message: format!("dimension {dim} != d_e {}", model.config.d_e),
                });
            }
            let mut covered = 0usize;
            for (token, vec) in &vectors {
                let mut cs = token.chars();
                let c = match (cs.next(), cs.next()) {
                    (Some(c), None) => c,
                    _ => continue,
                };
                if model.vocab.contains(c) {
                    let row = model.char_table.weights.row_mut(model.vocab.lookup(c));
                    row.copy_from_slice(vec);
                    covered += 1;
                }
            }
            Ok(covered as f64 / model.vocab.chars().len().max(1) as f64)
        }
        EmbeddingTarget::Features => {
            let scheme = model
                .config
                .scheme
                .ok_or_else(|| Error::Config("model has no feature scheme".into()))?;
            let table = model
                .feat_table
                .as_mut()
                .ok_or_else(|| Error::Config("scheme has no feature embedding table".into()))?;
            if dim != table.dim() {
                return Err(Error::Embedding {
                    line: 1,
                    message: format!("dimension {dim} != d_d {}", table.dim()),
                });
            }
            let label_index = |name: &str| -> Option<usize> {
                match scheme {
                    FeatureScheme::PietEmbed => {
                        if name == "None" {
                            Some(0)
                        } else {
                            let c = name.chars().next()?;
                            crate::corpus::EntityType::from_letter(c).map(|t| 1 + t.code())
                        }
                    }
                    FeatureScheme::PdetEmbed => {
                        if name == "None" {
                            Some(0)
                        } else {
                            Tag::parse(name).map(|t| t.code())
                        }
                    }
                    _ => None,
                }
            };
            let mut covered = 0usize;
            for (token, vec) in &vectors {
                if let Some(i) = label_index(token) {
                    table.weights.row_mut(i).copy_from_slice(vec);
                    covered += 1;
                }
            }
            Ok(covered as f64 / table.rows() as f64)
        }
    }
}
