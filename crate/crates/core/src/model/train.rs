//! Training loop: clause splitting, per-epoch shuffling, gradient
//! accumulation over batches, Adam updates, and per-epoch metrics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    build_vocab, split_clauses, tags_to_spans, EntitySpan, LabeledSentence,
    DEFAULT_CLAUSE_DELIMITERS,
};
use crate::dictionary::Dictionary;
use crate::error::Error;
use crate::eval::micro_prf;
use crate::features::{encode_sentence, FeatureColumns};
use crate::model::{
    build_model, sentence_loss_and_grads, tag, ModelConfig, ModelGrads, TaggerModel,
};
use crate::nn::{AdamConfig, AdamState, Mode};

/// One metrics record per epoch; dev scores only when a dev split is set.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochMetrics {
    pub epoch: usize,
    pub loss: f64,
    pub dev_precision: Option<f64>,
    pub dev_recall: Option<f64>,
    pub dev_f1: Option<f64>,
}

impl EpochMetrics {
    /// One JSON record, stable key order.
    pub fn to_json(&self) -> String {
        let mut s = format!("{{\"epoch\":{},\"loss\":{:.6}", self.epoch, self.loss);
        if let (Some(p), Some(r), Some(f)) = (self.dev_precision, self.dev_recall, self.dev_f1) {
            s.push_str(&format!(
                ",\"dev_p\":{:.4},\"dev_r\":{:.4},\"dev_f1\":{:.4}",
                p, r, f
            ));
        }
        s.push('}');
        s
    }
}

#[derive(Debug)]
pub struct TrainOutcome {
    pub model: TaggerModel,
    pub metrics: Vec<EpochMetrics>,
}

struct TrainExample {
    chars: Vec<char>,
    char_idx: Vec<usize>,
    features: Option<FeatureColumns>,
    gold: Vec<usize>,
}

fn prepare_clauses(
    sentences: &[LabeledSentence],
    config: &ModelConfig,
) -> Result<Vec<LabeledSentence>, Error> {
    let mut clauses = Vec::new();
    for s in sentences {
        if s.tags.is_none() {
            return Err(Error::Config("training corpus must be tagged".into()));
        }
        if s.is_empty() {
            continue;
        }
        if config.split_clauses {
            clauses.extend(split_clauses(s, &DEFAULT_CLAUSE_DELIMITERS));
        } else {
            clauses.push(s.clone());
        }
    }
    Ok(clauses)
}

fn gold_spans(sentences: &[LabeledSentence]) -> Vec<Vec<EntitySpan>> {
    sentences
        .iter()
        .map(|s| {
            s.tags
                .as_ref()
                .map(|t| tags_to_spans(t).unwrap_or_default())
                .unwrap_or_default()
        })
        .collect()
}

/// Trains a fresh model on a tagged corpus. Fully determined by
/// (seed, config, corpus, dictionary).
pub fn train(
    corpus: &[LabeledSentence],
    dict: &Dictionary,
    config: &ModelConfig,
) -> Result<TrainOutcome, Error> {
    train_with_init(corpus, dict, config, |_| Ok(()))
}

/// Like [`train`], but runs `init` on the freshly built model before the
/// first epoch — e.g. to load pretrained embedding tables.
pub fn train_with_init(
    corpus: &[LabeledSentence],
    dict: &Dictionary,
    config: &ModelConfig,
    init: impl FnOnce(&mut TaggerModel) -> Result<(), Error>,
) -> Result<TrainOutcome, Error> {
    config.validate()?;
    if corpus.is_empty() {
        return Err(Error::Config("training corpus is empty".into()));
    }

    // dev split comes off the sentence list before clause splitting
    let mut order: Vec<usize> = (0..corpus.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(0x5eed));
    let (train_sents, dev_sents): (Vec<LabeledSentence>, Vec<LabeledSentence>) =
        if config.dev_fraction > 0.0 {
            order.shuffle(&mut rng);
            let n_dev = ((corpus.len() as f64) * config.dev_fraction).round() as usize;
            let n_dev = n_dev.min(corpus.len() - 1);
            let dev: Vec<_> = order[..n_dev].iter().map(|&i| corpus[i].clone()).collect();
            let tr: Vec<_> = order[n_dev..].iter().map(|&i| corpus[i].clone()).collect();
            (tr, dev)
        } else {
            (corpus.to_vec(), Vec::new())
        };

    let clauses = prepare_clauses(&train_sents, config)?;
    if clauses.is_empty() {
        return Err(Error::Config("training corpus has no non-empty sentences".into()));
    }
    let vocab = build_vocab(&clauses);
    let mut model = build_model(config, vocab)?;
    model.dict_fingerprint = dict.fingerprint();
    init(&mut model)?;

    let examples: Vec<TrainExample> = clauses
        .iter()
        .map(|c| TrainExample {
            char_idx: c.chars.iter().map(|&ch| model.vocab.lookup(ch)).collect(),
            features: config.scheme.map(|s| encode_sentence(&c.chars, dict, s)),
            gold: c.tags.as_ref().unwrap().iter().map(|t| t.code()).collect(),
            chars: c.chars.clone(),
        })
        .collect();
    debug_assert!(examples
        .iter()
        .all(|e| e.chars.len() == e.char_idx.len() && e.chars.len() == e.gold.len()));

    let tensor_lens: Vec<usize> = model.param_tensors().iter().map(|t| t.len()).collect();
    let mut adam = AdamState::new(
        AdamConfig {
            lr: config.learning_rate,
            ..AdamConfig::default()
        },
        &tensor_lens,
    );
    let mut grads = ModelGrads::zeros_like(&model);

    let dev_gold = gold_spans(&dev_sents);
    let mut metrics = Vec::with_capacity(config.epochs);
    let mut best_dev_f1 = f64::NEG_INFINITY;
    let mut epochs_since_best = 0usize;

    let mut order: Vec<usize> = (0..examples.len()).collect();
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.zero();
            for &i in batch {
                let ex = &examples[i];
                epoch_loss += sentence_loss_and_grads(
                    &model,
                    &ex.char_idx,
                    ex.features.as_ref(),
                    &ex.gold,
                    Mode::Train,
                    &mut rng,
                    &mut grads,
                );
            }
            if let Some(max_norm) = config.clip_norm {
                let norm = grads.global_norm();
                if norm > max_norm {
                    grads.scale(max_norm / norm);
                }
            }
            let grad_tensors = grads.tensors();
            let mut params = model.param_tensors_mut();
            adam.step(&mut params, &grad_tensors);
        }
        let mean_loss = epoch_loss / examples.len() as f64;

        let mut record = EpochMetrics {
            epoch,
            loss: mean_loss,
            dev_precision: None,
            dev_recall: None,
            dev_f1: None,
        };
        if !dev_sents.is_empty() {
            let pred: Vec<Vec<EntitySpan>> = dev_sents
                .iter()
                .map(|s| tag(&model, s, dict).spans)
                .collect();
            let report = micro_prf(&dev_gold, &pred)?;
            record.dev_precision = Some(report.overall.precision());
            record.dev_recall = Some(report.overall.recall());
            record.dev_f1 = Some(report.overall.f1());
        }
        let dev_f1 = record.dev_f1;
        metrics.push(record);

        if let (Some(f1), Some(patience)) = (dev_f1, config.patience) {
            if f1 > best_dev_f1 {
                best_dev_f1 = f1;
                epochs_since_best = 0;
            } else {
                epochs_since_best += 1;
                if epochs_since_best >= patience {
                    break;
                }
            }
        }
    }

    Ok(TrainOutcome { model, metrics })
}

/// Micro-F1 of a model over a tagged corpus; helper shared by the CLI sweep
/// and the test suites.
pub fn evaluate_model(
    model: &TaggerModel,
    corpus: &[LabeledSentence],
    dict: &Dictionary,
) -> Result<crate::eval::EvalReport, Error> {
    let gold = gold_spans(corpus);
    let pred: Vec<Vec<EntitySpan>> = corpus.iter().map(|s| tag(model, s, dict).spans).collect();
    micro_prf(&gold, &pred)
}
