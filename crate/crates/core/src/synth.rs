//! Deterministic synthetic corpus and dictionary generator. Entities are
//! random strings over one character set, fillers come from a disjoint set,
//! so a fraction of the entity inventory can be held out of training while
//! remaining in the dictionary.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{spans_to_tags, EntitySpan, EntityType, LabeledSentence, ENTITY_TYPES};
use crate::dictionary::Dictionary;

const ENTITY_CHARS: &str = "心肝肺脾肾胃肠脑骨血压糖热痛咳喘晕麻肿胀";
const FILLER_CHARS: &str = "的了在有不无与及者示";

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub train_sentences: usize,
    pub test_sentences: usize,
    pub seed: u64,
    /// Fraction of the entity inventory that never appears in training
    /// sentences (but stays in the dictionary).
    pub unseen_entity_fraction: f64,
    pub entities_per_type: usize,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            train_sentences: 50,
            test_sentences: 0,
            seed: 7,
            unseen_entity_fraction: 0.0,
            entities_per_type: 8,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub train: Vec<LabeledSentence>,
    pub test: Vec<LabeledSentence>,
    pub dictionary: Dictionary,
}

fn make_inventory(rng: &mut ChaCha8Rng, per_type: usize) -> Vec<(String, EntityType)> {
    let alphabet: Vec<char> = ENTITY_CHARS.chars().collect();
    let mut seen = HashSet::new();
    let mut inventory = Vec::new();
    for t in ENTITY_TYPES {
        let mut made = 0;
        while made < per_type {
            let len = rng.gen_range(2..=4);
            let s: String = (0..len)
                .map(|_| *alphabet.choose(rng).unwrap())
                .collect();
            if seen.insert(s.clone()) {
                inventory.push((s, t));
                made += 1;
            }
        }
    }
    inventory
}

fn filler(rng: &mut ChaCha8Rng, out: &mut Vec<char>) {
    let alphabet: Vec<char> = FILLER_CHARS.chars().collect();
    let len = rng.gen_range(1..=3);
    for _ in 0..len {
        if rng.gen_bool(0.15) {
            out.push('，');
        } else {
            out.push(*alphabet.choose(rng).unwrap());
        }
    }
}

fn make_sentence(rng: &mut ChaCha8Rng, pick: &mut dyn FnMut(&mut ChaCha8Rng) -> (String, EntityType)) -> LabeledSentence {
    let mut chars = Vec::new();
    let mut spans = Vec::new();
    let n_entities = rng.gen_range(1..=2);
    filler(rng, &mut chars);
    for _ in 0..n_entities {
        let (surface, etype) = pick(rng);
        let start = chars.len();
        chars.extend(surface.chars());
        spans.push(EntitySpan::new(start, chars.len() - 1, etype));
        filler(rng, &mut chars);
    }
    let tags = spans_to_tags(&spans, chars.len()).expect("spans constructed sorted");
    LabeledSentence { chars, tags: Some(tags) }
}

/// Generates train and test sentences plus a dictionary holding the full
/// entity inventory. Test sentences draw their entities from the held-out
/// pool with probability 1/2 when one exists.
pub fn generate(config: &SynthConfig) -> SynthData {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut inventory = make_inventory(&mut rng, config.entities_per_type);
    inventory.shuffle(&mut rng);
    let n_unseen =
        ((inventory.len() as f64) * config.unseen_entity_fraction).round() as usize;
    let n_unseen = n_unseen.min(inventory.len().saturating_sub(1));
    let (unseen_pool, train_pool) = inventory.split_at(n_unseen);
    let unseen_pool = unseen_pool.to_vec();
    let train_pool = train_pool.to_vec();

    let mut dictionary = Dictionary::new();
    for (s, t) in &inventory {
        dictionary.insert(s, *t).expect("non-empty surface");
    }

    let mut train = Vec::with_capacity(config.train_sentences);
    for _ in 0..config.train_sentences {
        let mut pick = |rng: &mut ChaCha8Rng| train_pool.choose(rng).unwrap().clone();
        train.push(make_sentence(&mut rng, &mut pick));
    }

    let mut test = Vec::with_capacity(config.test_sentences);
    for _ in 0..config.test_sentences {
        let mut pick = |rng: &mut ChaCha8Rng| {
            if !unseen_pool.is_empty() && rng.gen_bool(0.5) {
                unseen_pool.choose(rng).unwrap().clone()
            } else {
                train_pool.choose(rng).unwrap().clone()
            }
        };
        test.push(make_sentence(&mut rng, &mut pick));
    }

    SynthData { train, test, dictionary }
}
