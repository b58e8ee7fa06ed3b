//! Dictionary storage and the bi-directional maximum matching segmenter.

use indexmap::IndexMap;
use sha2::{Digest, Sha256};

use crate::corpus::EntityType;
use crate::error::Error;

/// Surface string -> entity types, with the longest entry length in characters.
///
/// A surface may carry several types; the list keeps file order. Maximum
/// matching takes the first type, exact lookup returns all of them.
#[derive(Debug, Clone, Default)]
pub struct Dictionary {
    entries: IndexMap<String, Vec<EntityType>>,
    max_len: usize,
}

impl Dictionary {
    pub fn new() -> Dictionary {
        Dictionary::default()
    }

    pub fn insert(&mut self, surface: &str, etype: EntityType) -> Result<bool, Error> {
        if surface.is_empty() {
            return Err(Error::Dictionary {
                line: 0,
                message: "empty surface string".into(),
            });
        }
        let types = self.entries.entry(surface.to_string()).or_default();
        if types.contains(&etype) {
            return Ok(false);
        }
        types.push(etype);
        self.max_len = self.max_len.max(surface.chars().count());
        Ok(true)
    }

    /// Number of distinct surface strings.
    pub fn num_surfaces(&self) -> usize {
        self.entries.len()
    }

    /// Length in characters of the longest surface.
    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// All types registered for a surface, in file order.
    pub fn types(&self, surface: &str) -> &[EntityType] {
        self.entries.get(surface).map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// First registered type for a surface, the one maximum matching emits.
    pub fn first_type(&self, surface: &str) -> Option<EntityType> {
        self.entries.get(surface).map(|v| v[0])
    }

    pub fn contains(&self, surface: &str) -> bool {
        self.entries.contains_key(surface)
    }

    /// (surface, type) pairs in insertion order.
    pub fn flat_entries(&self) -> Vec<(String, EntityType)> {
        let mut out = Vec::new();
        for (s, types) in &self.entries {
            for &t in types {
                out.push((s.clone(), t));
            }
        }
        out
    }

    /// Rebuilds a dictionary from a subset of (surface, type) pairs.
    pub fn from_flat_entries(entries: &[(String, EntityType)]) -> Dictionary {
        let mut d = Dictionary::new();
        for (s, t) in entries {
            d.insert(s, *t).expect("non-empty surfaces");
        }
        d
    }

    /// Keeps `ceil(fraction * n)` of the flat entries, chosen by a seeded
    /// shuffle; deterministic in (fraction, seed).
    pub fn subsample(&self, fraction: f64, seed: u64) -> Dictionary {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let full = self.flat_entries();
        let mut order: Vec<usize> = (0..full.len()).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let keep = ((full.len() as f64) * fraction.clamp(0.0, 1.0)).ceil() as usize;
        let subset: Vec<(String, EntityType)> =
            order[..keep.min(full.len())].iter().map(|&i| full[i].clone()).collect();
        Dictionary::from_flat_entries(&subset)
    }

    /// Content hash used to detect dictionary drift between train and tag time.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        for (s, types) in &self.entries {
            hasher.update(s.as_bytes());
            hasher.update([0u8]);
            for t in types {
                hasher.update([t.code() as u8 + 1]);
            }
            hasher.update([0u8]);
        }
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Warnings emitted while loading a dictionary file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: usize,
    pub message: String,
}

/// Parses the `<surface>TAB<letter>` dictionary format. `#` lines are
/// comments. Duplicate (surface, type) pairs are kept once with a warning.
pub fn load_dictionary(text: &str) -> Result<(Dictionary, Vec<LoadWarning>), Error> {
    let mut dict = Dictionary::new();
    let mut warnings = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split('\t');
        let surface = fields.next().unwrap();
        let letter = fields.next().ok_or_else(|| Error::Dictionary {
            line: line_no,
            message: "missing type column".into(),
        })?;
        if fields.next().is_some() {
            return Err(Error::Dictionary {
                line: line_no,
                message: "too many columns".into(),
            });
        }
        if surface.is_empty() {
            return Err(Error::Dictionary {
                line: line_no,
                message: "empty surface string".into(),
            });
        }
        let mut lc = letter.chars();
        let etype = lc
            .next()
            .filter(|_| lc.next().is_none())
            .and_then(EntityType::from_letter)
            .ok_or_else(|| Error::Dictionary {
                line: line_no,
                message: format!("bad type letter {letter:?}"),
            })?;
        if !dict.insert(surface, etype)? {
            warnings.push(LoadWarning {
                line: line_no,
                message: format!("duplicate entry {surface:?} ({})", etype.letter()),
            });
        }
    }
    Ok((dict, warnings))
}

/// One tile of a segmentation: a substring plus its matched type, if any.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub text: String,
    pub etype: Option<EntityType>,
    pub start: usize,
}

/// Segments tiling an input exactly, in left-to-right order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SegmentList {
    pub segments: Vec<Segment>,
}

impl SegmentList {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn entity_count(&self) -> usize {
        self.segments.iter().filter(|s| s.etype.is_some()).count()
    }
}

/// Greedy longest-prefix matching, left to right.
pub fn forward_max_match(text: &str, dict: &Dictionary) -> SegmentList {
    let chars: Vec<char> = text.chars().collect();
    let mut segments = Vec::new();
    let mut pos = 0;
    while pos < chars.len() {
        let window = dict.max_len().max(1).min(chars.len() - pos);
        let mut matched = None;
        for len in (1..=window).rev() {
            let candidate: String = chars[pos..pos + len].iter().collect();
            if let Some(t) = dict.first_type(&candidate) {
                matched = Some((candidate, len, t));
                break;
            }
        }
        match matched {
            Some((candidate, len, t)) => {
                segments.push(Segment {
                    text: candidate,
                    etype: Some(t),
                    start: pos,
                });
                pos += len;
            }
            None => {
                segments.push(Segment {
                    text: chars[pos].to_string(),
                    etype: None,
                    start: pos,
                });
                pos += 1;
            }
        }
    }
    SegmentList { segments }
}

/// Greedy longest-suffix matching, right to left; output reported left to right.
pub fn backward_max_match(text: &str, dict: &Dictionary) -> SegmentList {
    let chars: Vec<char> = text.chars().collect();
    let mut segments = Vec::new();
    let mut end = chars.len();
    while end > 0 {
        let window = dict.max_len().max(1).min(end);
        let mut matched = None;
        for len in (1..=window).rev() {
            let candidate: String = chars[end - len..end].iter().collect();
            if let Some(t) = dict.first_type(&candidate) {
                matched = Some((candidate, len, t));
                break;
            }
        }
        match matched {
            Some((candidate, len, t)) => {
                segments.push(Segment {
                    text: candidate,
                    etype: Some(t),
                    start: end - len,
                });
                end -= len;
            }
            None => {
                segments.push(Segment {
                    text: chars[end - 1].to_string(),
                    etype: None,
                    start: end - 1,
                });
                end -= 1;
            }
        }
    }
    segments.reverse();
    SegmentList { segments }
}

/// Bi-directional maximum matching: keeps the direction with fewer segments,
/// backward on ties.
pub fn bdmm_segment(text: &str, dict: &Dictionary) -> SegmentList {
    let forward = forward_max_match(text, dict);
    let backward = backward_max_match(text, dict);
    if forward.len() < backward.len() {
        forward
    } else {
        backward
    }
}

/// All entity types registered for an exact surface; empty if absent.
pub fn lookup_exact(text: &str, dict: &Dictionary) -> Vec<EntityType> {
    dict.types(text).to_vec()
}
