//! Per-character dictionary feature construction: n-gram binary features and
//! the PIET/PDET label schemes, each in one-hot or embedding-index form.

use crate::corpus::{EntityType, Position, Tag, ENTITY_TYPES, NUM_TAGS};
use crate::dictionary::{bdmm_segment, lookup_exact, Dictionary};

/// The five dictionary feature schemes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureScheme {
    NGram,
    PietOneHot,
    PietEmbed,
    PdetOneHot,
    PdetEmbed,
}

impl FeatureScheme {
    /// Width of the per-character feature vector fed to the encoder.
    /// `d_d` is the feature embedding size used by the *Embed variants.
    pub fn width(self, d_d: usize) -> usize {
        match self {
            FeatureScheme::NGram => NGRAM_WIDTH,
            FeatureScheme::PietOneHot => PIET_LABELS,
            FeatureScheme::PietEmbed | FeatureScheme::PdetEmbed => d_d,
            FeatureScheme::PdetOneHot => PDET_LABELS,
        }
    }

    /// Number of embedding rows for the *Embed variants.
    pub fn label_count(self) -> Option<usize> {
        match self {
            FeatureScheme::PietEmbed => Some(PIET_LABELS),
            FeatureScheme::PdetEmbed => Some(PDET_LABELS),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FeatureScheme::NGram => "ngram",
            FeatureScheme::PietOneHot => "piet-onehot",
            FeatureScheme::PietEmbed => "piet-embed",
            FeatureScheme::PdetOneHot => "pdet-onehot",
            FeatureScheme::PdetEmbed => "pdet-embed",
        }
    }

    pub fn parse(s: &str) -> Option<FeatureScheme> {
        match s {
            "ngram" => Some(FeatureScheme::NGram),
            "piet-onehot" => Some(FeatureScheme::PietOneHot),
            "piet-embed" => Some(FeatureScheme::PietEmbed),
            "pdet-onehot" => Some(FeatureScheme::PdetOneHot),
            "pdet-embed" => Some(FeatureScheme::PdetEmbed),
            _ => None,
        }
    }
}

pub const ALL_SCHEMES: [FeatureScheme; 5] = [
    FeatureScheme::NGram,
    FeatureScheme::PietOneHot,
    FeatureScheme::PietEmbed,
    FeatureScheme::PdetOneHot,
    FeatureScheme::PdetEmbed,
];

/// The eight n-gram windows around position `i`: left/right windows of sizes
/// 2 through 5, in that row order.
pub const NGRAM_TEMPLATES: usize = 8;
pub const NGRAM_WIDTH: usize = NGRAM_TEMPLATES * 5;

/// 40 binary components, template-major, type order d,s,t,e,b within each
/// template.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NgramFeature(pub [u8; NGRAM_WIDTH]);

impl NgramFeature {
    pub fn zero() -> NgramFeature {
        NgramFeature([0; NGRAM_WIDTH])
    }

    pub fn bit(&self, template: usize, etype: EntityType) -> u8 {
        self.0[template * 5 + etype.code()]
    }
}

/// (n-gram size, ends-at-i) for each template, Table-row order.
fn template_window(template: usize, i: usize, n_chars: usize) -> Option<(usize, usize)> {
    let size = 2 + template / 2;
    let left = template % 2 == 0;
    if left {
        if i + 1 < size {
            return None;
        }
        Some((i + 1 - size, i + 1))
    } else {
        if i + size > n_chars {
            return None;
        }
        Some((i, i + size))
    }
}

/// N-gram binary features for every character of a sentence. A bit is set
/// when the window lies fully inside the sentence and is a dictionary entry
/// of that type.
pub fn ngram_features(chars: &[char], dict: &Dictionary) -> Vec<NgramFeature> {
    let n = chars.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut feat = NgramFeature::zero();
        for j in 0..NGRAM_TEMPLATES {
            if let Some((lo, hi)) = template_window(j, i, n) {
                let window: String = chars[lo..hi].iter().collect();
                for t in lookup_exact(&window, dict) {
                    feat.0[j * 5 + t.code()] = 1;
                }
            }
        }
        out.push(feat);
    }
    out
}

/// Position-independent entity type label: the type of the matched segment
/// covering the character, or None.
pub type PietLabel = Option<EntityType>;

/// Position-dependent entity type label: PIET plus the character's B/I/E/S
/// position inside the matched segment.
pub type PdetLabel = Option<(Position, EntityType)>;

pub const PIET_LABELS: usize = 6;
pub const PDET_LABELS: usize = NUM_TAGS;

/// Embedding/one-hot index of a PIET label; None is fixed at 0.
pub fn piet_index(label: PietLabel) -> usize {
    match label {
        None => 0,
        Some(t) => 1 + t.code(),
    }
}

/// Embedding/one-hot index of a PDET label; None is fixed at 0. Shares the
/// tag code layout.
pub fn pdet_index(label: PdetLabel) -> usize {
    match label {
        None => 0,
        Some((p, t)) => Tag::Entity(p, t).code(),
    }
}

/// PIET label name as used in pretrained feature-embedding files.
pub fn piet_name(label: PietLabel) -> String {
    match label {
        None => "None".into(),
        Some(t) => t.letter().to_string(),
    }
}

pub fn pdet_name(label: PdetLabel) -> String {
    match label {
        None => "None".into(),
        Some((p, t)) => format!("{}-{}", p.letter(), t.letter()),
    }
}

pub fn piet_label_from_index(index: usize) -> Option<PietLabel> {
    match index {
        0 => Some(None),
        1..=5 => Some(Some(ENTITY_TYPES[index - 1])),
        _ => None,
    }
}

pub fn pdet_label_from_index(index: usize) -> Option<PdetLabel> {
    match Tag::from_code(index)? {
        Tag::Outside => Some(None),
        Tag::Entity(p, t) => Some(Some((p, t))),
    }
}

/// PIET labels via BDMM segmentation.
pub fn piet_labels(chars: &[char], dict: &Dictionary) -> Vec<PietLabel> {
    let text: String = chars.iter().collect();
    let segs = bdmm_segment(&text, dict);
    let mut out = Vec::with_capacity(chars.len());
    for seg in &segs.segments {
        let len = seg.text.chars().count();
        for _ in 0..len {
            out.push(seg.etype);
        }
    }
    out
}

/// PDET labels via BDMM segmentation: typed segments of length 1 emit S,
/// longer ones B, I..., E.
pub fn pdet_labels(chars: &[char], dict: &Dictionary) -> Vec<PdetLabel> {
    let text: String = chars.iter().collect();
    let segs = bdmm_segment(&text, dict);
    let mut out = Vec::with_capacity(chars.len());
    for seg in &segs.segments {
        let len = seg.text.chars().count();
        match seg.etype {
            None => out.extend(std::iter::repeat(None).take(len)),
            Some(t) => {
                if len == 1 {
                    out.push(Some((Position::Single, t)));
                } else {
                    out.push(Some((Position::Begin, t)));
                    for _ in 1..len - 1 {
                        out.push(Some((Position::Inside, t)));
                    }
                    out.push(Some((Position::End, t)));
                }
            }
        }
    }
    out
}

/// Per-sentence encoded features: dense real vectors, or embedding indices
/// resolved by the model's feature table.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureColumns {
    Dense(Vec<Vec<f64>>),
    Indices(Vec<usize>),
}

impl FeatureColumns {
    pub fn len(&self) -> usize {
        match self {
            FeatureColumns::Dense(v) => v.len(),
            FeatureColumns::Indices(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

fn one_hot(index: usize, width: usize) -> Vec<f64> {
    let mut v = vec![0.0; width];
    v[index] = 1.0;
    v
}

/// Extracts and encodes features for one sentence under a scheme.
pub fn encode_sentence(chars: &[char], dict: &Dictionary, scheme: FeatureScheme) -> FeatureColumns {
    match scheme {
        FeatureScheme::NGram => FeatureColumns::Dense(
            ngram_features(chars, dict)
                .into_iter()
                .map(|f| f.0.iter().map(|&b| b as f64).collect())
                .collect(),
        ),
        FeatureScheme::PietOneHot => FeatureColumns::Dense(
            piet_labels(chars, dict)
                .into_iter()
                .map(|l| one_hot(piet_index(l), PIET_LABELS))
                .collect(),
        ),
        FeatureScheme::PietEmbed => {
            FeatureColumns::Indices(piet_labels(chars, dict).into_iter().map(piet_index).collect())
        }
        FeatureScheme::PdetOneHot => FeatureColumns::Dense(
            pdet_labels(chars, dict)
                .into_iter()
                .map(|l| one_hot(pdet_index(l), PDET_LABELS))
                .collect(),
        ),
        FeatureScheme::PdetEmbed => {
            FeatureColumns::Indices(pdet_labels(chars, dict).into_iter().map(pdet_index).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::EntityType::*;
    use crate::dictionary::load_dictionary;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    fn table1_dict() -> Dictionary {
        load_dictionary("腹\tb\n腹壁\tb\n静脉曲张\ts\n").unwrap().0
    }

    #[test]
    fn ngram_windows_match_table_order() {
        let n = 10;
        // template 0: x_{i-1} x_i
        assert_eq!(template_window(0, 3, n), Some((2, 4)));
        // template 1: x_i x_{i+1}
        assert_eq!(template_window(1, 3, n), Some((3, 5)));
        // template 6: 5-gram left
        assert_eq!(template_window(6, 4, n), Some((0, 5)));
        assert_eq!(template_window(6, 3, n), None);
        // template 7: 5-gram right at the edge
        assert_eq!(template_window(7, 5, n), Some((5, 10)));
        assert_eq!(template_window(7, 6, n), None);
    }

    #[test]
    fn ngram_hand_enumeration() {
        let (d, _) = load_dictionary("腹壁\tb\n").unwrap();
        let feats = ngram_features(&chars("腹壁静脉"), &d);
        assert_eq!(feats.len(), 4);
        // position 0: only the right 2-gram 腹壁 matches
        let mut expected = NgramFeature::zero();
        expected.0[5 + Body.code()] = 1; // template 1 (x_i x_{i+1})
        assert_eq!(feats[0], expected);
        // position 1: only the left 2-gram 腹壁 matches
        let mut expected = NgramFeature::zero();
        expected.0[Body.code()] = 1; // template 0 (x_{i-1} x_i)
        assert_eq!(feats[1], expected);
        assert_eq!(feats[2], NgramFeature::zero());
        assert_eq!(feats[3], NgramFeature::zero());
    }

    #[test]
    fn ngram_empty_dict_all_zero() {
        let feats = ngram_features(&chars("腹壁静脉"), &Dictionary::new());
        assert!(feats.iter().all(|f| *f == NgramFeature::zero()));
    }

    #[test]
    fn ngram_multi_type_sets_two_bits() {
        let (d, _) = load_dictionary("维生素C\tt\n维生素C\te\n").unwrap();
        let feats = ngram_features(&chars("维生素C"), &d);
        // position 0, template 5 = 4-gram right
        assert_eq!(feats[0].bit(5, Treatment), 1);
        assert_eq!(feats[0].bit(5, Exam), 1);
        assert_eq!(feats[0].0.iter().map(|&b| b as usize).sum::<usize>(), 2);
    }

    #[test]
    fn ngram_width_is_40() {
        let feats = ngram_features(&chars("腹壁"), &table1_dict());
        for f in feats {
            assert_eq!(f.0.len(), 40);
        }
    }

    #[test]
    fn piet_table1_row() {
        let labels = piet_labels(&chars("腹平坦，未见腹壁静脉曲张。"), &table1_dict());
        let expected: Vec<PietLabel> = vec![
            Some(Body),
            None,
            None,
            None,
            None,
            None,
            Some(Body),
            Some(Body),
            Some(Symptom),
            Some(Symptom),
            Some(Symptom),
            Some(Symptom),
            None,
        ];
        assert_eq!(labels, expected);
    }

    #[test]
    fn piet_empty_dict_all_none() {
        let labels = piet_labels(&chars("abc"), &Dictionary::new());
        assert!(labels.iter().all(|l| l.is_none()));
    }

    #[test]
    fn piet_full_sentence_entity() {
        let (d, _) = load_dictionary("abc\td\n").unwrap();
        let labels = piet_labels(&chars("abc"), &d);
        assert!(labels.iter().all(|l| *l == Some(Disease)));
    }

    #[test]
    fn pdet_table1_row() {
        use Position::*;
        let labels = pdet_labels(&chars("腹平坦，未见腹壁静脉曲张。"), &table1_dict());
        let expected: Vec<PdetLabel> = vec![
            Some((Single, Body)),
            None,
            None,
            None,
            None,
            None,
            Some((Begin, Body)),
            Some((End, Body)),
            Some((Begin, Symptom)),
            Some((Inside, Symptom)),
            Some((Inside, Symptom)),
            Some((End, Symptom)),
            None,
        ];
        assert_eq!(labels, expected);
    }

    #[test]
    fn pdet_two_char_entity_has_no_inside() {
        use Position::*;
        let (d, _) = load_dictionary("ab\tb\n").unwrap();
        let labels = pdet_labels(&chars("ab"), &d);
        assert_eq!(labels, vec![Some((Begin, Body)), Some((End, Body))]);
    }

    #[test]
    fn pdet_strips_to_piet() {
        let d = table1_dict();
        for text in ["腹平坦，未见腹壁静脉曲张。", "腹腹壁", "xyz", ""] {
            let cs = chars(text);
            let stripped: Vec<PietLabel> = pdet_labels(&cs, &d)
                .into_iter()
                .map(|l| l.map(|(_, t)| t))
                .collect();
            assert_eq!(stripped, piet_labels(&cs, &d));
        }
    }

    #[test]
    fn ngram_locality_radius_four() {
        let d = table1_dict();
        let base = chars("腹平坦未见腹壁静脉曲张继续继续");
        let feats = ngram_features(&base, &d);
        // editing position 10 cannot affect positions at distance > 4
        let mut edited = base.clone();
        edited[10] = 'Z';
        let feats2 = ngram_features(&edited, &d);
        for i in 0..base.len() {
            if (i as isize - 10).unsigned_abs() > 4 {
                assert_eq!(feats[i], feats2[i], "position {i} changed");
            }
        }
    }

    #[test]
    fn encode_widths() {
        let d = table1_dict();
        let cs = chars("腹壁静");
        let d_d = 7;
        for scheme in ALL_SCHEMES {
            let cols = encode_sentence(&cs, &d, scheme);
            assert_eq!(cols.len(), 3);
            match cols {
                FeatureColumns::Dense(rows) => {
                    for r in rows {
                        assert_eq!(r.len(), scheme.width(d_d));
                    }
                }
                FeatureColumns::Indices(idx) => {
                    let count = scheme.label_count().unwrap();
                    assert!(idx.iter().all(|&i| i < count));
                }
            }
        }
    }

    #[test]
    fn encode_onehot_single_one() {
        let d = table1_dict();
        let cols = encode_sentence(&chars("腹"), &d, FeatureScheme::PietOneHot);
        match cols {
            FeatureColumns::Dense(rows) => {
                assert_eq!(rows[0].iter().sum::<f64>(), 1.0);
                assert_eq!(rows[0][1 + Body.code()], 1.0);
            }
            _ => panic!("expected dense"),
        }
    }

    #[test]
    fn none_embeds_at_index_zero() {
        let cols = encode_sentence(&chars("x"), &Dictionary::new(), FeatureScheme::PdetEmbed);
        assert_eq!(cols, FeatureColumns::Indices(vec![0]));
    }

    #[test]
    fn label_index_round_trip() {
        for i in 0..PIET_LABELS {
            assert_eq!(piet_index(piet_label_from_index(i).unwrap()), i);
        }
        for i in 0..PDET_LABELS {
            assert_eq!(pdet_index(pdet_label_from_index(i).unwrap()), i);
        }
    }
}
