//! Character-level data model: BIEOS tags, entity spans, corpus parsing,
//! clause splitting and vocabulary construction.

use std::collections::HashMap;
use std::fmt;

use crate::error::Error;

/// The five clinical entity types, with stable codes 0..4.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EntityType {
    Disease = 0,
    Symptom = 1,
    Treatment = 2,
    Exam = 3,
    Body = 4,
}

pub const ENTITY_TYPES: [EntityType; 5] = [
    EntityType::Disease,
    EntityType::Symptom,
    EntityType::Treatment,
    EntityType::Exam,
    EntityType::Body,
];

impl EntityType {
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<EntityType> {
        ENTITY_TYPES.get(code).copied()
    }

    pub fn letter(self) -> char {
        match self {
            EntityType::Disease => 'd',
            EntityType::Symptom => 's',
            EntityType::Treatment => 't',
            EntityType::Exam => 'e',
            EntityType::Body => 'b',
        }
    }

    pub fn from_letter(c: char) -> Option<EntityType> {
        match c {
            'd' => Some(EntityType::Disease),
            's' => Some(EntityType::Symptom),
            't' => Some(EntityType::Treatment),
            'e' => Some(EntityType::Exam),
            'b' => Some(EntityType::Body),
            _ => None,
        }
    }
}

impl fmt::Display for EntityType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// Position of a character inside an entity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Position {
    Begin = 0,
    Inside = 1,
    End = 2,
    Single = 3,
}

pub const POSITIONS: [Position; 4] = [
    Position::Begin,
    Position::Inside,
    Position::End,
    Position::Single,
];

impl Position {
    pub fn letter(self) -> char {
        match self {
            Position::Begin => 'B',
            Position::Inside => 'I',
            Position::End => 'E',
            Position::Single => 'S',
        }
    }
}

/// A BIEOS tag: Outside, or a (position, entity type) pair.
///
/// The inventory has exactly 21 members with codes 0..20 and `O` = 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Tag {
    Outside,
    Entity(Position, EntityType),
}

/// Number of distinct tags.
pub const NUM_TAGS: usize = 21;

impl Tag {
    pub fn code(self) -> usize {
        match self {
            Tag::Outside => 0,
            Tag::Entity(p, t) => 1 + (p as usize) * 5 + t.code(),
        }
    }

    pub fn from_code(code: usize) -> Option<Tag> {
        if code == 0 {
            return Some(Tag::Outside);
        }
        if code > 20 {
            return None;
        }
        let p = POSITIONS[(code - 1) / 5];
        let t = ENTITY_TYPES[(code - 1) % 5];
        Some(Tag::Entity(p, t))
    }

    pub fn parse(s: &str) -> Option<Tag> {
        if s == "O" {
            return Some(Tag::Outside);
        }
        let mut it = s.chars();
        let pos = match it.next()? {
            'B' => Position::Begin,
            'I' => Position::Inside,
            'E' => Position::End,
            'S' => Position::Single,
            _ => return None,
        };
        if it.next()? != '-' {
            return None;
        }
        let ty = EntityType::from_letter(it.next()?)?;
        if it.next().is_some() {
            return None;
        }
        Some(Tag::Entity(pos, ty))
    }
}

impl fmt::Display for Tag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tag::Outside => write!(f, "O"),
            Tag::Entity(p, t) => write!(f, "{}-{}", p.letter(), t.letter()),
        }
    }
}

/// A sentence of characters with an optional tag per character.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledSentence {
    pub chars: Vec<char>,
    pub tags: Option<Vec<Tag>>,
}

impl LabeledSentence {
    pub fn untagged(text: &str) -> LabeledSentence {
        LabeledSentence {
            chars: text.chars().collect(),
            tags: None,
        }
    }

    pub fn tagged(text: &str, tags: Vec<Tag>) -> LabeledSentence {
        let chars: Vec<char> = text.chars().collect();
        assert_eq!(chars.len(), tags.len(), "tag/char length mismatch");
        LabeledSentence {
            chars,
            tags: Some(tags),
        }
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }

    pub fn text(&self) -> String {
        self.chars.iter().collect()
    }
}

/// An entity occurrence: inclusive character indices plus a type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct EntitySpan {
    pub start: usize,
    pub end: usize,
    pub etype: EntityType,
}

impl EntitySpan {
    pub fn new(start: usize, end: usize, etype: EntityType) -> EntitySpan {
        assert!(start <= end);
        EntitySpan { start, end, etype }
    }

    pub fn len(&self) -> usize {
        self.end - self.start + 1
    }
}

/// Character-to-index map with reserved PAD (0) and UNK (1) slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    index: HashMap<char, usize>,
    chars: Vec<char>,
}

pub const PAD_INDEX: usize = 0;
pub const UNK_INDEX: usize = 1;

impl Vocabulary {
    pub fn size(&self) -> usize {
        self.chars.len() + 2
    }

    /// Index for a character, falling back to UNK.
    pub fn lookup(&self, c: char) -> usize {
        self.index.get(&c).copied().unwrap_or(UNK_INDEX)
    }

    pub fn contains(&self, c: char) -> bool {
        self.index.contains_key(&c)
    }

    /// Characters in index order (indices 2..size).
    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn from_chars(chars: Vec<char>) -> Vocabulary {
        let mut index = HashMap::new();
        for (i, &c) in chars.iter().enumerate() {
            let prev = index.insert(c, i + 2);
            assert!(prev.is_none(), "duplicate character in vocabulary");
        }
        Vocabulary { index, chars }
    }
}

/// Builds a vocabulary over every distinct character, first-occurrence order.
pub fn build_vocab(sentences: &[LabeledSentence]) -> Vocabulary {
    let mut chars = Vec::new();
    let mut seen = HashMap::new();
    for s in sentences {
        for &c in &s.chars {
            if !seen.contains_key(&c) {
                seen.insert(c, ());
                chars.push(c);
            }
        }
    }
    Vocabulary::from_chars(chars)
}

/// Parses the column corpus format: one `<char>TAB<tag>` (or bare `<char>`)
/// per line, blank line between sentences.
pub fn parse_corpus(text: &str) -> Result<Vec<LabeledSentence>, Error> {
    let mut sentences = Vec::new();
    let mut chars: Vec<char> = Vec::new();
    let mut tags: Vec<Tag> = Vec::new();
    let mut saw_tagged = false;
    let mut saw_untagged = false;

    let mut flush = |chars: &mut Vec<char>,
                     tags: &mut Vec<Tag>,
                     saw_tagged: &mut bool,
                     saw_untagged: &mut bool,
                     line_no: usize|
     -> Result<(), Error> {
        if chars.is_empty() {
            return Ok(());
        }
        if *saw_tagged && *saw_untagged {
            return Err(Error::Corpus {
                line: line_no,
                message: "sentence mixes tagged and untagged lines".into(),
            });
        }
        let sentence = LabeledSentence {
            chars: std::mem::take(chars),
            tags: if *saw_tagged {
                Some(std::mem::take(tags))
            } else {
                tags.clear();
                None
            },
        };
        *saw_tagged = false;
        *saw_untagged = false;
        sentences.push(sentence);
        Ok(())
    };

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.is_empty() {
            flush(&mut chars, &mut tags, &mut saw_tagged, &mut saw_untagged, line_no)?;
            continue;
        }
        let mut fields = line.split('\t');
        let char_field = fields.next().unwrap();
        let tag_field = fields.next();
        if fields.next().is_some() {
            return Err(Error::Corpus {
                line: line_no,
                message: "too many columns".into(),
            });
        }
        let mut cs = char_field.chars();
        let c = cs.next().ok_or_else(|| Error::Corpus {
            line: line_no,
            message: "empty character column".into(),
        })?;
        if cs.next().is_some() {
            return Err(Error::Corpus {
                line: line_no,
                message: format!("character column holds more than one character: {char_field:?}"),
            });
        }
        chars.push(c);
        match tag_field {
            Some(t) => {
                let tag = Tag::parse(t).ok_or_else(|| Error::Corpus {
                    line: line_no,
                    message: format!("unknown tag {t:?}"),
                })?;
                tags.push(tag);
                saw_tagged = true;
            }
            None => saw_untagged = true,
        }
    }
    let last = text.lines().count() + 1;
    flush(&mut chars, &mut tags, &mut saw_tagged, &mut saw_untagged, last)?;
    Ok(sentences)
}

/// Serializes sentences back to the column format.
pub fn write_corpus(sentences: &[LabeledSentence]) -> String {
    let mut out = String::new();
    for (i, s) in sentences.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        for (j, &c) in s.chars.iter().enumerate() {
            out.push(c);
            if let Some(tags) = &s.tags {
                out.push('\t');
                out.push_str(&tags[j].to_string());
            }
            out.push('\n');
        }
    }
    out
}

/// Default clause delimiters: standard Chinese clause punctuation.
pub const DEFAULT_CLAUSE_DELIMITERS: [char; 6] = ['，', '、', '；', '。', '！', '？'];

/// Splits a sentence after each delimiter, keeping the delimiter attached to
/// the preceding clause. Delimiters carrying a non-O tag never split, so an
/// entity span is never severed.
pub fn split_clauses(sentence: &LabeledSentence, delimiters: &[char]) -> Vec<LabeledSentence> {
    let n = sentence.len();
    if n == 0 {
        return vec![sentence.clone()];
    }
    let mut out = Vec::new();
    let mut start = 0;
    for i in 0..n {
        let is_delim = delimiters.contains(&sentence.chars[i]);
        let tagged_entity = sentence
            .tags
            .as_ref()
            .map(|t| t[i] != Tag::Outside)
            .unwrap_or(false);
        if is_delim && !tagged_entity {
            out.push(slice_sentence(sentence, start, i + 1));
            start = i + 1;
        }
    }
    if start < n {
        out.push(slice_sentence(sentence, start, n));
    }
    if out.is_empty() {
        out.push(sentence.clone());
    }
    out
}

fn slice_sentence(s: &LabeledSentence, start: usize, end: usize) -> LabeledSentence {
    LabeledSentence {
        chars: s.chars[start..end].to_vec(),
        tags: s.tags.as_ref().map(|t| t[start..end].to_vec()),
    }
}

/// Converts a valid BIEOS tag sequence to its entity spans.
pub fn tags_to_spans(tags: &[Tag]) -> Result<Vec<EntitySpan>, Error> {
    let mut spans = Vec::new();
    let mut open: Option<(usize, EntityType)> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::Outside => {
                if open.is_some() {
                    return Err(Error::TagStructure {
                        index: i,
                        message: "O inside an open entity".into(),
                    });
                }
            }
            Tag::Entity(Position::Single, t) => {
                if open.is_some() {
                    return Err(Error::TagStructure {
                        index: i,
                        message: "S inside an open entity".into(),
                    });
                }
                spans.push(EntitySpan::new(i, i, t));
            }
            Tag::Entity(Position::Begin, t) => {
                if open.is_some() {
                    return Err(Error::TagStructure {
                        index: i,
                        message: "B inside an open entity".into(),
                    });
                }
                open = Some((i, t));
            }
            Tag::Entity(Position::Inside, t) => match open {
                Some((_, ot)) if ot == t => {}
                _ => {
                    return Err(Error::TagStructure {
                        index: i,
                        message: "I without a matching open entity".into(),
                    })
                }
            },
            Tag::Entity(Position::End, t) => match open.take() {
                Some((start, ot)) if ot == t => spans.push(EntitySpan::new(start, i, t)),
                _ => {
                    return Err(Error::TagStructure {
                        index: i,
                        message: "E without a matching open entity".into(),
                    })
                }
            },
        }
    }
    if open.is_some() {
        return Err(Error::TagStructure {
            index: tags.len(),
            message: "entity left open at end of sequence".into(),
        });
    }
    Ok(spans)
}

/// Lenient span extraction for decoded sequences that may violate BIEOS
/// structure. Unclosed runs become spans ending at the last position of the
/// run; stray I/E tags open a run of their own.
pub fn tags_to_spans_lenient(tags: &[Tag]) -> Vec<EntitySpan> {
    fn close(
        spans: &mut Vec<EntitySpan>,
        open: &mut Option<(usize, EntityType)>,
        end: usize,
    ) {
        if let Some((start, t)) = open.take() {
            spans.push(EntitySpan::new(start, end, t));
        }
    }
    let mut spans = Vec::new();
    let mut open: Option<(usize, EntityType)> = None;
    for (i, &tag) in tags.iter().enumerate() {
        match tag {
            Tag::Outside => close(&mut spans, &mut open, i.saturating_sub(1)),
            Tag::Entity(Position::Single, t) => {
                close(&mut spans, &mut open, i.saturating_sub(1));
                spans.push(EntitySpan::new(i, i, t));
            }
            Tag::Entity(Position::Begin, t) => {
                close(&mut spans, &mut open, i.saturating_sub(1));
                open = Some((i, t));
            }
            Tag::Entity(Position::Inside, t) => match open {
                Some((_, ot)) if ot == t => {}
                _ => {
                    close(&mut spans, &mut open, i.saturating_sub(1));
                    open = Some((i, t));
                }
            },
            Tag::Entity(Position::End, t) => match open {
                Some((start, ot)) if ot == t => {
                    open = None;
                    spans.push(EntitySpan::new(start, i, t));
                }
                _ => {
                    close(&mut spans, &mut open, i.saturating_sub(1));
                    spans.push(EntitySpan::new(i, i, t));
                }
            },
        }
    }
    if let Some((start, t)) = open {
        spans.push(EntitySpan::new(start, tags.len() - 1, t));
    }
    spans
}

/// Converts sorted non-overlapping spans to a BIEOS tag sequence of length `n`.
pub fn spans_to_tags(spans: &[EntitySpan], n: usize) -> Result<Vec<Tag>, Error> {
    let mut tags = vec![Tag::Outside; n];
    let mut prev_end: Option<usize> = None;
    for span in spans {
        if span.start > span.end || span.end >= n {
            return Err(Error::SpanStructure {
                message: format!("span ({},{}) out of range for length {n}", span.start, span.end),
            });
        }
        if let Some(pe) = prev_end {
            if span.start <= pe {
                return Err(Error::SpanStructure {
                    message: format!("span ({},{}) overlaps or is unsorted", span.start, span.end),
                });
            }
        }
        prev_end = Some(span.end);
        if span.start == span.end {
            tags[span.start] = Tag::Entity(Position::Single, span.etype);
        } else {
            tags[span.start] = Tag::Entity(Position::Begin, span.etype);
            for i in span.start + 1..span.end {
                tags[i] = Tag::Entity(Position::Inside, span.etype);
            }
            tags[span.end] = Tag::Entity(Position::End, span.etype);
        }
    }
    Ok(tags)
}

/// Whether the linear-chain transition `from` -> `to` is structurally valid
/// BIEOS. `None` stands for the virtual boundary (sentence start or end).
pub fn bieos_transition_allowed(from: Option<Tag>, to: Option<Tag>) -> bool {
    use Position::*;
    let open_after = |t: Option<Tag>| match t {
        None | Some(Tag::Outside) => false,
        Some(Tag::Entity(p, _)) => matches!(p, Begin | Inside),
    };
    match (from, to) {
        (f, None) => !open_after(f),
        (f, Some(Tag::Outside)) | (f, Some(Tag::Entity(Begin | Single, _))) => !open_after(f),
        (Some(Tag::Entity(p, ft)), Some(Tag::Entity(Inside | End, tt))) => {
            matches!(p, Begin | Inside) && ft == tt
        }
        (_, Some(Tag::Entity(Inside | End, _))) => false,
    }
}
