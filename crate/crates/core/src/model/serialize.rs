//! Versioned plain-text model format: a fixed header, the vocabulary as
//! codepoints, then every tensor with explicit dimensions in row-major
//! order. Numbers use the shortest round-trip decimal form, so
//! save -> load -> save is byte-identical.

use std::path::Path;

use crate::corpus::Vocabulary;
use crate::error::Error;
use crate::features::FeatureScheme;
use crate::model::{build_model, ArchKind, Encoders, ModelConfig, TaggerModel};
use crate::nn::Matrix;

const MAGIC: &str = "dicner-model 1";

enum TensorRef<'a> {
    Mat(&'a Matrix),
    Vec(&'a [f64]),
}

enum TensorMut<'a> {
    Mat(&'a mut Matrix),
    Vec(&'a mut [f64]),
}

fn bilstm_named<'a>(
    prefix: &str,
    p: &'a crate::nn::BiLstmParams,
    out: &mut Vec<(String, TensorRef<'a>)>,
) {
    for (dir, lp) in [("fwd", &p.fwd), ("bwd", &p.bwd)] {
        for g in 0..4 {
            out.push((format!("{prefix}.{dir}.w{g}"), TensorRef::Mat(&lp.w[g])));
        }
        for g in 0..4 {
            out.push((format!("{prefix}.{dir}.u{g}"), TensorRef::Mat(&lp.u[g])));
        }
        for g in 0..4 {
            out.push((format!("{prefix}.{dir}.b{g}"), TensorRef::Vec(&lp.b[g])));
        }
    }
}

fn bilstm_named_mut<'a>(
    prefix: &str,
    p: &'a mut crate::nn::BiLstmParams,
    out: &mut Vec<(String, TensorMut<'a>)>,
) {
    for (dir, lp) in [("fwd", &mut p.fwd), ("bwd", &mut p.bwd)] {
        for (g, w) in lp.w.iter_mut().enumerate() {
            out.push((format!("{prefix}.{dir}.w{g}"), TensorMut::Mat(w)));
        }
        for (g, u) in lp.u.iter_mut().enumerate() {
            out.push((format!("{prefix}.{dir}.u{g}"), TensorMut::Mat(u)));
        }
        for (g, b) in lp.b.iter_mut().enumerate() {
            out.push((format!("{prefix}.{dir}.b{g}"), TensorMut::Vec(b)));
        }
    }
}

fn named_tensors(model: &TaggerModel) -> Vec<(String, TensorRef<'_>)> {
    let mut v: Vec<(String, TensorRef<'_>)> = vec![(
        "char_embedding".into(),
        TensorRef::Mat(&model.char_table.weights),
    )];
    if let Some(t) = &model.feat_table {
        v.push(("feat_embedding".into(), TensorRef::Mat(&t.weights)));
    }
    match &model.encoders {
        Encoders::Single(p) => bilstm_named("enc", p, &mut v),
        Encoders::Dual { chars, feats } => {
            bilstm_named("enc_char", chars, &mut v);
            bilstm_named("enc_feat", feats, &mut v);
        }
    }
    v.push(("proj_w".into(), TensorRef::Mat(&model.proj_w)));
    v.push(("proj_b".into(), TensorRef::Vec(&model.proj_b)));
    v.push(("transitions".into(), TensorRef::Mat(&model.transitions.a)));
    v
}

fn named_tensors_mut(model: &mut TaggerModel) -> Vec<(String, TensorMut<'_>)> {
    let mut v: Vec<(String, TensorMut<'_>)> = vec![(
        "char_embedding".into(),
        TensorMut::Mat(&mut model.char_table.weights),
    )];
    if let Some(t) = &mut model.feat_table {
        v.push(("feat_embedding".into(), TensorMut::Mat(&mut t.weights)));
    }
    match &mut model.encoders {
        Encoders::Single(p) => bilstm_named_mut("enc", p, &mut v),
        Encoders::Dual { chars, feats } => {
            bilstm_named_mut("enc_char", chars, &mut v);
            bilstm_named_mut("enc_feat", feats, &mut v);
        }
    }
    v.push(("proj_w".into(), TensorMut::Mat(&mut model.proj_w)));
    v.push(("proj_b".into(), TensorMut::Vec(&mut model.proj_b)));
    v.push((
        "transitions".into(),
        TensorMut::Mat(&mut model.transitions.a),
    ));
    v
}

fn opt_str<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| "none".into())
}

pub fn save_model_string(model: &TaggerModel) -> String {
    let c = &model.config;
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    out.push_str(&format!("arch {}\n", c.arch.name()));
    out.push_str(&format!(
        "scheme {}\n",
        c.scheme.map(|s| s.name()).unwrap_or("none")
    ));
    out.push_str(&format!("d_e {}\n", c.d_e));
    out.push_str(&format!("d_d {}\n", c.d_d));
    out.push_str(&format!("d_h {}\n", c.d_h));
    out.push_str(&format!("d_hx {}\n", c.d_hx));
    out.push_str(&format!("d_hd {}\n", c.d_hd));
    out.push_str(&format!("dropout {}\n", c.dropout));
    out.push_str(&format!("batch {}\n", c.batch_size));
    out.push_str(&format!("epochs {}\n", c.epochs));
    out.push_str(&format!("seed {}\n", c.seed));
    out.push_str(&format!("lr {}\n", c.learning_rate));
    out.push_str(&format!("clip {}\n", opt_str(c.clip_norm)));
    out.push_str(&format!("split-clauses {}\n", c.split_clauses));
    out.push_str(&format!("mask-decode {}\n", c.mask_decode));
    out.push_str(&format!("dev-fraction {}\n", c.dev_fraction));
    out.push_str(&format!("patience {}\n", opt_str(c.patience)));
    out.push_str(&format!(
        "dict-fingerprint {}\n",
        if model.dict_fingerprint.is_empty() {
            "none"
        } else {
            &model.dict_fingerprint
        }
    ));
    out.push_str(&format!("vocab {}\n", model.vocab.chars().len()));
    for &ch in model.vocab.chars() {
        out.push_str(&format!("U+{:04X}\n", ch as u32));
    }
    for (name, tensor) in named_tensors(model) {
        let (rows, cols, data): (usize, usize, &[f64]) = match tensor {
            TensorRef::Mat(m) => (m.rows(), m.cols(), m.as_slice()),
            TensorRef::Vec(v) => (1, v.len(), v),
        };
        out.push_str(&format!("tensor {name} {rows} {cols}\n"));
        for r in 0..rows {
            let row = &data[r * cols..(r + 1) * cols];
            let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
    }
    out.push_str("end\n");
    out
}

pub fn save_model(model: &TaggerModel, path: &Path) -> Result<(), Error> {
    std::fs::write(path, save_model_string(model))?;
    Ok(())
}

struct LineReader<'a> {
    lines: std::str::Lines<'a>,
    line_no: usize,
}

impl<'a> LineReader<'a> {
    fn next(&mut self) -> Result<&'a str, Error> {
        self.line_no += 1;
        self.lines
            .next()
            .ok_or_else(|| Error::ModelFormat(format!("unexpected end of file at line {}", self.line_no)))
    }

    fn field(&mut self, key: &str) -> Result<&'a str, Error> {
        let line = self.next()?;
        let value = line
            .strip_prefix(key)
            .and_then(|rest| rest.strip_prefix(' '))
            .ok_or_else(|| {
                Error::ModelFormat(format!("expected `{key} ...` at line {}, found {line:?}", self.line_no))
            })?;
        Ok(value)
    }

    fn parse_field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, Error> {
        let line_no = self.line_no + 1;
        let value = self.field(key)?;
        value
            .parse()
            .map_err(|_| Error::ModelFormat(format!("bad value for {key} at line {line_no}: {value:?}")))
    }

    fn parse_opt<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>, Error> {
        let line_no = self.line_no + 1;
        let value = self.field(key)?;
        if value == "none" {
            return Ok(None);
        }
        value
            .parse()
            .map(Some)
            .map_err(|_| Error::ModelFormat(format!("bad value for {key} at line {line_no}: {value:?}")))
    }
}

pub fn load_model_str(text: &str) -> Result<TaggerModel, Error> {
    let mut r = LineReader {
        lines: text.lines(),
        line_no: 0,
    };
    if r.next()? != MAGIC {
        return Err(Error::ModelFormat("bad magic line".into()));
    }
    let arch_str = r.field("arch")?;
    let arch = ArchKind::parse(arch_str)
        .ok_or_else(|| Error::ModelFormat(format!("unknown architecture {arch_str:?}")))?;
    let scheme_str = r.field("scheme")?;
    let scheme = if scheme_str == "none" {
        None
    } else {
        Some(
            FeatureScheme::parse(scheme_str)
                .ok_or_else(|| Error::ModelFormat(format!("unknown scheme {scheme_str:?}")))?,
        )
    };
    let config = ModelConfig {
        arch,
        scheme,
        d_e: r.parse_field("d_e")?,
        d_d: r.parse_field("d_d")?,
        d_h: r.parse_field("d_h")?,
        d_hx: r.parse_field("d_hx")?,
        d_hd: r.parse_field("d_hd")?,
        dropout: r.parse_field("dropout")?,
        batch_size: r.parse_field("batch")?,
        epochs: r.parse_field("epochs")?,
        seed: r.parse_field("seed")?,
        learning_rate: r.parse_field("lr")?,
        clip_norm: r.parse_opt("clip")?,
        split_clauses: r.parse_field("split-clauses")?,
        mask_decode: r.parse_field("mask-decode")?,
        dev_fraction: r.parse_field("dev-fraction")?,
        patience: r.parse_opt("patience")?,
    };
    let fingerprint = {
        let v = r.field("dict-fingerprint")?;
        if v == "none" {
            String::new()
        } else {
            v.to_string()
        }
    };
    let vocab_len: usize = r.parse_field("vocab")?;
    let mut chars = Vec::with_capacity(vocab_len);
    for _ in 0..vocab_len {
        let line_no = r.line_no + 1;
        let line = r.next()?;
        let cp = line
            .strip_prefix("U+")
            .and_then(|h| u32::from_str_radix(h, 16).ok())
            .and_then(char::from_u32)
            .ok_or_else(|| Error::ModelFormat(format!("bad codepoint at line {line_no}: {line:?}")))?;
        chars.push(cp);
    }
    let vocab = Vocabulary::from_chars(chars);

    let mut model = build_model(&config, vocab)?;
    model.dict_fingerprint = fingerprint;

    for (name, tensor) in named_tensors_mut(&mut model) {
        let line_no = r.line_no + 1;
        let header = r.next()?;
        let mut parts = header.split(' ');
        if parts.next() != Some("tensor") {
            return Err(Error::ModelFormat(format!(
                "expected tensor header at line {line_no}, found {header:?}"
            )));
        }
        let found_name = parts.next().unwrap_or("");
        if found_name != name {
            return Err(Error::ModelFormat(format!(
                "expected tensor {name:?} at line {line_no}, found {found_name:?}"
            )));
        }
        let rows: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ModelFormat(format!("bad tensor header at line {line_no}")))?;
        let cols: usize = parts
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::ModelFormat(format!("bad tensor header at line {line_no}")))?;
        let (want_rows, want_cols, data): (usize, usize, &mut [f64]) = match tensor {
            TensorMut::Mat(m) => (m.rows(), m.cols(), m.as_mut_slice()),
            TensorMut::Vec(v) => (1, v.len(), v),
        };
        if (rows, cols) != (want_rows, want_cols) {
            return Err(Error::ModelFormat(format!(
                "tensor {name} declares {rows}x{cols}, config requires {want_rows}x{want_cols}"
            )));
        }
        for row in 0..rows {
            let line_no = r.line_no + 1;
            let line = r.next()?;
            let values: Result<Vec<f64>, _> =
                line.split(' ').map(|f| f.parse::<f64>()).collect();
            let values = values
                .map_err(|e| Error::ModelFormat(format!("bad number at line {line_no}: {e}")))?;
            if values.len() != cols {
                return Err(Error::ModelFormat(format!(
                    "tensor {name} row {row} has {} values, expected {cols}",
                    values.len()
                )));
            }
            data[row * cols..(row + 1) * cols].copy_from_slice(&values);
        }
    }
    if r.next()? != "end" {
        return Err(Error::ModelFormat("missing end marker".into()));
    }
    Ok(model)
}

pub fn load_model(path: &Path) -> Result<TaggerModel, Error> {
    let text = std::fs::read_to_string(path)?;
    load_model_str(&text)
}
