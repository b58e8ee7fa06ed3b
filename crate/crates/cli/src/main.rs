//! `dicner`: train, apply and inspect dictionary-augmented Bi-LSTM-CRF
//! taggers for Chinese clinical text.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dicner_core::corpus::{parse_corpus, tags_to_spans_lenient, write_corpus, LabeledSentence};
use dicner_core::dictionary::{bdmm_segment, load_dictionary, Dictionary};
use dicner_core::eval::micro_prf;
use dicner_core::features::{ngram_features, pdet_labels, pdet_name, piet_labels, piet_name};
use dicner_core::model::{
    load_model, load_pretrained_embeddings, save_model, tag, train_with_init, ArchKind,
    EmbeddingTarget, ModelConfig,
};
use dicner_core::synth::{generate, SynthConfig};
use dicner_core::{evaluate_model, EntitySpan, FeatureScheme};

#[derive(Parser)]
#[command(name = "dicner", version, about = "dictionary-augmented clinical NER tagger")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a model on a tagged corpus
    Train(TrainArgs),
    /// Tag a corpus file with a trained model
    Tag(TagArgs),
    /// Compare a predicted corpus against a gold corpus
    Eval(EvalArgs),
    /// Show the bidirectional maximum-matching segmentation of text
    Segment(SegmentArgs),
    /// Dump per-character dictionary features for a chosen scheme
    Features(FeaturesArgs),
    /// Retrain across dictionary fractions or hidden sizes and report F1
    Sweep(SweepArgs),
    /// Generate a deterministic synthetic corpus and dictionary
    #[command(hide = true)]
    GenSynthetic(GenSyntheticArgs),
}

fn parse_arch(s: &str) -> Result<ArchKind, String> {
    ArchKind::parse(s).ok_or_else(|| format!("unknown arch {s:?} (baseline, model1, model2)"))
}

fn parse_scheme(s: &str) -> Result<FeatureScheme, String> {
    FeatureScheme::parse(s).ok_or_else(|| {
        format!("unknown scheme {s:?} (ngram, piet-onehot, piet-embed, pdet-onehot, pdet-embed)")
    })
}

/// Hyperparameter flags shared by `train` and `sweep`.
#[derive(Args, Clone)]
struct ConfigArgs {
    #[arg(long, default_value = "model1", value_parser = parse_arch)]
    arch: ArchKind,
    /// Feature scheme; defaults to pdet-embed except for baseline
    #[arg(long, value_parser = parse_scheme)]
    scheme: Option<FeatureScheme>,
    #[arg(long, default_value_t = 128)]
    d_e: usize,
    #[arg(long, default_value_t = 128)]
    d_d: usize,
    #[arg(long, default_value_t = 256)]
    d_h: usize,
    #[arg(long, default_value_t = 128)]
    d_hx: usize,
    #[arg(long, default_value_t = 128)]
    d_hd: usize,
    #[arg(long, default_value_t = 0.2)]
    dropout: f64,
    #[arg(long, default_value_t = 128)]
    batch: usize,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.001)]
    lr: f64,
    /// Global gradient-norm clipping threshold
    #[arg(long)]
    clip: Option<f64>,
    /// Fraction of sentences held out for per-epoch dev scores
    #[arg(long, default_value_t = 0.0)]
    dev_split: f64,
    /// Stop after this many epochs without a dev F1 improvement
    #[arg(long)]
    patience: Option<usize>,
    /// Train and decode on whole sentences instead of clauses
    #[arg(long)]
    no_split_clauses: bool,
    /// Restrict Viterbi to structurally valid BIEOS transitions
    #[arg(long)]
    mask_decode: bool,
}

impl ConfigArgs {
    fn to_model_config(&self) -> Result<ModelConfig, CliError> {
        let scheme = match self.arch {
            ArchKind::Baseline => {
                if self.scheme.is_some() {
                    return Err(CliError::Usage(
                        "--scheme cannot be combined with --arch baseline".into(),
                    ));
                }
                None
            }
            _ => Some(self.scheme.unwrap_or(FeatureScheme::PdetEmbed)),
        };
        let cfg = ModelConfig {
            arch: self.arch,
            scheme,
            d_e: self.d_e,
            d_d: self.d_d,
            d_h: self.d_h,
            d_hx: self.d_hx,
            d_hd: self.d_hd,
            dropout: self.dropout,
            batch_size: self.batch,
            epochs: self.epochs,
            seed: self.seed,
            learning_rate: self.lr,
            clip_norm: self.clip,
            split_clauses: !self.no_split_clauses,
            mask_decode: self.mask_decode,
            dev_fraction: self.dev_split,
            patience: self.patience,
        };
        cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Entity dictionary; required except for --arch baseline
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Where to write the trained model
    #[arg(long)]
    out: PathBuf,
    /// Write per-epoch metrics as JSON lines
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Pretrained character embeddings (text format)
    #[arg(long)]
    char_embeddings: Option<PathBuf>,
    /// Pretrained feature-label embeddings (text format)
    #[arg(long)]
    feat_embeddings: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Corpus-format input (tags, if present, are ignored)
    #[arg(long)]
    input: PathBuf,
    /// Output file; stdout when omitted
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Gold-standard tagged corpus
    #[arg(long)]
    gold: PathBuf,
    /// Predicted tagged corpus
    #[arg(long)]
    pred: PathBuf,
}

#[derive(Args)]
struct SegmentArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Text to segment; reads --input when omitted
    #[arg(long)]
    text: Option<String>,
    /// File with one sentence per line
    #[arg(long)]
    input: Option<PathBuf>,
}

#[derive(Args)]
struct FeaturesArgs {
    #[arg(long)]
    dict: PathBuf,
    #[arg(long, value_parser = parse_scheme)]
    scheme: FeatureScheme,
    #[arg(long)]
    text: String,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    dict: PathBuf,
    /// Tagged corpus used to score each sweep point
    #[arg(long)]
    test: PathBuf,
    /// Comma-separated dictionary fractions, e.g. 0.8,0.85,0.9,0.95
    #[arg(long, value_delimiter = ',')]
    sweep_dict: Option<Vec<f64>>,
    /// Comma-separated hidden sizes, e.g. 128,192,256,320,384
    #[arg(long, value_delimiter = ',')]
    sweep_hidden: Option<Vec<usize>>,
    /// Seeds to average over; defaults to the base --seed
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct GenSyntheticArgs {
    #[arg(long, default_value_t = 50)]
    train: usize,
    #[arg(long, default_value_t = 0)]
    test: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    /// Fraction of entities kept out of the training sentences
    #[arg(long, default_value_t = 0.0)]
    unseen: f64,
    #[arg(long)]
    out_dir: PathBuf,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl From<dicner_core::Error> for CliError {
    fn from(e: dicner_core::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        CliError::Data(e.to_string())
    }
}

fn read_to_string(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn load_dict_file(path: &Path) -> Result<Dictionary, CliError> {
    let (dict, warnings) = load_dictionary(&read_to_string(path)?)?;
    for w in warnings {
        eprintln!("warning: {}:{}: {}", path.display(), w.line, w.message);
    }
    Ok(dict)
}

fn span_summary(sentence: &LabeledSentence, spans: &[EntitySpan]) -> String {
    let parts: Vec<String> = spans
        .iter()
        .map(|s| {
            let surface: String = sentence.chars[s.start..=s.end].iter().collect();
            format!("{surface}:{} [{}..{}]", s.etype.letter(), s.start, s.end)
        })
        .collect();
    parts.join(" ")
}

fn cmd_train(args: &TrainArgs) -> Result<(), CliError> {
    let cfg = args.config.to_model_config()?;
    if cfg.arch != ArchKind::Baseline && args.dict.is_none() {
        return Err(CliError::Usage(format!(
            "--dict is required with --arch {}",
            cfg.arch.name()
        )));
    }
    let corpus = parse_corpus(&read_to_string(&args.corpus)?)?;
    let dict = match &args.dict {
        Some(p) => load_dict_file(p)?,
        None => Dictionary::new(),
    };
    let char_emb = args.char_embeddings.as_deref().map(read_to_string).transpose()?;
    let feat_emb = args.feat_embeddings.as_deref().map(read_to_string).transpose()?;

    let outcome = train_with_init(&corpus, &dict, &cfg, |model| {
        if let Some(text) = &char_emb {
            let cov = load_pretrained_embeddings(model, text, EmbeddingTarget::Chars)?;
            eprintln!("character embeddings: {:.1}% of vocabulary covered", 100.0 * cov);
        }
        if let Some(text) = &feat_emb {
            let cov = load_pretrained_embeddings(model, text, EmbeddingTarget::Features)?;
            eprintln!("feature embeddings: {:.1}% of labels covered", 100.0 * cov);
        }
        Ok(())
    })?;

    let mut metrics_text = String::new();
    for m in &outcome.metrics {
        metrics_text.push_str(&m.to_json());
        metrics_text.push('\n');
        match (m.dev_precision, m.dev_recall, m.dev_f1) {
            (Some(p), Some(r), Some(f)) => println!(
                "epoch {:3}  loss {:.6}  dev P {:.2} R {:.2} F1 {:.2}",
                m.epoch,
                m.loss,
                100.0 * p,
                100.0 * r,
                100.0 * f
            ),
            _ => println!("epoch {:3}  loss {:.6}", m.epoch, m.loss),
        }
    }
    if let Some(path) = &args.metrics_out {
        fs::write(path, metrics_text)?;
    }
    save_model(&outcome.model, &args.out)?;
    println!("model written to {}", args.out.display());
    Ok(())
}

fn cmd_tag(args: &TagArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let dict = match &args.dict {
        Some(p) => load_dict_file(p)?,
        None => Dictionary::new(),
    };
    if model.config.arch != ArchKind::Baseline && args.dict.is_none() {
        return Err(CliError::Usage(format!(
            "--dict is required for a {} model",
            model.config.arch.name()
        )));
    }
    if !model.dict_fingerprint.is_empty() && model.dict_fingerprint != dict.fingerprint() {
        eprintln!("warning: dictionary differs from the one used at training time");
    }
    let sentences = parse_corpus(&read_to_string(&args.input)?)?;
    let mut tagged = Vec::with_capacity(sentences.len());
    for (i, s) in sentences.iter().enumerate() {
        let out = tag(&model, s, &dict);
        eprintln!("sentence {}: {}", i + 1, span_summary(s, &out.spans));
        tagged.push(LabeledSentence {
            chars: s.chars.clone(),
            tags: Some(out.tags),
        });
    }
    let text = write_corpus(&tagged);
    match &args.out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn cmd_eval(args: &EvalArgs) -> Result<(), CliError> {
    let gold = parse_corpus(&read_to_string(&args.gold)?)?;
    let pred = parse_corpus(&read_to_string(&args.pred)?)?;
    if gold.len() != pred.len() {
        return Err(CliError::Data(format!(
            "gold has {} sentences, predictions have {}",
            gold.len(),
            pred.len()
        )));
    }
    let mut gold_spans = Vec::new();
    let mut pred_spans = Vec::new();
    for (i, (g, p)) in gold.iter().zip(&pred).enumerate() {
        if g.chars != p.chars {
            return Err(CliError::Data(format!("sentence {} text differs", i + 1)));
        }
        let g_tags = g.tags.as_ref().ok_or_else(|| {
            CliError::Data(format!("gold sentence {} is untagged", i + 1))
        })?;
        let p_tags = p.tags.as_ref().ok_or_else(|| {
            CliError::Data(format!("predicted sentence {} is untagged", i + 1))
        })?;
        gold_spans.push(tags_to_spans_lenient(g_tags));
        pred_spans.push(tags_to_spans_lenient(p_tags));
    }
    let report = micro_prf(&gold_spans, &pred_spans)?;
    print!("{}", report.table());
    Ok(())
}

fn cmd_segment(args: &SegmentArgs) -> Result<(), CliError> {
    let dict = load_dict_file(&args.dict)?;
    let lines: Vec<String> = match (&args.text, &args.input) {
        (Some(t), None) => vec![t.clone()],
        (None, Some(p)) => read_to_string(p)?.lines().map(str::to_string).collect(),
        _ => {
            return Err(CliError::Usage(
                "provide exactly one of --text or --input".into(),
            ))
        }
    };
    for line in lines {
        if line.is_empty() {
            println!();
            continue;
        }
        let seg = bdmm_segment(&line, &dict);
        let parts: Vec<String> = seg
            .segments
            .iter()
            .map(|s| match s.etype {
                Some(t) => format!("{}:{}", s.text, t.letter()),
                None => s.text.clone(),
            })
            .collect();
        println!("{}", parts.join("\t"));
    }
    Ok(())
}

fn cmd_features(args: &FeaturesArgs) -> Result<(), CliError> {
    let dict = load_dict_file(&args.dict)?;
    let chars: Vec<char> = args.text.chars().collect();
    match args.scheme {
        FeatureScheme::NGram => {
            for (c, f) in chars.iter().zip(ngram_features(&chars, &dict)) {
                let bits: String = f.0.iter().map(|b| char::from(b'0' + b)).collect();
                println!("{c}\t{}\t{bits}", args.scheme.name());
            }
        }
        FeatureScheme::PietOneHot | FeatureScheme::PietEmbed => {
            for (c, l) in chars.iter().zip(piet_labels(&chars, &dict)) {
                println!("{c}\t{}\t{}", args.scheme.name(), piet_name(l));
            }
        }
        FeatureScheme::PdetOneHot | FeatureScheme::PdetEmbed => {
            for (c, l) in chars.iter().zip(pdet_labels(&chars, &dict)) {
                println!("{c}\t{}\t{}", args.scheme.name(), pdet_name(l));
            }
        }
    }
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), CliError> {
    let base = args.config.to_model_config()?;
    let corpus = parse_corpus(&read_to_string(&args.corpus)?)?;
    let test = parse_corpus(&read_to_string(&args.test)?)?;
    let dict = load_dict_file(&args.dict)?;
    let seeds = args.seeds.clone().unwrap_or_else(|| vec![base.seed]);

    enum Axis {
        Dict(Vec<f64>),
        Hidden(Vec<usize>),
    }
    let axis = match (&args.sweep_dict, &args.sweep_hidden) {
        (Some(f), None) => {
            if f.iter().any(|&x| !(x > 0.0 && x <= 1.0)) {
                return Err(CliError::Usage("dictionary fractions must be in (0, 1]".into()));
            }
            Axis::Dict(f.clone())
        }
        (None, Some(h)) => Axis::Hidden(h.clone()),
        _ => {
            return Err(CliError::Usage(
                "provide exactly one of --sweep-dict or --sweep-hidden".into(),
            ))
        }
    };

    let run_point = |cfg: &ModelConfig, dict: &Dictionary| -> Result<(f64, f64, f64), CliError> {
        let outcome = dicner_core::train(&corpus, dict, cfg)?;
        let report = evaluate_model(&outcome.model, &test, dict)?;
        Ok((
            report.overall.precision(),
            report.overall.recall(),
            report.overall.f1(),
        ))
    };

    println!("{:<10} {:>8} {:>8} {:>8}", "point", "P", "R", "F1");
    match axis {
        Axis::Dict(fractions) => {
            for frac in fractions {
                let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
                for &seed in &seeds {
                    let sub_dict = dict.subsample(frac, seed ^ 0x9e37);
                    let cfg = ModelConfig { seed, ..base.clone() };
                    let (pp, rr, ff) = run_point(&cfg, &sub_dict)?;
                    p += pp;
                    r += rr;
                    f += ff;
                }
                let n = seeds.len() as f64;
                println!(
                    "{:<10} {:>8.2} {:>8.2} {:>8.2}",
                    format!("{frac}"),
                    100.0 * p / n,
                    100.0 * r / n,
                    100.0 * f / n
                );
            }
        }
        Axis::Hidden(sizes) => {
            for d_h in sizes {
                let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
                for &seed in &seeds {
                    let cfg = ModelConfig { d_h, seed, ..base.clone() };
                    let (pp, rr, ff) = run_point(&cfg, &dict)?;
                    p += pp;
                    r += rr;
                    f += ff;
                }
                let n = seeds.len() as f64;
                println!(
                    "{:<10} {:>8.2} {:>8.2} {:>8.2}",
                    d_h,
                    100.0 * p / n,
                    100.0 * r / n,
                    100.0 * f / n
                );
            }
        }
    }
    Ok(())
}

fn cmd_gen_synthetic(args: &GenSyntheticArgs) -> Result<(), CliError> {
    if !(0.0..=1.0).contains(&args.unseen) {
        return Err(CliError::Usage("--unseen must be in [0, 1]".into()));
    }
    let data = generate(&SynthConfig {
        train_sentences: args.train,
        test_sentences: args.test,
        seed: args.seed,
        unseen_entity_fraction: args.unseen,
        ..SynthConfig::default()
    });
    fs::create_dir_all(&args.out_dir)?;
    fs::write(args.out_dir.join("train.tsv"), write_corpus(&data.train))?;
    if args.test > 0 {
        fs::write(args.out_dir.join("test.tsv"), write_corpus(&data.test))?;
    }
    let mut dict_text = String::new();
    for (surface, t) in data.dictionary.flat_entries() {
        dict_text.push_str(&format!("{surface}\t{}\n", t.letter()));
    }
    fs::write(args.out_dir.join("dict.tsv"), dict_text)?;
    println!(
        "wrote {} train sentences, {} test sentences, {} dictionary entries to {}",
        data.train.len(),
        data.test.len(),
        data.dictionary.flat_entries().len(),
        args.out_dir.display()
    );
    Ok(())
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.cmd {
        Cmd::Train(a) => cmd_train(a),
        Cmd::Tag(a) => cmd_tag(a),
        Cmd::Eval(a) => cmd_eval(a),
        Cmd::Segment(a) => cmd_segment(a),
        Cmd::Features(a) => cmd_features(a),
        Cmd::Sweep(a) => cmd_sweep(a),
        Cmd::GenSynthetic(a) => cmd_gen_synthetic(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // help/version requests are not errors
            if e.use_stderr() {
                eprint!("{e}");
                return ExitCode::from(1);
            }
            print!("{e}");
            return ExitCode::SUCCESS;
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
