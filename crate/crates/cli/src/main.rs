use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use sctc_core::decoder::PHONEME_WIDTH;
use sctc_core::inventory::{Attribute, AttributeTable, Phoneme, NUM_PHONEMES};
use sctc_core::mdd::{evaluate, parse_evaluation_file, Level};
use sctc_core::sctc::CategoryLayout;
use sctc_core::toy::{self, CorpusConfig, SyntheticCorpus, TrainConfig};
use sctc_core::{
    align, ctc_loss, decode_all, diagnosis_report, format_attribute_decode, greedy_decode_phoneme,
    make_layout, parse_attribute_decode, sctc_sb_loss, AnnotatedUtterance, Error, Matrix,
    MultiLabelTarget, Result, TokenSequence,
};

#[derive(Parser)]
#[command(
    name = "sctc",
    version,
    about = "Shared-blank separable CTC over speech attributes, decoding and MDD scoring"
)]
struct Cli {
    /// Attribute table TSV; defaults to the shipped table.
    #[arg(long, global = true, value_name = "PATH")]
    attr_table: Option<PathBuf>,

    /// Output format; `mdd-eval` defaults to json, everything else to text.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Subcommand)]
enum Command {
    /// Map a phoneme sequence to its 35 attribute sequences.
    Map {
        /// Space-separated phonemes; several arguments are joined.
        #[arg(required = true)]
        phonemes: Vec<String>,
    },
    /// Loss of a logits CSV against a target.
    Loss(LossArgs),
    /// Compare the analytic gradient with central finite differences.
    GradCheck(GradCheckArgs),
    /// Greedy decoding of a logits CSV (71 columns: attributes, 40: phonemes).
    Decode { logits: PathBuf },
    /// Align two sequences and print the edit script.
    Align {
        reference: String,
        hypothesis: String,
        /// Force one token per character even when the inputs contain spaces.
        #[arg(long)]
        chars: bool,
    },
    /// Score an evaluation file of `canonical|annotated|recognized` lines.
    MddEval {
        file: PathBuf,
        #[arg(long, default_value = "both")]
        level: String,
    },
    /// Train the linear toy model on a synthetic corpus.
    TrainToy(TrainArgs),
    /// Per-position attribute feedback for one utterance.
    Report(ReportArgs),
}

#[derive(Args)]
struct LossArgs {
    /// Logits CSV with a `T,K` header line.
    logits: PathBuf,
    /// Phoneme target for the 71-column attribute layout.
    #[arg(long, conflicts_with = "labels", required_unless_present = "labels")]
    phonemes: Option<String>,
    /// Space-separated label indices for plain CTC (blank is the last column).
    #[arg(long)]
    labels: Option<String>,
    /// Include the per-attribute losses.
    #[arg(long)]
    per_category: bool,
    /// Write the gradient as CSV.
    #[arg(long, value_name = "PATH")]
    grad_out: Option<PathBuf>,
}

#[derive(Args)]
struct GradCheckArgs {
    /// Logits CSV; a random instance is drawn when omitted.
    #[arg(long, requires = "phonemes")]
    logits: Option<PathBuf>,
    #[arg(long)]
    phonemes: Option<String>,
    /// Number of attributes (first in table order) for a random instance.
    #[arg(long, default_value_t = 35)]
    categories: usize,
    #[arg(long, default_value_t = 20)]
    frames: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-5)]
    step: f64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    utterances: usize,
    #[arg(long, default_value_t = 100)]
    heldout: usize,
    #[arg(long, default_value_t = 64)]
    feature_dim: usize,
    #[arg(long)]
    noise_scale: Option<f64>,
    #[arg(long, default_value_t = 30)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    learning_rate: f64,
    #[arg(long, default_value_t = 0.005)]
    weight_decay: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.10)]
    warmup_fraction: f64,
    /// Directory for `model.csv`, `metrics.json` and `losses.tsv`.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Also write the training corpus under `<out>/corpus`.
    #[arg(long, requires = "out")]
    save_corpus: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    canonical: String,
    #[arg(long)]
    annotated: String,
    /// Recognized phonemes, mapped to attributes; defaults to the annotation.
    #[arg(long, conflicts_with = "decoded")]
    recognized: Option<String>,
    /// Attribute decode file as written by `decode`.
    #[arg(long, value_name = "PATH")]
    decoded: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<String> {
    let table = match &cli.attr_table {
        Some(p) => AttributeTable::parse(&read_file(p)?)?,
        None => AttributeTable::shipped(),
    };
    let text = |default: Format| cli.format.unwrap_or(default) == Format::Text;
    match cli.command {
        Command::Map { phonemes } => map(&table, &phonemes.join(" "), text(Format::Text)),
        Command::Loss(a) => loss(&table, &a, text(Format::Text)),
        Command::GradCheck(a) => grad_check(&table, &a, text(Format::Text)),
        Command::Decode { logits } => decode(&logits, text(Format::Text)),
        Command::Align {
            reference,
            hypothesis,
            chars,
        } => align_cmd(&reference, &hypothesis, chars, text(Format::Text)),
        Command::MddEval { file, level } => {
            let level: Level = level.parse()?;
            let utts = parse_evaluation_file(&read_file(file)?)?;
            let report = evaluate(&table, &utts, level)?;
            Ok(if text(Format::Json) {
                report.to_text()
            } else {
                to_json(&report)
            })
        }
        Command::TrainToy(a) => train_toy(&table, &a, text(Format::Text)),
        Command::Report(a) => report(&table, &a, text(Format::Text)),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable report");
    s.push('\n');
    s
}

fn full_layout() -> CategoryLayout {
    make_layout(&Attribute::all().collect::<Vec<_>>()).expect("canonical attributes")
}

fn read_file(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path)
        .map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn read_logits(path: &Path) -> Result<Matrix> {
    Matrix::parse_csv(&read_file(path)?)
}

fn phoneme_target(table: &AttributeTable, phonemes: &str) -> Result<MultiLabelTarget> {
    let seq = TokenSequence::phonemes(phonemes)?;
    let parsed = sctc_core::inventory::parse_phoneme_sequence(&seq)?;
    let attrs: Vec<Attribute> = Attribute::all().collect();
    Ok(MultiLabelTarget::from_phonemes(table, &attrs, &parsed))
}

fn map(table: &AttributeTable, phonemes: &str, text: bool) -> Result<String> {
    let seq = TokenSequence::phonemes(phonemes)?;
    let mapped = table.map_all(&seq)?;
    if text {
        return Ok(format_attribute_decode(&full_layout(), &mapped));
    }
    let rows: Vec<_> = Attribute::all()
        .zip(&mapped)
        .map(|(a, s)| json!({ "attribute": a.name(), "tokens": s.tokens() }))
        .collect();
    Ok(to_json(
        &json!({ "phonemes": seq.tokens(), "attributes": rows }),
    ))
}

fn loss(table: &AttributeTable, a: &LossArgs, text: bool) -> Result<String> {
    let logits = read_logits(&a.logits)?;
    let (nll, grad, per_category) = match (&a.phonemes, &a.labels) {
        (Some(p), _) => {
            let r = sctc_sb_loss(&logits, &full_layout(), &phoneme_target(table, p)?)?;
            (r.total_neg_log_likelihood, r.grad, Some(r.per_category_nll))
        }
        (None, Some(l)) => {
            let labels = l
                .split_whitespace()
                .map(|t| {
                    t.parse::<usize>()
                        .map_err(|_| Error::BadConfig(format!("label `{t}` is not an index")))
                })
                .collect::<Result<Vec<_>>>()?;
            let r = ctc_loss(&logits, &labels)?;
            (r.neg_log_likelihood, r.grad, None)
        }
        (None, None) => unreachable!("clap requires a target"),
    };
    if let Some(path) = &a.grad_out {
        fs::write(path, grad.to_csv())?;
    }
    let breakdown: Option<Vec<(&str, f64)>> = per_category
        .filter(|_| a.per_category)
        .map(|v| Attribute::all().map(|a| a.name()).zip(v).collect());
    if text {
        let mut out = format!("nll\t{nll:.10}\n");
        for (name, v) in breakdown.iter().flatten() {
            out.push_str(&format!("{name}\t{v:.10}\n"));
        }
        return Ok(out);
    }
    let mut value = json!({ "neg_log_likelihood": nll });
    if let Some(b) = breakdown {
        value["per_category"] = b
            .into_iter()
            .map(|(n, v)| json!({ "attribute": n, "neg_log_likelihood": v }))
            .collect();
    }
    Ok(to_json(&value))
}

fn grad_check(table: &AttributeTable, a: &GradCheckArgs, text: bool) -> Result<String> {
    let (logits, layout, target) = match (&a.logits, &a.phonemes) {
        (Some(path), Some(p)) => (read_logits(path)?, full_layout(), phoneme_target(table, p)?),
        _ => random_instance(table, a)?,
    };
    let analytic = sctc_sb_loss(&logits, &layout, &target)?.grad;
    let f = |m: &Matrix| -> Result<f64> {
        Ok(sctc_sb_loss(m, &layout, &target)?.total_neg_log_likelihood)
    };
    let mut probe = logits.clone();
    let mut worst = 0.0f64;
    for r in 0..logits.rows() {
        for c in 0..logits.cols() {
            let x = logits[(r, c)];
            probe.row_mut(r)[c] = x + a.step;
            let up = f(&probe)?;
            probe.row_mut(r)[c] = x - a.step;
            let down = f(&probe)?;
            probe.row_mut(r)[c] = x;
            let numeric = (up - down) / (2.0 * a.step);
            let g = analytic[(r, c)];
            // near-zero entries are judged on absolute error
            let rel = (g - numeric).abs() / g.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    let pass = worst <= 1e-4;
    Ok(if text {
        format!(
            "frames\t{}\ncategories\t{}\nmax_relative_error\t{worst:.3e}\nwithin_1e-4\t{pass}\n",
            logits.rows(),
            layout.len()
        )
    } else {
        to_json(&json!({
            "frames": logits.rows(),
            "categories": layout.len(),
            "max_relative_error": worst,
            "tolerance": 1e-4,
            "pass": pass,
        }))
    })
}

fn random_instance(
    table: &AttributeTable,
    a: &GradCheckArgs,
) -> Result<(Matrix, CategoryLayout, MultiLabelTarget)> {
    if a.categories == 0 || a.categories > 35 || a.frames == 0 {
        return Err(Error::BadConfig(
            "categories must lie in 1..=35 and frames must be positive".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let attrs: Vec<Attribute> = Attribute::all().take(a.categories).collect();
    let layout = make_layout(&attrs)?;
    // half the frames bounds the worst case of a blank between every pair
    let len = rng.random_range(0..=a.frames.div_ceil(2));
    let phonemes: Vec<Phoneme> = (0..len)
        .map(|_| Phoneme::from_index(rng.random_range(0..NUM_PHONEMES)).expect("in range"))
        .collect();
    let target = MultiLabelTarget::from_phonemes(table, &attrs, &phonemes);
    let data = (0..a.frames * layout.width())
        .map(|_| rng.random_range(-3.0..3.0))
        .collect();
    let logits = Matrix::from_vec(a.frames, layout.width(), data)?;
    Ok((logits, layout, target))
}

fn decode(path: &Path, text: bool) -> Result<String> {
    let logits = read_logits(path)?;
    let layout = full_layout();
    if logits.cols() == PHONEME_WIDTH {
        let seq = greedy_decode_phoneme(&logits)?;
        return Ok(if text {
            format!("{seq}\n")
        } else {
            to_json(&json!({ "phonemes": seq.tokens() }))
        });
    }
    if logits.cols() != layout.width() {
        return Err(Error::BadDimension {
            location: "logits columns (71 for attributes, 40 for phonemes)".into(),
            expected: layout.width(),
            found: logits.cols(),
        });
    }
    let decoded = decode_all(&logits, &layout)?;
    if text {
        return Ok(format_attribute_decode(&layout, &decoded));
    }
    let rows: Vec<_> = Attribute::all()
        .zip(&decoded)
        .map(|(a, s)| json!({ "attribute": a.name(), "tokens": s.tokens() }))
        .collect();
    Ok(to_json(&json!({ "attributes": rows })))
}

fn align_cmd(reference: &str, hypothesis: &str, chars: bool, text: bool) -> Result<String> {
    let spaced =
        reference.contains(char::is_whitespace) || hypothesis.contains(char::is_whitespace);
    let (r, h) = if chars || !spaced {
        (
            TokenSequence::chars(reference)?,
            TokenSequence::chars(hypothesis)?,
        )
    } else {
        let parse = |s: &str| TokenSequence::parse(sctc_core::AlphabetId::Symbols, s);
        (parse(reference)?, parse(hypothesis)?)
    };
    let al = align(&r, &h)?;
    let c = al.counts;
    Ok(if text {
        format!(
            "{}\nS={} D={} I={} M={} distance={}\n",
            al.script(),
            c.substitutions,
            c.deletions,
            c.insertions,
            c.matches,
            c.distance()
        )
    } else {
        to_json(&json!({
            "ops": al.ops,
            "S": c.substitutions,
            "D": c.deletions,
            "I": c.insertions,
            "M": c.matches,
            "distance": c.distance(),
        }))
    })
}

fn train_toy(table: &AttributeTable, a: &TrainArgs, text: bool) -> Result<String> {
    let defaults = CorpusConfig::default();
    let corpus = SyntheticCorpus::generate(CorpusConfig {
        seed: a.seed,
        n_utterances: a.utterances,
        feature_dim: a.feature_dim,
        noise_scale: a.noise_scale.unwrap_or(defaults.noise_scale),
        ..defaults
    })?;
    let config = TrainConfig {
        learning_rate: a.learning_rate,
        weight_decay: a.weight_decay,
        epochs: a.epochs,
        batch_size: a.batch_size,
        warmup_fraction: a.warmup_fraction,
        seed: a.seed,
        ..TrainConfig::default()
    };
    let outcome = toy::train(&corpus.utterances, table, &config)?;
    let heldout = corpus.sample(a.heldout, a.seed.wrapping_add(1));
    let summary = toy::evaluate(&outcome.model, &heldout, table)?;

    let metrics = json!({
        "config": config,
        "train_utterances": corpus.utterances.len(),
        "heldout_utterances": heldout.len(),
        "epoch_losses": outcome.epoch_losses,
        "heldout": summary,
    });
    if let Some(dir) = &a.out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("model.csv"), outcome.model.to_checkpoint())?;
        fs::write(dir.join("metrics.json"), to_json(&metrics))?;
        let losses: String = outcome
            .epoch_losses
            .iter()
            .enumerate()
            .map(|(e, l)| format!("{}\t{l:.6}\n", e + 1))
            .collect();
        fs::write(dir.join("losses.tsv"), losses)?;
        if a.save_corpus {
            toy::write_corpus_dir(&dir.join("corpus"), &corpus.utterances)?;
        }
    }
    Ok(if text {
        let mut out = String::from("epoch\tloss\n");
        for (e, l) in outcome.epoch_losses.iter().enumerate() {
            out.push_str(&format!("{}\t{l:.4}\n", e + 1));
        }
        out.push_str(&summary.to_text());
        out
    } else {
        to_json(&metrics)
    })
}

fn report(table: &AttributeTable, a: &ReportArgs, text: bool) -> Result<String> {
    let recognized_phonemes = a.recognized.as_deref().unwrap_or(&a.annotated);
    let u = AnnotatedUtterance::phonemes(&a.canonical, &a.annotated, recognized_phonemes)?;
    let decoded = match &a.decoded {
        Some(path) => parse_attribute_decode(&read_file(path)?)?,
        None => table.map_all(u.recognized())?,
    };
    let r = diagnosis_report(table, &u, &decoded)?;
    Ok(if text {
        if r.is_empty() {
            "no attribute errors detected\n".to_string()
        } else {
            r.to_string()
        }
    } else {
        to_json(&r)
    })
}
