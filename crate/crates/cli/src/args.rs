//! Command-line surface. Flags that mirror a config key are optional here
//! and resolved flag > config > default; built-in defaults match the
//! pipeline defaults documented in the README.

use std::path::PathBuf;

use clap::{Parser, Subcommand};

/// Binary semver plus the config-file schema version; bump the schema part
/// whenever a config key changes meaning.
pub const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (config-schema 1)");

#[derive(Debug, Parser)]
#[command(
    name = "stp",
    version = VERSION,
    about = "Speech translation pipeline tools: segmentation, corpus filtering, subwords, decoding, distillation data, scoring",
    max_term_width = 100
)]
pub struct Cli {
    /// TOML config file; flags override config values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for record-parallel stages (apply-bpe).
    #[arg(long, global = true, value_name = "N")]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Detect speech segments in a WAV file with the energy detector.
    Vad(VadArgs),
    /// Merge adjacent segments under duration/gap thresholds.
    MergeSegments(MergeSegmentsArgs),
    /// Print segment list statistics as JSON.
    Stats(StatsArgs),
    /// Filter a line-aligned corpus pair through the cleaning cascade.
    FilterBitext(FilterBitextArgs),
    /// Train an n-gram language model and save it.
    TrainLm(TrainLmArgs),
    /// Train a character n-gram language identifier and save it.
    TrainLangid(TrainLangidArgs),
    /// Learn a BPE merge table from text.
    LearnBpe(LearnBpeArgs),
    /// Split text into subword units with a merge table.
    ApplyBpe(ApplyBpeArgs),
    /// Beam-decode context lines with one or more n-gram scorers.
    Decode(DecodeArgs),
    /// Build distillation training rows from teacher decodes.
    Seqkd(SeqKdArgs),
    /// Score hypotheses against references (wer or bleu).
    Score(ScoreArgs),
}

#[derive(Debug, clap::Args)]
pub struct VadArgs {
    /// Input WAV file (16-bit mono PCM).
    #[arg(long, value_name = "FILE")]
    pub audio: PathBuf,
    /// Recording id in output rows; defaults to the WAV file stem.
    #[arg(long, value_name = "ID")]
    pub rec_id: Option<String>,
    /// Output format: kaldi, rttm, or jsonl.
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,
    /// Analysis frame length in milliseconds.
    #[arg(long, value_name = "MS")]
    pub frame_ms: Option<u32>,
    /// Padding added to both sides of each detected run, in milliseconds.
    #[arg(long, value_name = "MS")]
    pub padding_ms: Option<u32>,
    /// Detector aggressiveness, 0 (permissive) to 3 (aggressive).
    #[arg(long, value_name = "N")]
    pub aggressiveness: Option<u8>,
    /// Lower bound for the speech threshold in dB full scale.
    #[arg(long, value_name = "DB", allow_hyphen_values = true)]
    pub energy_floor_db: Option<f64>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct MergeSegmentsArgs {
    /// Input segments file.
    #[arg(long, value_name = "FILE")]
    pub segments: PathBuf,
    /// Segment format: kaldi, rttm, or jsonl.
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,
    /// Merged-duration threshold in 10-ms frames.
    #[arg(long, value_name = "FRAMES")]
    pub m_dur: Option<u64>,
    /// Gap threshold in 10-ms frames.
    #[arg(long, value_name = "FRAMES")]
    pub m_int: Option<u64>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct StatsArgs {
    /// Input segments file.
    #[arg(long, value_name = "FILE")]
    pub segments: PathBuf,
    /// Segment format: kaldi, rttm, or jsonl.
    #[arg(long, value_name = "FMT")]
    pub format: Option<String>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct FilterBitextArgs {
    /// Source-side text, one sentence per line.
    #[arg(long, value_name = "FILE")]
    pub src: PathBuf,
    /// Target-side text, line-aligned with --src.
    #[arg(long, value_name = "FILE")]
    pub tgt: PathBuf,
    /// In-domain n-gram model for perplexity selection.
    #[arg(long, value_name = "FILE")]
    pub indomain_lm: PathBuf,
    /// General-domain n-gram model (needed by --ce-diff).
    #[arg(long, value_name = "FILE")]
    pub general_lm: Option<PathBuf>,
    /// Keep records with perplexity at or below this value.
    #[arg(long, value_name = "PPL", conflicts_with_all = ["top_k", "ce_diff"])]
    pub ppl_threshold: Option<f64>,
    /// Keep the k lowest-perplexity records.
    #[arg(long, value_name = "K", conflicts_with = "ce_diff")]
    pub top_k: Option<usize>,
    /// Keep records with in-domain minus general cross-entropy at or below
    /// this value.
    #[arg(long, value_name = "DIFF", allow_hyphen_values = true)]
    pub ce_diff: Option<f64>,
    /// Language identification model.
    #[arg(long, value_name = "FILE")]
    pub langid: PathBuf,
    /// Expected source language label.
    #[arg(long, value_name = "LANG")]
    pub src_lang: Option<String>,
    /// Expected target language label.
    #[arg(long, value_name = "LANG")]
    pub tgt_lang: Option<String>,
    /// Drop records where either side exceeds this token count.
    #[arg(long, value_name = "N")]
    pub max_tokens: Option<usize>,
    /// Drop records whose token-count ratio exceeds this value.
    #[arg(long, value_name = "RATIO")]
    pub max_ratio: Option<f64>,
    /// Comma-separated blocked character classes (cjk, hiragana, katakana,
    /// hangul, arabic, cyrillic, non-printing).
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub blocked: Option<Vec<String>>,
    /// Score max(source, target) perplexity instead of the source only.
    #[arg(long)]
    pub score_both_sides: bool,
    /// Surviving source lines.
    #[arg(long, value_name = "FILE")]
    pub out_src: PathBuf,
    /// Surviving target lines.
    #[arg(long, value_name = "FILE")]
    pub out_tgt: PathBuf,
    /// JSON stage report file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct TrainLmArgs {
    /// Training text, one whitespace-tokenized sentence per line.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// N-gram order.
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,
    /// Smoothing: kneser-ney or add-k.
    #[arg(long, value_name = "NAME")]
    pub smoothing: Option<String>,
    /// Add-k constant (only with --smoothing add-k).
    #[arg(long, value_name = "K")]
    pub k: Option<f64>,
    /// Model output file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct TrainLangidArgs {
    /// Labeled examples, one per line: label<TAB>text.
    #[arg(long, value_name = "FILE")]
    pub examples: PathBuf,
    /// Model output file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct LearnBpeArgs {
    /// Training text, one sentence per line.
    #[arg(long, value_name = "FILE")]
    pub corpus: PathBuf,
    /// Number of merge operations to learn.
    #[arg(long, value_name = "N")]
    pub merges: Option<usize>,
    /// Lowercase and strip punctuation before counting words.
    #[arg(long)]
    pub normalize: bool,
    /// Merge table output file.
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
}

#[derive(Debug, clap::Args)]
pub struct ApplyBpeArgs {
    /// Merge table file.
    #[arg(long, value_name = "FILE")]
    pub merges: PathBuf,
    /// Use only the first N merges of the table.
    #[arg(long, value_name = "N")]
    pub merge_ops: Option<usize>,
    /// Lowercase and strip punctuation before segmenting.
    #[arg(long)]
    pub normalize: bool,
    /// Input text file; stdin when omitted.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct DecodeArgs {
    /// N-gram model file; repeat for a uniform ensemble (vocabularies must
    /// match).
    #[arg(long = "lm", value_name = "FILE", required = true)]
    pub lms: Vec<PathBuf>,
    /// Beam width.
    #[arg(long, value_name = "N")]
    pub beam: Option<usize>,
    /// Maximum generated tokens per hypothesis.
    #[arg(long, value_name = "N")]
    pub max_len: Option<usize>,
    /// Rank hypotheses by per-token average score.
    #[arg(long)]
    pub length_norm: bool,
    /// Print the best N hypotheses per input line.
    #[arg(long, value_name = "N")]
    pub n_best: Option<usize>,
    /// Context lines (whitespace tokens, may be empty); stdin when omitted.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct SeqKdArgs {
    /// Parallel data: utt_id<TAB>source<TAB>target per line.
    #[arg(long, value_name = "FILE")]
    pub dataset: PathBuf,
    /// Reference recipe over tags joined with '+', e.g. X, Y, X+Y+Z
    /// (X = the original targets).
    #[arg(long, value_name = "RECIPE")]
    pub recipe: Option<String>,
    /// Teacher for a non-original tag: TAG=ngram:PATH. Repeatable.
    #[arg(long = "teacher", value_name = "SPEC")]
    pub teachers: Vec<String>,
    /// Teacher beam width.
    #[arg(long, value_name = "N")]
    pub beam: Option<usize>,
    /// Maximum generated tokens per pseudo label.
    #[arg(long, value_name = "N")]
    pub max_len: Option<usize>,
    /// Speech frame counts (utt_id<TAB>frames); enables utterance filtering.
    #[arg(long, value_name = "FILE")]
    pub frames: Option<PathBuf>,
    /// Drop utterances with more speech frames than this (with --frames).
    #[arg(long, value_name = "N")]
    pub max_frames: Option<u64>,
    /// Drop utterances with more characters than this on any side (with
    /// --frames).
    #[arg(long, value_name = "N")]
    pub max_chars: Option<usize>,
    /// Output file; stdout when omitted.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
pub struct ScoreArgs {
    /// Metric: wer or bleu.
    #[arg(long, value_name = "NAME")]
    pub metric: String,
    /// Reference file; repeatable for multi-reference bleu.
    #[arg(long = "ref", value_name = "FILE", required = true)]
    pub refs: Vec<PathBuf>,
    /// Hypothesis file, line-aligned with the references.
    #[arg(long, value_name = "FILE")]
    pub hyp: PathBuf,
    /// Lowercase, strip punctuation, and collapse whitespace on both sides.
    #[arg(long)]
    pub normalize: bool,
    /// BLEU n-gram order.
    #[arg(long, value_name = "N")]
    pub order: Option<usize>,
    /// BLEU smoothing: none or floor.
    #[arg(long, value_name = "NAME")]
    pub smoothing: Option<String>,
    /// Floor epsilon (only with --smoothing floor).
    #[arg(long, value_name = "EPS")]
    pub floor: Option<f64>,
}
