//! Count-based n-gram language models with add-k or interpolated Kneser-Ney
//! smoothing, used for perplexity-based data selection and as toy scorers.
//!
//! The vocabulary is the training tokens plus `<unk>` and `</s>`; `<s>` is a
//! context-only padding symbol and is never predicted. Probabilities are
//! computed from stored counts, so for every context the distribution over
//! the vocabulary sums to 1 up to float rounding.

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead, Write};
use thiserror::Error;

/// Token that out-of-vocabulary items map to.
pub const UNKNOWN_TOKEN: &str = "<unk>";
/// End-of-sentence event appended to every training and scored sentence.
pub const SENTENCE_END: &str = "</s>";
/// Start-of-sentence padding symbol; context-only, never predicted.
pub const SENTENCE_START: &str = "<s>";

/// Context id of the padding symbol; outside the vocabulary id range.
const BOS_ID: u32 = u32::MAX;

/// Errors from model training, scoring, and (de)serialization.
#[derive(Debug, Error)]
pub enum LmError {
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("order must be >= 1, got {0}")]
    InvalidOrder(usize),
    #[error("invalid smoothing: {0}")]
    InvalidSmoothing(String),
    #[error("invalid token {0:?}: tokens must be non-empty and free of whitespace")]
    InvalidToken(String),
    #[error("sentence is empty")]
    EmptySentence,
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Smoothing schemes; Kneser-Ney falls back to add-k (k = 0.1) when a
/// corpus is too small to estimate discounts (no singleton or no doubleton
/// n-grams at some level). The fallback is recorded as the model's
/// effective smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Smoothing {
    /// `P(w|c) = (count(c,w) + k) / (count(c) + k|V|)`; with k = 0 this is
    /// maximum likelihood with backoff to the longest seen context.
    AddK(f64),
    /// Interpolated Kneser-Ney with one discount per level, continuation
    /// counts below the top level, and a uniform 1/|V| base case.
    InterpolatedKneserNey,
}

const KNESER_NEY_FALLBACK_K: f64 = 0.1;

/// One n-gram level: scoring counts for grams of a fixed length plus
/// context aggregates derived from them.
#[derive(Debug, Clone, Default)]
struct Level {
    grams: HashMap<Box<[u32]>, u64>,
    ctx_total: HashMap<Box<[u32]>, u64>,
    ctx_distinct: HashMap<Box<[u32]>, u64>,
    discount: f64,
}

impl Level {
    fn from_grams(grams: HashMap<Box<[u32]>, u64>) -> Self {
        let mut ctx_total: HashMap<Box<[u32]>, u64> = HashMap::new();
        let mut ctx_distinct: HashMap<Box<[u32]>, u64> = HashMap::new();
        for (gram, count) in &grams {
            let ctx: Box<[u32]> = gram[..gram.len() - 1].into();
            *ctx_total.entry(ctx.clone()).or_insert(0) += count;
            *ctx_distinct.entry(ctx).or_insert(0) += 1;
        }
        Self {
            grams,
            ctx_total,
            ctx_distinct,
            discount: 0.0,
        }
    }

    /// Absolute discount from singleton/doubleton counts; `None` when the
    /// statistics are degenerate.
    fn estimate_discount(&self) -> Option<f64> {
        let n1 = self.grams.values().filter(|&&c| c == 1).count() as f64;
        let n2 = self.grams.values().filter(|&&c| c == 2).count() as f64;
        if n1 == 0.0 || n2 == 0.0 {
            None
        } else {
            Some(n1 / (n1 + 2.0 * n2))
        }
    }
}

/// An order-n language model over a fixed vocabulary.
#[derive(Debug, Clone)]
pub struct NGramLM {
    order: usize,
    smoothing: Smoothing,
    vocab: Vec<String>,
    index: HashMap<String, u32>,
    unk_id: u32,
    end_id: u32,
    /// `levels[i]` holds grams of length `i + 1`; the last level stores raw
    /// top-order counts (the serialized form), lower levels hold raw counts
    /// for add-k and continuation counts for Kneser-Ney.
    levels: Vec<Level>,
}

impl NGramLM {
    /// Trains a model on tokenized sentences.
    ///
    /// Literal `<s>`/`</s>` tokens in the corpus are skipped (sentence
    /// boundaries are implicit); literal `<unk>` maps to the unknown entry.
    ///
    /// # Errors
    /// [`LmError::EmptyCorpus`], [`LmError::InvalidOrder`],
    /// [`LmError::InvalidSmoothing`], or [`LmError::InvalidToken`] for
    /// empty/whitespace-bearing tokens.
    pub fn train(
        corpus: &[Vec<String>],
        order: usize,
        smoothing: Smoothing,
    ) -> Result<Self, LmError> {
        if corpus.is_empty() {
            return Err(LmError::EmptyCorpus);
        }
        if order == 0 {
            return Err(LmError::InvalidOrder(0));
        }
        if let Smoothing::AddK(k) = smoothing {
            if !k.is_finite() || k < 0.0 {
                return Err(LmError::InvalidSmoothing(format!(
                    "add-k constant must be finite and non-negative, got {k}"
                )));
            }
        }
        let mut set: BTreeSet<&str> = BTreeSet::new();
        set.insert(UNKNOWN_TOKEN);
        set.insert(SENTENCE_END);
        for sentence in corpus {
            for token in sentence {
                if token.is_empty() || token.chars().any(char::is_whitespace) {
                    return Err(LmError::InvalidToken(token.clone()));
                }
                if token != SENTENCE_START && token != SENTENCE_END {
                    set.insert(token);
                }
            }
        }
        let vocab: Vec<String> = set.into_iter().map(str::to_string).collect();
        let index: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        let end_id = index[SENTENCE_END];

        let mut top: HashMap<Box<[u32]>, u64> = HashMap::new();
        for sentence in corpus {
            let mut padded: Vec<u32> = vec![BOS_ID; order - 1];
            padded.extend(
                sentence
                    .iter()
                    .filter(|t| *t != SENTENCE_START && *t != SENTENCE_END)
                    .map(|t| index[t.as_str()]),
            );
            padded.push(end_id);
            for end in order - 1..padded.len() {
                let gram: Box<[u32]> = padded[end + 1 - order..=end].into();
                *top.entry(gram).or_insert(0) += 1;
            }
        }
        Ok(Self::build(order, smoothing, vocab, index, top))
    }

    /// Tokenizes lines on whitespace and trains; blank lines are skipped.
    pub fn train_from_lines<'a>(
        lines: impl IntoIterator<Item = &'a str>,
        order: usize,
        smoothing: Smoothing,
    ) -> Result<Self, LmError> {
        let corpus: Vec<Vec<String>> = lines
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .map(|l| l.split_whitespace().map(str::to_string).collect())
            .collect();
        Self::train(&corpus, order, smoothing)
    }

    /// A unigram model that is exactly uniform over `tokens` plus the
    /// reserved entries: no counts, add-1 smoothing.
    #[must_use]
    pub fn uniform(tokens: &[&str]) -> Self {
        let mut set: BTreeSet<&str> = tokens
            .iter()
            .copied()
            .filter(|t| *t != SENTENCE_START)
            .collect();
        set.insert(UNKNOWN_TOKEN);
        set.insert(SENTENCE_END);
        let vocab: Vec<String> = set.into_iter().map(str::to_string).collect();
        let index: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self::build(1, Smoothing::AddK(1.0), vocab, index, HashMap::new())
    }

    fn build(
        order: usize,
        smoothing: Smoothing,
        vocab: Vec<String>,
        index: HashMap<String, u32>,
        top: HashMap<Box<[u32]>, u64>,
    ) -> Self {
        // Raw counts per level; a level-m count is the total of all
        // top-level counts whose suffix it is, which equals the number of
        // event-aligned windows of length m.
        let mut raw: Vec<HashMap<Box<[u32]>, u64>> = Vec::with_capacity(order);
        raw.resize(order, HashMap::new());
        raw[order - 1] = top;
        for m in (0..order.saturating_sub(1)).rev() {
            let mut table: HashMap<Box<[u32]>, u64> = HashMap::new();
            for (gram, count) in &raw[m + 1] {
                *table.entry(gram[1..].into()).or_insert(0) += count;
            }
            raw[m] = table;
        }

        let levels: Vec<Level> = match smoothing {
            Smoothing::AddK(_) => raw.into_iter().map(Level::from_grams).collect(),
            Smoothing::InterpolatedKneserNey => {
                let mut levels: Vec<Level> = Vec::with_capacity(order);
                for m in 0..order {
                    let grams = if m == order - 1 {
                        raw[m].clone()
                    } else {
                        // Continuation counts: distinct one-token left
                        // extensions present at the level above.
                        let mut cont: HashMap<Box<[u32]>, u64> = HashMap::new();
                        for gram in raw[m + 1].keys() {
                            *cont.entry(gram[1..].into()).or_insert(0) += 1;
                        }
                        cont
                    };
                    levels.push(Level::from_grams(grams));
                }
                let discounts: Option<Vec<f64>> =
                    levels.iter().map(Level::estimate_discount).collect();
                match discounts {
                    Some(ds) => {
                        for (level, d) in levels.iter_mut().zip(ds) {
                            level.discount = d;
                        }
                        levels
                    }
                    None => {
                        // Too little data for discount estimation anywhere.
                        let top = std::mem::take(&mut raw[order - 1]);
                        return Self::build(
                            order,
                            Smoothing::AddK(KNESER_NEY_FALLBACK_K),
                            vocab,
                            index,
                            top,
                        );
                    }
                }
            }
        };

        let unk_id = index[UNKNOWN_TOKEN];
        let end_id = index[SENTENCE_END];
        Self {
            order,
            smoothing,
            vocab,
            index,
            unk_id,
            end_id,
            levels,
        }
    }

    #[must_use]
    pub fn order(&self) -> usize {
        self.order
    }

    /// Effective smoothing (reflects any Kneser-Ney fallback).
    #[must_use]
    pub fn smoothing(&self) -> Smoothing {
        self.smoothing
    }

    /// Sorted vocabulary; token ids are positions in this slice.
    #[must_use]
    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    #[must_use]
    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    #[must_use]
    pub fn end_id(&self) -> u32 {
        self.end_id
    }

    /// Maps a token to its id, or to the unknown id if absent.
    #[must_use]
    pub fn token_id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(self.unk_id)
    }

    /// The token string for an in-range id.
    #[must_use]
    pub fn token(&self, id: u32) -> &str {
        &self.vocab[id as usize]
    }

    /// Maps tokens to ids; out-of-vocabulary tokens become the unknown id.
    #[must_use]
    pub fn tokens_to_ids<S: AsRef<str>>(&self, tokens: &[S]) -> Vec<u32> {
        tokens.iter().map(|t| self.token_id(t.as_ref())).collect()
    }

    /// The scoring context window: last `order - 1` history ids, padded on
    /// the left with the start symbol.
    fn window(&self, history: &[u32]) -> Vec<u32> {
        let need = self.order - 1;
        let mut ctx = Vec::with_capacity(need);
        if history.len() >= need {
            ctx.extend_from_slice(&history[history.len() - need..]);
        } else {
            ctx.resize(need - history.len(), BOS_ID);
            ctx.extend_from_slice(history);
        }
        ctx
    }

    /// `P(token | history)`; `history` is the full decoded prefix in ids
    /// (internally truncated to the model order and start-padded).
    #[must_use]
    pub fn prob(&self, history: &[u32], token: u32) -> f64 {
        let ctx = self.window(history);
        self.prob_in_window(&ctx, token)
    }

    fn prob_in_window(&self, ctx: &[u32], token: u32) -> f64 {
        match self.smoothing {
            Smoothing::AddK(k) => self.prob_addk(ctx, token, k),
            Smoothing::InterpolatedKneserNey => self.prob_kn(self.order, ctx, token),
        }
    }

    fn prob_addk(&self, mut ctx: &[u32], token: u32, k: f64) -> f64 {
        if k == 0.0 {
            // Maximum likelihood is undefined for unseen contexts; back off
            // to the longest context that has events.
            while !ctx.is_empty() && !self.levels[ctx.len()].ctx_total.contains_key(ctx) {
                ctx = &ctx[1..];
            }
        }
        let level = &self.levels[ctx.len()];
        let total = level.ctx_total.get(ctx).copied().unwrap_or(0) as f64;
        let mut gram = ctx.to_vec();
        gram.push(token);
        let count = level.grams.get(gram.as_slice()).copied().unwrap_or(0) as f64;
        (count + k) / (total + k * self.vocab.len() as f64)
    }

    fn prob_kn(&self, m: usize, ctx: &[u32], token: u32) -> f64 {
        let v = self.vocab.len() as f64;
        let level = &self.levels[m - 1];
        if m == 1 {
            let total = level.ctx_total.get(&[][..]).copied().unwrap_or(0) as f64;
            if total == 0.0 {
                return 1.0 / v;
            }
            let count = level.grams.get(&[token][..]).copied().unwrap_or(0) as f64;
            let distinct = level.ctx_distinct.get(&[][..]).copied().unwrap_or(0) as f64;
            let d = level.discount;
            return ((count - d).max(0.0) + d * distinct / v) / total;
        }
        let total = level.ctx_total.get(ctx).copied().unwrap_or(0) as f64;
        if total == 0.0 {
            return self.prob_kn(m - 1, &ctx[1..], token);
        }
        let mut gram = ctx.to_vec();
        gram.push(token);
        let count = level.grams.get(gram.as_slice()).copied().unwrap_or(0) as f64;
        let distinct = level.ctx_distinct.get(ctx).copied().unwrap_or(0) as f64;
        let d = level.discount;
        (count - d).max(0.0) / total
            + (d * distinct / total) * self.prob_kn(m - 1, &ctx[1..], token)
    }

    /// `ln P(token | history)`.
    #[must_use]
    pub fn log_prob(&self, history: &[u32], token: u32) -> f64 {
        self.prob(history, token).ln()
    }

    /// The full next-token distribution given a history, indexed by token
    /// id. Sums to 1 up to float rounding.
    #[must_use]
    pub fn distribution(&self, history: &[u32]) -> Vec<f64> {
        let ctx = self.window(history);
        (0..self.vocab.len() as u32)
            .map(|t| self.prob_in_window(&ctx, t))
            .collect()
    }

    /// Mean negative log-probability per event in nats; events are the
    /// sentence tokens plus the end symbol.
    ///
    /// # Errors
    /// [`LmError::EmptySentence`].
    pub fn cross_entropy<S: AsRef<str>>(&self, sentence: &[S]) -> Result<f64, LmError> {
        if sentence.is_empty() {
            return Err(LmError::EmptySentence);
        }
        let ids = self.tokens_to_ids(sentence);
        let mut history: Vec<u32> = Vec::with_capacity(ids.len());
        let mut log_sum = 0.0;
        for id in ids {
            log_sum += self.log_prob(&history, id);
            history.push(id);
        }
        log_sum += self.log_prob(&history, self.end_id);
        Ok(-log_sum / (sentence.len() + 1) as f64)
    }

    /// `exp(cross_entropy)`: the usual per-event perplexity.
    ///
    /// # Errors
    /// [`LmError::EmptySentence`].
    pub fn perplexity<S: AsRef<str>>(&self, sentence: &[S]) -> Result<f64, LmError> {
        Ok(self.cross_entropy(sentence)?.exp())
    }

    /// Serializes the model as versioned text: header, vocabulary, then
    /// top-order counts sorted by token strings. Re-saving a loaded model
    /// is byte-identical.
    pub fn save(&self, mut writer: impl Write) -> io::Result<()> {
        writeln!(writer, "#stp-ngram v1")?;
        writeln!(writer, "order {}", self.order)?;
        match self.smoothing {
            Smoothing::AddK(k) => writeln!(writer, "smoothing add_k {k}")?,
            Smoothing::InterpolatedKneserNey => writeln!(writer, "smoothing kneser_ney")?,
        }
        writeln!(writer, "vocab {}", self.vocab.len())?;
        for token in &self.vocab {
            writeln!(writer, "{token}")?;
        }
        let top = &self.levels[self.order - 1].grams;
        let mut lines: Vec<String> = top
            .iter()
            .map(|(gram, count)| {
                let mut parts: Vec<&str> = gram
                    .iter()
                    .map(|&id| {
                        if id == BOS_ID {
                            SENTENCE_START
                        } else {
                            self.token(id)
                        }
                    })
                    .collect();
                let count = count.to_string();
                parts.push(&count);
                parts.join(" ")
            })
            .collect();
        lines.sort_unstable();
        writeln!(writer, "grams {}", lines.len())?;
        for line in lines {
            writeln!(writer, "{line}")?;
        }
        Ok(())
    }

    /// Loads a model saved by [`NGramLM::save`].
    ///
    /// # Errors
    /// [`LmError::Parse`] with a 1-based line number on malformed input.
    pub fn load(reader: impl BufRead) -> Result<Self, LmError> {
        let mut lines = reader.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String), LmError> {
            match lines.next() {
                Some((idx, line)) => Ok((idx + 1, line?)),
                None => Err(LmError::Parse {
                    line: 0,
                    message: format!("unexpected end of file, expected {what}"),
                }),
            }
        };
        let parse_err = |line: usize, message: String| LmError::Parse { line, message };

        let (line, header) = next("header")?;
        if header != "#stp-ngram v1" {
            return Err(parse_err(line, format!("bad header '{header}'")));
        }
        let (line, order_line) = next("order")?;
        let order: usize = order_line
            .strip_prefix("order ")
            .and_then(|s| s.parse().ok())
            .filter(|&o| o >= 1)
            .ok_or_else(|| parse_err(line, format!("bad order line '{order_line}'")))?;
        let (line, smoothing_line) = next("smoothing")?;
        let smoothing = if smoothing_line == "smoothing kneser_ney" {
            Smoothing::InterpolatedKneserNey
        } else if let Some(k) = smoothing_line
            .strip_prefix("smoothing add_k ")
            .and_then(|s| s.parse::<f64>().ok())
            .filter(|k| k.is_finite() && *k >= 0.0)
        {
            Smoothing::AddK(k)
        } else {
            return Err(parse_err(line, format!("bad smoothing '{smoothing_line}'")));
        };
        let (line, vocab_line) = next("vocab size")?;
        let vocab_len: usize = vocab_line
            .strip_prefix("vocab ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(line, format!("bad vocab line '{vocab_line}'")))?;
        let mut vocab = Vec::with_capacity(vocab_len);
        for _ in 0..vocab_len {
            let (_, token) = next("vocabulary entry")?;
            vocab.push(token);
        }
        let index: HashMap<String, u32> = vocab
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        if index.len() != vocab.len() {
            return Err(parse_err(line, "duplicate vocabulary entries".into()));
        }
        for required in [UNKNOWN_TOKEN, SENTENCE_END] {
            if !index.contains_key(required) {
                return Err(parse_err(line, format!("vocabulary lacks {required}")));
            }
        }
        let (line, grams_line) = next("gram count")?;
        let gram_len: usize = grams_line
            .strip_prefix("grams ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(line, format!("bad grams line '{grams_line}'")))?;
        let mut top: HashMap<Box<[u32]>, u64> = HashMap::with_capacity(gram_len);
        for _ in 0..gram_len {
            let (line, row) = next("gram row")?;
            let fields: Vec<&str> = row.split(' ').collect();
            if fields.len() != order + 1 {
                return Err(parse_err(
                    line,
                    format!("expected {} fields, got {}", order + 1, fields.len()),
                ));
            }
            let count: u64 = fields[order]
                .parse()
                .map_err(|_| parse_err(line, format!("bad count '{}'", fields[order])))?;
            let mut gram = Vec::with_capacity(order);
            for field in &fields[..order] {
                let id = if *field == SENTENCE_START {
                    BOS_ID
                } else {
                    *index.get(*field).ok_or_else(|| {
                        parse_err(line, format!("token '{field}' not in vocabulary"))
                    })?
                };
                gram.push(id);
            }
            if top.insert(gram.into(), count).is_some() {
                return Err(parse_err(line, "duplicate gram row".into()));
            }
        }
        Ok(Self::build(order, smoothing, vocab, index, top))
    }
}
