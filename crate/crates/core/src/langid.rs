//! Character n-gram language identification.
//!
//! A naive Bayes classifier over character 1- to 4-grams with add-one
//! smoothing and a uniform class prior. Smoothing uses one shared event
//! space per order (the union of grams seen in any language) plus a single
//! unknown slot, so per-language distributions normalize over the same
//! support. Text is NFC-normalized, lowercased, and whitespace-collapsed
//! before counting.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Largest character n-gram order used for classification.
pub const MAX_CHAR_ORDER: usize = 4;

const MAGIC: &str = "#stp-langid v1";

/// Errors from training, classification, and model (de)serialization.
#[derive(Debug, Error)]
pub enum LangIdError {
    #[error("training needs examples from at least two languages, got {0}")]
    TooFewLabels(usize),
    #[error("training example {index} for '{label}' is empty after normalization")]
    EmptyExample { index: usize, label: String },
    #[error("text is empty after normalization")]
    EmptyText,
    #[error("model file line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Classification result: the winning label and its posterior probability.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub confidence: f64,
}

/// Per-language character n-gram counts.
#[derive(Debug, Clone, PartialEq)]
struct LanguageProfile {
    /// Gram string -> count, all orders mixed (order = char count).
    counts: BTreeMap<String, u64>,
    /// Total events per order, index 0 = unigrams.
    totals: [u64; MAX_CHAR_ORDER],
}

/// Trained language identifier. Build with [`train_langid`] or [`LangIdModel::load`].
#[derive(Debug, Clone, PartialEq)]
pub struct LangIdModel {
    /// Sorted ascending; ties in posterior resolve to the earliest label.
    labels: Vec<String>,
    profiles: Vec<LanguageProfile>,
    /// Distinct grams per order across all languages (shared event space).
    types: [u64; MAX_CHAR_ORDER],
}

/// Canonical text form used for both training and classification.
#[must_use]
pub fn normalize_text(text: &str) -> String {
    let lowered: String = text.nfc().collect::<String>().to_lowercase();
    lowered.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn char_grams(text: &str) -> impl Iterator<Item = String> + '_ {
    let chars: Vec<char> = text.chars().collect();
    (1..=MAX_CHAR_ORDER.min(chars.len())).flat_map(move |order| {
        let chars = chars.clone();
        (0..=chars.len() - order)
            .map(move |i| chars[i..i + order].iter().collect::<String>())
            .collect::<Vec<_>>()
    })
}

/// Trains a classifier from `(label, text)` pairs.
///
/// # Errors
/// [`LangIdError::TooFewLabels`] with fewer than two distinct labels;
/// [`LangIdError::EmptyExample`] when an example normalizes to nothing.
pub fn train_langid(examples: &[(String, String)]) -> Result<LangIdModel, LangIdError> {
    let labels: BTreeSet<&str> = examples.iter().map(|(l, _)| l.as_str()).collect();
    if labels.len() < 2 {
        return Err(LangIdError::TooFewLabels(labels.len()));
    }
    let labels: Vec<String> = labels.into_iter().map(str::to_string).collect();
    let mut profiles = vec![
        LanguageProfile {
            counts: BTreeMap::new(),
            totals: [0; MAX_CHAR_ORDER],
        };
        labels.len()
    ];
    for (index, (label, text)) in examples.iter().enumerate() {
        let normalized = normalize_text(text);
        if normalized.is_empty() {
            return Err(LangIdError::EmptyExample {
                index,
                label: label.clone(),
            });
        }
        let slot = labels.binary_search(label).expect("label from this set");
        let profile = &mut profiles[slot];
        for gram in char_grams(&normalized) {
            profile.totals[gram.chars().count() - 1] += 1;
            *profile.counts.entry(gram).or_insert(0) += 1;
        }
    }
    Ok(LangIdModel::assemble(labels, profiles))
}

impl LangIdModel {
    fn assemble(labels: Vec<String>, profiles: Vec<LanguageProfile>) -> Self {
        let mut seen: [BTreeSet<&str>; MAX_CHAR_ORDER] = Default::default();
        for profile in &profiles {
            for gram in profile.counts.keys() {
                seen[gram.chars().count() - 1].insert(gram);
            }
        }
        let mut types = [0; MAX_CHAR_ORDER];
        for (t, s) in types.iter_mut().zip(&seen) {
            *t = s.len() as u64;
        }
        Self {
            labels,
            profiles,
            types,
        }
    }

    /// Labels the model can assign, sorted ascending.
    #[must_use]
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Add-one probability of a gram under a language, over the shared
    /// event space of its order plus one unknown slot.
    fn gram_log_prob(&self, slot: usize, gram: &str) -> f64 {
        let order = gram.chars().count() - 1;
        let profile = &self.profiles[slot];
        let count = profile.counts.get(gram).copied().unwrap_or(0);
        let numerator = (count + 1) as f64;
        let denominator = (profile.totals[order] + self.types[order] + 1) as f64;
        (numerator / denominator).ln()
    }

    /// Log-likelihood of `grams` under each label, label order.
    fn log_scores(&self, grams: &[String]) -> Vec<f64> {
        (0..self.labels.len())
            .map(|slot| grams.iter().map(|g| self.gram_log_prob(slot, g)).sum())
            .collect()
    }

    /// Posterior over labels for `text` (uniform prior), label order.
    ///
    /// # Errors
    /// [`LangIdError::EmptyText`].
    pub fn posteriors(&self, text: &str) -> Result<Vec<(String, f64)>, LangIdError> {
        let normalized = normalize_text(text);
        if normalized.is_empty() {
            return Err(LangIdError::EmptyText);
        }
        let grams: Vec<String> = char_grams(&normalized).collect();
        let scores = self.log_scores(&grams);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
        let z: f64 = exps.iter().sum();
        Ok(self
            .labels
            .iter()
            .zip(exps)
            .map(|(label, e)| (label.clone(), e / z))
            .collect())
    }

    /// Writes the model as versioned, sorted, line-oriented text.
    ///
    /// # Errors
    /// Propagates i/o failures.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), LangIdError> {
        writeln!(writer, "{MAGIC}")?;
        writeln!(writer, "labels {}", self.labels.len())?;
        for label in &self.labels {
            writeln!(writer, "{label}")?;
        }
        for (label, profile) in self.labels.iter().zip(&self.profiles) {
            writeln!(writer, "counts {label} {}", profile.counts.len())?;
            for (gram, count) in &profile.counts {
                writeln!(writer, "{gram}\t{count}")?;
            }
        }
        Ok(())
    }

    /// Saves to a file path.
    ///
    /// # Errors
    /// Propagates i/o failures.
    pub fn save_file<P: AsRef<Path>>(&self, path: P) -> Result<(), LangIdError> {
        let file = std::fs::File::create(path)?;
        self.save(io::BufWriter::new(file))
    }

    /// Reads a model written by [`LangIdModel::save`].
    ///
    /// # Errors
    /// [`LangIdError::Parse`] with a 1-based line number on malformed input.
    pub fn load<R: Read>(reader: R) -> Result<Self, LangIdError> {
        let mut lines = BufReader::new(reader).lines().enumerate();
        let mut next = || -> Result<(usize, String), LangIdError> {
            match lines.next() {
                Some((i, line)) => Ok((i + 1, line?)),
                None => Err(LangIdError::Parse {
                    line: 0,
                    message: "unexpected end of file".into(),
                }),
            }
        };
        let parse_err = |line: usize, message: String| LangIdError::Parse { line, message };

        let (line, magic) = next()?;
        if magic != MAGIC {
            return Err(parse_err(line, format!("expected '{MAGIC}' header")));
        }
        let (line, header) = next()?;
        let label_count: usize = header
            .strip_prefix("labels ")
            .and_then(|n| n.parse().ok())
            .ok_or_else(|| parse_err(line, "expected 'labels <count>'".into()))?;
        if label_count < 2 {
            return Err(parse_err(line, "model needs at least two labels".into()));
        }
        let mut labels = Vec::with_capacity(label_count);
        for _ in 0..label_count {
            let (line, label) = next()?;
            if label.is_empty() {
                return Err(parse_err(line, "empty label".into()));
            }
            labels.push(label);
        }
        let sorted = labels.windows(2).all(|w| w[0] < w[1]);
        if !sorted {
            return Err(parse_err(line, "labels must be sorted and distinct".into()));
        }
        let mut profiles = Vec::with_capacity(label_count);
        for expected in &labels {
            let (line, header) = next()?;
            let rest = header
                .strip_prefix("counts ")
                .ok_or_else(|| parse_err(line, "expected 'counts <label> <n>'".into()))?;
            let (label, n) = rest
                .rsplit_once(' ')
                .ok_or_else(|| parse_err(line, "expected 'counts <label> <n>'".into()))?;
            if label != expected {
                return Err(parse_err(line, format!("expected counts for '{expected}'")));
            }
            let n: usize = n
                .parse()
                .map_err(|_| parse_err(line, "bad gram count".into()))?;
            let mut counts = BTreeMap::new();
            let mut totals = [0u64; MAX_CHAR_ORDER];
            for _ in 0..n {
                let (line, row) = next()?;
                let (gram, count) = row
                    .split_once('\t')
                    .ok_or_else(|| parse_err(line, "expected '<gram>\\t<count>'".into()))?;
                let order = gram.chars().count();
                if gram.is_empty() || order > MAX_CHAR_ORDER {
                    return Err(parse_err(line, format!("bad gram '{gram}'")));
                }
                let count: u64 = count
                    .parse()
                    .map_err(|_| parse_err(line, "bad count".into()))?;
                totals[order - 1] += count;
                if counts.insert(gram.to_string(), count).is_some() {
                    return Err(parse_err(line, format!("duplicate gram '{gram}'")));
                }
            }
            profiles.push(LanguageProfile { counts, totals });
        }
        Ok(Self::assemble(labels, profiles))
    }

    /// Loads from a file path.
    ///
    /// # Errors
    /// As [`LangIdModel::load`], plus file-open failures.
    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Self, LangIdError> {
        Self::load(std::fs::File::open(path)?)
    }
}

/// Classifies `text`, returning the maximum-posterior label; posterior ties
/// resolve to the alphabetically first label.
///
/// # Errors
/// [`LangIdError::EmptyText`].
pub fn classify_language(model: &LangIdModel, text: &str) -> Result<Prediction, LangIdError> {
    let posteriors = model.posteriors(text)?;
    let mut best = 0;
    for (i, (_, p)) in posteriors.iter().enumerate().skip(1) {
        if *p > posteriors[best].1 {
            best = i;
        }
    }
    let (label, confidence) = posteriors.into_iter().nth(best).expect("nonempty labels");
    Ok(Prediction { label, confidence })
}
