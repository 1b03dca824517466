//! Byte pair encoding: merge-table learning, application, and the ASR-style
//! text normalization applied before building speech-side vocabularies.
//!
//! Words are split into characters with an end-of-word marker glued to the
//! final character. Learning repeatedly merges the most frequent adjacent
//! symbol pair (ties to the lexicographically smaller pair) and stops when
//! no pair occurs at least twice. Application replays merges in table order,
//! so segmentation is deterministic and lossless up to whitespace
//! normalization.

use std::collections::BTreeMap;
use std::io::{self, BufRead, BufReader, Read, Write};
use std::path::Path;
use thiserror::Error;
use unicode_properties::{GeneralCategoryGroup, UnicodeGeneralCategory};

/// Marker appended to the final character of every word.
pub const END_OF_WORD: &str = "</w>";

const MAGIC: &str = "#version: stp-bpe 1";

/// Errors from merge-table (de)serialization.
#[derive(Debug, Error)]
pub enum SubwordError {
    #[error("merge table line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

/// Ordered BPE merges, highest-frequency first. Build with [`learn_bpe`] or
/// [`MergeTable::load`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<(String, String)>,
    /// Merge count asked for at learning time; learning may stop earlier.
    requested_merges: usize,
}

impl MergeTable {
    /// Learned merges in application order.
    #[must_use]
    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    #[must_use]
    pub fn requested_merges(&self) -> usize {
        self.requested_merges
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.merges.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.merges.is_empty()
    }

    /// Keeps only the first `n` merges; useful for vocabulary sweeps.
    #[must_use]
    pub fn truncated(&self, n: usize) -> MergeTable {
        MergeTable {
            merges: self.merges.iter().take(n).cloned().collect(),
            requested_merges: n,
        }
    }

    /// Writes the table as a versioned text file, one pair per line.
    ///
    /// # Errors
    /// Propagates i/o failures.
    pub fn save<W: Write>(&self, mut writer: W) -> Result<(), SubwordError> {
        writeln!(writer, "{MAGIC}")?;
        for (a, b) in &self.merges {
            writeln!(writer, "{a} {b}")?;
        }
        Ok(())
    }

    /// Saves to a file path.
    ///
    /// # Errors
    /// Propagates i/o failures.
    pub fn save_file<P: AsRef<Path>>(&self, path: P) -> Result<(), SubwordError> {
        let file = std::fs::File::create(path)?;
        self.save(io::BufWriter::new(file))
    }

    /// Reads a table written by [`MergeTable::save`]. `requested_merges` is
    /// not serialized and resets to the stored merge count.
    ///
    /// # Errors
    /// [`SubwordError::Parse`] with a 1-based line number on malformed input.
    pub fn load<R: Read>(reader: R) -> Result<Self, SubwordError> {
        let mut merges = Vec::new();
        let mut saw_header = false;
        for (i, line) in BufReader::new(reader).lines().enumerate() {
            let line = line?;
            if i == 0 {
                if !line.starts_with("#version") {
                    return Err(SubwordError::Parse {
                        line: 1,
                        message: "expected '#version' header".into(),
                    });
                }
                saw_header = true;
                continue;
            }
            if line.is_empty() {
                continue;
            }
            let (a, b) = line.split_once(' ').ok_or_else(|| SubwordError::Parse {
                line: i + 1,
                message: "expected '<left> <right>'".into(),
            })?;
            if a.is_empty() || b.is_empty() || b.contains(' ') {
                return Err(SubwordError::Parse {
                    line: i + 1,
                    message: "merge pair must be two space-free symbols".into(),
                });
            }
            merges.push((a.to_string(), b.to_string()));
        }
        if !saw_header {
            return Err(SubwordError::Parse {
                line: 1,
                message: "empty merge table file".into(),
            });
        }
        let requested_merges = merges.len();
        Ok(Self {
            merges,
            requested_merges,
        })
    }

    /// Loads from a file path.
    ///
    /// # Errors
    /// As [`MergeTable::load`], plus file-open failures.
    pub fn load_file<P: AsRef<Path>>(path: P) -> Result<Self, SubwordError> {
        Self::load(std::fs::File::open(path)?)
    }
}

/// Lowercases, strips Unicode punctuation except apostrophes (straight and
/// typographic), and collapses whitespace.
#[must_use]
pub fn normalize_asr_text(text: &str) -> String {
    let kept: String = text
        .to_lowercase()
        .chars()
        .filter(|&c| {
            c.general_category_group() != GeneralCategoryGroup::Punctuation
                || c == '\''
                || c == '\u{2019}'
        })
        .collect();
    kept.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Counts whitespace-separated words over lines, the input form
/// [`learn_bpe`] expects.
pub fn word_frequencies<I, S>(lines: I) -> BTreeMap<String, u64>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    let mut counts = BTreeMap::new();
    for line in lines {
        for word in line.as_ref().split_whitespace() {
            *counts.entry(word.to_string()).or_insert(0) += 1;
        }
    }
    counts
}

fn word_symbols(word: &str) -> Vec<String> {
    let chars: Vec<char> = word.chars().collect();
    chars
        .iter()
        .enumerate()
        .map(|(i, c)| {
            if i + 1 == chars.len() {
                format!("{c}{END_OF_WORD}")
            } else {
                c.to_string()
            }
        })
        .collect()
}

/// Replaces every adjacent `(a, b)` occurrence with the concatenation until
/// none remains.
fn apply_merge(symbols: &mut Vec<String>, a: &str, b: &str) {
    loop {
        let mut changed = false;
        let mut i = 0;
        while i + 1 < symbols.len() {
            if symbols[i] == a && symbols[i + 1] == b {
                symbols[i] = format!("{a}{b}");
                symbols.remove(i + 1);
                changed = true;
            }
            i += 1;
        }
        if !changed {
            return;
        }
    }
}

/// Learns up to `num_merges` merges from a word-frequency map. Stops early
/// when the best remaining pair occurs fewer than 2 times. Empty words and
/// zero frequencies are ignored.
#[must_use]
pub fn learn_bpe(corpus: &BTreeMap<String, u64>, num_merges: usize) -> MergeTable {
    let mut words: Vec<(Vec<String>, u64)> = corpus
        .iter()
        .filter(|(word, &freq)| !word.is_empty() && freq > 0)
        .map(|(word, &freq)| (word_symbols(word), freq))
        .collect();
    let mut merges = Vec::new();
    for _ in 0..num_merges {
        // BTreeMap iteration is lexicographic, so the first maximal pair is
        // the lexicographically smallest.
        let mut pairs: BTreeMap<(&str, &str), u64> = BTreeMap::new();
        for (symbols, freq) in &words {
            for window in symbols.windows(2) {
                *pairs
                    .entry((window[0].as_str(), window[1].as_str()))
                    .or_insert(0) += freq;
            }
        }
        let best =
            pairs.into_iter().fold(
                None::<((&str, &str), u64)>,
                |best, (pair, freq)| match best {
                    Some((_, top)) if top >= freq => best,
                    _ => Some((pair, freq)),
                },
            );
        let Some(((a, b), freq)) = best else { break };
        if freq < 2 {
            break;
        }
        let (a, b) = (a.to_string(), b.to_string());
        for (symbols, _) in &mut words {
            apply_merge(symbols, &a, &b);
        }
        merges.push((a, b));
    }
    MergeTable {
        merges,
        requested_merges: num_merges,
    }
}

/// Segments one word by replaying the table's merges in order.
#[must_use]
pub fn segment_word(table: &MergeTable, word: &str) -> Vec<String> {
    let mut symbols = word_symbols(word);
    for (a, b) in &table.merges {
        apply_merge(&mut symbols, a, b);
    }
    symbols
}

/// Segments whitespace-separated text word by word.
#[must_use]
pub fn apply_bpe(table: &MergeTable, text: &str) -> Vec<String> {
    text.split_whitespace()
        .flat_map(|word| segment_word(table, word))
        .collect()
}

/// Inverse of [`apply_bpe`] up to whitespace normalization: joins tokens and
/// turns end-of-word markers back into spaces.
#[must_use]
pub fn undo_bpe(tokens: &[String]) -> String {
    let joined: String = tokens.concat();
    joined
        .split(END_OF_WORD)
        .collect::<Vec<_>>()
        .join(" ")
        .trim_end()
        .to_string()
}
