//! Bitext filtering cascade: perplexity-based data selection, language-ID
//! verification, length/ratio limits, and character-class screening, with a
//! per-stage audit report.
//!
//! Every stage is a pure filter: output is a subsequence of the input, and
//! each surviving record gains exactly one verdict per stage. Report
//! arithmetic (input = output + sum of rejection reasons) holds at every
//! stage.

use crate::langid::{classify_language, LangIdError, LangIdModel};
use crate::ngram::{LmError, NGramLM};
use serde::Serialize;
use std::collections::BTreeMap;
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;
use unicode_properties::{GeneralCategory, UnicodeGeneralCategory};

/// Errors from filter configuration and pipeline assembly.
#[derive(Debug, Error)]
pub enum FilterError {
    #[error("invalid filter config: {0}")]
    InvalidConfig(String),
    #[error("cross-entropy-difference selection needs a general-domain language model")]
    MissingGeneralLm,
    #[error(transparent)]
    LangId(#[from] LangIdError),
    #[error(transparent)]
    Lm(#[from] LmError),
}

/// Outcome of one filter stage for one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Pass,
    Fail(String),
}

/// One sentence pair flowing through the cascade. `index` is the input
/// position and stays unique; `verdicts` holds one entry per stage run.
#[derive(Debug, Clone, PartialEq)]
pub struct BitextRecord {
    pub index: usize,
    pub src: String,
    pub tgt: String,
    pub verdicts: BTreeMap<String, Verdict>,
}

impl BitextRecord {
    #[must_use]
    pub fn new(index: usize, src: impl Into<String>, tgt: impl Into<String>) -> Self {
        Self {
            index,
            src: src.into(),
            tgt: tgt.into(),
            verdicts: BTreeMap::new(),
        }
    }
}

/// NFC-normalized whitespace tokenization used for length limits and LM
/// scoring throughout the cascade.
#[must_use]
pub fn whitespace_tokens(text: &str) -> Vec<String> {
    text.nfc()
        .collect::<String>()
        .split_whitespace()
        .map(str::to_string)
        .collect()
}

/// How the perplexity stage selects records.
#[derive(Debug)]
pub enum SelectionMode<'a> {
    /// Keep records with perplexity <= the threshold.
    Threshold(f64),
    /// Keep the k lowest-perplexity records (ties by input index),
    /// preserving input order.
    TopK(usize),
    /// Moore-Lewis: keep records whose in-domain minus general-domain
    /// cross-entropy is <= `max_diff`.
    CrossEntropyDiff {
        general_lm: &'a NGramLM,
        max_diff: f64,
    },
}

/// Serializable mirror of [`SelectionMode`] for configs; the general LM is
/// supplied separately when the pipeline runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Selection {
    Threshold(f64),
    TopK(usize),
    CrossEntropyDiff(f64),
}

/// Unicode character classes the character stage can block.
///
/// `NonPrinting` covers control characters other than tab plus format
/// characters (zero-width and directional marks).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CharClass {
    CjkUnifiedIdeographs,
    Hiragana,
    Katakana,
    Hangul,
    Arabic,
    Cyrillic,
    NonPrinting,
}

impl CharClass {
    /// Every class, the default block list.
    pub const ALL: [CharClass; 7] = [
        CharClass::CjkUnifiedIdeographs,
        CharClass::Hiragana,
        CharClass::Katakana,
        CharClass::Hangul,
        CharClass::Arabic,
        CharClass::Cyrillic,
        CharClass::NonPrinting,
    ];

    /// Stable name used in configs and report histograms.
    #[must_use]
    pub fn name(self) -> &'static str {
        match self {
            CharClass::CjkUnifiedIdeographs => "cjk",
            CharClass::Hiragana => "hiragana",
            CharClass::Katakana => "katakana",
            CharClass::Hangul => "hangul",
            CharClass::Arabic => "arabic",
            CharClass::Cyrillic => "cyrillic",
            CharClass::NonPrinting => "non-printing",
        }
    }

    /// Parses a name produced by [`CharClass::name`].
    pub fn parse(name: &str) -> Result<Self, FilterError> {
        CharClass::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| FilterError::InvalidConfig(format!("unknown character class '{name}'")))
    }

    #[must_use]
    pub fn contains(self, c: char) -> bool {
        match self {
            CharClass::CjkUnifiedIdeographs => ('\u{4E00}'..='\u{9FFF}').contains(&c),
            CharClass::Hiragana => ('\u{3040}'..='\u{309F}').contains(&c),
            CharClass::Katakana => ('\u{30A0}'..='\u{30FF}').contains(&c),
            CharClass::Hangul => {
                ('\u{1100}'..='\u{11FF}').contains(&c)
                    || ('\u{3130}'..='\u{318F}').contains(&c)
                    || ('\u{AC00}'..='\u{D7AF}').contains(&c)
            }
            CharClass::Arabic => ('\u{0600}'..='\u{06FF}').contains(&c),
            CharClass::Cyrillic => ('\u{0400}'..='\u{04FF}').contains(&c),
            CharClass::NonPrinting => {
                (c.general_category() == GeneralCategory::Control && c != '\t')
                    || c.general_category() == GeneralCategory::Format
            }
        }
    }
}

/// Cascade parameters. Defaults: selection passes everything, 250-token
/// limit, 1.5 length ratio, all character classes blocked, source-side
/// perplexity scoring.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterConfig {
    pub selection: Selection,
    /// Score max(source, target) in the perplexity stage instead of the
    /// source side only.
    pub score_both_sides: bool,
    pub src_lang: String,
    pub tgt_lang: String,
    pub max_tokens: usize,
    pub max_ratio: f64,
    pub blocked_classes: Vec<CharClass>,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            selection: Selection::Threshold(f64::INFINITY),
            score_both_sides: false,
            src_lang: "en".to_string(),
            tgt_lang: "de".to_string(),
            max_tokens: 250,
            max_ratio: 1.5,
            blocked_classes: CharClass::ALL.to_vec(),
        }
    }
}

impl FilterConfig {
    /// Checks `max_tokens > 0`, `max_ratio > 1`, and non-empty languages.
    pub fn validate(&self) -> Result<(), FilterError> {
        if self.max_tokens == 0 {
            return Err(FilterError::InvalidConfig("max_tokens must be > 0".into()));
        }
        if !(self.max_ratio > 1.0) {
            return Err(FilterError::InvalidConfig("max_ratio must be > 1".into()));
        }
        if self.src_lang.is_empty() || self.tgt_lang.is_empty() {
            return Err(FilterError::InvalidConfig(
                "src_lang and tgt_lang must be set".into(),
            ));
        }
        Ok(())
    }
}

/// Audit data for one stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StageReport {
    pub stage: String,
    pub input: u64,
    pub output: u64,
    pub reasons: BTreeMap<String, u64>,
}

/// Audit data for a whole cascade run, one entry per stage in order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct FilterReport {
    pub stages: Vec<StageReport>,
}

impl FilterReport {
    /// Records entering the first stage.
    #[must_use]
    pub fn input(&self) -> u64 {
        self.stages.first().map_or(0, |s| s.input)
    }

    /// Records surviving the last stage.
    #[must_use]
    pub fn output(&self) -> u64 {
        self.stages.last().map_or(0, |s| s.output)
    }

    /// Checks per-stage balance, stage chaining, and monotone counts.
    pub fn validate(&self) -> Result<(), FilterError> {
        for (i, stage) in self.stages.iter().enumerate() {
            let rejected: u64 = stage.reasons.values().sum();
            if stage.input != stage.output + rejected {
                return Err(FilterError::InvalidConfig(format!(
                    "stage '{}' does not balance: {} != {} + {}",
                    stage.stage, stage.input, stage.output, rejected
                )));
            }
            if i > 0 && self.stages[i - 1].output != stage.input {
                return Err(FilterError::InvalidConfig(format!(
                    "stage '{}' input does not chain",
                    stage.stage
                )));
            }
        }
        Ok(())
    }
}

/// Applies one stage: survivors gain a `Pass` verdict, rejects are counted
/// into the report under their failure reason.
fn run_stage<F>(
    records: Vec<BitextRecord>,
    stage: &str,
    report: &mut FilterReport,
    mut classify: F,
) -> Vec<BitextRecord>
where
    F: FnMut(&BitextRecord) -> Option<String>,
{
    let input = records.len() as u64;
    let mut reasons: BTreeMap<String, u64> = BTreeMap::new();
    let mut kept = Vec::with_capacity(records.len());
    for mut record in records {
        match classify(&record) {
            None => {
                record.verdicts.insert(stage.to_string(), Verdict::Pass);
                kept.push(record);
            }
            Some(reason) => {
                *reasons.entry(reason).or_insert(0) += 1;
            }
        }
    }
    report.stages.push(StageReport {
        stage: stage.to_string(),
        input,
        output: kept.len() as u64,
        reasons,
    });
    kept
}

fn side_perplexity(lm: &NGramLM, text: &str) -> f64 {
    let tokens = whitespace_tokens(text);
    if tokens.is_empty() {
        return f64::INFINITY;
    }
    lm.perplexity(&tokens).unwrap_or(f64::INFINITY)
}

fn side_entropy_diff(in_domain: &NGramLM, general: &NGramLM, text: &str) -> f64 {
    let tokens = whitespace_tokens(text);
    if tokens.is_empty() {
        return f64::INFINITY;
    }
    match (
        in_domain.cross_entropy(&tokens),
        general.cross_entropy(&tokens),
    ) {
        (Ok(h_in), Ok(h_gen)) => h_in - h_gen,
        _ => f64::INFINITY,
    }
}

fn record_score(record: &BitextRecord, both_sides: bool, score: impl Fn(&str) -> f64) -> f64 {
    let src = score(&record.src);
    if both_sides {
        src.max(score(&record.tgt))
    } else {
        src
    }
}

fn selection_scores(
    records: &[BitextRecord],
    in_domain: &NGramLM,
    mode: &SelectionMode<'_>,
    both_sides: bool,
) -> Vec<f64> {
    records
        .iter()
        .map(|r| match mode {
            SelectionMode::Threshold(_) | SelectionMode::TopK(_) => {
                record_score(r, both_sides, |text| side_perplexity(in_domain, text))
            }
            SelectionMode::CrossEntropyDiff { general_lm, .. } => {
                record_score(r, both_sides, |text| {
                    side_entropy_diff(in_domain, general_lm, text)
                })
            }
        })
        .collect()
}

/// Per-record pass set for the perplexity stage; `scores[i]` pairs with
/// `records[i]`.
fn selection_keep(records: &[BitextRecord], scores: &[f64], mode: &SelectionMode<'_>) -> Vec<bool> {
    match mode {
        SelectionMode::Threshold(t) => scores.iter().map(|s| *s <= *t).collect(),
        SelectionMode::CrossEntropyDiff { max_diff, .. } => {
            scores.iter().map(|s| *s <= *max_diff).collect()
        }
        SelectionMode::TopK(k) => {
            let mut order: Vec<usize> = (0..records.len()).collect();
            order.sort_by(|&a, &b| {
                scores[a]
                    .total_cmp(&scores[b])
                    .then_with(|| records[a].index.cmp(&records[b].index))
            });
            let mut keep = vec![false; records.len()];
            for &i in order.iter().take(*k) {
                keep[i] = true;
            }
            keep
        }
    }
}

fn selection_reason(mode: &SelectionMode<'_>) -> &'static str {
    match mode {
        SelectionMode::Threshold(_) => "perplexity-above-threshold",
        SelectionMode::TopK(_) => "rank-beyond-top-k",
        SelectionMode::CrossEntropyDiff { .. } => "cross-entropy-diff-above-threshold",
    }
}

/// Perplexity-based data selection (stage name `perplexity`). Scores the
/// source side with the in-domain model (see [`SelectionMode`]); records
/// with an empty source score infinitely bad. Output preserves input order.
#[must_use]
pub fn select_by_perplexity(
    records: Vec<BitextRecord>,
    in_domain: &NGramLM,
    mode: SelectionMode<'_>,
) -> Vec<BitextRecord> {
    let mut report = FilterReport::default();
    run_selection(records, in_domain, &mode, false, &mut report)
}

fn run_selection(
    records: Vec<BitextRecord>,
    in_domain: &NGramLM,
    mode: &SelectionMode<'_>,
    both_sides: bool,
    report: &mut FilterReport,
) -> Vec<BitextRecord> {
    let scores = selection_scores(&records, in_domain, mode, both_sides);
    let keep = selection_keep(&records, &scores, mode);
    let reason = selection_reason(mode);
    let mut position = 0;
    run_stage(records, "perplexity", report, |_record| {
        let kept = keep[position];
        position += 1;
        if kept {
            None
        } else {
            Some(reason.to_string())
        }
    })
}

fn length_ratio_reason(record: &BitextRecord, max_tokens: usize, max_ratio: f64) -> Option<String> {
    let src_len = whitespace_tokens(&record.src).len();
    let tgt_len = whitespace_tokens(&record.tgt).len();
    if src_len == 0 || tgt_len == 0 {
        return Some("empty-side".to_string());
    }
    if src_len > max_tokens || tgt_len > max_tokens {
        return Some("over-length".to_string());
    }
    let ratio = src_len.max(tgt_len) as f64 / src_len.min(tgt_len) as f64;
    if ratio > max_ratio {
        return Some("length-ratio".to_string());
    }
    None
}

/// Length and ratio limits (stage name `length_ratio`): drops records with
/// an empty side, more than `max_tokens` whitespace tokens on either side,
/// or a longer/shorter token ratio strictly above `max_ratio`.
#[must_use]
pub fn filter_length_ratio(
    records: Vec<BitextRecord>,
    max_tokens: usize,
    max_ratio: f64,
) -> Vec<BitextRecord> {
    let mut report = FilterReport::default();
    run_stage(records, "length_ratio", &mut report, |r| {
        length_ratio_reason(r, max_tokens, max_ratio)
    })
}

fn blocked_class(record: &BitextRecord, blocked: &[CharClass]) -> Option<String> {
    for text in [&record.src, &record.tgt] {
        for c in text.chars() {
            if let Some(class) = blocked.iter().find(|class| class.contains(c)) {
                return Some(format!("blocked-{}", class.name()));
            }
        }
    }
    None
}

/// Character screening (stage name `characters`): drops records containing
/// any character from a blocked class on either side.
#[must_use]
pub fn filter_characters(
    records: Vec<BitextRecord>,
    blocked_classes: &[CharClass],
) -> Vec<BitextRecord> {
    let mut report = FilterReport::default();
    run_stage(records, "characters", &mut report, |r| {
        blocked_class(r, blocked_classes)
    })
}

fn langid_reason(
    record: &BitextRecord,
    model: &LangIdModel,
    src_lang: &str,
    tgt_lang: &str,
) -> Option<String> {
    let src = match classify_language(model, &record.src) {
        Ok(p) => p.label,
        Err(_) => return Some("empty-text".to_string()),
    };
    if src != src_lang {
        return Some("source-language-mismatch".to_string());
    }
    let tgt = match classify_language(model, &record.tgt) {
        Ok(p) => p.label,
        Err(_) => return Some("empty-text".to_string()),
    };
    if tgt != tgt_lang {
        return Some("target-language-mismatch".to_string());
    }
    None
}

/// Models consumed by [`run_pipeline`]. The general-domain model is needed
/// only for [`Selection::CrossEntropyDiff`].
#[derive(Clone, Copy)]
pub struct PipelineModels<'a> {
    pub in_domain_lm: &'a NGramLM,
    pub general_lm: Option<&'a NGramLM>,
}

/// Runs the full cascade in fixed order: perplexity selection, language ID,
/// length/ratio, characters. Returns survivors (input order, verdicts for
/// all four stages) and the per-stage report.
///
/// # Errors
/// [`FilterError::InvalidConfig`] from config validation and
/// [`FilterError::MissingGeneralLm`] when cross-entropy-difference selection
/// has no general model.
pub fn run_pipeline(
    records: Vec<BitextRecord>,
    lms: &PipelineModels<'_>,
    langid_model: &LangIdModel,
    config: &FilterConfig,
) -> Result<(Vec<BitextRecord>, FilterReport), FilterError> {
    config.validate()?;
    let mode = match config.selection {
        Selection::Threshold(t) => SelectionMode::Threshold(t),
        Selection::TopK(k) => SelectionMode::TopK(k),
        Selection::CrossEntropyDiff(t) => SelectionMode::CrossEntropyDiff {
            general_lm: lms.general_lm.ok_or(FilterError::MissingGeneralLm)?,
            max_diff: t,
        },
    };
    let mut report = FilterReport::default();
    let records = run_selection(
        records,
        lms.in_domain_lm,
        &mode,
        config.score_both_sides,
        &mut report,
    );
    let records = run_stage(records, "langid", &mut report, |r| {
        langid_reason(r, langid_model, &config.src_lang, &config.tgt_lang)
    });
    let records = run_stage(records, "length_ratio", &mut report, |r| {
        length_ratio_reason(r, config.max_tokens, config.max_ratio)
    });
    let records = run_stage(records, "characters", &mut report, |r| {
        blocked_class(r, &config.blocked_classes)
    });
    debug_assert!(report.validate().is_ok());
    Ok((records, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langid::train_langid;
    use crate::ngram::Smoothing;
    use rand::prelude::*;

    fn records(pairs: &[(&str, &str)]) -> Vec<BitextRecord> {
        pairs
            .iter()
            .enumerate()
            .map(|(i, (s, t))| BitextRecord::new(i, *s, *t))
            .collect()
    }

    fn tiny_lm() -> NGramLM {
        let corpus: Vec<Vec<String>> = (0..5)
            .map(|_| vec!["a".to_string(), "b".to_string()])
            .collect();
        NGramLM::train(&corpus, 2, Smoothing::AddK(0.5)).unwrap()
    }

    // ----- perplexity selection -----

    #[test]
    fn threshold_keeps_low_perplexity_records() {
        let lm = tiny_lm();
        let recs = records(&[("a b", "x"), ("z z z z", "x")]);
        let low = side_perplexity(&lm, "a b");
        let high = side_perplexity(&lm, "z z z z");
        assert!(low < high);
        let kept = select_by_perplexity(recs, &lm, SelectionMode::Threshold((low + high) / 2.0));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 0);
        assert_eq!(kept[0].verdicts["perplexity"], Verdict::Pass);
    }

    #[test]
    fn top_k_with_full_k_is_identity() {
        let lm = tiny_lm();
        let recs = records(&[("a b", "x"), ("b a", "y"), ("z", "w")]);
        let kept = select_by_perplexity(recs.clone(), &lm, SelectionMode::TopK(3));
        assert_eq!(kept.len(), 3);
        for (k, r) in kept.iter().zip(&recs) {
            assert_eq!(k.index, r.index);
            assert_eq!(k.src, r.src);
        }
    }

    #[test]
    fn top_k_matches_sort_and_truncate_oracle() {
        let lm = tiny_lm();
        let vocab = ["a", "b", "z", "q"];
        let mut rng = StdRng::seed_from_u64(0xF17E);
        let recs: Vec<BitextRecord> = (0..200)
            .map(|i| {
                let len = rng.gen_range(1..6);
                let src: Vec<&str> = (0..len).map(|_| vocab[rng.gen_range(0..4)]).collect();
                BitextRecord::new(i, src.join(" "), "t")
            })
            .collect();
        for k in [0, 1, 17, 100, 200, 500] {
            let kept = select_by_perplexity(recs.clone(), &lm, SelectionMode::TopK(k));
            // Oracle: full sort by (perplexity, index), truncate, re-sort by index.
            let mut scored: Vec<(f64, usize)> = recs
                .iter()
                .map(|r| (side_perplexity(&lm, &r.src), r.index))
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
            let mut want: Vec<usize> = scored.iter().take(k).map(|(_, i)| *i).collect();
            want.sort_unstable();
            let got: Vec<usize> = kept.iter().map(|r| r.index).collect();
            assert_eq!(got, want, "k = {k}");
        }
    }

    #[test]
    fn top_k_breaks_ties_by_input_index() {
        let lm = tiny_lm();
        let recs = records(&[("a b", "x"), ("a b", "x"), ("a b", "x")]);
        let kept = select_by_perplexity(recs, &lm, SelectionMode::TopK(2));
        let got: Vec<usize> = kept.iter().map(|r| r.index).collect();
        assert_eq!(got, vec![0, 1]);
    }

    #[test]
    fn cross_entropy_diff_is_zero_against_itself() {
        let lm = tiny_lm();
        let recs = records(&[("a b", "x"), ("b b", "y")]);
        let kept = select_by_perplexity(
            recs.clone(),
            &lm,
            SelectionMode::CrossEntropyDiff {
                general_lm: &lm,
                max_diff: 0.0,
            },
        );
        assert_eq!(kept.len(), 2);
        let none = select_by_perplexity(
            recs,
            &lm,
            SelectionMode::CrossEntropyDiff {
                general_lm: &lm,
                max_diff: -0.1,
            },
        );
        assert!(none.is_empty());
    }

    #[test]
    fn empty_source_scores_infinitely_bad() {
        let lm = tiny_lm();
        let recs = records(&[("", "x"), ("a b", "y")]);
        let kept = select_by_perplexity(recs, &lm, SelectionMode::Threshold(1e12));
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 1);
    }

    // ----- length / ratio -----

    #[test]
    fn token_limit_is_strictly_greater_than() {
        // Targets match the sources in length so only the token limit can
        // trip, never the ratio check.
        let at_limit = vec!["tok"; 250].join(" ");
        let over_limit = vec!["tok"; 251].join(" ");
        let recs = records(&[(&at_limit, &at_limit), (&over_limit, &at_limit)]);
        let kept = filter_length_ratio(recs, 250, 1.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 0);
    }

    #[test]
    fn ratio_limit_is_strictly_greater_than() {
        let ten = vec!["t"; 10].join(" ");
        let fifteen = vec!["t"; 15].join(" ");
        let sixteen = vec!["t"; 16].join(" ");
        let recs = records(&[(&ten, &fifteen), (&ten, &sixteen)]);
        let kept = filter_length_ratio(recs, 250, 1.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 0);
    }

    #[test]
    fn empty_sides_are_dropped() {
        let recs = records(&[("a", ""), ("", "b"), ("a", "b")]);
        let kept = filter_length_ratio(recs, 250, 1.5);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 2);
    }

    #[test]
    fn ratio_is_symmetric_in_sides() {
        let three = vec!["t"; 3].join(" ");
        let five = vec!["t"; 5].join(" ");
        let recs = records(&[(&three, &five), (&five, &three)]);
        let kept = filter_length_ratio(recs, 250, 1.5);
        assert!(kept.is_empty());
    }

    // ----- characters -----

    #[test]
    fn cjk_on_either_side_is_dropped() {
        let recs = records(&[("hello 世界", "x"), ("x", "hello 世界"), ("hello", "welt")]);
        let kept = filter_characters(recs, &CharClass::ALL);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 2);
    }

    #[test]
    fn latin_with_umlauts_is_kept() {
        let recs = records(&[("schöne Grüße", "naïve façade")]);
        let kept = filter_characters(recs, &CharClass::ALL);
        assert_eq!(kept.len(), 1);
    }

    #[test]
    fn zero_width_space_is_non_printing() {
        let recs = records(&[("a\u{200B}b", "x"), ("a b", "x")]);
        let kept = filter_characters(recs, &CharClass::ALL);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 1);
    }

    #[test]
    fn tab_is_allowed_but_other_controls_are_not() {
        let recs = records(&[("a\tb", "x"), ("a\u{0007}b", "x")]);
        let kept = filter_characters(recs, &CharClass::ALL);
        assert_eq!(kept.len(), 1);
        assert_eq!(kept[0].index, 0);
    }

    #[test]
    fn block_list_is_configurable() {
        let recs = records(&[("привет мир", "x")]);
        assert!(filter_characters(recs.clone(), &CharClass::ALL).is_empty());
        let only_cjk = [CharClass::CjkUnifiedIdeographs];
        assert_eq!(filter_characters(recs, &only_cjk).len(), 1);
    }

    #[test]
    fn class_names_round_trip() {
        for class in CharClass::ALL {
            assert_eq!(CharClass::parse(class.name()).unwrap(), class);
        }
        assert!(CharClass::parse("klingon").is_err());
    }

    // ----- full pipeline -----

    fn en_pool() -> Vec<&'static str> {
        vec![
            "the quick brown fox jumps over the lazy dog",
            "speech translation systems need clean training data",
            "we should keep the window open during the night",
            "language models assign probabilities to token sequences",
            "this training corpus contains short english sentences",
            "the weather report promised sunshine for the weekend",
        ]
    }

    // Token counts stay within a 1.5 ratio of every en_pool sentence, so
    // only planted noise fails the length stage.
    fn de_pool() -> Vec<&'static str> {
        vec![
            "der schnelle braune fuchs springt ueber den faulen hund",
            "sprachuebersetzungssysteme brauchen wirklich immer sehr saubere trainingsdaten",
            "wir sollten das fenster in der nacht offen lassen",
            "sprachmodelle weisen allen tokenfolgen ihre wahrscheinlichkeiten zu",
            "dieses korpus enthaelt nur sehr kurze deutsche saetze",
            "der wetterbericht hat sonnenschein am wochenende versprochen",
        ]
    }

    fn toy_models() -> (NGramLM, LangIdModel) {
        let corpus: Vec<Vec<String>> = en_pool().iter().map(|s| whitespace_tokens(s)).collect();
        let lm = NGramLM::train(&corpus, 3, Smoothing::AddK(0.1)).unwrap();
        let examples: Vec<(String, String)> = en_pool()
            .iter()
            .map(|t| ("en".to_string(), (*t).to_string()))
            .chain(
                de_pool()
                    .iter()
                    .map(|t| ("de".to_string(), (*t).to_string())),
            )
            .collect();
        (lm, train_langid(&examples).unwrap())
    }

    #[test]
    fn permissive_config_passes_everything() {
        let (lm, langid) = toy_models();
        let recs: Vec<BitextRecord> = en_pool()
            .iter()
            .zip(de_pool())
            .enumerate()
            .map(|(i, (s, t))| BitextRecord::new(i, *s, t))
            .collect();
        let config = FilterConfig::default();
        let models = PipelineModels {
            in_domain_lm: &lm,
            general_lm: None,
        };
        let (kept, report) = run_pipeline(recs.clone(), &models, &langid, &config).unwrap();
        assert_eq!(kept.len(), recs.len());
        report.validate().unwrap();
        assert_eq!(report.input(), recs.len() as u64);
        assert_eq!(report.output(), recs.len() as u64);
        for stage in &report.stages {
            assert!(stage.reasons.is_empty(), "stage {}", stage.stage);
        }
        for record in &kept {
            assert_eq!(record.verdicts.len(), 4);
            assert!(record.verdicts.values().all(|v| *v == Verdict::Pass));
        }
    }

    #[test]
    fn planted_noise_is_attributed_to_the_right_stages() {
        let (lm, langid) = toy_models();
        let en = en_pool();
        let de = de_pool();
        let mut rng = StdRng::seed_from_u64(0x9A3D);
        let mut recs = Vec::new();
        let mut wrong_lang = 0u64;
        let mut cjk = 0u64;
        for i in 0..200 {
            let s = en[rng.gen_range(0..en.len())];
            let t = de[rng.gen_range(0..de.len())];
            let roll = rng.gen_range(0..100);
            if roll < 10 {
                // Swapped sides: source is German.
                recs.push(BitextRecord::new(i, t, s));
                wrong_lang += 1;
            } else if roll < 15 {
                recs.push(BitextRecord::new(i, format!("{s} 世界"), t));
                cjk += 1;
            } else {
                recs.push(BitextRecord::new(i, s, t));
            }
        }
        let config = FilterConfig {
            selection: Selection::TopK(recs.len()),
            ..FilterConfig::default()
        };
        let models = PipelineModels {
            in_domain_lm: &lm,
            general_lm: None,
        };
        let (kept, report) = run_pipeline(recs.clone(), &models, &langid, &config).unwrap();
        report.validate().unwrap();
        let by_stage = |name: &str| -> &StageReport {
            report.stages.iter().find(|s| s.stage == name).unwrap()
        };
        let langid_drops: u64 = by_stage("langid").reasons.values().sum();
        assert!(
            langid_drops as f64 >= 0.95 * wrong_lang as f64,
            "langid caught {langid_drops} of {wrong_lang}"
        );
        let char_drops: u64 = by_stage("characters").reasons.values().sum();
        assert_eq!(char_drops, cjk);
        assert_eq!(
            by_stage("characters").reasons.get("blocked-cjk").copied(),
            Some(cjk)
        );
        // Monotone stage counts.
        for pair in report.stages.windows(2) {
            assert!(pair[1].output <= pair[0].output);
        }
        assert_eq!(kept.len() as u64, report.output());
        // Survivor order preserved.
        for pair in kept.windows(2) {
            assert!(pair[0].index < pair[1].index);
        }
    }

    #[test]
    fn cross_entropy_selection_requires_general_model() {
        let (lm, langid) = toy_models();
        let config = FilterConfig {
            selection: Selection::CrossEntropyDiff(0.0),
            ..FilterConfig::default()
        };
        let models = PipelineModels {
            in_domain_lm: &lm,
            general_lm: None,
        };
        let out = run_pipeline(vec![], &models, &langid, &config);
        assert!(matches!(out, Err(FilterError::MissingGeneralLm)));
    }

    #[test]
    fn config_validation_rejects_bad_limits() {
        let bad_tokens = FilterConfig {
            max_tokens: 0,
            ..FilterConfig::default()
        };
        assert!(bad_tokens.validate().is_err());
        let bad_ratio = FilterConfig {
            max_ratio: 1.0,
            ..FilterConfig::default()
        };
        assert!(bad_ratio.validate().is_err());
        assert!(FilterConfig::default().validate().is_ok());
    }
}
