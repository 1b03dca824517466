//! Sequence-level knowledge distillation datasets: teacher-generated pseudo
//! labels, multi-reference assembly recipes, and utterance-level training
//! filters.
//!
//! Datasets keep a grouped form (one record per utterance with tagged
//! references) and flatten to independent (source, target) pairs for
//! trainers that consume flat bitext.

use crate::search::{beam_search, DecodeConfig, Scorer, SearchError, Token};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

/// Default beam width for teacher decoding.
pub const DEFAULT_TEACHER_BEAM: usize = 5;
/// Utterances with more speech frames than this are excluded from training.
pub const MAX_TRAIN_FRAMES: u64 = 3000;
/// Utterances with more characters than this on any side are excluded.
pub const MAX_TRAIN_CHARS: usize = 400;
/// Conventional tag for original (non-distilled) references.
pub const ORIGINAL_TAG: &str = "X";

/// Errors from dataset assembly and filtering.
#[derive(Debug, Error)]
pub enum SeqKdError {
    #[error("duplicate utterance id '{0}'")]
    DuplicateUttId(String),
    #[error("record '{0}' has no references")]
    NoReferences(String),
    #[error("pseudo labels '{tag}' do not align with the original data: {message}")]
    Alignment { tag: String, message: String },
    #[error("recipe tag '{0}' matches no pseudo label set")]
    UnknownTag(String),
    #[error("invalid recipe: {0}")]
    InvalidRecipe(String),
    #[error("missing speech frame count for utterance '{0}'")]
    MissingFrameCount(String),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// One utterance: a source text and at least one tagged reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetRecord {
    pub utt_id: String,
    pub src: String,
    /// `(tag, target)` pairs in recipe order.
    pub refs: Vec<(String, String)>,
}

/// Grouped parallel data with unique utterance ids and non-empty reference
/// lists.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParallelDataset {
    records: Vec<DatasetRecord>,
}

impl ParallelDataset {
    /// Validates utterance-id uniqueness and per-record references.
    ///
    /// # Errors
    /// [`SeqKdError::DuplicateUttId`]; [`SeqKdError::NoReferences`].
    pub fn new(records: Vec<DatasetRecord>) -> Result<Self, SeqKdError> {
        let mut seen = BTreeSet::new();
        for record in &records {
            if !seen.insert(record.utt_id.as_str()) {
                return Err(SeqKdError::DuplicateUttId(record.utt_id.clone()));
            }
            if record.refs.is_empty() {
                return Err(SeqKdError::NoReferences(record.utt_id.clone()));
            }
        }
        Ok(Self { records })
    }

    /// Builds a single-reference dataset with every target tagged
    /// [`ORIGINAL_TAG`].
    ///
    /// # Errors
    /// [`SeqKdError::DuplicateUttId`].
    pub fn from_pairs<I>(pairs: I) -> Result<Self, SeqKdError>
    where
        I: IntoIterator<Item = (String, String, String)>,
    {
        Self::new(
            pairs
                .into_iter()
                .map(|(utt_id, src, tgt)| DatasetRecord {
                    utt_id,
                    src,
                    refs: vec![(ORIGINAL_TAG.to_string(), tgt)],
                })
                .collect(),
        )
    }

    #[must_use]
    pub fn records(&self) -> &[DatasetRecord] {
        &self.records
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.records.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Decodes one pseudo label per source with the teacher, preserving input
/// order. Sources are raw token sequences; no normalization is applied.
///
/// # Errors
/// Propagates search failures.
pub fn generate_pseudo_labels<S: Scorer + ?Sized>(
    teacher: &S,
    sources: &[(String, Vec<Token>)],
    cfg: &DecodeConfig,
) -> Result<Vec<(String, Vec<Token>)>, SeqKdError> {
    let mut labels = Vec::with_capacity(sources.len());
    for (utt_id, src) in sources {
        let mut ranked = beam_search(teacher, src, cfg)?;
        let best = ranked.swap_remove(0);
        labels.push((utt_id.clone(), best.tokens));
    }
    Ok(labels)
}

/// One teacher's labels: a tag plus `(utt_id, target)` rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PseudoSet {
    pub tag: String,
    pub labels: Vec<(String, String)>,
}

/// Parses a `+`-separated recipe such as `X+Y+Z` into its tags.
///
/// # Errors
/// [`SeqKdError::InvalidRecipe`] on empty or repeated tags.
pub fn parse_recipe(recipe: &str) -> Result<Vec<String>, SeqKdError> {
    let tags: Vec<String> = recipe.split('+').map(str::to_string).collect();
    if tags.iter().any(String::is_empty) {
        return Err(SeqKdError::InvalidRecipe(format!(
            "'{recipe}' contains an empty tag"
        )));
    }
    let unique: BTreeSet<&String> = tags.iter().collect();
    if unique.len() != tags.len() {
        return Err(SeqKdError::InvalidRecipe(format!(
            "'{recipe}' repeats a tag"
        )));
    }
    Ok(tags)
}

/// Assembles a multi-reference dataset. Each recipe tag contributes one
/// reference per utterance, in recipe order: [`ORIGINAL_TAG`] keeps the
/// original references, any other tag takes the matching pseudo set. A
/// recipe without [`ORIGINAL_TAG`] therefore replaces the originals.
///
/// # Errors
/// [`SeqKdError::UnknownTag`] for tags without a pseudo set;
/// [`SeqKdError::Alignment`] when a pseudo set misses an utterance or has
/// extras.
pub fn build_multi_ref(
    original: &ParallelDataset,
    pseudo_sets: &[PseudoSet],
    recipe: &[String],
) -> Result<ParallelDataset, SeqKdError> {
    if recipe.is_empty() {
        return Err(SeqKdError::InvalidRecipe("no tags".into()));
    }
    // Tag -> utt_id -> target, alignment-checked against the original.
    let mut by_tag: BTreeMap<&str, BTreeMap<&str, &str>> = BTreeMap::new();
    for tag in recipe {
        if tag == ORIGINAL_TAG {
            continue;
        }
        let set = pseudo_sets
            .iter()
            .find(|s| &s.tag == tag)
            .ok_or_else(|| SeqKdError::UnknownTag(tag.clone()))?;
        let mut labels: BTreeMap<&str, &str> = BTreeMap::new();
        for (utt_id, target) in &set.labels {
            if labels.insert(utt_id, target).is_some() {
                return Err(SeqKdError::Alignment {
                    tag: tag.clone(),
                    message: format!("utterance '{utt_id}' appears twice"),
                });
            }
        }
        for record in &original.records {
            if !labels.contains_key(record.utt_id.as_str()) {
                return Err(SeqKdError::Alignment {
                    tag: tag.clone(),
                    message: format!("utterance '{}' is missing", record.utt_id),
                });
            }
        }
        if labels.len() != original.len() {
            let extra = labels
                .keys()
                .find(|id| original.records.iter().all(|r| r.utt_id.as_str() != **id))
                .expect("size mismatch implies an extra id");
            return Err(SeqKdError::Alignment {
                tag: tag.clone(),
                message: format!("utterance '{extra}' is not in the original data"),
            });
        }
        by_tag.insert(tag, labels);
    }
    let records = original
        .records
        .iter()
        .map(|record| {
            let mut refs = Vec::new();
            for tag in recipe {
                if tag == ORIGINAL_TAG {
                    refs.extend(record.refs.iter().cloned());
                } else {
                    let target = by_tag[tag.as_str()][record.utt_id.as_str()];
                    refs.push((tag.clone(), target.to_string()));
                }
            }
            DatasetRecord {
                utt_id: record.utt_id.clone(),
                src: record.src.clone(),
                refs,
            }
        })
        .collect();
    ParallelDataset::new(records)
}

/// One flat training pair from [`flatten`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlatRecord {
    pub utt_id: String,
    pub tag: String,
    pub src: String,
    pub tgt: String,
}

/// Expands every `(src, ref)` pair into an independent record (duplicated
/// sources), record order then reference order.
#[must_use]
pub fn flatten(dataset: &ParallelDataset) -> Vec<FlatRecord> {
    dataset
        .records
        .iter()
        .flat_map(|record| {
            record.refs.iter().map(|(tag, tgt)| FlatRecord {
                utt_id: record.utt_id.clone(),
                tag: tag.clone(),
                src: record.src.clone(),
                tgt: tgt.clone(),
            })
        })
        .collect()
}

/// Drops utterances with more than `max_frames` speech frames or more than
/// `max_chars` characters on the source or any reference. Order preserved.
///
/// # Errors
/// [`SeqKdError::MissingFrameCount`] when an utterance has no frame count.
pub fn filter_utterances(
    dataset: ParallelDataset,
    frame_counts: &BTreeMap<String, u64>,
    max_frames: u64,
    max_chars: usize,
) -> Result<ParallelDataset, SeqKdError> {
    let mut kept = Vec::with_capacity(dataset.records.len());
    for record in dataset.records {
        let frames = *frame_counts
            .get(&record.utt_id)
            .ok_or_else(|| SeqKdError::MissingFrameCount(record.utt_id.clone()))?;
        if frames > max_frames {
            continue;
        }
        let over_chars = std::iter::once(record.src.as_str())
            .chain(record.refs.iter().map(|(_, t)| t.as_str()))
            .any(|text| text.chars().count() > max_chars);
        if over_chars {
            continue;
        }
        kept.push(record);
    }
    ParallelDataset::new(kept)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::{NGramLM, Smoothing};
    use crate::search::{make_ngram_scorer, CopyScorer, SeededScorer};
    use std::sync::Arc;

    fn cfg(beam: usize) -> DecodeConfig {
        DecodeConfig::new(beam, 8, 0)
    }

    fn original(n: usize) -> ParallelDataset {
        ParallelDataset::from_pairs((0..n).map(|i| {
            (
                format!("utt{i}"),
                format!("source {i}"),
                format!("target {i}"),
            )
        }))
        .unwrap()
    }

    fn pseudo(tag: &str, n: usize) -> PseudoSet {
        PseudoSet {
            tag: tag.to_string(),
            labels: (0..n)
                .map(|i| (format!("utt{i}"), format!("{tag} label {i}")))
                .collect(),
        }
    }

    // ----- pseudo labels -----

    #[test]
    fn deterministic_teacher_emits_its_script() {
        let teacher = CopyScorer::new(vec![3, 1, 0], 4, 0);
        let sources = vec![("u1".to_string(), vec![2, 2]), ("u2".to_string(), vec![1])];
        let labels =
            generate_pseudo_labels(&teacher, &sources, &cfg(DEFAULT_TEACHER_BEAM)).unwrap();
        assert_eq!(labels.len(), 2);
        assert_eq!(labels[0], ("u1".to_string(), vec![3, 1, 0]));
        assert_eq!(labels[1], ("u2".to_string(), vec![3, 1, 0]));
    }

    #[test]
    fn generation_matches_direct_beam_search() {
        let corpus: Vec<Vec<String>> = (0..15)
            .map(|_| vec!["a".to_string(), "b".to_string(), "c".to_string()])
            .collect();
        let lm = Arc::new(NGramLM::train(&corpus, 2, Smoothing::AddK(0.1)).unwrap());
        let teacher = make_ngram_scorer(lm.clone(), None);
        let end = lm.end_id();
        let config = DecodeConfig::new(DEFAULT_TEACHER_BEAM, 6, end);
        let sources: Vec<(String, Vec<Token>)> = vec![
            ("u0".to_string(), vec![lm.token_id("a")]),
            ("u1".to_string(), vec![lm.token_id("b")]),
        ];
        let labels = generate_pseudo_labels(&teacher, &sources, &config).unwrap();
        for ((_, got), (_, src)) in labels.iter().zip(&sources) {
            let want = beam_search(&teacher, src, &config).unwrap();
            assert_eq!(got, &want[0].tokens);
        }
    }

    #[test]
    fn generation_preserves_order_and_is_deterministic() {
        let teacher = SeededScorer::new(5, 77);
        let sources: Vec<(String, Vec<Token>)> = (0..8)
            .map(|i| (format!("u{i}"), vec![i as Token]))
            .collect();
        let a = generate_pseudo_labels(&teacher, &sources, &cfg(5)).unwrap();
        let b = generate_pseudo_labels(&teacher, &sources, &cfg(5)).unwrap();
        assert_eq!(a, b);
        let ids: Vec<&str> = a.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, vec!["u0", "u1", "u2", "u3", "u4", "u5", "u6", "u7"]);
    }

    // ----- recipes -----

    #[test]
    fn recipe_parsing() {
        assert_eq!(parse_recipe("X").unwrap(), vec!["X"]);
        assert_eq!(parse_recipe("X+Y+Z").unwrap(), vec!["X", "Y", "Z"]);
        assert!(matches!(
            parse_recipe("X++Y"),
            Err(SeqKdError::InvalidRecipe(_))
        ));
        assert!(matches!(
            parse_recipe("X+X"),
            Err(SeqKdError::InvalidRecipe(_))
        ));
    }

    #[test]
    fn replace_recipe_keeps_only_pseudo_references() {
        let data = original(3);
        let out = build_multi_ref(&data, &[pseudo("Y", 3)], &parse_recipe("Y").unwrap()).unwrap();
        assert_eq!(out.len(), 3);
        for record in out.records() {
            assert_eq!(record.refs.len(), 1);
            assert_eq!(record.refs[0].0, "Y");
            assert!(record.refs[0].1.starts_with("Y label"));
        }
    }

    #[test]
    fn attach_recipes_multiply_flattened_size() {
        let data = original(4);
        let sets = [pseudo("Y", 4), pseudo("Z", 4)];
        let two = build_multi_ref(&data, &sets, &parse_recipe("X+Y").unwrap()).unwrap();
        assert_eq!(flatten(&two).len(), 2 * data.len());
        let three = build_multi_ref(&data, &sets, &parse_recipe("X+Y+Z").unwrap()).unwrap();
        assert_eq!(flatten(&three).len(), 3 * data.len());
        // Grouping the flat records by utterance recovers the tag multiset.
        let flat = flatten(&three);
        let mut tags: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for row in &flat {
            tags.entry(row.utt_id.as_str()).or_default().push(&row.tag);
        }
        assert_eq!(tags.len(), data.len());
        for (_, tag_list) in tags {
            assert_eq!(tag_list, vec!["X", "Y", "Z"]);
        }
    }

    #[test]
    fn recipe_order_is_reference_order() {
        let data = original(1);
        let sets = [pseudo("Y", 1), pseudo("Z", 1)];
        let out = build_multi_ref(&data, &sets, &parse_recipe("Z+X+Y").unwrap()).unwrap();
        let tags: Vec<&str> = out.records()[0]
            .refs
            .iter()
            .map(|(t, _)| t.as_str())
            .collect();
        assert_eq!(tags, vec!["Z", "X", "Y"]);
    }

    #[test]
    fn misalignment_is_rejected() {
        let data = original(3);
        let missing = PseudoSet {
            tag: "Z".to_string(),
            labels: vec![("utt0".to_string(), "z0".to_string())],
        };
        assert!(matches!(
            build_multi_ref(&data, &[missing], &parse_recipe("X+Z").unwrap()),
            Err(SeqKdError::Alignment { .. })
        ));
        let mut extra = pseudo("Y", 3);
        extra.labels.push(("ghost".to_string(), "boo".to_string()));
        assert!(matches!(
            build_multi_ref(&data, &[extra], &parse_recipe("X+Y").unwrap()),
            Err(SeqKdError::Alignment { .. })
        ));
        assert!(matches!(
            build_multi_ref(&data, &[], &parse_recipe("X+Q").unwrap()),
            Err(SeqKdError::UnknownTag(_))
        ));
    }

    // ----- dataset validation -----

    #[test]
    fn dataset_invariants_are_enforced() {
        let dup = vec![
            DatasetRecord {
                utt_id: "u".into(),
                src: "s".into(),
                refs: vec![("X".into(), "t".into())],
            },
            DatasetRecord {
                utt_id: "u".into(),
                src: "s2".into(),
                refs: vec![("X".into(), "t2".into())],
            },
        ];
        assert!(matches!(
            ParallelDataset::new(dup),
            Err(SeqKdError::DuplicateUttId(_))
        ));
        let empty_refs = vec![DatasetRecord {
            utt_id: "u".into(),
            src: "s".into(),
            refs: vec![],
        }];
        assert!(matches!(
            ParallelDataset::new(empty_refs),
            Err(SeqKdError::NoReferences(_))
        ));
    }

    // ----- utterance filtering -----

    #[test]
    fn frame_limit_is_strictly_greater_than() {
        let data = ParallelDataset::from_pairs(vec![
            ("a".to_string(), "s".to_string(), "t".to_string()),
            ("b".to_string(), "s".to_string(), "t".to_string()),
        ])
        .unwrap();
        let mut frames = BTreeMap::new();
        frames.insert("a".to_string(), MAX_TRAIN_FRAMES);
        frames.insert("b".to_string(), MAX_TRAIN_FRAMES + 1);
        let kept = filter_utterances(data, &frames, MAX_TRAIN_FRAMES, MAX_TRAIN_CHARS).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept.records()[0].utt_id, "a");
    }

    #[test]
    fn character_limit_applies_to_all_sides() {
        let long = "x".repeat(MAX_TRAIN_CHARS + 1);
        let exact = "y".repeat(MAX_TRAIN_CHARS);
        let data = ParallelDataset::from_pairs(vec![
            ("a".to_string(), exact.clone(), "t".to_string()),
            ("b".to_string(), "s".to_string(), long.clone()),
            ("c".to_string(), long, "t".to_string()),
        ])
        .unwrap();
        let mut frames = BTreeMap::new();
        for id in ["a", "b", "c"] {
            frames.insert(id.to_string(), 100);
        }
        let kept = filter_utterances(data, &frames, MAX_TRAIN_FRAMES, MAX_TRAIN_CHARS).unwrap();
        assert_eq!(kept.len(), 1);
        assert_eq!(kept.records()[0].utt_id, "a");
    }

    #[test]
    fn empty_dataset_filters_to_empty() {
        let data = ParallelDataset::new(vec![]).unwrap();
        let kept = filter_utterances(data, &BTreeMap::new(), 3000, 400).unwrap();
        assert!(kept.is_empty());
    }

    #[test]
    fn missing_frame_count_is_an_error() {
        let data =
            ParallelDataset::from_pairs(vec![("a".to_string(), "s".to_string(), "t".to_string())])
                .unwrap();
        assert!(matches!(
            filter_utterances(data, &BTreeMap::new(), 3000, 400),
            Err(SeqKdError::MissingFrameCount(_))
        ));
    }

    #[test]
    fn multibyte_characters_count_once() {
        let umlauts = "ü".repeat(MAX_TRAIN_CHARS);
        let data =
            ParallelDataset::from_pairs(vec![("a".to_string(), umlauts, "t".to_string())]).unwrap();
        let mut frames = BTreeMap::new();
        frames.insert("a".to_string(), 1);
        let kept = filter_utterances(data, &frames, 3000, MAX_TRAIN_CHARS).unwrap();
        assert_eq!(kept.len(), 1);
    }
}
