//! `seqkd`: decode teacher pseudo labels for a parallel dataset, combine
//! them with the original targets per the recipe, and emit the flattened
//! training rows.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use stp_core::search::{DecodeConfig, Token};
use stp_core::seqkd::{
    build_multi_ref, filter_utterances, flatten, generate_pseudo_labels, parse_recipe,
    ParallelDataset, PseudoSet, DEFAULT_TEACHER_BEAM, MAX_TRAIN_CHARS, MAX_TRAIN_FRAMES,
    ORIGINAL_TAG,
};

use crate::args::SeqKdArgs;
use crate::error::AppError;
use crate::util::{load_scorer, open_output, read_lines, tokens};
use crate::Resolved;

pub const DEFAULT_TEACHER_MAX_LEN: usize = 20;

fn read_dataset(path: &Path) -> Result<ParallelDataset, AppError> {
    let mut pairs = Vec::new();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut fields = line.splitn(3, '\t');
        match (fields.next(), fields.next(), fields.next()) {
            (Some(utt), Some(src), Some(tgt)) => {
                pairs.push((utt.to_string(), src.to_string(), tgt.to_string()));
            }
            _ => {
                return Err(AppError::Validation(format!(
                    "{}:{}: expected 'utt_id<TAB>source<TAB>target'",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    Ok(ParallelDataset::from_pairs(pairs)?)
}

fn read_frame_counts(path: &Path) -> Result<BTreeMap<String, u64>, AppError> {
    let mut counts = BTreeMap::new();
    for (idx, line) in read_lines(path)?.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse = line.split_once('\t').and_then(|(utt, frames)| {
            frames
                .trim()
                .parse::<u64>()
                .ok()
                .map(|f| (utt.to_string(), f))
        });
        match parse {
            Some((utt, frames)) => {
                counts.insert(utt, frames);
            }
            None => {
                return Err(AppError::Validation(format!(
                    "{}:{}: expected 'utt_id<TAB>frames'",
                    path.display(),
                    idx + 1
                )))
            }
        }
    }
    Ok(counts)
}

pub fn run_seqkd(args: &SeqKdArgs, ctx: &Resolved) -> Result<(), AppError> {
    let section = &ctx.config.seqkd;
    let beam = args.beam.or(section.beam).unwrap_or(DEFAULT_TEACHER_BEAM);
    let max_len = args
        .max_len
        .or(section.max_len)
        .unwrap_or(DEFAULT_TEACHER_MAX_LEN);

    let mut dataset = read_dataset(&args.dataset)?;
    match &args.frames {
        Some(frames_path) => {
            let counts = read_frame_counts(frames_path)?;
            let max_frames = args
                .max_frames
                .or(section.max_frames)
                .unwrap_or(MAX_TRAIN_FRAMES);
            let max_chars = args
                .max_chars
                .or(section.max_chars)
                .unwrap_or(MAX_TRAIN_CHARS);
            dataset = filter_utterances(dataset, &counts, max_frames, max_chars)?;
        }
        None => {
            if args.max_frames.is_some() || args.max_chars.is_some() {
                return Err(AppError::Validation(
                    "--max-frames/--max-chars need --frames".into(),
                ));
            }
        }
    }

    let recipe = parse_recipe(args.recipe.as_deref().unwrap_or(ORIGINAL_TAG))?;

    let mut teachers: BTreeMap<String, String> = BTreeMap::new();
    for spec in &args.teachers {
        let (tag, scorer_spec) = spec.split_once('=').ok_or_else(|| {
            AppError::Validation(format!(
                "teacher spec '{spec}' is not of the form TAG=kind:path"
            ))
        })?;
        if !recipe.iter().any(|t| t == tag) {
            return Err(AppError::Validation(format!(
                "teacher '{tag}' is not in the recipe"
            )));
        }
        if teachers
            .insert(tag.to_string(), scorer_spec.to_string())
            .is_some()
        {
            return Err(AppError::Validation(format!(
                "teacher '{tag}' is given twice"
            )));
        }
    }

    let mut pseudo_sets: Vec<PseudoSet> = Vec::new();
    for tag in &recipe {
        if tag == ORIGINAL_TAG {
            continue;
        }
        let spec = teachers
            .get(tag)
            .ok_or_else(|| AppError::Validation(format!("recipe tag '{tag}' has no --teacher")))?;
        let scorer = load_scorer(spec)?;
        let lm = scorer.lm();
        let cfg = DecodeConfig::new(beam, max_len, lm.end_id());
        let sources: Vec<(String, Vec<Token>)> = dataset
            .records()
            .iter()
            .map(|r| (r.utt_id.clone(), lm.tokens_to_ids(&tokens(&r.src))))
            .collect();
        let decoded = generate_pseudo_labels(&scorer, &sources, &cfg)?;
        let labels = decoded
            .into_iter()
            .map(|(utt_id, ids)| {
                let mut ids: &[Token] = &ids;
                if ids.last() == Some(&cfg.end_symbol) {
                    ids = &ids[..ids.len() - 1];
                }
                let text: Vec<&str> = ids.iter().map(|&id| lm.token(id)).collect();
                (utt_id, text.join(" "))
            })
            .collect();
        pseudo_sets.push(PseudoSet {
            tag: tag.clone(),
            labels,
        });
    }

    let combined = build_multi_ref(&dataset, &pseudo_sets, &recipe)?;
    let rows = flatten(&combined);
    let mut out = open_output(args.out.as_ref())?;
    for row in &rows {
        writeln!(out, "{}\t{}\t{}\t{}", row.utt_id, row.tag, row.src, row.tgt)?;
    }
    out.flush()?;
    Ok(())
}
