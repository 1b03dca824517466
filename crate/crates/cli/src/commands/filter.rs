//! `filter-bitext`: runs the perplexity / language-id / length-ratio /
//! character cascade over a line-aligned corpus pair.

use std::io::Write;

use stp_core::filter::{
    run_pipeline, BitextRecord, CharClass, FilterConfig, PipelineModels, Selection,
};
use stp_core::langid::LangIdModel;
use stp_core::ngram::NGramLM;

use crate::args::FilterBitextArgs;
use crate::error::AppError;
use crate::util::{load_lm, open_output, read_lines, write_lines};
use crate::Resolved;

/// Combines the three mutually exclusive selection flags with the config
/// section; no setting at all keeps every record.
fn resolve_selection(args: &FilterBitextArgs, ctx: &Resolved) -> Result<Selection, AppError> {
    let flags = [
        args.ppl_threshold.map(Selection::Threshold),
        args.top_k.map(Selection::TopK),
        args.ce_diff.map(Selection::CrossEntropyDiff),
    ];
    let mut from_flags = flags.into_iter().flatten();
    if let Some(selection) = from_flags.next() {
        // clap already rejects two selection flags together.
        debug_assert!(from_flags.next().is_none());
        return Ok(selection);
    }
    let section = &ctx.config.filter;
    let from_config: Vec<Selection> = [
        section.ppl_threshold.map(Selection::Threshold),
        section.top_k.map(Selection::TopK),
        section.ce_diff.map(Selection::CrossEntropyDiff),
    ]
    .into_iter()
    .flatten()
    .collect();
    match from_config.as_slice() {
        [] => Ok(Selection::Threshold(f64::INFINITY)),
        [only] => Ok(*only),
        _ => Err(AppError::Validation(
            "config [filter] sets more than one of ppl_threshold, top_k, ce_diff".into(),
        )),
    }
}

fn resolve_blocked(args: &FilterBitextArgs, ctx: &Resolved) -> Result<Vec<CharClass>, AppError> {
    let names = args
        .blocked
        .clone()
        .or_else(|| ctx.config.filter.blocked.clone());
    match names {
        None => Ok(CharClass::ALL.to_vec()),
        Some(names) => names
            .iter()
            .map(|n| CharClass::parse(n.trim()).map_err(AppError::from))
            .collect(),
    }
}

pub fn run_filter_bitext(args: &FilterBitextArgs, ctx: &Resolved) -> Result<(), AppError> {
    let section = &ctx.config.filter;
    let defaults = FilterConfig::default();
    let config = FilterConfig {
        selection: resolve_selection(args, ctx)?,
        score_both_sides: args.score_both_sides
            || section
                .score_both_sides
                .unwrap_or(defaults.score_both_sides),
        src_lang: args
            .src_lang
            .clone()
            .or_else(|| section.src_lang.clone())
            .unwrap_or(defaults.src_lang),
        tgt_lang: args
            .tgt_lang
            .clone()
            .or_else(|| section.tgt_lang.clone())
            .unwrap_or(defaults.tgt_lang),
        max_tokens: args
            .max_tokens
            .or(section.max_tokens)
            .unwrap_or(defaults.max_tokens),
        max_ratio: args
            .max_ratio
            .or(section.max_ratio)
            .unwrap_or(defaults.max_ratio),
        blocked_classes: resolve_blocked(args, ctx)?,
    };

    let src_lines = read_lines(&args.src)?;
    let tgt_lines = read_lines(&args.tgt)?;
    if src_lines.len() != tgt_lines.len() {
        return Err(AppError::Validation(format!(
            "source and target line counts differ ({} vs {})",
            src_lines.len(),
            tgt_lines.len()
        )));
    }
    let records: Vec<BitextRecord> = src_lines
        .iter()
        .zip(&tgt_lines)
        .enumerate()
        .map(|(i, (s, t))| BitextRecord::new(i, s.clone(), t.clone()))
        .collect();

    let in_domain = load_lm(&args.indomain_lm)?;
    let general: Option<NGramLM> = match &args.general_lm {
        Some(path) => Some(load_lm(path)?),
        None => None,
    };
    let langid = LangIdModel::load_file(&args.langid)?;
    let models = PipelineModels {
        in_domain_lm: &in_domain,
        general_lm: general.as_ref(),
    };

    let (kept, report) = run_pipeline(records, &models, &langid, &config)?;

    let kept_src: Vec<&str> = kept.iter().map(|r| r.src.as_str()).collect();
    let kept_tgt: Vec<&str> = kept.iter().map(|r| r.tgt.as_str()).collect();
    write_lines(Some(&args.out_src), &kept_src)?;
    write_lines(Some(&args.out_tgt), &kept_tgt)?;

    let mut out = open_output(args.report.as_ref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    out.flush()?;
    Ok(())
}
