//! `score`: corpus-level WER or BLEU over line-aligned files. The bare
//! score goes to stdout; the breakdown goes to stderr.

use stp_core::metrics::{corpus_bleu, wer, BleuSmoothing, DEFAULT_BLEU_ORDER};
use stp_core::subword::normalize_asr_text;

use crate::args::ScoreArgs;
use crate::error::AppError;
use crate::util::{read_lines, tokens};
use crate::Resolved;

pub const DEFAULT_BLEU_FLOOR: f64 = 0.01;

fn parse_bleu_smoothing(name: Option<&str>, floor: Option<f64>) -> Result<BleuSmoothing, AppError> {
    match name.unwrap_or("none") {
        "none" => {
            if floor.is_some() {
                return Err(AppError::Validation(
                    "--floor only applies to floor smoothing".into(),
                ));
            }
            Ok(BleuSmoothing::None)
        }
        "floor" => Ok(BleuSmoothing::Floor(floor.unwrap_or(DEFAULT_BLEU_FLOOR))),
        other => Err(AppError::Validation(format!(
            "unknown smoothing '{other}' (expected none or floor)"
        ))),
    }
}

fn line_tokens(line: &str, normalize: bool) -> Vec<String> {
    if normalize {
        tokens(&normalize_asr_text(line))
    } else {
        tokens(line)
    }
}

fn run_wer(args: &ScoreArgs, normalize: bool) -> Result<(), AppError> {
    if args.refs.len() != 1 {
        return Err(AppError::Validation(
            "wer takes exactly one --ref file".into(),
        ));
    }
    let ref_lines = read_lines(&args.refs[0])?;
    let hyp_lines = read_lines(&args.hyp)?;
    if ref_lines.len() != hyp_lines.len() {
        return Err(AppError::Validation(format!(
            "reference and hypothesis line counts differ ({} vs {})",
            ref_lines.len(),
            hyp_lines.len()
        )));
    }
    let mut errors = 0usize;
    let mut ref_tokens = 0usize;
    let (mut matches, mut subs, mut dels, mut ins) = (0usize, 0usize, 0usize, 0usize);
    for (idx, (r, h)) in ref_lines.iter().zip(&hyp_lines).enumerate() {
        let r = line_tokens(r, normalize);
        let h = line_tokens(h, normalize);
        if r.is_empty() && h.is_empty() {
            continue;
        }
        if r.is_empty() {
            return Err(AppError::Validation(format!(
                "reference line {} is empty but the hypothesis is not",
                idx + 1
            )));
        }
        let (_, alignment) = wer(&r, &h)?;
        errors += alignment.distance();
        ref_tokens += r.len();
        matches += alignment.matches;
        subs += alignment.substitutions;
        dels += alignment.deletions;
        ins += alignment.insertions;
    }
    if ref_tokens == 0 {
        return Err(AppError::Validation("reference is empty".into()));
    }
    let rate = errors as f64 / ref_tokens as f64;
    eprintln!(
        "matches={matches} substitutions={subs} deletions={dels} insertions={ins} reference-tokens={ref_tokens}"
    );
    println!("{rate:.4}");
    Ok(())
}

fn run_bleu(args: &ScoreArgs, ctx: &Resolved, normalize: bool) -> Result<(), AppError> {
    let section = &ctx.config.score;
    let order = args.order.or(section.order).unwrap_or(DEFAULT_BLEU_ORDER);
    let smoothing = parse_bleu_smoothing(
        args.smoothing.as_deref().or(section.smoothing.as_deref()),
        args.floor.or(section.floor),
    )?;

    let hyp_lines = read_lines(&args.hyp)?;
    let mut refs: Vec<Vec<Vec<String>>> = vec![Vec::new(); hyp_lines.len()];
    for path in &args.refs {
        let lines = read_lines(path)?;
        if lines.len() != hyp_lines.len() {
            return Err(AppError::Validation(format!(
                "{}: reference and hypothesis line counts differ ({} vs {})",
                path.display(),
                lines.len(),
                hyp_lines.len()
            )));
        }
        for (segment, line) in lines.iter().enumerate() {
            refs[segment].push(line_tokens(line, normalize));
        }
    }
    let hyps: Vec<Vec<String>> = hyp_lines
        .iter()
        .map(|l| line_tokens(l, normalize))
        .collect();

    let score = corpus_bleu(&refs, &hyps, order, smoothing)?;
    let precisions: Vec<String> = score.precisions.iter().map(|p| format!("{p:.4}")).collect();
    eprintln!(
        "precisions=[{}] brevity-penalty={:.4} hyp-tokens={} ref-tokens={}",
        precisions.join(", "),
        score.brevity_penalty,
        score.hyp_len,
        score.ref_len
    );
    println!("{:.4}", score.bleu);
    Ok(())
}

pub fn run_score(args: &ScoreArgs, ctx: &Resolved) -> Result<(), AppError> {
    let normalize = args.normalize || ctx.config.score.normalize.unwrap_or(false);
    match args.metric.as_str() {
        "wer" => run_wer(args, normalize),
        "bleu" => run_bleu(args, ctx, normalize),
        other => Err(AppError::Validation(format!(
            "unknown metric '{other}' (expected wer or bleu)"
        ))),
    }
}
