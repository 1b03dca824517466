//! `train-lm` and `train-langid`: build the model files the other
//! subcommands consume.

use std::fs;
use std::io::BufWriter;

use stp_core::langid::train_langid;
use stp_core::ngram::NGramLM;

use crate::args::{TrainLangidArgs, TrainLmArgs};
use crate::error::AppError;
use crate::util::{parse_smoothing, read_lines};
use crate::Resolved;

pub const DEFAULT_LM_ORDER: usize = 4;

pub fn run_train_lm(args: &TrainLmArgs, ctx: &Resolved) -> Result<(), AppError> {
    let section = &ctx.config.lm;
    let order = args.order.or(section.order).unwrap_or(DEFAULT_LM_ORDER);
    let smoothing = parse_smoothing(
        args.smoothing.as_deref().or(section.smoothing.as_deref()),
        args.k.or(section.k),
    )?;
    let lines = read_lines(&args.corpus)?;
    let lm = NGramLM::train_from_lines(lines.iter().map(String::as_str), order, smoothing)?;
    let file = fs::File::create(&args.out).map_err(|e| AppError::io_at(&args.out, e))?;
    lm.save(BufWriter::new(file))?;
    Ok(())
}

pub fn run_train_langid(args: &TrainLangidArgs) -> Result<(), AppError> {
    let lines = read_lines(&args.examples)?;
    let mut examples = Vec::with_capacity(lines.len());
    for (idx, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| {
            AppError::Validation(format!(
                "{}:{}: expected 'label<TAB>text'",
                args.examples.display(),
                idx + 1
            ))
        })?;
        examples.push((label.to_string(), text.to_string()));
    }
    let model = train_langid(&examples)?;
    model.save_file(&args.out)?;
    Ok(())
}
