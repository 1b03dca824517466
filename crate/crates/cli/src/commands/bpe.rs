//! `learn-bpe` and `apply-bpe`. Applying is line-parallel under `--jobs`;
//! shards are contiguous and re-joined in order, so the output is
//! byte-identical for every job count.

use std::thread;

use stp_core::subword::{apply_bpe, learn_bpe, normalize_asr_text, word_frequencies, MergeTable};

use crate::args::{ApplyBpeArgs, LearnBpeArgs};
use crate::error::AppError;
use crate::util::{read_input_lines, read_lines, write_lines};
use crate::Resolved;

pub const DEFAULT_BPE_MERGES: usize = 16_000;

fn maybe_normalize(lines: Vec<String>, normalize: bool) -> Vec<String> {
    if normalize {
        lines.iter().map(|l| normalize_asr_text(l)).collect()
    } else {
        lines
    }
}

pub fn run_learn_bpe(args: &LearnBpeArgs, ctx: &Resolved) -> Result<(), AppError> {
    let section = &ctx.config.bpe;
    let merges = args.merges.or(section.merges).unwrap_or(DEFAULT_BPE_MERGES);
    let normalize = args.normalize || section.normalize.unwrap_or(false);
    let lines = maybe_normalize(read_lines(&args.corpus)?, normalize);
    let freqs = word_frequencies(lines.iter().map(String::as_str));
    let table = learn_bpe(&freqs, merges);
    table.save_file(&args.out)?;
    Ok(())
}

pub fn run_apply_bpe(args: &ApplyBpeArgs, ctx: &Resolved) -> Result<(), AppError> {
    let normalize = args.normalize || ctx.config.bpe.normalize.unwrap_or(false);
    let mut table = MergeTable::load_file(&args.merges)?;
    if let Some(n) = args.merge_ops {
        table = table.truncated(n);
    }
    let lines = maybe_normalize(read_input_lines(args.input.as_ref())?, normalize);

    let shard = lines.len().div_ceil(ctx.jobs.max(1)).max(1);
    let segmented: Vec<String> = thread::scope(|scope| {
        let handles: Vec<_> = lines
            .chunks(shard)
            .map(|chunk| {
                scope.spawn(|| -> Vec<String> {
                    chunk
                        .iter()
                        .map(|l| apply_bpe(&table, l).join(" "))
                        .collect()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("bpe shard panicked"))
            .collect()
    });

    write_lines(args.out.as_ref(), &segmented)
}
