//! `decode`: beam search over one n-gram scorer or a uniform ensemble.
//! Each input line is a context prefix; output rows are
//! `line<TAB>rank<TAB>score<TAB>tokens`.

use std::io::Write;
use std::sync::Arc;

use stp_core::ngram::NGramLM;
use stp_core::search::{
    beam_search, ensemble, make_ngram_scorer, DecodeConfig, Scorer, Token, DEFAULT_ASR_BEAM,
};

use crate::args::DecodeArgs;
use crate::error::AppError;
use crate::util::{load_lm, open_output, read_input_lines, tokens};
use crate::Resolved;

pub const DEFAULT_DECODE_MAX_LEN: usize = 20;

pub fn run_decode(args: &DecodeArgs, ctx: &Resolved) -> Result<(), AppError> {
    let section = &ctx.config.decode;
    let beam = args.beam.or(section.beam).unwrap_or(DEFAULT_ASR_BEAM);
    let max_len = args
        .max_len
        .or(section.max_len)
        .unwrap_or(DEFAULT_DECODE_MAX_LEN);
    let length_norm = args.length_norm || section.length_norm.unwrap_or(false);
    let n_best = args.n_best.or(section.n_best).unwrap_or(1);
    if n_best == 0 {
        return Err(AppError::Validation("--n-best must be >= 1".into()));
    }

    let lms: Vec<Arc<NGramLM>> = args
        .lms
        .iter()
        .map(|path| load_lm(path).map(Arc::new))
        .collect::<Result<_, _>>()?;
    let members: Vec<Box<dyn Scorer>> = lms
        .iter()
        .map(|lm| Box::new(make_ngram_scorer(Arc::clone(lm), None)) as Box<dyn Scorer>)
        .collect();
    let scorer = ensemble(members)?;
    let vocab_lm = &lms[0];

    let mut cfg = DecodeConfig::new(beam, max_len, vocab_lm.end_id());
    cfg.length_norm = length_norm;

    let lines = read_input_lines(args.input.as_ref())?;
    let mut out = open_output(args.out.as_ref())?;
    for (line_no, line) in lines.iter().enumerate() {
        let context = vocab_lm.tokens_to_ids(&tokens(line));
        let hypotheses = beam_search(&scorer, &context, &cfg)?;
        for (rank, hyp) in hypotheses.iter().take(n_best).enumerate() {
            let mut ids: &[Token] = &hyp.tokens;
            if ids.last() == Some(&cfg.end_symbol) {
                ids = &ids[..ids.len() - 1];
            }
            let text: Vec<&str> = ids.iter().map(|&id| vocab_lm.token(id)).collect();
            writeln!(
                out,
                "{}\t{}\t{:.6}\t{}",
                line_no + 1,
                rank + 1,
                hyp.log_score,
                text.join(" ")
            )?;
        }
    }
    out.flush()?;
    Ok(())
}
