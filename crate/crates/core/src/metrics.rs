//! Evaluation metrics: word error rate with edit alignments, and corpus
//! BLEU with multi-reference clipping and brevity penalty.
//!
//! Both metrics are deterministic: WER backtraces with a fixed operation
//! preference (match, substitution, deletion, insertion) and BLEU aggregates
//! corpus counts in segment order.

use std::collections::HashMap;
use thiserror::Error;

/// Default maximum n-gram order for BLEU.
pub const DEFAULT_BLEU_ORDER: usize = 4;

/// Errors from metric computation.
#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("reference and hypothesis counts differ ({refs} vs {hyps})")]
    LengthMismatch { refs: usize, hyps: usize },
    #[error("segment {segment} has no references")]
    EmptyReferenceSet { segment: usize },
    #[error("invalid smoothing: {0}")]
    InvalidSmoothing(String),
}

/// One step of an edit alignment, in reference/hypothesis order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EditOp {
    Match,
    Substitute,
    Delete,
    Insert,
}

/// Minimal-cost alignment between a reference and a hypothesis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EditAlignment {
    pub matches: usize,
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub path: Vec<EditOp>,
}

impl EditAlignment {
    /// Total edit distance.
    #[must_use]
    pub fn distance(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }
}

/// Word error rate: minimal edit distance divided by reference length, with
/// the alignment that produced it. Backtrace ties prefer match, then
/// substitution, then deletion, then insertion.
///
/// # Errors
/// [`MetricsError::EmptyReference`].
pub fn wer<S: AsRef<str>>(
    reference: &[S],
    hypothesis: &[S],
) -> Result<(f64, EditAlignment), MetricsError> {
    if reference.is_empty() {
        return Err(MetricsError::EmptyReference);
    }
    let r = reference.len();
    let h = hypothesis.len();
    // d[i][j]: distance between the first i reference and j hypothesis tokens.
    let mut d = vec![vec![0usize; h + 1]; r + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=h {
        d[0][j] = j;
    }
    for i in 1..=r {
        for j in 1..=h {
            let same = reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
            let diag = d[i - 1][j - 1] + usize::from(!same);
            let del = d[i - 1][j] + 1;
            let ins = d[i][j - 1] + 1;
            d[i][j] = diag.min(del).min(ins);
        }
    }
    let mut path = Vec::with_capacity(r + h);
    let (mut i, mut j) = (r, h);
    while i > 0 || j > 0 {
        let here = d[i][j];
        let same = i > 0 && j > 0 && reference[i - 1].as_ref() == hypothesis[j - 1].as_ref();
        if same && here == d[i - 1][j - 1] {
            path.push(EditOp::Match);
            i -= 1;
            j -= 1;
        } else if i > 0 && j > 0 && here == d[i - 1][j - 1] + 1 {
            path.push(EditOp::Substitute);
            i -= 1;
            j -= 1;
        } else if i > 0 && here == d[i - 1][j] + 1 {
            path.push(EditOp::Delete);
            i -= 1;
        } else {
            path.push(EditOp::Insert);
            j -= 1;
        }
    }
    path.reverse();
    let mut alignment = EditAlignment {
        matches: 0,
        substitutions: 0,
        deletions: 0,
        insertions: 0,
        path,
    };
    for op in &alignment.path {
        match op {
            EditOp::Match => alignment.matches += 1,
            EditOp::Substitute => alignment.substitutions += 1,
            EditOp::Delete => alignment.deletions += 1,
            EditOp::Insert => alignment.insertions += 1,
        }
    }
    debug_assert_eq!(alignment.distance(), d[r][h]);
    let rate = d[r][h] as f64 / r as f64;
    Ok((rate, alignment))
}

/// BLEU smoothing. `Floor(eps)` replaces zero clipped counts with `eps`
/// (0 < eps < 1) in the precision numerator; `None` lets any zero precision
/// zero the score, matching standard corpus BLEU.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BleuSmoothing {
    None,
    Floor(f64),
}

/// Corpus BLEU with its components. Orders that produced no hypothesis
/// n-grams anywhere report precision 0 and are excluded from the geometric
/// mean.
#[derive(Debug, Clone, PartialEq)]
pub struct BleuScore {
    pub bleu: f64,
    pub precisions: Vec<f64>,
    pub brevity_penalty: f64,
    pub hyp_len: u64,
    pub ref_len: u64,
}

fn ngram_counts<'a>(tokens: &'a [String], n: usize) -> HashMap<&'a [String], u64> {
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for gram in tokens.windows(n) {
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    counts
}

/// Case-sensitive corpus BLEU up to `max_n`-grams. Per segment, hypothesis
/// n-gram counts are clipped against the maximum count over that segment's
/// references, and the brevity penalty uses the reference length closest to
/// the hypothesis (ties toward the shorter reference).
///
/// # Errors
/// [`MetricsError::LengthMismatch`] (also for empty corpora);
/// [`MetricsError::EmptyReferenceSet`]; [`MetricsError::InvalidSmoothing`].
pub fn corpus_bleu(
    refs: &[Vec<Vec<String>>],
    hyps: &[Vec<String>],
    max_n: usize,
    smoothing: BleuSmoothing,
) -> Result<BleuScore, MetricsError> {
    if refs.len() != hyps.len() || hyps.is_empty() {
        return Err(MetricsError::LengthMismatch {
            refs: refs.len(),
            hyps: hyps.len(),
        });
    }
    if max_n == 0 {
        return Err(MetricsError::InvalidSmoothing("max_n must be >= 1".into()));
    }
    if let BleuSmoothing::Floor(eps) = smoothing {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(MetricsError::InvalidSmoothing(format!(
                "floor epsilon must be in (0, 1), got {eps}"
            )));
        }
    }
    let mut clipped = vec![0u64; max_n];
    let mut totals = vec![0u64; max_n];
    let mut hyp_len = 0u64;
    let mut ref_len = 0u64;
    for (segment, (segment_refs, hyp)) in refs.iter().zip(hyps).enumerate() {
        if segment_refs.is_empty() {
            return Err(MetricsError::EmptyReferenceSet { segment });
        }
        hyp_len += hyp.len() as u64;
        let closest = segment_refs
            .iter()
            .map(|r| r.len())
            .min_by_key(|&len| (len.abs_diff(hyp.len()), len))
            .expect("non-empty reference set");
        ref_len += closest as u64;
        for n in 1..=max_n {
            let hyp_counts = ngram_counts(hyp, n);
            let mut best_ref: HashMap<&[String], u64> = HashMap::new();
            for reference in segment_refs {
                for (gram, count) in ngram_counts(reference, n) {
                    let slot = best_ref.entry(gram).or_insert(0);
                    *slot = (*slot).max(count);
                }
            }
            for (gram, count) in &hyp_counts {
                totals[n - 1] += count;
                clipped[n - 1] += (*count).min(best_ref.get(gram).copied().unwrap_or(0));
            }
        }
    }
    let mut precisions = vec![0.0; max_n];
    let mut log_sum = 0.0;
    let mut active = 0usize;
    let mut zero_precision = false;
    for n in 0..max_n {
        if totals[n] == 0 {
            continue;
        }
        let numerator = match smoothing {
            BleuSmoothing::None => clipped[n] as f64,
            BleuSmoothing::Floor(eps) => (clipped[n] as f64).max(eps),
        };
        let p = numerator / totals[n] as f64;
        precisions[n] = p;
        active += 1;
        if p == 0.0 {
            zero_precision = true;
        } else {
            log_sum += p.ln();
        }
    }
    let brevity_penalty = if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    };
    let bleu = if zero_precision || active == 0 || hyp_len == 0 {
        0.0
    } else {
        (log_sum / active as f64).exp() * brevity_penalty
    };
    Ok(BleuScore {
        bleu,
        precisions,
        brevity_penalty,
        hyp_len,
        ref_len,
    })
}
