//! Shared I/O helpers: line readers, stdout-or-file writers, and parsers
//! for the small string enums the flags accept.

use std::fs;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use stp_core::ngram::{NGramLM, Smoothing};
use stp_core::search::{make_ngram_scorer, NgramScorer};
use stp_core::segio::SegmentFormat;

use crate::error::AppError;

/// Reads a whole text file into lines (without terminators). A trailing
/// newline does not produce an empty final line.
pub fn read_lines(path: &Path) -> Result<Vec<String>, AppError> {
    let text = fs::read_to_string(path).map_err(|e| AppError::io_at(path, e))?;
    Ok(text.lines().map(str::to_string).collect())
}

/// Reads lines from a file, or from stdin when no path is given.
pub fn read_input_lines(path: Option<&PathBuf>) -> Result<Vec<String>, AppError> {
    match path {
        Some(p) => read_lines(p),
        None => {
            let mut text = String::new();
            io::stdin().read_to_string(&mut text)?;
            Ok(text.lines().map(str::to_string).collect())
        }
    }
}

/// A buffered writer on the given file, or on stdout when no path is given.
pub fn open_output(path: Option<&PathBuf>) -> Result<Box<dyn Write>, AppError> {
    match path {
        Some(p) => {
            let file = fs::File::create(p).map_err(|e| AppError::io_at(p, e))?;
            Ok(Box::new(BufWriter::new(file)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

/// Writes one line per item to `path` or stdout.
pub fn write_lines<S: AsRef<str>>(path: Option<&PathBuf>, lines: &[S]) -> Result<(), AppError> {
    let mut out = open_output(path)?;
    for line in lines {
        writeln!(out, "{}", line.as_ref())?;
    }
    out.flush()?;
    Ok(())
}

pub fn parse_segment_format(name: Option<&str>) -> Result<SegmentFormat, AppError> {
    match name.unwrap_or("kaldi").parse::<SegmentFormat>() {
        Ok(format) => Ok(format),
        Err(err) => Err(AppError::Validation(err.to_string())),
    }
}

/// Parses an LM smoothing name; `k` is only accepted with `add-k`.
pub fn parse_smoothing(name: Option<&str>, k: Option<f64>) -> Result<Smoothing, AppError> {
    match name.unwrap_or("kneser-ney") {
        "kneser-ney" | "kneser_ney" => {
            if k.is_some() {
                return Err(AppError::Validation(
                    "--k only applies to add-k smoothing".into(),
                ));
            }
            Ok(Smoothing::InterpolatedKneserNey)
        }
        "add-k" | "add_k" => Ok(Smoothing::AddK(k.unwrap_or(0.1))),
        other => Err(AppError::Validation(format!(
            "unknown smoothing '{other}' (expected kneser-ney or add-k)"
        ))),
    }
}

pub fn load_lm(path: &Path) -> Result<NGramLM, AppError> {
    let file = fs::File::open(path).map_err(|e| AppError::io_at(path, e))?;
    NGramLM::load(io::BufReader::new(file))
        .map_err(|e| AppError::from(e))
        .map_err(|e| match e {
            AppError::Validation(msg) => AppError::Validation(format!("{}: {msg}", path.display())),
            io => io,
        })
}

/// Builds a scorer from a `kind:path` spec; `ngram:` is the only kind.
pub fn load_scorer(spec: &str) -> Result<NgramScorer, AppError> {
    let (kind, path) = spec.split_once(':').ok_or_else(|| {
        AppError::Validation(format!("scorer spec '{spec}' is not of the form kind:path"))
    })?;
    if kind != "ngram" {
        return Err(AppError::Validation(format!(
            "unknown scorer kind '{kind}' (expected ngram)"
        )));
    }
    let lm = load_lm(Path::new(path))?;
    Ok(make_ngram_scorer(Arc::new(lm), None))
}

/// Splits a line into whitespace tokens.
pub fn tokens(line: &str) -> Vec<String> {
    line.split_whitespace().map(str::to_string).collect()
}
