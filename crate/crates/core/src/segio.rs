//! Reading and writing segment lists in common interchange formats:
//! Kaldi-style `segments` files, RTTM speaker rows, and line-delimited JSON.
//!
//! Text formats carry seconds; conversion to 10-ms frames rounds half away
//! from zero, and writing prints two decimals, so write-then-read is the
//! identity on frame values.

use crate::segments::{validate_segments, Segment, SegmentError, SegmentList, FRAMES_PER_SECOND};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use thiserror::Error;

/// On-disk segment representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentFormat {
    /// `<utt-id> <rec-id> <start-seconds> <end-seconds>` per line.
    Kaldi,
    /// `SPEAKER <rec-id> 1 <onset-seconds> <duration-seconds> ...` per line.
    Rttm,
    /// One JSON object per line with `rec_id`, `start_frames`, `end_frames`.
    Jsonl,
}

impl FromStr for SegmentFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "kaldi" => Ok(Self::Kaldi),
            "rttm" => Ok(Self::Rttm),
            "jsonl" => Ok(Self::Jsonl),
            other => Err(format!(
                "unknown segment format '{other}' (expected kaldi, rttm, or jsonl)"
            )),
        }
    }
}

impl fmt::Display for SegmentFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Kaldi => "kaldi",
            Self::Rttm => "rttm",
            Self::Jsonl => "jsonl",
        })
    }
}

/// Errors from segment file parsing.
#[derive(Debug, Error)]
pub enum SegIoError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Invalid(#[from] SegmentError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Converts seconds to 10-ms frames, rounding half away from zero.
#[must_use]
pub fn seconds_to_frames(seconds: f64) -> u64 {
    (seconds * FRAMES_PER_SECOND as f64).round() as u64
}

/// Converts 10-ms frames to seconds.
#[must_use]
pub fn frames_to_seconds(frames: u64) -> f64 {
    frames as f64 / FRAMES_PER_SECOND as f64
}

#[derive(Serialize, Deserialize)]
struct JsonlRow {
    rec_id: String,
    start_frames: u64,
    end_frames: u64,
}

fn parse_seconds(field: &str, line: usize, what: &str) -> Result<f64, SegIoError> {
    let value: f64 = field.parse().map_err(|_| SegIoError::Parse {
        line,
        message: format!("invalid {what} '{field}'"),
    })?;
    if !value.is_finite() || value < 0.0 {
        return Err(SegIoError::Parse {
            line,
            message: format!("{what} must be finite and non-negative, got '{field}'"),
        });
    }
    Ok(value)
}

/// Parses a segment file from a reader; see [`SegmentFormat`] for layouts.
///
/// All rows must share one recording id, which becomes the list's id.
///
/// # Errors
/// [`SegIoError::Parse`] with a 1-based line number for malformed rows;
/// validation errors are delegated to [`validate_segments`].
pub fn parse_segments(
    reader: impl BufRead,
    format: SegmentFormat,
) -> Result<SegmentList, SegIoError> {
    let mut raw: Vec<Segment> = Vec::new();
    let mut rec_id: Option<String> = None;
    let mut check_rec = |id: String, line: usize| -> Result<(), SegIoError> {
        match &rec_id {
            None => {
                rec_id = Some(id);
                Ok(())
            }
            Some(existing) if *existing == id => Ok(()),
            Some(existing) => Err(SegIoError::Parse {
                line,
                message: format!("recording id '{id}' conflicts with earlier '{existing}'"),
            }),
        }
    };
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let (rec, start, end) = match format {
            SegmentFormat::Kaldi => {
                if fields.len() != 4 {
                    return Err(SegIoError::Parse {
                        line: lineno,
                        message: format!("expected 4 fields, got {}", fields.len()),
                    });
                }
                let start = parse_seconds(fields[2], lineno, "start time")?;
                let end = parse_seconds(fields[3], lineno, "end time")?;
                (
                    fields[1].to_string(),
                    seconds_to_frames(start),
                    seconds_to_frames(end),
                )
            }
            SegmentFormat::Rttm => {
                if fields.len() < 5 || fields[0] != "SPEAKER" {
                    return Err(SegIoError::Parse {
                        line: lineno,
                        message: "expected 'SPEAKER <rec> <chan> <onset> <duration> ...'".into(),
                    });
                }
                let onset = parse_seconds(fields[3], lineno, "onset")?;
                let duration = parse_seconds(fields[4], lineno, "duration")?;
                (
                    fields[1].to_string(),
                    seconds_to_frames(onset),
                    seconds_to_frames(onset + duration),
                )
            }
            SegmentFormat::Jsonl => {
                let row: JsonlRow = serde_json::from_str(&line).map_err(|e| SegIoError::Parse {
                    line: lineno,
                    message: e.to_string(),
                })?;
                (row.rec_id, row.start_frames, row.end_frames)
            }
        };
        check_rec(rec, lineno)?;
        if start >= end {
            return Err(SegIoError::Parse {
                line: lineno,
                message: format!("empty interval: start frame {start} >= end frame {end}"),
            });
        }
        raw.push(Segment { start, end });
    }
    let mut list = validate_segments(raw)?;
    if let Some(id) = rec_id {
        list = list.with_recording_id(id);
    }
    Ok(list)
}

/// Reads a segment file from disk; see [`parse_segments`].
pub fn read_segments(
    path: impl AsRef<Path>,
    format: SegmentFormat,
) -> Result<SegmentList, SegIoError> {
    parse_segments(BufReader::new(File::open(path)?), format)
}

/// Writes a segment list in the given format. A list without a recording id
/// is written under the id `rec`.
pub fn write_segments(
    mut writer: impl Write,
    format: SegmentFormat,
    segs: &SegmentList,
) -> io::Result<()> {
    let rec = segs.recording_id().unwrap_or("rec");
    for seg in segs.iter() {
        match format {
            SegmentFormat::Kaldi => {
                writeln!(
                    writer,
                    "{rec}-{:07}-{:07} {rec} {:.2} {:.2}",
                    seg.start,
                    seg.end,
                    frames_to_seconds(seg.start),
                    frames_to_seconds(seg.end)
                )?;
            }
            SegmentFormat::Rttm => {
                writeln!(
                    writer,
                    "SPEAKER {rec} 1 {:.2} {:.2} <NA> <NA> speech <NA> <NA>",
                    frames_to_seconds(seg.start),
                    frames_to_seconds(seg.duration())
                )?;
            }
            SegmentFormat::Jsonl => {
                let row = JsonlRow {
                    rec_id: rec.to_string(),
                    start_frames: seg.start,
                    end_frames: seg.end,
                };
                writeln!(writer, "{}", serde_json::to_string(&row)?)?;
            }
        }
    }
    Ok(())
}

/// Writes a segment list to a file; see [`write_segments`].
pub fn write_segments_file(
    path: impl AsRef<Path>,
    format: SegmentFormat,
    segs: &SegmentList,
) -> io::Result<()> {
    let mut file = File::create(path)?;
    write_segments(&mut file, format, segs)?;
    file.flush()
}
