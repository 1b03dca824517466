//! Exit-code-aware error type. Validation problems (bad flags, malformed
//! data, range violations) exit 1; I/O failures exit 2.

use std::fmt;
use std::io;
use std::path::Path;

use stp_core::audio::AudioError;
use stp_core::filter::FilterError;
use stp_core::langid::LangIdError;
use stp_core::metrics::MetricsError;
use stp_core::ngram::LmError;
use stp_core::search::SearchError;
use stp_core::segio::SegIoError;
use stp_core::segments::SegmentError;
use stp_core::seqkd::SeqKdError;
use stp_core::subword::SubwordError;
use stp_core::vad::VadError;

pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;

#[derive(Debug)]
pub enum AppError {
    Validation(String),
    Io(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Validation(_) => EXIT_VALIDATION,
            AppError::Io(_) => EXIT_IO,
        }
    }

    /// Wraps an I/O failure with the path it happened on.
    pub fn io_at(path: &Path, err: io::Error) -> Self {
        AppError::Io(format!("{}: {err}", path.display()))
    }
}

impl fmt::Display for AppError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AppError::Validation(msg) | AppError::Io(msg) => f.write_str(msg),
        }
    }
}

impl From<io::Error> for AppError {
    fn from(err: io::Error) -> Self {
        AppError::Io(err.to_string())
    }
}

impl From<serde_json::Error> for AppError {
    fn from(err: serde_json::Error) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl From<AudioError> for AppError {
    fn from(err: AudioError) -> Self {
        match err {
            AudioError::Wav(hound::Error::IoError(e)) => AppError::Io(e.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<SegIoError> for AppError {
    fn from(err: SegIoError) -> Self {
        match err {
            SegIoError::Io(e) => AppError::Io(e.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<LmError> for AppError {
    fn from(err: LmError) -> Self {
        match err {
            LmError::Io(e) => AppError::Io(e.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<LangIdError> for AppError {
    fn from(err: LangIdError) -> Self {
        match err {
            LangIdError::Io(e) => AppError::Io(e.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<SubwordError> for AppError {
    fn from(err: SubwordError) -> Self {
        match err {
            SubwordError::Io(e) => AppError::Io(e.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<FilterError> for AppError {
    fn from(err: FilterError) -> Self {
        match err {
            FilterError::LangId(inner) => inner.into(),
            FilterError::Lm(inner) => inner.into(),
            other => AppError::Validation(other.to_string()),
        }
    }
}

impl From<VadError> for AppError {
    fn from(err: VadError) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl From<SegmentError> for AppError {
    fn from(err: SegmentError) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl From<SearchError> for AppError {
    fn from(err: SearchError) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl From<SeqKdError> for AppError {
    fn from(err: SeqKdError) -> Self {
        AppError::Validation(err.to_string())
    }
}

impl From<MetricsError> for AppError {
    fn from(err: MetricsError) -> Self {
        AppError::Validation(err.to_string())
    }
}
