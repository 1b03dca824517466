//! Optional TOML config file. Every key mirrors a flag; flags win over
//! config values, config values win over built-in defaults. Unknown keys
//! anywhere are rejected at load. The schema version is the second half of
//! [`crate::args::VERSION`].

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::AppError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub vad: VadSection,
    #[serde(default)]
    pub merge: MergeSection,
    #[serde(default)]
    pub filter: FilterSection,
    #[serde(default)]
    pub lm: LmSection,
    #[serde(default)]
    pub bpe: BpeSection,
    #[serde(default)]
    pub decode: DecodeSection,
    #[serde(default)]
    pub seqkd: SeqKdSection,
    #[serde(default)]
    pub score: ScoreSection,
}

impl FileConfig {
    /// Loads and parses a config file; a missing file is an I/O error,
    /// malformed TOML or unknown keys are validation errors.
    pub fn load(path: &Path) -> Result<Self, AppError> {
        let text = fs::read_to_string(path).map_err(|e| AppError::io_at(path, e))?;
        toml::from_str(&text)
            .map_err(|e| AppError::Validation(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VadSection {
    pub frame_ms: Option<u32>,
    pub padding_ms: Option<u32>,
    pub aggressiveness: Option<u8>,
    pub energy_floor_db: Option<f64>,
    pub format: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MergeSection {
    pub m_dur: Option<u64>,
    pub m_int: Option<u64>,
    pub format: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FilterSection {
    pub ppl_threshold: Option<f64>,
    pub top_k: Option<usize>,
    pub ce_diff: Option<f64>,
    pub score_both_sides: Option<bool>,
    pub src_lang: Option<String>,
    pub tgt_lang: Option<String>,
    pub max_tokens: Option<usize>,
    pub max_ratio: Option<f64>,
    pub blocked: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LmSection {
    pub order: Option<usize>,
    pub smoothing: Option<String>,
    pub k: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BpeSection {
    pub merges: Option<usize>,
    pub normalize: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecodeSection {
    pub beam: Option<usize>,
    pub max_len: Option<usize>,
    pub length_norm: Option<bool>,
    pub n_best: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeqKdSection {
    pub beam: Option<usize>,
    pub max_len: Option<usize>,
    pub max_frames: Option<u64>,
    pub max_chars: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreSection {
    pub order: Option<usize>,
    pub smoothing: Option<String>,
    pub floor: Option<f64>,
    pub normalize: Option<bool>,
}
