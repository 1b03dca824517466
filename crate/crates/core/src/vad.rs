//! Energy-based voice activity detection and ingestion of segments produced
//! by external VAD tools.
//!
//! The detector is intentionally simple and fully deterministic: it marks
//! frames whose RMS energy rises above an adaptive, noise-floor-relative
//! threshold, then pads and re-unions the resulting runs.

use crate::audio::AudioBuffer;
use crate::segio::{self, SegIoError, SegmentFormat};
use crate::segments::{validate_segments, Segment, SegmentList};
use std::path::Path;
use thiserror::Error;

/// Errors from voice activity detection.
#[derive(Debug, Error)]
pub enum VadError {
    #[error("audio is empty")]
    EmptyAudio,
    #[error("invalid vad config: {0}")]
    InvalidConfig(String),
}

/// Detector parameters. Defaults: 10-ms frames, 150-ms padding, the most
/// aggressive speech margin, and a -60 dB energy floor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VadConfig {
    /// Analysis frame length in milliseconds; must divide 1000.
    pub frame_ms: u32,
    /// Extension applied to each detected run on both sides.
    pub padding_ms: u32,
    /// 0 (permissive) to 3 (aggressive); sets the margin over the noise
    /// floor at 6/9/12/15 dB.
    pub aggressiveness: u8,
    /// Lower bound for the speech threshold in dB full scale, so digital
    /// silence never lifts the threshold to unreachable depths.
    pub energy_floor_db: f64,
}

impl Default for VadConfig {
    fn default() -> Self {
        Self {
            frame_ms: 10,
            padding_ms: 150,
            aggressiveness: 3,
            energy_floor_db: -60.0,
        }
    }
}

impl VadConfig {
    /// Checks field ranges.
    pub fn validate(&self) -> Result<(), VadError> {
        if self.frame_ms == 0 || 1000 % self.frame_ms != 0 {
            return Err(VadError::InvalidConfig(format!(
                "frame_ms must divide 1000, got {}",
                self.frame_ms
            )));
        }
        if self.aggressiveness > 3 {
            return Err(VadError::InvalidConfig(format!(
                "aggressiveness must be 0-3, got {}",
                self.aggressiveness
            )));
        }
        if !self.energy_floor_db.is_finite() {
            return Err(VadError::InvalidConfig(
                "energy_floor_db must be finite".into(),
            ));
        }
        Ok(())
    }

    fn margin_db(&self) -> f64 {
        match self.aggressiveness {
            0 => 6.0,
            1 => 9.0,
            2 => 12.0,
            _ => 15.0,
        }
    }
}

/// Marks speech frames by RMS energy against an adaptive threshold and
/// returns the padded runs as segments in 10-ms frames.
///
/// The threshold is the 10th-percentile frame energy (noise floor) plus an
/// aggressiveness margin, but never below `energy_floor_db`. A trailing
/// partial frame is dropped. Because the threshold is relative to the noise
/// floor, scaling all samples by a positive constant leaves a clean
/// signal's segmentation unchanged.
///
/// # Errors
/// [`VadError::EmptyAudio`] for empty input; [`VadError::InvalidConfig`].
pub fn energy_vad(audio: &AudioBuffer, config: &VadConfig) -> Result<SegmentList, VadError> {
    config.validate()?;
    if audio.is_empty() {
        return Err(VadError::EmptyAudio);
    }
    let samples_per_frame = (audio.sample_rate() as usize * config.frame_ms as usize) / 1000;
    let frames: Vec<f64> = audio
        .samples()
        .chunks_exact(samples_per_frame)
        .map(frame_db)
        .collect();
    if frames.is_empty() {
        return Ok(SegmentList::empty());
    }

    let mut sorted = frames.clone();
    sorted.sort_by(f64::total_cmp);
    let noise_floor = sorted[sorted.len() / 10];
    let threshold = (noise_floor + config.margin_db()).max(config.energy_floor_db);

    // Runs of above-threshold frames, in analysis-frame units.
    let mut runs: Vec<(u64, u64)> = Vec::new();
    let mut start: Option<u64> = None;
    for (i, &db) in frames.iter().enumerate() {
        if db > threshold {
            start.get_or_insert(i as u64);
        } else if let Some(s) = start.take() {
            runs.push((s, i as u64));
        }
    }
    if let Some(s) = start {
        runs.push((s, frames.len() as u64));
    }

    // Pad, convert to 10-ms frames, clip, and union overlaps.
    let factor = config.frame_ms as u64 / 10;
    let total = frames.len() as u64 * factor;
    let pad = (config.padding_ms as u64) / 10;
    let mut merged: Vec<Segment> = Vec::new();
    for (s, e) in runs {
        let lo = (s * factor).saturating_sub(pad);
        let hi = (e * factor + pad).min(total);
        match merged.last_mut() {
            Some(prev) if lo <= prev.end => prev.end = prev.end.max(hi),
            _ => merged.push(Segment { start: lo, end: hi }),
        }
    }
    Ok(validate_segments(merged).expect("padded runs are sorted and unioned"))
}

fn frame_db(frame: &[f32]) -> f64 {
    let energy: f64 = frame.iter().map(|&s| f64::from(s) * f64::from(s)).sum();
    let rms = (energy / frame.len() as f64).sqrt();
    20.0 * rms.max(1e-6).log10()
}

/// Reads segments produced by an external VAD; see [`segio::read_segments`].
pub fn read_external_segments(
    path: impl AsRef<Path>,
    format: SegmentFormat,
) -> Result<SegmentList, SegIoError> {
    segio::read_segments(path, format)
}
