//! Mono audio buffers with samples in [-1, 1] and 16-bit PCM WAV I/O.

use std::path::Path;
use thiserror::Error;

/// Sample rates accepted by [`AudioBuffer`]; all divide evenly into 10-ms
/// frames.
pub const SUPPORTED_SAMPLE_RATES: [u32; 4] = [8_000, 16_000, 44_100, 48_000];

/// Errors from audio construction and WAV I/O.
#[derive(Debug, Error)]
pub enum AudioError {
    #[error("unsupported sample rate {0} Hz (expected one of {SUPPORTED_SAMPLE_RATES:?})")]
    UnsupportedSampleRate(u32),
    #[error("expected mono audio, got {0} channels")]
    NotMono(u16),
    #[error("expected 16-bit integer PCM, got {bits}-bit {format}")]
    UnsupportedFormat { bits: u16, format: &'static str },
    #[error("audio is empty")]
    EmptyAudio,
    #[error("wav error: {0}")]
    Wav(#[from] hound::Error),
}

/// A mono recording: real-valued samples in [-1, 1] at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    samples: Vec<f32>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Builds a buffer, rejecting unsupported sample rates.
    pub fn new(samples: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if !SUPPORTED_SAMPLE_RATES.contains(&sample_rate) {
            return Err(AudioError::UnsupportedSampleRate(sample_rate));
        }
        Ok(Self {
            samples,
            sample_rate,
        })
    }

    /// Internal constructor for slices of an already validated buffer.
    pub(crate) fn from_validated(samples: Vec<f32>, sample_rate: u32) -> Self {
        Self {
            samples,
            sample_rate,
        }
    }

    #[must_use]
    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    #[must_use]
    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Samples per 10-ms frame.
    #[must_use]
    pub fn samples_per_frame(&self) -> usize {
        (self.sample_rate / 100) as usize
    }

    /// Whole 10-ms frames contained in the buffer; a trailing partial frame
    /// does not count.
    #[must_use]
    pub fn duration_frames(&self) -> u64 {
        (self.samples.len() / self.samples_per_frame()) as u64
    }
}

/// Reads a mono 16-bit PCM WAV file into `[-1, 1]` samples.
///
/// # Errors
/// [`AudioError`] for I/O problems, non-mono input, or non-PCM16 encodings.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.channels != 1 {
        return Err(AudioError::NotMono(spec.channels));
    }
    if spec.sample_format != hound::SampleFormat::Int || spec.bits_per_sample != 16 {
        let format = match spec.sample_format {
            hound::SampleFormat::Int => "integer",
            hound::SampleFormat::Float => "float",
        };
        return Err(AudioError::UnsupportedFormat {
            bits: spec.bits_per_sample,
            format,
        });
    }
    let samples = reader
        .into_samples::<i16>()
        .map(|s| s.map(|v| f32::from(v) / 32_768.0))
        .collect::<Result<Vec<f32>, _>>()?;
    AudioBuffer::new(samples, spec.sample_rate)
}

/// Writes a buffer as mono 16-bit PCM WAV, clamping samples to [-1, 1].
pub fn write_wav(path: impl AsRef<Path>, audio: &AudioBuffer) -> Result<(), AudioError> {
    let spec = hound::WavSpec {
        channels: 1,
        sample_rate: audio.sample_rate(),
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec)?;
    for &s in audio.samples() {
        let v = (s.clamp(-1.0, 1.0) * 32_767.0).round() as i16;
        writer.write_sample(v)?;
    }
    writer.finalize()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unsupported_rate() {
        let err = AudioBuffer::new(vec![0.0], 11_025).unwrap_err();
        assert!(matches!(err, AudioError::UnsupportedSampleRate(11_025)));
    }

    #[test]
    fn frame_arithmetic() {
        let audio = AudioBuffer::new(vec![0.0; 16_080], 16_000).unwrap();
        assert_eq!(audio.samples_per_frame(), 160);
        // 16080 samples = 100 whole frames plus half a frame.
        assert_eq!(audio.duration_frames(), 100);
    }

    #[test]
    fn wav_round_trip_preserves_samples_to_pcm_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let samples: Vec<f32> = (0..1_600).map(|i| (i as f32 / 200.0).sin() * 0.8).collect();
        let audio = AudioBuffer::new(samples.clone(), 16_000).unwrap();
        write_wav(&path, &audio).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), 16_000);
        assert_eq!(back.samples().len(), samples.len());
        // Quantization maps s to round(s * 32767) / 32768, so the error
        // bound is (|s| + 0.5) / 32768.
        for (a, b) in back.samples().iter().zip(&samples) {
            assert!((a - b).abs() < 1.5 / 32_768.0);
        }
    }

    #[test]
    fn rejects_stereo_wav() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stereo.wav");
        let spec = hound::WavSpec {
            channels: 2,
            sample_rate: 16_000,
            bits_per_sample: 16,
            sample_format: hound::SampleFormat::Int,
        };
        let mut w = hound::WavWriter::create(&path, spec).unwrap();
        for _ in 0..100 {
            w.write_sample(0i16).unwrap();
            w.write_sample(0i16).unwrap();
        }
        w.finalize().unwrap();
        assert!(matches!(read_wav(&path), Err(AudioError::NotMono(2))));
    }
}
