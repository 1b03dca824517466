//! `vad`, `merge-segments`, and `stats`: WAV to segment lists and back.

use std::io::Write;

use serde_json::json;
use stp_core::audio::read_wav;
use stp_core::segio::{read_segments, write_segments};
use stp_core::segments::{merge_segments, segment_stats, MergeParams};
use stp_core::vad::{energy_vad, VadConfig};

use crate::args::{MergeSegmentsArgs, StatsArgs, VadArgs};
use crate::error::AppError;
use crate::util::{open_output, parse_segment_format};
use crate::Resolved;

pub fn run_vad(args: &VadArgs, ctx: &Resolved) -> Result<(), AppError> {
    let section = &ctx.config.vad;
    let defaults = VadConfig::default();
    let config = VadConfig {
        frame_ms: args
            .frame_ms
            .or(section.frame_ms)
            .unwrap_or(defaults.frame_ms),
        padding_ms: args
            .padding_ms
            .or(section.padding_ms)
            .unwrap_or(defaults.padding_ms),
        aggressiveness: args
            .aggressiveness
            .or(section.aggressiveness)
            .unwrap_or(defaults.aggressiveness),
        energy_floor_db: args
            .energy_floor_db
            .or(section.energy_floor_db)
            .unwrap_or(defaults.energy_floor_db),
    };
    let format = parse_segment_format(
        args.format
            .as_deref()
            .or(section.format.as_deref())
            .or(Some("kaldi")),
    )?;
    let audio = read_wav(&args.audio)?;
    let rec_id = match &args.rec_id {
        Some(id) => id.clone(),
        None => args
            .audio
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "rec".to_string()),
    };
    let segments = energy_vad(&audio, &config)?.with_recording_id(rec_id);
    let mut out = open_output(args.out.as_ref())?;
    write_segments(&mut out, format, &segments)?;
    out.flush()?;
    Ok(())
}

pub fn run_merge_segments(args: &MergeSegmentsArgs, ctx: &Resolved) -> Result<(), AppError> {
    let section = &ctx.config.merge;
    let defaults = MergeParams::default();
    let params = MergeParams {
        m_dur: args.m_dur.or(section.m_dur).unwrap_or(defaults.m_dur),
        m_int: args.m_int.or(section.m_int).unwrap_or(defaults.m_int),
    };
    params.validate().map_err(AppError::Validation)?;
    let format = parse_segment_format(args.format.as_deref().or(section.format.as_deref()))?;
    let segments = read_segments(&args.segments, format)?;
    let merged = merge_segments(&segments, &params);
    let mut out = open_output(args.out.as_ref())?;
    write_segments(&mut out, format, &merged)?;
    out.flush()?;
    Ok(())
}

pub fn run_stats(args: &StatsArgs, ctx: &Resolved) -> Result<(), AppError> {
    let format = parse_segment_format(
        args.format
            .as_deref()
            .or(ctx.config.merge.format.as_deref()),
    )?;
    let segments = read_segments(&args.segments, format)?;
    let stats = segment_stats(&segments);
    let report = json!({
        "count": stats.count,
        "total_frames": stats.total_frames,
        "min_duration_frames": stats.min_duration_frames,
        "mean_duration_frames": stats.mean_duration_frames,
        "max_duration_frames": stats.max_duration_frames,
        "min_gap_frames": stats.min_gap_frames,
        "mean_gap_frames": stats.mean_gap_frames,
    });
    let mut out = open_output(args.out.as_ref())?;
    writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    out.flush()?;
    Ok(())
}
