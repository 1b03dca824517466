//! Time-interval model for speech segments and the bottom-up merging pass
//! that joins short neighbouring segments into longer decoding units.
//!
//! All times are in 10-ms frames (100 frames per second).

use crate::audio::AudioBuffer;
use serde::Serialize;
use thiserror::Error;

/// Frames per second implied by the 10-ms frame unit.
pub const FRAMES_PER_SECOND: u64 = 100;

/// Errors from segment construction, validation, and slicing.
#[derive(Debug, Error)]
pub enum SegmentError {
    /// A segment with `start >= end`.
    #[error("empty interval at position {index}: start {start} >= end {end}")]
    EmptyInterval { index: usize, start: u64, end: u64 },
    /// Two segments overlap after sorting by start.
    #[error("segments at positions {index} and {} overlap", index + 1)]
    Overlap { index: usize },
    /// A segment extends past the end of the audio being sliced.
    #[error("segment {index} ends at frame {end} but audio has only {available} frames")]
    OutOfRange {
        index: usize,
        end: u64,
        available: u64,
    },
}

/// A half-open speech interval `[start, end)` in 10-ms frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Segment {
    pub start: u64,
    pub end: u64,
}

impl Segment {
    /// Builds a segment, rejecting empty or inverted intervals.
    pub fn new(start: u64, end: u64) -> Result<Self, SegmentError> {
        if start >= end {
            return Err(SegmentError::EmptyInterval {
                index: 0,
                start,
                end,
            });
        }
        Ok(Self { start, end })
    }

    /// Duration in frames.
    #[must_use]
    pub fn duration(&self) -> u64 {
        self.end - self.start
    }
}

/// A validated, start-sorted, non-overlapping sequence of segments,
/// optionally tied to a recording id.
///
/// Construction goes through [`validate_segments`], so every value of this
/// type upholds the ordering invariants.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct SegmentList {
    segments: Vec<Segment>,
    recording_id: Option<String>,
}

impl SegmentList {
    /// The empty list.
    #[must_use]
    pub fn empty() -> Self {
        Self::default()
    }

    #[must_use]
    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    #[must_use]
    pub fn recording_id(&self) -> Option<&str> {
        self.recording_id.as_deref()
    }

    /// Returns the same list tagged with a recording id.
    #[must_use]
    pub fn with_recording_id(mut self, id: impl Into<String>) -> Self {
        self.recording_id = Some(id.into());
        self
    }

    #[must_use]
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    #[must_use]
    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Segment> {
        self.segments.iter()
    }
}

impl<'a> IntoIterator for &'a SegmentList {
    type Item = &'a Segment;
    type IntoIter = std::slice::Iter<'a, Segment>;

    fn into_iter(self) -> Self::IntoIter {
        self.segments.iter()
    }
}

/// Sorts raw segments by start and checks the list invariants.
///
/// # Errors
/// [`SegmentError::EmptyInterval`] if any `start >= end`;
/// [`SegmentError::Overlap`] if consecutive sorted segments overlap
/// (`end > next.start`). Touching segments (`end == next.start`) are valid.
pub fn validate_segments(raw: Vec<Segment>) -> Result<SegmentList, SegmentError> {
    for (index, seg) in raw.iter().enumerate() {
        if seg.start >= seg.end {
            return Err(SegmentError::EmptyInterval {
                index,
                start: seg.start,
                end: seg.end,
            });
        }
    }
    let mut segments = raw;
    segments.sort_by_key(|s| (s.start, s.end));
    for index in 1..segments.len() {
        if segments[index - 1].end > segments[index].start {
            return Err(SegmentError::Overlap { index: index - 1 });
        }
    }
    Ok(SegmentList {
        segments,
        recording_id: None,
    })
}

/// Duration and gap thresholds for [`merge_segments`], in 10-ms frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MergeParams {
    /// A segment may join the current group only while the grouped duration
    /// stays under this bound.
    pub m_dur: u64,
    /// A segment may join the current group only while the gap to the
    /// previous segment stays under this bound.
    pub m_int: u64,
}

impl MergeParams {
    /// Builds merge thresholds, rejecting zero values.
    pub fn new(m_dur: u64, m_int: u64) -> Result<Self, String> {
        let params = Self { m_dur, m_int };
        params.validate()?;
        Ok(params)
    }

    /// Checks that both thresholds are positive.
    pub fn validate(&self) -> Result<(), String> {
        if self.m_dur == 0 {
            return Err("m_dur must be positive".into());
        }
        if self.m_int == 0 {
            return Err("m_int must be positive".into());
        }
        Ok(())
    }
}

impl Default for MergeParams {
    /// Thresholds for long-context decoding: 20 s duration, 1 s gap.
    fn default() -> Self {
        Self {
            m_dur: 2000,
            m_int: 100,
        }
    }
}

/// Greedily groups consecutive segments left to right.
///
/// A group with open interval `(S, E)` absorbs the next segment `(s, e)`
/// iff `e - S < m_dur` and `s - E < m_int` (both strict). Otherwise the
/// group is emitted as one segment and a new group starts at `(s, e)`.
/// The final open group is always emitted, so the last segment is never
/// dropped. Single-segment and empty inputs are returned unchanged.
///
/// One pass reaches the fixed point: a group boundary arises only where a
/// duration or gap condition fails, and both conditions keep failing
/// between the emitted groups, so re-merging changes nothing.
#[must_use]
pub fn merge_segments(segs: &SegmentList, params: &MergeParams) -> SegmentList {
    let mut merged = Vec::new();
    let mut open: Option<Segment> = None;
    for seg in segs.iter() {
        match open {
            None => open = Some(*seg),
            Some(group) => {
                if seg.end - group.start < params.m_dur && seg.start - group.end < params.m_int {
                    open = Some(Segment {
                        start: group.start,
                        end: seg.end,
                    });
                } else {
                    merged.push(group);
                    open = Some(*seg);
                }
            }
        }
    }
    if let Some(group) = open {
        merged.push(group);
    }
    let mut out = SegmentList {
        segments: merged,
        recording_id: None,
    };
    if let Some(id) = segs.recording_id() {
        out = out.with_recording_id(id);
    }
    out
}

/// Summary statistics over a segment list; aggregates are `None` where
/// undefined (no segments, or no gaps).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SegmentStats {
    pub count: usize,
    pub total_frames: u64,
    pub min_duration_frames: Option<u64>,
    pub mean_duration_frames: Option<f64>,
    pub max_duration_frames: Option<u64>,
    pub min_gap_frames: Option<u64>,
    pub mean_gap_frames: Option<f64>,
}

/// Computes per-list duration and gap statistics.
#[must_use]
pub fn segment_stats(segs: &SegmentList) -> SegmentStats {
    let durations: Vec<u64> = segs.iter().map(Segment::duration).collect();
    let gaps: Vec<u64> = segs
        .segments()
        .windows(2)
        .map(|w| w[1].start - w[0].end)
        .collect();
    let total_frames = durations.iter().sum();
    let mean = |xs: &[u64]| -> Option<f64> {
        if xs.is_empty() {
            None
        } else {
            Some(xs.iter().sum::<u64>() as f64 / xs.len() as f64)
        }
    };
    SegmentStats {
        count: segs.len(),
        total_frames,
        min_duration_frames: durations.iter().copied().min(),
        mean_duration_frames: mean(&durations),
        max_duration_frames: durations.iter().copied().max(),
        min_gap_frames: gaps.iter().copied().min(),
        mean_gap_frames: mean(&gaps),
    }
}

/// Cuts one audio buffer per segment; frame indices map to samples at
/// `sample_rate / 100` samples per frame.
///
/// # Errors
/// [`SegmentError::OutOfRange`] if a segment ends past the audio.
pub fn slice_audio(
    audio: &AudioBuffer,
    segs: &SegmentList,
) -> Result<Vec<AudioBuffer>, SegmentError> {
    let samples_per_frame = audio.samples_per_frame() as u64;
    let total_samples = audio.samples().len() as u64;
    let mut out = Vec::with_capacity(segs.len());
    for (index, seg) in segs.iter().enumerate() {
        let lo = seg.start * samples_per_frame;
        let hi = seg.end * samples_per_frame;
        if hi > total_samples {
            return Err(SegmentError::OutOfRange {
                index,
                end: seg.end,
                available: total_samples / samples_per_frame,
            });
        }
        let slice = audio.samples()[lo as usize..hi as usize].to_vec();
        out.push(AudioBuffer::from_validated(slice, audio.sample_rate()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn list(pairs: &[(u64, u64)]) -> SegmentList {
        validate_segments(
            pairs
                .iter()
                .map(|&(s, e)| Segment { start: s, end: e })
                .collect(),
        )
        .expect("test intervals must be valid")
    }

    fn pairs(segs: &SegmentList) -> Vec<(u64, u64)> {
        segs.iter().map(|s| (s.start, s.end)).collect()
    }

    /// Literal step-by-step simulation of the grouping rule, kept naive on
    /// purpose: it re-runs grouping passes until nothing changes, so it also
    /// certifies that the production single pass is already the fixed point.
    fn reference_merge(mut segs: Vec<(u64, u64)>, m_dur: u64, m_int: u64) -> Vec<(u64, u64)> {
        loop {
            let mut next: Vec<(u64, u64)> = Vec::new();
            let mut merges = 0usize;
            let mut iter = segs.iter().copied();
            let mut open = iter.next();
            if let Some((mut s0, mut e0)) = open {
                for (s, e) in iter {
                    if e - s0 < m_dur && s - e0 < m_int {
                        e0 = e;
                        merges += 1;
                    } else {
                        next.push((s0, e0));
                        s0 = s;
                        e0 = e;
                    }
                }
                open = Some((s0, e0));
            }
            if let Some(last) = open {
                next.push(last);
            }
            segs = next;
            if merges == 0 {
                return segs;
            }
        }
    }

    // ----- validation -----

    #[test]
    fn validate_empty_is_empty() {
        assert!(validate_segments(Vec::new()).unwrap().is_empty());
    }

    #[test]
    fn validate_sorts_by_start() {
        let got = validate_segments(vec![
            Segment {
                start: 60,
                end: 120,
            },
            Segment { start: 0, end: 50 },
        ])
        .unwrap();
        assert_eq!(pairs(&got), vec![(0, 50), (60, 120)]);
    }

    #[test]
    fn validate_rejects_overlap() {
        let err = validate_segments(vec![
            Segment { start: 0, end: 100 },
            Segment {
                start: 50,
                end: 150,
            },
        ])
        .unwrap_err();
        assert!(matches!(err, SegmentError::Overlap { index: 0 }));
    }

    #[test]
    fn validate_rejects_empty_interval() {
        let err = validate_segments(vec![Segment { start: 5, end: 5 }]).unwrap_err();
        assert!(matches!(err, SegmentError::EmptyInterval { .. }));
    }

    #[test]
    fn touching_segments_are_valid() {
        let got = validate_segments(vec![
            Segment { start: 0, end: 50 },
            Segment { start: 50, end: 80 },
        ])
        .unwrap();
        assert_eq!(got.len(), 2);
    }

    // ----- merging: worked examples -----

    #[test]
    fn merge_empty_input() {
        let out = merge_segments(&SegmentList::empty(), &MergeParams::default());
        assert!(out.is_empty());
    }

    #[test]
    fn merge_single_segment_unchanged() {
        let out = merge_segments(&list(&[(0, 150)]), &MergeParams::default());
        assert_eq!(pairs(&out), vec![(0, 150)]);
    }

    #[test]
    fn merge_joins_close_and_splits_far() {
        // Gap 10 < 100 joins the first two; gap 280 >= 100 splits the third.
        let out = merge_segments(
            &list(&[(0, 50), (60, 120), (400, 500)]),
            &MergeParams::default(),
        );
        assert_eq!(pairs(&out), vec![(0, 120), (400, 500)]);
    }

    #[test]
    fn merge_respects_duration_bound() {
        // 1990 - 0 < 2000 joins; then 2500 - 0 >= 2000 and gap 110 >= 100
        // both block the third segment.
        let out = merge_segments(
            &list(&[(0, 1500), (1550, 1990), (2100, 2500)]),
            &MergeParams::default(),
        );
        assert_eq!(pairs(&out), vec![(0, 1990), (2100, 2500)]);
    }

    #[test]
    fn merge_boundary_conditions_are_strict() {
        // Gap exactly m_int never joins.
        let out = merge_segments(&list(&[(0, 50), (150, 200)]), &MergeParams::default());
        assert_eq!(out.len(), 2);
        // Resulting duration exactly m_dur never joins.
        let out = merge_segments(&list(&[(0, 1000), (1010, 2000)]), &MergeParams::default());
        assert_eq!(out.len(), 2);
        // One frame under both bounds joins.
        let out = merge_segments(&list(&[(0, 1000), (1099, 1999)]), &MergeParams::default());
        assert_eq!(pairs(&out), vec![(0, 1999)]);
    }

    #[test]
    fn merge_keeps_recording_id() {
        let segs = list(&[(0, 10), (15, 25)]).with_recording_id("rec7");
        let out = merge_segments(&segs, &MergeParams::default());
        assert_eq!(out.recording_id(), Some("rec7"));
    }

    #[test]
    fn zero_gap_threshold_is_identity() {
        // A strict gap < 0 is impossible for non-overlapping input.
        let segs = list(&[(0, 10), (10, 20), (25, 40)]);
        let out = merge_segments(
            &segs,
            &MergeParams {
                m_dur: 1000,
                m_int: 0,
            },
        );
        assert_eq!(pairs(&out), pairs(&segs));
    }

    // ----- merging: randomized oracle and invariants -----

    fn random_list(rng: &mut StdRng, max_segments: usize, max_frame: u64) -> Vec<(u64, u64)> {
        let n = rng.gen_range(0..=max_segments);
        let mut cuts: Vec<u64> = (0..2 * n).map(|_| rng.gen_range(0..max_frame)).collect();
        cuts.sort_unstable();
        cuts.dedup();
        let mut out = Vec::new();
        for w in cuts.chunks_exact(2) {
            out.push((w[0], w[1]));
        }
        out
    }

    #[test]
    fn merge_matches_reference_simulation() {
        let mut rng = StdRng::seed_from_u64(0x5e9);
        for _ in 0..500 {
            let raw = random_list(&mut rng, 40, 5_000);
            let m_dur = rng.gen_range(1..3000);
            let m_int = rng.gen_range(1..400);
            let input = list(&raw);
            let got = pairs(&merge_segments(&input, &MergeParams { m_dur, m_int }));
            assert_eq!(got, reference_merge(raw, m_dur, m_int));
        }
    }

    #[test]
    fn merge_invariants_hold_on_random_inputs() {
        let mut rng = StdRng::seed_from_u64(0xA11CE);
        for _ in 0..300 {
            let raw = random_list(&mut rng, 40, 5_000);
            let params = MergeParams {
                m_dur: rng.gen_range(1..3000),
                m_int: rng.gen_range(1..400),
            };
            let input = list(&raw);
            let out = merge_segments(&input, &params);

            // Output is itself a valid list.
            validate_segments(out.segments().to_vec()).unwrap();
            // Count never grows.
            assert!(out.len() <= input.len());
            // Boundary provenance: starts and ends come from the input.
            let starts: Vec<u64> = input.iter().map(|s| s.start).collect();
            let ends: Vec<u64> = input.iter().map(|s| s.end).collect();
            for seg in out.iter() {
                assert!(starts.contains(&seg.start));
                assert!(ends.contains(&seg.end));
            }
            // Coverage: every input frame range lies inside some output range.
            for seg in input.iter() {
                assert!(out.iter().any(|o| o.start <= seg.start && seg.end <= o.end));
            }
            // Idempotence: merging again changes nothing.
            let again = merge_segments(&out, &params);
            assert_eq!(pairs(&again), pairs(&out));
        }
    }

    #[test]
    fn merged_groups_obey_gap_and_duration_bounds() {
        let mut rng = StdRng::seed_from_u64(0xBEEF);
        for _ in 0..300 {
            let raw = random_list(&mut rng, 30, 4_000);
            let params = MergeParams {
                m_dur: rng.gen_range(1..2500),
                m_int: rng.gen_range(1..300),
            };
            let input = list(&raw);
            let out = merge_segments(&input, &params);
            // Map each output segment back to its group of inputs.
            for o in out.iter() {
                let group: Vec<&Segment> = input
                    .iter()
                    .filter(|s| o.start <= s.start && s.end <= o.end)
                    .collect();
                assert!(!group.is_empty());
                for w in group.windows(2) {
                    assert!(w[1].start - w[0].end < params.m_int);
                }
                if group.len() >= 2 {
                    assert!(o.duration() < params.m_dur);
                }
            }
        }
    }

    // ----- stats -----

    #[test]
    fn stats_empty_list() {
        let stats = segment_stats(&SegmentList::empty());
        assert_eq!(stats.count, 0);
        assert_eq!(stats.total_frames, 0);
        assert_eq!(stats.min_duration_frames, None);
        assert_eq!(stats.mean_gap_frames, None);
    }

    #[test]
    fn stats_single_segment() {
        let stats = segment_stats(&list(&[(0, 100)]));
        assert_eq!(stats.count, 1);
        assert_eq!(stats.total_frames, 100);
        assert_eq!(stats.max_duration_frames, Some(100));
        assert_eq!(stats.min_gap_frames, None);
    }

    #[test]
    fn stats_two_segments() {
        let stats = segment_stats(&list(&[(0, 100), (200, 250)]));
        assert_eq!(stats.count, 2);
        assert_eq!(stats.total_frames, 150);
        assert_eq!(stats.min_duration_frames, Some(50));
        assert_eq!(stats.max_duration_frames, Some(100));
        assert_eq!(stats.mean_duration_frames, Some(75.0));
        assert_eq!(stats.min_gap_frames, Some(100));
        assert_eq!(stats.mean_gap_frames, Some(100.0));
    }

    // ----- slicing -----

    #[test]
    fn slice_extracts_expected_sample_counts() {
        let audio = AudioBuffer::new(vec![0.0; 16_000], 16_000).unwrap();
        let cuts = slice_audio(&audio, &list(&[(0, 50)])).unwrap();
        assert_eq!(cuts.len(), 1);
        assert_eq!(cuts[0].samples().len(), 8_000);
        assert_eq!(cuts[0].sample_rate(), 16_000);
    }

    #[test]
    fn slice_empty_list_yields_nothing() {
        let audio = AudioBuffer::new(vec![0.0; 1_600], 16_000).unwrap();
        assert!(slice_audio(&audio, &SegmentList::empty())
            .unwrap()
            .is_empty());
    }

    #[test]
    fn slice_past_end_is_rejected() {
        let audio = AudioBuffer::new(vec![0.0; 16_000], 16_000).unwrap();
        let err = slice_audio(&audio, &list(&[(0, 200)])).unwrap_err();
        assert!(matches!(err, SegmentError::OutOfRange { .. }));
    }

    #[test]
    fn slice_preserves_sample_values() {
        let samples: Vec<f32> = (0..3_200).map(|i| (i % 7) as f32 / 10.0).collect();
        let audio = AudioBuffer::new(samples.clone(), 16_000).unwrap();
        let cuts = slice_audio(&audio, &list(&[(5, 10)])).unwrap();
        assert_eq!(cuts[0].samples(), &samples[800..1_600]);
    }
}
