//! Skeleton frames and sequences, body-relative normalization and resampling.

use serde::{Deserialize, Serialize};

use crate::joint::{JointId, JointMap, Vec3, JOINT_COUNT};

/// Coordinates at or beyond this magnitude (meters) mark a corrupt capture.
pub const MAX_COORDINATE: f64 = 10.0;

/// Shoulder distances at or below this (meters) mark a degenerate skeleton.
pub const MIN_SHOULDER_DISTANCE: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SkeletonError {
    #[error("sequence needs at least 2 frames, got {0}")]
    TooShort(usize),
    #[error("timestamps must strictly increase (frame {index})")]
    NonIncreasingTimestamp { index: usize },
    #[error("frame {frame}: joint {joint} has a non-finite or out-of-range coordinate")]
    InvalidCoordinate { frame: usize, joint: JointId },
    #[error("nominal rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("resample rate must lie in [1, 120] Hz, got {0}")]
    ResampleRateOutOfRange(f64),
    #[error("shoulder distance {distance:.4} m is too small to normalize")]
    DegenerateSkeleton { distance: f64 },
}

/// One captured skeleton pose.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub timestamp_ms: u64,
    pub positions: JointMap<Vec3>,
    pub tracked: JointMap<bool>,
}

impl Frame {
    /// A fully tracked frame.
    pub fn new(timestamp_ms: u64, positions: [Vec3; JOINT_COUNT]) -> Self {
        Frame {
            timestamp_ms,
            positions: JointMap(positions),
            tracked: JointMap::splat(true),
        }
    }

    pub fn position(&self, joint: JointId) -> Vec3 {
        self.positions[joint]
    }

    fn invalid_joint(&self) -> Option<JointId> {
        self.positions
            .iter()
            .find(|(_, p)| !p.is_finite() || p.max_abs() >= MAX_COORDINATE)
            .map(|(j, _)| j)
    }

    /// Applies `f` to every joint position.
    pub fn map_positions(&self, mut f: impl FnMut(JointId, Vec3) -> Vec3) -> Frame {
        let mut out = self.clone();
        for j in JointId::ALL {
            out.positions[j] = f(j, self.positions[j]);
        }
        out
    }

    pub fn shoulder_distance(&self) -> f64 {
        self.position(JointId::LeftShoulder)
            .distance(self.position(JointId::RightShoulder))
    }
}

fn validate_frames(frames: &[Frame]) -> Result<(), SkeletonError> {
    if frames.len() < 2 {
        return Err(SkeletonError::TooShort(frames.len()));
    }
    for (i, frame) in frames.iter().enumerate() {
        if let Some(joint) = frame.invalid_joint() {
            return Err(SkeletonError::InvalidCoordinate { frame: i, joint });
        }
        if i > 0 && frame.timestamp_ms <= frames[i - 1].timestamp_ms {
            return Err(SkeletonError::NonIncreasingTimestamp { index: i });
        }
    }
    Ok(())
}

/// A validated, timestamped list of frames.
#[derive(Debug, Clone, PartialEq)]
pub struct SkeletonSequence {
    frames: Vec<Frame>,
    nominal_rate_hz: f64,
}

impl SkeletonSequence {
    pub fn new(frames: Vec<Frame>, nominal_rate_hz: f64) -> Result<Self, SkeletonError> {
        if !(nominal_rate_hz.is_finite() && nominal_rate_hz > 0.0) {
            return Err(SkeletonError::InvalidRate(nominal_rate_hz));
        }
        validate_frames(&frames)?;
        Ok(SkeletonSequence {
            frames,
            nominal_rate_hz,
        })
    }

    pub fn frames(&self) -> &[Frame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn nominal_rate_hz(&self) -> f64 {
        self.nominal_rate_hz
    }

    pub fn start_ms(&self) -> u64 {
        self.frames[0].timestamp_ms
    }

    pub fn end_ms(&self) -> u64 {
        self.frames[self.frames.len() - 1].timestamp_ms
    }

    pub fn duration_ms(&self) -> u64 {
        self.end_ms() - self.start_ms()
    }

    pub fn into_frames(self) -> Vec<Frame> {
        self.frames
    }

    /// Fraction of frames in which `joint` is untracked.
    pub fn untracked_fraction(&self, joint: JointId) -> f64 {
        let n = self.frames.iter().filter(|f| !f.tracked[joint]).count();
        n as f64 / self.frames.len() as f64
    }

    /// Replaces the position of every untracked sample with the last tracked
    /// position of that joint. Leading untracked samples take the first tracked
    /// position; a joint never tracked keeps its raw positions. Tracked flags
    /// are preserved.
    pub fn with_untracked_filled(&self) -> SkeletonSequence {
        let mut frames = self.frames.clone();
        for j in JointId::ALL {
            let first_tracked = frames.iter().find(|f| f.tracked[j]).map(|f| f.positions[j]);
            let Some(mut last) = first_tracked else {
                continue;
            };
            for f in frames.iter_mut() {
                if f.tracked[j] {
                    last = f.positions[j];
                } else {
                    f.positions[j] = last;
                }
            }
        }
        SkeletonSequence {
            frames,
            nominal_rate_hz: self.nominal_rate_hz,
        }
    }

    /// Linearly interpolated frame at time `t_ms`, clamped to the sequence span.
    /// A joint is tracked in the result only if both bracketing samples are.
    pub fn sample_at(&self, t_ms: f64) -> Frame {
        let frames = &self.frames;
        let t = t_ms.clamp(self.start_ms() as f64, self.end_ms() as f64);
        // first frame with timestamp >= t
        let hi = frames.partition_point(|f| (f.timestamp_ms as f64) < t);
        if hi == 0 {
            let mut f = frames[0].clone();
            f.timestamp_ms = t.round() as u64;
            return f;
        }
        let (a, b) = (&frames[hi - 1], &frames[hi]);
        if b.timestamp_ms as f64 == t {
            return b.clone();
        }
        let span = (b.timestamp_ms - a.timestamp_ms) as f64;
        let w = (t - a.timestamp_ms as f64) / span;
        let mut out = a.map_positions(|j, p| p.lerp(b.positions[j], w));
        for j in JointId::ALL {
            out.tracked[j] = a.tracked[j] && b.tracked[j];
        }
        out.timestamp_ms = t.round() as u64;
        out
    }
}

/// Uniform resampling by linear interpolation.
///
/// The output spans the same duration with `round(duration * rate) + 1`
/// frames (at least 2) at integer-millisecond timestamps; the first and last
/// frames are copied exactly.
pub fn resample(seq: &SkeletonSequence, rate_hz: f64) -> Result<SkeletonSequence, SkeletonError> {
    if !(1.0..=120.0).contains(&rate_hz) {
        return Err(SkeletonError::ResampleRateOutOfRange(rate_hz));
    }
    let start = seq.start_ms();
    let duration = seq.duration_ms() as f64;
    let count = ((duration * rate_hz / 1000.0).round() as usize + 1).max(2);
    let step = duration / (count - 1) as f64;
    let mut frames = Vec::with_capacity(count);
    frames.push(seq.frames[0].clone());
    for k in 1..count - 1 {
        let t = start + (k as f64 * step).round() as u64;
        frames.push(seq.sample_at(t as f64));
    }
    frames.push(seq.frames[seq.len() - 1].clone());
    SkeletonSequence::new(frames, rate_hz)
}

/// Per-frame offsets and the uniform scale used to map raw capture coordinates
/// into body-relative units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    /// Hip-center position of each raw frame.
    pub origin_offsets: Vec<Vec3>,
    /// Multiplier applied after translation: 1 / first-frame shoulder distance.
    pub scale: f64,
}

/// A skeleton sequence in body-relative units: hip-center at the origin of
/// every frame, first-frame shoulder distance equal to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedSequence {
    sequence: SkeletonSequence,
    record: NormalizationRecord,
}

impl NormalizedSequence {
    pub fn frames(&self) -> &[Frame] {
        self.sequence.frames()
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn as_sequence(&self) -> &SkeletonSequence {
        &self.sequence
    }

    pub fn record(&self) -> &NormalizationRecord {
        &self.record
    }

    pub fn scale(&self) -> f64 {
        self.record.scale
    }

    /// Maps a normalized point of frame `index` back into raw capture space.
    pub fn denormalize(&self, index: usize, p: Vec3) -> Vec3 {
        p * (1.0 / self.record.scale) + self.record.origin_offsets[index]
    }
}

/// Translates each frame so the hip-center is the origin and scales all
/// frames by the inverse of the first frame's shoulder distance.
pub fn normalize(seq: &SkeletonSequence) -> Result<NormalizedSequence, SkeletonError> {
    let distance = seq.frames[0].shoulder_distance();
    if distance <= MIN_SHOULDER_DISTANCE || !distance.is_finite() {
        return Err(SkeletonError::DegenerateSkeleton { distance });
    }
    let scale = 1.0 / distance;
    let mut origin_offsets = Vec::with_capacity(seq.len());
    let frames = seq
        .frames()
        .iter()
        .map(|f| {
            let hip = f.position(JointId::HipCenter);
            origin_offsets.push(hip);
            f.map_positions(|j, p| {
                if j == JointId::HipCenter {
                    Vec3::ZERO
                } else {
                    (p - hip) * scale
                }
            })
        })
        .collect();
    Ok(NormalizedSequence {
        sequence: SkeletonSequence {
            frames,
            nominal_rate_hz: seq.nominal_rate_hz,
        },
        record: NormalizationRecord {
            origin_offsets,
            scale,
        },
    })
}
