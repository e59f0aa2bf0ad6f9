//! Accuracy scoring, threshold gating and per-joint error localization.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alignment::Alignment;
use crate::feedback::PoseView;
use crate::handshape::HandshapeReport;
use crate::joint::JointId;
use crate::skeleton::NormalizedSequence;
use crate::space::SpaceViolation;
use crate::template::JointWeights;

/// Selectable accuracy thresholds, in percent.
pub const THRESHOLD_PRESETS: [f64; 3] = [40.0, 60.0, 80.0];

/// Skill levels and their thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThresholdPreset {
    Beginner,
    Intermediate,
    Advanced,
}

impl ThresholdPreset {
    pub const ALL: [ThresholdPreset; 3] = [
        ThresholdPreset::Beginner,
        ThresholdPreset::Intermediate,
        ThresholdPreset::Advanced,
    ];

    pub fn percent(self) -> f64 {
        match self {
            ThresholdPreset::Beginner => THRESHOLD_PRESETS[0],
            ThresholdPreset::Intermediate => THRESHOLD_PRESETS[1],
            ThresholdPreset::Advanced => THRESHOLD_PRESETS[2],
        }
    }

    pub fn from_percent(percent: f64) -> Option<ThresholdPreset> {
        ThresholdPreset::ALL.into_iter().find(|p| p.percent() == percent)
    }
}

impl FromStr for ThresholdPreset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "beginner" => Ok(ThresholdPreset::Beginner),
            "intermediate" => Ok(ThresholdPreset::Intermediate),
            "advanced" => Ok(ThresholdPreset::Advanced),
            other => other
                .parse::<f64>()
                .ok()
                .and_then(ThresholdPreset::from_percent)
                .ok_or_else(|| format!("threshold must be one of 40, 60, 80 (got `{other}`)")),
        }
    }
}

impl fmt::Display for ThresholdPreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.percent())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScoringError {
    #[error("movement weight must lie in [0, 1], got {0}")]
    InvalidWeight(f64),
    #[error("joint tolerance must be positive")]
    InvalidTolerance,
    #[error("error windows need at least one frame")]
    InvalidWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScoringConfig {
    /// Weight of the movement score; the handshape score gets the rest.
    pub movement_weight: f64,
    /// Deviation (normalized units) above which a joint sample is in error.
    pub joint_tolerance: f64,
    /// Shortest run of erroneous reference frames reported as a window.
    pub window_min_frames: usize,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            movement_weight: 0.5,
            joint_tolerance: 0.15,
            window_min_frames: 3,
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoringError> {
        if !(0.0..=1.0).contains(&self.movement_weight) {
            return Err(ScoringError::InvalidWeight(self.movement_weight));
        }
        if !(self.joint_tolerance > 0.0) {
            return Err(ScoringError::InvalidTolerance);
        }
        if self.window_min_frames == 0 {
            return Err(ScoringError::InvalidWindow);
        }
        Ok(())
    }

    pub fn handshape_weight(&self) -> f64 {
        1.0 - self.movement_weight
    }
}

/// Weighted mean of the two component scores.
pub fn combine(movement: f64, handshape: f64, cfg: &ScoringConfig) -> f64 {
    (cfg.movement_weight * movement + cfg.handshape_weight() * handshape).clamp(0.0, 100.0)
}

/// Pass when `accuracy >= threshold`.
pub fn gate(accuracy: f64, threshold: f64) -> bool {
    accuracy >= threshold
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointStatus {
    Correct,
    Incorrect,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointAssessment {
    pub joint: JointId,
    /// Mean deviation along the warping path.
    pub mean_deviation: f64,
    pub status: JointStatus,
}

/// A run of reference frames where one joint deviates beyond tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorWindow {
    pub joint: JointId,
    /// Inclusive reference frame range.
    pub ref_start: usize,
    pub ref_end: usize,
    pub peak_deviation: f64,
    pub peak_ref_index: usize,
}

impl ErrorWindow {
    pub fn len(&self) -> usize {
        self.ref_end - self.ref_start + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, ref_index: usize) -> bool {
        (self.ref_start..=self.ref_end).contains(&ref_index)
    }
}

/// Where an attempt went wrong.
///
/// A joint is incorrect exactly when it has at least one error window, so
/// every flagged joint can be traced to a window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointErrorReport {
    pub joints: Vec<JointAssessment>,
    pub windows: Vec<ErrorWindow>,
}

impl JointErrorReport {
    pub fn incorrect_joints(&self) -> impl Iterator<Item = JointId> + '_ {
        self.joints
            .iter()
            .filter(|j| j.status == JointStatus::Incorrect)
            .map(|j| j.joint)
    }

    pub fn status(&self, joint: JointId) -> Option<JointStatus> {
        self.joints.iter().find(|j| j.joint == joint).map(|j| j.status)
    }

    /// Recomputes every joint status from the current windows.
    pub fn refresh_statuses(&mut self) {
        for assessment in &mut self.joints {
            assessment.status = if self.windows.iter().any(|w| w.joint == assessment.joint) {
                JointStatus::Incorrect
            } else {
                JointStatus::Correct
            };
        }
    }
}

/// Per-joint deviation analysis along the warping path.
///
/// For each active joint the deviation of a path step is the distance between
/// the aligned positions. A reference frame's deviation is the mean over the
/// path steps that touch it; windows are maximal runs of at least
/// `window_min_frames` consecutive reference frames above tolerance.
pub fn localize_errors(
    alignment: &Alignment,
    reference: &NormalizedSequence,
    attempt: &NormalizedSequence,
    weights: &JointWeights,
    cfg: &ScoringConfig,
) -> JointErrorReport {
    let (rf, af) = (reference.frames(), attempt.frames());
    let m = rf.len();
    let mut joints = Vec::new();
    let mut windows = Vec::new();
    for joint in weights.active_joints() {
        let mut sum = vec![0.0; m];
        let mut count = vec![0usize; m];
        let mut total = 0.0;
        for &(i, j) in &alignment.path {
            let d = rf[i].position(joint).distance(af[j].position(joint));
            sum[i] += d;
            count[i] += 1;
            total += d;
        }
        let per_frame: Vec<f64> = sum
            .iter()
            .zip(&count)
            .map(|(s, c)| if *c == 0 { 0.0 } else { s / *c as f64 })
            .collect();

        let mut i = 0;
        while i < m {
            if per_frame[i] <= cfg.joint_tolerance {
                i += 1;
                continue;
            }
            let start = i;
            while i < m && per_frame[i] > cfg.joint_tolerance {
                i += 1;
            }
            let end = i - 1;
            if end - start + 1 >= cfg.window_min_frames {
                let mut peak = start;
                for k in start..=end {
                    if per_frame[k] > per_frame[peak] {
                        peak = k;
                    }
                }
                windows.push(ErrorWindow {
                    joint,
                    ref_start: start,
                    ref_end: end,
                    peak_deviation: per_frame[peak],
                    peak_ref_index: peak,
                });
            }
        }
        joints.push(JointAssessment {
            joint,
            mean_deviation: total / alignment.path.len() as f64,
            status: JointStatus::Correct,
        });
    }
    let mut report = JointErrorReport { joints, windows };
    report.refresh_statuses();
    report
}

/// The full outcome of comparing one attempt with a template.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonResult {
    pub template_id: String,
    pub movement_score: f64,
    pub handshape_score: f64,
    pub accuracy: f64,
    pub passed: bool,
    pub threshold_used: f64,
    pub joint_errors: JointErrorReport,
    pub handshape: HandshapeReport,
    pub space_warnings: Vec<SpaceViolation>,
    pub alignment: Alignment,
    /// The normalized attempt, so feedback can be rebuilt from the result alone.
    pub attempt: Vec<PoseView>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alignment::{dtw_align, DtwConfig};
    use crate::joint::Vec3;
    use crate::samples::sample_template;
    use crate::skeleton::{normalize, Frame, SkeletonSequence};
    use proptest::prelude::*;

    #[test]
    fn combine_examples() {
        let cfg = ScoringConfig::default();
        assert_eq!(combine(100.0, 100.0, &cfg), 100.0);
        assert_eq!(combine(80.0, 40.0, &cfg), 60.0);
        let all_movement = ScoringConfig { movement_weight: 1.0, ..cfg };
        for y in [0.0, 33.0, 100.0] {
            assert_eq!(combine(72.5, y, &all_movement), 72.5);
        }
    }

    #[test]
    fn gate_is_inclusive() {
        assert!(gate(60.0, 60.0));
        assert!(!gate(59.999, 60.0));
    }

    #[test]
    fn presets_are_exactly_forty_sixty_eighty() {
        let p: Vec<f64> = ThresholdPreset::ALL.iter().map(|p| p.percent()).collect();
        assert_eq!(p, vec![40.0, 60.0, 80.0]);
        assert_eq!("60".parse::<ThresholdPreset>(), Ok(ThresholdPreset::Intermediate));
        assert_eq!("advanced".parse::<ThresholdPreset>(), Ok(ThresholdPreset::Advanced));
        assert!("50".parse::<ThresholdPreset>().is_err());
    }

    #[test]
    fn config_validation() {
        assert!(ScoringConfig::default().validate().is_ok());
        assert!(ScoringConfig { movement_weight: 1.2, ..Default::default() }.validate().is_err());
        assert!(ScoringConfig { joint_tolerance: 0.0, ..Default::default() }.validate().is_err());
    }

    fn offset_attempt(template_id: &str, joint: JointId, delta: Vec3, frames: std::ops::RangeInclusive<usize>) -> (NormalizedSequence, NormalizedSequence, JointWeights) {
        let t = sample_template(template_id).unwrap();
        let moved: Vec<Frame> = t
            .sequence
            .frames()
            .iter()
            .enumerate()
            .map(|(k, f)| {
                f.map_positions(|j, p| if j == joint && frames.contains(&k) { p + delta } else { p })
            })
            .collect();
        let attempt = normalize(&SkeletonSequence::new(moved, 30.0).unwrap()).unwrap();
        (t.sequence, attempt, t.weights)
    }

    #[test]
    fn identical_attempt_has_no_errors() {
        let t = sample_template("hello").unwrap();
        let a = dtw_align(&t.sequence, &t.sequence, &DtwConfig::new(t.weights)).unwrap();
        let r = localize_errors(&a, &t.sequence, &t.sequence, &t.weights, &ScoringConfig::default());
        assert!(r.windows.is_empty());
        assert_eq!(r.incorrect_joints().count(), 0);
        assert_eq!(r.joints.len(), 3);
    }

    #[test]
    fn injected_wrist_offset_is_localized() {
        let (reference, attempt, w) =
            offset_attempt("hello", JointId::RightWrist, Vec3::new(0.3, 0.0, 0.0), 10..=25);
        let a = dtw_align(&reference, &attempt, &DtwConfig::new(w)).unwrap();
        let r = localize_errors(&a, &reference, &attempt, &w, &ScoringConfig::default());
        assert_eq!(r.incorrect_joints().collect::<Vec<_>>(), vec![JointId::RightWrist]);
        assert_eq!(r.windows.len(), 1, "{:?}", r.windows);
        let win = &r.windows[0];
        assert!(win.ref_start <= 12 && win.ref_end >= 23, "{win:?}");
        assert!(win.contains(win.peak_ref_index));
        assert!(win.peak_deviation > 0.15);
        // golden bounds recorded from the synthetic fixture
        assert_eq!((win.ref_start, win.ref_end), GOLDEN_WRIST_WINDOW);
    }

    const GOLDEN_WRIST_WINDOW: (usize, usize) = (10, 25);

    #[test]
    fn sub_threshold_offset_is_not_flagged() {
        let (reference, attempt, w) =
            offset_attempt("hello", JointId::RightWrist, Vec3::new(0.1, 0.0, 0.0), 10..=25);
        let a = dtw_align(&reference, &attempt, &DtwConfig::new(w)).unwrap();
        let r = localize_errors(&a, &reference, &attempt, &w, &ScoringConfig::default());
        assert!(r.windows.is_empty());
        assert_eq!(r.incorrect_joints().count(), 0);
    }

    #[test]
    fn short_runs_are_not_windows() {
        let (reference, attempt, w) =
            offset_attempt("where", JointId::RightHand, Vec3::new(0.0, 0.4, 0.0), 30..=31);
        let a = dtw_align(&reference, &attempt, &DtwConfig::new(w)).unwrap();
        let r = localize_errors(&a, &reference, &attempt, &w, &ScoringConfig::default());
        assert!(r.windows.is_empty(), "{:?}", r.windows);
    }

    proptest! {
        #[test]
        fn combine_is_monotone(a in 0.0f64..=100.0, b in 0.0f64..=100.0, d in 0.0f64..=50.0, w in 0.0f64..=1.0) {
            let cfg = ScoringConfig { movement_weight: w, ..Default::default() };
            let base = combine(a, b, &cfg);
            prop_assert!(combine((a + d).min(100.0), b, &cfg) >= base);
            prop_assert!(combine(a, (b + d).min(100.0), &cfg) >= base);
            prop_assert!((0.0..=100.0).contains(&base));
        }

        #[test]
        fn gate_is_monotone(acc in 0.0f64..=100.0, t in 0.01f64..99.99, lower in 0.0f64..1.0) {
            if gate(acc, t) {
                prop_assert!(gate(acc, t * lower));
            }
        }
    }
}
