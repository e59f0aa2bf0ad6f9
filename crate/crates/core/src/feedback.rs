//! Feedback artifacts for a comparison result, and teacher-style selection
//! of which errors to correct.
//!
//! Five modes are available:
//!
//! * **Recast** replays the reference sign.
//! * **Mirror** shows the reference and the attempt side by side, paired
//!   frame by frame along the warping path.
//! * **PathArrows** replays the attempt with one arrow per error window,
//!   anchored at the window's peak and pointing to where the joint should
//!   have been.
//! * **ColorCoding** replays the attempt with each limb green or red.
//! * **Zoom** frames the hand at the first wrong handshape keyframe.
//!
//! Artifacts serialize under the `fb/1` schema tag and only ever carry
//! error geometry that traces back to the result they were built from.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::hand::Hand;
use crate::joint::{JointId, Vec3, JOINT_COUNT};
use crate::scoring::{ComparisonResult, ErrorWindow, JointErrorReport, JointStatus};
use crate::skeleton::Frame;
use crate::template::SignTemplate;

pub const FEEDBACK_SCHEMA: &str = "fb/1";

/// Camera distance (normalized units) used by zoom artifacts.
pub const ZOOM_DISTANCE: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeedbackMode {
    Recast,
    Mirror,
    PathArrows,
    ColorCoding,
    Zoom,
}

impl FeedbackMode {
    pub const ALL: [FeedbackMode; 5] = [
        FeedbackMode::Recast,
        FeedbackMode::Mirror,
        FeedbackMode::PathArrows,
        FeedbackMode::ColorCoding,
        FeedbackMode::Zoom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeedbackMode::Recast => "recast",
            FeedbackMode::Mirror => "mirror",
            FeedbackMode::PathArrows => "path_arrows",
            FeedbackMode::ColorCoding => "color_coding",
            FeedbackMode::Zoom => "zoom",
        }
    }
}

impl fmt::Display for FeedbackMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeedbackMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.replace('-', "_").to_ascii_lowercase();
        FeedbackMode::ALL
            .into_iter()
            .find(|m| m.name() == key || m.name().replace('_', "") == key)
            .ok_or_else(|| format!("unknown feedback mode `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FeedbackError {
    #[error("nothing to show in {0} mode: the result has no errors of that kind")]
    NothingToShow(FeedbackMode),
    #[error("correction fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
}

/// One pose of a render track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoseView {
    pub t: u64,
    pub joints: [Vec3; JOINT_COUNT],
}

impl From<&Frame> for PoseView {
    fn from(f: &Frame) -> Self {
        PoseView {
            t: f.timestamp_ms,
            joints: f.positions.0,
        }
    }
}

impl PoseView {
    pub fn track(frames: &[Frame]) -> Vec<PoseView> {
        frames.iter().map(PoseView::from).collect()
    }

    pub fn position(&self, joint: JointId) -> Vec3 {
        self.joints[joint.index()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Arrow {
    pub joint: JointId,
    pub ref_index: usize,
    pub attempt_index: usize,
    /// Where the attempt put the joint.
    pub from: Vec3,
    /// Where the reference has it.
    pub to: Vec3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Limb {
    LeftArm,
    RightArm,
    Torso,
    Head,
}

impl Limb {
    pub const ALL: [Limb; 4] = [Limb::LeftArm, Limb::RightArm, Limb::Torso, Limb::Head];

    pub fn joints(self) -> &'static [JointId] {
        use JointId::*;
        match self {
            Limb::LeftArm => &[LeftShoulder, LeftElbow, LeftWrist, LeftHand],
            Limb::RightArm => &[RightShoulder, RightElbow, RightWrist, RightHand],
            Limb::Torso => &[Spine, ShoulderCenter],
            Limb::Head => &[Head],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LimbColor {
    Green,
    Red,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoomCamera {
    pub target: JointId,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum FeedbackArtifact {
    Recast {
        template_id: String,
        replay: Vec<PoseView>,
    },
    Mirror {
        reference: Vec<PoseView>,
        attempt: Vec<PoseView>,
        /// `(reference_index, attempt_index)` for each displayed pair.
        path: Vec<(usize, usize)>,
    },
    PathArrows {
        attempt: Vec<PoseView>,
        arrows: Vec<Arrow>,
    },
    ColorCoding {
        attempt: Vec<PoseView>,
        limb_status: BTreeMap<Limb, LimbColor>,
    },
    Zoom {
        hand: Hand,
        handshape_id: String,
        keyframe_t: u64,
        camera: ZoomCamera,
    },
}

impl FeedbackArtifact {
    pub fn mode(&self) -> FeedbackMode {
        match self {
            FeedbackArtifact::Recast { .. } => FeedbackMode::Recast,
            FeedbackArtifact::Mirror { .. } => FeedbackMode::Mirror,
            FeedbackArtifact::PathArrows { .. } => FeedbackMode::PathArrows,
            FeedbackArtifact::ColorCoding { .. } => FeedbackMode::ColorCoding,
            FeedbackArtifact::Zoom { .. } => FeedbackMode::Zoom,
        }
    }
}

/// Versioned wire form of an artifact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackEnvelope {
    pub schema: String,
    #[serde(flatten)]
    pub artifact: FeedbackArtifact,
}

impl From<FeedbackArtifact> for FeedbackEnvelope {
    fn from(artifact: FeedbackArtifact) -> Self {
        FeedbackEnvelope {
            schema: FEEDBACK_SCHEMA.to_string(),
            artifact,
        }
    }
}

fn hand_joint(hand: Hand) -> JointId {
    match hand {
        Hand::Left => JointId::LeftHand,
        Hand::Right => JointId::RightHand,
    }
}

/// Arrow for a window, from the aligned attempt frame that strays furthest.
fn arrow_for(window: &ErrorWindow, result: &ComparisonResult, template: &SignTemplate) -> Arrow {
    let i = window.peak_ref_index;
    let to = template.sequence.frames()[i].position(window.joint);
    let (attempt_index, from) = result
        .alignment
        .attempt_indices_for(i)
        .map(|j| (j, result.attempt[j].position(window.joint)))
        .fold(None, |best: Option<(usize, Vec3)>, (j, p)| match best {
            Some((_, q)) if q.distance(to) >= p.distance(to) => best,
            _ => Some((j, p)),
        })
        .expect("every reference frame lies on the path");
    Arrow {
        joint: window.joint,
        ref_index: i,
        attempt_index,
        from,
        to,
    }
}

pub fn limb_colors(report: &JointErrorReport) -> BTreeMap<Limb, LimbColor> {
    Limb::ALL
        .into_iter()
        .map(|limb| {
            let red = limb
                .joints()
                .iter()
                .any(|j| report.status(*j) == Some(JointStatus::Incorrect));
            (limb, if red { LimbColor::Red } else { LimbColor::Green })
        })
        .collect()
}

/// Builds the artifact of `mode` for a result produced against `template`.
pub fn generate_feedback(
    mode: FeedbackMode,
    result: &ComparisonResult,
    template: &SignTemplate,
) -> Result<FeedbackArtifact, FeedbackError> {
    match mode {
        FeedbackMode::Recast => Ok(FeedbackArtifact::Recast {
            template_id: template.id.clone(),
            replay: PoseView::track(template.sequence.frames()),
        }),
        FeedbackMode::Mirror => {
            let reference = template.sequence.frames();
            let (refs, atts) = result
                .alignment
                .path
                .iter()
                .map(|&(i, j)| (PoseView::from(&reference[i]), result.attempt[j].clone()))
                .unzip();
            Ok(FeedbackArtifact::Mirror {
                reference: refs,
                attempt: atts,
                path: result.alignment.path.clone(),
            })
        }
        FeedbackMode::PathArrows => {
            let arrows: Vec<Arrow> = result
                .joint_errors
                .windows
                .iter()
                .map(|w| arrow_for(w, result, template))
                .filter(|a| a.from != a.to)
                .collect();
            if arrows.is_empty() {
                return Err(FeedbackError::NothingToShow(mode));
            }
            Ok(FeedbackArtifact::PathArrows {
                attempt: result.attempt.clone(),
                arrows,
            })
        }
        FeedbackMode::ColorCoding => {
            let limb_status = limb_colors(&result.joint_errors);
            if !limb_status.values().any(|c| *c == LimbColor::Red) {
                return Err(FeedbackError::NothingToShow(mode));
            }
            Ok(FeedbackArtifact::ColorCoding {
                attempt: result.attempt.clone(),
                limb_status,
            })
        }
        FeedbackMode::Zoom => {
            let miss = result
                .handshape
                .incorrect_keyframes()
                .next()
                .ok_or(FeedbackError::NothingToShow(mode))?;
            Ok(FeedbackArtifact::Zoom {
                hand: miss.hand,
                handshape_id: miss.expected_id.clone(),
                keyframe_t: miss.template_t,
                camera: ZoomCamera {
                    target: hand_joint(miss.hand),
                    distance: ZOOM_DISTANCE,
                },
            })
        }
    }
}

/// The requested artifact, or a recast when the requested mode has nothing
/// to show.
pub fn feedback_or_recast(mode: FeedbackMode, result: &ComparisonResult, template: &SignTemplate) -> FeedbackArtifact {
    generate_feedback(mode, result, template).unwrap_or_else(|_| {
        generate_feedback(FeedbackMode::Recast, result, template).expect("recast is always available")
    })
}

/// Feedback as a lesson shows it: errors are trimmed by `policy` first, and
/// modes with nothing to show fall back to a recast.
pub fn lesson_feedback(
    mode: FeedbackMode,
    policy: CorrectionPolicy,
    result: &ComparisonResult,
    template: &SignTemplate,
) -> FeedbackArtifact {
    let mut shown = result.clone();
    shown.joint_errors = select_corrections(&result.joint_errors, policy);
    feedback_or_recast(mode, &shown, template)
}

/// How many of the observed errors to correct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CorrectionPolicy {
    All,
    /// Keep the most severe `ceil(fraction * windows)` error windows.
    SeverityRanked { fraction: f64 },
}

impl CorrectionPolicy {
    /// Teachers who correct roughly 40-50% of the errors they see.
    pub const MODERATE: CorrectionPolicy = CorrectionPolicy::SeverityRanked { fraction: 0.45 };
    /// Teachers who correct 75% or more.
    pub const THOROUGH: CorrectionPolicy = CorrectionPolicy::SeverityRanked { fraction: 0.75 };

    pub fn severity_ranked(fraction: f64) -> Result<Self, FeedbackError> {
        if fraction > 0.0 && fraction <= 1.0 {
            Ok(CorrectionPolicy::SeverityRanked { fraction })
        } else {
            Err(FeedbackError::InvalidFraction(fraction))
        }
    }

    /// Number of windows kept out of `total`.
    pub fn kept_count(&self, total: usize) -> usize {
        match self {
            CorrectionPolicy::All => total,
            CorrectionPolicy::SeverityRanked { fraction } => {
                // tolerate representation error, e.g. 0.15 * 20 = 3.0000000000000004
                let k = (fraction * total as f64 - 1e-9).ceil().max(0.0) as usize;
                k.min(total)
            }
        }
    }
}

/// Keeps the most severe error windows (largest peak deviation, earlier
/// start on ties) and recomputes joint statuses from what survives.
pub fn select_corrections(report: &JointErrorReport, policy: CorrectionPolicy) -> JointErrorReport {
    if policy == CorrectionPolicy::All {
        return report.clone();
    }
    let keep = policy.kept_count(report.windows.len());
    let mut order: Vec<usize> = (0..report.windows.len()).collect();
    order.sort_by(|&a, &b| {
        let (wa, wb) = (&report.windows[a], &report.windows[b]);
        wb.peak_deviation
            .total_cmp(&wa.peak_deviation)
            .then(wa.ref_start.cmp(&wb.ref_start))
            .then(wa.joint.cmp(&wb.joint))
    });
    let mut kept: Vec<usize> = order.into_iter().take(keep).collect();
    kept.sort_unstable();
    let mut out = JointErrorReport {
        joints: report.joints.clone(),
        windows: kept.into_iter().map(|i| report.windows[i].clone()).collect(),
    };
    out.refresh_statuses();
    out
}
