//! Signing-space validation.
//!
//! Signs are made in front of the body, no lower than the hands resting at
//! the side of the legs, and within arm's reach. The validator flags wrist and
//! hand samples that leave that space. All distances are in normalized units.
//!
//! "Behind" is measured against the torso plane through both shoulders and
//! the hip-center, whose normal is oriented toward the sensor (the signer
//! faces the sensor, and camera-space z grows away from it).

use serde::{Deserialize, Serialize};

use crate::joint::{JointId, Vec3};
use crate::skeleton::{Frame, NormalizedSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceConfig {
    /// How far behind the torso plane a hand may go before it is flagged.
    pub behind_tolerance: f64,
    /// Maximum distance of a hand from the shoulder-center.
    pub reach_limit: f64,
}

impl Default for SpaceConfig {
    fn default() -> Self {
        SpaceConfig {
            behind_tolerance: 0.1,
            reach_limit: 2.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    BehindBody,
    BelowFloorOfSpace,
    BeyondReach,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceViolation {
    pub frame_index: usize,
    pub joint: JointId,
    pub kind: ViolationKind,
    pub magnitude: f64,
}

/// Signed distance of `p` in front of the torso plane of `frame`
/// (positive toward the sensor). `None` when the torso points are collinear.
pub fn forward_offset(frame: &Frame, p: Vec3) -> Option<f64> {
    let left = frame.position(JointId::LeftShoulder);
    let right = frame.position(JointId::RightShoulder);
    let hip = frame.position(JointId::HipCenter);
    let mut normal = (right - left).cross(hip - left);
    let len = normal.norm();
    if len < 1e-9 {
        return None;
    }
    normal = normal * (1.0 / len);
    if normal.z > 0.0 {
        normal = -normal;
    }
    Some((p - hip).dot(normal))
}

pub fn validate_signing_space(seq: &NormalizedSequence, cfg: &SpaceConfig) -> Vec<SpaceViolation> {
    let mut out = Vec::new();
    for (frame_index, frame) in seq.frames().iter().enumerate() {
        let floor = frame
            .position(JointId::LeftAnkle)
            .y
            .min(frame.position(JointId::RightAnkle).y);
        let shoulder_center = frame.position(JointId::ShoulderCenter);
        for joint in JointId::HANDS_AND_WRISTS {
            let p = frame.position(joint);
            let mut flag = |kind, magnitude| {
                out.push(SpaceViolation {
                    frame_index,
                    joint,
                    kind,
                    magnitude,
                })
            };
            if let Some(offset) = forward_offset(frame, p) {
                if offset < -cfg.behind_tolerance {
                    flag(ViolationKind::BehindBody, -offset);
                }
            }
            if p.y < floor {
                flag(ViolationKind::BelowFloorOfSpace, floor - p.y);
            }
            let reach = p.distance(shoulder_center);
            if reach > cfg.reach_limit {
                flag(ViolationKind::BeyondReach, reach - cfg.reach_limit);
            }
        }
    }
    out
}
