//! Reference signs: normalized motion, handshape keyframes and joint weights.

use serde::{Deserialize, Serialize};

use crate::hand::{Hand, HandObservation};
use crate::joint::{JointId, JointMap};
use crate::skeleton::NormalizedSequence;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TemplateError {
    #[error("template id must not be empty")]
    EmptyId,
    #[error("joint weight for {joint} must be finite and non-negative")]
    NegativeWeight { joint: JointId },
    #[error("at least one joint needs a positive weight")]
    NoActiveJoint,
    #[error("joint weights sum to {0}, expected 1")]
    WeightSum(f64),
    #[error("handshape keyframe {index} at {timestamp_ms} ms lies outside the sequence")]
    KeyframeOutOfRange { index: usize, timestamp_ms: u64 },
    #[error("default threshold {0} must lie in (0, 100)")]
    InvalidThreshold(f64),
}

/// Per-joint weights of the local motion cost. Non-negative, summing to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointWeights(JointMap<f64>);

impl JointWeights {
    pub fn new(weights: [f64; 20]) -> Result<Self, TemplateError> {
        for (joint, w) in JointId::ALL.iter().zip(weights) {
            if !(w.is_finite() && w >= 0.0) {
                return Err(TemplateError::NegativeWeight { joint: *joint });
            }
        }
        if !weights.iter().any(|w| *w > 0.0) {
            return Err(TemplateError::NoActiveJoint);
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(TemplateError::WeightSum(sum));
        }
        Ok(JointWeights(JointMap(weights)))
    }

    /// Weights proportional to the given relative values.
    pub fn proportional(pairs: &[(JointId, f64)]) -> Result<Self, TemplateError> {
        let mut raw = [0.0; 20];
        for (j, w) in pairs {
            raw[j.index()] += *w;
        }
        let sum: f64 = raw.iter().sum();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(TemplateError::NoActiveJoint);
        }
        for w in raw.iter_mut() {
            *w /= sum;
        }
        // fix up rounding so the sum check holds
        let residual = 1.0 - raw.iter().sum::<f64>();
        if let Some(w) = raw.iter_mut().find(|w| **w > 0.0) {
            *w += residual;
        }
        JointWeights::new(raw)
    }

    /// Default weights for signing: both arms, wrists and hands heaviest,
    /// lower body inactive.
    pub fn upper_body() -> Self {
        use JointId::*;
        JointWeights::proportional(&[
            (LeftElbow, 0.2),
            (LeftWrist, 0.35),
            (LeftHand, 0.45),
            (RightElbow, 0.2),
            (RightWrist, 0.35),
            (RightHand, 0.45),
        ])
        .expect("static weights are valid")
    }

    pub fn get(&self, joint: JointId) -> f64 {
        self.0[joint]
    }

    pub fn as_array(&self) -> &[f64; 20] {
        &self.0 .0
    }

    /// Joints with a positive weight, in code order.
    pub fn active_joints(&self) -> impl Iterator<Item = JointId> + '_ {
        JointId::ALL.into_iter().filter(|j| self.get(*j) > 0.0)
    }
}

/// A required handshape at a point in the reference motion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HandshapeKeyframe {
    #[serde(rename = "t")]
    pub timestamp_ms: u64,
    pub hand: Hand,
    #[serde(rename = "handshape")]
    pub handshape_id: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignTemplate {
    pub id: String,
    pub gloss: String,
    pub sequence: NormalizedSequence,
    /// Reference hand stream, used when generating synthetic attempts.
    pub hands: Vec<HandObservation>,
    pub handshape_keyframes: Vec<HandshapeKeyframe>,
    pub weights: JointWeights,
    pub threshold_default: f64,
}

impl SignTemplate {
    pub fn new(
        id: impl Into<String>,
        gloss: impl Into<String>,
        sequence: NormalizedSequence,
        hands: Vec<HandObservation>,
        handshape_keyframes: Vec<HandshapeKeyframe>,
        weights: JointWeights,
        threshold_default: f64,
    ) -> Result<Self, TemplateError> {
        let id = id.into();
        if id.is_empty() {
            return Err(TemplateError::EmptyId);
        }
        let (start, end) = (
            sequence.as_sequence().start_ms(),
            sequence.as_sequence().end_ms(),
        );
        for (index, kf) in handshape_keyframes.iter().enumerate() {
            if kf.timestamp_ms < start || kf.timestamp_ms > end {
                return Err(TemplateError::KeyframeOutOfRange {
                    index,
                    timestamp_ms: kf.timestamp_ms,
                });
            }
        }
        if !(threshold_default > 0.0 && threshold_default < 100.0) {
            return Err(TemplateError::InvalidThreshold(threshold_default));
        }
        Ok(SignTemplate {
            id,
            gloss: gloss.into(),
            sequence,
            hands,
            handshape_keyframes,
            weights,
            threshold_default,
        })
    }
}
