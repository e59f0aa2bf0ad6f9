//! One attempt, end to end: tracking check, normalization, alignment,
//! movement and handshape scores, threshold gate and error localization.

use serde::{Deserialize, Serialize};

use crate::alignment::{dtw_align, movement_score, AlignmentError, Band, DtwConfig};
use crate::feedback::PoseView;
use crate::hand::HandObservation;
use crate::handshape::{handshape_score_for_attempt, HandshapeLibrary};
use crate::joint::JointId;
use crate::scoring::{combine, gate, localize_errors, ComparisonResult, ScoringConfig, ScoringError};
use crate::skeleton::{normalize, SkeletonError, SkeletonSequence};
use crate::space::{validate_signing_space, SpaceConfig};
use crate::swarm::{SwarmConfig, SwarmError};
use crate::template::SignTemplate;

/// Largest share of untracked samples tolerated on any active joint.
pub const MAX_UNTRACKED_FRACTION: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub band: Band,
    pub cost_scale: f64,
    pub scoring: ScoringConfig,
    pub swarm: SwarmConfig,
    pub space: SpaceConfig,
    pub max_untracked_fraction: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            band: Band::Auto,
            cost_scale: DtwConfig::DEFAULT_COST_SCALE,
            scoring: ScoringConfig::default(),
            swarm: SwarmConfig::default(),
            space: SpaceConfig::default(),
            max_untracked_fraction: MAX_UNTRACKED_FRACTION,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), PipelineError> {
        self.scoring.validate()?;
        self.swarm.validate()?;
        if !(self.cost_scale > 0.0 && self.cost_scale.is_finite()) {
            return Err(PipelineError::InvalidConfig("cost_scale must be positive"));
        }
        if !(0.0..=1.0).contains(&self.max_untracked_fraction) {
            return Err(PipelineError::InvalidConfig("max_untracked_fraction must lie in [0, 1]"));
        }
        Ok(())
    }

    pub fn dtw(&self, template: &SignTemplate) -> DtwConfig {
        DtwConfig {
            band: self.band,
            joint_weights: template.weights,
            cost_scale: self.cost_scale,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PipelineError {
    #[error("joint {joint} is untracked in {:.0}% of frames; please record again", fraction * 100.0)]
    PoorTracking { joint: JointId, fraction: f64 },
    #[error(transparent)]
    Skeleton(#[from] SkeletonError),
    #[error(transparent)]
    Alignment(#[from] AlignmentError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error(transparent)]
    Swarm(#[from] SwarmError),
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Compares a raw attempt with `template` and gates it at `threshold`.
///
/// Signing-space violations are attached as warnings and never fail the
/// attempt on their own.
pub fn attempt_pipeline(
    template: &SignTemplate,
    raw: &SkeletonSequence,
    hands: &[HandObservation],
    threshold: f64,
    lib: &HandshapeLibrary,
    cfg: &PipelineConfig,
) -> Result<ComparisonResult, PipelineError> {
    cfg.validate()?;
    for joint in template.weights.active_joints() {
        let fraction = raw.untracked_fraction(joint);
        if fraction > cfg.max_untracked_fraction {
            return Err(PipelineError::PoorTracking { joint, fraction });
        }
    }
    let attempt = normalize(&raw.with_untracked_filled())?;
    let dtw = cfg.dtw(template);
    let alignment = dtw_align(&template.sequence, &attempt, &dtw)?;
    let movement = movement_score(&alignment, &dtw);
    let handshape = handshape_score_for_attempt(hands, template, &attempt, &alignment, lib, &cfg.swarm);
    let accuracy = combine(movement, handshape.score, &cfg.scoring);
    let joint_errors = localize_errors(&alignment, &template.sequence, &attempt, &template.weights, &cfg.scoring);
    Ok(ComparisonResult {
        template_id: template.id.clone(),
        movement_score: movement,
        handshape_score: handshape.score,
        accuracy,
        passed: gate(accuracy, threshold),
        threshold_used: threshold,
        joint_errors,
        handshape,
        space_warnings: validate_signing_space(&attempt, &cfg.space),
        alignment,
        attempt: PoseView::track(attempt.frames()),
    })
}
