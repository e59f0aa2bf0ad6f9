//! Synthetic attempts: a template's motion with injected errors.
//!
//! Each error class matches something the feedback modes can point at:
//! timing (none expected), a displaced joint, a wrong handshape, or a wobbly
//! path. Generation is deterministic in the spec's seed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::format::Recording;
use crate::handshape::{mix_seed, HandshapeLibrary};
use crate::joint::{Axis, JointId, Vec3};
use crate::skeleton::{Frame, SkeletonSequence};
use crate::template::SignTemplate;

/// Speed factors outside this range are rejected.
pub const TIME_WARP_RANGE: (f64, f64) = (0.25, 4.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    /// Performs the sign `factor` times faster (durations divide by it).
    TimeWarp { factor: f64 },
    /// Moves one joint along `axis` on an inclusive range of template frames.
    JointOffset {
        joint: JointId,
        axis: Axis,
        magnitude: f64,
        frame_range: (usize, usize),
    },
    /// Replaces the hand observation at a keyframe with another shape.
    HandshapeSwap { keyframe_index: usize, replacement_id: String },
    /// Circular wobble of constant radius in the frontal plane, applied to a
    /// joint and everything distal to it.
    PathDeviation { joint: JointId, amplitude: f64, frequency: f64 },
    /// Gaussian noise on every coordinate of the template's active joints.
    Jitter { sigma: f64 },
}

impl Perturbation {
    pub fn kind(&self) -> &'static str {
        match self {
            Perturbation::TimeWarp { .. } => "time-warp",
            Perturbation::JointOffset { .. } => "joint-offset",
            Perturbation::HandshapeSwap { .. } => "handshape-swap",
            Perturbation::PathDeviation { .. } => "path-deviation",
            Perturbation::Jitter { .. } => "jitter",
        }
    }
}

/// What to inject. No perturbations gives a faithful copy.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ErrorSpec {
    #[serde(default)]
    pub perturbations: Vec<Perturbation>,
    #[serde(default)]
    pub seed: u64,
}

impl ErrorSpec {
    pub fn none(seed: u64) -> ErrorSpec {
        ErrorSpec {
            perturbations: Vec::new(),
            seed,
        }
    }

    pub fn with(mut self, p: Perturbation) -> ErrorSpec {
        self.perturbations.push(p);
        self
    }

    /// A badly wrong attempt: the right arm wobbles half a shoulder width
    /// off its path and every keyframe shows the wrong handshape.
    pub fn gross_error(template: &SignTemplate, seed: u64) -> ErrorSpec {
        let mut spec = ErrorSpec::none(seed).with(Perturbation::PathDeviation {
            joint: JointId::RightElbow,
            amplitude: 0.5,
            frequency: 1.0,
        });
        for (k, kf) in template.handshape_keyframes.iter().enumerate() {
            let replacement = if kf.handshape_id == "fist" { "spread-5" } else { "fist" };
            spec = spec.with(Perturbation::HandshapeSwap {
                keyframe_index: k,
                replacement_id: replacement.to_string(),
            });
        }
        spec
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{kind}: {reason}")]
pub struct SpecOutOfRange {
    pub kind: &'static str,
    pub reason: String,
}

fn out_of_range(p: &Perturbation, reason: impl Into<String>) -> SpecOutOfRange {
    SpecOutOfRange {
        kind: p.kind(),
        reason: reason.into(),
    }
}

fn check(p: &Perturbation, template: &SignTemplate, lib: &HandshapeLibrary) -> Result<(), SpecOutOfRange> {
    let frames = template.sequence.len();
    match p {
        Perturbation::TimeWarp { factor } => {
            if !(*factor >= TIME_WARP_RANGE.0 && *factor <= TIME_WARP_RANGE.1) {
                return Err(out_of_range(p, format!("factor {factor} outside [0.25, 4]")));
            }
        }
        Perturbation::JointOffset {
            magnitude, frame_range, ..
        } => {
            if !(*magnitude >= 0.0 && magnitude.is_finite()) {
                return Err(out_of_range(p, "magnitude must be non-negative"));
            }
            let (a, b) = *frame_range;
            if a > b || b >= frames {
                return Err(out_of_range(p, format!("frame range {a}-{b} outside 0-{}", frames - 1)));
            }
        }
        Perturbation::HandshapeSwap {
            keyframe_index,
            replacement_id,
        } => {
            if *keyframe_index >= template.handshape_keyframes.len() {
                return Err(out_of_range(
                    p,
                    format!(
                        "keyframe {keyframe_index} but the template has {}",
                        template.handshape_keyframes.len()
                    ),
                ));
            }
            if lib.get(replacement_id).is_none() {
                return Err(out_of_range(p, format!("unknown handshape `{replacement_id}`")));
            }
        }
        Perturbation::PathDeviation { amplitude, frequency, .. } => {
            if !(*amplitude >= 0.0 && amplitude.is_finite()) {
                return Err(out_of_range(p, "amplitude must be non-negative"));
            }
            if !(*frequency >= 0.0 && frequency.is_finite()) {
                return Err(out_of_range(p, "frequency must be non-negative"));
            }
        }
        Perturbation::Jitter { sigma } => {
            if !(*sigma >= 0.0 && sigma.is_finite()) {
                return Err(out_of_range(p, "sigma must be non-negative"));
            }
        }
    }
    Ok(())
}

/// Builds an attempt from `template` with the errors in `spec` injected.
///
/// Spatial errors apply to template frame indices; time warps apply last.
pub fn synth(template: &SignTemplate, spec: &ErrorSpec, lib: &HandshapeLibrary) -> Result<Recording, SpecOutOfRange> {
    for p in &spec.perturbations {
        check(p, template, lib)?;
    }
    let source = template.sequence.as_sequence();
    let mut frames: Vec<Frame> = source.frames().to_vec();
    let mut hands = template.hands.clone();
    let mut speed = 1.0;
    let t0 = source.start_ms();

    for (k, p) in spec.perturbations.iter().enumerate() {
        let seed = mix_seed(spec.seed, k as u64);
        match p {
            Perturbation::TimeWarp { factor } => speed *= factor,
            Perturbation::JointOffset {
                joint,
                axis,
                magnitude,
                frame_range: (a, b),
            } => {
                let delta = axis.unit() * *magnitude;
                for f in &mut frames[*a..=*b] {
                    f.positions[*joint] = f.positions[*joint] + delta;
                }
            }
            Perturbation::HandshapeSwap {
                keyframe_index,
                replacement_id,
            } => {
                let kf = &template.handshape_keyframes[*keyframe_index];
                let shape = lib.get(replacement_id).expect("checked above");
                let target = hands
                    .iter_mut()
                    .filter(|h| h.hand == kf.hand)
                    .min_by_key(|h| h.timestamp_ms.abs_diff(kf.timestamp_ms));
                match target {
                    Some(obs) => obs.angles = shape.angles,
                    None => hands.push(crate::hand::HandObservation {
                        timestamp_ms: kf.timestamp_ms,
                        hand: kf.hand,
                        angles: shape.angles,
                    }),
                }
            }
            Perturbation::PathDeviation {
                joint,
                amplitude,
                frequency,
            } => {
                let phase = (seed >> 11) as f64 / (1u64 << 53) as f64 * std::f64::consts::TAU;
                for f in &mut frames {
                    let secs = (f.timestamp_ms - t0) as f64 / 1000.0;
                    let angle = std::f64::consts::TAU * frequency * secs + phase;
                    let delta = Vec3::new(angle.cos(), angle.sin(), 0.0) * *amplitude;
                    for j in joint.distal_chain() {
                        f.positions[*j] = f.positions[*j] + delta;
                    }
                }
            }
            Perturbation::Jitter { sigma } => {
                if *sigma == 0.0 {
                    continue;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let noise = Normal::new(0.0, *sigma).expect("sigma is finite and non-negative");
                let active: Vec<JointId> = template.weights.active_joints().collect();
                for f in &mut frames {
                    for j in &active {
                        let n = Vec3::new(noise.sample(&mut rng), noise.sample(&mut rng), noise.sample(&mut rng));
                        f.positions[*j] = f.positions[*j] + n;
                    }
                }
            }
        }
    }

    let rate = source.nominal_rate_hz();
    let perturbed = SkeletonSequence::new(frames, rate).expect("perturbation keeps timestamps");
    let sequence = if speed == 1.0 {
        perturbed
    } else {
        warp(&perturbed, speed)
    };
    if speed != 1.0 {
        for h in &mut hands {
            h.timestamp_ms = t0 + ((h.timestamp_ms - t0) as f64 / speed).round() as u64;
        }
    }
    Ok(Recording {
        id: format!("{}-synth-{:016x}", template.id, mix_seed(spec.seed, 0x5eed)),
        gloss: template.gloss.clone(),
        sequence,
        hands,
    })
}

/// Replays `seq` `speed` times faster at its own nominal rate.
fn warp(seq: &SkeletonSequence, speed: f64) -> SkeletonSequence {
    let t0 = seq.start_ms();
    let duration = seq.duration_ms() as f64 / speed;
    let rate = seq.nominal_rate_hz();
    let count = ((duration * rate / 1000.0).round() as usize + 1).max(2);
    let step = duration / (count - 1) as f64;
    let last = seq.frames().len() - 1;
    let frames = (0..count)
        .map(|k| {
            let offset = (k as f64 * step).round();
            let mut f = if k == 0 {
                seq.frames()[0].clone()
            } else if k == count - 1 {
                seq.frames()[last].clone()
            } else {
                seq.sample_at(t0 as f64 + offset * speed)
            };
            f.timestamp_ms = t0 + offset as u64;
            f
        })
        .collect();
    SkeletonSequence::new(frames, rate).expect("warped timestamps increase")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::{attempt_pipeline, PipelineConfig};
    use crate::samples::{sample_library, sample_template, sample_templates};

    #[test]
    fn no_errors_copies_the_motion() {
        let lib = sample_library();
        for t in sample_templates() {
            let a = synth(&t, &ErrorSpec::none(3), &lib).unwrap();
            assert_eq!(a.sequence.frames(), t.sequence.frames());
            assert_eq!(a.hands, t.hands);
            assert_ne!(a.id, t.id);
            let r = attempt_pipeline(&t, &a.sequence, &a.hands, 80.0, &lib, &PipelineConfig::default()).unwrap();
            assert_eq!(r.accuracy, 100.0);
        }
    }

    #[test]
    fn same_seed_same_attempt() {
        let t = sample_template("hello").unwrap();
        let lib = sample_library();
        let spec = ErrorSpec::none(9).with(Perturbation::Jitter { sigma: 0.02 }).with(Perturbation::PathDeviation {
            joint: JointId::RightWrist,
            amplitude: 0.2,
            frequency: 1.5,
        });
        assert_eq!(synth(&t, &spec, &lib).unwrap(), synth(&t, &spec, &lib).unwrap());
        let other = ErrorSpec { seed: 10, ..spec.clone() };
        assert_ne!(synth(&t, &spec, &lib).unwrap().sequence, synth(&t, &other, &lib).unwrap().sequence);
    }

    #[test]
    fn time_warp_changes_duration_and_keeps_endpoints() {
        let t = sample_template("hello").unwrap();
        let a = synth(&t, &ErrorSpec::none(0).with(Perturbation::TimeWarp { factor: 1.25 }), &sample_library()).unwrap();
        assert_eq!(a.sequence.duration_ms(), 1600);
        assert_eq!(a.sequence.len(), 49);
        let (first, last) = (&a.sequence.frames()[0], a.sequence.frames().last().unwrap());
        assert_eq!(first.positions, t.sequence.frames()[0].positions);
        assert_eq!(last.positions, t.sequence.frames().last().unwrap().positions);
        for (h, g) in a.hands.iter().zip(&t.hands) {
            assert_eq!(h.timestamp_ms, (g.timestamp_ms as f64 / 1.25).round() as u64);
        }
    }

    #[test]
    fn joint_offset_touches_only_the_range() {
        let t = sample_template("hello").unwrap();
        let spec = ErrorSpec::none(0).with(Perturbation::JointOffset {
            joint: JointId::RightWrist,
            axis: Axis::X,
            magnitude: 0.3,
            frame_range: (10, 25),
        });
        let a = synth(&t, &spec, &sample_library()).unwrap();
        for (k, (f, g)) in a.sequence.frames().iter().zip(t.sequence.frames()).enumerate() {
            let d = f.position(JointId::RightWrist) - g.position(JointId::RightWrist);
            let expected = if (10..=25).contains(&k) { 0.3 } else { 0.0 };
            assert!((d.x - expected).abs() < 1e-12 && d.y == 0.0 && d.z == 0.0);
            assert_eq!(f.position(JointId::RightHand), g.position(JointId::RightHand));
        }
    }

    #[test]
    fn handshape_swap_replaces_one_observation() {
        let t = sample_template("hello").unwrap();
        let lib = sample_library();
        let spec = ErrorSpec::none(0).with(Perturbation::HandshapeSwap {
            keyframe_index: 1,
            replacement_id: "fist".into(),
        });
        let a = synth(&t, &spec, &lib).unwrap();
        let changed: Vec<usize> = (0..a.hands.len()).filter(|k| a.hands[*k] != t.hands[*k]).collect();
        assert_eq!(changed, vec![1]);
        assert_eq!(a.hands[1].angles, lib.get("fist").unwrap().angles);
    }

    #[test]
    fn path_deviation_has_constant_radius() {
        let t = sample_template("where").unwrap();
        let spec = ErrorSpec::none(4).with(Perturbation::PathDeviation {
            joint: JointId::RightWrist,
            amplitude: 0.5,
            frequency: 2.0,
        });
        let a = synth(&t, &spec, &sample_library()).unwrap();
        for (f, g) in a.sequence.frames().iter().zip(t.sequence.frames()) {
            for j in [JointId::RightWrist, JointId::RightHand] {
                assert!((f.position(j).distance(g.position(j)) - 0.5).abs() < 1e-12);
            }
            assert_eq!(f.position(JointId::RightElbow), g.position(JointId::RightElbow));
        }
    }

    #[test]
    fn out_of_range_specs_are_rejected() {
        let t = sample_template("hello").unwrap();
        let lib = sample_library();
        let bad = [
            Perturbation::TimeWarp { factor: 0.0 },
            Perturbation::JointOffset {
                joint: JointId::RightWrist,
                axis: Axis::X,
                magnitude: 0.3,
                frame_range: (10, 999),
            },
            Perturbation::JointOffset {
                joint: JointId::RightWrist,
                axis: Axis::X,
                magnitude: -1.0,
                frame_range: (0, 1),
            },
            Perturbation::HandshapeSwap {
                keyframe_index: 7,
                replacement_id: "fist".into(),
            },
            Perturbation::HandshapeSwap {
                keyframe_index: 0,
                replacement_id: "claw".into(),
            },
            Perturbation::PathDeviation {
                joint: JointId::RightWrist,
                amplitude: -0.1,
                frequency: 1.0,
            },
        ];
        for p in bad {
            let kind = p.kind();
            let err = synth(&t, &ErrorSpec::none(0).with(p), &lib).unwrap_err();
            assert_eq!(err.kind, kind);
        }
    }

    #[test]
    fn spec_serializes_with_kind_tags() {
        let spec = ErrorSpec::none(1).with(Perturbation::TimeWarp { factor: 1.25 });
        let text = serde_json::to_string(&spec).unwrap();
        assert_eq!(text, r#"{"perturbations":[{"kind":"time-warp","factor":1.25}],"seed":1}"#);
    }
}
