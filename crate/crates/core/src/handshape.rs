//! Handshape recognition: swarm refinement around each library shape, with an
//! exact nearest-neighbour oracle for verification.

use serde::{Deserialize, Serialize};

use crate::alignment::Alignment;
use crate::hand::{angle_range, l2, Hand, HandAngles, HandObservation, Handshape, ANGLE_COUNT};
use crate::skeleton::NormalizedSequence;
use crate::swarm::{Swarm, SwarmConfig};
use crate::template::SignTemplate;

/// Half-width in degrees of the search box around each candidate shape.
pub const REFINEMENT_HALF_WIDTH: f64 = 20.0;

/// Half-width in degrees of the region where a third of the particles start.
pub const SEED_HALF_WIDTH: f64 = 10.0;

/// Residuals closer than this (degrees) count as a tie, resolved by library
/// index. The swarm does not resolve residuals more finely than this.
pub const RESIDUAL_TIE_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum HandshapeError {
    #[error("handshape library is empty")]
    EmptyLibrary,
    #[error("handshape library needs at least 2 shapes")]
    TooFewShapes,
    #[error("duplicate handshape id `{0}`")]
    DuplicateId(String),
    #[error("handshapes `{0}` and `{1}` have identical angles")]
    Coincident(String, String),
}

/// A validated set of reference handshapes.
#[derive(Debug, Clone, PartialEq)]
pub struct HandshapeLibrary {
    shapes: Vec<Handshape>,
    min_pairwise_separation: f64,
}

impl HandshapeLibrary {
    pub fn new(shapes: Vec<Handshape>) -> Result<Self, HandshapeError> {
        if shapes.is_empty() {
            return Err(HandshapeError::EmptyLibrary);
        }
        if shapes.len() < 2 {
            return Err(HandshapeError::TooFewShapes);
        }
        let mut sep = f64::INFINITY;
        for (i, a) in shapes.iter().enumerate() {
            for b in &shapes[i + 1..] {
                if a.id == b.id {
                    return Err(HandshapeError::DuplicateId(a.id.clone()));
                }
                let d = a.angles.distance(&b.angles);
                if d == 0.0 {
                    return Err(HandshapeError::Coincident(a.id.clone(), b.id.clone()));
                }
                sep = sep.min(d);
            }
        }
        Ok(HandshapeLibrary {
            shapes,
            min_pairwise_separation: sep,
        })
    }

    pub fn shapes(&self) -> &[Handshape] {
        &self.shapes
    }

    pub fn len(&self) -> usize {
        self.shapes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.shapes.is_empty()
    }

    pub fn min_pairwise_separation(&self) -> f64 {
        self.min_pairwise_separation
    }

    /// Residual that maps to a score of 0.
    pub fn residual_scale(&self) -> f64 {
        self.min_pairwise_separation / 2.0
    }

    pub fn get(&self, id: &str) -> Option<&Handshape> {
        self.shapes.iter().find(|s| s.id == id)
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.shapes.iter().position(|s| s.id == id)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshapeMatch {
    pub best_id: String,
    pub refined_angles: HandAngles,
    pub residual: f64,
    pub score: f64,
}

fn score_for(residual: f64, lib: &HandshapeLibrary) -> f64 {
    100.0 * (1.0 - residual / lib.residual_scale()).max(0.0)
}

/// SplitMix64 step, used to derive independent sub-run seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Search box of a candidate shape: its angles ± `half_width`, kept inside
/// the anatomical ranges.
fn box_around(center: &HandAngles, half_width: f64) -> [(f64, f64); ANGLE_COUNT] {
    std::array::from_fn(|d| {
        let (lo, hi) = angle_range(d);
        let c = center.as_array()[d];
        ((c - half_width).max(lo), (c + half_width).min(hi))
    })
}

/// Refines the observation toward each library shape with an independent
/// swarm confined to that shape's box, and reports the shape whose refinement
/// gets closest to the observation.
///
/// One third of each sub-run's particles start within ±10° of the shape (the
/// first exactly on it); the rest start uniformly in the box. Near-equal
/// residuals go to the lower library index.
pub fn match_handshape(obs: &HandObservation, lib: &HandshapeLibrary, cfg: &SwarmConfig) -> HandshapeMatch {
    let target = obs.angles.as_array();
    let fitness = |x: &[f64]| l2(x, target);
    let mut best: Option<(usize, Vec<f64>, f64)> = None;
    for (index, shape) in lib.shapes().iter().enumerate() {
        let bounds = box_around(&shape.angles, REFINEMENT_HALF_WIDTH);
        let sub_cfg = cfg.with_seed(mix_seed(cfg.seed, index as u64));
        let seeded = seeded_starts(&shape.angles, cfg.particles / 3, sub_cfg.seed);
        let swarm = Swarm::new(&bounds, &sub_cfg)
            .expect("library boxes are non-empty and the config was validated")
            .with_initial_positions(seeded);
        let out = swarm.minimize(fitness);
        let better = match &best {
            None => true,
            Some((_, _, r)) => out.best_fitness < r - RESIDUAL_TIE_TOLERANCE,
        };
        if better {
            best = Some((index, out.best_position, out.best_fitness));
        }
    }
    let (index, position, residual) = best.expect("library has at least 2 shapes");
    let refined: [f64; ANGLE_COUNT] = position.try_into().expect("15 dimensions");
    HandshapeMatch {
        best_id: lib.shapes()[index].id.clone(),
        refined_angles: HandAngles::clamped(refined).0,
        residual,
        score: score_for(residual, lib),
    }
}

fn seeded_starts(center: &HandAngles, count: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(mix_seed(seed, u64::MAX));
    let mut starts = Vec::with_capacity(count.max(1));
    starts.push(center.as_array().to_vec());
    let near = box_around(center, SEED_HALF_WIDTH);
    for _ in 1..count {
        starts.push(near.iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect());
    }
    starts
}

/// Exact nearest library shape by L2 distance; ties go to the lower index.
pub fn oracle_match(obs: &HandObservation, lib: &HandshapeLibrary) -> HandshapeMatch {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, shape) in lib.shapes().iter().enumerate() {
        let d = shape.angles.distance(&obs.angles);
        if d < best_d {
            best = i;
            best_d = d;
        }
    }
    HandshapeMatch {
        best_id: lib.shapes()[best].id.clone(),
        refined_angles: obs.angles,
        residual: best_d,
        score: score_for(best_d, lib),
    }
}

/// Outcome of checking one template keyframe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeCheck {
    pub index: usize,
    pub hand: Hand,
    /// Keyframe time in the reference.
    pub template_t: u64,
    pub expected_id: String,
    /// Time of the attempt observation that was matched, if any.
    pub attempt_t: Option<u64>,
    pub matched_id: Option<String>,
    pub residual: Option<f64>,
    pub correct: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandshapeReport {
    pub score: f64,
    /// Set when the attempt carried no hand stream; the score is then 100.
    pub hand_data_absent: bool,
    pub keyframes: Vec<KeyframeCheck>,
}

impl HandshapeReport {
    pub fn incorrect_keyframes(&self) -> impl Iterator<Item = &KeyframeCheck> {
        self.keyframes.iter().filter(|k| !k.correct)
    }
}

/// Reference frame whose timestamp is nearest to `t` (earlier on ties).
fn nearest_frame(seq: &NormalizedSequence, t: u64) -> usize {
    let frames = seq.frames();
    let hi = frames.partition_point(|f| f.timestamp_ms < t);
    if hi == 0 {
        return 0;
    }
    if hi == frames.len() {
        return frames.len() - 1;
    }
    if t - frames[hi - 1].timestamp_ms <= frames[hi].timestamp_ms - t {
        hi - 1
    } else {
        hi
    }
}

/// Maps a reference time onto the attempt timeline through the warping path
/// (middle of the attempt frames aligned to the nearest reference frame).
pub fn warp_time(t: u64, reference: &NormalizedSequence, attempt: &NormalizedSequence, alignment: &Alignment) -> u64 {
    let i = nearest_frame(reference, t);
    let js: Vec<usize> = alignment.attempt_indices_for(i).collect();
    let j = js[js.len() / 2];
    attempt.frames()[j].timestamp_ms
}

/// Scores the attempt's handshapes at each template keyframe: the
/// observation of the same hand nearest the warped keyframe time is matched
/// against the library, and the keyframe counts as correct when the matched
/// shape is the required one.
pub fn handshape_score_for_attempt(
    hands: &[HandObservation],
    template: &SignTemplate,
    attempt: &NormalizedSequence,
    alignment: &Alignment,
    lib: &HandshapeLibrary,
    cfg: &SwarmConfig,
) -> HandshapeReport {
    if hands.is_empty() || template.handshape_keyframes.is_empty() {
        return HandshapeReport {
            score: 100.0,
            hand_data_absent: hands.is_empty(),
            keyframes: Vec::new(),
        };
    }
    let mut checks = Vec::with_capacity(template.handshape_keyframes.len());
    for (index, kf) in template.handshape_keyframes.iter().enumerate() {
        let t = warp_time(kf.timestamp_ms, &template.sequence, attempt, alignment);
        let nearest = hands
            .iter()
            .filter(|h| h.hand == kf.hand)
            .min_by_key(|h| (h.timestamp_ms.abs_diff(t), h.timestamp_ms));
        let check = match nearest {
            Some(obs) => {
                let m = match_handshape(obs, lib, &cfg.with_seed(mix_seed(cfg.seed, 1000 + index as u64)));
                KeyframeCheck {
                    index,
                    hand: kf.hand,
                    template_t: kf.timestamp_ms,
                    expected_id: kf.handshape_id.clone(),
                    attempt_t: Some(obs.timestamp_ms),
                    correct: m.best_id == kf.handshape_id,
                    matched_id: Some(m.best_id),
                    residual: Some(m.residual),
                }
            }
            None => KeyframeCheck {
                index,
                hand: kf.hand,
                template_t: kf.timestamp_ms,
                expected_id: kf.handshape_id.clone(),
                attempt_t: None,
                matched_id: None,
                residual: None,
                correct: false,
            },
        };
        checks.push(check);
    }
    let correct = checks.iter().filter(|c| c.correct).count();
    HandshapeReport {
        score: 100.0 * correct as f64 / checks.len() as f64,
        hand_data_absent: false,
        keyframes: checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samples::sample_library;

    fn obs(angles: [f64; ANGLE_COUNT]) -> HandObservation {
        HandObservation::from_raw(0, Hand::Right, angles).0
    }

    #[test]
    fn library_validation() {
        let lib = sample_library();
        let flat = lib.get("flat").unwrap().clone();
        assert_eq!(HandshapeLibrary::new(vec![]), Err(HandshapeError::EmptyLibrary));
        assert_eq!(HandshapeLibrary::new(vec![flat.clone()]), Err(HandshapeError::TooFewShapes));
        assert_eq!(
            HandshapeLibrary::new(vec![flat.clone(), flat.clone()]),
            Err(HandshapeError::DuplicateId("flat".into()))
        );
        let twin = Handshape { id: "twin".into(), ..flat.clone() };
        assert!(matches!(HandshapeLibrary::new(vec![flat, twin]), Err(HandshapeError::Coincident(..))));
    }

    #[test]
    fn min_separation_is_smallest_pairwise_distance() {
        let lib = sample_library();
        let mut brute = f64::INFINITY;
        for a in lib.shapes() {
            for b in lib.shapes() {
                if a.id != b.id {
                    brute = brute.min(l2(a.angles.as_array(), b.angles.as_array()));
                }
            }
        }
        assert_eq!(lib.min_pairwise_separation(), brute);
    }

    #[test]
    fn exact_member_matches_itself() {
        let lib = sample_library();
        let flat = lib.get("flat").unwrap();
        let m = match_handshape(&obs(*flat.angles.as_array()), &lib, &SwarmConfig::default());
        assert_eq!(m.best_id, "flat");
        assert!(m.residual <= 1e-6);
        assert!(m.score >= 99.99);
        let o = oracle_match(&obs(*flat.angles.as_array()), &lib);
        assert_eq!(o.best_id, "flat");
        assert_eq!(o.residual, 0.0);
    }

    #[test]
    fn midpoint_ties_go_to_lower_index() {
        // in the full sample library letter-c lies nearer this midpoint than
        // either end, so the pair gets a library of its own
        let sample = sample_library();
        let lib = HandshapeLibrary::new(vec![sample.shapes()[0].clone(), sample.shapes()[1].clone()]).unwrap();
        let (a, b) = (&lib.shapes()[0], &lib.shapes()[1]);
        let mid: [f64; ANGLE_COUNT] =
            std::array::from_fn(|d| (a.angles.as_array()[d] + b.angles.as_array()[d]) / 2.0);
        assert_eq!(oracle_match(&obs(mid), &lib).best_id, a.id);
        assert_eq!(match_handshape(&obs(mid), &lib, &SwarmConfig::default()).best_id, a.id);
    }

    #[test]
    fn oracle_agrees_with_linear_scan() {
        use rand::{Rng, SeedableRng};
        let lib = sample_library();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let raw: [f64; ANGLE_COUNT] = std::array::from_fn(|d| {
                let (lo, hi) = angle_range(d);
                rng.random_range(lo..=hi)
            });
            let o = obs(raw);
            let m = oracle_match(&o, &lib);
            let dists: Vec<f64> = lib
                .shapes()
                .iter()
                .map(|s| {
                    s.angles
                        .as_array()
                        .iter()
                        .zip(raw)
                        .map(|(a, b)| (a - b).powi(2))
                        .sum::<f64>()
                        .sqrt()
                })
                .collect();
            let min = dists.iter().cloned().fold(f64::INFINITY, f64::min);
            let first = dists.iter().position(|d| *d == min).unwrap();
            assert_eq!(m.best_id, lib.shapes()[first].id);
            assert!((m.residual - min).abs() < 1e-9);
        }
    }

    #[test]
    fn refinement_never_worse_than_oracle_plus_box() {
        use rand::{Rng, SeedableRng};
        let lib = sample_library();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let bound = REFINEMENT_HALF_WIDTH * (ANGLE_COUNT as f64).sqrt();
        for k in 0..30 {
            let raw: [f64; ANGLE_COUNT] = std::array::from_fn(|d| {
                let (lo, hi) = angle_range(d);
                rng.random_range(lo..=hi)
            });
            let o = obs(raw);
            let m = match_handshape(&o, &lib, &SwarmConfig::default().with_seed(k));
            let exact = oracle_match(&o, &lib);
            assert!(m.residual <= exact.residual + bound);
            // the shape itself is always a candidate, so refinement cannot lose to it
            assert!(m.residual <= exact.residual + RESIDUAL_TIE_TOLERANCE);
            assert!((0.0..=100.0).contains(&m.score));
        }
    }

    #[test]
    fn matching_is_deterministic() {
        let lib = sample_library();
        let mut raw = *lib.get("fist").unwrap().angles.as_array();
        raw[4] -= 7.0;
        raw[9] += 3.0;
        let a = match_handshape(&obs(raw), &lib, &SwarmConfig::default());
        let b = match_handshape(&obs(raw), &lib, &SwarmConfig::default());
        assert_eq!(a, b);
        assert_eq!(a.best_id, "fist");
    }
}
