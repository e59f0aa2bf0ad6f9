//! Dynamic time warping of an attempt against a reference motion.
//!
//! The local cost between two frames is the weight-summed Euclidean distance
//! of their joints. Paths use the symmetric unit step pattern (diagonal,
//! reference-advance, attempt-advance) and are optionally confined to a
//! Sakoe-Chiba band `|i - j| <= radius` in frame indices.

use serde::{Deserialize, Serialize};

use crate::joint::JointId;
use crate::skeleton::{Frame, NormalizedSequence};
use crate::template::JointWeights;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AlignmentError {
    #[error("sequences of {reference} and {attempt} frames cannot be aligned within band radius {radius}")]
    BandInfeasible {
        reference: usize,
        attempt: usize,
        radius: usize,
    },
    #[error("both sequences need at least 2 frames")]
    TooShort,
    #[error("band radius must be at least 1")]
    ZeroBand,
}

/// Warping band.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    /// `max(5, ceil(0.2 * max(m, n))) + |m - n|`.
    Auto,
    Unlimited,
    Radius(usize),
}

impl Band {
    /// The concrete radius for sequences of `m` and `n` frames.
    pub fn radius(self, m: usize, n: usize) -> Option<usize> {
        match self {
            Band::Unlimited => None,
            Band::Radius(r) => Some(r),
            Band::Auto => {
                let longest = m.max(n);
                let base = (5usize).max((0.2 * longest as f64).ceil() as usize);
                Some(base + m.abs_diff(n))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DtwConfig {
    pub band: Band,
    pub joint_weights: JointWeights,
    /// Normalized cost that maps to a movement score of 0.
    pub cost_scale: f64,
}

impl DtwConfig {
    pub const DEFAULT_COST_SCALE: f64 = 0.8;

    pub fn new(joint_weights: JointWeights) -> Self {
        DtwConfig {
            band: Band::Auto,
            joint_weights,
            cost_scale: Self::DEFAULT_COST_SCALE,
        }
    }
}

/// A warping path with its per-step local costs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Alignment {
    /// `(reference_index, attempt_index)` pairs from `(0, 0)` to `(m-1, n-1)`.
    pub path: Vec<(usize, usize)>,
    pub step_costs: Vec<f64>,
    pub total_cost: f64,
    /// `total_cost / path.len()`.
    pub normalized_cost: f64,
}

impl Alignment {
    /// Attempt indices aligned to reference frame `ref_index`, in path order.
    pub fn attempt_indices_for(&self, ref_index: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.path.partition_point(|(i, _)| *i < ref_index);
        self.path[start..]
            .iter()
            .take_while(move |(i, _)| *i == ref_index)
            .map(|(_, j)| *j)
    }
}

/// Weight-summed Euclidean distance between corresponding joints.
pub fn frame_distance(a: &Frame, b: &Frame, weights: &JointWeights) -> f64 {
    JointId::ALL
        .iter()
        .map(|&j| {
            let w = weights.get(j);
            if w == 0.0 {
                0.0
            } else {
                w * a.position(j).distance(b.position(j))
            }
        })
        .sum()
}

pub fn dtw_align(
    reference: &NormalizedSequence,
    attempt: &NormalizedSequence,
    cfg: &DtwConfig,
) -> Result<Alignment, AlignmentError> {
    align_frames(reference.frames(), attempt.frames(), cfg)
}

/// Aligns raw frame slices; [`dtw_align`] is the normalized-sequence entry point.
///
/// Ties during backtracking prefer the diagonal predecessor, then the one
/// that advanced the reference, then the one that advanced the attempt.
pub fn align_frames(
    reference: &[Frame],
    attempt: &[Frame],
    cfg: &DtwConfig,
) -> Result<Alignment, AlignmentError> {
    let (m, n) = (reference.len(), attempt.len());
    if m < 2 || n < 2 {
        return Err(AlignmentError::TooShort);
    }
    let radius = cfg.band.radius(m, n);
    if let Some(r) = radius {
        if r == 0 {
            return Err(AlignmentError::ZeroBand);
        }
        if m.abs_diff(n) > r {
            return Err(AlignmentError::BandInfeasible {
                reference: m,
                attempt: n,
                radius: r,
            });
        }
    }
    let in_band = |i: usize, j: usize| radius.is_none_or(|r| i.abs_diff(j) <= r);

    let mut local = vec![f64::INFINITY; m * n];
    let mut acc = vec![f64::INFINITY; m * n];
    for i in 0..m {
        for j in 0..n {
            if !in_band(i, j) {
                continue;
            }
            let d = frame_distance(&reference[i], &attempt[j], &cfg.joint_weights);
            local[i * n + j] = d;
            let best_prev = if i == 0 && j == 0 {
                0.0
            } else {
                let diag = if i > 0 && j > 0 { acc[(i - 1) * n + j - 1] } else { f64::INFINITY };
                let up = if i > 0 { acc[(i - 1) * n + j] } else { f64::INFINITY };
                let left = if j > 0 { acc[i * n + j - 1] } else { f64::INFINITY };
                diag.min(up).min(left)
            };
            acc[i * n + j] = best_prev + d;
        }
    }

    let mut path = Vec::with_capacity(m + n);
    let (mut i, mut j) = (m - 1, n - 1);
    path.push((i, j));
    while (i, j) != (0, 0) {
        let diag = if i > 0 && j > 0 { acc[(i - 1) * n + j - 1] } else { f64::INFINITY };
        let up = if i > 0 { acc[(i - 1) * n + j] } else { f64::INFINITY };
        let left = if j > 0 { acc[i * n + j - 1] } else { f64::INFINITY };
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
        path.push((i, j));
    }
    path.reverse();

    let step_costs: Vec<f64> = path.iter().map(|&(i, j)| local[i * n + j]).collect();
    let total_cost: f64 = step_costs.iter().sum();
    let normalized_cost = total_cost / path.len() as f64;
    Ok(Alignment {
        path,
        step_costs,
        total_cost,
        normalized_cost,
    })
}

/// Minimum total cost over every monotone warping path inside the band,
/// found by enumerating all of them. Costs are summed from the start of each
/// path, in path order.
///
/// The number of paths grows exponentially; this is a test oracle for
/// sequences of a handful of frames. Returns infinity when no path fits the
/// band.
pub fn exhaustive_min_cost(
    reference: &[Frame],
    attempt: &[Frame],
    weights: &JointWeights,
    radius: Option<usize>,
) -> f64 {
    fn walk(i: usize, j: usize, sum: f64, local: &dyn Fn(usize, usize) -> Option<f64>, end: (usize, usize), best: &mut f64) {
        let Some(d) = local(i, j) else {
            return;
        };
        let sum = sum + d;
        if (i, j) == end {
            *best = best.min(sum);
            return;
        }
        if i < end.0 && j < end.1 {
            walk(i + 1, j + 1, sum, local, end, best);
        }
        if i < end.0 {
            walk(i + 1, j, sum, local, end, best);
        }
        if j < end.1 {
            walk(i, j + 1, sum, local, end, best);
        }
    }
    let (m, n) = (reference.len(), attempt.len());
    let mut best = f64::INFINITY;
    if m == 0 || n == 0 {
        return best;
    }
    let local = |i: usize, j: usize| {
        if radius.is_some_and(|r| i.abs_diff(j) > r) {
            None
        } else {
            Some(frame_distance(&reference[i], &attempt[j], weights))
        }
    };
    walk(0, 0, 0.0, &local, (m - 1, n - 1), &mut best);
    best
}

/// Normalized costs at or below this count as a perfect match. Sign files
/// keep 9 significant digits, so a stored copy of a sequence differs from
/// the original by about 1e-9 units.
pub const COST_FLOOR: f64 = 1e-6;

/// `100 * max(0, 1 - normalized_cost / cost_scale)`, or exactly 100 when the
/// cost is within [`COST_FLOOR`].
pub fn movement_score(alignment: &Alignment, cfg: &DtwConfig) -> f64 {
    if alignment.normalized_cost <= COST_FLOOR {
        return 100.0;
    }
    100.0 * (1.0 - alignment.normalized_cost / cfg.cost_scale).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::joint::Vec3;
    use crate::skeleton::test_support::standing_pose;
    use crate::skeleton::{normalize, SkeletonSequence};
    use proptest::prelude::*;

    fn right_hand_only() -> JointWeights {
        JointWeights::proportional(&[(JointId::RightHand, 1.0)]).unwrap()
    }

    /// A normalized sequence whose right hand x follows `xs`.
    fn scalar_sequence(xs: &[f64]) -> NormalizedSequence {
        let frames = xs
            .iter()
            .enumerate()
            .map(|(k, x)| {
                let mut pose = standing_pose();
                pose[JointId::RightHand.index()] = Vec3::new(*x, 0.5, -0.5);
                Frame::new(k as u64 * 33, pose)
            })
            .collect();
        normalize(&SkeletonSequence::new(frames, 30.0).unwrap()).unwrap()
    }

    fn cfg(band: Band) -> DtwConfig {
        DtwConfig {
            band,
            joint_weights: right_hand_only(),
            cost_scale: 0.8,
        }
    }

    #[test]
    fn frame_distance_examples() {
        let a = Frame::new(0, standing_pose());
        assert_eq!(frame_distance(&a, &a, &JointWeights::upper_body()), 0.0);
        let b = a.map_positions(|j, p| {
            if j == JointId::RightHand {
                p + Vec3::new(0.3, 0.0, 0.4)
            } else {
                p
            }
        });
        assert!((frame_distance(&a, &b, &right_hand_only()) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn self_alignment_is_diagonal() {
        let s = scalar_sequence(&[0.0, 0.3, 0.9, 0.4, 0.1]);
        let a = dtw_align(&s, &s, &cfg(Band::Auto)).unwrap();
        assert_eq!(a.total_cost, 0.0);
        assert_eq!(a.path, (0..5).map(|k| (k, k)).collect::<Vec<_>>());
    }

    #[test]
    fn repeated_frame_is_absorbed() {
        let r = scalar_sequence(&[0.0, 1.0, 2.0]);
        let t = scalar_sequence(&[0.0, 1.0, 1.0, 2.0]);
        let a = dtw_align(&r, &t, &cfg(Band::Unlimited)).unwrap();
        assert_eq!(a.total_cost, 0.0);
        assert_eq!(a.path, vec![(0, 0), (1, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn tie_break_prefers_diagonal_then_reference_advance() {
        // constant sequences: every path costs 0, so backtracking is all tie-breaks
        let r = scalar_sequence(&[0.0; 4]);
        let t = scalar_sequence(&[0.0; 3]);
        let a = dtw_align(&r, &t, &cfg(Band::Unlimited)).unwrap();
        assert_eq!(a.path, vec![(0, 0), (1, 0), (2, 1), (3, 2)]);
        let a = dtw_align(&t, &r, &cfg(Band::Unlimited)).unwrap();
        assert_eq!(a.path, vec![(0, 0), (0, 1), (1, 2), (2, 3)]);
    }

    #[test]
    fn band_infeasible_when_lengths_differ_too_much() {
        let r = scalar_sequence(&[0.0; 3]);
        let t = scalar_sequence(&[0.0; 8]);
        assert_eq!(
            dtw_align(&r, &t, &cfg(Band::Radius(4))),
            Err(AlignmentError::BandInfeasible {
                reference: 3,
                attempt: 8,
                radius: 4
            })
        );
        assert!(dtw_align(&r, &t, &cfg(Band::Radius(5))).is_ok());
        assert_eq!(dtw_align(&r, &t, &cfg(Band::Radius(0))), Err(AlignmentError::ZeroBand));
    }

    #[test]
    fn auto_band_radius() {
        assert_eq!(Band::Auto.radius(10, 10), Some(5));
        assert_eq!(Band::Auto.radius(100, 100), Some(20));
        assert_eq!(Band::Auto.radius(40, 53), Some(11 + 13));
        assert_eq!(Band::Unlimited.radius(3, 300), None);
    }

    #[test]
    fn movement_score_is_linear_in_cost() {
        let c = cfg(Band::Auto);
        let score = |nc: f64| {
            movement_score(
                &Alignment {
                    path: vec![(0, 0)],
                    step_costs: vec![nc],
                    total_cost: nc,
                    normalized_cost: nc,
                },
                &c,
            )
        };
        assert_eq!(score(0.0), 100.0);
        assert_eq!(score(0.8), 0.0);
        assert!((score(0.4) - 50.0).abs() < 1e-12);
        assert_eq!(score(5.0), 0.0);
    }

    #[test]
    fn attempt_indices_for_reference_frame() {
        let a = Alignment {
            path: vec![(0, 0), (1, 1), (1, 2), (2, 3)],
            step_costs: vec![0.0; 4],
            total_cost: 0.0,
            normalized_cost: 0.0,
        };
        assert_eq!(a.attempt_indices_for(1).collect::<Vec<_>>(), vec![1, 2]);
        assert_eq!(a.attempt_indices_for(2).collect::<Vec<_>>(), vec![3]);
    }

    fn arb_xs() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-2.0f64..2.0, 2..20)
    }

    proptest! {
        #[test]
        fn path_is_well_formed(r in arb_xs(), t in arb_xs()) {
            let (rs, ts) = (scalar_sequence(&r), scalar_sequence(&t));
            let a = dtw_align(&rs, &ts, &cfg(Band::Unlimited)).unwrap();
            prop_assert_eq!(a.path[0], (0, 0));
            prop_assert_eq!(*a.path.last().unwrap(), (r.len() - 1, t.len() - 1));
            for w in a.path.windows(2) {
                let (di, dj) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                prop_assert!((di, dj) == (1, 1) || (di, dj) == (1, 0) || (di, dj) == (0, 1));
            }
            let sum: f64 = a.step_costs.iter().sum();
            prop_assert!((a.total_cost - sum).abs() <= 1e-9);
            prop_assert!(a.step_costs.iter().all(|c| *c >= 0.0));
        }

        #[test]
        fn cost_is_symmetric(r in arb_xs(), t in arb_xs()) {
            let (rs, ts) = (scalar_sequence(&r), scalar_sequence(&t));
            let ab = dtw_align(&rs, &ts, &cfg(Band::Unlimited)).unwrap();
            let ba = dtw_align(&ts, &rs, &cfg(Band::Unlimited)).unwrap();
            prop_assert!((ab.total_cost - ba.total_cost).abs() <= 1e-9);
        }

        #[test]
        fn zero_weight_joints_do_not_change_cost(r in arb_xs(), t in arb_xs(), wobble in -1.0f64..1.0) {
            let (rs, ts) = (scalar_sequence(&r), scalar_sequence(&t));
            let wobbled: Vec<Frame> = ts
                .frames()
                .iter()
                .enumerate()
                .map(|(k, f)| f.map_positions(|j, p| {
                    if j == JointId::LeftKnee { p + Vec3::new(wobble * k as f64, 0.0, 0.0) } else { p }
                }))
                .collect();
            let base = align_frames(rs.frames(), ts.frames(), &cfg(Band::Unlimited)).unwrap();
            let moved = align_frames(rs.frames(), &wobbled, &cfg(Band::Unlimited)).unwrap();
            prop_assert_eq!(base.total_cost, moved.total_cost);
        }

        #[test]
        fn triangle_inequality_and_symmetry(
            a in prop::collection::vec(-2.0f64..2.0, 60),
            b in prop::collection::vec(-2.0f64..2.0, 60),
            c in prop::collection::vec(-2.0f64..2.0, 60),
        ) {
            let frame = |v: &[f64]| {
                let mut pose = standing_pose();
                for (k, joint) in JointId::ALL.iter().enumerate() {
                    pose[joint.index()] = Vec3::new(v[3 * k], v[3 * k + 1], v[3 * k + 2]);
                }
                Frame::new(0, pose)
            };
            let (fa, fb, fc) = (frame(&a), frame(&b), frame(&c));
            let w = JointWeights::upper_body();
            let (ab, bc, ac) = (frame_distance(&fa, &fb, &w), frame_distance(&fb, &fc, &w), frame_distance(&fa, &fc, &w));
            prop_assert!((ab - frame_distance(&fb, &fa, &w)).abs() < 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
        }
    }
}
