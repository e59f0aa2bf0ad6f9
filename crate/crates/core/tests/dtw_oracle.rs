//! DTW against exhaustive enumeration of warping paths.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use signcoach_core::alignment::{align_frames, exhaustive_min_cost, Band, DtwConfig};
use signcoach_core::joint::{JointId, Vec3, JOINT_COUNT};
use signcoach_core::skeleton::Frame;
use signcoach_core::template::JointWeights;

fn scalar_frames(xs: &[f64]) -> Vec<Frame> {
    xs.iter()
        .enumerate()
        .map(|(k, x)| {
            let mut pose = [Vec3::ZERO; JOINT_COUNT];
            pose[JointId::RightHand.index()] = Vec3::new(*x, 0.0, 0.0);
            Frame::new(k as u64 * 33, pose)
        })
        .collect()
}

fn random_frames(rng: &mut ChaCha8Rng, len: usize) -> Vec<Frame> {
    (0..len)
        .map(|k| {
            let pose = std::array::from_fn(|_| {
                Vec3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            });
            Frame::new(k as u64 * 33, pose)
        })
        .collect()
}

fn hand_only() -> JointWeights {
    JointWeights::proportional(&[(JointId::RightHand, 1.0)]).unwrap()
}

#[test]
fn oracle_on_a_two_by_two_grid() {
    // paths: diagonal 1 + 1; via (1,0) 1 + 2 + 1; via (0,1) 1 + 2 + 1
    let cost = exhaustive_min_cost(&scalar_frames(&[0.0, 3.0]), &scalar_frames(&[1.0, 2.0]), &hand_only(), None);
    assert_eq!(cost, 2.0);
}

#[test]
fn repeated_sample_is_absorbed() {
    let (r, a) = (scalar_frames(&[0.0, 1.0, 2.0]), scalar_frames(&[0.0, 1.0, 1.0, 2.0]));
    let cfg = DtwConfig::new(hand_only());
    assert_eq!(exhaustive_min_cost(&r, &a, &hand_only(), None), 0.0);
    let al = align_frames(&r, &a, &cfg).unwrap();
    assert_eq!(al.total_cost, 0.0);
    assert_eq!(al.path, vec![(0, 0), (1, 1), (1, 2), (2, 3)]);
}

#[test]
fn band_excludes_paths() {
    // with radius 1 the path cannot wait at the start for the late match
    let r = scalar_frames(&[0.0, 0.0, 0.0, 5.0]);
    let a = scalar_frames(&[0.0, 5.0, 5.0, 5.0]);
    let free = exhaustive_min_cost(&r, &a, &hand_only(), None);
    let banded = exhaustive_min_cost(&r, &a, &hand_only(), Some(1));
    assert!(banded > free);
    let cfg = DtwConfig {
        band: Band::Radius(1),
        ..DtwConfig::new(hand_only())
    };
    assert_eq!(align_frames(&r, &a, &cfg).unwrap().total_cost, banded);
}

#[test]
fn random_pairs_match_the_oracle_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_611);
    let weights = JointWeights::upper_body();
    for _ in 0..300 {
        let (m, n) = (rng.random_range(2..=8), rng.random_range(2..=8));
        let (r, a) = (random_frames(&mut rng, m), random_frames(&mut rng, n));
        for band in [Band::Unlimited, Band::Auto, Band::Radius(2)] {
            let cfg = DtwConfig {
                band,
                ..DtwConfig::new(weights)
            };
            let expected = exhaustive_min_cost(&r, &a, &weights, band.radius(m, n));
            match align_frames(&r, &a, &cfg) {
                Ok(al) => assert_eq!(al.total_cost, expected, "{m}x{n} {band:?}"),
                Err(_) => assert!(expected.is_infinite(), "{m}x{n} {band:?}"),
            }
        }
    }
}
