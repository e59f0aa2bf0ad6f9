//! The 20-joint body skeleton and small 3D vector helpers.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of tracked joints in a skeleton frame.
pub const JOINT_COUNT: usize = 20;

/// Skeleton joints, with stable integer codes 0..=19 used for serialization.
///
/// The ordering follows the depth-sensor skeleton of the generation this
/// project targets: the spine chain first, then the left arm, the right arm,
/// the left leg and the right leg.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
#[repr(u8)]
pub enum JointId {
    HipCenter = 0,
    Spine = 1,
    ShoulderCenter = 2,
    Head = 3,
    LeftShoulder = 4,
    LeftElbow = 5,
    LeftWrist = 6,
    LeftHand = 7,
    RightShoulder = 8,
    RightElbow = 9,
    RightWrist = 10,
    RightHand = 11,
    LeftHip = 12,
    LeftKnee = 13,
    LeftAnkle = 14,
    LeftFoot = 15,
    RightHip = 16,
    RightKnee = 17,
    RightAnkle = 18,
    RightFoot = 19,
}

impl JointId {
    pub const ALL: [JointId; JOINT_COUNT] = [
        JointId::HipCenter,
        JointId::Spine,
        JointId::ShoulderCenter,
        JointId::Head,
        JointId::LeftShoulder,
        JointId::LeftElbow,
        JointId::LeftWrist,
        JointId::LeftHand,
        JointId::RightShoulder,
        JointId::RightElbow,
        JointId::RightWrist,
        JointId::RightHand,
        JointId::LeftHip,
        JointId::LeftKnee,
        JointId::LeftAnkle,
        JointId::LeftFoot,
        JointId::RightHip,
        JointId::RightKnee,
        JointId::RightAnkle,
        JointId::RightFoot,
    ];

    /// Joints checked by the signing-space validator.
    pub const HANDS_AND_WRISTS: [JointId; 4] = [
        JointId::LeftWrist,
        JointId::LeftHand,
        JointId::RightWrist,
        JointId::RightHand,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<JointId> {
        JointId::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            JointId::HipCenter => "hip-center",
            JointId::Spine => "spine",
            JointId::ShoulderCenter => "shoulder-center",
            JointId::Head => "head",
            JointId::LeftShoulder => "left-shoulder",
            JointId::LeftElbow => "left-elbow",
            JointId::LeftWrist => "left-wrist",
            JointId::LeftHand => "left-hand",
            JointId::RightShoulder => "right-shoulder",
            JointId::RightElbow => "right-elbow",
            JointId::RightWrist => "right-wrist",
            JointId::RightHand => "right-hand",
            JointId::LeftHip => "left-hip",
            JointId::LeftKnee => "left-knee",
            JointId::LeftAnkle => "left-ankle",
            JointId::LeftFoot => "left-foot",
            JointId::RightHip => "right-hip",
            JointId::RightKnee => "right-knee",
            JointId::RightAnkle => "right-ankle",
            JointId::RightFoot => "right-foot",
        }
    }

    /// The joint together with every joint further out along its limb.
    ///
    /// Moving an elbow drags the wrist and hand with it; the spine chain and
    /// legs are treated the same way.
    pub fn distal_chain(self) -> &'static [JointId] {
        use JointId::*;
        match self {
            LeftShoulder => &[LeftShoulder, LeftElbow, LeftWrist, LeftHand],
            LeftElbow => &[LeftElbow, LeftWrist, LeftHand],
            LeftWrist => &[LeftWrist, LeftHand],
            LeftHand => &[LeftHand],
            RightShoulder => &[RightShoulder, RightElbow, RightWrist, RightHand],
            RightElbow => &[RightElbow, RightWrist, RightHand],
            RightWrist => &[RightWrist, RightHand],
            RightHand => &[RightHand],
            LeftHip => &[LeftHip, LeftKnee, LeftAnkle, LeftFoot],
            LeftKnee => &[LeftKnee, LeftAnkle, LeftFoot],
            LeftAnkle => &[LeftAnkle, LeftFoot],
            LeftFoot => &[LeftFoot],
            RightHip => &[RightHip, RightKnee, RightAnkle, RightFoot],
            RightKnee => &[RightKnee, RightAnkle, RightFoot],
            RightAnkle => &[RightAnkle, RightFoot],
            RightFoot => &[RightFoot],
            ShoulderCenter => &[ShoulderCenter, Head],
            Spine => &[Spine, ShoulderCenter, Head],
            Head => &[Head],
            HipCenter => &[HipCenter],
        }
    }
}

impl fmt::Display for JointId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown joint name `{0}`")]
pub struct UnknownJoint(pub String);

impl FromStr for JointId {
    type Err = UnknownJoint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        JointId::ALL
            .iter()
            .copied()
            .find(|j| j.name() == s)
            .ok_or_else(|| UnknownJoint(s.to_string()))
    }
}

/// A point or displacement in 3D, serialized as `[x, y, z]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(from = "[f64; 3]", into = "[f64; 3]")]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn dot(self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn distance(self, other: Vec3) -> f64 {
        (self - other).norm()
    }

    pub fn lerp(self, other: Vec3, t: f64) -> Vec3 {
        self + (other - self) * t
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn max_abs(self) -> f64 {
        self.x.abs().max(self.y.abs()).max(self.z.abs())
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl From<Vec3> for [f64; 3] {
    fn from(v: Vec3) -> Self {
        v.to_array()
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

/// Coordinate axis, used by the synthetic error generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn unit(self) -> Vec3 {
        match self {
            Axis::X => Vec3::new(1.0, 0.0, 0.0),
            Axis::Y => Vec3::new(0.0, 1.0, 0.0),
            Axis::Z => Vec3::new(0.0, 0.0, 1.0),
        }
    }
}

impl FromStr for Axis {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" | "X" => Ok(Axis::X),
            "y" | "Y" => Ok(Axis::Y),
            "z" | "Z" => Ok(Axis::Z),
            other => Err(format!("unknown axis `{other}`")),
        }
    }
}

/// A value per joint, indexable by [`JointId`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointMap<T>(pub [T; JOINT_COUNT]);

impl<T: Copy> JointMap<T> {
    pub fn splat(value: T) -> Self {
        JointMap([value; JOINT_COUNT])
    }
}

impl<T> JointMap<T> {
    pub fn iter(&self) -> impl Iterator<Item = (JointId, &T)> {
        JointId::ALL.iter().copied().zip(self.0.iter())
    }
}

impl<T> Index<JointId> for JointMap<T> {
    type Output = T;
    fn index(&self, joint: JointId) -> &T {
        &self.0[joint.index()]
    }
}

impl<T> IndexMut<JointId> for JointMap<T> {
    fn index_mut(&mut self, joint: JointId) -> &mut T {
        &mut self.0[joint.index()]
    }
}
