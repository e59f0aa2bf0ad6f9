//! Hand configuration as 15 finger joint angles.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Angles per hand: (MCP flexion, PIP flexion, abduction) for thumb, index,
/// middle, ring and pinky, in that order.
pub const ANGLE_COUNT: usize = 15;

/// Valid range in degrees of MCP flexion, PIP flexion and abduction.
pub const ANGLE_RANGES: [(f64, f64); 3] = [(0.0, 90.0), (0.0, 110.0), (-15.0, 30.0)];

pub const FINGERS: [&str; 5] = ["thumb", "index", "middle", "ring", "pinky"];

/// Range of angle `index` (0..15).
pub fn angle_range(index: usize) -> (f64, f64) {
    ANGLE_RANGES[index % 3]
}

/// Per-dimension bounds of the whole angle space.
pub fn angle_bounds() -> [(f64, f64); ANGLE_COUNT] {
    std::array::from_fn(angle_range)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Hand {
    #[serde(rename = "L")]
    Left,
    #[serde(rename = "R")]
    Right,
}

impl Hand {
    pub fn code(self) -> &'static str {
        match self {
            Hand::Left => "L",
            Hand::Right => "R",
        }
    }
}

impl fmt::Display for Hand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Hand {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "L" | "left" => Ok(Hand::Left),
            "R" | "right" => Ok(Hand::Right),
            other => Err(format!("unknown hand `{other}`")),
        }
    }
}

/// A 15-angle hand configuration, always inside [`ANGLE_RANGES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(transparent)]
pub struct HandAngles([f64; ANGLE_COUNT]);

impl HandAngles {
    /// Clamps every angle into its range and reports how many were clamped.
    /// Non-finite values clamp to the lower bound.
    pub fn clamped(raw: [f64; ANGLE_COUNT]) -> (HandAngles, usize) {
        let mut clamped = 0;
        let mut out = raw;
        for (i, v) in out.iter_mut().enumerate() {
            let (lo, hi) = angle_range(i);
            let c = if v.is_finite() { v.clamp(lo, hi) } else { lo };
            if c != *v {
                clamped += 1;
            }
            *v = c;
        }
        (HandAngles(out), clamped)
    }

    /// Accepts the angles only if all are already in range.
    pub fn try_new(raw: [f64; ANGLE_COUNT]) -> Option<HandAngles> {
        match HandAngles::clamped(raw) {
            (a, 0) => Some(a),
            _ => None,
        }
    }

    pub fn as_array(&self) -> &[f64; ANGLE_COUNT] {
        &self.0
    }

    pub fn distance(&self, other: &HandAngles) -> f64 {
        l2(&self.0, &other.0)
    }
}

impl<'de> Deserialize<'de> for HandAngles {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = <[f64; ANGLE_COUNT]>::deserialize(d)?;
        HandAngles::try_new(raw).ok_or_else(|| serde::de::Error::custom("hand angle out of range"))
    }
}

pub(crate) fn l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One sample of an attempt's (or template's) hand stream.
#[derive(Debug, Clone, PartialEq)]
pub struct HandObservation {
    pub timestamp_ms: u64,
    pub hand: Hand,
    pub angles: HandAngles,
}

impl HandObservation {
    /// Builds an observation from raw sensor angles, returning how many
    /// angles had to be clamped.
    pub fn from_raw(timestamp_ms: u64, hand: Hand, raw: [f64; ANGLE_COUNT]) -> (Self, usize) {
        let (angles, clamped) = HandAngles::clamped(raw);
        (
            HandObservation {
                timestamp_ms,
                hand,
                angles,
            },
            clamped,
        )
    }
}

/// A named reference hand configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Handshape {
    pub id: String,
    pub display_name: String,
    pub angles: HandAngles,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clamping_counts_events() {
        let mut raw = [0.0; ANGLE_COUNT];
        raw[0] = 95.0; // thumb MCP
        raw[1] = -3.0; // thumb PIP
        raw[2] = -20.0; // thumb abduction
        raw[4] = 50.0;
        let (a, n) = HandAngles::clamped(raw);
        assert_eq!(n, 3);
        assert_eq!(&a.as_array()[..5], &[90.0, 0.0, -15.0, 0.0, 50.0]);
        assert!(HandAngles::try_new(raw).is_none());
    }

    #[test]
    fn ranges_follow_finger_layout() {
        assert_eq!(angle_range(0), (0.0, 90.0));
        assert_eq!(angle_range(13), (0.0, 110.0));
        assert_eq!(angle_range(14), (-15.0, 30.0));
    }

    #[test]
    fn deserialize_rejects_out_of_range() {
        let ok: Result<HandAngles, _> = serde_json::from_str("[0,0,0,0,0,0,0,0,0,0,0,0,0,0,0]");
        assert!(ok.is_ok());
        let bad: Result<HandAngles, _> = serde_json::from_str("[0,0,0,0,0,0,0,0,0,0,0,0,0,0,31]");
        assert!(bad.is_err());
    }

    #[test]
    fn hand_codes() {
        assert_eq!(serde_json::to_string(&Hand::Left).unwrap(), "\"L\"");
        assert_eq!("R".parse::<Hand>().unwrap(), Hand::Right);
    }
}
