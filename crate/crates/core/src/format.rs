//! JSON file formats: recordings and templates (`.sign.json`), handshape
//! libraries (`.hands.json`) and lessons (`.lesson.json`).
//!
//! Every parse failure is reported as a [`SchemaViolation`] whose `path`
//! points into the document, e.g. `frames[3].joints`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::hand::{Hand, HandObservation, Handshape, ANGLE_COUNT};
use crate::handshape::{HandshapeError, HandshapeLibrary};
use crate::joint::{JointMap, Vec3, JOINT_COUNT};
use crate::session::Lesson;
use crate::skeleton::{normalize, Frame, SkeletonError, SkeletonSequence};
use crate::template::{HandshapeKeyframe, JointWeights, SignTemplate, TemplateError};

pub const DEFAULT_TEMPLATE_THRESHOLD: f64 = 60.0;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, thiserror::Error)]
#[error("schema violation at {path}: {reason}")]
pub struct SchemaViolation {
    pub path: String,
    pub reason: String,
}

impl SchemaViolation {
    pub fn new(path: impl Into<String>, reason: impl Into<String>) -> Self {
        SchemaViolation {
            path: path.into(),
            reason: reason.into(),
        }
    }
}

/// Rounds to 9 significant digits.
pub fn round_sig9(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.8e}").parse().expect("formatted float parses")
}

fn round_vec(p: Vec3) -> [f64; 3] {
    p.to_array().map(round_sig9)
}

/// JSON laid out for diffing: the top two levels are indented, anything
/// deeper (a frame, a hand sample, a handshape) and arrays of plain values
/// sit on one line. Ends with a newline.
pub fn to_document<T: Serialize + ?Sized>(value: &T) -> String {
    let value = serde_json::to_value(value).expect("documents serialize");
    let mut out = String::new();
    write_value(&value, 0, &mut out);
    out.push('\n');
    out
}

fn write_value(v: &Value, depth: usize, out: &mut String) {
    let flat_array = matches!(v, Value::Array(a) if a.iter().all(|x| !x.is_array() && !x.is_object()));
    let empty = matches!(v, Value::Array(a) if a.is_empty()) || matches!(v, Value::Object(m) if m.is_empty());
    if depth >= 2 || flat_array || empty {
        out.push_str(&serde_json::to_string(v).expect("values serialize"));
        return;
    }
    let pad = "  ".repeat(depth + 1);
    match v {
        Value::Object(m) => {
            out.push_str("{\n");
            for (k, (key, val)) in m.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(key).expect("keys serialize"));
                out.push_str(": ");
                write_value(val, depth + 1, out);
                out.push_str(if k + 1 < m.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(depth));
            out.push('}');
        }
        Value::Array(a) => {
            out.push_str("[\n");
            for (k, val) in a.iter().enumerate() {
                out.push_str(&pad);
                write_value(val, depth + 1, out);
                out.push_str(if k + 1 < a.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(depth));
            out.push(']');
        }
        scalar => out.push_str(&scalar.to_string()),
    }
}

/// Parses JSON, reporting the path of the first offending value.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T, SchemaViolation> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let path = if path == "." || path == "?" { "$".to_string() } else { path };
        SchemaViolation::new(path, inner.to_string())
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    pub t: u64,
    pub joints: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracked: Option<Vec<bool>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HandRecord {
    pub t: u64,
    pub hand: Hand,
    pub angles: Vec<f64>,
}

/// A `.sign.json` document. Recordings carry frames and hands; templates add
/// handshape keyframes, joint weights and a default threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignFile {
    pub id: String,
    #[serde(default)]
    pub gloss: String,
    pub rate_hz: f64,
    pub frames: Vec<FrameRecord>,
    #[serde(default)]
    pub hands: Vec<HandRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub keyframes: Vec<HandshapeKeyframe>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold_default: Option<f64>,
}

/// A captured attempt: skeleton frames plus an optional hand stream.
#[derive(Debug, Clone, PartialEq)]
pub struct Recording {
    pub id: String,
    pub gloss: String,
    pub sequence: SkeletonSequence,
    pub hands: Vec<HandObservation>,
}

fn skeleton_violation(e: SkeletonError) -> SchemaViolation {
    let reason = e.to_string();
    match e {
        SkeletonError::TooShort(_) => SchemaViolation::new("frames", reason),
        SkeletonError::NonIncreasingTimestamp { index } => SchemaViolation::new(format!("frames[{index}].t"), reason),
        SkeletonError::InvalidCoordinate { frame, joint } => {
            SchemaViolation::new(format!("frames[{frame}].joints[{}]", joint.index()), reason)
        }
        SkeletonError::InvalidRate(_) | SkeletonError::ResampleRateOutOfRange(_) => {
            SchemaViolation::new("rate_hz", reason)
        }
        SkeletonError::DegenerateSkeleton { .. } => SchemaViolation::new("frames[0].joints", reason),
    }
}

fn template_violation(e: TemplateError) -> SchemaViolation {
    let reason = e.to_string();
    match e {
        TemplateError::EmptyId => SchemaViolation::new("id", reason),
        TemplateError::KeyframeOutOfRange { index, .. } => SchemaViolation::new(format!("keyframes[{index}]"), reason),
        TemplateError::InvalidThreshold(_) => SchemaViolation::new("threshold_default", reason),
        _ => SchemaViolation::new("weights", reason),
    }
}

fn hand_records(hands: &[HandObservation]) -> Vec<HandRecord> {
    hands
        .iter()
        .map(|h| HandRecord {
            t: h.timestamp_ms,
            hand: h.hand,
            angles: h.angles.as_array().iter().map(|a| round_sig9(*a)).collect(),
        })
        .collect()
}

fn frame_records(frames: &[Frame]) -> Vec<FrameRecord> {
    frames
        .iter()
        .map(|f| FrameRecord {
            t: f.timestamp_ms,
            joints: f.positions.0.iter().map(|p| round_vec(*p)).collect(),
            tracked: Some(f.tracked.0.to_vec()),
        })
        .collect()
}

impl SignFile {
    pub fn parse(text: &str) -> Result<SignFile, SchemaViolation> {
        parse_json(text)
    }

    /// Store layout: one frame per line, see [`to_document`].
    pub fn to_json(&self) -> String {
        to_document(self)
    }

    pub fn from_recording(r: &Recording) -> SignFile {
        SignFile {
            id: r.id.clone(),
            gloss: r.gloss.clone(),
            rate_hz: r.sequence.nominal_rate_hz(),
            frames: frame_records(r.sequence.frames()),
            hands: hand_records(&r.hands),
            keyframes: Vec::new(),
            weights: None,
            threshold_default: None,
        }
    }

    /// A template as a file; frames are stored in normalized units.
    pub fn from_template(t: &SignTemplate) -> SignFile {
        SignFile {
            id: t.id.clone(),
            gloss: t.gloss.clone(),
            rate_hz: t.sequence.as_sequence().nominal_rate_hz(),
            frames: frame_records(t.sequence.frames()),
            hands: hand_records(&t.hands),
            keyframes: t.handshape_keyframes.clone(),
            weights: Some(t.weights.as_array().to_vec()),
            threshold_default: Some(t.threshold_default),
        }
    }

    fn sequence(&self) -> Result<SkeletonSequence, SchemaViolation> {
        let mut frames = Vec::with_capacity(self.frames.len());
        for (k, f) in self.frames.iter().enumerate() {
            if f.joints.len() != JOINT_COUNT {
                return Err(SchemaViolation::new(
                    format!("frames[{k}].joints"),
                    format!("expected {JOINT_COUNT} joints, found {}", f.joints.len()),
                ));
            }
            let mut positions = [Vec3::ZERO; JOINT_COUNT];
            for (p, j) in positions.iter_mut().zip(&f.joints) {
                *p = Vec3::new(j[0], j[1], j[2]);
            }
            let mut frame = Frame::new(f.t, positions);
            if let Some(tracked) = &f.tracked {
                if tracked.len() != JOINT_COUNT {
                    return Err(SchemaViolation::new(
                        format!("frames[{k}].tracked"),
                        format!("expected {JOINT_COUNT} flags, found {}", tracked.len()),
                    ));
                }
                let mut flags = [true; JOINT_COUNT];
                flags.copy_from_slice(tracked);
                frame.tracked = JointMap(flags);
            }
            frames.push(frame);
        }
        SkeletonSequence::new(frames, self.rate_hz).map_err(skeleton_violation)
    }

    fn hand_stream(&self) -> Result<Vec<HandObservation>, SchemaViolation> {
        self.hands
            .iter()
            .enumerate()
            .map(|(k, h)| {
                let raw: [f64; ANGLE_COUNT] = h.angles.as_slice().try_into().map_err(|_| {
                    SchemaViolation::new(
                        format!("hands[{k}].angles"),
                        format!("expected {ANGLE_COUNT} angles, found {}", h.angles.len()),
                    )
                })?;
                if raw.iter().any(|a| !a.is_finite()) {
                    return Err(SchemaViolation::new(format!("hands[{k}].angles"), "angles must be finite"));
                }
                // sensor angles slightly out of range are clamped, not rejected
                Ok(HandObservation::from_raw(h.t, h.hand, raw).0)
            })
            .collect()
    }

    pub fn to_recording(&self) -> Result<Recording, SchemaViolation> {
        if self.id.is_empty() {
            return Err(SchemaViolation::new("id", "id is empty"));
        }
        Ok(Recording {
            id: self.id.clone(),
            gloss: self.gloss.clone(),
            sequence: self.sequence()?,
            hands: self.hand_stream()?,
        })
    }

    /// Builds a template, normalizing the frames. Missing weights default to
    /// the upper-body preset and a missing threshold to 60.
    pub fn to_template(&self) -> Result<SignTemplate, SchemaViolation> {
        let rec = self.to_recording()?;
        let sequence = normalize(&rec.sequence).map_err(skeleton_violation)?;
        let weights = match &self.weights {
            None => JointWeights::upper_body(),
            Some(w) => {
                let arr: [f64; JOINT_COUNT] = w.as_slice().try_into().map_err(|_| {
                    SchemaViolation::new("weights", format!("expected {JOINT_COUNT} weights, found {}", w.len()))
                })?;
                JointWeights::new(arr).map_err(template_violation)?
            }
        };
        SignTemplate::new(
            rec.id,
            rec.gloss,
            sequence,
            rec.hands,
            self.keyframes.clone(),
            weights,
            self.threshold_default.unwrap_or(DEFAULT_TEMPLATE_THRESHOLD),
        )
        .map_err(template_violation)
    }
}

/// `.hands.json` document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LibraryFile {
    pub shapes: Vec<Handshape>,
}

pub fn parse_library(text: &str) -> Result<HandshapeLibrary, SchemaViolation> {
    let file: LibraryFile = parse_json(text)?;
    HandshapeLibrary::new(file.shapes).map_err(|e| {
        let path = match &e {
            HandshapeError::DuplicateId(id) | HandshapeError::Coincident(id, _) => {
                let index = text_index_of(text, id);
                format!("shapes[{index}]")
            }
            _ => "shapes".to_string(),
        };
        SchemaViolation::new(path, e.to_string())
    })
}

// best-effort index of the last shape with `id`, for error paths
fn text_index_of(text: &str, id: &str) -> usize {
    serde_json::from_str::<LibraryFile>(text)
        .ok()
        .and_then(|f| f.shapes.iter().rposition(|s| s.id == id))
        .unwrap_or(0)
}

pub fn library_to_json(lib: &HandshapeLibrary) -> String {
    let file = LibraryFile {
        shapes: lib.shapes().to_vec(),
    };
    to_document(&file)
}

pub fn parse_lesson(text: &str) -> Result<Lesson, SchemaViolation> {
    let lesson: Lesson = parse_json(text)?;
    lesson.validate().map_err(|e| SchemaViolation::new("$", e.to_string()))?;
    Ok(lesson)
}

pub fn lesson_to_json(lesson: &Lesson) -> String {
    to_document(lesson)
}

/// A lenient check used by stores: `text` must parse as a template.
pub fn validate_template(text: &str) -> Result<SignTemplate, SchemaViolation> {
    SignFile::parse(text)?.to_template()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documents_keep_field_order_and_one_frame_per_line() {
        let t = crate::samples::sample_template("hello").unwrap();
        let text = SignFile::from_template(&t).to_json();
        assert!(text.starts_with("{\n  \"id\": \"hello\",\n  \"gloss\": \"HELLO\","));
        let frame_lines = text.lines().filter(|l| l.trim_start().starts_with("{\"t\":")).count();
        assert_eq!(frame_lines, t.sequence.len() + t.hands.len() + t.handshape_keyframes.len());
        assert_eq!(SignFile::parse(&text).unwrap(), SignFile::from_template(&t));
    }
    use crate::joint::JointId;
    use crate::samples::{sample_library, sample_templates};

    #[test]
    fn rounding_keeps_nine_digits() {
        assert_eq!(round_sig9(0.1234567891234), 0.123456789);
        assert_eq!(round_sig9(-1234.56789012), -1234.56789);
        assert_eq!(round_sig9(0.0), 0.0);
        assert_eq!(round_sig9(1e-20), 1e-20);
    }

    #[test]
    fn template_round_trip_is_stable() {
        for t in sample_templates() {
            let text = SignFile::from_template(&t).to_json();
            let back = SignFile::parse(&text).unwrap().to_template().unwrap();
            assert_eq!(back.id, t.id);
            assert_eq!(back.handshape_keyframes, t.handshape_keyframes);
            assert_eq!(back.weights, t.weights);
            for (a, b) in back.sequence.frames().iter().zip(t.sequence.frames()) {
                for j in JointId::ALL {
                    assert!(a.position(j).distance(b.position(j)) < 1e-7);
                }
            }
            // parsing then writing the file again changes nothing
            assert_eq!(SignFile::parse(&text).unwrap().to_json(), text);
        }
    }

    #[test]
    fn nineteen_joints_names_the_frame() {
        let t = &sample_templates()[0];
        let mut f = SignFile::from_template(t);
        f.frames[3].joints.pop();
        let err = SignFile::parse(&f.to_json()).unwrap().to_recording().unwrap_err();
        assert_eq!(err.path, "frames[3].joints");
        assert!(err.reason.contains("19"));
    }

    #[test]
    fn malformed_json_reports_a_path() {
        let err = SignFile::parse(r#"{"id":"x","rate_hz":30,"frames":[{"t":0,"joints":[[1,2]]}]}"#).unwrap_err();
        assert_eq!(err.path, "frames[0].joints[0]");
        let err = SignFile::parse("{").unwrap_err();
        assert_eq!(err.path, "$");
    }

    #[test]
    fn keyframe_outside_sequence_is_named() {
        let t = &sample_templates()[0];
        let mut f = SignFile::from_template(t);
        f.keyframes[1].timestamp_ms = 999_999;
        let err = f.to_template().unwrap_err();
        assert_eq!(err.path, "keyframes[1]");
    }

    #[test]
    fn library_round_trip() {
        let lib = sample_library();
        let text = library_to_json(&lib);
        assert_eq!(parse_library(&text).unwrap(), lib);
        let mut file: LibraryFile = serde_json::from_str(&text).unwrap();
        file.shapes.push(file.shapes[0].clone());
        let err = parse_library(&serde_json::to_string(&file).unwrap()).unwrap_err();
        assert_eq!(err.path, "shapes[10]");
    }

    #[test]
    fn out_of_range_angles_are_rejected_in_libraries() {
        let text = library_to_json(&sample_library()).replacen("\"angles\":[0.0", "\"angles\":[500.0", 1);
        assert!(parse_library(&text).is_err());
    }
}
