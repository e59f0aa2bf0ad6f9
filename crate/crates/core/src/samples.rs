//! Bundled sample fixtures: a ten-shape handshape library and a handful of
//! synthetic sign templates.
//!
//! The angle vectors and motions are hand-authored test material. They are
//! not linguistic data for any sign language.

use crate::feedback::FeedbackMode;
use crate::format::{lesson_to_json, library_to_json, Recording, SignFile};
use crate::hand::{Hand, HandAngles, HandObservation, Handshape, ANGLE_COUNT};
use crate::handshape::HandshapeLibrary;
use crate::joint::{Axis, JointId, Vec3, JOINT_COUNT};
use crate::skeleton::{normalize, Frame, SkeletonSequence};
use crate::session::Lesson;
use crate::synth::{synth, ErrorSpec, Perturbation};
use crate::template::{HandshapeKeyframe, JointWeights, SignTemplate};

/// Frame rate of the sample templates.
pub const SAMPLE_RATE_HZ: f64 = 30.0;

const EXTENDED: [f64; 3] = [0.0, 0.0, 0.0];
const CURLED: [f64; 3] = [90.0, 100.0, 0.0];
const THUMB_TUCKED: [f64; 3] = [40.0, 40.0, 0.0];
const THUMB_OUT: [f64; 3] = [0.0, 0.0, 30.0];

fn shape(id: &str, display_name: &str, fingers: [[f64; 3]; 5]) -> Handshape {
    let flat: [f64; ANGLE_COUNT] = std::array::from_fn(|i| fingers[i / 3][i % 3]);
    Handshape {
        id: id.to_string(),
        display_name: display_name.to_string(),
        angles: HandAngles::try_new(flat).expect("sample angles are in range"),
    }
}

/// The ten bundled handshapes, in library order.
pub fn sample_handshapes() -> Vec<Handshape> {
    vec![
        shape("flat", "Flat hand", [EXTENDED; 5]),
        shape("fist", "Fist", [THUMB_TUCKED, CURLED, CURLED, CURLED, CURLED]),
        shape("point", "Index point", [THUMB_TUCKED, EXTENDED, CURLED, CURLED, CURLED]),
        shape(
            "spread-5",
            "Spread five",
            [THUMB_OUT, [0.0, 0.0, 20.0], [0.0, 0.0, 5.0], [0.0, 0.0, 20.0], [0.0, 0.0, 30.0]],
        ),
        shape(
            "hook",
            "Bent hook",
            [[20.0, 60.0, 10.0], [10.0, 90.0, 0.0], [10.0, 90.0, 0.0], [10.0, 90.0, 0.0], [10.0, 90.0, 0.0]],
        ),
        shape("thumb-up", "Thumb up", [THUMB_OUT, CURLED, CURLED, CURLED, CURLED]),
        shape(
            "pinch",
            "Pinch",
            [[30.0, 30.0, 15.0], [45.0, 60.0, 0.0], [0.0, 0.0, 5.0], [0.0, 0.0, 10.0], [0.0, 0.0, 15.0]],
        ),
        shape(
            "letter-c",
            "Letter C",
            [[20.0, 20.0, 25.0], [40.0, 50.0, 0.0], [40.0, 50.0, 0.0], [40.0, 50.0, 0.0], [40.0, 50.0, 0.0]],
        ),
        shape(
            "two",
            "Two",
            [THUMB_TUCKED, [0.0, 0.0, 15.0], [0.0, 0.0, -10.0], CURLED, CURLED],
        ),
        shape("good", "Good", [THUMB_OUT, CURLED, CURLED, CURLED, [0.0, 0.0, 20.0]]),
    ]
}

pub fn sample_library() -> HandshapeLibrary {
    HandshapeLibrary::new(sample_handshapes()).expect("sample library is valid")
}

// Body dimensions in meters, relative to the hip-center.
const UPPER_ARM: f64 = 0.28;
const FOREARM: f64 = 0.25;
const HAND_LENGTH: f64 = 0.08;
const BODY_DEPTH: f64 = 2.3;

fn body_base(t_s: f64) -> Vec3 {
    // the signer sways slightly; normalization removes it
    Vec3::new(0.05 + 0.01 * (std::f64::consts::TAU * 0.5 * t_s).sin(), -0.1, BODY_DEPTH)
}

/// Two-bone arm placement: elbow bends down, out and back.
fn place_arm(shoulder: Vec3, wrist_target: Vec3, side: f64) -> (Vec3, Vec3, Vec3) {
    let to = wrist_target - shoulder;
    let d = to
        .norm()
        .clamp((UPPER_ARM - FOREARM).abs() + 1e-3, UPPER_ARM + FOREARM - 1e-3);
    let dir = to * (1.0 / to.norm());
    let wrist = shoulder + dir * d;
    let a = (UPPER_ARM * UPPER_ARM - FOREARM * FOREARM + d * d) / (2.0 * d);
    let h = (UPPER_ARM * UPPER_ARM - a * a).max(0.0).sqrt();
    let pole = Vec3::new(0.5 * side, -1.0, 0.4);
    let mut perp = pole - dir * pole.dot(dir);
    perp = perp * (1.0 / perp.norm());
    let elbow = shoulder + dir * a + perp * h;
    let fore = wrist - elbow;
    let hand = wrist + fore * (HAND_LENGTH / fore.norm());
    (elbow, wrist, hand)
}

fn pose(base: Vec3, left_wrist: Vec3, right_wrist: Vec3) -> [Vec3; JOINT_COUNT] {
    use JointId::*;
    let mut p = [Vec3::ZERO; JOINT_COUNT];
    let mut set = |j: JointId, v: Vec3| p[j.index()] = base + v;
    set(HipCenter, Vec3::ZERO);
    set(Spine, Vec3::new(0.0, 0.3, 0.0));
    set(ShoulderCenter, Vec3::new(0.0, 0.55, 0.0));
    set(Head, Vec3::new(0.0, 0.78, 0.0));
    let ls = Vec3::new(-0.2, 0.52, 0.0);
    let rs = Vec3::new(0.2, 0.52, 0.0);
    set(LeftShoulder, ls);
    set(RightShoulder, rs);
    let (le, lw, lh) = place_arm(ls, left_wrist, -1.0);
    let (re, rw, rh) = place_arm(rs, right_wrist, 1.0);
    set(LeftElbow, le);
    set(LeftWrist, lw);
    set(LeftHand, lh);
    set(RightElbow, re);
    set(RightWrist, rw);
    set(RightHand, rh);
    for (side, hip, knee, ankle, foot) in [
        (-1.0, LeftHip, LeftKnee, LeftAnkle, LeftFoot),
        (1.0, RightHip, RightKnee, RightAnkle, RightFoot),
    ] {
        set(hip, Vec3::new(0.1 * side, -0.05, 0.0));
        set(knee, Vec3::new(0.1 * side, -0.5, 0.0));
        set(ankle, Vec3::new(0.1 * side, -0.92, 0.0));
        set(foot, Vec3::new(0.1 * side, -0.97, -0.1));
    }
    p
}

const LEFT_REST: Vec3 = Vec3::new(-0.24, -0.05, -0.02);
const LEFT_READY: Vec3 = Vec3::new(-0.18, 0.22, -0.22);
const RIGHT_READY: Vec3 = Vec3::new(0.18, 0.22, -0.22);

/// Wrist waypoints at phase `u` in [0, 1].
struct Waypoint {
    u: f64,
    left: Vec3,
    right: Vec3,
}

fn wp(u: f64, left: Vec3, right: Vec3) -> Waypoint {
    Waypoint { u, left, right }
}

fn smoothstep(x: f64) -> f64 {
    x * x * (3.0 - 2.0 * x)
}

fn wrists_at(path: &[Waypoint], u: f64) -> (Vec3, Vec3) {
    let k = path.iter().rposition(|w| w.u <= u).unwrap_or(0);
    if k + 1 >= path.len() {
        let w = &path[path.len() - 1];
        return (w.left, w.right);
    }
    let (a, b) = (&path[k], &path[k + 1]);
    let s = smoothstep((u - a.u) / (b.u - a.u));
    (a.left.lerp(b.left, s), a.right.lerp(b.right, s))
}

struct SignSpec {
    id: &'static str,
    gloss: &'static str,
    duration_ms: u64,
    path: Vec<Waypoint>,
    keyframes: Vec<(f64, Hand, &'static str)>,
    two_handed: bool,
}

fn build(spec: SignSpec, lib: &HandshapeLibrary) -> SignTemplate {
    let count = (spec.duration_ms as f64 * SAMPLE_RATE_HZ / 1000.0).round() as usize + 1;
    let frames: Vec<Frame> = (0..count)
        .map(|k| {
            let t = (k as f64 * 1000.0 / SAMPLE_RATE_HZ).round() as u64;
            let u = t as f64 / spec.duration_ms as f64;
            let (l, r) = wrists_at(&spec.path, u);
            Frame::new(t, pose(body_base(t as f64 / 1000.0), l, r))
        })
        .collect();
    let seq = SkeletonSequence::new(frames, SAMPLE_RATE_HZ).expect("sample frames are valid");
    let sequence = normalize(&seq).expect("sample skeleton is not degenerate");

    let frame_time = |u: f64| {
        let t = u * spec.duration_ms as f64;
        let k = (t * SAMPLE_RATE_HZ / 1000.0).round();
        (k * 1000.0 / SAMPLE_RATE_HZ).round() as u64
    };
    let keyframes: Vec<HandshapeKeyframe> = spec
        .keyframes
        .iter()
        .map(|(u, hand, id)| HandshapeKeyframe {
            timestamp_ms: frame_time(*u),
            hand: *hand,
            handshape_id: id.to_string(),
        })
        .collect();
    let hands = keyframes
        .iter()
        .map(|kf| HandObservation {
            timestamp_ms: kf.timestamp_ms,
            hand: kf.hand,
            angles: lib.get(&kf.handshape_id).expect("sample handshape exists").angles,
        })
        .collect();
    let weights = if spec.two_handed {
        JointWeights::upper_body()
    } else {
        JointWeights::proportional(&[
            (JointId::RightElbow, 0.2),
            (JointId::RightWrist, 0.35),
            (JointId::RightHand, 0.45),
        ])
        .expect("static weights are valid")
    };
    SignTemplate::new(spec.id, spec.gloss, sequence, hands, keyframes, weights, 60.0)
        .expect("sample template is valid")
}

/// The bundled sample templates, in a stable order.
pub fn sample_templates() -> Vec<SignTemplate> {
    let lib = sample_library();
    let v = Vec3::new;
    let one = |u, right| wp(u, LEFT_REST, right);
    let specs = vec![
        SignSpec {
            id: "hello",
            gloss: "HELLO",
            duration_ms: 2000,
            path: vec![
                one(0.0, RIGHT_READY),
                one(0.35, v(0.12, 0.66, -0.14)),
                one(0.55, v(0.12, 0.66, -0.14)),
                one(1.0, v(0.38, 0.62, -0.24)),
            ],
            keyframes: vec![(0.4, Hand::Right, "flat"), (0.7, Hand::Right, "flat"), (0.97, Hand::Right, "flat")],
            two_handed: false,
        },
        SignSpec {
            id: "thank-you",
            gloss: "THANK-YOU",
            duration_ms: 1800,
            path: vec![
                one(0.0, RIGHT_READY),
                one(0.4, v(0.04, 0.6, -0.15)),
                one(0.5, v(0.04, 0.6, -0.15)),
                one(1.0, v(0.12, 0.38, -0.4)),
            ],
            keyframes: vec![(0.45, Hand::Right, "flat"), (0.97, Hand::Right, "flat")],
            two_handed: false,
        },
        SignSpec {
            id: "more",
            gloss: "MORE",
            duration_ms: 2000,
            path: vec![
                wp(0.0, LEFT_READY, RIGHT_READY),
                wp(0.3, v(-0.05, 0.3, -0.3), v(0.05, 0.3, -0.3)),
                wp(0.55, v(-0.16, 0.32, -0.28), v(0.16, 0.32, -0.28)),
                wp(0.8, v(-0.05, 0.3, -0.3), v(0.05, 0.3, -0.3)),
                wp(1.0, v(-0.06, 0.28, -0.3), v(0.06, 0.28, -0.3)),
            ],
            keyframes: vec![(0.3, Hand::Left, "pinch"), (0.3, Hand::Right, "pinch"), (0.97, Hand::Right, "pinch")],
            two_handed: true,
        },
        SignSpec {
            id: "where",
            gloss: "WHERE",
            duration_ms: 2000,
            path: vec![
                one(0.0, RIGHT_READY),
                one(0.3, v(0.24, 0.36, -0.34)),
                one(0.55, v(0.08, 0.38, -0.34)),
                one(0.8, v(0.3, 0.36, -0.32)),
                one(1.0, v(0.18, 0.36, -0.34)),
            ],
            keyframes: vec![(0.35, Hand::Right, "point"), (0.97, Hand::Right, "point")],
            two_handed: false,
        },
        SignSpec {
            id: "good",
            gloss: "GOOD",
            duration_ms: 1800,
            path: vec![
                one(0.0, RIGHT_READY),
                one(0.4, v(0.05, 0.6, -0.14)),
                one(1.0, v(0.14, 0.45, -0.42)),
            ],
            keyframes: vec![(0.45, Hand::Right, "thumb-up"), (0.97, Hand::Right, "thumb-up")],
            two_handed: false,
        },
        SignSpec {
            id: "see",
            gloss: "SEE",
            duration_ms: 1800,
            path: vec![
                one(0.0, RIGHT_READY),
                one(0.4, v(0.07, 0.7, -0.12)),
                one(1.0, v(0.14, 0.58, -0.42)),
            ],
            keyframes: vec![(0.4, Hand::Right, "two"), (0.97, Hand::Right, "two")],
            two_handed: false,
        },
    ];
    specs.into_iter().map(|s| build(s, &lib)).collect()
}

pub fn sample_template(id: &str) -> Option<SignTemplate> {
    sample_templates().into_iter().find(|t| t.id == id)
}

/// A two-sign lesson over `hello` and `thank-you`.
pub fn sample_lesson() -> Lesson {
    Lesson::new("greetings", vec!["hello".into(), "thank-you".into()], 60.0, FeedbackMode::PathArrows)
}

fn recording_of(template: &SignTemplate, id: &str, frames: Vec<Frame>) -> Recording {
    Recording {
        id: id.to_string(),
        gloss: template.gloss.clone(),
        sequence: SkeletonSequence::new(frames, SAMPLE_RATE_HZ).expect("edited frames stay valid"),
        hands: template.hands.clone(),
    }
}

/// `hello` performed in the neutral signing space.
pub fn neutral_space_recording() -> Recording {
    let t = sample_template("hello").expect("hello is a sample");
    recording_of(&t, "hello-neutral", t.sequence.frames().to_vec())
}

/// `hello` with the right hand swung behind the back for ten frames.
pub fn behind_body_recording() -> Recording {
    let t = sample_template("hello").expect("hello is a sample");
    let frames = t
        .sequence
        .frames()
        .iter()
        .enumerate()
        .map(|(k, f)| {
            if !(20..30).contains(&k) {
                return f.clone();
            }
            f.map_positions(|j, p| match j {
                JointId::RightWrist => Vec3::new(0.9, 0.6, 0.5),
                JointId::RightHand => Vec3::new(0.85, 0.45, 0.7),
                _ => p,
            })
        })
        .collect();
    recording_of(&t, "hello-behind-body", frames)
}

/// Seed of the single-error fixture and of the scripted lesson attempts.
pub const FIXTURE_SEED: u64 = 7;

/// The right wrist pushed 0.3 units along x on frames 10 to 25 of `hello`.
pub fn single_error_spec() -> ErrorSpec {
    ErrorSpec::none(FIXTURE_SEED).with(Perturbation::JointOffset {
        joint: JointId::RightWrist,
        axis: Axis::X,
        magnitude: 0.3,
        frame_range: (10, 25),
    })
}

/// The attempts of the scripted `greetings` run: a clean `hello`, two
/// gross errors on `thank-you`, then a slightly slow `thank-you`.
pub fn lesson_script() -> Vec<(String, ErrorSpec)> {
    let thank_you = sample_template("thank-you").expect("thank-you is a sample");
    vec![
        ("01-hello.sign.json".into(), ErrorSpec::none(FIXTURE_SEED)),
        ("02-thank-you-wrong.sign.json".into(), ErrorSpec::gross_error(&thank_you, FIXTURE_SEED + 1)),
        ("03-thank-you-wrong.sign.json".into(), ErrorSpec::gross_error(&thank_you, FIXTURE_SEED + 2)),
        (
            "04-thank-you-slow.sign.json".into(),
            ErrorSpec::none(FIXTURE_SEED + 3).with(Perturbation::TimeWarp { factor: 0.9 }),
        ),
    ]
}

/// Every file under `fixtures/`, as (relative path, contents).
pub fn fixture_files() -> Vec<(String, String)> {
    let lib = sample_library();
    let templates = sample_templates();
    let mut out = Vec::new();
    for t in &templates {
        out.push((format!("templates/{}.sign.json", t.id), SignFile::from_template(t).to_json()));
    }
    out.push(("hands/default.hands.json".into(), library_to_json(&lib)));
    let lesson = sample_lesson();
    out.push((format!("lessons/{}.lesson.json", lesson.id), lesson_to_json(&lesson)));

    let synth_file = |template_id: &str, spec: &ErrorSpec| {
        let t = sample_template(template_id).expect("script uses sample templates");
        let rec = synth(&t, spec, &lib).expect("fixture specs are in range");
        SignFile::from_recording(&rec).to_json()
    };
    let signs = ["hello", "thank-you", "thank-you", "thank-you"];
    for ((name, spec), sign) in lesson_script().iter().zip(signs) {
        out.push((format!("attempts/{}/{name}", lesson.id), synth_file(sign, spec)));
    }
    out.push(("attempts/single-error/hello-right-wrist.sign.json".into(), synth_file("hello", &single_error_spec())));
    for t in &templates {
        let spec = ErrorSpec::gross_error(t, FIXTURE_SEED);
        out.push((format!("attempts/gross-error/{}.sign.json", t.id), synth_file(&t.id, &spec)));
    }
    out.push(("space/neutral.sign.json".into(), SignFile::from_recording(&neutral_space_recording()).to_json()));
    out.push(("space/behind-body.sign.json".into(), SignFile::from_recording(&behind_body_recording()).to_json()));
    out
}
