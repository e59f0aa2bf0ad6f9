//! The checked-in fixtures, read back from disk.

use std::path::PathBuf;

use signcoach_core::format::{parse_library, validate_template, SignFile};
use signcoach_core::pipeline::{attempt_pipeline, PipelineConfig};
use signcoach_core::samples::{fixture_files, sample_library, sample_templates};
use signcoach_core::scoring::{gate, ComparisonResult, THRESHOLD_PRESETS};
use signcoach_core::skeleton::normalize;
use signcoach_core::space::{validate_signing_space, SpaceConfig, ViolationKind};
use signcoach_core::synth::{synth, ErrorSpec};

fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn read(rel: &str) -> String {
    std::fs::read_to_string(root().join(rel)).unwrap_or_else(|e| panic!("{rel}: {e}"))
}

fn compare(template: &str, attempt: &str, threshold: f64) -> ComparisonResult {
    let t = validate_template(&read(&format!("templates/{template}.sign.json"))).unwrap();
    let lib = parse_library(&read("hands/default.hands.json")).unwrap();
    let a = SignFile::parse(&read(attempt)).unwrap().to_recording().unwrap();
    attempt_pipeline(&t, &a.sequence, &a.hands, threshold, &lib, &PipelineConfig::default()).unwrap()
}

#[test]
fn fixtures_match_the_generator() {
    for (rel, text) in fixture_files() {
        assert!(read(&rel) == text, "{rel} is stale; run the export_samples example");
    }
}

#[test]
fn templates_compared_with_themselves_score_one_hundred() {
    for t in sample_templates() {
        let r = compare(&t.id, &format!("templates/{}.sign.json", t.id), 80.0);
        assert_eq!(r.accuracy, 100.0, "{}", t.id);
        assert!(THRESHOLD_PRESETS.iter().all(|p| gate(r.accuracy, *p)));
    }
}

#[test]
fn stored_copies_score_one_hundred() {
    let lib = sample_library();
    for t in sample_templates() {
        let stored = validate_template(&SignFile::from_template(&t).to_json()).unwrap();
        let copy = synth(&stored, &ErrorSpec::none(3), &lib).unwrap();
        let copy = SignFile::parse(&SignFile::from_recording(&copy).to_json()).unwrap().to_recording().unwrap();
        let r = attempt_pipeline(&stored, &copy.sequence, &copy.hands, 80.0, &lib, &PipelineConfig::default()).unwrap();
        assert_eq!(r.accuracy, 100.0, "{}", t.id);
    }
}

#[test]
fn gross_errors_fail_every_preset() {
    for t in sample_templates() {
        let r = compare(&t.id, &format!("attempts/gross-error/{}.sign.json", t.id), 40.0);
        assert!(r.accuracy < 40.0, "{}: {}", t.id, r.accuracy);
        assert!(THRESHOLD_PRESETS.iter().all(|p| !gate(r.accuracy, *p)));
    }
}

#[test]
fn lesson_script_passes_fails_fails_passes() {
    let outcomes: Vec<bool> = [
        ("hello", "01-hello"),
        ("thank-you", "02-thank-you-wrong"),
        ("thank-you", "03-thank-you-wrong"),
        ("thank-you", "04-thank-you-slow"),
    ]
    .iter()
    .map(|(t, a)| compare(t, &format!("attempts/greetings/{a}.sign.json"), 60.0).passed)
    .collect();
    assert_eq!(outcomes, [true, false, false, true]);
}

#[test]
fn single_error_flags_the_right_wrist() {
    let r = compare("hello", "attempts/single-error/hello-right-wrist.sign.json", 60.0);
    let flagged: Vec<_> = r.joint_errors.incorrect_joints().collect();
    assert_eq!(flagged, [signcoach_core::joint::JointId::RightWrist]);
    let w = &r.joint_errors.windows[0];
    assert!(w.ref_start <= 12 && w.ref_end >= 23, "{w:?}");
}

#[test]
fn space_fixtures() {
    let check = |rel: &str| {
        let rec = SignFile::parse(&read(rel)).unwrap().to_recording().unwrap();
        validate_signing_space(&normalize(&rec.sequence).unwrap(), &SpaceConfig::default())
    };
    assert!(check("space/neutral.sign.json").is_empty());
    assert!(check("space/behind-body.sign.json").iter().any(|v| v.kind == ViolationKind::BehindBody));
}
