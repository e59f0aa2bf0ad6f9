use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use signcoach_core::format::{lesson_to_json, SignFile};
use signcoach_core::samples::{sample_lesson, sample_templates};
use signcoach_core::session::{SessionConfig, SessionLog};
use signcoach_service::store::Store;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

fn fx(rel: &str) -> String {
    fixtures().join(rel).display().to_string()
}

fn signcoach(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_signcoach"))
        .args(args)
        .current_dir(dir)
        .env_remove("SIGNCOACH_STORE")
        .env_remove("SIGNCOACH_LISTEN")
        .output()
        .unwrap()
}

fn seeded_store(dir: &Path) -> String {
    let store = dir.join("store").display().to_string();
    let mut args = vec!["--store".to_string(), store.clone(), "ingest".into()];
    for t in sample_templates() {
        args.push(fx(&format!("templates/{}.sign.json", t.id)));
    }
    args.push(fx("hands/default.hands.json"));
    args.push(fx("lessons/greetings.lesson.json"));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = signcoach(dir, &args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    store
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn compare_template_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    let t = fx("templates/hello.sign.json");
    let out = signcoach(dir.path(), &["compare", &t, &t]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["accuracy"], 100.0);
}

#[test]
fn compare_gross_error_fails() {
    let dir = tempfile::tempdir().unwrap();
    let out = signcoach(
        dir.path(),
        &["compare", &fx("templates/where.sign.json"), &fx("attempts/gross-error/where.sign.json")],
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn compare_missing_file_is_not_found() {
    let dir = tempfile::tempdir().unwrap();
    let out = signcoach(dir.path(), &["compare", &fx("templates/hello.sign.json"), "missing.sign.json"]);
    assert_eq!(out.status.code(), Some(2));
    let body = json(&out);
    assert_eq!(body["code"], "NotFound");
    assert!(body["message"].as_str().unwrap().contains("missing.sign.json"));
}

#[test]
fn compare_output_matches_the_golden() {
    let dir = tempfile::tempdir().unwrap();
    let out = signcoach(
        dir.path(),
        &["compare", &fx("templates/hello.sign.json"), &fx("attempts/single-error/hello-right-wrist.sign.json")],
    );
    let golden = std::fs::read(fixtures().join("golden/hello-single-error.compare.json")).unwrap();
    assert!(out.stdout == golden, "compare output drifted from the golden file");
    let body = json(&out);
    assert_eq!(body["joint_errors"]["windows"].as_array().unwrap().len(), 1);
    assert_eq!(body["joint_errors"]["windows"][0]["joint"], "right-wrist");
}

#[test]
fn schema_errors_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut file = SignFile::from_template(&sample_templates()[0]);
    file.frames[7].joints.truncate(19);
    let bad = dir.path().join("bad.sign.json");
    std::fs::write(&bad, file.to_json()).unwrap();
    let out = signcoach(dir.path(), &["compare", &fx("templates/hello.sign.json"), bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let body = json(&out);
    assert_eq!(body["code"], "SchemaViolation");
    assert_eq!(body["detail"]["path"], "frames[7].joints");
}

#[test]
fn synth_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let t = fx("templates/more.sign.json");
    let run = |seed: &str| signcoach(dir.path(), &["--seed", seed, "synth", &t, "--error", "jitter:sigma=0.01"]).stdout;
    assert_eq!(run("5"), run("5"));
    assert_ne!(run("5"), run("6"));
    let out = signcoach(dir.path(), &["synth", &t, "--error", "warp:factor=2"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["code"], "InvalidArgument");
}

#[test]
fn synth_none_then_compare_scores_one_hundred() {
    let dir = tempfile::tempdir().unwrap();
    for t in sample_templates() {
        let template = fx(&format!("templates/{}.sign.json", t.id));
        let copy = dir.path().join(format!("{}.sign.json", t.id));
        let out = signcoach(dir.path(), &["synth", &template, "--error", "none", "--out", copy.to_str().unwrap()]);
        assert!(out.status.success());
        let copy_file = SignFile::parse(&std::fs::read_to_string(&copy).unwrap()).unwrap();
        assert_ne!(copy_file.id, t.id);
        let out = signcoach(dir.path(), &["compare", &template, copy.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", t.id);
        assert_eq!(json(&out)["accuracy"], 100.0, "{}", t.id);
    }
}

#[test]
fn time_warp_passes_at_eighty() {
    let dir = tempfile::tempdir().unwrap();
    let template = fx("templates/hello.sign.json");
    let warped = dir.path().join("w.sign.json");
    let out = signcoach(
        dir.path(),
        &["synth", &template, "--error", "time-warp:factor=1.25", "--out", warped.to_str().unwrap()],
    );
    assert!(out.status.success());
    let out = signcoach(dir.path(), &["compare", &template, warped.to_str().unwrap(), "--threshold", "80"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["movement_score"].as_f64().unwrap() >= 95.0);
}

#[test]
fn run_session_writes_a_replayable_log() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded_store(dir.path());
    let out = signcoach(
        dir.path(),
        &["--store", &store, "run-session", &fx("lessons/greetings.lesson.json"), &fx("attempts/greetings")],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.contains("final phase: complete"), "{table}");

    let text = std::fs::read_to_string(dir.path().join("greetings.session.jsonl")).unwrap();
    let log = SessionLog::parse(&text).unwrap();
    let templates = Store::open(&store).unwrap().lesson_templates(&log.lesson).unwrap();
    let states = log.replay(&templates, &SessionConfig::default()).unwrap();
    let replayed: Vec<&str> = states.iter().map(|s| s.phase.label()).collect();
    let logged: Vec<&str> = log.events.iter().map(|l| l.phase_after.as_str()).collect();
    assert_eq!(replayed, logged);

    let again = signcoach(
        dir.path(),
        &["--store", &store, "run-session", &fx("lessons/greetings.lesson.json"), &fx("attempts/greetings"), "--out", "again.jsonl"],
    );
    assert!(again.status.success());
    assert_eq!(std::fs::read_to_string(dir.path().join("again.jsonl")).unwrap(), text);

    let report = signcoach(dir.path(), &["report", "greetings.session.jsonl", "--json"]);
    let body = json(&report);
    assert_eq!(body["final_phase"], "complete");
    let passed: Vec<bool> = body["attempts"].as_array().unwrap().iter().map(|a| a["passed"].as_bool().unwrap()).collect();
    assert_eq!(passed, [true, false, false, true]);
}

#[test]
fn five_failures_move_on() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded_store(dir.path());
    let mut lesson = sample_lesson();
    lesson.signs = vec!["hello".into()];
    lesson.id = "hello-only".into();
    let lesson_path = dir.path().join("hello-only.lesson.json");
    std::fs::write(&lesson_path, lesson_to_json(&lesson)).unwrap();
    let attempts = dir.path().join("wrong");
    std::fs::create_dir(&attempts).unwrap();
    let wrong = std::fs::read_to_string(fixtures().join("attempts/gross-error/hello.sign.json")).unwrap();
    for k in 0..7 {
        std::fs::write(attempts.join(format!("{k:02}.sign.json")), &wrong).unwrap();
    }
    let out = signcoach(
        dir.path(),
        &["--store", &store, "run-session", lesson_path.to_str().unwrap(), attempts.to_str().unwrap()],
    );
    assert_eq!(out.status.code(), Some(0));
    let log = SessionLog::parse(&std::fs::read_to_string(dir.path().join("hello-only.session.jsonl")).unwrap()).unwrap();
    let feedback = log.events.iter().filter(|l| l.phase_after == "showing_feedback").count();
    assert_eq!(feedback, 5);
    assert_eq!(log.events.last().unwrap().phase_after, "complete");
}

#[test]
fn run_session_needs_a_store_and_known_templates() {
    let dir = tempfile::tempdir().unwrap();
    let out = signcoach(dir.path(), &["run-session", &fx("lessons/greetings.lesson.json"), &fx("attempts/greetings")]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["code"], "Config");
    let empty = dir.path().join("empty").display().to_string();
    let out = signcoach(
        dir.path(),
        &["--store", &empty, "run-session", &fx("lessons/greetings.lesson.json"), &fx("attempts/greetings")],
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["code"], "NotFound");
}

#[test]
fn config_file_supplies_the_store_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let store = seeded_store(dir.path());
    std::fs::write(dir.path().join("sc.toml"), format!("store = {store:?}\n")).unwrap();
    let lesson = dir.path().join("l.lesson.json");
    let mut l = sample_lesson();
    l.id = "other".into();
    std::fs::write(&lesson, lesson_to_json(&l)).unwrap();
    let out = signcoach(dir.path(), &["--config", "sc.toml", "ingest", lesson.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(Path::new(&store).join("lessons/other.lesson.json").exists());

    let elsewhere = dir.path().join("elsewhere").display().to_string();
    let out = signcoach(dir.path(), &["--config", "sc.toml", "--store", &elsewhere, "ingest", lesson.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(Path::new(&elsewhere).join("lessons/other.lesson.json").exists());

    let out = signcoach(dir.path(), &["--config", "sc.toml", "ingest", lesson.to_str().unwrap()]);
    assert_eq!(json(&out)["code"], "Conflict");
}
