//! The practice loop as a deterministic state machine.
//!
//! A session presents each sign of a lesson in turn. The learner starts a
//! countdown, records an attempt, and the attempt is compared with the
//! template. A passing attempt moves on to the next sign; a failing one shows
//! feedback and loops back to the same sign, until the attempt limit is hit.
//!
//! Time only enters through [`SessionEvent::Tick`]; the machine never reads a
//! clock, so replaying an event log reproduces every state exactly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::feedback::{lesson_feedback, CorrectionPolicy, FeedbackEnvelope, FeedbackMode};
use crate::format::SignFile;
use crate::scoring::{ComparisonResult, THRESHOLD_PRESETS};
use crate::template::SignTemplate;

pub const DEFAULT_MAX_ATTEMPTS: u32 = 5;

fn default_max_attempts() -> Option<u32> {
    Some(DEFAULT_MAX_ATTEMPTS)
}

/// An ordered list of signs to practice, with its pass threshold and the
/// feedback shown after a failed attempt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lesson {
    pub id: String,
    pub signs: Vec<String>,
    /// Pass threshold in percent; one of the presets.
    pub threshold: f64,
    pub feedback_mode: FeedbackMode,
    /// Failed attempts before moving on anyway; `null` means unlimited.
    #[serde(default = "default_max_attempts")]
    pub max_attempts: Option<u32>,
    #[serde(default = "default_policy")]
    pub corrections: CorrectionPolicy,
}

fn default_policy() -> CorrectionPolicy {
    CorrectionPolicy::All
}

impl Lesson {
    pub fn new(id: impl Into<String>, signs: Vec<String>, threshold: f64, feedback_mode: FeedbackMode) -> Lesson {
        Lesson {
            id: id.into(),
            signs,
            threshold,
            feedback_mode,
            max_attempts: default_max_attempts(),
            corrections: CorrectionPolicy::All,
        }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |reason: &str| Err(SessionError::InvalidLesson(reason.to_string()));
        if self.id.is_empty() {
            return bad("lesson id is empty");
        }
        if self.signs.is_empty() {
            return bad("lesson has no signs");
        }
        if !THRESHOLD_PRESETS.contains(&self.threshold) {
            return bad("threshold must be one of 40, 60, 80");
        }
        if self.max_attempts == Some(0) {
            return bad("max_attempts must be at least 1");
        }
        if let CorrectionPolicy::SeverityRanked { fraction } = self.corrections {
            if !(fraction > 0.0 && fraction <= 1.0) {
                return bad("correction fraction must lie in (0, 1]");
            }
        }
        Ok(())
    }
}

/// Phase durations, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SessionConfig {
    pub countdown_ms: u64,
    pub recording_ms: u64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        SessionConfig {
            countdown_ms: 3000,
            recording_ms: 5000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "phase", rename_all = "snake_case")]
pub enum Phase {
    Presenting,
    Countdown { remaining_ms: u64 },
    Recording { remaining_ms: u64 },
    Comparing,
    ShowingFeedback { artifact: Box<FeedbackEnvelope> },
    Advancing,
    Complete,
}

impl Phase {
    pub fn label(&self) -> &'static str {
        match self {
            Phase::Presenting => "presenting",
            Phase::Countdown { .. } => "countdown",
            Phase::Recording { .. } => "recording",
            Phase::Comparing => "comparing",
            Phase::ShowingFeedback { .. } => "showing_feedback",
            Phase::Advancing => "advancing",
            Phase::Complete => "complete",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionState {
    #[serde(flatten)]
    pub phase: Phase,
    pub sign_index: usize,
    /// Failed attempts acknowledged on the current sign.
    pub attempts_made: u32,
    pub history: Vec<ComparisonResult>,
    #[serde(default)]
    pub aborted: bool,
}

impl SessionState {
    pub fn new() -> SessionState {
        SessionState {
            phase: Phase::Presenting,
            sign_index: 0,
            attempts_made: 0,
            history: Vec::new(),
            aborted: false,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.phase == Phase::Complete
    }
}

impl Default for SessionState {
    fn default() -> Self {
        SessionState::new()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    StartPressed,
    Tick { elapsed_ms: u64 },
    RecordingCaptured { attempt: Box<SignFile> },
    ComparisonDone { result: Box<ComparisonResult> },
    FeedbackAcknowledged,
    Abort,
}

impl SessionEvent {
    pub fn label(&self) -> &'static str {
        match self {
            SessionEvent::StartPressed => "start_pressed",
            SessionEvent::Tick { .. } => "tick",
            SessionEvent::RecordingCaptured { .. } => "recording_captured",
            SessionEvent::ComparisonDone { .. } => "comparison_done",
            SessionEvent::FeedbackAcknowledged => "feedback_acknowledged",
            SessionEvent::Abort => "abort",
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SessionError {
    #[error("event {event} is not legal in phase {phase}")]
    IllegalEvent { phase: &'static str, event: &'static str },
    #[error("invalid lesson: {0}")]
    InvalidLesson(String),
    #[error("lesson refers to unknown template `{0}`")]
    UnknownTemplate(String),
    #[error("result is for template `{got}` but the current sign is `{expected}`")]
    ResultMismatch { expected: String, got: String },
    #[error("session log: {0}")]
    Log(String),
}

/// Everything a transition may consult besides the state itself.
#[derive(Debug, Clone, Copy)]
pub struct SessionContext<'a> {
    pub lesson: &'a Lesson,
    pub templates: &'a BTreeMap<String, SignTemplate>,
    pub cfg: &'a SessionConfig,
}

impl<'a> SessionContext<'a> {
    /// Checks the lesson and that every sign has a template.
    pub fn new(
        lesson: &'a Lesson,
        templates: &'a BTreeMap<String, SignTemplate>,
        cfg: &'a SessionConfig,
    ) -> Result<Self, SessionError> {
        lesson.validate()?;
        if let Some(missing) = lesson.signs.iter().find(|s| !templates.contains_key(*s)) {
            return Err(SessionError::UnknownTemplate(missing.clone()));
        }
        Ok(SessionContext { lesson, templates, cfg })
    }

    pub fn current_template(&self, state: &SessionState) -> Option<&'a SignTemplate> {
        self.lesson.signs.get(state.sign_index).and_then(|id| self.templates.get(id))
    }

    fn is_last(&self, state: &SessionState) -> bool {
        state.sign_index + 1 >= self.lesson.signs.len()
    }
}

/// Applies one event. Illegal events are errors; the input state is never
/// modified.
pub fn advance_state(
    state: &SessionState,
    event: &SessionEvent,
    ctx: &SessionContext<'_>,
) -> Result<SessionState, SessionError> {
    let illegal = || SessionError::IllegalEvent {
        phase: state.phase.label(),
        event: event.label(),
    };
    let mut next = state.clone();

    if let SessionEvent::Abort = event {
        if state.is_complete() {
            return Err(illegal());
        }
        next.phase = Phase::Complete;
        next.aborted = true;
        return Ok(next);
    }

    match (&state.phase, event) {
        (Phase::Presenting, SessionEvent::StartPressed) => {
            next.phase = Phase::Countdown {
                remaining_ms: ctx.cfg.countdown_ms,
            };
        }
        (Phase::Countdown { remaining_ms }, SessionEvent::Tick { elapsed_ms }) => {
            next.phase = if *elapsed_ms >= *remaining_ms {
                Phase::Recording {
                    remaining_ms: ctx.cfg.recording_ms,
                }
            } else {
                Phase::Countdown {
                    remaining_ms: remaining_ms - elapsed_ms,
                }
            };
        }
        (Phase::Recording { remaining_ms }, SessionEvent::Tick { elapsed_ms }) => {
            next.phase = Phase::Recording {
                remaining_ms: remaining_ms.saturating_sub(*elapsed_ms),
            };
        }
        (Phase::Recording { .. }, SessionEvent::RecordingCaptured { .. }) => {
            next.phase = Phase::Comparing;
        }
        (Phase::Comparing, SessionEvent::ComparisonDone { result }) => {
            let template = ctx.current_template(state).ok_or_else(illegal)?;
            if result.template_id != template.id {
                return Err(SessionError::ResultMismatch {
                    expected: template.id.clone(),
                    got: result.template_id.clone(),
                });
            }
            next.history.push((**result).clone());
            next.phase = if result.passed {
                if ctx.is_last(state) {
                    Phase::Complete
                } else {
                    Phase::Advancing
                }
            } else {
                let artifact = lesson_feedback(ctx.lesson.feedback_mode, ctx.lesson.corrections, result, template);
                Phase::ShowingFeedback {
                    artifact: Box::new(artifact.into()),
                }
            };
        }
        (Phase::ShowingFeedback { .. }, SessionEvent::FeedbackAcknowledged) => {
            next.attempts_made += 1;
            let exhausted = ctx.lesson.max_attempts.is_some_and(|max| next.attempts_made >= max);
            next.phase = if !exhausted {
                Phase::Presenting
            } else if ctx.is_last(state) {
                Phase::Complete
            } else {
                Phase::Advancing
            };
        }
        (Phase::Advancing, SessionEvent::Tick { .. } | SessionEvent::FeedbackAcknowledged) => {
            next.sign_index += 1;
            next.attempts_made = 0;
            next.phase = Phase::Presenting;
        }
        _ => return Err(illegal()),
    }
    Ok(next)
}

/// One line of a `.session.jsonl` log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLine<E> {
    /// Session time in milliseconds, the sum of all tick durations so far.
    pub t: u64,
    pub event: E,
    pub phase_after: String,
}

/// The first event of every log: which lesson the session runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename = "opened")]
pub struct Opened {
    pub session_id: String,
    pub lesson: Lesson,
}

/// A session together with its event log.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub session_id: String,
    pub lesson: Lesson,
    pub events: Vec<LogLine<SessionEvent>>,
}

impl SessionLog {
    pub fn new(session_id: impl Into<String>, lesson: Lesson) -> SessionLog {
        SessionLog {
            session_id: session_id.into(),
            lesson,
            events: Vec::new(),
        }
    }

    pub fn clock_ms(&self) -> u64 {
        self.events.last().map_or(0, |l| l.t)
    }

    /// Records an applied event.
    pub fn push(&mut self, event: SessionEvent, after: &SessionState) {
        let mut t = self.clock_ms();
        if let SessionEvent::Tick { elapsed_ms } = event {
            t += elapsed_ms;
        }
        self.events.push(LogLine {
            t,
            event,
            phase_after: after.phase.label().to_string(),
        });
    }

    pub fn header_line(&self) -> String {
        let line = LogLine {
            t: 0,
            event: Opened {
                session_id: self.session_id.clone(),
                lesson: self.lesson.clone(),
            },
            phase_after: Phase::Presenting.label().to_string(),
        };
        serde_json::to_string(&line).expect("log lines serialize")
    }

    pub fn event_line(line: &LogLine<SessionEvent>) -> String {
        serde_json::to_string(line).expect("log lines serialize")
    }

    /// The whole log, one JSON object per line.
    pub fn to_jsonl(&self) -> String {
        let mut out = self.header_line();
        out.push('\n');
        for line in &self.events {
            out.push_str(&SessionLog::event_line(line));
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<SessionLog, SessionError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| SessionError::Log("empty log".into()))?;
        let header: LogLine<Opened> =
            serde_json::from_str(header).map_err(|e| SessionError::Log(format!("line 1: {e}")))?;
        let events = lines
            .enumerate()
            .map(|(k, l)| serde_json::from_str(l).map_err(|e| SessionError::Log(format!("line {}: {e}", k + 2))))
            .collect::<Result<_, _>>()?;
        Ok(SessionLog {
            session_id: header.event.session_id,
            lesson: header.event.lesson,
            events,
        })
    }

    /// Replays the log from a fresh state, returning the state after each
    /// event. Fails if a replayed phase differs from the one recorded.
    pub fn replay(
        &self,
        templates: &BTreeMap<String, SignTemplate>,
        cfg: &SessionConfig,
    ) -> Result<Vec<SessionState>, SessionError> {
        let ctx = SessionContext::new(&self.lesson, templates, cfg)?;
        let mut state = SessionState::new();
        let mut states = Vec::with_capacity(self.events.len());
        for (k, line) in self.events.iter().enumerate() {
            state = advance_state(&state, &line.event, &ctx)?;
            if state.phase.label() != line.phase_after {
                return Err(SessionError::Log(format!(
                    "event {} replays to {} but the log says {}",
                    k + 1,
                    state.phase.label(),
                    line.phase_after
                )));
            }
            states.push(state.clone());
        }
        Ok(states)
    }
}
