//! Runs a session with comparisons computed in-process.
//!
//! Clients never send [`SessionEvent::ComparisonDone`] themselves: when a
//! recording is captured the driver runs the attempt pipeline and applies the
//! resulting comparison. Both events land in the log, so a log replays
//! without re-running the pipeline.

use std::collections::BTreeMap;

use crate::format::{SchemaViolation, SignFile};
use crate::handshape::HandshapeLibrary;
use crate::pipeline::{attempt_pipeline, PipelineConfig, PipelineError};
use crate::session::{advance_state, Lesson, Phase, SessionConfig, SessionContext, SessionError, SessionEvent, SessionLog, SessionState};
use crate::template::SignTemplate;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DriverError {
    #[error(transparent)]
    Session(#[from] SessionError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
    #[error("attempt.{}: {}", .0.path, .0.reason)]
    Schema(SchemaViolation),
    #[error("comparison results are computed by the session, not submitted")]
    ComparisonSubmitted,
}

/// A live session: lesson, templates, the current state and the event log.
#[derive(Debug, Clone)]
pub struct SessionDriver {
    templates: BTreeMap<String, SignTemplate>,
    library: HandshapeLibrary,
    pipeline: PipelineConfig,
    cfg: SessionConfig,
    state: SessionState,
    log: SessionLog,
}

impl SessionDriver {
    pub fn open(
        session_id: impl Into<String>,
        lesson: Lesson,
        templates: BTreeMap<String, SignTemplate>,
        library: HandshapeLibrary,
        pipeline: PipelineConfig,
        cfg: SessionConfig,
    ) -> Result<SessionDriver, DriverError> {
        SessionContext::new(&lesson, &templates, &cfg)?;
        pipeline.validate()?;
        Ok(SessionDriver {
            templates,
            library,
            pipeline,
            cfg,
            state: SessionState::new(),
            log: SessionLog::new(session_id, lesson),
        })
    }

    /// Rebuilds a session from its log. The log's comparisons are trusted;
    /// the pipeline is not re-run.
    pub fn resume(
        log: SessionLog,
        templates: BTreeMap<String, SignTemplate>,
        library: HandshapeLibrary,
        pipeline: PipelineConfig,
        cfg: SessionConfig,
    ) -> Result<SessionDriver, DriverError> {
        let states = log.replay(&templates, &cfg)?;
        Ok(SessionDriver {
            state: states.last().cloned().unwrap_or_default(),
            templates,
            library,
            pipeline,
            cfg,
            log,
        })
    }

    pub fn state(&self) -> &SessionState {
        &self.state
    }

    pub fn log(&self) -> &SessionLog {
        &self.log
    }

    pub fn lesson(&self) -> &Lesson {
        &self.log.lesson
    }

    pub fn session_id(&self) -> &str {
        &self.log.session_id
    }

    pub fn template(&self, id: &str) -> Option<&SignTemplate> {
        self.templates.get(id)
    }

    /// Applies a client event. A captured recording is compared straight
    /// away; if the comparison fails (poor tracking, bad payload) nothing is
    /// applied and the session stays in its recording phase.
    pub fn apply(&mut self, event: SessionEvent) -> Result<&SessionState, DriverError> {
        let ctx = SessionContext::new(&self.log.lesson, &self.templates, &self.cfg)?;
        match &event {
            SessionEvent::ComparisonDone { .. } => Err(DriverError::ComparisonSubmitted),
            SessionEvent::RecordingCaptured { attempt } => {
                let comparing = advance_state(&self.state, &event, &ctx)?;
                let template = ctx.current_template(&self.state).expect("context checks every sign");
                let recording = attempt.to_recording().map_err(DriverError::Schema)?;
                let result = attempt_pipeline(
                    template,
                    &recording.sequence,
                    &recording.hands,
                    self.log.lesson.threshold,
                    &self.library,
                    &self.pipeline,
                )?;
                let done = SessionEvent::ComparisonDone { result: Box::new(result) };
                let after = advance_state(&comparing, &done, &ctx)?;
                self.log.push(event, &comparing);
                self.log.push(done, &after);
                self.state = after;
                Ok(&self.state)
            }
            _ => {
                let after = advance_state(&self.state, &event, &ctx)?;
                self.log.push(event, &after);
                self.state = after;
                Ok(&self.state)
            }
        }
    }
}

/// The next event of a scripted run: start, count down, record for the full
/// window, submit the next attempt, acknowledge feedback and move on.
/// Returns `None` when the session is complete or the attempts run out.
pub fn scripted_event(
    state: &SessionState,
    cfg: &SessionConfig,
    next_attempt: &mut dyn FnMut() -> Option<SignFile>,
) -> Option<SessionEvent> {
    match &state.phase {
        Phase::Presenting => Some(SessionEvent::StartPressed),
        Phase::Countdown { remaining_ms } => Some(SessionEvent::Tick {
            elapsed_ms: *remaining_ms,
        }),
        Phase::Recording { remaining_ms: 0 } => next_attempt().map(|a| SessionEvent::RecordingCaptured { attempt: Box::new(a) }),
        Phase::Recording { remaining_ms } => Some(SessionEvent::Tick {
            elapsed_ms: (*remaining_ms).min(cfg.recording_ms),
        }),
        Phase::ShowingFeedback { .. } => Some(SessionEvent::FeedbackAcknowledged),
        Phase::Advancing => Some(SessionEvent::Tick { elapsed_ms: 0 }),
        Phase::Comparing | Phase::Complete => None,
    }
}
