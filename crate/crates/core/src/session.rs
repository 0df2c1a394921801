//! Interaction state machine: cursor moves and lens commands become plucks.

mod trajectory;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{find_crossings, lens_contents, CursorMove, GeometryError, Lens};
use crate::mapping::{make_note, MappingConfig, Note};
use crate::mixer::TriggerHandle;
use crate::model::{LineId, LineSet, Point2};

pub use trajectory::{ActionName, LensSpec, Trajectory, TrajectoryAction, TrajectoryEvent};

/// Gap between consecutive lens-playback notes, seconds.
pub const DEFAULT_PLAYBACK_SPACING: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SessionError {
    #[error("lens playback requires an enabled lens")]
    LensDisabled,
    #[error(transparent)]
    Lens(#[from] GeometryError),
    #[error("playback spacing must be positive, got {0}")]
    Spacing(f64),
    #[error("malformed trajectory: {0}")]
    Trajectory(String),
}

/// Receives the notes a session triggers. One call per chord.
pub trait NoteSink {
    fn play(&mut self, notes: &[Note]);
}

impl NoteSink for () {
    fn play(&mut self, _notes: &[Note]) {}
}

/// Records every chord.
impl NoteSink for Vec<Vec<Note>> {
    fn play(&mut self, notes: &[Note]) {
        self.push(notes.to_vec());
    }
}

/// Forwards notes to a mixer, placing each chord at the frame of its onset.
#[derive(Debug, Clone)]
pub struct MixerSink {
    pub handle: TriggerHandle,
    pub sample_rate: f64,
    /// Added to onsets before conversion to frames.
    pub offset: f64,
}

impl MixerSink {
    pub fn new(handle: TriggerHandle, sample_rate: f64) -> Self {
        Self {
            handle,
            sample_rate,
            offset: 0.0,
        }
    }

    pub fn frame_of(&self, onset: f64) -> u64 {
        ((onset + self.offset) * self.sample_rate).round().max(0.0) as u64
    }
}

impl NoteSink for MixerSink {
    fn play(&mut self, notes: &[Note]) {
        if let Some(first) = notes.first() {
            self.handle.trigger_at(notes, self.frame_of(first.onset));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Free,
    Lens,
    LensPlayback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PluckSource {
    Cursor,
    Playback,
}

/// What the UI needs to animate one pluck. Mirrors the triggered note.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PluckFeedback {
    pub line_id: LineId,
    pub position: Point2,
    pub amplitude: f64,
    pub frequency: f64,
    /// Decay requested for the note, seconds.
    pub decay: f64,
    pub onset: f64,
    pub source: PluckSource,
    /// Whether the UI should color the plucked line.
    pub highlight: bool,
}

impl PluckFeedback {
    pub fn from_note(note: &Note, position: Point2, source: PluckSource, highlight: bool) -> Self {
        Self {
            line_id: note.line_id,
            position,
            amplitude: note.amplitude,
            frequency: note.frequency,
            decay: note.decay,
            onset: note.onset,
            source,
            highlight,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduledNote {
    pub onset: f64,
    pub note: Note,
    pub position: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SessionEvent {
    Pluck(PluckFeedback),
    Lens { t: f64, lens: Lens },
    Playback { t: f64, schedule: Vec<ScheduledNote> },
}

impl SessionEvent {
    /// Every pluck this event stands for, playback notes included.
    pub fn plucks(&self, highlight: bool) -> Vec<PluckFeedback> {
        match self {
            SessionEvent::Pluck(p) => vec![*p],
            SessionEvent::Lens { .. } => Vec::new(),
            SessionEvent::Playback { schedule, .. } => schedule
                .iter()
                .map(|s| PluckFeedback::from_note(&s.note, s.position, PluckSource::Playback, highlight))
                .collect(),
        }
    }
}

pub struct Session<S: NoteSink = ()> {
    lineset: Arc<LineSet>,
    mapping: MappingConfig,
    lens: Lens,
    mode: Mode,
    cursor: Option<(Point2, f64)>,
    last_t: Option<f64>,
    playback_spacing: f64,
    playback_until: f64,
    highlight: bool,
    warnings: u64,
    sink: S,
}

impl<S: NoteSink> std::fmt::Debug for Session<S> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Session")
            .field("lines", &self.lineset.len())
            .field("mode", &self.mode)
            .field("lens", &self.lens)
            .field("cursor", &self.cursor)
            .field("warnings", &self.warnings)
            .finish()
    }
}

impl Session<()> {
    /// A session that only reports feedback.
    pub fn silent(lineset: impl Into<Arc<LineSet>>, mapping: MappingConfig) -> Self {
        Self::new(lineset, mapping, ())
    }
}

impl<S: NoteSink> Session<S> {
    pub fn new(lineset: impl Into<Arc<LineSet>>, mapping: MappingConfig, sink: S) -> Self {
        Self {
            lineset: lineset.into(),
            mapping,
            lens: Lens {
                enabled: false,
                ..Lens::default()
            },
            mode: Mode::Free,
            cursor: None,
            last_t: None,
            playback_spacing: DEFAULT_PLAYBACK_SPACING,
            playback_until: f64::NEG_INFINITY,
            highlight: false,
            warnings: 0,
            sink,
        }
    }

    pub fn lineset(&self) -> &Arc<LineSet> {
        &self.lineset
    }

    pub fn mapping(&self) -> &MappingConfig {
        &self.mapping
    }

    pub fn lens(&self) -> &Lens {
        &self.lens
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn cursor(&self) -> Option<(Point2, f64)> {
        self.cursor
    }

    /// Events ignored because their timestamp went backwards.
    pub fn warnings(&self) -> u64 {
        self.warnings
    }

    pub fn playback_spacing(&self) -> f64 {
        self.playback_spacing
    }

    pub fn set_playback_spacing(&mut self, seconds: f64) -> Result<f64, SessionError> {
        if !(seconds > 0.0 && seconds.is_finite()) {
            return Err(SessionError::Spacing(seconds));
        }
        Ok(std::mem::replace(&mut self.playback_spacing, seconds))
    }

    pub fn highlight(&self) -> bool {
        self.highlight
    }

    pub fn set_highlight(&mut self, on: bool) {
        self.highlight = on;
    }

    pub fn sink(&self) -> &S {
        &self.sink
    }

    pub fn sink_mut(&mut self) -> &mut S {
        &mut self.sink
    }

    pub fn into_sink(self) -> S {
        self.sink
    }

    /// Forgets the cursor and lens, as after a reconnect.
    pub fn reset(&mut self) {
        self.cursor = None;
        self.last_t = None;
        self.mode = Mode::Free;
        self.lens.enabled = false;
        self.playback_until = f64::NEG_INFINITY;
    }

    /// Rejects timestamps that go backwards and ends finished playback.
    fn advance_clock(&mut self, t: f64) -> bool {
        if !t.is_finite() || self.last_t.is_some_and(|last| t < last) {
            self.warnings += 1;
            return false;
        }
        self.last_t = Some(t);
        if self.mode == Mode::LensPlayback && t >= self.playback_until {
            self.mode = if self.lens.enabled { Mode::Lens } else { Mode::Free };
        }
        true
    }

    /// Plucks every segment crossed since the previous cursor position.
    pub fn on_cursor_move(&mut self, to: Point2, t: f64) -> Vec<PluckFeedback> {
        if !to.is_finite() || !self.advance_clock(t) {
            if !to.is_finite() {
                self.warnings += 1;
            }
            return Vec::new();
        }
        let previous = self.cursor.replace((to, t));
        let Some((from, t0)) = previous else {
            return Vec::new();
        };
        if self.mode == Mode::LensPlayback {
            return Vec::new();
        }
        let lens = (self.mode == Mode::Lens).then_some(&self.lens);
        let crossings = find_crossings(&CursorMove::new(from, to, t0, t), &self.lineset, lens);
        let mut notes = Vec::with_capacity(crossings.len());
        let mut feedback = Vec::with_capacity(crossings.len());
        // A contact at the start point was plucked by the previous move.
        for c in crossings.iter().filter(|c| c.s > 0.0) {
            let Ok(note) = make_note(&c.sample, t, &self.mapping) else {
                continue;
            };
            feedback.push(PluckFeedback::from_note(
                &note,
                c.sample.position,
                PluckSource::Cursor,
                self.highlight,
            ));
            notes.push(note);
        }
        if !notes.is_empty() {
            self.sink.play(&notes);
        }
        feedback
    }

    /// Installs a lens and returns the previous one.
    pub fn set_lens(&mut self, lens: Lens) -> Result<Lens, SessionError> {
        lens.validate()?;
        let previous = std::mem::replace(&mut self.lens, lens);
        if self.mode != Mode::LensPlayback || !lens.enabled {
            self.mode = if lens.enabled { Mode::Lens } else { Mode::Free };
        }
        Ok(previous)
    }

    /// Plays every line in the lens, most important first, one note per
    /// `playback_spacing`.
    pub fn start_lens_playback(&mut self, t: f64) -> Result<Vec<ScheduledNote>, SessionError> {
        if !self.lens.enabled {
            return Err(SessionError::LensDisabled);
        }
        if !self.advance_clock(t) {
            return Ok(Vec::new());
        }
        let mut schedule = Vec::new();
        for sample in lens_contents(&self.lens, &self.lineset) {
            let onset = t + schedule.len() as f64 * self.playback_spacing;
            let Ok(note) = make_note(&sample, onset, &self.mapping) else {
                continue;
            };
            schedule.push(ScheduledNote {
                onset,
                note,
                position: sample.position,
            });
        }
        for s in &schedule {
            self.sink.play(std::slice::from_ref(&s.note));
        }
        if let Some(last) = schedule.last() {
            self.mode = Mode::LensPlayback;
            self.playback_until = last.onset + last.note.decay;
        }
        Ok(schedule)
    }

    /// Applies one scripted event.
    pub fn apply(&mut self, event: &TrajectoryEvent) -> Result<Vec<SessionEvent>, SessionError> {
        match &event.action {
            TrajectoryAction::Move { x, y } => Ok(self
                .on_cursor_move(Point2::new(*x, *y), event.t)
                .into_iter()
                .map(SessionEvent::Pluck)
                .collect()),
            TrajectoryAction::Lens { lens } => {
                let lens = lens.to_lens()?;
                if !self.advance_clock(event.t) {
                    return Ok(Vec::new());
                }
                self.set_lens(lens)?;
                Ok(vec![SessionEvent::Lens { t: event.t, lens }])
            }
            TrajectoryAction::Playback { .. } => {
                let schedule = self.start_lens_playback(event.t)?;
                Ok(vec![SessionEvent::Playback {
                    t: event.t,
                    schedule,
                }])
            }
        }
    }

    /// Runs a whole trajectory against this session's clock.
    pub fn replay_trajectory(&mut self, trajectory: &Trajectory) -> Result<Vec<SessionEvent>, SessionError> {
        trajectory.validate()?;
        let mut log = Vec::new();
        for event in &trajectory.events {
            log.extend(self.apply(event)?);
        }
        Ok(log)
    }
}
