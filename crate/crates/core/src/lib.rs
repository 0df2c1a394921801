//! Plucked-string sonification of dense line charts.
//!
//! A moving cursor "plucks" every line segment its path crosses. Segment
//! direction sets the pitch, importance sets the loudness, and a mixer keeps
//! dense chords from clipping by scaling gains and decays with the number of
//! sounding voices. A lens can mute important lines in a region or play all
//! lines inside it in importance order.
//!
//! The crate is organised bottom-up:
//!
//! * [`model`] – line datasets with per-vertex importance, JSON I/O, presets.
//! * [`geometry`] – crossing detection, segment angles, lens math.
//! * [`mapping`] – angle → frequency, importance → amplitude.
//! * [`synth`] – Karplus-Strong voice with an attack/decay envelope.
//! * [`mixer`] – active-note buffer with dynamic amplitude and decay scaling.
//! * [`session`] – interaction state machine and scripted trajectories.
//! * [`audio_io`] – WAV encoding, offline rendering, real-time block streaming.
//! * [`analysis`] – pitch contour, RMS envelope and onset detection.

pub mod analysis;
pub mod audio_io;
pub mod geometry;
pub mod mapping;
pub mod mixer;
pub mod model;
pub mod session;
pub mod synth;

pub use geometry::{CursorMove, Crossing, Lens};
pub use mapping::{MappingConfig, Note};
pub use mixer::{ActiveNoteBuffer, MixerConfig, MixerStats, TriggerHandle};
pub use model::{CurveSample, Importance, LineId, LineSet, Point2, Polyline, Preset};
pub use session::{PluckFeedback, Session, SessionEvent, Trajectory};
