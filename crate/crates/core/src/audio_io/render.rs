use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{encode_wav, AudioError, SampleFormat};
use crate::mapping::MappingConfig;
use crate::mixer::{ActiveNoteBuffer, MixerConfig, MixerStats};
use crate::model::LineSet;
use crate::session::{MixerSink, PluckFeedback, Session, SessionEvent, Trajectory};

/// Longest silence-seeking tail after the last scheduled onset, seconds.
pub const MAX_TAIL_SECONDS: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RenderSpec {
    pub sample_rate: u32,
    pub block_frames: usize,
    /// Minimum output length, seconds.
    pub duration: f64,
    pub format: SampleFormat,
    pub dynamic_scaling: bool,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            sample_rate: 44100,
            block_frames: 256,
            duration: 0.0,
            format: SampleFormat::Pcm16,
            dynamic_scaling: true,
        }
    }
}

impl RenderSpec {
    pub fn validate(&self) -> Result<(), AudioError> {
        if !matches!(self.sample_rate, 44100 | 48000) {
            return Err(AudioError::InvalidSpec(format!(
                "sample rate {} not supported (44100 or 48000)",
                self.sample_rate
            )));
        }
        if !(self.block_frames.is_power_of_two() && (64..=4096).contains(&self.block_frames)) {
            return Err(AudioError::InvalidSpec(format!(
                "block size {} must be a power of two in [64, 4096]",
                self.block_frames
            )));
        }
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(AudioError::InvalidSpec(format!(
                "duration {} must be finite and non-negative",
                self.duration
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RenderOutput {
    pub wav: Vec<u8>,
    /// Samples as rendered, before format conversion.
    pub samples: Vec<f32>,
    pub events: Vec<SessionEvent>,
    pub stats: MixerStats,
    /// Session events ignored for going back in time.
    pub warnings: u64,
}

impl RenderOutput {
    /// Every pluck in onset order, lens playback notes included.
    pub fn plucks(&self) -> Vec<PluckFeedback> {
        let mut all: Vec<PluckFeedback> = self.events.iter().flat_map(|e| e.plucks(false)).collect();
        all.sort_by(|a, b| a.onset.total_cmp(&b.onset));
        all
    }

    /// One JSON object per pluck, LF-terminated.
    pub fn event_log_jsonl(&self) -> String {
        let mut out = String::new();
        for p in self.plucks() {
            out.push_str(&serde_json::to_string(&p).expect("feedback serializes"));
            out.push('\n');
        }
        out
    }

    pub fn duration(&self, sample_rate: u32) -> f64 {
        self.samples.len() as f64 / sample_rate as f64
    }
}

/// Runs the trajectory against a virtual clock and mixes the result.
///
/// Events with `t` before the end of a block are applied before that block is
/// rendered, so every note starts on the frame of its onset. Output stops at
/// the first idle block boundary after `spec.duration` and the last onset, or
/// [`MAX_TAIL_SECONDS`] past the last onset, whichever comes first.
pub fn render_offline(
    lineset: impl Into<Arc<LineSet>>,
    trajectory: &Trajectory,
    cfg: &MappingConfig,
    spec: &RenderSpec,
) -> Result<RenderOutput, AudioError> {
    spec.validate()?;
    let sr = spec.sample_rate as f64;
    cfg.validate(sr).map_err(|e| AudioError::Validation(e.to_string()))?;
    trajectory
        .validate()
        .map_err(|e| AudioError::Validation(e.to_string()))?;

    let mut buffer = ActiveNoteBuffer::new(MixerConfig {
        sample_rate: sr,
        mapping: *cfg,
        ..MixerConfig::default()
    });
    buffer.set_scaling_enabled(spec.dynamic_scaling);
    let mut session = Session::new(lineset, *cfg, MixerSink::new(buffer.handle(), sr));

    let block = spec.block_frames;
    let mut samples: Vec<f32> = Vec::with_capacity(((spec.duration + 2.0) * sr) as usize);
    let mut events = Vec::new();
    let mut next = 0usize;
    let mut last_onset = 0.0f64;
    let mut scratch = vec![0.0f32; block];

    loop {
        let frames = samples.len();
        let block_end = (frames + block) as f64 / sr;
        while next < trajectory.events.len() && trajectory.events[next].t < block_end {
            let produced = session
                .apply(&trajectory.events[next])
                .map_err(|e| AudioError::Validation(e.to_string()))?;
            last_onset = last_onset.max(trajectory.events[next].t);
            for event in &produced {
                if let SessionEvent::Playback { schedule, .. } = event {
                    if let Some(last) = schedule.last() {
                        last_onset = last_onset.max(last.onset);
                    }
                }
            }
            events.extend(produced);
            next += 1;
        }
        buffer.render_block(&mut scratch);
        samples.extend_from_slice(&scratch);

        if next < trajectory.events.len() {
            continue;
        }
        let now = samples.len() as f64 / sr;
        let past_onsets = now > last_onset;
        if past_onsets && now >= spec.duration && buffer.is_idle() {
            break;
        }
        if now >= spec.duration.max(last_onset + MAX_TAIL_SECONDS) {
            break;
        }
    }

    let wav = encode_wav(&samples, spec.sample_rate, spec.format)?;
    Ok(RenderOutput {
        wav,
        samples,
        events,
        stats: buffer.stats(),
        warnings: session.warnings(),
    })
}
