//! Active-note buffer: polyphonic voice pool with dynamic gain and decay scaling.
//!
//! The producer side ([`TriggerHandle`]) pushes notes into a bounded lock-free
//! queue. The render side ([`ActiveNoteBuffer`]) drains it at the top of every
//! block, spawns voices sample-accurately and mixes them. Nothing on the render
//! path allocates or blocks once the buffer is constructed.
//!
//! Notes passed to one `trigger` call form a chord and are scaled together:
//! with `S` the cumulative amplitude of live voices plus the chord, each new
//! voice gets gain `A/S` when `S > 1` (else `A`) and decay
//! `max(decay_min, decay/n)` with `n` the live count including the chord.

use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::Arc;

use crossbeam_queue::ArrayQueue;
use serde::{Deserialize, Serialize};

use crate::mapping::{MappingConfig, Note};
use crate::synth::Voice;

/// Largest block rendered in one pass; bigger requests are split.
pub const MAX_BLOCK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MixerConfig {
    pub sample_rate: f64,
    pub queue_capacity: usize,
    pub max_voices: usize,
    pub master_gain: f64,
    /// Level above which the safety limiter starts to bend.
    pub limiter_knee: f64,
    pub mapping: MappingConfig,
}

impl Default for MixerConfig {
    fn default() -> Self {
        Self {
            sample_rate: 44100.0,
            queue_capacity: 1024,
            max_voices: 256,
            master_gain: 0.9,
            limiter_knee: 0.9,
            mapping: MappingConfig::default(),
        }
    }
}

/// Snapshot of the mixer's diagnostic counters.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct MixerStats {
    /// Notes discarded because the pending queue was full.
    pub dropped: u64,
    /// Samples whose magnitude exceeded 1 before the limiter.
    pub clip_events: u64,
    pub live_voices: u64,
    pub cumulative_amplitude: f64,
    pub frames_rendered: u64,
    /// Voices cut short to make room in a full pool.
    pub stolen: u64,
    /// Notes the synth refused (frequency out of range).
    pub rejected: u64,
    pub peak_pre_limiter: f64,
    pub scaling_enabled: bool,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    note: Note,
    frame: u64,
    chord: u64,
    chord_len: u32,
    seen_block: u64,
}

impl Pending {
    fn key(&self) -> (u64, u64) {
        (self.frame, self.chord)
    }
}

struct Shared {
    queue: ArrayQueue<Pending>,
    scaling: AtomicBool,
    next_chord: AtomicU64,
    dropped: AtomicU64,
    clip_events: AtomicU64,
    live_voices: AtomicU64,
    cumulative_bits: AtomicU64,
    frames_rendered: AtomicU64,
    stolen: AtomicU64,
    rejected: AtomicU64,
    peak_bits: AtomicU64,
}

/// Producer side. Cheap to clone and safe to use from any thread.
#[derive(Clone)]
pub struct TriggerHandle {
    shared: Arc<Shared>,
}

impl std::fmt::Debug for TriggerHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TriggerHandle").field("stats", &self.stats()).finish()
    }
}

impl TriggerHandle {
    /// Enqueues `notes` as one chord for the next block. Returns how many were queued.
    pub fn trigger(&self, notes: &[Note]) -> usize {
        self.trigger_at(notes, 0)
    }

    /// Enqueues `notes` as one chord starting at absolute render frame `frame`.
    /// Frames already rendered mean "as soon as possible".
    pub fn trigger_at(&self, notes: &[Note], frame: u64) -> usize {
        if notes.is_empty() {
            return 0;
        }
        let chord = self.shared.next_chord.fetch_add(1, Ordering::Relaxed);
        let chord_len = notes.len().min(u32::MAX as usize) as u32;
        for note in notes {
            let item = Pending {
                note: *note,
                frame,
                chord,
                chord_len,
                seen_block: 0,
            };
            if self.shared.queue.force_push(item).is_some() {
                self.shared.dropped.fetch_add(1, Ordering::Relaxed);
            }
        }
        notes.len().min(self.shared.queue.capacity())
    }

    /// Returns the previous flag. Disabling reproduces the unscaled ablation.
    pub fn set_scaling_enabled(&self, enabled: bool) -> bool {
        self.shared.scaling.swap(enabled, Ordering::Relaxed)
    }

    pub fn scaling_enabled(&self) -> bool {
        self.shared.scaling.load(Ordering::Relaxed)
    }

    pub fn pending(&self) -> usize {
        self.shared.queue.len()
    }

    pub fn stats(&self) -> MixerStats {
        let s = &self.shared;
        MixerStats {
            dropped: s.dropped.load(Ordering::Relaxed),
            clip_events: s.clip_events.load(Ordering::Relaxed),
            live_voices: s.live_voices.load(Ordering::Relaxed),
            cumulative_amplitude: f64::from_bits(s.cumulative_bits.load(Ordering::Relaxed)),
            frames_rendered: s.frames_rendered.load(Ordering::Relaxed),
            stolen: s.stolen.load(Ordering::Relaxed),
            rejected: s.rejected.load(Ordering::Relaxed),
            peak_pre_limiter: f64::from_bits(s.peak_bits.load(Ordering::Relaxed)),
            scaling_enabled: s.scaling.load(Ordering::Relaxed),
        }
    }
}

/// Render side. Owned by exactly one thread.
pub struct ActiveNoteBuffer {
    cfg: MixerConfig,
    shared: Arc<Shared>,
    pool: Vec<Voice>,
    live: usize,
    cumulative_amplitude: f64,
    scheduled: Vec<Pending>,
    max_chord_seen: Option<u64>,
    mix: Vec<f64>,
    frames_rendered: u64,
    block_index: u64,
}

impl std::fmt::Debug for ActiveNoteBuffer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ActiveNoteBuffer")
            .field("live", &self.live)
            .field("cumulative_amplitude", &self.cumulative_amplitude)
            .field("scheduled", &self.scheduled.len())
            .field("frames_rendered", &self.frames_rendered)
            .finish()
    }
}

impl ActiveNoteBuffer {
    pub fn new(cfg: MixerConfig) -> Self {
        let capacity = cfg.queue_capacity.max(1);
        let voice_capacity = (cfg.sample_rate / 20.0).ceil() as usize + 2;
        let shared = Arc::new(Shared {
            queue: ArrayQueue::new(capacity),
            scaling: AtomicBool::new(true),
            next_chord: AtomicU64::new(0),
            dropped: AtomicU64::new(0),
            clip_events: AtomicU64::new(0),
            live_voices: AtomicU64::new(0),
            cumulative_bits: AtomicU64::new(0f64.to_bits()),
            frames_rendered: AtomicU64::new(0),
            stolen: AtomicU64::new(0),
            rejected: AtomicU64::new(0),
            peak_bits: AtomicU64::new(0f64.to_bits()),
        });
        Self {
            pool: (0..cfg.max_voices.max(1))
                .map(|_| Voice::with_capacity(voice_capacity))
                .collect(),
            live: 0,
            cumulative_amplitude: 0.0,
            scheduled: Vec::with_capacity(capacity * 2),
            max_chord_seen: None,
            mix: vec![0.0; MAX_BLOCK],
            frames_rendered: 0,
            block_index: 0,
            shared,
            cfg,
        }
    }

    pub fn config(&self) -> &MixerConfig {
        &self.cfg
    }

    pub fn handle(&self) -> TriggerHandle {
        TriggerHandle {
            shared: Arc::clone(&self.shared),
        }
    }

    /// Same as [`TriggerHandle::trigger`], for single-threaded use.
    pub fn trigger(&self, notes: &[Note]) -> usize {
        self.handle().trigger(notes)
    }

    pub fn set_scaling_enabled(&self, enabled: bool) -> bool {
        self.handle().set_scaling_enabled(enabled)
    }

    pub fn stats(&self) -> MixerStats {
        self.handle().stats()
    }

    /// Σ of note amplitudes over live voices.
    pub fn cumulative_amplitude(&self) -> f64 {
        self.cumulative_amplitude
    }

    pub fn live_voices(&self) -> &[Voice] {
        &self.pool[..self.live]
    }

    pub fn live_count(&self) -> usize {
        self.live
    }

    pub fn frames_rendered(&self) -> u64 {
        self.frames_rendered
    }

    /// No live voices and nothing queued or scheduled.
    pub fn is_idle(&self) -> bool {
        self.live == 0 && self.scheduled.is_empty() && self.shared.queue.is_empty()
    }

    /// Renders the next `out.len()` samples.
    pub fn render_block(&mut self, out: &mut [f32]) {
        for chunk in out.chunks_mut(MAX_BLOCK) {
            self.render_chunk(chunk);
        }
        self.publish();
    }

    fn render_chunk(&mut self, out: &mut [f32]) {
        let n = out.len();
        let start = self.frames_rendered;
        self.drain_queue();
        self.mix[..n].iter_mut().for_each(|v| *v = 0.0);

        let mut pos = 0usize;
        loop {
            let spawn_at = match self.scheduled.last() {
                Some(p) if p.frame < start + n as u64 && self.chord_ready() => {
                    (p.frame.saturating_sub(start) as usize).max(pos)
                }
                _ => n,
            };
            self.mix_voices(pos, spawn_at);
            pos = spawn_at;
            if pos == n {
                break;
            }
            self.remove_finished();
            self.spawn_next_chord();
        }
        self.remove_finished();
        self.finish_chunk(out);
        self.frames_rendered += n as u64;
        self.block_index += 1;
    }

    fn drain_queue(&mut self) {
        while let Some(mut p) = self.shared.queue.pop() {
            p.seen_block = self.block_index;
            self.max_chord_seen = Some(self.max_chord_seen.map_or(p.chord, |m| m.max(p.chord)));
            if self.scheduled.len() == self.scheduled.capacity() {
                self.shared.dropped.fetch_add(1, Ordering::Relaxed);
                continue;
            }
            let key = p.key();
            let at = self.scheduled.partition_point(|q| q.key() > key);
            self.scheduled.insert(at, p);
        }
    }

    /// A chord spawns once all its notes arrived, a later chord was seen, or
    /// it has already waited a block.
    fn chord_ready(&self) -> bool {
        let Some(last) = self.scheduled.last() else {
            return false;
        };
        let key = last.key();
        let members = self.scheduled.iter().rev().take_while(|q| q.key() == key);
        let mut count = 0u32;
        let mut waited = false;
        for q in members {
            count += 1;
            waited |= q.seen_block < self.block_index;
        }
        count >= last.chord_len || waited || self.max_chord_seen.is_some_and(|m| m > last.chord)
    }

    fn mix_voices(&mut self, from: usize, to: usize) {
        if from >= to {
            return;
        }
        let target = &mut self.mix[from..to];
        for voice in &mut self.pool[..self.live] {
            voice.mix_into(target, 1.0);
        }
    }

    fn remove_finished(&mut self) {
        let mut i = 0;
        let mut changed = false;
        while i < self.live {
            if self.pool[i].is_finished() {
                self.pool.swap(i, self.live - 1);
                self.live -= 1;
                changed = true;
            } else {
                i += 1;
            }
        }
        if changed {
            self.recompute_cumulative();
        }
    }

    fn recompute_cumulative(&mut self) {
        self.cumulative_amplitude = self.pool[..self.live].iter().map(|v| v.note().amplitude).sum();
    }

    fn spawn_next_chord(&mut self) {
        let Some(last) = self.scheduled.last() else {
            return;
        };
        let key = last.key();
        let size = self.scheduled.iter().rev().take_while(|q| q.key() == key).count();
        let first = self.scheduled.len() - size;

        let scaling = self.shared.scaling.load(Ordering::Relaxed);
        let incoming: f64 = self.scheduled[first..].iter().map(|p| p.note.amplitude).sum();
        let total = self.cumulative_amplitude + incoming;
        let n = (self.live + size) as f64;
        let decay_min = self.cfg.mapping.decay_min;

        // Spawn in trigger order; the tail of the descending list holds the earliest.
        for idx in (first..self.scheduled.len()).rev() {
            let note = self.scheduled[idx].note;
            let gain = if scaling && total > 1.0 {
                note.amplitude / total
            } else {
                note.amplitude
            };
            let decay = if scaling {
                (note.decay / n).max(decay_min)
            } else {
                note.decay
            };
            let slot = self.claim_slot();
            let voice = &mut self.pool[slot];
            if voice
                .respawn(&note, self.cfg.sample_rate, &self.cfg.mapping)
                .is_err()
            {
                self.shared.rejected.fetch_add(1, Ordering::Relaxed);
                continue;
            }
            voice.set_gain(gain);
            voice.set_effective_decay(decay);
            if slot == self.live {
                self.live += 1;
            }
        }
        self.scheduled.truncate(first);
        self.recompute_cumulative();
    }

    /// Index of a free slot, stealing the quietest live voice when the pool is full.
    fn claim_slot(&mut self) -> usize {
        if self.live < self.pool.len() {
            return self.live;
        }
        self.shared.stolen.fetch_add(1, Ordering::Relaxed);
        (0..self.live)
            .min_by(|&a, &b| {
                let la = self.pool[a].gain() * self.pool[a].envelope();
                let lb = self.pool[b].gain() * self.pool[b].envelope();
                la.total_cmp(&lb)
            })
            .expect("pool is non-empty")
    }

    fn finish_chunk(&mut self, out: &mut [f32]) {
        let knee = self.cfg.limiter_knee;
        let gain = self.cfg.master_gain;
        let mut clips = 0u64;
        let mut peak = 0.0f64;
        for (o, &m) in out.iter_mut().zip(&self.mix) {
            let x = m * gain;
            let mag = x.abs();
            peak = peak.max(mag);
            if mag > 1.0 {
                clips += 1;
            }
            *o = soft_limit(x, knee) as f32;
        }
        if clips > 0 {
            self.shared.clip_events.fetch_add(clips, Ordering::Relaxed);
        }
        self.shared.peak_bits.fetch_max(peak.to_bits(), Ordering::Relaxed);
    }

    fn publish(&self) {
        let s = &self.shared;
        s.live_voices.store(self.live as u64, Ordering::Relaxed);
        s.cumulative_bits
            .store(self.cumulative_amplitude.to_bits(), Ordering::Relaxed);
        s.frames_rendered.store(self.frames_rendered, Ordering::Relaxed);
    }
}

/// Identity below `knee`, tanh-compressed above; never exceeds ±1.
pub fn soft_limit(x: f64, knee: f64) -> f64 {
    let mag = x.abs();
    if mag <= knee {
        return x;
    }
    let head = 1.0 - knee;
    (knee + head * ((mag - knee) / head).tanh()).copysign(x)
}
