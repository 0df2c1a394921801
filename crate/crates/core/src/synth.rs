//! Karplus-Strong plucked string with a linear-attack, exponential-decay envelope.
//!
//! The loop is `delay line → linear fractional delay → two-tap average → delay
//! line`. Its total delay is `D + d(a) + 0.5` samples where `D` is the integer
//! part and `d(a)` the interpolator's phase delay at the fundamental, so `a` is
//! solved to make the loop exactly one period long.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::mapping::{MappingConfig, Note};

/// `ln(1000)`: envelope time constants per −60 dB.
pub const SIXTY_DB: f64 = 6.907_755_278_982_137;
/// Envelope level below which a voice is finished (−80 dB).
pub const SILENCE_LEVEL: f64 = 1e-4;
/// Clipping at ±1 then touches well under 1% of samples.
const NOISE_RMS: f64 = 0.3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("frequency {frequency} Hz outside synthesizable range [{min}, {max}] Hz")]
    FrequencyOutOfRange { frequency: f64, min: f64, max: f64 },
    #[error("invalid sample rate {0}")]
    SampleRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnvelopePhase {
    Attack,
    Decay,
    Finished,
}

#[derive(Debug, Clone)]
pub struct Voice {
    note: Note,
    sample_rate: f64,
    delay_line: Vec<f64>,
    len: usize,
    write: usize,
    frac: f64,
    prev: f64,
    phase: EnvelopePhase,
    elapsed: u64,
    attack_samples: u64,
    level: f64,
    decay_factor: f64,
    effective_decay: f64,
    gain: f64,
}

pub fn spawn_voice(note: &Note, sample_rate: f64, cfg: &MappingConfig) -> Result<Voice, SynthError> {
    let mut voice = Voice::with_capacity(delay_capacity(note.frequency, sample_rate));
    voice.respawn(note, sample_rate, cfg)?;
    Ok(voice)
}

/// Renders `frames` samples into a fresh buffer.
pub fn render_voice(voice: &mut Voice, frames: usize) -> Vec<f32> {
    let mut out = vec![0.0; frames];
    voice.render(&mut out);
    out
}

fn delay_capacity(frequency: f64, sample_rate: f64) -> usize {
    if frequency > 0.0 && sample_rate > 0.0 {
        (sample_rate / frequency).ceil() as usize + 2
    } else {
        2
    }
}

/// Phase delay in samples of `(1-a) + a z^-1` at `omega` rad/sample.
pub fn interpolator_phase_delay(a: f64, omega: f64) -> f64 {
    (a * omega.sin()).atan2(1.0 - a + a * omega.cos()) / omega
}

/// Interpolation weight whose phase delay at `omega` equals `target` in `[0, 1)`.
pub fn solve_fraction(target: f64, omega: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if interpolator_phase_delay(mid, omega) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise seed for a note; identical `(line_id, onset)` pairs give identical plucks.
pub fn noise_seed(note: &Note) -> u64 {
    splitmix64(splitmix64(note.line_id as u64) ^ note.onset.to_bits())
}

impl Voice {
    /// An idle voice whose delay line holds `capacity` samples without reallocating.
    pub fn with_capacity(capacity: usize) -> Self {
        Self {
            note: Note {
                frequency: 0.0,
                amplitude: 0.0,
                decay: 0.0,
                line_id: 0,
                onset: 0.0,
            },
            sample_rate: 0.0,
            delay_line: Vec::with_capacity(capacity.max(2)),
            len: 0,
            write: 0,
            frac: 0.0,
            prev: 0.0,
            phase: EnvelopePhase::Finished,
            elapsed: 0,
            attack_samples: 1,
            level: 0.0,
            decay_factor: 0.0,
            effective_decay: 0.0,
            gain: 0.0,
        }
    }

    /// Reinitialises this voice for `note`. Does not allocate when the delay
    /// line capacity already covers `sample_rate / note.frequency + 2`.
    pub fn respawn(&mut self, note: &Note, sample_rate: f64, cfg: &MappingConfig) -> Result<(), SynthError> {
        if !(sample_rate > 0.0 && sample_rate.is_finite()) {
            return Err(SynthError::SampleRate(sample_rate));
        }
        let max = sample_rate / 4.0;
        if !(note.frequency >= cfg.f_min && note.frequency <= max) {
            return Err(SynthError::FrequencyOutOfRange {
                frequency: note.frequency,
                min: cfg.f_min,
                max,
            });
        }
        let period = sample_rate / note.frequency;
        let integer = (period - 0.5).floor();
        let omega = std::f64::consts::TAU * note.frequency / sample_rate;
        self.frac = solve_fraction(period - 0.5 - integer, omega);
        self.len = integer as usize + 2;
        self.delay_line.clear();
        self.delay_line.resize(self.len, 0.0);
        fill_noise(&mut self.delay_line, noise_seed(note));

        self.note = *note;
        self.sample_rate = sample_rate;
        self.write = 0;
        self.prev = 0.0;
        self.phase = EnvelopePhase::Attack;
        self.elapsed = 0;
        self.attack_samples = ((cfg.attack * sample_rate).round() as u64).max(1);
        self.level = 0.0;
        self.gain = note.amplitude;
        self.set_effective_decay(note.decay);
        Ok(())
    }

    /// Sets the decay to −60 dB. Affects samples rendered after the call.
    pub fn set_effective_decay(&mut self, seconds: f64) {
        self.effective_decay = seconds;
        self.decay_factor = (-SIXTY_DB / (seconds * self.sample_rate)).exp();
    }

    /// Output gain; starts at the note amplitude.
    pub fn set_gain(&mut self, gain: f64) {
        self.gain = gain;
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn note(&self) -> &Note {
        &self.note
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn effective_decay(&self) -> f64 {
        self.effective_decay
    }

    pub fn delay_length(&self) -> usize {
        self.len
    }

    /// Interpolation weight of the fractional delay.
    pub fn fraction(&self) -> f64 {
        self.frac
    }

    pub fn envelope(&self) -> f64 {
        self.level
    }

    pub fn phase(&self) -> EnvelopePhase {
        self.phase
    }

    pub fn is_finished(&self) -> bool {
        self.phase == EnvelopePhase::Finished
    }

    /// Samples rendered since spawn.
    pub fn elapsed(&self) -> u64 {
        self.elapsed
    }

    #[inline]
    fn next_sample(&mut self) -> f64 {
        let len = self.len;
        let newer = self.delay_line[(self.write + 2) % len];
        let older = self.delay_line[(self.write + 1) % len];
        let v = (1.0 - self.frac) * newer + self.frac * older;
        let y = 0.5 * (v + self.prev);
        self.prev = v;
        self.delay_line[self.write] = y;
        self.write = (self.write + 1) % len;

        match self.phase {
            EnvelopePhase::Attack => {
                self.level = (self.elapsed + 1) as f64 / self.attack_samples as f64;
                if self.elapsed + 1 >= self.attack_samples {
                    self.phase = EnvelopePhase::Decay;
                }
            }
            EnvelopePhase::Decay => {
                self.level *= self.decay_factor;
                if self.level < SILENCE_LEVEL {
                    self.phase = EnvelopePhase::Finished;
                }
            }
            EnvelopePhase::Finished => return 0.0,
        }
        self.elapsed += 1;
        v * self.level * self.gain
    }

    /// Overwrites `out` with the next samples; zeros once finished.
    pub fn render(&mut self, out: &mut [f32]) {
        for s in out.iter_mut() {
            *s = if self.is_finished() { 0.0 } else { self.next_sample() as f32 };
        }
    }

    /// Adds the next `out.len()` samples, times `scale`, into `out`.
    pub fn mix_into(&mut self, out: &mut [f64], scale: f64) {
        for s in out.iter_mut() {
            if self.is_finished() {
                break;
            }
            *s += self.next_sample() * scale;
        }
    }
}

/// White excitation with a flat magnitude spectrum and random phases, so every
/// pluck carries the same energy at each harmonic.
fn fill_noise(buf: &mut [f64], seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = buf.len();
    buf.iter_mut().for_each(|v| *v = 0.0);
    for k in 1..n.div_ceil(2) {
        let phase: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let step = std::f64::consts::TAU * k as f64 / n as f64;
        let (step_sin, step_cos) = step.sin_cos();
        let (mut s, mut c) = phase.sin_cos();
        for v in buf.iter_mut() {
            *v += c;
            (s, c) = (s * step_cos + c * step_sin, c * step_cos - s * step_sin);
        }
    }
    let rms = (buf.iter().map(|v| v * v).sum::<f64>() / n as f64).sqrt();
    let scale = if rms > 0.0 { NOISE_RMS / rms } else { 0.0 };
    buf.iter_mut().for_each(|v| *v = (*v * scale).clamp(-1.0, 1.0));
}
