//! Geometry and importance to note parameters.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CurveSample, LineId};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MappingError {
    #[error("angle {0} outside [-π/2, π/2]")]
    AngleOutOfRange(f64),
    #[error("importance {0} outside [0, 1]")]
    ImportanceOutOfRange(f64),
    #[error("invalid mapping configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MappingConfig {
    /// Frequency of a straight-down segment, Hz.
    pub f_min: f64,
    /// Frequency of a straight-up segment, Hz.
    pub f_max: f64,
    /// Linear attack, seconds.
    pub attack: f64,
    /// Decay to −60 dB for a note sounding alone, seconds.
    pub decay_base: f64,
    /// Shortest decay the mixer may assign, seconds.
    pub decay_min: f64,
    /// Gain of an importance-zero note.
    pub amp_floor: f64,
}

impl Default for MappingConfig {
    fn default() -> Self {
        Self {
            f_min: 110.0,
            f_max: 880.0,
            attack: 0.002,
            decay_base: 0.8,
            decay_min: 0.06,
            amp_floor: 0.0,
        }
    }
}

impl MappingConfig {
    pub fn validate(&self, sample_rate: f64) -> Result<(), MappingError> {
        let bad = |msg: String| Err(MappingError::InvalidConfig(msg));
        if !(self.f_min > 0.0 && self.f_min < self.f_max) {
            return bad(format!(
                "need 0 < f_min < f_max, got f_min={} f_max={}",
                self.f_min, self.f_max
            ));
        }
        if self.f_max.partial_cmp(&(0.5 * sample_rate)) != Some(std::cmp::Ordering::Less) {
            return bad(format!(
                "f_max={} must be below Nyquist ({} Hz)",
                self.f_max,
                0.5 * sample_rate
            ));
        }
        if !(self.attack > 0.0 && self.attack.is_finite()) {
            return bad(format!("attack must be positive, got {}", self.attack));
        }
        if !(self.decay_min > 0.0 && self.decay_min <= self.decay_base && self.decay_base.is_finite()) {
            return bad(format!(
                "need 0 < decay_min <= decay_base, got decay_min={} decay_base={}",
                self.decay_min, self.decay_base
            ));
        }
        if !(0.0..=1.0).contains(&self.amp_floor) {
            return bad(format!("amp_floor must lie in [0, 1], got {}", self.amp_floor));
        }
        Ok(())
    }
}

/// A triggered pluck.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Note {
    pub frequency: f64,
    pub amplitude: f64,
    pub decay: f64,
    pub line_id: LineId,
    pub onset: f64,
}

/// Log-linear map: equal angle steps give equal musical intervals, with
/// `-π/2 ↦ f_min` and `+π/2 ↦ f_max`.
pub fn angle_to_frequency(theta: f64, cfg: &MappingConfig) -> Result<f64, MappingError> {
    if !(-FRAC_PI_2..=FRAC_PI_2).contains(&theta) {
        return Err(MappingError::AngleOutOfRange(theta));
    }
    let position = (theta + FRAC_PI_2) / PI;
    let f = cfg.f_min * (cfg.f_max / cfg.f_min).powf(position);
    Ok(f.clamp(cfg.f_min, cfg.f_max))
}

pub fn importance_to_amplitude(beta: f64, cfg: &MappingConfig) -> Result<f64, MappingError> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(MappingError::ImportanceOutOfRange(beta));
    }
    Ok((cfg.amp_floor + (1.0 - cfg.amp_floor) * beta).clamp(0.0, 1.0))
}

pub fn make_note(sample: &CurveSample, onset: f64, cfg: &MappingConfig) -> Result<Note, MappingError> {
    Ok(Note {
        frequency: angle_to_frequency(sample.angle, cfg)?,
        amplitude: importance_to_amplitude(sample.beta, cfg)?,
        decay: cfg.decay_base,
        line_id: sample.line_id,
        onset,
    })
}
