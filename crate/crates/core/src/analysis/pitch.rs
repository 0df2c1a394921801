//! Enhanced-autocorrelation pitch tracking.
//!
//! Per window: normalized square-difference autocorrelation
//! `n(τ) = 2 r(τ) / m(τ)`, clipped at zero and with its 2× time-stretched copy
//! subtracted to suppress sub-octave peaks. The first peak within 90% of the
//! best one, searched after the first negative lobe, gives the period.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{median, AnalysisError};

/// Mean power per sample below which a window is treated as silence.
const SILENCE_POWER: f64 = 1e-10;
const PEAK_RATIO: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchConfig {
    pub window: usize,
    pub hop: usize,
    pub f_min: f64,
    pub f_max: f64,
    pub threshold: f64,
}

impl Default for PitchConfig {
    fn default() -> Self {
        Self {
            window: 2048,
            hop: 512,
            f_min: 50.0,
            f_max: 2000.0,
            threshold: 0.3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PitchFrame {
    /// Window center, seconds.
    pub t: f64,
    pub f0: Option<f64>,
    pub confidence: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PitchContour {
    pub frames: Vec<PitchFrame>,
}

impl PitchContour {
    pub fn voiced(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.frames.iter().filter_map(|f| f.f0.map(|f0| (f.t, f0)))
    }

    /// Median f0 of voiced frames centered in `[t0, t1)`.
    pub fn median_f0(&self, t0: f64, t1: f64) -> Option<f64> {
        median(self.voiced().filter(|(t, _)| *t >= t0 && *t < t1).map(|(_, f)| f))
    }

    /// `t,f0,confidence`; unvoiced frames leave `f0` empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f0,confidence\n");
        for f in &self.frames {
            let f0 = f.f0.map(|v| format!("{v:.4}")).unwrap_or_default();
            out.push_str(&format!("{:.6},{},{:.4}\n", f.t, f0, f.confidence));
        }
        out
    }
}

pub fn pitch_contour(samples: &[f32], sample_rate: f64) -> Result<PitchContour, AnalysisError> {
    pitch_contour_with(samples, sample_rate, &PitchConfig::default())
}

pub fn pitch_contour_with(samples: &[f32], sample_rate: f64, cfg: &PitchConfig) -> Result<PitchContour, AnalysisError> {
    let w = cfg.window;
    if w < 4 || cfg.hop == 0 {
        return Err(AnalysisError::Parameter(format!(
            "window {} and hop {} must be positive",
            cfg.window, cfg.hop
        )));
    }
    if !(cfg.f_min > 0.0 && cfg.f_min < cfg.f_max && sample_rate > 0.0) {
        return Err(AnalysisError::Parameter("need 0 < f_min < f_max".into()));
    }
    if w > samples.len() {
        return Err(AnalysisError::WindowTooLong {
            window: w,
            len: samples.len(),
        });
    }
    let lag_min = ((sample_rate / cfg.f_max).floor() as usize).max(2);
    let lag_max = ((sample_rate / cfg.f_min).ceil() as usize).min(w - 2);

    let n = (2 * w).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(n);
    let inverse = planner.plan_fft_inverse(n);
    let mut spectrum = vec![Complex::new(0.0, 0.0); n];
    let mut frame = vec![0.0f64; w];
    let mut prefix = vec![0.0f64; w + 1];
    let mut nsdf = vec![0.0f64; w];
    let mut eac = vec![0.0f64; w];

    let mut frames = Vec::with_capacity((samples.len() - w) / cfg.hop + 1);
    let mut start = 0;
    while start + w <= samples.len() {
        let t = (start as f64 + 0.5 * w as f64) / sample_rate;
        for (d, s) in frame.iter_mut().zip(&samples[start..start + w]) {
            *d = *s as f64;
        }
        let power = frame.iter().map(|v| v * v).sum::<f64>() / w as f64;
        let mut result = PitchFrame {
            t,
            f0: None,
            confidence: 0.0,
        };
        if power >= SILENCE_POWER {
            autocorrelate(&frame, &mut spectrum, forward.as_ref(), inverse.as_ref());
            prefix[0] = 0.0;
            for (i, v) in frame.iter().enumerate() {
                prefix[i + 1] = prefix[i] + v * v;
            }
            let total = prefix[w];
            for tau in 0..w {
                // Σ x[j]² over the first and last w-τ samples.
                let m = prefix[w - tau] + (total - prefix[tau]);
                nsdf[tau] = if m > 0.0 { 2.0 * spectrum[tau].re / (n as f64) / m } else { 0.0 };
            }
            for tau in 0..w {
                let clipped = nsdf[tau].max(0.0);
                let half = if tau % 2 == 0 {
                    nsdf[tau / 2].max(0.0)
                } else {
                    0.5 * (nsdf[tau / 2].max(0.0) + nsdf[tau / 2 + 1].max(0.0))
                };
                eac[tau] = (clipped - half).max(0.0);
            }
            if let Some((lag, confidence)) = pick_period(&nsdf, &eac, lag_min, lag_max) {
                result.confidence = confidence.clamp(0.0, 1.0);
                if result.confidence >= cfg.threshold {
                    result.f0 = Some(sample_rate / lag);
                }
            }
        }
        frames.push(result);
        start += cfg.hop;
    }
    Ok(PitchContour { frames })
}

/// Writes the (unnormalized) autocorrelation of `frame` into `spectrum[..]`.
fn autocorrelate(
    frame: &[f64],
    spectrum: &mut [Complex<f64>],
    forward: &dyn rustfft::Fft<f64>,
    inverse: &dyn rustfft::Fft<f64>,
) {
    for (i, c) in spectrum.iter_mut().enumerate() {
        *c = Complex::new(frame.get(i).copied().unwrap_or(0.0), 0.0);
    }
    forward.process(spectrum);
    for c in spectrum.iter_mut() {
        *c = Complex::new(c.norm_sqr(), 0.0);
    }
    inverse.process(spectrum);
}

/// Fractional lag and its normalized height.
fn pick_period(nsdf: &[f64], eac: &[f64], lag_min: usize, lag_max: usize) -> Option<(f64, f64)> {
    let first_negative = (1..nsdf.len()).find(|&t| nsdf[t] < 0.0)?;
    let from = lag_min.max(first_negative).max(1);
    if from + 1 >= lag_max {
        return None;
    }
    let is_peak = |t: usize| eac[t] > 0.0 && eac[t] >= eac[t - 1] && eac[t] > eac[t + 1];
    let best = (from..lag_max).filter(|&t| is_peak(t)).map(|t| eac[t]).fold(0.0, f64::max);
    if best <= 0.0 {
        return None;
    }
    let lag = (from..lag_max).find(|&t| is_peak(t) && eac[t] >= PEAK_RATIO * best)?;
    let (a, b, c) = (nsdf[lag - 1], nsdf[lag], nsdf[lag + 1]);
    let denom = a - 2.0 * b + c;
    let (shift, height) = if denom < 0.0 {
        let shift = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
        (shift, b - 0.25 * (a - c) * shift)
    } else {
        (0.0, b)
    };
    Some((lag as f64 + shift, height))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tone(f: f64, sr: f64, seconds: f64, amp: f64) -> Vec<f32> {
        (0..(sr * seconds) as usize)
            .map(|i| (amp * (std::f64::consts::TAU * f * i as f64 / sr).sin()) as f32)
            .collect()
    }

    #[test]
    fn sine_440() {
        let c = pitch_contour(&tone(440.0, 44100.0, 1.0, 0.5), 44100.0).unwrap();
        let voiced: Vec<f64> = c.voiced().map(|(_, f)| f).collect();
        assert_eq!(voiced.len(), c.frames.len());
        assert!(voiced.iter().all(|f| (f - 440.0).abs() < 1.0), "{voiced:?}");
    }

    #[test]
    fn silence_is_unvoiced() {
        let c = pitch_contour(&vec![0.0; 44100], 44100.0).unwrap();
        assert!(c.frames.iter().all(|f| f.f0.is_none()));
    }

    #[test]
    fn harmonic_rich_tone_avoids_octave_errors() {
        let sr = 44100.0;
        let f = 150.0;
        let x: Vec<f32> = (0..44100)
            .map(|i| {
                let t = i as f64 / sr;
                (1..8)
                    .map(|h| (std::f64::consts::TAU * f * h as f64 * t).sin() / h as f64)
                    .sum::<f64>() as f32
                    * 0.3
            })
            .collect();
        let m = pitch_contour(&x, sr).unwrap().median_f0(0.0, 1.0).unwrap();
        assert!((m / f - 1.0).abs() < 0.005, "{m}");
    }

    #[test]
    fn frame_times_and_errors() {
        let c = pitch_contour(&tone(300.0, 48000.0, 0.5, 0.5), 48000.0).unwrap();
        let dt = 512.0 / 48000.0;
        assert!((c.frames[0].t - 1024.0 / 48000.0).abs() < 1e-12);
        assert!(c.frames.windows(2).all(|w| ((w[1].t - w[0].t) - dt).abs() < 1e-12));
        assert!(matches!(
            pitch_contour(&[0.0; 100], 44100.0),
            Err(AnalysisError::WindowTooLong { .. })
        ));
        assert!(c.to_csv().starts_with("t,f0,confidence\n"));
    }
}
