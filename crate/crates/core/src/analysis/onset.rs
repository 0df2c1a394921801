//! Spectral-flux onset detection.
//!
//! Log-compressed magnitude spectra are compared with the frame `lag` hops
//! earlier; positive differences are summed into a novelty curve whose local
//! maxima above a moving-average threshold are onsets.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OnsetConfig {
    pub frame: usize,
    pub hop: usize,
    /// Hops between compared spectra.
    pub lag: usize,
    /// `γ` in `ln(1 + γ|X|)`.
    pub compression: f64,
    /// Half-width of the moving-average threshold, seconds.
    pub average_radius: f64,
    /// Threshold offset as a fraction of the largest novelty value.
    pub delta: f64,
    /// A peak must be the maximum within this radius, seconds.
    pub peak_radius: f64,
    /// Onsets closer than this are merged into the first, seconds.
    pub merge: f64,
    /// Subtracted from detected times to undo the detector's lag, seconds.
    pub latency: f64,
}

impl Default for OnsetConfig {
    fn default() -> Self {
        Self {
            frame: 512,
            hop: 64,
            lag: 4,
            compression: 100.0,
            average_radius: 0.025,
            delta: 0.1,
            peak_radius: 0.01,
            merge: 0.02,
            latency: 0.0,
        }
    }
}

pub fn detect_onsets(samples: &[f32], sample_rate: f64) -> Vec<f64> {
    detect_onsets_with(samples, sample_rate, &OnsetConfig::default())
}

pub fn detect_onsets_with(samples: &[f32], sample_rate: f64, cfg: &OnsetConfig) -> Vec<f64> {
    let novelty = spectral_flux(samples, cfg);
    let Some(peak) = novelty.iter().copied().reduce(f64::max) else {
        return Vec::new();
    };
    if peak <= 1e-9 {
        return Vec::new();
    }
    let hop_s = cfg.hop as f64 / sample_rate;
    let avg_r = (cfg.average_radius / hop_s).round() as usize;
    let peak_r = ((cfg.peak_radius / hop_s).round() as usize).max(1);

    let mut prefix = Vec::with_capacity(novelty.len() + 1);
    prefix.push(0.0);
    for v in &novelty {
        prefix.push(prefix.last().unwrap() + v);
    }

    let mut onsets: Vec<f64> = Vec::new();
    for j in 0..novelty.len() {
        let v = novelty[j];
        let lo = j.saturating_sub(avg_r);
        let hi = (j + avg_r + 1).min(novelty.len());
        let mean = (prefix[hi] - prefix[lo]) / (hi - lo) as f64;
        if v <= mean + cfg.delta * peak {
            continue;
        }
        let plo = j.saturating_sub(peak_r);
        let phi = (j + peak_r + 1).min(novelty.len());
        // Ties resolve to the earliest frame.
        let is_max = novelty[plo..j].iter().all(|&u| u < v) && novelty[j + 1..phi].iter().all(|&u| u <= v);
        if !is_max {
            continue;
        }
        let t = (j as f64 * hop_s - cfg.latency).max(0.0);
        if onsets.last().is_none_or(|&last| t - last >= cfg.merge) {
            onsets.push(t);
        }
    }
    onsets
}

/// Novelty per hop; frame `j` is centered on sample `j·hop`.
fn spectral_flux(samples: &[f32], cfg: &OnsetConfig) -> Vec<f64> {
    let n = cfg.frame;
    if samples.is_empty() || n == 0 || cfg.hop == 0 {
        return Vec::new();
    }
    let frames = samples.len().div_ceil(cfg.hop);
    let bins = n / 2 + 1;
    let window: Vec<f64> = (0..n)
        .map(|i| 0.5 - 0.5 * (std::f64::consts::TAU * i as f64 / n as f64).cos())
        .collect();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    let mut history = vec![vec![0.0f64; bins]; cfg.lag.max(1)];
    let mut novelty = Vec::with_capacity(frames);
    for j in 0..frames {
        let center = (j * cfg.hop) as isize;
        for (i, c) in buf.iter_mut().enumerate() {
            let idx = center - (n / 2) as isize + i as isize;
            let s = if idx >= 0 && (idx as usize) < samples.len() {
                samples[idx as usize] as f64
            } else {
                0.0
            };
            *c = Complex::new(s * window[i], 0.0);
        }
        fft.process(&mut buf);
        let slot = j % history.len();
        let mut flux = 0.0;
        for k in 0..bins {
            let level = (1.0 + cfg.compression * buf[k].norm()).ln();
            flux += (level - history[slot][k]).max(0.0);
            history[slot][k] = level;
        }
        novelty.push(flux / bins as f64);
    }
    novelty
}

/// JSON array of onset times.
pub fn onsets_to_json(onsets: &[f64]) -> String {
    serde_json::to_string(onsets).expect("numbers serialize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn burst(sr: f64, at: &[f64], len: f64) -> Vec<f32> {
        let mut x = vec![0.0f32; (sr * len) as usize];
        for &t in at {
            let start = (t * sr) as usize;
            for i in 0..(0.15 * sr) as usize {
                let decay = (-(i as f64) / (0.01 * sr)).exp();
                let v = (std::f64::consts::TAU * 500.0 * i as f64 / sr).sin() * decay * 0.5;
                x[start + i] += v as f32;
            }
        }
        x
    }

    #[test]
    fn silence_has_no_onsets() {
        assert!(detect_onsets(&vec![0.0; 44100], 44100.0).is_empty());
        assert!(detect_onsets(&[], 44100.0).is_empty());
        assert_eq!(onsets_to_json(&[]), "[]");
    }

    #[test]
    fn separated_bursts() {
        let x = burst(44100.0, &[0.1, 0.3, 0.55], 0.8);
        let on = detect_onsets(&x, 44100.0);
        assert_eq!(on.len(), 3, "{on:?}");
        for (got, want) in on.iter().zip([0.1, 0.3, 0.55]) {
            assert!((got - want).abs() < 0.01, "{got} vs {want}");
        }
    }

    #[test]
    fn close_onsets_merge() {
        let x = burst(44100.0, &[0.1, 0.11], 0.5);
        assert_eq!(detect_onsets(&x, 44100.0).len(), 1);
    }
}
