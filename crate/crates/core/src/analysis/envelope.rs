use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RmsFrame {
    /// Window center, seconds.
    pub t: f64,
    pub rms: f64,
}

pub fn rms_envelope(samples: &[f32], sample_rate: f64) -> Vec<RmsFrame> {
    rms_envelope_with(samples, sample_rate, 1024, 256).expect("default window and hop are valid")
}

/// RMS per hop. A signal shorter than `window` yields one frame over all of it.
pub fn rms_envelope_with(
    samples: &[f32],
    sample_rate: f64,
    window: usize,
    hop: usize,
) -> Result<Vec<RmsFrame>, AnalysisError> {
    if window == 0 || hop == 0 {
        return Err(AnalysisError::Parameter("window and hop must be positive".into()));
    }
    if samples.is_empty() {
        return Ok(Vec::new());
    }
    let mut prefix = Vec::with_capacity(samples.len() + 1);
    prefix.push(0.0f64);
    for &s in samples {
        prefix.push(prefix.last().unwrap() + (s as f64) * (s as f64));
    }
    let w = window.min(samples.len());
    let mut out = Vec::with_capacity((samples.len() - w) / hop + 1);
    let mut start = 0;
    while start + w <= samples.len() {
        let energy = (prefix[start + w] - prefix[start]).max(0.0);
        out.push(RmsFrame {
            t: (start as f64 + 0.5 * w as f64) / sample_rate,
            rms: (energy / w as f64).sqrt(),
        });
        start += hop;
    }
    Ok(out)
}

pub fn rms_to_csv(frames: &[RmsFrame]) -> String {
    let mut out = String::from("t,rms\n");
    for f in frames {
        out.push_str(&format!("{:.6},{:.8}\n", f.t, f.rms));
    }
    out
}
