//! Audio measurements: pitch contour, RMS envelope, onset times.
//!
//! All functions are pure and operate on mono `f32` samples.

mod envelope;
mod onset;
mod pitch;

use thiserror::Error;

pub use envelope::{rms_envelope, rms_envelope_with, rms_to_csv, RmsFrame};
pub use onset::{detect_onsets, detect_onsets_with, onsets_to_json, OnsetConfig};
pub use pitch::{pitch_contour, pitch_contour_with, PitchConfig, PitchContour, PitchFrame};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("window of {window} samples is longer than the {len}-sample signal")]
    WindowTooLong { window: usize, len: usize },
    #[error("invalid analysis parameter: {0}")]
    Parameter(String),
}

/// Median of finite values; `None` when empty.
pub fn median(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let mut v: Vec<f64> = values.into_iter().filter(|x| x.is_finite()).collect();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let mid = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[mid]
    } else {
        0.5 * (v[mid - 1] + v[mid])
    })
}

#[cfg(test)]
mod tests {
    use super::median;

    #[test]
    fn medians() {
        assert_eq!(median([3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median([4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median([f64::NAN]), None);
        assert_eq!(median(Vec::<f64>::new()), None);
    }
}
