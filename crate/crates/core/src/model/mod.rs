//! Line datasets: polylines in normalized chart space carrying an importance
//! value per vertex.

mod json;
pub mod presets;

use std::collections::{BTreeMap, HashSet};
use std::ops::{Add, Mul, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, GeometryError};

pub use json::{load_lineset, save_lineset};
pub use presets::{generate_dataset, Preset};

pub type LineId = i64;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("malformed dataset: {0}")]
    Parse(String),
    #[error("{}{field}: {reason}", line_prefix(*.line))]
    Invalid {
        line: Option<LineId>,
        field: &'static str,
        reason: String,
    },
    #[error("curve parameter {0} outside [0, 1]")]
    ParameterOutOfRange(f64),
    #[error("line {line}: segment {segment}: {source}")]
    Segment {
        line: LineId,
        segment: usize,
        #[source]
        source: GeometryError,
    },
    #[error("unknown preset `{0}` (expected teaser, overlap or grid)")]
    UnknownPreset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn line_prefix(line: Option<LineId>) -> String {
    match line {
        Some(id) => format!("line {id}: "),
        None => String::new(),
    }
}

fn invalid(line: Option<LineId>, field: &'static str, reason: impl Into<String>) -> ModelError {
    ModelError::Invalid {
        line,
        field,
        reason: reason.into(),
    }
}

/// A point in chart space. The canonical chart is `[0,1]²` with `y` up.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm_sq().sqrt()
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Importance along a polyline: one value per vertex, or a single value for
/// the whole line.
#[derive(Debug, Clone, PartialEq)]
pub enum Importance {
    Scalar(f64),
    PerVertex(Vec<f64>),
}

impl Importance {
    fn values(&self) -> &[f64] {
        match self {
            Importance::Scalar(v) => std::slice::from_ref(v),
            Importance::PerVertex(v) => v,
        }
    }

    pub fn max(&self) -> f64 {
        self.values().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values().iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polyline {
    pub id: LineId,
    points: Vec<Point2>,
    importance: Importance,
    pub cluster: Option<String>,
}

impl Polyline {
    pub fn new(
        id: LineId,
        points: Vec<Point2>,
        importance: Importance,
        cluster: Option<String>,
    ) -> Result<Self, ModelError> {
        if points.len() < 2 {
            return Err(invalid(
                Some(id),
                "points",
                format!("need at least 2 points, got {}", points.len()),
            ));
        }
        if let Some(k) = points.iter().position(|p| !p.is_finite()) {
            return Err(invalid(
                Some(id),
                "points",
                format!("point {k} is not finite"),
            ));
        }
        if let Importance::PerVertex(v) = &importance {
            if v.len() != points.len() && v.len() != 1 {
                return Err(invalid(
                    Some(id),
                    "importance",
                    format!(
                        "expected 1 or {} values, got {}",
                        points.len(),
                        v.len()
                    ),
                ));
            }
        }
        for &beta in importance.values() {
            if !(0.0..=1.0).contains(&beta) {
                return Err(invalid(
                    Some(id),
                    "importance",
                    format!("value {beta} outside the importance range [0, 1]"),
                ));
            }
        }
        Ok(Self {
            id,
            points,
            importance,
            cluster,
        })
    }

    pub fn points(&self) -> &[Point2] {
        &self.points
    }

    pub fn importance(&self) -> &Importance {
        &self.importance
    }

    pub fn segment_count(&self) -> usize {
        self.points.len() - 1
    }

    pub fn segment(&self, k: usize) -> (Point2, Point2) {
        (self.points[k], self.points[k + 1])
    }

    pub fn beta_at_vertex(&self, k: usize) -> f64 {
        match &self.importance {
            Importance::Scalar(v) => *v,
            Importance::PerVertex(v) if v.len() == 1 => v[0],
            Importance::PerVertex(v) => v[k],
        }
    }

    /// Importance at local parameter `t ∈ [0,1]` of segment `k`.
    pub fn beta_on_segment(&self, k: usize, t: f64) -> f64 {
        let b0 = self.beta_at_vertex(k);
        let b1 = self.beta_at_vertex(k + 1);
        (b0 + (b1 - b0) * t).clamp(0.0, 1.0)
    }

    /// Builds the curve sample for local parameter `t` on segment `k`.
    pub(crate) fn sample_on_segment(
        &self,
        k: usize,
        t: f64,
    ) -> Result<CurveSample, ModelError> {
        let (a, b) = self.segment(k);
        let angle = geometry::segment_angle(a, b).map_err(|source| ModelError::Segment {
            line: self.id,
            segment: k,
            source,
        })?;
        let position = if t == 0.0 {
            a
        } else if t == 1.0 {
            b
        } else {
            a.lerp(b, t)
        };
        Ok(CurveSample {
            line_id: self.id,
            u: ((k as f64 + t) / self.segment_count() as f64).clamp(0.0, 1.0),
            position,
            beta: self.beta_on_segment(k, t),
            angle,
        })
    }

    pub fn sample(&self, u: f64) -> Result<CurveSample, ModelError> {
        sample_curve(self, u)
    }
}

/// A point on a line's parametric curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    pub line_id: LineId,
    /// Whole-curve parameter; segment `k` spans `[k/(M-1), (k+1)/(M-1)]`.
    pub u: f64,
    pub position: Point2,
    pub beta: f64,
    /// Segment direction in `[-π/2, π/2]`.
    pub angle: f64,
}

/// Evaluates a polyline at curve parameter `u`. Interior vertex `k` belongs
/// to segment `k`.
pub fn sample_curve(line: &Polyline, u: f64) -> Result<CurveSample, ModelError> {
    if !(0.0..=1.0).contains(&u) {
        return Err(ModelError::ParameterOutOfRange(u));
    }
    let segments = line.segment_count();
    let scaled = u * segments as f64;
    let k = (scaled.floor() as usize).min(segments - 1);
    let t = (scaled - k as f64).clamp(0.0, 1.0);
    let mut sample = line.sample_on_segment(k, t)?;
    sample.u = u;
    Ok(sample)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LineSet {
    pub lines: Vec<Polyline>,
    pub metadata: BTreeMap<String, String>,
}

impl LineSet {
    pub fn new(lines: Vec<Polyline>) -> Result<Self, ModelError> {
        let mut seen = HashSet::with_capacity(lines.len());
        for line in &lines {
            if !seen.insert(line.id) {
                return Err(invalid(Some(line.id), "id", "duplicate line id"));
            }
        }
        Ok(Self {
            lines,
            metadata: BTreeMap::new(),
        })
    }

    pub fn with_metadata(mut self, key: impl Into<String>, value: impl Into<String>) -> Self {
        self.metadata.insert(key.into(), value.into());
        self
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn get(&self, id: LineId) -> Option<&Polyline> {
        self.lines.iter().find(|l| l.id == id)
    }

    /// Line count per cluster tag; untagged lines are not counted.
    pub fn cluster_sizes(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for line in &self.lines {
            if let Some(c) = &line.cluster {
                *out.entry(c.clone()).or_insert(0) += 1;
            }
        }
        out
    }

    /// Median segment angle over every line tagged with `cluster`.
    pub fn cluster_median_angle(&self, cluster: &str) -> Option<f64> {
        let mut angles: Vec<f64> = self
            .lines
            .iter()
            .filter(|l| l.cluster.as_deref() == Some(cluster))
            .flat_map(|l| {
                (0..l.segment_count()).filter_map(move |k| {
                    let (a, b) = l.segment(k);
                    geometry::segment_angle(a, b).ok()
                })
            })
            .collect();
        if angles.is_empty() {
            return None;
        }
        angles.sort_by(f64::total_cmp);
        let n = angles.len();
        Some(if n % 2 == 1 {
            angles[n / 2]
        } else {
            0.5 * (angles[n / 2 - 1] + angles[n / 2])
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_4;

    fn line(points: &[[f64; 2]], importance: Importance) -> Polyline {
        Polyline::new(
            0,
            points.iter().map(|p| Point2::new(p[0], p[1])).collect(),
            importance,
            None,
        )
        .unwrap()
    }

    #[test]
    fn midpoint_of_single_segment() {
        let l = line(&[[0.0, 0.0], [1.0, 1.0]], Importance::PerVertex(vec![0.0, 1.0]));
        let s = sample_curve(&l, 0.5).unwrap();
        assert_eq!(s.position, Point2::new(0.5, 0.5));
        assert!((s.beta - 0.5).abs() < 1e-15);
        assert!((s.angle - FRAC_PI_4).abs() < 1e-15);
    }

    #[test]
    fn endpoint_identity() {
        let l = line(
            &[[0.0, 0.2], [0.5, 0.9], [1.0, 0.1]],
            Importance::PerVertex(vec![0.3, 0.6, 0.9]),
        );
        let s0 = sample_curve(&l, 0.0).unwrap();
        assert_eq!(s0.position, Point2::new(0.0, 0.2));
        assert_eq!(s0.beta, 0.3);
        let s1 = sample_curve(&l, 1.0).unwrap();
        assert_eq!(s1.position, Point2::new(1.0, 0.1));
        assert_eq!(s1.beta, 0.9);
    }

    #[test]
    fn interior_vertex_belongs_to_right_segment() {
        let l = line(&[[0.0, 0.0], [0.5, 0.5], [1.0, 0.5]], Importance::Scalar(0.5));
        let s = sample_curve(&l, 0.5).unwrap();
        assert_eq!(s.position, Point2::new(0.5, 0.5));
        assert_eq!(s.angle, 0.0);
    }

    #[test]
    fn out_of_range_parameter() {
        let l = line(&[[0.0, 0.0], [1.0, 1.0]], Importance::Scalar(0.5));
        assert!(matches!(sample_curve(&l, 1.5), Err(ModelError::ParameterOutOfRange(_))));
        assert!(matches!(sample_curve(&l, -0.1), Err(ModelError::ParameterOutOfRange(_))));
        assert!(sample_curve(&l, f64::NAN).is_err());
    }

    #[test]
    fn scalar_broadcast() {
        let l = line(&[[0.0, 0.0], [0.5, 0.1], [1.0, 0.0]], Importance::Scalar(0.7));
        for k in 0..3 {
            assert_eq!(l.beta_at_vertex(k), 0.7);
        }
    }

    #[test]
    fn validation_errors_name_the_line() {
        let err = Polyline::new(
            9,
            vec![Point2::new(0.0, 0.0)],
            Importance::Scalar(0.5),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("line 9"));

        let err = Polyline::new(
            4,
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)],
            Importance::Scalar(1.3),
            None,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 4") && msg.contains("importance"), "{msg}");

        let err = Polyline::new(
            2,
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)],
            Importance::PerVertex(vec![0.1, 0.2, 0.3]),
            None,
        )
        .unwrap_err();
        assert!(err.to_string().contains("importance"));

        let a = line(&[[0.0, 0.0], [1.0, 0.0]], Importance::Scalar(0.1));
        let err = LineSet::new(vec![a.clone(), a]).unwrap_err();
        assert!(err.to_string().contains("duplicate"));
    }

    #[test]
    fn degenerate_segment_reports_line_and_segment() {
        let l = line(&[[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]], Importance::Scalar(0.5));
        let err = sample_curve(&l, 0.1).unwrap_err();
        assert!(matches!(err, ModelError::Segment { segment: 0, .. }));
        assert!(sample_curve(&l, 0.75).is_ok());
    }
}
