//! Cursor/segment crossings, segment direction and lens math.
//!
//! Intersection decisions use exact orientation predicates, so an endpoint
//! that touches the cursor path always counts and no crossing is lost to
//! rounding. Only the reported positions are computed in floating point.

use std::cmp::Ordering;
use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CurveSample, LineId, LineSet, Point2, Polyline};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("zero-length segment has no direction")]
    DegenerateSegment,
    #[error("lens radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("lens threshold must lie in [0, 1], got {0}")]
    InvalidThreshold(f64),
    #[error("lens center must be finite")]
    InvalidCenter,
}

/// Direction of segment `a→b` read left to right, in `[-π/2, π/2]`.
///
/// Vertical segments give `+π/2` when the stored order goes up and `-π/2`
/// otherwise.
pub fn segment_angle(a: Point2, b: Point2) -> Result<f64, GeometryError> {
    if a == b {
        return Err(GeometryError::DegenerateSegment);
    }
    if a.x == b.x {
        return Ok(if b.y > a.y { FRAC_PI_2 } else { -FRAC_PI_2 });
    }
    let (left, right) = if b.x < a.x { (b, a) } else { (a, b) };
    Ok(((right.y - left.y) / (right.x - left.x)).atan())
}

/// Sign of the orientation of `c` relative to the directed line `a→b`:
/// `1` left turn, `-1` right turn, `0` collinear. Exact for all finite input.
pub fn orientation(a: Point2, b: Point2, c: Point2) -> i8 {
    let det = robust::orient2d(coord(a), coord(b), coord(c));
    if det > 0.0 {
        1
    } else if det < 0.0 {
        -1
    } else {
        0
    }
}

fn coord(p: Point2) -> robust::Coord<f64> {
    robust::Coord { x: p.x, y: p.y }
}

fn lex_cmp(a: Point2, b: Point2) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CursorMove {
    pub from: Point2,
    pub to: Point2,
    pub t_start: f64,
    pub t_end: f64,
}

impl CursorMove {
    pub fn new(from: Point2, to: Point2, t_start: f64, t_end: f64) -> Self {
        Self {
            from,
            to,
            t_start,
            t_end,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Crossing {
    pub line_id: LineId,
    pub segment_index: usize,
    /// Position along the cursor path, `0` at `from`.
    pub s: f64,
    pub u: f64,
    pub sample: CurveSample,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lens {
    pub center: Point2,
    pub radius: f64,
    pub threshold: f64,
    pub enabled: bool,
}

impl Lens {
    pub fn new(center: Point2, radius: f64, threshold: f64, enabled: bool) -> Result<Self, GeometryError> {
        let lens = Self {
            center,
            radius,
            threshold,
            enabled,
        };
        lens.validate()?;
        Ok(lens)
    }

    pub fn validate(&self) -> Result<(), GeometryError> {
        if !self.center.is_finite() {
            return Err(GeometryError::InvalidCenter);
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(GeometryError::InvalidRadius(self.radius));
        }
        if !(0.0..=1.0).contains(&self.threshold) {
            return Err(GeometryError::InvalidThreshold(self.threshold));
        }
        Ok(())
    }

    pub fn contains(&self, p: Point2) -> bool {
        (p - self.center).norm_sq() <= self.radius * self.radius
    }

    /// Whether a sample is muted: inside an enabled lens and above threshold.
    pub fn mutes(&self, sample: &CurveSample) -> bool {
        self.enabled && sample.beta > self.threshold && self.contains(sample.position)
    }
}

impl Default for Lens {
    fn default() -> Self {
        Self {
            center: Point2::new(0.5, 0.5),
            radius: 0.1,
            threshold: 1.0,
            enabled: false,
        }
    }
}

/// Where segment `a→b` meets the cursor path, as `(s, t)` parameters along
/// the path and the segment.
///
/// `only_at_end` is set when the only contact is the segment's end vertex.
struct Contact {
    s: f64,
    t: f64,
    only_at_end: bool,
}

fn contact(p: Point2, q: Point2, a: Point2, b: Point2) -> Option<Contact> {
    let o1 = orientation(p, q, a);
    let o2 = orientation(p, q, b);
    let o3 = orientation(a, b, p);
    let o4 = orientation(a, b, q);

    if o1 == 0 && o2 == 0 {
        return collinear_contact(p, q, a, b);
    }
    if o1 * o2 > 0 || o3 * o4 > 0 {
        return None;
    }

    let d = q - p;
    let e = b - a;
    let denom = d.cross(e);
    let ap = a - p;
    let t = if o1 == 0 {
        0.0
    } else if o2 == 0 {
        1.0
    } else {
        (ap.cross(d) / denom).clamp(0.0, 1.0)
    };
    let s = if o3 == 0 {
        0.0
    } else if o4 == 0 {
        1.0
    } else if o1 == 0 {
        projection(p, q, a)
    } else if o2 == 0 {
        projection(p, q, b)
    } else {
        (ap.cross(e) / denom).clamp(0.0, 1.0)
    };
    Some(Contact {
        s,
        t,
        only_at_end: o2 == 0,
    })
}

fn projection(p: Point2, q: Point2, x: Point2) -> f64 {
    let d = q - p;
    ((x - p).dot(d) / d.norm_sq()).clamp(0.0, 1.0)
}

/// Collinear segments touch at the midpoint of their overlap, if any.
fn collinear_contact(p: Point2, q: Point2, a: Point2, b: Point2) -> Option<Contact> {
    let (p_lo, p_hi) = if lex_cmp(p, q) == Ordering::Greater { (q, p) } else { (p, q) };
    let (a_lo, a_hi) = if lex_cmp(a, b) == Ordering::Greater { (b, a) } else { (a, b) };
    let lo = if lex_cmp(p_lo, a_lo) == Ordering::Less { a_lo } else { p_lo };
    let hi = if lex_cmp(p_hi, a_hi) == Ordering::Greater { a_hi } else { p_hi };
    if lex_cmp(lo, hi) == Ordering::Greater {
        return None;
    }
    let mid = if lo == hi { lo } else { lo.lerp(hi, 0.5) };
    let t = if mid == a {
        0.0
    } else if mid == b {
        1.0
    } else {
        projection(a, b, mid)
    };
    Some(Contact {
        s: if mid == p { 0.0 } else if mid == q { 1.0 } else { projection(p, q, mid) },
        t,
        only_at_end: lo == hi && mid == b,
    })
}

/// The next segment after `k` that has a direction, if any.
fn has_next_segment(line: &Polyline, k: usize) -> bool {
    ((k + 1)..line.segment_count()).any(|j| {
        let (a, b) = line.segment(j);
        a != b
    })
}

/// Every line segment met by the cursor path, sorted by position along the
/// path (ties by line id, then segment).
///
/// A contact that is exactly an interior vertex is reported once, on the
/// segment that starts there. With an enabled lens, samples inside the disk
/// whose importance exceeds the threshold are dropped.
pub fn find_crossings(mv: &CursorMove, lines: &LineSet, lens: Option<&Lens>) -> Vec<Crossing> {
    let (p, q) = (mv.from, mv.to);
    if p == q || !p.is_finite() || !q.is_finite() {
        return Vec::new();
    }
    let mut out = Vec::new();
    for line in &lines.lines {
        for k in 0..line.segment_count() {
            let (a, b) = line.segment(k);
            if a == b {
                continue;
            }
            let Some(c) = contact(p, q, a, b) else {
                continue;
            };
            if c.only_at_end && has_next_segment(line, k) {
                continue;
            }
            let sample = line
                .sample_on_segment(k, c.t)
                .expect("non-degenerate segment has an angle");
            if lens.is_some_and(|l| l.mutes(&sample)) {
                continue;
            }
            out.push(Crossing {
                line_id: line.id,
                segment_index: k,
                s: c.s,
                u: sample.u,
                sample,
            });
        }
    }
    out.sort_by(|x, y| {
        x.s.total_cmp(&y.s)
            .then(x.line_id.cmp(&y.line_id))
            .then(x.segment_index.cmp(&y.segment_index))
    });
    out
}

/// One sample per line that reaches into the lens disk, taken at the curve
/// point nearest the lens center. Sorted by importance, highest first.
pub fn lens_contents(lens: &Lens, lines: &LineSet) -> Vec<CurveSample> {
    if !lens.enabled {
        return Vec::new();
    }
    let r2 = lens.radius * lens.radius;
    let mut out: Vec<CurveSample> = lines
        .lines
        .iter()
        .filter_map(|line| {
            let mut best: Option<(f64, usize, f64)> = None;
            for k in 0..line.segment_count() {
                let (a, b) = line.segment(k);
                if a == b {
                    continue;
                }
                let t = projection(a, b, lens.center);
                let d2 = (a.lerp(b, t) - lens.center).norm_sq();
                if best.is_none_or(|(bd, _, _)| d2 < bd) {
                    best = Some((d2, k, t));
                }
            }
            let (d2, k, t) = best?;
            if d2 > r2 {
                return None;
            }
            line.sample_on_segment(k, t).ok()
        })
        .collect();
    out.sort_by(|x, y| y.beta.total_cmp(&x.beta).then(x.line_id.cmp(&y.line_id)));
    out
}

/// Relative offset used to move a point sitting exactly on the lens center.
pub const CENTER_NUDGE: f64 = 1e-3;

/// Pushes points of important lines out of the lens.
///
/// Inside the disk a point at center distance `r` moves radially to
/// `radius · (r / radius)^(1/3)`: the rim stays fixed and the interior
/// empties towards it. Points outside, at or below the threshold, or with
/// the lens disabled are returned unchanged.
pub fn lens_displacement(lens: &Lens, p: Point2, beta: f64) -> Point2 {
    if !lens.enabled || beta <= lens.threshold {
        return p;
    }
    let offset = p - lens.center;
    let r = offset.norm_sq().sqrt();
    if r >= lens.radius {
        return p;
    }
    if r == 0.0 {
        return lens.center + Point2::new(lens.radius * CENTER_NUDGE, 0.0);
    }
    let target = lens.radius * (r / lens.radius).cbrt();
    lens.center + offset * (target / r)
}
