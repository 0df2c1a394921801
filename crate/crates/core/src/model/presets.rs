//! Synthetic benchmark datasets.
//!
//! * `teaser` – four clusters of 30 lines that a left-to-right sweep along
//!   `y = 0.5` meets in a fixed order (rising, falling, flat, oscillating),
//!   plus 150 low-importance background lines.
//! * `overlap` – two clusters crossing the same region with different
//!   directions; the upper one is more important.
//! * `grid` – five evenly spaced parallel lines at 45° with equal importance.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::json::quantize;
use super::{Importance, LineSet, ModelError, Point2, Polyline};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Teaser,
    Overlap,
    Grid,
}

impl Preset {
    pub const ALL: [Preset; 3] = [Preset::Teaser, Preset::Overlap, Preset::Grid];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Teaser => "teaser",
            Preset::Overlap => "overlap",
            Preset::Grid => "grid",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = ModelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| ModelError::UnknownPreset(s.to_string()))
    }
}

/// Height of the horizontal sweep the teaser clusters are laid out for.
pub const TEASER_SWEEP_Y: f64 = 0.5;
pub const TEASER_CLUSTER_SIZE: usize = 30;
pub const TEASER_BACKGROUND_LINES: usize = 150;

/// `(tag, crossing angle in radians, x-window of the crossing)`, left to right.
pub const TEASER_CLUSTERS: [(&str, f64, [f64; 2]); 4] = [
    ("rising", 0.6, [0.08, 0.18]),
    ("falling", -0.6, [0.32, 0.42]),
    ("flat", 0.0, [0.56, 0.66]),
    ("oscillating", 1.2, [0.80, 0.90]),
];

pub const OVERLAP_CLUSTER_SIZE: usize = 12;
pub const OVERLAP_CENTER: Point2 = Point2::new(0.5, 0.5);
/// `(tag, direction, importance range)`; `upper` is drawn and played on top.
pub const OVERLAP_CLUSTERS: [(&str, f64, [f64; 2]); 2] = [
    ("lower", -0.45, [0.4, 0.6]),
    ("upper", 0.45, [0.8, 1.0]),
];

pub const GRID_LINES: usize = 5;
pub const GRID_IMPORTANCE: f64 = 0.3;
/// Grid lines cross `y = 0.5` at `GRID_FIRST_X + k · GRID_PITCH`.
pub const GRID_FIRST_X: f64 = 0.3;
pub const GRID_PITCH: f64 = 0.1;
const GRID_HALF_SPAN: f64 = 0.3;

const ANGLE_JITTER: f64 = 0.03;
/// Background lines stay within this distance of their own level.
const BACKGROUND_WANDER: f64 = 0.08;

pub fn generate_dataset(preset: Preset, seed: u64) -> LineSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ salt(preset));
    let lines = match preset {
        Preset::Teaser => teaser(&mut rng),
        Preset::Overlap => overlap(&mut rng),
        Preset::Grid => grid(),
    };
    LineSet::new(lines)
        .expect("generated ids are unique")
        .with_metadata("preset", preset.name())
        .with_metadata("seed", seed.to_string())
}

fn salt(preset: Preset) -> u64 {
    match preset {
        Preset::Teaser => 0x7465_6173_6572,
        Preset::Overlap => 0x6f76_6572_6c61,
        Preset::Grid => 0x6772_6964,
    }
}

fn polyline(id: usize, points: Vec<Point2>, importance: Importance, tag: &str) -> Polyline {
    let points = points
        .into_iter()
        .map(|p| Point2::new(quantize(p.x), quantize(p.y)))
        .collect();
    let importance = match importance {
        Importance::Scalar(v) => Importance::Scalar(quantize(v)),
        Importance::PerVertex(v) => Importance::PerVertex(v.into_iter().map(quantize).collect()),
    };
    Polyline::new(id as i64, points, importance, Some(tag.to_string()))
        .expect("generated lines are valid")
}

fn direction(angle: f64) -> Point2 {
    Point2::new(angle.cos(), angle.sin())
}

/// Straight line through `through`, sampled at the given offsets along it.
fn straight(through: Point2, angle: f64, offsets: &[f64]) -> Vec<Point2> {
    let d = direction(angle);
    offsets.iter().map(|&s| through + d * s).collect()
}

fn teaser(rng: &mut ChaCha8Rng) -> Vec<Polyline> {
    let mut lines = Vec::with_capacity(4 * TEASER_CLUSTER_SIZE + TEASER_BACKGROUND_LINES);
    for (tag, angle, window) in TEASER_CLUSTERS {
        for _ in 0..TEASER_CLUSTER_SIZE {
            let x = rng.gen_range(window[0]..window[1]);
            let crossing = Point2::new(x, TEASER_SWEEP_Y);
            let beta = rng.gen_range(0.7..=1.0);
            let points = if tag == "oscillating" {
                zigzag(rng, crossing, angle)
            } else {
                let theta = angle + rng.gen_range(-ANGLE_JITTER..ANGLE_JITTER);
                let shift = rng.gen_range(-0.04..0.04);
                straight(
                    crossing,
                    theta,
                    &[-0.15 + shift, -0.05 + shift, 0.05 + shift, 0.15 + shift],
                )
            };
            lines.push(polyline(lines.len(), points, Importance::Scalar(beta), tag));
        }
    }
    for _ in 0..TEASER_BACKGROUND_LINES {
        let m = 5;
        let level = rng.gen_range(0.05..0.95);
        let points = (0..m)
            .map(|k| {
                let x = k as f64 / (m - 1) as f64;
                let y = level + rng.gen_range(-BACKGROUND_WANDER..BACKGROUND_WANDER);
                Point2::new(x, y.clamp(0.02, 0.98))
            })
            .collect();
        let betas = (0..m).map(|_| rng.gen_range(0.05..=0.3)).collect();
        lines.push(polyline(
            lines.len(),
            points,
            Importance::PerVertex(betas),
            "background",
        ));
    }
    lines
}

/// Five segments alternating steep rises and shallow dips with an upward
/// trend. The sweep height falls in the middle of the third (rising) segment
/// and the curve meets it nowhere else.
fn zigzag(rng: &mut ChaCha8Rng, crossing: Point2, angle: f64) -> Vec<Point2> {
    const RISE: f64 = 0.06;
    const DIP: f64 = 0.02;
    let up = angle + rng.gen_range(-ANGLE_JITTER..ANGLE_JITTER);
    let down = -0.35 + rng.gen_range(-ANGLE_JITTER..ANGLE_JITTER);
    let up_dx = RISE / up.tan();
    let down_dx = DIP / (-down).tan();
    let steps = [
        (up_dx, RISE),
        (down_dx, -DIP),
        (up_dx, RISE),
        (down_dx, -DIP),
        (up_dx, RISE),
    ];
    // Vertex 2 starts the middle rise, half a rise below the crossing.
    let mut start = Point2::new(crossing.x - 0.5 * up_dx, crossing.y - 0.5 * RISE);
    for &(dx, dy) in steps[..2].iter().rev() {
        start = start - Point2::new(dx, dy);
    }
    let mut points = vec![start];
    for (dx, dy) in steps {
        let last = *points.last().unwrap();
        points.push(last + Point2::new(dx, dy));
    }
    points
}

fn overlap(rng: &mut ChaCha8Rng) -> Vec<Polyline> {
    let mut lines = Vec::with_capacity(2 * OVERLAP_CLUSTER_SIZE);
    for (tag, angle, [lo, hi]) in OVERLAP_CLUSTERS {
        for _ in 0..OVERLAP_CLUSTER_SIZE {
            let theta = angle + rng.gen_range(-0.02..0.02);
            let normal = direction(theta + 0.5 * PI);
            let through = OVERLAP_CENTER + normal * rng.gen_range(-0.02..0.02);
            let mid = rng.gen_range(-0.1..0.1);
            let points = straight(through, theta, &[-0.3, mid, 0.3]);
            let beta = rng.gen_range(lo..=hi);
            lines.push(polyline(lines.len(), points, Importance::Scalar(beta), tag));
        }
    }
    lines
}

fn grid() -> Vec<Polyline> {
    (0..GRID_LINES)
        .map(|k| {
            let x = GRID_FIRST_X + GRID_PITCH * k as f64;
            polyline(
                k,
                vec![
                    Point2::new(x - GRID_HALF_SPAN, 0.5 - GRID_HALF_SPAN),
                    Point2::new(x + GRID_HALF_SPAN, 0.5 + GRID_HALF_SPAN),
                ],
                Importance::Scalar(GRID_IMPORTANCE),
                "grid",
            )
        })
        .collect()
}
