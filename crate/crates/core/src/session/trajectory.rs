//! Scripted cursor and lens input.
//!
//! ```text
//! {"version":1,"events":[
//!   {"t":0.0,"x":0.1,"y":0.5},
//!   {"t":1.2,"lens":{"enabled":true,"center":[0.5,0.5],"radius":0.1,"threshold":0.6}},
//!   {"t":1.3,"action":"lens_playback"}]}
//! ```

use serde::{Deserialize, Serialize};

use super::SessionError;
use crate::geometry::{GeometryError, Lens};
use crate::model::Point2;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub version: u32,
    pub events: Vec<TrajectoryEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryEvent {
    pub t: f64,
    #[serde(flatten)]
    pub action: TrajectoryAction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TrajectoryAction {
    Move { x: f64, y: f64 },
    Lens { lens: LensSpec },
    Playback { action: ActionName },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionName {
    LensPlayback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LensSpec {
    #[serde(default = "enabled_default")]
    pub enabled: bool,
    pub center: [f64; 2],
    pub radius: f64,
    pub threshold: f64,
}

fn enabled_default() -> bool {
    true
}

impl LensSpec {
    pub fn to_lens(&self) -> Result<Lens, GeometryError> {
        Lens::new(
            Point2::new(self.center[0], self.center[1]),
            self.radius,
            self.threshold,
            self.enabled,
        )
    }
}

impl From<Lens> for LensSpec {
    fn from(l: Lens) -> Self {
        Self {
            enabled: l.enabled,
            center: [l.center.x, l.center.y],
            radius: l.radius,
            threshold: l.threshold,
        }
    }
}

impl Default for Trajectory {
    fn default() -> Self {
        Self::new()
    }
}

impl Trajectory {
    pub fn new() -> Self {
        Self {
            version: FORMAT_VERSION,
            events: Vec::new(),
        }
    }

    /// Cursor samples at `rate` Hz moving at constant speed from `from` to `to`.
    pub fn linear_sweep(from: Point2, to: Point2, duration: f64, rate: f64) -> Self {
        let steps = (duration * rate).round().max(1.0) as usize;
        let mut traj = Self::new();
        for k in 0..=steps {
            let f = k as f64 / steps as f64;
            traj.push_move(f * duration, from.lerp(to, f));
        }
        traj
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, SessionError> {
        let traj: Trajectory =
            serde_json::from_slice(bytes).map_err(|e| SessionError::Trajectory(e.to_string()))?;
        traj.validate()?;
        Ok(traj)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trajectory always serializes")
    }

    pub fn push_move(&mut self, t: f64, p: Point2) -> &mut Self {
        self.events.push(TrajectoryEvent {
            t,
            action: TrajectoryAction::Move { x: p.x, y: p.y },
        });
        self
    }

    pub fn push_lens(&mut self, t: f64, lens: Lens) -> &mut Self {
        self.events.push(TrajectoryEvent {
            t,
            action: TrajectoryAction::Lens { lens: lens.into() },
        });
        self
    }

    pub fn push_playback(&mut self, t: f64) -> &mut Self {
        self.events.push(TrajectoryEvent {
            t,
            action: TrajectoryAction::Playback {
                action: ActionName::LensPlayback,
            },
        });
        self
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Time of the last event, or 0 when empty.
    pub fn end_time(&self) -> f64 {
        self.events.last().map_or(0.0, |e| e.t)
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        let bad = |msg: String| Err(SessionError::Trajectory(msg));
        if self.version != FORMAT_VERSION {
            return bad(format!("unsupported version {}", self.version));
        }
        let mut previous: Option<f64> = None;
        for (i, e) in self.events.iter().enumerate() {
            if !(e.t.is_finite() && e.t >= 0.0) {
                return bad(format!("event {i}: time {} must be finite and non-negative", e.t));
            }
            if previous.is_some_and(|p| e.t <= p) {
                return bad(format!("event {i}: time {} not after previous event", e.t));
            }
            previous = Some(e.t);
            match &e.action {
                TrajectoryAction::Move { x, y } if !(x.is_finite() && y.is_finite()) => {
                    return bad(format!("event {i}: non-finite coordinates"));
                }
                TrajectoryAction::Lens { lens } => {
                    if let Err(err) = lens.to_lens() {
                        return bad(format!("event {i}: {err}"));
                    }
                }
                _ => {}
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DOC: &str = r#"{"version":1,"events":[{"t":0.0,"x":0.1,"y":0.5}, {"t":1.2,"lens":{"enabled":true,"center":[0.5,0.5],"radius":0.1,"threshold":0.6}}, {"t":1.3,"action":"lens_playback"}]}"#;

    #[test]
    fn parses_documented_form() {
        let t = Trajectory::from_json(DOC.as_bytes()).unwrap();
        assert_eq!(t.events.len(), 3);
        assert_eq!(t.events[0].action, TrajectoryAction::Move { x: 0.1, y: 0.5 });
        match &t.events[1].action {
            TrajectoryAction::Lens { lens } => assert_eq!(lens.threshold, 0.6),
            other => panic!("{other:?}"),
        }
        assert!(matches!(t.events[2].action, TrajectoryAction::Playback { .. }));
        let again = Trajectory::from_json(t.to_json().as_bytes()).unwrap();
        assert_eq!(again, t);
    }

    #[test]
    fn rejects_bad_scripts() {
        let non_increasing = r#"{"version":1,"events":[{"t":1,"x":0,"y":0},{"t":1,"x":1,"y":0}]}"#;
        assert!(Trajectory::from_json(non_increasing.as_bytes()).is_err());
        let bad_lens = r#"{"version":1,"events":[{"t":1,"lens":{"center":[0,0],"radius":0,"threshold":0.5}}]}"#;
        assert!(Trajectory::from_json(bad_lens.as_bytes()).is_err());
        assert!(Trajectory::from_json(br#"{"version":1,"events":[{"t":1,"jump":true}]}"#).is_err());
        assert!(Trajectory::from_json(br#"{"version":3,"events":[]}"#).is_err());
    }

    #[test]
    fn sweep() {
        let t = Trajectory::linear_sweep(Point2::new(0.0, 0.5), Point2::new(1.0, 0.5), 5.0, 60.0);
        assert_eq!(t.events.len(), 301);
        assert_eq!(t.end_time(), 5.0);
        assert_eq!(t.events[300].action, TrajectoryAction::Move { x: 1.0, y: 0.5 });
        t.validate().unwrap();
    }
}
