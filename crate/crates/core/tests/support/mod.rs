//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use lineharp_core::geometry::CursorMove;
use lineharp_core::mapping::Note;
use lineharp_core::mixer::{ActiveNoteBuffer, MixerConfig};
use lineharp_core::{Importance, LineId, LineSet, Point2, Polyline};
use num::{BigRational, Signed, Zero};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn q(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite coordinate")
}

struct QPoint {
    x: BigRational,
    y: BigRational,
}

impl QPoint {
    fn of(p: Point2) -> Self {
        Self { x: q(p.x), y: q(p.y) }
    }
}

fn orient(a: &QPoint, b: &QPoint, c: &QPoint) -> i32 {
    let det = (&b.x - &a.x) * (&c.y - &a.y) - (&b.y - &a.y) * (&c.x - &a.x);
    if det.is_positive() {
        1
    } else if det.is_negative() {
        -1
    } else {
        0
    }
}

/// Parameter of `c` along `a→b`, assuming collinearity.
fn along(a: &QPoint, b: &QPoint, c: &QPoint) -> BigRational {
    let dx = &b.x - &a.x;
    let dy = &b.y - &a.y;
    if dx.abs() >= dy.abs() {
        (&c.x - &a.x) / dx
    } else {
        (&c.y - &a.y) / dy
    }
}

fn to_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().unwrap()
}

/// Exact contact between cursor `p→q` and segment `a→b`.
/// Returns `(s, only_at_b)` with `s` the cursor parameter of the contact.
fn exact_contact(p: Point2, qq: Point2, a: Point2, b: Point2) -> Option<(f64, bool)> {
    let (p, qq, a, b) = (QPoint::of(p), QPoint::of(qq), QPoint::of(a), QPoint::of(b));
    let o1 = orient(&p, &qq, &a);
    let o2 = orient(&p, &qq, &b);
    let o3 = orient(&a, &b, &p);
    let o4 = orient(&a, &b, &qq);
    if o1 == 0 && o2 == 0 {
        let tp = along(&a, &b, &p);
        let tq = along(&a, &b, &qq);
        let (lo, hi) = if tp <= tq { (tp, tq) } else { (tq, tp) };
        let zero = BigRational::zero();
        let one = BigRational::from_integer(1.into());
        let from = if lo > zero { lo } else { zero };
        let to = if hi < one { hi } else { one.clone() };
        if from > to {
            return None;
        }
        let only_b = from == one && to == one;
        let mid_t = (&from + &to) / BigRational::from_integer(2.into());
        let mid = QPoint {
            x: &a.x + (&b.x - &a.x) * &mid_t,
            y: &a.y + (&b.y - &a.y) * &mid_t,
        };
        let s = along(&p, &qq, &mid);
        return Some((to_f64(&s), only_b));
    }
    if o1 * o2 > 0 || o3 * o4 > 0 {
        return None;
    }
    let r = (&qq.x - &p.x, &qq.y - &p.y);
    let d = (&b.x - &a.x, &b.y - &a.y);
    let w = (&a.x - &p.x, &a.y - &p.y);
    let denom = &r.0 * &d.1 - &r.1 * &d.0;
    let s = (&w.0 * &d.1 - &w.1 * &d.0) / denom;
    Some((to_f64(&s), o2 == 0))
}

/// Brute-force crossing list `(line, segment, s)` in path order.
pub fn oracle_crossings(mv: &CursorMove, set: &LineSet) -> Vec<(LineId, usize, f64)> {
    let mut out = Vec::new();
    if mv.from == mv.to {
        return out;
    }
    for line in &set.lines {
        let pts = line.points();
        for k in 0..pts.len() - 1 {
            let (a, b) = (pts[k], pts[k + 1]);
            if a == b {
                continue;
            }
            let Some((s, only_b)) = exact_contact(mv.from, mv.to, a, b) else {
                continue;
            };
            let later = (k + 1..pts.len() - 1).any(|j| pts[j] != pts[j + 1]);
            if only_b && later {
                continue;
            }
            out.push((line.id, k, s));
        }
    }
    out.sort_by(|x, y| x.2.total_cmp(&y.2).then(x.0.cmp(&y.0)).then(x.1.cmp(&y.1)));
    out
}

fn coordinate(rng: &mut ChaCha8Rng, lattice: bool) -> f64 {
    if lattice {
        rng.gen_range(0..=4) as f64 / 4.0
    } else {
        rng.gen_range(-0.1..1.1)
    }
}

fn point(rng: &mut ChaCha8Rng, lattice: bool) -> Point2 {
    Point2::new(coordinate(rng, lattice), coordinate(rng, lattice))
}

/// Small random scene; half the cases live on a coarse lattice so touching,
/// vertex hits and collinear overlaps are common.
pub fn random_scene(rng: &mut ChaCha8Rng) -> (LineSet, CursorMove) {
    let lattice = rng.gen_bool(0.5);
    let lines = (0..rng.gen_range(1..=5))
        .map(|id| {
            let m = rng.gen_range(2..=5);
            let mut pts: Vec<Point2> = Vec::with_capacity(m);
            for _ in 0..m {
                if !pts.is_empty() && rng.gen_bool(0.1) {
                    pts.push(*pts.last().unwrap());
                } else {
                    pts.push(point(rng, lattice));
                }
            }
            Polyline::new(id, pts, Importance::Scalar(rng.gen_range(0.0..=1.0)), None).unwrap()
        })
        .collect();
    let from = point(rng, lattice);
    let mut to = point(rng, lattice);
    while to == from {
        to = point(rng, lattice);
    }
    (LineSet::new(lines).unwrap(), CursorMove::new(from, to, 0.0, 0.1))
}

/// Runs one random trigger/render/toggle sequence and checks that the
/// mixer's cumulative amplitude matches a recomputation over live voices.
pub fn mixer_bookkeeping_sequence(rng: &mut ChaCha8Rng) -> Result<(), String> {
    let mut mixer = ActiveNoteBuffer::new(MixerConfig {
        max_voices: 24,
        queue_capacity: 32,
        ..MixerConfig::default()
    });
    let handle = mixer.handle();
    let mut block = vec![0.0f32; 512];
    let mut next_id = 0;
    for op in 0..rng.gen_range(4..16) {
        match rng.gen_range(0..10) {
            0..=4 => {
                let chord: Vec<Note> = (0..rng.gen_range(1..6))
                    .map(|_| {
                        next_id += 1;
                        Note {
                            frequency: rng.gen_range(110.0..880.0),
                            amplitude: rng.gen_range(0.0..=1.0),
                            decay: rng.gen_range(0.06..0.3),
                            line_id: next_id,
                            onset: op as f64,
                        }
                    })
                    .collect();
                handle.trigger(&chord);
            }
            5..=8 => {
                let n = 64 << rng.gen_range(0..4);
                mixer.render_block(&mut block[..n]);
                if block[..n].iter().any(|s| !(-1.0..=1.0).contains(s)) {
                    return Err("sample outside [-1, 1]".into());
                }
            }
            _ => {
                handle.set_scaling_enabled(rng.gen_bool(0.5));
            }
        }
        let mut amps: Vec<f64> = mixer.live_voices().iter().map(|v| v.note().amplitude).collect();
        amps.sort_by(f64::total_cmp);
        let mut expected = 0.0;
        let mut carry = 0.0;
        for a in amps {
            let y = a - carry;
            let t = expected + y;
            carry = (t - expected) - y;
            expected = t;
        }
        let got = mixer.cumulative_amplitude();
        if (got - expected).abs() > 1e-9 {
            return Err(format!("cumulative {got} != recomputed {expected} after op {op}"));
        }
        if mixer.live_voices().iter().any(|v| v.is_finished()) {
            return Err("finished voice still live after render".into());
        }
        if mixer.live_count() > 24 {
            return Err("voice pool overflow".into());
        }
    }
    Ok(())
}
