use std::f64::consts::PI;

use num_complex::Complex64;

use crate::algebra::matrix::c64;
use crate::error::{Error, Result};

/// Number of basepoint candidates tried on a circle around the punctures.
const BASEPOINT_CANDIDATES: usize = 64;

/// Loop radii tried, as fractions of the smallest puncture distance.
const RADIUS_FACTORS: [f64; 4] = [0.5, 0.3, 0.2, 0.1];

/// Ray clearance, relative to the loop radius, that counts as clear.
const CLEAR_SCORE: f64 = 0.5;

/// Smallest acceptable ray clearance relative to the loop radius.
const MIN_SCORE: f64 = 0.05;

/// One piece of a path, parametrized over `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathPiece {
    Segment { from: Complex64, to: Complex64 },
    /// `center + radius e^{i (start + t sweep)}`.
    Arc {
        center: Complex64,
        radius: f64,
        start: f64,
        sweep: f64,
    },
}

impl PathPiece {
    pub fn point(&self, t: f64) -> Complex64 {
        match *self {
            PathPiece::Segment { from, to } => from + (to - from) * t,
            PathPiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => center + Complex64::from_polar(radius, start + t * sweep),
        }
    }

    pub fn velocity(&self, t: f64) -> Complex64 {
        match *self {
            PathPiece::Segment { from, to } => to - from,
            PathPiece::Arc {
                radius, start, sweep, ..
            } => c64(0.0, sweep) * Complex64::from_polar(radius, start + t * sweep),
        }
    }

    pub fn reversed(&self) -> Self {
        match *self {
            PathPiece::Segment { from, to } => PathPiece::Segment { from: to, to: from },
            PathPiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => PathPiece::Arc {
                center,
                radius,
                start: start + sweep,
                sweep: -sweep,
            },
        }
    }

    /// Smallest distance from `p` to the piece.
    pub fn distance_to(&self, p: Complex64) -> f64 {
        match *self {
            PathPiece::Segment { from, to } => segment_distance(from, to, p),
            PathPiece::Arc {
                center,
                radius,
                start,
                sweep,
            } => {
                if sweep.abs() >= 2.0 * PI - 1e-12 {
                    return ((p - center).norm() - radius).abs();
                }
                if sweep < 0.0 {
                    return self.reversed().distance_to(p);
                }
                // Closest point on the full circle, if it lies on the arc;
                // otherwise one of the endpoints.
                let ends = (self.point(0.0) - p).norm().min((self.point(1.0) - p).norm());
                let rel = ((p - center).arg() - start).rem_euclid(2.0 * PI);
                let on_arc = rel <= sweep;
                if on_arc {
                    ((p - center).norm() - radius).abs()
                } else {
                    ends
                }
            }
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            PathPiece::Segment { from, to } => (to - from).norm(),
            PathPiece::Arc { radius, sweep, .. } => radius * sweep.abs(),
        }
    }
}

fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// A closed path from a basepoint, with its winding number about each
/// puncture.
#[derive(Debug, Clone, PartialEq)]
pub struct LoopPath {
    pub pieces: Vec<PathPiece>,
    pub winding: Vec<i32>,
}

impl LoopPath {
    /// Builds the loop and computes winding numbers about `punctures`.
    pub fn new(pieces: Vec<PathPiece>, punctures: &[Complex64]) -> Result<Self> {
        let first = pieces.first().ok_or_else(|| Error::Invalid("empty path".into()))?;
        let start = first.point(0.0);
        let end = pieces.last().expect("non-empty").point(1.0);
        if (start - end).norm() > 1e-12 * start.norm().max(1.0) {
            return Err(Error::Invalid("path is not closed".into()));
        }
        for w in pieces.windows(2) {
            let gap = (w[0].point(1.0) - w[1].point(0.0)).norm();
            if gap > 1e-12 * start.norm().max(1.0) {
                return Err(Error::Invalid("path pieces do not join".into()));
            }
        }
        let winding = punctures.iter().map(|&a| winding_number(&pieces, a)).collect();
        Ok(Self { pieces, winding })
    }

    pub fn basepoint(&self) -> Complex64 {
        self.pieces[0].point(0.0)
    }

    /// Distance from the path to the nearest of `points`.
    pub fn clearance(&self, points: &[Complex64]) -> f64 {
        points
            .iter()
            .flat_map(|&p| self.pieces.iter().map(move |piece| piece.distance_to(p)))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn reversed(&self) -> Self {
        Self {
            pieces: self.pieces.iter().rev().map(PathPiece::reversed).collect(),
            winding: self.winding.iter().map(|w| -w).collect(),
        }
    }
}

fn winding_number(pieces: &[PathPiece], a: Complex64) -> i32 {
    let mut total = 0.0;
    for piece in pieces {
        let steps = 256;
        let mut prev = piece.point(0.0) - a;
        for s in 1..=steps {
            let cur = piece.point(s as f64 / steps as f64) - a;
            total += (cur / prev).arg();
            prev = cur;
        }
    }
    (total / (2.0 * PI)).round() as i32
}

/// Anticlockwise loops around each puncture from a common basepoint:
/// straight in, once round a circle, straight back.
#[derive(Debug, Clone)]
pub struct StandardLoops {
    pub basepoint: Complex64,
    pub radius: f64,
    /// `loops[j]` encircles puncture `j`.
    pub loops: Vec<LoopPath>,
    /// Puncture indices in anticlockwise order of the rays leaving the
    /// basepoint; composing the loops in this order encircles every
    /// puncture.
    pub angular_order: Vec<usize>,
}

fn standard_loop(s: Complex64, a: Complex64, radius: f64, punctures: &[Complex64]) -> Result<LoopPath> {
    let dir = (s - a) / (s - a).norm();
    let entry = a + dir * radius;
    let start = dir.arg();
    LoopPath::new(
        vec![
            PathPiece::Segment { from: s, to: entry },
            PathPiece::Arc {
                center: a,
                radius,
                start,
                sweep: 2.0 * PI,
            },
            PathPiece::Segment { from: entry, to: s },
        ],
        punctures,
    )
}

fn inversions(order: &[usize]) -> usize {
    let mut count = 0;
    for i in 0..order.len() {
        for k in (i + 1)..order.len() {
            if order[i] > order[k] {
                count += 1;
            }
        }
    }
    count
}

struct Candidate {
    score: f64,
    cost: usize,
    basepoint: Complex64,
    order: Vec<usize>,
    radius: f64,
}

/// Scores basepoints on a circle around the punctures for loops of the
/// given radius: clearance of each ray from the other punctures' circles,
/// relative to the radius, and the number of reorderings its angular order
/// needs.
fn best_basepoint(punctures: &[Complex64], radius: f64) -> Candidate {
    let n = punctures.len();
    let centroid = punctures.iter().sum::<Complex64>() / n as f64;
    let spread = punctures.iter().map(|a| (a - centroid).norm()).fold(0.0, f64::max);
    let big = 2.0 * spread + 2.0 * radius + 1.0;
    let mut best: Option<Candidate> = None;
    for m in 0..BASEPOINT_CANDIDATES {
        let s = centroid + Complex64::from_polar(big, 2.0 * PI * m as f64 / BASEPOINT_CANDIDATES as f64);
        let mut score = f64::INFINITY;
        for (j, &a) in punctures.iter().enumerate() {
            let entry = a + (s - a) / (s - a).norm() * radius;
            for (k, &b) in punctures.iter().enumerate() {
                if k != j {
                    score = score.min(segment_distance(s, entry, b) - radius);
                }
            }
        }
        let score = score / radius;
        let toward = centroid - s;
        let mut order: Vec<usize> = (0..n).collect();
        let angle = |j: usize| ((punctures[j] - s) / toward).arg();
        order.sort_by(|&x, &y| angle(x).total_cmp(&angle(y)));
        let reversed: Vec<usize> = order.iter().rev().copied().collect();
        let cost = inversions(&reversed);
        // Clear candidates compete on ordering, the rest on clearance.
        let better = match &best {
            None => true,
            Some(b) => match (score >= CLEAR_SCORE, b.score >= CLEAR_SCORE) {
                (true, false) => true,
                (false, true) => false,
                (true, true) => cost < b.cost,
                (false, false) => score > b.score,
            },
        };
        if better {
            best = Some(Candidate {
                score,
                cost,
                basepoint: s,
                order,
                radius,
            });
        }
    }
    best.expect("at least one candidate")
}

/// Chooses a basepoint and a loop radius whose rays stay
/// clear of the other punctures, preferring one whose angular order needs
/// the fewest reorderings, and builds the standard loops from it.
pub fn standard_loops(punctures: &[Complex64]) -> Result<StandardLoops> {
    let n = punctures.len();
    if n == 0 {
        return Err(Error::Invalid("no punctures".into()));
    }
    let mut min_dist = f64::INFINITY;
    for i in 0..n {
        for k in (i + 1)..n {
            min_dist = min_dist.min((punctures[i] - punctures[k]).norm());
        }
    }
    // Largest loop radius first; smaller circles leave room to thread rays
    // between punctures in convex position.
    let mut best: Option<Candidate> = None;
    for factor in RADIUS_FACTORS {
        let radius = if n == 1 { 1.0 } else { factor * min_dist };
        let found = best_basepoint(punctures, radius);
        let clear = found.score >= CLEAR_SCORE;
        if best.as_ref().is_none_or(|b| found.score > b.score) {
            best = Some(found);
        }
        if clear || n == 1 {
            break;
        }
    }
    let Candidate {
        score,
        basepoint: s,
        order: angular_order,
        radius,
        ..
    } = best.expect("at least one radius");
    if score <= MIN_SCORE {
        return Err(Error::Integration("no basepoint gives loops clear of the punctures".into()));
    }
    let loops = punctures
        .iter()
        .map(|&a| standard_loop(s, a, radius, punctures))
        .collect::<Result<Vec<_>>>()?;
    Ok(StandardLoops {
        basepoint: s,
        radius,
        loops,
        angular_order,
    })
}
