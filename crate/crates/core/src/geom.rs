//! Points, balls and the minimal enclosing ball in one and two dimensions.
//!
//! Points always carry two coordinates; one-dimensional data keeps the
//! second coordinate at zero, so distances need no dimension bookkeeping.

use std::cmp::Ordering;
use std::ops::{Add, Mul, Sub};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest spatial dimension handled by grids, ray tracing and enclosing balls.
pub const MAX_DIM: usize = 2;

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if n == 0 || n > MAX_DIM {
        Err(Error::Dimension(n))
    } else {
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(pub [f64; 2]);

impl Point {
    pub const ORIGIN: Point = Point([0.0, 0.0]);

    pub fn new(x: f64, y: f64) -> Self {
        Point([x, y])
    }

    pub fn on_line(x: f64) -> Self {
        Point([x, 0.0])
    }

    /// Builds a point from `n` coordinates (`n` = 1 or 2).
    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        match coords {
            [x] => Ok(Point([*x, 0.0])),
            [x, y] => Ok(Point([*x, *y])),
            other => Err(Error::Dimension(other.len())),
        }
    }

    pub fn x(self) -> f64 {
        self.0[0]
    }

    pub fn y(self) -> f64 {
        self.0[1]
    }

    /// First `n` coordinates.
    pub fn coords(&self, n: usize) -> &[f64] {
        &self.0[..n.min(MAX_DIM)]
    }

    pub fn dist_sq(self, other: Point) -> f64 {
        let dx = self.0[0] - other.0[0];
        let dy = self.0[1] - other.0[1];
        dx * dx + dy * dy
    }

    pub fn dist(self, other: Point) -> f64 {
        let dx = self.0[0] - other.0[0];
        let dy = self.0[1] - other.0[1];
        dx.hypot(dy)
    }

    pub fn norm(self) -> f64 {
        self.0[0].hypot(self.0[1])
    }

    pub fn midpoint(self, other: Point) -> Point {
        Point([
            0.5 * (self.0[0] + other.0[0]),
            0.5 * (self.0[1] + other.0[1]),
        ])
    }

    pub fn is_finite(self) -> bool {
        self.0[0].is_finite() && self.0[1].is_finite()
    }

    /// Lexicographic order on coordinates, total over floats.
    pub fn lex_cmp(&self, other: &Point) -> Ordering {
        self.0[0]
            .total_cmp(&other.0[0])
            .then(self.0[1].total_cmp(&other.0[1]))
    }
}

impl Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1]])
    }
}

impl Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1]])
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    fn mul(self, t: f64) -> Point {
        Point([self.0[0] * t, self.0[1] * t])
    }
}

/// Closed Euclidean ball.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Self {
        Ball { center, radius }
    }

    pub fn contains(&self, p: Point) -> bool {
        self.center.dist(p) <= self.radius
    }

    /// Membership with a relative slack on the radius, for roundoff-sensitive checks.
    pub fn contains_with_slack(&self, p: Point, rel: f64) -> bool {
        self.center.dist(p) <= self.radius * (1.0 + rel)
    }

    /// Closed balls are disjoint iff their centers are farther apart than the radii sum.
    pub fn is_disjoint(&self, other: &Ball) -> bool {
        self.center.dist(other.center) > self.radius + other.radius
    }

    pub fn dilate(&self, factor: f64) -> Ball {
        Ball::new(self.center, self.radius * factor)
    }
}

const MEB_SLACK: f64 = 1e-12;

fn outside(ball: &Ball, p: Point) -> bool {
    ball.center.dist(p) > ball.radius * (1.0 + MEB_SLACK) + f64::MIN_POSITIVE
}

fn ball_from_two(a: Point, b: Point) -> Ball {
    let c = a.midpoint(b);
    Ball::new(c, c.dist(a).max(c.dist(b)))
}

fn ball_from_three(a: Point, b: Point, c: Point) -> Ball {
    let bx = b.x() - a.x();
    let by = b.y() - a.y();
    let cx = c.x() - a.x();
    let cy = c.y() - a.y();
    let d = 2.0 * (bx * cy - by * cx);
    let scale = (bx * bx + by * by).max(cx * cx + cy * cy);
    if d.abs() <= 1e-14 * scale {
        // Collinear: the farthest pair spans the ball.
        let candidates = [ball_from_two(a, b), ball_from_two(a, c), ball_from_two(b, c)];
        return candidates
            .into_iter()
            .max_by(|u, v| u.radius.total_cmp(&v.radius))
            .unwrap();
    }
    let b2 = bx * bx + by * by;
    let c2 = cx * cx + cy * cy;
    let ux = (cy * b2 - by * c2) / d;
    let uy = (bx * c2 - cx * b2) / d;
    let center = Point::new(a.x() + ux, a.y() + uy);
    let radius = center.dist(a).max(center.dist(b)).max(center.dist(c));
    Ball::new(center, radius)
}

/// Minimal enclosing ball of a point set in n ≤ 2, by the randomized
/// incremental construction (expected linear time).
///
/// The shuffle uses a fixed seed, so the result is deterministic.
pub fn min_enclosing_ball(points: &[Point]) -> Option<Ball> {
    match points.len() {
        0 => return None,
        1 => return Some(Ball::new(points[0], 0.0)),
        _ => {}
    }
    let mut pts = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x6d65_625f_7365_6564);
    pts.shuffle(&mut rng);

    let mut ball = Ball::new(pts[0], 0.0);
    for i in 1..pts.len() {
        if !outside(&ball, pts[i]) {
            continue;
        }
        ball = Ball::new(pts[i], 0.0);
        for j in 0..i {
            if !outside(&ball, pts[j]) {
                continue;
            }
            ball = ball_from_two(pts[i], pts[j]);
            for k in 0..j {
                if outside(&ball, pts[k]) {
                    ball = ball_from_three(pts[i], pts[j], pts[k]);
                }
            }
        }
    }
    Some(ball)
}
