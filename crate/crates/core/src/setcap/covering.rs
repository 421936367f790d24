//! Greedy disjoint subfamilies of balls and the Monte-Carlo check that their
//! dilates cover the original union.

use std::cmp::Ordering;
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::csv;
use crate::error::{domain, Result};
use crate::geom::{check_dim, Ball, Point};

pub const DEFAULT_DILATION: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallFamily {
    pub dim: usize,
    pub balls: Vec<Ball>,
    pub dilation: f64,
}

impl BallFamily {
    pub fn new(dim: usize, balls: Vec<Ball>) -> Result<Self> {
        check_dim(dim)?;
        for b in &balls {
            if !(b.radius > 0.0 && b.radius.is_finite()) || !b.center.is_finite() {
                return Err(domain(format!("ball radii must be positive and finite, got {b:?}")));
            }
            if dim == 1 && b.center.y() != 0.0 {
                return Err(domain("one-dimensional balls must lie on the x axis"));
            }
        }
        Ok(BallFamily {
            dim,
            balls,
            dilation: DEFAULT_DILATION,
        })
    }

    /// `count` balls with centers uniform in `[-extent, extent]ⁿ` and radii
    /// log-uniform in `[r_min, r_max]`.
    pub fn random(dim: usize, count: usize, extent: f64, r_min: f64, r_max: f64, seed: u64) -> Result<Self> {
        if !(r_min > 0.0 && r_max >= r_min && extent > 0.0) {
            return Err(domain("random family needs 0 < r_min ≤ r_max and extent > 0"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = (r_min.ln(), r_max.ln());
        let balls = (0..count)
            .map(|_| {
                let x = rng.random_range(-extent..=extent);
                let y = if dim == 2 { rng.random_range(-extent..=extent) } else { 0.0 };
                let r = if hi > lo { rng.random_range(lo..=hi).exp() } else { r_min };
                Ball::new(Point::new(x, y), r)
            })
            .collect();
        BallFamily::new(dim, balls)
    }

    pub fn len(&self) -> usize {
        self.balls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.balls.is_empty()
    }

    pub fn contains(&self, p: Point) -> bool {
        self.balls.iter().any(|b| b.contains(p))
    }

    /// One row per ball: `index,x[,y],radius`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let coords = &["x", "y"][..self.dim];
        writeln!(w, "index,{},radius", coords.join(","))?;
        for (k, b) in self.balls.iter().enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(b.center.coords(self.dim).iter().map(|v| csv::num(*v)));
            row.push(csv::num(b.radius));
            csv::write_row(&mut w, &row)?;
        }
        Ok(())
    }
}

fn selection_order(a: &Ball, b: &Ball) -> Ordering {
    b.radius.total_cmp(&a.radius).then_with(|| a.center.lex_cmp(&b.center))
}

/// Largest-first greedy: a ball is kept when it is disjoint from everything
/// kept so far. Every input ball meets a kept ball at least as large, so it
/// lies in that ball's 3-dilate.
pub fn greedy_disjoint_subfamily(family: &BallFamily) -> BallFamily {
    let mut order: Vec<Ball> = family.balls.clone();
    order.sort_by(selection_order);
    let mut chosen: Vec<Ball> = Vec::new();
    for b in order {
        if chosen.iter().all(|c| c.is_disjoint(&b)) {
            chosen.push(b);
        }
    }
    BallFamily {
        dim: family.dim,
        balls: chosen,
        dilation: family.dilation,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub input_balls: usize,
    pub selected_balls: usize,
    pub dilation: f64,
    pub pairwise_disjoint: bool,
    pub probes: usize,
    pub misses: usize,
    pub first_miss: Option<Point>,
}

impl CoverageReport {
    pub fn passed(&self) -> bool {
        self.pairwise_disjoint && self.misses == 0
    }
}

/// Uniform point in a ball (n = 1 or 2).
fn sample_in(rng: &mut ChaCha8Rng, b: &Ball, dim: usize) -> Point {
    if dim == 1 {
        return Point::on_line(b.center.x() + b.radius * rng.random_range(-1.0..=1.0));
    }
    let rho = b.radius * rng.random::<f64>().sqrt();
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    b.center + Point::new(a.cos(), a.sin()) * rho
}

/// Checks pairwise disjointness of `selection` and samples `probes` points of
/// the union of `family`, each of which must lie in some dilated selected ball.
pub fn coverage_check(family: &BallFamily, selection: &BallFamily, probes: usize, seed: u64) -> CoverageReport {
    let sel = &selection.balls;
    let pairwise_disjoint = sel
        .iter()
        .enumerate()
        .all(|(i, a)| sel[i + 1..].iter().all(|b| a.is_disjoint(b)));
    let dilated: Vec<Ball> = sel.iter().map(|b| b.dilate(selection.dilation)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut misses = 0;
    let mut first_miss = None;
    let checked = if family.is_empty() { 0 } else { probes };
    for _ in 0..checked {
        let b = family.balls[rng.random_range(0..family.balls.len())];
        let p = sample_in(&mut rng, &b, family.dim);
        if !dilated.iter().any(|d| d.contains_with_slack(p, 1e-12)) {
            misses += 1;
            first_miss.get_or_insert(p);
        }
    }
    CoverageReport {
        input_balls: family.len(),
        selected_balls: sel.len(),
        dilation: selection.dilation,
        pairwise_disjoint,
        probes: checked,
        misses,
        first_miss,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn disjoint_input_is_kept_whole() {
        let balls: Vec<Ball> = (0..10).map(|k| Ball::new(Point::on_line(3.0 * k as f64), 1.0)).collect();
        let f = BallFamily::new(1, balls).unwrap();
        assert_eq!(greedy_disjoint_subfamily(&f).len(), 10);
    }

    #[test]
    fn nested_balls_keep_the_largest() {
        let balls: Vec<Ball> = (1..8).map(|k| Ball::new(Point::new(0.01 * k as f64, 0.0), k as f64)).collect();
        let f = BallFamily::new(2, balls).unwrap();
        let s = greedy_disjoint_subfamily(&f);
        assert_eq!(s.balls, vec![Ball::new(Point::new(0.07, 0.0), 7.0)]);
    }

    #[test]
    fn ties_break_by_center() {
        let f = BallFamily::new(
            2,
            vec![
                Ball::new(Point::new(1.0, 0.0), 1.0),
                Ball::new(Point::new(0.0, 1.0), 1.0),
            ],
        )
        .unwrap();
        let s = greedy_disjoint_subfamily(&f);
        assert_eq!(s.balls, vec![Ball::new(Point::new(0.0, 1.0), 1.0)]);
    }

    #[test]
    fn random_families_are_covered() {
        for seed in 0..5 {
            let f = BallFamily::random(2, 100, 10.0, 0.1, 3.0, seed).unwrap();
            let s = greedy_disjoint_subfamily(&f);
            let r = coverage_check(&f, &s, 10_000, seed + 100);
            assert!(r.passed(), "{r:?}");
        }
    }

    #[test]
    fn undilated_selection_misses() {
        let f = BallFamily::random(2, 100, 10.0, 0.1, 3.0, 1).unwrap();
        let mut s = greedy_disjoint_subfamily(&f);
        s.dilation = 1.0;
        assert!(coverage_check(&f, &s, 10_000, 2).misses > 0);
    }

    #[test]
    fn invalid_radii_are_rejected() {
        assert!(BallFamily::new(2, vec![Ball::new(Point::ORIGIN, 0.0)]).is_err());
        assert!(BallFamily::new(1, vec![Ball::new(Point::new(0.0, 1.0), 1.0)]).is_err());
    }
}
