//! Centered maximal function of grid-sampled densities.
//!
//! Ball integrals `I(x, r) = Σ_{|c_k − x| ≤ r} f_k hⁿ` are answered from per-row
//! prefix sums: one interval query per grid row crossing the ball (n = 2) or a
//! single interval query (n = 1). The supremum over radii is discretised by a
//! [`RadiusPolicy`], optionally augmented by the support-cover radius at which
//! the ball swallows the whole support.

use serde::{Deserialize, Serialize};

use crate::capacity::{geometric_lattice, RadialProfile};
use crate::error::{config, Result};
use crate::geom::Point;
use crate::sampling::{Grid, ScalarField};

use super::{MaximalSource, Supremum};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum RadiusMode {
    /// Every distance from the evaluation point to a support cell center is a
    /// candidate radius (O(N log N) per point; for small grids and checks).
    AtomDistances,
    /// Fixed radii shared by all evaluation points.
    Lattice {
        r_min: f64,
        r_max: f64,
        count: usize,
        geometric: bool,
    },
    /// `count` geometric radii from `max(h, dist to support box)` to the
    /// farthest support cell, chosen per evaluation point.
    Adaptive { count: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadiusPolicy {
    pub mode: RadiusMode,
    pub include_support_cover: bool,
}

impl Default for RadiusPolicy {
    fn default() -> Self {
        RadiusPolicy {
            mode: RadiusMode::Adaptive { count: 256 },
            include_support_cover: true,
        }
    }
}

impl RadiusPolicy {
    pub fn adaptive(count: usize) -> Result<Self> {
        let p = RadiusPolicy {
            mode: RadiusMode::Adaptive { count },
            include_support_cover: true,
        };
        p.check()?;
        Ok(p)
    }

    pub fn lattice(r_min: f64, r_max: f64, count: usize, geometric: bool) -> Result<Self> {
        let p = RadiusPolicy {
            mode: RadiusMode::Lattice {
                r_min,
                r_max,
                count,
                geometric,
            },
            include_support_cover: false,
        };
        p.check()?;
        Ok(p)
    }

    pub fn exact() -> Self {
        RadiusPolicy {
            mode: RadiusMode::AtomDistances,
            include_support_cover: false,
        }
    }

    pub fn with_support_cover(mut self, on: bool) -> Self {
        self.include_support_cover = on;
        self
    }

    pub fn check(&self) -> Result<()> {
        match self.mode {
            RadiusMode::AtomDistances => Ok(()),
            RadiusMode::Adaptive { count } if count >= 2 => Ok(()),
            RadiusMode::Adaptive { count } => Err(config(format!("adaptive radius count must be ≥ 2, got {count}"))),
            RadiusMode::Lattice {
                r_min, r_max, count, ..
            } => {
                if count < 2 {
                    Err(config(format!("radius lattice needs count ≥ 2, got {count}")))
                } else if !(r_min > 0.0 && r_min.is_finite()) {
                    Err(config(format!("radius lattice needs r_min > 0, got {r_min}")))
                } else if !(r_max > r_min && r_max.is_finite()) {
                    Err(config(format!("radius lattice needs r_max > r_min, got {r_max}")))
                } else {
                    Ok(())
                }
            }
        }
    }
}

/// Nonzero cells: index bounding box, a box every ball with positive integral
/// must meet, and the candidate farthest points (outer row-end edges at row
/// height, reduced to their convex hull).
#[derive(Clone, Debug)]
struct Support {
    cols: (usize, usize),
    rows: (usize, usize),
    lo: Point,
    hi: Point,
    hull: Vec<Point>,
}

fn cross(o: Point, a: Point, b: Point) -> f64 {
    (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x())
}

/// Andrew's monotone chain; collinear points are dropped.
fn convex_hull(mut pts: Vec<Point>) -> Vec<Point> {
    pts.sort_by(|a, b| a.lex_cmp(b));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<Point> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &Point>> = if pass == 0 {
            Box::new(pts.iter())
        } else {
            Box::new(pts.iter().rev())
        };
        for &p in iter {
            while hull.len() >= start + 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
                hull.pop();
            }
            hull.push(p);
        }
        hull.pop();
    }
    hull
}

/// Row integral from the left edge to column coordinate `u ∈ [0, len − 1]`.
fn cumulative(row: &[f64], u: f64) -> f64 {
    let i = (u.floor() as usize).min(row.len() - 2);
    let frac = u - i as f64;
    if frac == 0.0 {
        row[i]
    } else {
        row[i] + frac * (row[i + 1] - row[i])
    }
}

/// A sampled density prepared for repeated maximal-function queries.
#[derive(Clone, Debug)]
pub struct FieldMaximal {
    field: ScalarField,
    /// Row-wise prefix sums of `sample · hⁿ`, `extents[0] + 1` entries per row.
    prefix: Vec<f64>,
    total: f64,
    support: Option<Support>,
    policy: RadiusPolicy,
}

impl FieldMaximal {
    pub fn new(field: &ScalarField, policy: RadiusPolicy) -> Result<Self> {
        policy.check()?;
        let grid = field.grid();
        let [ex, ey] = grid.extents2();
        let vol = grid.cell_volume();
        let samples = field.samples();

        let mut prefix = Vec::with_capacity(ey * (ex + 1));
        let mut row_extremes: Vec<Point> = Vec::new();
        let (mut cmin, mut cmax, mut rmin, mut rmax) = (usize::MAX, 0, usize::MAX, 0);
        for j in 0..ey {
            let mut acc = 0.0;
            prefix.push(0.0);
            let mut first = None;
            let mut last = 0;
            for i in 0..ex {
                let s = samples[grid.cell_index(i, j)];
                acc += s * vol;
                prefix.push(acc);
                if s > 0.0 {
                    first.get_or_insert(i);
                    last = i;
                }
            }
            if let Some(f) = first {
                cmin = cmin.min(f);
                cmax = cmax.max(last);
                rmin = rmin.min(j);
                rmax = rmax.max(j);
                let half = Point::on_line(0.5 * grid.spacing());
                row_extremes.push(grid.cell_center_ij(f, j) - half);
                row_extremes.push(grid.cell_center_ij(last, j) + half);
            }
        }
        let support = (rmin != usize::MAX).then(|| Support {
            cols: (cmin, cmax),
            rows: (rmin, rmax),
            lo: grid.cell_center_ij(cmin, rmin) - Point::on_line(0.5 * grid.spacing()),
            hi: grid.cell_center_ij(cmax, rmax) + Point::on_line(0.5 * grid.spacing()),
            hull: convex_hull(row_extremes),
        });
        Ok(FieldMaximal {
            field: field.clone(),
            prefix,
            total: field.mass(),
            support,
            policy,
        })
    }

    pub fn field(&self) -> &ScalarField {
        &self.field
    }

    pub fn policy(&self) -> &RadiusPolicy {
        &self.policy
    }

    /// `I(x, r)`: integral of the piecewise-constant density over the ball,
    /// exact along each grid row and midpoint-sampled across rows. A row takes
    /// part when its center line meets the ball; its chord is integrated with
    /// fractional end cells. In one dimension this is the exact integral.
    pub fn ball_integral(&self, x: Point, r: f64) -> f64 {
        let Some(sup) = &self.support else { return 0.0 };
        if r < 0.0 {
            return 0.0;
        }
        let grid = self.field.grid();
        let h = grid.spacing();
        let [ex, ey] = grid.extents2();
        let mid = grid.mid();
        let row_len = ex + 1;

        let (j_lo, j_hi) = if grid.dim() == 1 {
            (0, 0)
        } else {
            let row_shift = 0.5 * (ey as f64 - 1.0);
            let lo = ((x.y() - r - mid.y()) / h + row_shift).ceil().max(sup.rows.0 as f64);
            let hi = ((x.y() + r - mid.y()) / h + row_shift).floor().min(sup.rows.1 as f64);
            if lo > hi {
                return 0.0;
            }
            (lo as usize, hi as usize)
        };

        // Column coordinate u in cell units from the left grid edge.
        let u_of = |px: f64| (px - mid.x()) / h + 0.5 * ex as f64;
        let (u_min, u_max) = (sup.cols.0 as f64, (sup.cols.1 + 1) as f64);
        let r2 = r * r;
        let mut sum = 0.0;
        for j in j_lo..=j_hi {
            let dy = if grid.dim() == 1 {
                0.0
            } else {
                mid.y() + grid.axis_offset(j, 1) - x.y()
            };
            let rem = r2 - dy * dy;
            if rem < 0.0 {
                continue;
            }
            let w = rem.sqrt();
            let a = u_of(x.x() - w).max(u_min);
            let b = u_of(x.x() + w).min(u_max);
            if a >= b {
                continue;
            }
            let row = &self.prefix[j * row_len..(j + 1) * row_len];
            sum += cumulative(row, b) - cumulative(row, a);
        }
        sum
    }

    fn scan(&self, profile: &RadialProfile, x: Point, radii: impl Iterator<Item = f64>, best: &mut Supremum) {
        for r in radii {
            if r <= 0.0 {
                continue;
            }
            let mass = self.ball_integral(x, r);
            if mass <= 0.0 {
                continue;
            }
            let value = mass / profile.value(r);
            if value > best.value {
                *best = Supremum {
                    value,
                    radius: r,
                    enclosed: mass,
                };
            }
        }
    }
}

impl MaximalSource for FieldMaximal {
    fn dim(&self) -> usize {
        self.field.dim()
    }

    fn total_mass(&self) -> f64 {
        self.total
    }

    fn centroid(&self) -> Point {
        if self.total <= 0.0 {
            return Point::ORIGIN;
        }
        let grid = self.field.grid();
        let vol = grid.cell_volume();
        let s = self
            .field
            .samples()
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 0.0)
            .fold(Point::ORIGIN, |acc, (k, s)| acc + grid.cell_center(k) * (s * vol));
        s * (1.0 / self.total)
    }

    fn support_reach(&self, x: Point) -> (f64, f64) {
        let Some(sup) = &self.support else { return (f64::INFINITY, 0.0) };
        let dx = (sup.lo.x() - x.x()).max(0.0).max(x.x() - sup.hi.x());
        let dy = (sup.lo.y() - x.y()).max(0.0).max(x.y() - sup.hi.y());
        let far = sup.hull.iter().map(|p| p.dist(x)).fold(0.0, f64::max);
        (dx.hypot(dy), far)
    }

    fn ball_mass(&self, center: Point, r: f64) -> f64 {
        self.ball_integral(center, r)
    }

    fn admissible_supremum(&self, profile: &RadialProfile, x: Point, r_min: f64) -> Supremum {
        if self.support.is_none() {
            return Supremum::ZERO;
        }
        let (near, far) = self.support_reach(x);
        let mut best = Supremum::ZERO;
        if self.policy.include_support_cover && far > 0.0 {
            let r = far.max(r_min);
            best = Supremum {
                value: self.total / profile.value(r),
                radius: r,
                enclosed: self.total,
            };
        }
        match self.policy.mode {
            RadiusMode::AtomDistances => {
                let grid = self.field.grid();
                let lo = grid.spacing().max(r_min);
                let mut radii: Vec<f64> = (0..grid.cell_count())
                    .filter(|&k| self.field.samples()[k] > 0.0)
                    .map(|k| grid.cell_center(k).dist(x))
                    .filter(|&r| r >= lo)
                    .collect();
                radii.sort_by(f64::total_cmp);
                radii.dedup();
                self.scan(profile, x, std::iter::once(lo).chain(radii), &mut best);
            }
            RadiusMode::Lattice {
                r_min: lo,
                r_max: hi,
                count,
                geometric,
            } => {
                let radii: Vec<f64> = if geometric {
                    geometric_lattice(lo, hi, count)
                } else {
                    let step = (hi - lo) / (count - 1) as f64;
                    (0..count).map(|k| lo + step * k as f64).collect()
                };
                self.scan(profile, x, radii.into_iter().filter(|&r| r >= r_min), &mut best);
            }
            RadiusMode::Adaptive { count } => {
                let h = self.field.grid().spacing();
                let lo = h.max(near).max(r_min);
                if far <= lo {
                    self.scan(profile, x, std::iter::once(lo), &mut best);
                } else {
                    let ratio = (far / lo).ln() / (count - 1) as f64;
                    self.scan(profile, x, (0..count).map(|k| lo * (ratio * k as f64).exp()), &mut best);
                }
            }
        }
        best
    }

    fn candidate_centers(&self, x: Point, budget: usize) -> Vec<Point> {
        let mut out = vec![x];
        let Some(sup) = &self.support else { return out };
        let c = self.centroid();
        out.push(c);
        out.push(x.midpoint(c));
        for &v in &sup.hull {
            out.push(x.midpoint(v));
        }
        out.truncate(budget.max(1));
        out
    }

    fn describe(&self) -> String {
        format!("field(n={}, mass={})", self.field.dim(), self.total)
    }

    fn grid(&self) -> Option<&Grid> {
        Some(self.field.grid())
    }
}

/// One-off centered evaluation of a sampled density at `x`.
///
/// Builds the prefix-sum accumulator on every call; use [`FieldMaximal`] for
/// repeated queries.
pub fn maximal_at_point_field(field: &ScalarField, profile: &RadialProfile, x: Point, policy: RadiusPolicy) -> Result<f64> {
    Ok(FieldMaximal::new(field, policy)?.maximal(profile, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::FieldPreset;

    fn indicator_1d(h: f64) -> ScalarField {
        let g = Grid::centered(1, 2.0, h).unwrap();
        ScalarField::from_preset(FieldPreset::IndicatorBall { radius: 1.0 }, g).unwrap()
    }

    #[test]
    fn ball_integral_matches_enumeration() {
        let g = Grid::centered(2, 3.0, 0.1).unwrap();
        let f = ScalarField::from_preset(FieldPreset::Gaussian { sigma: 0.5 }, g.clone()).unwrap();
        let fm = FieldMaximal::new(&f, RadiusPolicy::default()).unwrap();
        let vol = g.cell_volume();
        for (x, r) in [
            (Point::new(0.03, -0.02), 0.5),
            (Point::new(1.0, 1.0), 1.7),
            (Point::new(-2.9, 0.4), 0.33),
            (Point::new(10.0, 0.0), 9.5),
        ] {
            let h = g.spacing();
            let brute: f64 = (0..g.cell_count())
                .map(|k| {
                    let c = g.cell_center(k);
                    let dy = c.y() - x.y();
                    if dy * dy > r * r {
                        return 0.0;
                    }
                    let w = (r * r - dy * dy).sqrt();
                    let len = ((c.x() + h / 2.0).min(x.x() + w) - (c.x() - h / 2.0).max(x.x() - w)).max(0.0);
                    f.samples()[k] * vol * len / h
                })
                .sum();
            let fast = fm.ball_integral(x, r);
            assert!((fast - brute).abs() <= 1e-10 * brute.max(1e-300), "{x:?} {r}: {fast} vs {brute}");
        }
    }

    #[test]
    fn indicator_center_value_is_one() {
        let f = indicator_1d(0.01);
        let p = RadialProfile::lebesgue(1).unwrap();
        let v = maximal_at_point_field(&f, &p, Point::ORIGIN, RadiusPolicy::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "{v}");
    }

    #[test]
    fn far_point_uses_covering_radius() {
        let f = indicator_1d(0.01);
        let p = RadialProfile::lebesgue(1).unwrap();
        let x = Point::on_line(10.0);
        let v = maximal_at_point_field(&f, &p, x, RadiusPolicy::default()).unwrap();
        assert!((v - 1.0 / 11.0).abs() <= 0.02 / 11.0, "{v}");
        // Brute-force scan over a dense radius lattice agrees.
        let fm = FieldMaximal::new(&f, RadiusPolicy::default()).unwrap();
        let brute = (0..=20_000)
            .map(|k| 8.0 + k as f64 * 1e-4 * 4.0)
            .map(|r| fm.ball_integral(x, r) / p.value(r))
            .fold(0.0, f64::max);
        assert!((v - brute).abs() <= 1e-3 * brute, "{v} vs {brute}");
    }

    #[test]
    fn doubling_samples_doubles_values() {
        let g = Grid::centered(2, 3.0, 0.1).unwrap();
        let f = ScalarField::from_preset(FieldPreset::Gaussian { sigma: 0.5 }, g).unwrap();
        let f2 = f.scaled(2.0).unwrap();
        let p = RadialProfile::power_law(1.0, 1.5).unwrap();
        let a = FieldMaximal::new(&f, RadiusPolicy::default()).unwrap();
        let b = FieldMaximal::new(&f2, RadiusPolicy::default()).unwrap();
        for x in [Point::ORIGIN, Point::new(0.7, -1.1), Point::new(12.0, 5.0)] {
            assert_eq!(2.0 * a.maximal(&p, x), b.maximal(&p, x));
        }
    }

    #[test]
    fn adaptive_lattice_agrees_with_cell_distances() {
        let g = Grid::centered(2, 2.0, 0.2).unwrap();
        let f = ScalarField::from_preset(FieldPreset::IndicatorBall { radius: 1.0 }, g).unwrap();
        let p = RadialProfile::lebesgue(2).unwrap();
        let exact = FieldMaximal::new(&f, RadiusPolicy::exact()).unwrap();
        let approx = FieldMaximal::new(&f, RadiusPolicy::default()).unwrap();
        for x in [Point::new(0.05, 0.1), Point::new(1.5, 0.3), Point::new(-4.0, 6.0)] {
            let e = exact.maximal(&p, x);
            let a = approx.maximal(&p, x);
            assert!((a - e).abs() <= 0.03 * e, "{a} vs {e}");
        }
    }

    #[test]
    fn bad_policies_are_config_errors() {
        assert!(RadiusPolicy::lattice(0.0, 1.0, 10, true).is_err());
        assert!(RadiusPolicy::lattice(0.1, 1.0, 1, true).is_err());
        assert!(RadiusPolicy::adaptive(1).is_err());
        let f = indicator_1d(0.1);
        let bad = RadiusPolicy {
            mode: RadiusMode::Adaptive { count: 0 },
            include_support_cover: true,
        };
        assert!(matches!(FieldMaximal::new(&f, bad), Err(crate::Error::Config(_))));
    }

    #[test]
    fn hull_keeps_extreme_points() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.5, 0.5),
            Point::new(0.5, 0.0),
        ];
        let h = convex_hull(pts);
        assert_eq!(h.len(), 4);
    }

    #[test]
    fn support_reach_bounds_distances() {
        let g = Grid::centered(2, 3.0, 0.1).unwrap();
        let f = ScalarField::from_preset(
            FieldPreset::TwoBumps {
                radius: 0.5,
                separation: 3.0,
            },
            g.clone(),
        )
        .unwrap();
        let fm = FieldMaximal::new(&f, RadiusPolicy::default()).unwrap();
        let x = Point::new(0.3, 7.0);
        let (near, far) = fm.support_reach(x);
        let support: Vec<Point> = (0..g.cell_count())
            .filter(|&k| f.samples()[k] > 0.0)
            .map(|k| g.cell_center(k))
            .collect();
        let true_near = support.iter().map(|p| p.dist(x)).fold(f64::MAX, f64::min);
        let half = Point::on_line(0.05);
        let true_far = support
            .iter()
            .map(|p| (*p - half).dist(x).max((*p + half).dist(x)))
            .fold(0.0, f64::max);
        assert!(near <= true_near);
        assert!((far - true_far).abs() < 1e-12);
    }
}
