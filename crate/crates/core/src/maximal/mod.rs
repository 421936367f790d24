//! Capacitary maximal function `M_C ν(x) = sup_r ν(B̄(x, r)) / c(r)`.
//!
//! Atomic measures are evaluated exactly; grid fields go through the
//! prefix-sum integrator in [`field`]. Both implement [`MaximalSource`], which
//! is all the level-set and weak-type code needs.
//!
//! The default operator is centered. [`uncentered_maximal_at_point`] searches a
//! finite family of off-center balls containing `x` and returns a lower bound
//! for the uncentered supremum.

mod atomic;
pub mod field;

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::RadialProfile;
use crate::csv;
use crate::error::{config, Result};
use crate::geom::{min_enclosing_ball, Point};
use crate::sampling::{AtomicMeasure, Grid, ScalarField};

pub use field::{maximal_at_point_field, FieldMaximal, RadiusMode, RadiusPolicy};

/// Maximising ball of a supremum: `value = enclosed / c(radius)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Supremum {
    pub value: f64,
    pub radius: f64,
    pub enclosed: f64,
}

impl Supremum {
    pub const ZERO: Supremum = Supremum {
        value: 0.0,
        radius: 0.0,
        enclosed: 0.0,
    };
}

/// A measure the maximal function can be evaluated on.
pub trait MaximalSource: Sync {
    fn dim(&self) -> usize;

    fn total_mass(&self) -> f64;

    fn centroid(&self) -> Point;

    /// Lower bound on the distance from `x` to the support, and the exact
    /// distance to its farthest point. `(∞, 0)` for the zero measure.
    fn support_reach(&self, x: Point) -> (f64, f64);

    /// Mass of the closed ball `B̄(center, r)`.
    fn ball_mass(&self, center: Point, r: f64) -> f64;

    /// `sup_{r ≥ r_min} ν(B̄(center, r)) / c(r)`.
    fn admissible_supremum(&self, profile: &RadialProfile, center: Point, r_min: f64) -> Supremum;

    /// Off-center ball centers worth trying for the uncentered operator at `x`.
    fn candidate_centers(&self, x: Point, budget: usize) -> Vec<Point>;

    fn describe(&self) -> String;

    fn supremum(&self, profile: &RadialProfile, x: Point) -> Supremum {
        self.admissible_supremum(profile, x, 0.0)
    }

    fn maximal(&self, profile: &RadialProfile, x: Point) -> f64 {
        self.supremum(profile, x).value
    }

    /// The sampling grid, for sources that have one.
    fn grid(&self) -> Option<&Grid> {
        None
    }
}

impl MaximalSource for AtomicMeasure {
    fn dim(&self) -> usize {
        AtomicMeasure::dim(self)
    }

    fn total_mass(&self) -> f64 {
        AtomicMeasure::total_mass(self)
    }

    fn centroid(&self) -> Point {
        AtomicMeasure::centroid(self)
    }

    fn support_reach(&self, x: Point) -> (f64, f64) {
        self.atoms()
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| a.position.dist(x))
            .fold((f64::INFINITY, 0.0), |(lo, hi), d| (lo.min(d), hi.max(d)))
    }

    fn ball_mass(&self, center: Point, r: f64) -> f64 {
        self.mass_in_closed_ball(center, r)
    }

    fn admissible_supremum(&self, profile: &RadialProfile, center: Point, r_min: f64) -> Supremum {
        atomic::supremum_from(&atomic::sorted_distances(self, center), profile, r_min)
    }

    fn candidate_centers(&self, x: Point, budget: usize) -> Vec<Point> {
        let atoms: Vec<Point> = self
            .atoms()
            .iter()
            .filter(|a| a.weight > 0.0)
            .map(|a| a.position)
            .collect();
        let mut out = Vec::with_capacity(budget.min(1 + 2 * atoms.len()));
        out.push(x);
        for &a in &atoms {
            out.push(a);
            out.push(x.midpoint(a));
        }
        'pairs: for (i, &a) in atoms.iter().enumerate() {
            for &b in &atoms[i + 1..] {
                if out.len() >= budget {
                    break 'pairs;
                }
                if let Some(ball) = min_enclosing_ball(&[x, a, b]) {
                    out.push(ball.center);
                }
            }
        }
        out.truncate(budget.max(1));
        out
    }

    fn describe(&self) -> String {
        AtomicMeasure::describe(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaximalMode {
    Centered,
    UncenteredApprox,
}

/// Maximal-function values at a list of evaluation points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaximalField {
    pub dim: usize,
    pub eval_points: Vec<Point>,
    pub values: Vec<f64>,
    pub mode: MaximalMode,
}

impl MaximalField {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_finite(&self) -> Option<f64> {
        self.values.iter().copied().filter(|v| v.is_finite()).reduce(f64::max)
    }

    /// Indices of the points with value above `lambda` (+∞ always qualifies).
    pub fn superlevel(&self, lambda: f64) -> Vec<usize> {
        (0..self.values.len()).filter(|&k| self.values[k] > lambda).collect()
    }

    /// `x[,y],value` rows; +∞ is written as `inf`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let header = if self.dim == 1 { "x,value" } else { "x,y,value" };
        writeln!(w, "{header}")?;
        for (p, v) in self.eval_points.iter().zip(&self.values) {
            let mut row: Vec<String> = p.coords(self.dim).iter().map(|c| csv::num(*c)).collect();
            row.push(csv::num(*v));
            csv::write_row(&mut w, &row)?;
        }
        Ok(())
    }
}

/// Centered values at `points`, evaluated in parallel. Each value depends only
/// on its own point, so the output does not depend on the thread count.
pub fn maximal_field<S: MaximalSource + ?Sized>(source: &S, profile: &RadialProfile, points: &[Point]) -> MaximalField {
    let values = points.par_iter().map(|&x| source.maximal(profile, x)).collect();
    MaximalField {
        dim: source.dim(),
        eval_points: points.to_vec(),
        values,
        mode: MaximalMode::Centered,
    }
}

/// Centered values at every cell center of `grid`.
pub fn maximal_on_grid<S: MaximalSource + ?Sized>(source: &S, profile: &RadialProfile, grid: &Grid) -> MaximalField {
    maximal_field(source, profile, &grid.centers())
}

/// Exact centered value `max_i W_i / c(d_i)`; +∞ on an atom.
pub fn maximal_at_point_measure(nu: &AtomicMeasure, profile: &RadialProfile, x: Point) -> f64 {
    atomic::centered_supremum(nu, profile, x).value
}

pub fn maximal_field_measure(nu: &AtomicMeasure, profile: &RadialProfile, points: &[Point]) -> MaximalField {
    maximal_field(nu, profile, points)
}

/// Centered values of a sampled density at `points`.
pub fn maximal_field_grid(field: &ScalarField, profile: &RadialProfile, points: &[Point], policy: RadiusPolicy) -> Result<MaximalField> {
    Ok(maximal_field(&FieldMaximal::new(field, policy)?, profile, points))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UncenteredPolicy {
    /// Maximum number of candidate centers per evaluation point.
    pub max_centers: usize,
}

impl Default for UncenteredPolicy {
    fn default() -> Self {
        UncenteredPolicy { max_centers: 256 }
    }
}

/// Lower bound for `sup_{B ∋ x} ν(B)/C(B)`: the best ball among the candidate
/// centers with radius at least the distance to `x`. Never below the centered
/// value, since `x` itself is always a candidate.
pub fn uncentered_maximal_at_point<S: MaximalSource + ?Sized>(
    source: &S,
    profile: &RadialProfile,
    x: Point,
    policy: UncenteredPolicy,
) -> Result<f64> {
    if policy.max_centers == 0 {
        return Err(config("uncentered search needs at least one candidate center"));
    }
    Ok(source
        .candidate_centers(x, policy.max_centers)
        .into_iter()
        .map(|c| source.admissible_supremum(profile, c, c.dist(x)).value)
        .fold(0.0, f64::max))
}

pub fn uncentered_field<S: MaximalSource + ?Sized>(
    source: &S,
    profile: &RadialProfile,
    points: &[Point],
    policy: UncenteredPolicy,
) -> Result<MaximalField> {
    let values = points
        .par_iter()
        .map(|&x| uncentered_maximal_at_point(source, profile, x, policy))
        .collect::<Result<Vec<_>>>()?;
    Ok(MaximalField {
        dim: source.dim(),
        eval_points: points.to_vec(),
        values,
        mode: MaximalMode::UncenteredApprox,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichViolation {
    pub point: Point,
    pub scaled: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    pub t: f64,
    pub phi: f64,
    pub psi: f64,
    pub checked: usize,
    /// Largest of `lower/scaled − 1` and `scaled/upper − 1` over finite values.
    pub worst_excess: f64,
    pub violations: Vec<SandwichViolation>,
}

impl SandwichReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

pub const SANDWICH_TOLERANCE: f64 = 1e-10;

/// Checks `M ν(x/t)/ψ(t) ≤ M ν_t(x) ≤ M ν(x/t)/φ(t)` at every point, exactly.
pub fn sandwich_check(nu: &AtomicMeasure, profile: &RadialProfile, t: f64, points: &[Point]) -> Result<SandwichReport> {
    let nu_t = nu.scale(t)?;
    let env = profile.scaling_envelope();
    let (phi, psi) = (env.phi(t), env.psi(t));
    let rows: Vec<(Point, f64, f64, f64)> = points
        .par_iter()
        .map(|&x| {
            let base = maximal_at_point_measure(nu, profile, x * (1.0 / t));
            let scaled = maximal_at_point_measure(&nu_t, profile, x);
            (x, scaled, base / psi, base / phi)
        })
        .collect();
    let mut worst: f64 = 0.0;
    let mut violations = Vec::new();
    for (point, scaled, lower, upper) in rows {
        if !(scaled.is_finite() && lower.is_finite()) {
            if scaled.is_infinite() != lower.is_infinite() {
                violations.push(SandwichViolation { point, scaled, lower, upper });
            }
            continue;
        }
        let excess = if scaled > 0.0 {
            (lower / scaled - 1.0).max(scaled / upper - 1.0)
        } else if lower > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        worst = worst.max(excess);
        if excess > SANDWICH_TOLERANCE {
            violations.push(SandwichViolation { point, scaled, lower, upper });
        }
    }
    Ok(SandwichReport {
        t,
        phi,
        psi,
        checked: points.len(),
        worst_excess: worst,
        violations,
    })
}

/// Radius `δ` such that `M ν(z) > λ` for every `|z − x| < δ`, when `M ν(x) > λ`.
///
/// With `B̄(x, r)` the maximising ball and `s* = c⁻¹(ν(B̄(x,r))/λ) > r`, every
/// `B̄(z, s)` with `s = (r + s*)/2` and `|z − x| < s − r` contains `B̄(x, r)`,
/// hence has ratio at least `ν(B̄(x,r))/c(s) > λ`.
pub fn openness_radius<S: MaximalSource + ?Sized>(source: &S, profile: &RadialProfile, x: Point, lambda: f64) -> Option<f64> {
    let sup = source.supremum(profile, x);
    if !(sup.value > lambda) || sup.enclosed <= 0.0 || !(lambda > 0.0) {
        return None;
    }
    let s_star = profile.inverse(sup.enclosed / lambda);
    let s = 0.5 * (sup.radius + s_star);
    let delta = s - sup.radius;
    (delta > 0.0 && delta.is_finite()).then_some(delta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Atom;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn delta_field_on_line() {
        let d = AtomicMeasure::delta(1).unwrap();
        let p = RadialProfile::lebesgue(1).unwrap();
        let f = maximal_field_measure(&d, &p, &[Point::on_line(1.0), Point::on_line(-2.0)]);
        assert_eq!(f.values, vec![0.5, 0.25]);
        assert_eq!(f.mode, MaximalMode::Centered);
    }

    #[test]
    fn delta_decreases_along_ray() {
        let d = AtomicMeasure::delta(2).unwrap();
        let p = RadialProfile::wobble(1.0, 2.0, 0.2).unwrap();
        let pts: Vec<Point> = (1..200).map(|k| Point::new(0.03 * k as f64, 0.01 * k as f64)).collect();
        let f = maximal_field_measure(&d, &p, &pts);
        assert!(f.values.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn two_atom_field_is_symmetric() {
        let nu = AtomicMeasure::two_atoms(2).unwrap();
        let p = RadialProfile::lebesgue(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let x = Point::new(rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0));
            assert_eq!(maximal_at_point_measure(&nu, &p, x), maximal_at_point_measure(&nu, &p, x * -1.0));
        }
    }

    #[test]
    fn homogeneity_and_monotonicity_in_measure() {
        let nu = AtomicMeasure::gaussian_sample(2, 8, 1.0, 5).unwrap();
        let nu3 = nu.weighted(3.0).unwrap();
        let more = nu
            .with_atom(Atom {
                position: Point::new(0.4, 0.4),
                weight: 0.2,
            })
            .unwrap();
        let p = RadialProfile::power_law(2.0, 1.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let x = Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let v = maximal_at_point_measure(&nu, &p, x);
            let v3 = maximal_at_point_measure(&nu3, &p, x);
            assert!((v3 - 3.0 * v).abs() <= 1e-15 * v3);
            assert!(maximal_at_point_measure(&more, &p, x) >= v);
        }
    }

    #[test]
    fn uncentered_delta_uses_half_distance() {
        let d = AtomicMeasure::delta(2).unwrap();
        let p = RadialProfile::lebesgue(2).unwrap();
        let x = Point::new(0.6, 0.8);
        let u = uncentered_maximal_at_point(&d, &p, x, UncenteredPolicy::default()).unwrap();
        assert_eq!(u, 1.0 / p.value(0.5));
        assert!(u >= maximal_at_point_measure(&d, &p, x));
    }

    #[test]
    fn uncentered_dominates_centered() {
        let nu = AtomicMeasure::two_atoms(2).unwrap();
        let p = RadialProfile::wobble(1.0, 2.0, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..1000 {
            let x = Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let c = maximal_at_point_measure(&nu, &p, x);
            let u = uncentered_maximal_at_point(&nu, &p, x, UncenteredPolicy::default()).unwrap();
            assert!(u >= c);
        }
        assert!(uncentered_maximal_at_point(&nu, &p, Point::ORIGIN, UncenteredPolicy { max_centers: 0 }).is_err());
    }

    #[test]
    fn sandwich_is_tight_for_power_law() {
        let nu = AtomicMeasure::two_atoms(2).unwrap();
        let p = RadialProfile::power_law(1.0, 1.0).unwrap();
        let pts: Vec<Point> = (0..50).map(|k| Point::new(0.01 * k as f64 - 0.2, 0.03)).collect();
        let r = sandwich_check(&nu, &p, 0.1, &pts).unwrap();
        assert!(r.passed());
        assert!(r.worst_excess <= 1e-12);
    }

    #[test]
    fn sandwich_holds_for_wobble() {
        let nu = AtomicMeasure::two_atoms(2).unwrap();
        let p = RadialProfile::wobble(1.0, 2.0, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for t in [0.5, 0.1, 0.01, 1.0] {
            let pts: Vec<Point> = (0..100)
                .map(|_| Point::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)) * t)
                .collect();
            let r = sandwich_check(&nu, &p, t, &pts).unwrap();
            assert!(r.passed(), "t = {t}: {:?}", r.violations.first());
        }
    }

    #[test]
    fn openness_radius_keeps_level() {
        let nu = AtomicMeasure::gaussian_sample(2, 6, 1.0, 12).unwrap();
        let p = RadialProfile::lebesgue(2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let lambda = 0.05;
        let mut tested = 0;
        for _ in 0..300 {
            let x = Point::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
            let Some(delta) = openness_radius(&nu, &p, x, lambda) else {
                assert!(maximal_at_point_measure(&nu, &p, x) <= lambda);
                continue;
            };
            tested += 1;
            for _ in 0..20 {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let z = x + Point::new(a.cos(), a.sin()) * (0.999 * delta * rng.random::<f64>());
                assert!(maximal_at_point_measure(&nu, &p, z) > lambda);
            }
        }
        assert!(tested > 20);
        let at_atom = openness_radius(&nu, &p, nu.atoms()[0].position, lambda).unwrap();
        assert!(at_atom > 0.0);
    }

    #[test]
    fn csv_writes_inf() {
        let d = AtomicMeasure::delta(1).unwrap();
        let p = RadialProfile::lebesgue(1).unwrap();
        let f = maximal_field_measure(&d, &p, &[Point::ORIGIN, Point::on_line(1.0)]);
        let mut out = Vec::new();
        f.write_csv(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().next(), Some("x,value"));
        assert!(s.lines().nth(1).unwrap().ends_with(",inf"));
    }
}
