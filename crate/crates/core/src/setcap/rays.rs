//! Ray-traced superlevel sets.
//!
//! Along each direction the boundary of `{M > λ}` is bracketed by an
//! exponential march followed by bisection. The march stops at a certified
//! radius: if the support lies in `B̄(center, R)`, every point at distance
//! `ρ > R` from the center has `M ≤ mass / c(ρ − R)`, which is `≤ λ` once
//! `ρ ≥ R + c⁻¹(mass/λ)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::RadialProfile;
use crate::error::{Error, Result};
use crate::geom::Point;
use crate::maximal::MaximalSource;

/// Bracket of the outermost boundary crossing along one direction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayBracket {
    pub direction: Point,
    pub r_in: f64,
    pub r_out: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeReport {
    pub interior_checked: usize,
    pub interior_failures: usize,
    pub exterior_checked: usize,
    pub exterior_failures: usize,
}

impl ProbeReport {
    pub fn passed(&self) -> bool {
        self.interior_failures == 0 && self.exterior_failures == 0
    }
}

/// Unit directions: `±e₁` in one dimension, `count` equally spaced angles in two.
pub fn ray_directions(dim: usize, count: usize) -> Vec<Point> {
    if dim == 1 {
        return vec![Point::on_line(1.0), Point::on_line(-1.0)];
    }
    (0..count)
        .map(|k| {
            let a = std::f64::consts::TAU * k as f64 / count as f64;
            Point::new(a.cos(), a.sin())
        })
        .collect()
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct RaySettings {
    pub rel_tol: f64,
    pub radius_cap: f64,
}

/// Radius beyond which `M ≤ λ` is guaranteed along every ray from `center`.
pub(crate) fn certified_radius<S: MaximalSource + ?Sized>(source: &S, profile: &RadialProfile, lambda: f64, center: Point) -> f64 {
    let (_, reach) = source.support_reach(center);
    reach + profile.inverse(source.total_mass() / lambda)
}

pub(crate) fn trace_ray<S: MaximalSource + ?Sized>(
    source: &S,
    profile: &RadialProfile,
    lambda: f64,
    center: Point,
    direction: Point,
    r_stop: f64,
    settings: RaySettings,
) -> Result<RayBracket> {
    if !(r_stop <= settings.radius_cap) {
        return Err(Error::NonBracketing {
            direction: direction.0,
            lambda,
            cap: settings.radius_cap,
        });
    }
    let above = |r: f64| source.maximal(profile, center + direction * r) > lambda;
    let r0 = 1e-2 * profile.inverse(source.total_mass() / lambda);
    let mut r_in = 0.0;
    let mut r_out = r_stop;
    let mut r = r0.min(r_stop);
    let mut out_seen = false;
    while r < r_stop {
        if above(r) {
            r_in = r;
            out_seen = false;
        } else if !out_seen {
            r_out = r;
            out_seen = true;
        }
        r *= 2.0;
    }
    if !out_seen {
        r_out = r_stop;
    }
    while r_out - r_in > settings.rel_tol * r_out {
        let mid = 0.5 * (r_in + r_out);
        if mid <= r_in || mid >= r_out {
            break;
        }
        if above(mid) {
            r_in = mid;
        } else {
            r_out = mid;
        }
    }
    Ok(RayBracket { direction, r_in, r_out })
}

pub(crate) fn trace_all<S: MaximalSource + ?Sized>(
    source: &S,
    profile: &RadialProfile,
    lambda: f64,
    center: Point,
    directions: &[Point],
    settings: RaySettings,
) -> Result<Vec<RayBracket>> {
    let r_stop = certified_radius(source, profile, lambda, center);
    directions
        .par_iter()
        .map(|&d| trace_ray(source, profile, lambda, center, d, r_stop, settings))
        .collect()
}

/// Samples `count` interior points at `0.9·r_in` and `count` exterior points at
/// `1.1·r_out` along randomly chosen rays.
pub(crate) fn probe<S: MaximalSource + ?Sized>(
    source: &S,
    profile: &RadialProfile,
    lambda: f64,
    center: Point,
    rays: &[RayBracket],
    count: usize,
    seed: u64,
) -> ProbeReport {
    if rays.is_empty() || count == 0 {
        return ProbeReport::default();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let picks: Vec<usize> = (0..count).map(|_| rng.random_range(0..rays.len())).collect();
    let results: Vec<(bool, bool)> = picks
        .par_iter()
        .map(|&k| {
            let ray = rays[k];
            let inner = center + ray.direction * (0.9 * ray.r_in);
            let outer = center + ray.direction * (1.1 * ray.r_out);
            (
                source.maximal(profile, inner) > lambda,
                source.maximal(profile, outer) <= lambda,
            )
        })
        .collect();
    ProbeReport {
        interior_checked: count,
        interior_failures: results.iter().filter(|r| !r.0).count(),
        exterior_checked: count,
        exterior_failures: results.iter().filter(|r| !r.1).count(),
    }
}
