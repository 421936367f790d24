//! Radial capacity profiles `r ↦ c(r) = C(B(x, r))` and their scaling envelopes.
//!
//! Three families are built in:
//!
//! * `lebesgue(n)`: `c(r) = ω_n rⁿ`, the volume of the n-ball;
//! * `power_law(κ, d)`: `c(r) = κ r^d`, the ball profile of a d-homogeneous
//!   capacity such as the p-capacity;
//! * `wobble(κ, d, ε)`: `c(r) = κ r^d (1 + ε sin(ln r))`, a synthetic profile
//!   whose scaling envelope has ratio `τ = ((1+ε)/(1−ε))² > 1`.
//!
//! Every profile vanishes at zero, is strictly increasing and satisfies
//! `φ(t)·c(r) ≤ c(t·r) ≤ ψ(t)·c(r)` with closed-form `φ`, `ψ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialProfile {
    Lebesgue { n: usize },
    PowerLaw { kappa: f64, d: f64 },
    Wobble { kappa: f64, d: f64, epsilon: f64 },
}

/// Volume of the unit ball in ℝⁿ, via `ω_n = 2π/n · ω_{n−2}`.
pub fn unit_ball_volume(n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => 2.0,
        2 => PI,
        _ => 2.0 * PI / n as f64 * unit_ball_volume(n - 2),
    }
}

const BISECTION_REL_TOL: f64 = 1e-12;

impl RadialProfile {
    pub fn lebesgue(n: usize) -> Result<Self> {
        let p = RadialProfile::Lebesgue { n };
        p.check()?;
        Ok(p)
    }

    pub fn power_law(kappa: f64, d: f64) -> Result<Self> {
        let p = RadialProfile::PowerLaw { kappa, d };
        p.check()?;
        Ok(p)
    }

    /// Accepts any `ε ∈ [0, 1)` so that uncertified amplitudes can still be
    /// constructed and reported on by [`validate_profile`].
    pub fn wobble(kappa: f64, d: f64, epsilon: f64) -> Result<Self> {
        let p = RadialProfile::Wobble { kappa, d, epsilon };
        p.check()?;
        Ok(p)
    }

    /// Parameter sanity: positive finite amplitude and exponent, `0 ≤ ε < 1`.
    pub fn check(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(domain(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            RadialProfile::Lebesgue { n } => {
                if n == 0 {
                    return Err(domain("lebesgue dimension must be at least 1"));
                }
            }
            RadialProfile::PowerLaw { kappa, d } => {
                positive("kappa", kappa)?;
                positive("d", d)?;
            }
            RadialProfile::Wobble { kappa, d, epsilon } => {
                positive("kappa", kappa)?;
                positive("d", d)?;
                if !(0.0..1.0).contains(&epsilon) {
                    return Err(domain(format!("wobble epsilon must lie in [0, 1), got {epsilon}")));
                }
            }
        }
        Ok(())
    }

    /// Homogeneity exponent `d` (`n` for Lebesgue).
    pub fn degree(&self) -> f64 {
        match *self {
            RadialProfile::Lebesgue { n } => n as f64,
            RadialProfile::PowerLaw { d, .. } | RadialProfile::Wobble { d, .. } => d,
        }
    }

    /// `c(r)` without the sign check. Callers guarantee `r ≥ 0`.
    #[inline]
    pub fn value(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "negative radius {r}");
        match *self {
            RadialProfile::Lebesgue { n } => match n {
                1 => 2.0 * r,
                2 => PI * r * r,
                _ => unit_ball_volume(n) * r.powi(n as i32),
            },
            RadialProfile::PowerLaw { kappa, d } => kappa * r.powf(d),
            RadialProfile::Wobble { kappa, d, epsilon } => {
                if r == 0.0 {
                    0.0
                } else {
                    kappa * r.powf(d) * (1.0 + epsilon * r.ln().sin())
                }
            }
        }
    }

    /// Capacity of a ball of radius `r`.
    pub fn ball_capacity(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(domain(format!("ball radius must be nonnegative, got {r}")));
        }
        Ok(self.value(r))
    }

    /// The unique radius with `c(r) = v`.
    pub fn inverse_ball_capacity(&self, v: f64) -> Result<f64> {
        if v.is_nan() || v <= 0.0 {
            return Err(domain(format!("capacity value must be positive, got {v}")));
        }
        if v.is_infinite() {
            return Ok(f64::INFINITY);
        }
        Ok(self.inverse(v))
    }

    /// Infallible inverse for `v > 0` finite.
    pub(crate) fn inverse(&self, v: f64) -> f64 {
        match *self {
            RadialProfile::Lebesgue { n } => match n {
                1 => 0.5 * v,
                2 => (v / PI).sqrt(),
                _ => (v / unit_ball_volume(n)).powf(1.0 / n as f64),
            },
            RadialProfile::PowerLaw { kappa, d } => (v / kappa).powf(1.0 / d),
            RadialProfile::Wobble { kappa, d, epsilon } => {
                // κ r^d (1−ε) ≤ c(r) ≤ κ r^d (1+ε) brackets the root.
                let mut lo = (v / (kappa * (1.0 + epsilon))).powf(1.0 / d);
                let mut hi = (v / (kappa * (1.0 - epsilon))).powf(1.0 / d);
                while self.value(lo) > v {
                    lo *= 0.5;
                }
                while self.value(hi) < v {
                    hi *= 2.0;
                }
                for _ in 0..200 {
                    if hi - lo <= BISECTION_REL_TOL * hi {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if self.value(mid) < v {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                0.5 * (lo + hi)
            }
        }
    }

    pub fn scaling_envelope(&self) -> ScalingEnvelope {
        match *self {
            RadialProfile::Lebesgue { n } => ScalingEnvelope::homogeneous(n as f64),
            RadialProfile::PowerLaw { d, .. } => ScalingEnvelope::homogeneous(d),
            RadialProfile::Wobble { d, epsilon, .. } => ScalingEnvelope {
                degree: d,
                lower_factor: (1.0 - epsilon) / (1.0 + epsilon),
                upper_factor: (1.0 + epsilon) / (1.0 - epsilon),
            },
        }
    }

    /// Short human-readable descriptor, e.g. `wobble(1, 2, 0.2)`.
    pub fn describe(&self) -> String {
        match *self {
            RadialProfile::Lebesgue { n } => format!("lebesgue({n})"),
            RadialProfile::PowerLaw { kappa, d } => format!("power_law({kappa}, {d})"),
            RadialProfile::Wobble { kappa, d, epsilon } => format!("wobble({kappa}, {d}, {epsilon})"),
        }
    }
}

/// Closed-form bounds `φ(t) = a·t^d`, `ψ(t) = b·t^d` on `c(t·r) / c(r)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingEnvelope {
    pub degree: f64,
    pub lower_factor: f64,
    pub upper_factor: f64,
}

impl ScalingEnvelope {
    pub fn homogeneous(degree: f64) -> Self {
        ScalingEnvelope {
            degree,
            lower_factor: 1.0,
            upper_factor: 1.0,
        }
    }

    pub fn phi(&self, t: f64) -> f64 {
        self.lower_factor * t.powf(self.degree)
    }

    pub fn psi(&self, t: f64) -> f64 {
        self.upper_factor * t.powf(self.degree)
    }

    /// `lim_{t→0} ψ(t)/φ(t)`; constant in `t` for the built-in envelopes.
    pub fn tau(&self) -> f64 {
        self.upper_factor / self.lower_factor
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileReport {
    pub profile: RadialProfile,
    pub checks: Vec<ProfileCheck>,
    /// `(t, r)` pairs where the envelope inequality failed.
    pub envelope_violations: Vec<(f64, f64)>,
}

impl ProfileReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&str> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| c.name.as_str())
            .collect()
    }
}

/// Numerically cross-checks a profile against its own claims on a sample lattice:
/// monotonicity, vanishing at zero, and the scaling envelope.
pub fn validate_profile(profile: &RadialProfile, r_samples: &[f64], t_samples: &[f64]) -> ProfileReport {
    let mut checks = Vec::new();
    let usable = |xs: &[f64]| !xs.is_empty() && xs.iter().all(|v| v.is_finite() && *v > 0.0);
    if let Err(e) = profile.check() {
        checks.push(ProfileCheck {
            name: "parameters".into(),
            passed: false,
            detail: e.to_string(),
        });
    }
    if !usable(r_samples) || !usable(t_samples) {
        checks.push(ProfileCheck {
            name: "samples".into(),
            passed: false,
            detail: "sample lists must be nonempty and strictly positive".into(),
        });
        return ProfileReport {
            profile: *profile,
            checks,
            envelope_violations: Vec::new(),
        };
    }

    let mut rs = r_samples.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();

    // Monotonicity: sampled strict increase, and for wobble the analytic certificate
    // ε < d/(d+1) which bounds the derivative away from zero between samples.
    let sampled_violation = rs.windows(2).find(|w| profile.value(w[0]) >= profile.value(w[1]));
    let mut mono_detail = match sampled_violation {
        Some(w) => format!("c({}) >= c({}) on the sample lattice", w[0], w[1]),
        None => format!("strictly increasing on {} samples", rs.len()),
    };
    let mut certified = true;
    if let RadialProfile::Wobble { d, epsilon, .. } = *profile {
        let bound = d / (d + 1.0);
        let derivative_floor = d - epsilon * (d * d + 1.0).sqrt();
        if epsilon >= bound {
            certified = false;
            mono_detail = format!(
                "{mono_detail}; not certified: epsilon {epsilon} >= d/(d+1) = {bound} \
                 (min of d(1+ε sin u)+ε cos u is {derivative_floor:.6})"
            );
        }
    }
    checks.push(ProfileCheck {
        name: "monotonicity".into(),
        passed: sampled_violation.is_none() && certified,
        detail: mono_detail,
    });

    // c(0) = 0 and c(r_min·10^−k) decreases strictly towards it.
    let r0 = rs[0];
    let tail: Vec<f64> = (0..=12).map(|k| profile.value(r0 * 10f64.powi(-k))).collect();
    let vanishing = profile.value(0.0) == 0.0
        && tail.windows(2).all(|w| w[1] < w[0])
        && tail.iter().all(|v| *v > 0.0);
    checks.push(ProfileCheck {
        name: "vanishing_at_zero".into(),
        passed: vanishing,
        detail: format!("c(0) = {}, c({:e}) = {:e}", profile.value(0.0), r0 * 1e-12, tail[12]),
    });

    let env = profile.scaling_envelope();
    let tol = match profile {
        RadialProfile::Wobble { .. } => 1e-12,
        _ => 1e-13,
    };
    let mut violations = Vec::new();
    for &t in t_samples {
        let (phi, psi) = (env.phi(t), env.psi(t));
        for &r in &rs {
            let c = profile.value(r);
            let scaled = profile.value(t * r);
            if scaled < phi * c * (1.0 - tol) || scaled > psi * c * (1.0 + tol) {
                violations.push((t, r));
            }
        }
    }
    checks.push(ProfileCheck {
        name: "envelope".into(),
        passed: violations.is_empty() && env.lower_factor <= env.upper_factor,
        detail: format!(
            "{} violations over {} (t, r) pairs, tau = {}",
            violations.len(),
            t_samples.len() * rs.len(),
            env.tau()
        ),
    });

    ProfileReport {
        profile: *profile,
        checks,
        envelope_violations: violations,
    }
}

/// Geometric lattice `lo·(hi/lo)^{k/(count−1)}`, `k = 0..count`.
pub fn geometric_lattice(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let ratio = (hi / lo).ln();
    (0..count)
        .map(|k| lo * (ratio * k as f64 / (count - 1) as f64).exp())
        .collect()
}
