//! The weak-type curve `h(λ) = λ · C({M_C > λ})` and the checks built on it.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::capacity::{RadialProfile, ScalingEnvelope};
use crate::csv;
use crate::error::{domain, Result};
use crate::maximal::MaximalSource;
use crate::sampling::AtomicMeasure;
use crate::setcap::{LevelSetEngine, LevelSetOptions, Representation, SetKind};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub lambda: f64,
    pub h_lower: f64,
    pub h_upper: f64,
    pub set_mode: SetKind,
    pub inscribed_radius: f64,
    pub enclosing_radius: f64,
    /// Ray probes all agreed with the bracket (always true for cells).
    pub probes_passed: bool,
}

impl CurveEntry {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.h_lower + self.h_upper)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeakTypeCurve {
    pub entries: Vec<CurveEntry>,
    pub input: String,
    pub profile: RadialProfile,
    pub mass: f64,
}

impl WeakTypeCurve {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "lambda,h_lower,h_upper,set_mode,inscribed_radius,enclosing_radius")?;
        for e in &self.entries {
            csv::write_row(
                &mut w,
                &[
                    csv::num(e.lambda),
                    csv::num(e.h_lower),
                    csv::num(e.h_upper),
                    e.set_mode.as_str().to_string(),
                    csv::num(e.inscribed_radius),
                    csv::num(e.enclosing_radius),
                ],
            )?;
        }
        Ok(())
    }

    pub fn last(&self) -> Option<&CurveEntry> {
        self.entries.last()
    }
}

/// `per_decade` geometric steps per factor of ten from `hi` down to `lo`, both included.
pub fn lambda_schedule(hi: f64, lo: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(hi.is_finite() && lo > 0.0 && hi > lo) || per_decade == 0 {
        return Err(domain(format!(
            "λ schedule needs 0 < lo < hi and per_decade ≥ 1, got [{lo}, {hi}] with {per_decade}"
        )));
    }
    let decades = (hi / lo).log10();
    let steps = (decades * per_decade as f64 - 1e-9).ceil().max(1.0) as usize;
    let mut out: Vec<f64> = (0..steps)
        .map(|k| hi * 10f64.powf(-(k as f64) * decades / steps as f64))
        .collect();
    out.push(lo);
    Ok(out)
}

/// Smallest level whose ray march stays within the engine's radius cap.
pub fn smallest_feasible_lambda<S: MaximalSource + ?Sized>(engine: &LevelSetEngine<'_, S>) -> f64 {
    let source = engine.source();
    let (_, reach) = source.support_reach(engine.center());
    let room = engine.options().radius_cap - reach;
    if room <= 0.0 {
        return f64::INFINITY;
    }
    source.total_mass() / engine.profile().value(room)
}

fn check_decreasing(lambdas: &[f64]) -> Result<()> {
    if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(domain("λ values must be positive and finite"));
    }
    if lambdas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(domain("λ schedule must be strictly decreasing"));
    }
    Ok(())
}

/// One entry per level, computed in parallel and assembled in schedule order.
pub fn weaktype_curve<S: MaximalSource + ?Sized>(engine: &LevelSetEngine<'_, S>, lambdas: &[f64]) -> Result<WeakTypeCurve> {
    check_decreasing(lambdas)?;
    let entries = lambdas
        .par_iter()
        .map(|&lambda| {
            let (set, b) = engine.bounds(lambda)?;
            let probes_passed = match &set.representation {
                Representation::Rays { probes, .. } => probes.passed(),
                Representation::Cells { .. } => true,
            };
            Ok(CurveEntry {
                lambda,
                h_lower: lambda * b.lower,
                h_upper: lambda * b.upper,
                set_mode: set.kind(),
                inscribed_radius: b.inscribed.radius,
                enclosing_radius: b.enclosing.radius,
                probes_passed,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(WeakTypeCurve {
        entries,
        input: engine.source().describe(),
        profile: *engine.profile(),
        mass: engine.source().total_mass(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitEstimate {
    pub value: f64,
    /// `h_upper − h_lower` at the smallest λ.
    pub spread: f64,
    /// `|h(λ_min) − h(λ')|` with `λ'` the scheduled level nearest `10·λ_min`.
    pub trend: f64,
    pub lambda_min: f64,
    pub lambda_trend: f64,
}

/// The bracket midpoint at the smallest level, with its error indicators.
pub fn limit_estimate(curve: &WeakTypeCurve) -> Result<LimitEstimate> {
    let n = curve.entries.len();
    if n < 3 {
        return Err(domain(format!("limit estimate needs at least 3 curve entries, got {n}")));
    }
    let last = &curve.entries[n - 1];
    let target = (10.0 * last.lambda).ln();
    let prev = curve.entries[..n - 1]
        .iter()
        .min_by(|a, b| (a.lambda.ln() - target).abs().total_cmp(&(b.lambda.ln() - target).abs()))
        .expect("at least two earlier entries");
    Ok(LimitEstimate {
        value: last.midpoint(),
        spread: last.h_upper - last.h_lower,
        trend: (last.midpoint() - prev.midpoint()).abs(),
        lambda_min: last.lambda,
        lambda_trend: prev.lambda,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub tau: f64,
    pub lambda_min: f64,
    pub lower_ratio: f64,
    pub upper_ratio: f64,
    pub slack: f64,
    pub passed: bool,
}

/// The slack equals the spread itself, so the comparison needs room for roundoff.
const ROUNDOFF: f64 = 1e-12;

/// `τ⁻¹ − slack ≤ h_lower/mass` and `h_upper/mass ≤ τ + slack` at the smallest
/// level, with `slack = spread/mass + extra_slack`.
pub fn theorem_check(curve: &WeakTypeCurve, envelope: &ScalingEnvelope, extra_slack: f64) -> Result<TheoremReport> {
    let last = curve.last().ok_or_else(|| domain("empty curve"))?;
    if !(curve.mass > 0.0) {
        return Err(domain("curve mass must be positive"));
    }
    let tau = envelope.tau();
    let slack = (last.h_upper - last.h_lower) / curve.mass + extra_slack.max(0.0);
    let lower_ratio = last.h_lower / curve.mass;
    let upper_ratio = last.h_upper / curve.mass;
    Ok(TheoremReport {
        tau,
        lambda_min: last.lambda,
        lower_ratio,
        upper_ratio,
        slack,
        passed: lower_ratio >= 1.0 / tau - slack - ROUNDOFF && upper_ratio <= tau + slack + ROUNDOFF,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEntry {
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    /// `max(|lower − 1/λ|, |upper − 1/λ|) · λ`.
    pub relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub lambda: f64,
    pub target: f64,
    pub entries: Vec<ConvergenceEntry>,
    /// Relative error never increases along the schedule.
    pub monotone: bool,
    pub final_error: f64,
}

/// Capacity bounds of `{M_C ν_t > λ}` along a decreasing `t` schedule.
pub fn dilation_convergence(
    nu: &AtomicMeasure,
    profile: &RadialProfile,
    lambda: f64,
    t_schedule: &[f64],
    options: &LevelSetOptions,
) -> Result<ConvergenceReport> {
    let mass = nu.total_mass();
    if (mass - 1.0).abs() > 1e-12 {
        return Err(domain(format!("convergence check needs a probability measure, mass = {mass}")));
    }
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(domain(format!("λ must be positive, got {lambda}")));
    }
    check_decreasing(t_schedule)?;
    let target = 1.0 / lambda;
    let entries = t_schedule
        .par_iter()
        .map(|&t| {
            let nu_t = nu.scale(t)?;
            let engine = LevelSetEngine::new(&nu_t, *profile, options.clone())?;
            let (_, b) = engine.bounds(lambda)?;
            Ok(ConvergenceEntry {
                t,
                lower: b.lower,
                upper: b.upper,
                relative_error: (b.lower - target).abs().max((b.upper - target).abs()) / target,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let monotone = entries.windows(2).all(|w| w[1].relative_error <= w[0].relative_error);
    let final_error = entries.last().map_or(f64::INFINITY, |e| e.relative_error);
    Ok(ConvergenceReport {
        lambda,
        target,
        entries,
        monotone,
        final_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessReport {
    pub lambda0: f64,
    pub entries_used: usize,
    pub sufficient_data: bool,
    pub a_emp: f64,
    pub gamma_emp: f64,
    /// `ψ(3) · mass`.
    pub gamma_bound: f64,
    pub passed: bool,
}

/// `A_emp = min h_lower` and `γ_emp = max h_upper` over levels below `λ₀`,
/// checked against `0 < A_emp` and `γ_emp ≤ ψ(3)·mass`.
pub fn boundedness_check(curve: &WeakTypeCurve, lambda0: f64) -> BoundednessReport {
    let tail: Vec<&CurveEntry> = curve.entries.iter().filter(|e| e.lambda < lambda0).collect();
    let gamma_bound = curve.profile.scaling_envelope().psi(3.0) * curve.mass;
    let a_emp = tail.iter().map(|e| e.h_lower).fold(f64::INFINITY, f64::min);
    let gamma_emp = tail.iter().map(|e| e.h_upper).fold(0.0, f64::max);
    let sufficient_data = tail.len() >= 2;
    BoundednessReport {
        lambda0,
        entries_used: tail.len(),
        sufficient_data,
        a_emp: if sufficient_data { a_emp } else { 0.0 },
        gamma_emp,
        gamma_bound,
        passed: sufficient_data && a_emp > 0.0 && a_emp <= gamma_emp && gamma_emp <= gamma_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maximal::{FieldMaximal, RadiusPolicy};
    use crate::sampling::{FieldPreset, Grid, ScalarField};

    #[test]
    fn schedule_is_geometric_and_inclusive() {
        let s = lambda_schedule(1e-1, 1e-4, 10).unwrap();
        assert_eq!(s.len(), 31);
        assert_eq!(s[0], 0.1);
        assert_eq!(*s.last().unwrap(), 1e-4);
        assert!((s[10] - 1e-2).abs() < 1e-15);
        assert!(s.windows(2).all(|w| w[1] < w[0]));
        assert!(lambda_schedule(1e-4, 1e-1, 10).is_err());
    }

    #[test]
    fn delta_curve_is_one() {
        let d = AtomicMeasure::delta(2).unwrap();
        let p = RadialProfile::lebesgue(2).unwrap();
        let e = LevelSetEngine::new(&d, p, LevelSetOptions::default()).unwrap();
        let c = weaktype_curve(&e, &[1e-1, 1e-2, 1e-3]).unwrap();
        for en in &c.entries {
            assert!((en.h_lower - 1.0).abs() < 1e-4 && (en.h_upper - 1.0).abs() < 1e-4);
        }
        let l = limit_estimate(&c).unwrap();
        assert!((l.value - 1.0).abs() < 1e-4 && l.spread < 1e-4);
        assert_eq!(l.lambda_trend, 1e-2);
        let b = boundedness_check(&c, 0.5);
        assert!(b.passed);
        assert!((b.a_emp - 1.0).abs() < 1e-4);
    }

    #[test]
    fn short_curves_are_rejected() {
        let d = AtomicMeasure::delta(1).unwrap();
        let p = RadialProfile::lebesgue(1).unwrap();
        let e = LevelSetEngine::new(&d, p, LevelSetOptions::default()).unwrap();
        let c = weaktype_curve(&e, &[0.1]).unwrap();
        assert!(limit_estimate(&c).is_err());
        assert!(weaktype_curve(&e, &[0.1, 0.2]).is_err());
        assert!(!boundedness_check(&c, 1e-9).sufficient_data);
    }

    #[test]
    fn indicator_line_tends_to_mass() {
        let g = Grid::centered(1, 1.5, 1e-3).unwrap();
        let f = ScalarField::from_preset(FieldPreset::IndicatorBall { radius: 1.0 }, g).unwrap();
        let fm = FieldMaximal::new(&f, RadiusPolicy::default()).unwrap();
        let p = RadialProfile::lebesgue(1).unwrap();
        let e = LevelSetEngine::new(&fm, p, LevelSetOptions::default()).unwrap();
        let c = weaktype_curve(&e, &lambda_schedule(1e-1, 1e-4, 2).unwrap()).unwrap();
        let l = limit_estimate(&c).unwrap();
        assert!((l.value - 2.0).abs() < 0.1, "{l:?}");
    }

    #[test]
    fn dilation_convergence_two_atoms() {
        let nu = AtomicMeasure::two_atoms(2).unwrap();
        let p = RadialProfile::power_law(1.0, 1.0).unwrap();
        let r = dilation_convergence(&nu, &p, 0.1, &[1.0, 0.5, 0.1, 0.01], &LevelSetOptions::default()).unwrap();
        assert!(r.monotone, "{r:?}");
        assert!(r.final_error < 0.05);
        assert!(dilation_convergence(&nu.weighted(2.0).unwrap(), &p, 0.1, &[1.0], &LevelSetOptions::default()).is_err());
    }

    #[test]
    fn theorem_check_brackets() {
        let d = AtomicMeasure::delta(2).unwrap();
        let p = RadialProfile::wobble(1.0, 2.0, 0.2).unwrap();
        let e = LevelSetEngine::new(&d, p, LevelSetOptions::default()).unwrap();
        let c = weaktype_curve(&e, &[1e-1, 1e-2, 1e-3]).unwrap();
        let r = theorem_check(&c, &p.scaling_envelope(), 0.0).unwrap();
        assert!(r.passed);
        assert!((r.tau - 2.25).abs() < 1e-12);
    }
}
