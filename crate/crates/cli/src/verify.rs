//! The verification suite: every input against every profile.

use std::path::Path;

use anyhow::{Context, Result};
use capmax::capacity::geometric_lattice;
use capmax::maximal::{openness_radius, sandwich_check, uncentered_maximal_at_point, UncenteredPolicy};
use capmax::setcap::weak11_bound_check;
use capmax::weaktype::{boundedness_check, dilation_convergence, limit_estimate, theorem_check, weaktype_curve};
use capmax::{validate_profile, AtomicMeasure, LevelSetEngine, MaximalSource, Point, RadialProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Input, InputSpec, LambdaSpec, ProfileSpec, RunConfig, Source};
use crate::output::write_json;
use crate::Outcome;

/// Single-atom curves must be constant to this relative accuracy.
const EXACTNESS_TOL: f64 = 1e-4;
/// Final relative error of the dilation-convergence check.
const CONVERGENCE_TOL: f64 = 0.05;
const CONVERGENCE_LAMBDA: f64 = 0.1;
const OPENNESS_LEVELS: [f64; 3] = [1.0, 0.1, 0.01];
const OPENNESS_POINTS: usize = 64;
const OPENNESS_PROBES: usize = 4;
const SANDWICH_POINTS: usize = 256;
const DISCREPANCY_POINTS: usize = 16;

pub fn default_config() -> RunConfig {
    serde_json::from_value(json!({
        "schema": 1,
        "profiles": [
            {"kind": "lebesgue"},
            {"kind": "power_law", "kappa": 1.0, "d": 1.5},
            {"kind": "wobble", "kappa": 1.0, "d": 2.0, "epsilon": 0.2}
        ],
        "inputs": [
            {"kind": "delta", "dim": 2},
            {"kind": "two_atoms", "dim": 2},
            {"kind": "preset", "preset": {"kind": "indicator_ball", "radius": 1.0},
             "grid": {"dim": 1, "h": 0.01, "half_width": 2.0}},
            {"kind": "preset", "preset": {"kind": "gaussian", "sigma": 1.0},
             "grid": {"dim": 2, "h": 0.2, "half_width": 6.0}}
        ]
    }))
    .expect("built-in config is valid")
}

fn default_lambdas() -> LambdaSpec {
    LambdaSpec::Geometric {
        hi: 0.1,
        lo: Some(1e-4),
        per_decade: 4,
    }
}

#[derive(Serialize)]
struct Check {
    name: &'static str,
    case: String,
    passed: bool,
    detail: Value,
}

#[derive(Serialize)]
struct Discrepancy {
    case: String,
    points: usize,
    /// Largest uncentered/centered ratio over finite values.
    max_ratio: f64,
}

#[derive(Serialize)]
struct Report {
    passed: bool,
    failing: Vec<String>,
    checks: Vec<Check>,
    centered_vs_uncentered: Vec<Discrepancy>,
}

struct Suite {
    checks: Vec<Check>,
    discrepancy: Vec<Discrepancy>,
}

impl Suite {
    fn push<T: Serialize>(&mut self, name: &'static str, case: &str, passed: bool, detail: T) -> Result<()> {
        self.checks.push(Check {
            name,
            case: case.to_string(),
            passed,
            detail: serde_json::to_value(detail)?,
        });
        Ok(())
    }
}

fn random_point(rng: &mut ChaCha8Rng, dim: usize, center: Point, half: f64) -> Point {
    let x = rng.random_range(-half..=half);
    let y = if dim == 2 { rng.random_range(-half..=half) } else { 0.0 };
    center + Point::new(x, y)
}

fn random_direction(rng: &mut ChaCha8Rng, dim: usize) -> Point {
    if dim == 1 {
        return Point::on_line(if rng.random::<bool>() { 1.0 } else { -1.0 });
    }
    let a = rng.random_range(0.0..std::f64::consts::TAU);
    Point::new(a.cos(), a.sin())
}

/// Around every sampled point of `{M > λ}`, points closer than the openness
/// radius must still lie in the set.
fn openness(source: &dyn MaximalSource, profile: &RadialProfile, rng: &mut ChaCha8Rng) -> Result<Value> {
    let dim = source.dim();
    let center = source.centroid();
    let (_, reach) = source.support_reach(center);
    let mut sampled = 0;
    let mut probed = 0;
    let mut failures = Vec::new();
    for lambda in OPENNESS_LEVELS {
        let half = reach + profile.inverse_ball_capacity(source.total_mass() / lambda)?;
        for _ in 0..OPENNESS_POINTS {
            let x = random_point(rng, dim, center, half);
            let Some(delta) = openness_radius(source, profile, x, lambda) else {
                continue;
            };
            sampled += 1;
            for _ in 0..OPENNESS_PROBES {
                let z = x + random_direction(rng, dim) * (0.999 * delta);
                probed += 1;
                if !(source.maximal(profile, z) > lambda) {
                    failures.push(json!({"lambda": lambda, "x": x, "z": z, "delta": delta}));
                }
            }
        }
    }
    Ok(json!({"points_in_set": sampled, "probes": probed, "failures": failures}))
}

fn sandwich(nu: &AtomicMeasure, profile: &RadialProfile, ts: &[f64], rng: &mut ChaCha8Rng) -> Result<(bool, Value)> {
    let dim = nu.dim();
    let (_, reach) = nu.support_reach(Point::ORIGIN);
    let mut passed = true;
    let mut rows = Vec::new();
    for &t in ts {
        let half = t * (reach + 1.0) * 2.0;
        let points: Vec<Point> = (0..SANDWICH_POINTS).map(|_| random_point(rng, dim, Point::ORIGIN, half)).collect();
        let r = sandwich_check(nu, profile, t, &points)?;
        passed &= r.passed();
        rows.push(json!({"t": t, "phi": r.phi, "psi": r.psi, "checked": r.checked,
                         "worst_excess": r.worst_excess, "violations": r.violations.len()}));
    }
    Ok((passed, Value::Array(rows)))
}

fn discrepancy(source: &dyn MaximalSource, profile: &RadialProfile, case: &str, rng: &mut ChaCha8Rng) -> Result<Discrepancy> {
    let center = source.centroid();
    let (_, reach) = source.support_reach(center);
    let mut max_ratio: f64 = 1.0;
    for _ in 0..DISCREPANCY_POINTS {
        let x = random_point(rng, source.dim(), center, 2.0 * reach + 1.0);
        let c = source.maximal(profile, x);
        let u = uncentered_maximal_at_point(source, profile, x, UncenteredPolicy::default())?;
        if c.is_finite() && c > 0.0 && u.is_finite() {
            max_ratio = max_ratio.max(u / c);
        }
    }
    Ok(Discrepancy {
        case: case.to_string(),
        points: DISCREPANCY_POINTS,
        max_ratio,
    })
}

fn run_case(
    suite: &mut Suite,
    cfg: &RunConfig,
    input: &Input,
    profile: RadialProfile,
    case: &str,
    rng: &mut ChaCha8Rng,
) -> Result<()> {
    let source = Source::new(input, cfg.policy())?;
    let src = source.as_dyn();
    let engine = LevelSetEngine::new(src, profile, cfg.level_set_options(None))?;
    let lambdas = cfg.lambdas(&engine)?;
    let curve = weaktype_curve(&engine, &lambdas).with_context(|| format!("weak-type curve for {case}"))?;
    let mass = curve.mass;

    if let Input::Atoms(nu) = input {
        if let [atom] = nu.atoms() {
            let worst = curve
                .entries
                .iter()
                .map(|e| ((e.h_lower - atom.weight).abs()).max((e.h_upper - atom.weight).abs()) / atom.weight)
                .fold(0.0, f64::max);
            suite.push("point_mass_exactness", case, worst <= EXACTNESS_TOL, json!({"worst_relative_error": worst}))?;
        }
    }

    let limit = limit_estimate(&curve)?;
    let theorem = theorem_check(&curve, &profile.scaling_envelope(), limit.trend / mass)?;
    suite.push("tau_bracket", case, theorem.passed, json!({"limit": limit, "check": theorem}))?;

    let bounded = boundedness_check(&curve, lambdas[0]);
    suite.push("boundedness", case, bounded.passed, bounded)?;

    let probes_ok = curve.entries.iter().all(|e| e.probes_passed);
    suite.push("level_set_probes", case, probes_ok, json!({"levels": curve.entries.len()}))?;

    let decade_levels: Vec<f64> = lambdas.iter().step_by(lambdas.len().div_ceil(4).max(1)).copied().collect();
    let weak = weak11_bound_check(&engine, &decade_levels)?;
    suite.push(
        "weak_type_bound",
        case,
        weak.passed(),
        json!({"gamma": weak.gamma, "empirical_constant": weak.empirical_constant, "violations": weak.violations,
               "levels": decade_levels}),
    )?;

    if let Input::Atoms(nu) = input {
        let open = openness(src, &profile, rng)?;
        let ok = open["failures"].as_array().is_some_and(|f| f.is_empty());
        suite.push("openness", case, ok, open)?;

        let (ok, detail) = sandwich(nu, &profile, &cfg.t_schedule()?, rng)?;
        suite.push("scaling_sandwich", case, ok, detail)?;

        let probability = nu.normalize()?;
        let report = dilation_convergence(
            &probability,
            &profile,
            CONVERGENCE_LAMBDA,
            &cfg.t_schedule()?,
            &cfg.level_set_options(None),
        )?;
        let ok = report.monotone && report.final_error <= CONVERGENCE_TOL;
        suite.push("dilation_convergence", case, ok, report)?;
    }

    suite.discrepancy.push(discrepancy(src, &profile, case, rng)?);
    Ok(())
}

pub fn run(cfg: &RunConfig, base: &Path, out: &Path) -> Result<Outcome> {
    let mut cfg = cfg.clone();
    if cfg.lambdas.is_none() {
        cfg.lambdas = Some(default_lambdas());
    }
    let defaults = default_config();
    let input_specs: Vec<InputSpec> = match (&cfg.inputs[..], &cfg.input) {
        ([], Some(one)) => vec![one.clone()],
        ([], None) => defaults.inputs.clone(),
        (many, _) => many.to_vec(),
    };
    let profile_specs: Vec<ProfileSpec> = match (&cfg.profiles[..], &cfg.profile) {
        ([], Some(one)) => vec![*one],
        ([], None) => defaults.profiles.clone(),
        (many, _) => many.to_vec(),
    };
    let inputs = input_specs
        .iter()
        .map(|s| s.build(cfg.grid.as_ref(), cfg.seed, base).map(|i| (s.label(), i)))
        .collect::<Result<Vec<_>>>()?;
    let t_schedule = cfg.t_schedule()?;
    anyhow::ensure!(t_schedule.len() >= 2, "the t schedule needs at least 2 entries");

    let mut suite = Suite {
        checks: Vec::new(),
        discrepancy: Vec::new(),
    };
    let r_samples = geometric_lattice(1e-4, 1e4, 161);
    let t_samples = geometric_lattice(1e-3, 1e3, 61);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for spec in &profile_specs {
        let mut validated: Vec<RadialProfile> = Vec::new();
        for (label, input) in &inputs {
            let profile = spec.resolve(input.dim())?;
            let case = format!("{label} / {}", profile.describe());
            if !validated.contains(&profile) {
                let report = validate_profile(&profile, &r_samples, &t_samples);
                let failed: Vec<String> = report.failed_checks().into_iter().map(String::from).collect();
                suite.push(
                    "validate_profile",
                    &profile.describe(),
                    report.passed(),
                    json!({"failed": failed, "checks": report.checks}),
                )?;
                validated.push(profile);
            }
            if suite.checks.iter().any(|c| c.name == "validate_profile" && !c.passed && c.case == profile.describe()) {
                continue;
            }
            run_case(&mut suite, &cfg, input, profile, &case, &mut rng)?;
        }
    }

    let mut failing: Vec<String> = Vec::new();
    for c in suite.checks.iter().filter(|c| !c.passed) {
        let label = format!("{} [{}]", c.name, c.case);
        if !failing.contains(&label) {
            failing.push(label);
        }
    }
    let report = Report {
        passed: failing.is_empty(),
        failing: failing.clone(),
        checks: suite.checks,
        centered_vs_uncentered: suite.discrepancy,
    };
    write_json(out, "verify.json", &report)?;
    Ok(if failing.is_empty() {
        Outcome::Success
    } else {
        Outcome::Failed(failing)
    })
}
