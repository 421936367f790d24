use std::path::Path;

use anyhow::{ensure, Context, Result};
use capmax::maximal::{maximal_field, uncentered_field, UncenteredPolicy};
use capmax::setcap::{coverage_check, greedy_disjoint_subfamily, CoverageReport};
use capmax::weaktype::{
    boundedness_check, limit_estimate, theorem_check, weaktype_curve, BoundednessReport, TheoremReport,
};
use capmax::{LevelSetEngine, LimitEstimate, RadialProfile};
use serde::Serialize;

use crate::config::{Input, RunConfig, Source};
use crate::output::{write_atomic, write_json};
use crate::Outcome;

const COVERAGE_PROBES: usize = 10_000;

fn single_input(cfg: &RunConfig, base: &Path) -> Result<(Input, RadialProfile)> {
    let spec = cfg.input.as_ref().context("config has no input")?;
    let input = spec.build(cfg.grid.as_ref(), cfg.seed, base)?;
    let profile = cfg
        .profile
        .as_ref()
        .context("config has no profile")?
        .resolve(input.dim())?;
    Ok((input, profile))
}

pub fn maximal(cfg: &RunConfig, base: &Path, out: &Path) -> Result<Outcome> {
    let grid = cfg.grid.as_ref().context("maximal needs a grid spec for the evaluation points")?.build()?;
    let (input, profile) = single_input(cfg, base)?;
    ensure!(
        grid.dim() == input.dim(),
        "evaluation grid is {}-D but the input is {}-D",
        grid.dim(),
        input.dim()
    );
    let source = Source::new(&input, cfg.policy())?;
    let points = grid.centers();
    let field = if cfg.centered {
        maximal_field(source.as_dyn(), &profile, &points)
    } else {
        uncentered_field(source.as_dyn(), &profile, &points, UncenteredPolicy::default())?
    };
    write_atomic(out, "maximal.csv", |w| field.write_csv(w))?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct CurveSummary {
    input: String,
    profile: String,
    mass: f64,
    limit: LimitEstimate,
    theorem: TheoremReport,
    boundedness: BoundednessReport,
    probes_passed: bool,
}

pub fn curve(cfg: &RunConfig, base: &Path, out: &Path) -> Result<Outcome> {
    let (input, profile) = single_input(cfg, base)?;
    let grid = cfg.grid.as_ref().map(|g| g.build()).transpose()?;
    let source = Source::new(&input, cfg.policy())?;
    let engine = LevelSetEngine::new(source.as_dyn(), profile, cfg.level_set_options(grid))?;
    let lambdas = cfg.lambdas(&engine)?;
    ensure!(
        lambdas.len() >= 3,
        "the limit estimate needs at least 3 levels, the schedule has {}",
        lambdas.len()
    );
    let curve = weaktype_curve(&engine, &lambdas)?;
    let limit = limit_estimate(&curve)?;
    let summary = CurveSummary {
        input: cfg.input.as_ref().map(|i| i.label()).unwrap_or_default(),
        profile: profile.describe(),
        mass: curve.mass,
        limit,
        theorem: theorem_check(&curve, &profile.scaling_envelope(), limit.trend / curve.mass)?,
        boundedness: boundedness_check(&curve, lambdas[0]),
        probes_passed: curve.entries.iter().all(|e| e.probes_passed),
    };
    write_atomic(out, "curve.csv", |w| curve.write_csv(w))?;
    write_json(out, "limit.json", &summary)?;
    Ok(Outcome::Success)
}

#[derive(Serialize)]
struct CoveringSummary {
    coverage: CoverageReport,
    passed: bool,
}

pub fn covering(cfg: &RunConfig, out: &Path) -> Result<Outcome> {
    let family = cfg.ball_family()?;
    let selection = greedy_disjoint_subfamily(&family);
    let probes = cfg.probes.unwrap_or(COVERAGE_PROBES);
    let report = coverage_check(&family, &selection, probes, cfg.seed);
    let passed = report.passed();
    write_atomic(out, "selection.csv", |w| selection.write_csv(w))?;
    write_json(out, "coverage.json", &CoveringSummary { coverage: report, passed })?;
    Ok(if passed {
        Outcome::Success
    } else {
        Outcome::Failed(vec!["coverage".into()])
    })
}
