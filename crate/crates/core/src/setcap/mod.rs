//! Superlevel sets `E_λ = {M_C > λ}` and bounds on their capacity.
//!
//! Only monotonicity and subadditivity of the capacity are used: an inscribed
//! ball gives the lower bound `c(r_in)`, and the upper bound is the smaller of
//! `c(r_enclosing)` and the sum over a covering family of balls.
//!
//! Sets are represented either by grid cells (cheap when `E_λ` fits in the
//! grid) or by boundary brackets along rays from a center (needed for small
//! `λ`, where `E_λ` grows like `c⁻¹(mass/λ)`).

mod cells;
pub mod covering;
pub mod rays;

use std::io::Write;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::capacity::RadialProfile;
use crate::csv;
use crate::error::{config, domain, Result};
use crate::geom::{min_enclosing_ball, Ball, Point};
use crate::maximal::{maximal_on_grid, MaximalField, MaximalSource};
use crate::sampling::Grid;

pub use covering::{coverage_check, greedy_disjoint_subfamily, BallFamily, CoverageReport};
pub use rays::{ray_directions, ProbeReport, RayBracket};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Representation {
    Cells {
        grid: Grid,
        cells: Vec<usize>,
        /// No certificate that `E_λ` stays inside the grid.
        truncated: bool,
    },
    Rays {
        center: Point,
        rays: Vec<RayBracket>,
        probes: ProbeReport,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    Cells,
    Rays,
}

impl SetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SetKind::Cells => "cells",
            SetKind::Rays => "rays",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetApprox {
    pub lambda: f64,
    pub dim: usize,
    pub representation: Representation,
    pub source: String,
}

impl LevelSetApprox {
    pub fn kind(&self) -> SetKind {
        match self.representation {
            Representation::Cells { .. } => SetKind::Cells,
            Representation::Rays { .. } => SetKind::Rays,
        }
    }

    pub fn is_empty(&self) -> bool {
        match &self.representation {
            Representation::Cells { cells, .. } => cells.is_empty(),
            Representation::Rays { rays, .. } => rays.is_empty(),
        }
    }

    /// Cells: `index,x[,y]`. Rays: `dx[,dy],r_in,r_out`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        match &self.representation {
            Representation::Cells { grid, cells, .. } => {
                writeln!(w, "{}", if self.dim == 1 { "index,x" } else { "index,x,y" })?;
                for &k in cells {
                    let mut row = vec![k.to_string()];
                    row.extend(grid.cell_center(k).coords(self.dim).iter().map(|c| csv::num(*c)));
                    csv::write_row(&mut w, &row)?;
                }
            }
            Representation::Rays { rays, .. } => {
                writeln!(w, "{}", if self.dim == 1 { "dx,r_in,r_out" } else { "dx,dy,r_in,r_out" })?;
                for r in rays {
                    let mut row: Vec<String> = r.direction.coords(self.dim).iter().map(|c| csv::num(*c)).collect();
                    row.push(csv::num(r.r_in));
                    row.push(csv::num(r.r_out));
                    csv::write_row(&mut w, &row)?;
                }
            }
        }
        Ok(())
    }

    fn mask(&self) -> Option<(&Grid, Vec<bool>, &[usize])> {
        match &self.representation {
            Representation::Cells { grid, cells, .. } => {
                let mut inside = vec![false; grid.cell_count()];
                for &k in cells {
                    inside[k] = true;
                }
                Some((grid, inside, cells))
            }
            Representation::Rays { .. } => None,
        }
    }
}

/// Cells of a grid-evaluated maximal field whose value exceeds `lambda`.
pub fn superlevel_cells(grid: &Grid, field: &MaximalField, lambda: f64) -> Result<LevelSetApprox> {
    check_lambda(lambda)?;
    if field.len() != grid.cell_count() {
        return Err(config(format!(
            "maximal field has {} values but the grid has {} cells",
            field.len(),
            grid.cell_count()
        )));
    }
    Ok(LevelSetApprox {
        lambda,
        dim: grid.dim(),
        representation: Representation::Cells {
            grid: grid.clone(),
            cells: field.superlevel(lambda),
            truncated: false,
        },
        source: "grid field".into(),
    })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda >= 0.0 {
        Ok(())
    } else {
        Err(domain(format!("level must be finite and nonnegative, got {lambda}")))
    }
}

/// Minimal ball enclosing the set: padded cell centers, or the outer ray brackets.
pub fn enclosing_ball(set: &LevelSetApprox) -> Result<Ball> {
    let ball = match &set.representation {
        Representation::Cells { .. } => {
            let (grid, inside, cells) = set.mask().expect("cells");
            cells::enclosing_ball(grid, &inside, cells)
        }
        Representation::Rays { center, rays, .. } => {
            let pts: Vec<Point> = rays.iter().map(|r| *center + r.direction * r.r_out).collect();
            min_enclosing_ball(&pts)
        }
    };
    ball.ok_or_else(|| domain("enclosing ball of an empty level set"))
}

/// Largest ball found inside the set: distance-transform maximum or the hint
/// (cells), or the shortest inner bracket around the center (rays).
pub fn inscribed_ball(set: &LevelSetApprox, center_hint: Option<Point>) -> Result<Ball> {
    let ball = match &set.representation {
        Representation::Cells { .. } => {
            let (grid, inside, _) = set.mask().expect("cells");
            cells::inscribed_ball(grid, &inside, center_hint)
        }
        Representation::Rays { center, rays, .. } => rays
            .iter()
            .map(|r| r.r_in)
            .reduce(f64::min)
            .map(|r| Ball::new(*center, r)),
    };
    ball.ok_or_else(|| domain("inscribed ball of an empty level set"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperWitness {
    Enclosing,
    Covering,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CapacityBounds {
    pub lambda: f64,
    pub lower: f64,
    pub upper: f64,
    pub inscribed: Ball,
    pub enclosing: Ball,
    /// One enclosing ball per connected component (cells only).
    pub covering: Vec<Ball>,
    pub upper_witness: UpperWitness,
    /// Lower bound exceeded upper on discretisation error and was lowered.
    pub clamped: bool,
}

pub fn capacity_bounds(set: &LevelSetApprox, profile: &RadialProfile, center_hint: Option<Point>) -> Result<CapacityBounds> {
    let inscribed = inscribed_ball(set, center_hint)?;
    let enclosing = enclosing_ball(set)?;
    let covering: Vec<Ball> = match set.mask() {
        Some((grid, inside, _)) => {
            let comps = cells::components(grid, &inside);
            if comps.len() > 1 {
                comps
                    .iter()
                    .filter_map(|c| cells::enclosing_ball(grid, &inside, c))
                    .collect()
            } else {
                Vec::new()
            }
        }
        None => Vec::new(),
    };
    let enclosing_cap = profile.value(enclosing.radius);
    let covering_cap = if covering.is_empty() {
        f64::INFINITY
    } else {
        covering.iter().map(|b| profile.value(b.radius)).sum()
    };
    let (upper, upper_witness) = if covering_cap < enclosing_cap {
        (covering_cap, UpperWitness::Covering)
    } else {
        (enclosing_cap, UpperWitness::Enclosing)
    };
    let raw_lower = profile.value(inscribed.radius);
    Ok(CapacityBounds {
        lambda: set.lambda,
        lower: raw_lower.min(upper),
        upper,
        inscribed,
        enclosing,
        covering,
        upper_witness,
        clamped: raw_lower > upper,
    })
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetMode {
    /// Cells when the set is certified to fit in the grid, rays otherwise.
    #[default]
    Auto,
    Cells,
    Rays,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LevelSetOptions {
    pub mode: SetMode,
    pub directions: usize,
    pub rel_tol: f64,
    pub radius_cap: f64,
    pub probes: usize,
    pub seed: u64,
    /// Ray center; the mass centroid when absent.
    pub center: Option<Point>,
    /// Evaluation grid for cells mode; a field source's own grid when absent.
    pub grid: Option<Grid>,
}

impl Default for LevelSetOptions {
    fn default() -> Self {
        LevelSetOptions {
            mode: SetMode::Auto,
            directions: 64,
            rel_tol: 1e-6,
            radius_cap: 1e6,
            probes: 32,
            seed: 0,
            center: None,
            grid: None,
        }
    }
}

impl LevelSetOptions {
    pub fn check(&self) -> Result<()> {
        if self.directions < 3 {
            return Err(config(format!("need at least 3 ray directions, got {}", self.directions)));
        }
        if !(self.rel_tol > 0.0 && self.rel_tol < 1.0) {
            return Err(config(format!("ray tolerance must lie in (0, 1), got {}", self.rel_tol)));
        }
        if !(self.radius_cap > 0.0) {
            return Err(config(format!("radius cap must be positive, got {}", self.radius_cap)));
        }
        Ok(())
    }
}

/// Level sets and bounds for one source and profile, with the grid
/// evaluation shared across all cells-mode levels.
pub struct LevelSetEngine<'a, S: MaximalSource + ?Sized> {
    source: &'a S,
    profile: RadialProfile,
    options: LevelSetOptions,
    grid: Option<Grid>,
    center: Point,
    cells_threshold: f64,
    grid_values: OnceLock<MaximalField>,
}

impl<'a, S: MaximalSource + ?Sized> LevelSetEngine<'a, S> {
    pub fn new(source: &'a S, profile: RadialProfile, options: LevelSetOptions) -> Result<Self> {
        options.check()?;
        profile.check()?;
        if source.total_mass() <= 0.0 {
            return Err(domain("level sets of a zero measure are empty"));
        }
        let grid = options.grid.clone().or_else(|| source.grid().cloned());
        if let Some(g) = &grid {
            if g.dim() != source.dim() {
                return Err(config(format!("grid is {}-D but the input is {}-D", g.dim(), source.dim())));
            }
        }
        if options.mode == SetMode::Cells && grid.is_none() {
            return Err(config("cells mode needs an evaluation grid"));
        }
        let center = options.center.unwrap_or_else(|| source.centroid());
        let cells_threshold = grid
            .as_ref()
            .map_or(f64::INFINITY, |g| containment_threshold(source, &profile, g));
        Ok(LevelSetEngine {
            source,
            profile,
            options,
            grid,
            center,
            cells_threshold,
            grid_values: OnceLock::new(),
        })
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.profile
    }

    pub fn options(&self) -> &LevelSetOptions {
        &self.options
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn source(&self) -> &S {
        self.source
    }

    /// Smallest level whose superlevel set is certified to lie inside the grid.
    pub fn cells_threshold(&self) -> f64 {
        self.cells_threshold
    }

    pub fn kind_for(&self, lambda: f64) -> SetKind {
        match self.options.mode {
            SetMode::Cells => SetKind::Cells,
            SetMode::Rays => SetKind::Rays,
            SetMode::Auto if lambda >= self.cells_threshold => SetKind::Cells,
            SetMode::Auto => SetKind::Rays,
        }
    }

    fn grid_values(&self) -> &MaximalField {
        self.grid_values.get_or_init(|| {
            let g = self.grid.as_ref().expect("cells mode has a grid");
            maximal_on_grid(self.source, &self.profile, g)
        })
    }

    pub fn level_set(&self, lambda: f64) -> Result<LevelSetApprox> {
        check_lambda(lambda)?;
        if lambda == 0.0 && self.kind_for(lambda) == SetKind::Rays {
            return Err(domain("the level-0 set is unbounded; use cells mode"));
        }
        let representation = match self.kind_for(lambda) {
            SetKind::Cells => {
                let grid = self.grid.clone().expect("cells mode has a grid");
                Representation::Cells {
                    cells: self.grid_values().superlevel(lambda),
                    truncated: lambda < self.cells_threshold,
                    grid,
                }
            }
            SetKind::Rays => {
                let m0 = self.source.maximal(&self.profile, self.center);
                if !(m0 > lambda) {
                    return Err(domain(format!(
                        "ray center ({}, {}) is not in the level set: M = {m0:e} ≤ λ = {lambda:e}",
                        self.center.x(),
                        self.center.y()
                    )));
                }
                let dirs = ray_directions(self.source.dim(), self.options.directions);
                let settings = rays::RaySettings {
                    rel_tol: self.options.rel_tol,
                    radius_cap: self.options.radius_cap,
                };
                let traced = rays::trace_all(self.source, &self.profile, lambda, self.center, &dirs, settings)?;
                let probes = rays::probe(
                    self.source,
                    &self.profile,
                    lambda,
                    self.center,
                    &traced,
                    self.options.probes,
                    self.options.seed ^ lambda.to_bits(),
                );
                Representation::Rays {
                    center: self.center,
                    rays: traced,
                    probes,
                }
            }
        };
        Ok(LevelSetApprox {
            lambda,
            dim: self.source.dim(),
            representation,
            source: self.source.describe(),
        })
    }

    pub fn bounds(&self, lambda: f64) -> Result<(LevelSetApprox, CapacityBounds)> {
        let set = self.level_set(lambda)?;
        let b = capacity_bounds(&set, &self.profile, Some(self.center))?;
        Ok((set, b))
    }
}

/// `mass / c(gap)`, where `gap` is the distance from the support to the
/// outside of the grid: beyond the grid every centered ball reaching mass
/// has radius at least `gap`.
fn containment_threshold<S: MaximalSource + ?Sized>(source: &S, profile: &RadialProfile, grid: &Grid) -> f64 {
    let (lo, hi) = grid.bounds();
    let c = source.centroid();
    let (_, reach) = source.support_reach(c);
    let mut room = (c.x() - lo.x()).min(hi.x() - c.x());
    if grid.dim() == 2 {
        room = room.min(c.y() - lo.y()).min(hi.y() - c.y());
    }
    let gap = room - reach;
    if gap > 0.0 {
        source.total_mass() / profile.value(gap)
    } else {
        f64::INFINITY
    }
}

/// One link of the covering argument at a single level:
/// `C(E) ≤ Σ c(3rᵢ) ≤ ψ(3) Σ c(rᵢ) ≤ ψ(3)/λ Σ ν(Bᵢ) ≤ ψ(3)/λ ν(ℝⁿ)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VitaliChain {
    pub sample_points: usize,
    pub selected: usize,
    pub dilated_capacity: f64,
    pub psi3_capacity: f64,
    pub psi3_mass_over_lambda: f64,
    pub psi3_total_over_lambda: f64,
    /// Every sampled point of `E_λ` lies in a dilated selected ball.
    pub covered: bool,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weak11Entry {
    pub lambda: f64,
    pub set_mode: SetKind,
    pub upper: f64,
    /// `λ · upper(E_λ)`.
    pub lhs: f64,
    /// `γ · ν(ℝⁿ)`.
    pub rhs: f64,
    pub passed: bool,
    pub chain: Option<VitaliChain>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Weak11Report {
    pub gamma: f64,
    pub mass: f64,
    /// `max λ·upper / mass` over the run.
    pub empirical_constant: f64,
    pub entries: Vec<Weak11Entry>,
    pub violations: usize,
}

impl Weak11Report {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

const CHAIN_TOL: f64 = 1e-12;
const BALL_INFLATION: f64 = 1e-9;

fn sample_points(set: &LevelSetApprox, limit: usize) -> Vec<Point> {
    match &set.representation {
        Representation::Cells { grid, cells, .. } => {
            let step = cells.len().div_ceil(limit.max(1)).max(1);
            cells.iter().step_by(step).map(|&k| grid.cell_center(k)).collect()
        }
        Representation::Rays { center, rays, .. } => {
            let mut pts = vec![*center];
            for r in rays {
                for u in [0.25, 0.5, 0.75, 1.0] {
                    pts.push(*center + r.direction * (u * r.r_in));
                }
            }
            pts.truncate(limit.max(1));
            pts
        }
    }
}

/// Runs the covering argument on sampled points of `E_λ`: each point `x`
/// gets a ball `B ∋ x` with `ν(B) > λ c(r)`, the largest-first disjoint
/// subfamily is extracted, and every inequality of the chain is evaluated.
pub fn vitali_chain<S: MaximalSource + ?Sized>(
    source: &S,
    profile: &RadialProfile,
    set: &LevelSetApprox,
    sample_limit: usize,
) -> Result<VitaliChain> {
    let lambda = set.lambda;
    if !(lambda > 0.0) {
        return Err(domain("the covering chain needs λ > 0"));
    }
    let pts = sample_points(set, sample_limit);
    let mut balls = Vec::with_capacity(pts.len());
    for x in &pts {
        let sup = source.supremum(profile, *x);
        if !(sup.value > lambda) {
            continue;
        }
        // At an atom the maximising radius is 0; any radius below c⁻¹(ν/λ) works.
        let r = if sup.radius > 0.0 {
            sup.radius
        } else {
            0.5 * profile.inverse(sup.enclosed / lambda)
        };
        // Slightly enlarged so that balls touching only at a boundary atom are
        // not declared disjoint on roundoff.
        let r = r * (1.0 + BALL_INFLATION);
        if source.ball_mass(*x, r) > lambda * profile.value(r) {
            balls.push((Ball::new(*x, r), sup.enclosed));
        }
    }
    let family = BallFamily::new(source.dim(), balls.iter().map(|b| b.0).collect())?;
    let selection = greedy_disjoint_subfamily(&family);
    let psi3 = profile.scaling_envelope().psi(3.0);
    let dilated_capacity: f64 = selection.balls.iter().map(|b| profile.value(3.0 * b.radius)).sum();
    let base: f64 = selection.balls.iter().map(|b| profile.value(b.radius)).sum();
    let enclosed: f64 = selection.balls.iter().map(|b| source.ball_mass(b.center, b.radius)).sum();
    let dilated: Vec<Ball> = selection.balls.iter().map(|b| b.dilate(selection.dilation)).collect();
    let covered = pts
        .iter()
        .zip(&balls)
        .all(|(_, (b, _))| dilated.iter().any(|d| d.contains_with_slack(b.center, CHAIN_TOL)));
    let chain = VitaliChain {
        sample_points: pts.len(),
        selected: selection.len(),
        dilated_capacity,
        psi3_capacity: psi3 * base,
        psi3_mass_over_lambda: psi3 * enclosed / lambda,
        psi3_total_over_lambda: psi3 * source.total_mass() / lambda,
        covered,
        holds: false,
    };
    let le = |a: f64, b: f64| a <= b * (1.0 + CHAIN_TOL);
    let holds = covered
        && le(chain.dilated_capacity, chain.psi3_capacity)
        && le(chain.psi3_capacity, chain.psi3_mass_over_lambda)
        && le(chain.psi3_mass_over_lambda, chain.psi3_total_over_lambda);
    Ok(VitaliChain { holds, ..chain })
}

/// Checks `λ · upper(E_λ) ≤ ψ(3) · ν(ℝⁿ)` at every level, alongside the
/// covering chain that produces the constant.
pub fn weak11_bound_check<S: MaximalSource + ?Sized>(engine: &LevelSetEngine<'_, S>, lambdas: &[f64]) -> Result<Weak11Report> {
    let profile = engine.profile();
    let gamma = profile.scaling_envelope().psi(3.0);
    let mass = engine.source().total_mass();
    let mut entries = Vec::with_capacity(lambdas.len());
    for &lambda in lambdas {
        let (set, b) = engine.bounds(lambda)?;
        let lhs = lambda * b.upper;
        let rhs = gamma * mass;
        let chain = vitali_chain(engine.source(), profile, &set, 2000)?;
        entries.push(Weak11Entry {
            lambda,
            set_mode: set.kind(),
            upper: b.upper,
            lhs,
            rhs,
            passed: lhs <= rhs && chain.holds,
            chain: Some(chain),
        });
    }
    let empirical_constant = entries.iter().map(|e| e.lhs / mass).fold(0.0, f64::max);
    let violations = entries.iter().filter(|e| !e.passed).count();
    Ok(Weak11Report {
        gamma,
        mass,
        empirical_constant,
        entries,
        violations,
    })
}
