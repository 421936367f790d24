//! The run configuration: one JSON document per run.

use std::fs::File;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use capmax::geom::Ball;
use capmax::maximal::FieldMaximal;
use capmax::setcap::{BallFamily, SetMode};
use capmax::weaktype::{lambda_schedule, smallest_feasible_lambda};
use capmax::{Atom, AtomicMeasure, FieldPreset, Grid, LevelSetEngine, LevelSetOptions, MaximalSource, Point, RadialProfile, RadiusPolicy, ScalarField};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub profile: Option<ProfileSpec>,
    /// Profiles for the verification suite; defaults to the built-in trio.
    #[serde(default)]
    pub profiles: Vec<ProfileSpec>,
    pub input: Option<InputSpec>,
    /// Inputs for the verification suite; defaults to the built-in four.
    #[serde(default)]
    pub inputs: Vec<InputSpec>,
    pub grid: Option<GridSpec>,
    pub lambdas: Option<LambdaSpec>,
    pub t_schedule: Option<Vec<f64>>,
    #[serde(default = "default_true")]
    pub centered: bool,
    #[serde(default)]
    pub set_mode: SetMode,
    pub directions: Option<usize>,
    pub radius_cap: Option<f64>,
    pub radius_policy: Option<RadiusPolicy>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    pub balls: Option<Vec<BallSpec>>,
    pub random_balls: Option<RandomBalls>,
    pub probes: Option<usize>,
}

fn default_true() -> bool {
    true
}

/// `lebesgue` takes its dimension from the input when `n` is omitted.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileSpec {
    Lebesgue { n: Option<usize> },
    PowerLaw { kappa: f64, d: f64 },
    Wobble { kappa: f64, d: f64, epsilon: f64 },
}

impl ProfileSpec {
    pub fn resolve(&self, dim: usize) -> Result<RadialProfile> {
        Ok(match *self {
            ProfileSpec::Lebesgue { n } => {
                let n = n.unwrap_or(dim);
                ensure!(n == dim, "lebesgue({n}) profile paired with a {dim}-D input");
                RadialProfile::lebesgue(n)?
            }
            ProfileSpec::PowerLaw { kappa, d } => RadialProfile::power_law(kappa, d)?,
            ProfileSpec::Wobble { kappa, d, epsilon } => RadialProfile::wobble(kappa, d, epsilon)?,
        })
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dim: usize,
    pub h: f64,
    /// Symmetric box `[−half_width, half_width]ⁿ`.
    pub half_width: Option<f64>,
    pub origin: Option<Vec<f64>>,
    pub extents: Option<Vec<usize>>,
}

impl GridSpec {
    pub fn build(&self) -> Result<Grid> {
        match (self.half_width, &self.origin, &self.extents) {
            (Some(w), None, None) => Ok(Grid::centered(self.dim, w, self.h)?),
            (None, Some(o), Some(e)) => Ok(Grid::new(self.dim, o, self.h, e)?),
            _ => bail!("grid needs either half_width or both origin and extents"),
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub position: Vec<f64>,
    pub weight: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InputSpec {
    Delta { dim: usize },
    TwoAtoms { dim: usize },
    Atoms { dim: usize, atoms: Vec<AtomSpec> },
    GaussianSample { dim: usize, count: usize, sigma: f64 },
    /// A density preset sampled on `grid`, or the run grid when absent.
    Preset { preset: FieldPreset, grid: Option<GridSpec> },
    /// Cell values in the exported field format, placed on `grid`.
    FieldCsv { path: PathBuf, grid: Option<GridSpec> },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(untagged)]
pub enum LambdaSpec {
    List(Vec<f64>),
    Geometric {
        hi: f64,
        /// Defaults to the smallest level the ray march can bracket.
        lo: Option<f64>,
        per_decade: usize,
    },
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BallSpec {
    pub center: Vec<f64>,
    pub radius: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBalls {
    pub dim: usize,
    pub count: usize,
    pub extent: f64,
    pub r_min: f64,
    pub r_max: f64,
}

/// A resolved input: either exact atoms or a sampled field.
pub enum Input {
    Atoms(AtomicMeasure),
    Field(ScalarField),
}

impl Input {
    pub fn dim(&self) -> usize {
        match self {
            Input::Atoms(a) => a.dim(),
            Input::Field(f) => f.dim(),
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            Input::Atoms(a) => a.total_mass(),
            Input::Field(f) => f.mass(),
        }
    }
}

fn point(coords: &[f64], dim: usize) -> Result<Point> {
    ensure!(coords.len() == dim, "expected {dim} coordinates, got {}", coords.len());
    Ok(Point::from_slice(coords)?)
}

impl InputSpec {
    pub fn label(&self) -> String {
        match self {
            InputSpec::Delta { dim } => format!("delta({dim}d)"),
            InputSpec::TwoAtoms { dim } => format!("two_atoms({dim}d)"),
            InputSpec::Atoms { dim, atoms } => format!("atoms({dim}d, {})", atoms.len()),
            InputSpec::GaussianSample { dim, count, sigma } => format!("gaussian_sample({dim}d, {count}, {sigma})"),
            InputSpec::Preset { preset, grid } => match grid {
                Some(g) => format!("{}({}d)", preset.describe(), g.dim),
                None => preset.describe(),
            },
            InputSpec::FieldCsv { path, .. } => format!("field_csv({})", path.display()),
        }
    }

    /// Builds the input; `fallback` is the run grid for field inputs without their own.
    pub fn build(&self, fallback: Option<&GridSpec>, seed: u64, base: &Path) -> Result<Input> {
        let grid_for = |own: &Option<GridSpec>| -> Result<Grid> {
            own.as_ref()
                .or(fallback)
                .context("field input needs a grid spec")?
                .build()
        };
        let input = match self {
            InputSpec::Delta { dim } => Input::Atoms(AtomicMeasure::delta(*dim)?),
            InputSpec::TwoAtoms { dim } => Input::Atoms(AtomicMeasure::two_atoms(*dim)?),
            InputSpec::Atoms { dim, atoms } => {
                let atoms = atoms
                    .iter()
                    .map(|a| {
                        Ok(Atom {
                            position: point(&a.position, *dim)?,
                            weight: a.weight,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Input::Atoms(AtomicMeasure::new(*dim, atoms)?)
            }
            InputSpec::GaussianSample { dim, count, sigma } => {
                Input::Atoms(AtomicMeasure::gaussian_sample(*dim, *count, *sigma, seed)?)
            }
            InputSpec::Preset { preset, grid } => Input::Field(ScalarField::from_preset(*preset, grid_for(grid)?)?),
            InputSpec::FieldCsv { path, grid } => {
                let path = base.join(path);
                let file = File::open(&path).with_context(|| format!("cannot read field csv {}", path.display()))?;
                Input::Field(ScalarField::read_csv(grid_for(grid)?, BufReader::new(file))?)
            }
        };
        ensure!(input.mass() > 0.0, "input {} has zero mass", self.label());
        Ok(input)
    }
}

/// Field inputs are wrapped with the configured radius policy.
pub enum Source<'a> {
    Atoms(&'a AtomicMeasure),
    Field(FieldMaximal),
}

impl<'a> Source<'a> {
    pub fn new(input: &'a Input, policy: RadiusPolicy) -> Result<Self> {
        Ok(match input {
            Input::Atoms(a) => Source::Atoms(a),
            Input::Field(f) => Source::Field(FieldMaximal::new(f, policy)?),
        })
    }

    pub fn as_dyn(&self) -> &dyn MaximalSource {
        match self {
            Source::Atoms(a) => *a,
            Source::Field(f) => f,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: RunConfig =
            serde_json::from_str(&text).with_context(|| format!("malformed config {}", path.display()))?;
        ensure!(cfg.schema == SCHEMA, "unsupported config schema {} (expected {SCHEMA})", cfg.schema);
        Ok(cfg)
    }

    pub fn level_set_options(&self, grid: Option<Grid>) -> LevelSetOptions {
        let mut o = LevelSetOptions {
            mode: self.set_mode,
            seed: self.seed,
            grid,
            ..LevelSetOptions::default()
        };
        if let Some(d) = self.directions {
            o.directions = d;
        }
        if let Some(c) = self.radius_cap {
            o.radius_cap = c;
        }
        o
    }

    pub fn policy(&self) -> RadiusPolicy {
        self.radius_policy.unwrap_or_default()
    }

    /// The λ schedule, resolved against an engine when its lower end is left open.
    pub fn lambdas<S: MaximalSource + ?Sized>(&self, engine: &LevelSetEngine<'_, S>) -> Result<Vec<f64>> {
        let spec = self.lambdas.clone().unwrap_or(LambdaSpec::Geometric {
            hi: 0.1,
            lo: None,
            per_decade: 10,
        });
        let out = match spec {
            LambdaSpec::List(l) => l,
            LambdaSpec::Geometric { hi, lo, per_decade } => {
                let lo = lo.unwrap_or_else(|| smallest_feasible_lambda(engine));
                ensure!(lo.is_finite() && lo < hi, "λ schedule from {hi} down to {lo} is empty");
                lambda_schedule(hi, lo, per_decade)?
            }
        };
        check_schedule("λ", &out)?;
        Ok(out)
    }

    pub fn t_schedule(&self) -> Result<Vec<f64>> {
        let t = self.t_schedule.clone().unwrap_or_else(|| vec![1.0, 0.5, 0.1, 0.01]);
        check_schedule("t", &t)?;
        Ok(t)
    }

    pub fn ball_family(&self) -> Result<BallFamily> {
        match (&self.balls, &self.random_balls) {
            (Some(balls), None) => {
                let dim = match balls.first() {
                    Some(b) => b.center.len(),
                    None => bail!("ball family is empty"),
                };
                let balls = balls
                    .iter()
                    .map(|b| Ok(Ball::new(point(&b.center, dim)?, b.radius)))
                    .collect::<Result<Vec<_>>>()?;
                Ok(BallFamily::new(dim, balls)?)
            }
            (None, Some(r)) => {
                ensure!(r.count > 0, "random ball family needs count ≥ 1");
                Ok(BallFamily::random(r.dim, r.count, r.extent, r.r_min, r.r_max, self.seed)?)
            }
            _ => bail!("covering needs exactly one of balls or random_balls"),
        }
    }
}

fn check_schedule(name: &str, s: &[f64]) -> Result<()> {
    ensure!(!s.is_empty(), "{name} schedule is empty");
    ensure!(
        s.iter().all(|v| v.is_finite() && *v > 0.0),
        "{name} schedule must be positive and finite"
    );
    ensure!(
        s.windows(2).all(|w| w[1] < w[0]),
        "{name} schedule must be strictly decreasing"
    );
    Ok(())
}
