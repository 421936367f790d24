//! Inputs of the maximal operator: grid-sampled densities and finite atomic measures.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::capacity::unit_ball_volume;
use crate::csv;
use crate::error::{config, domain, Error, Result};
use crate::geom::{check_dim, Point};

pub const DEFAULT_CELL_BUDGET: usize = 1 << 24;

/// Uniform cell grid over an axis-aligned box in ℝⁿ, n ∈ {1, 2}.
///
/// Cells are stored axis-major with the first axis fastest:
/// `index = i + j · extents[0]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    origin: Point,
    h: f64,
    extents: [usize; 2],
}

impl Grid {
    /// `origin` is the lower corner of the box, `extents` the cell count per axis.
    pub fn new(n: usize, origin: &[f64], h: f64, extents: &[usize]) -> Result<Self> {
        Self::with_budget(n, origin, h, extents, DEFAULT_CELL_BUDGET)
    }

    pub fn with_budget(n: usize, origin: &[f64], h: f64, extents: &[usize], budget: usize) -> Result<Self> {
        check_dim(n)?;
        if origin.len() != n || extents.len() != n {
            return Err(config(format!(
                "grid of dimension {n} needs {n} origin coordinates and {n} extents"
            )));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(config(format!("cell spacing must be positive, got {h}")));
        }
        if extents.contains(&0) {
            return Err(config("every grid extent must be positive"));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(config("grid origin must be finite"));
        }
        let count = extents.iter().try_fold(1usize, |acc, &e| acc.checked_mul(e));
        match count {
            Some(c) if c <= budget => {}
            _ => {
                return Err(config(format!(
                    "grid {extents:?} exceeds the cell budget of {budget}"
                )))
            }
        }
        let ext = if n == 1 { [extents[0], 1] } else { [extents[0], extents[1]] };
        Ok(Grid {
            n,
            origin: Point::from_slice(origin)?,
            h,
            extents: ext,
        })
    }

    /// Grid on `[−half_width, half_width]ⁿ`, symmetric about the origin.
    pub fn centered(n: usize, half_width: f64, h: f64) -> Result<Self> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(config(format!("half width must be positive, got {half_width}")));
        }
        if !(h.is_finite() && h > 0.0) {
            return Err(config(format!("cell spacing must be positive, got {h}")));
        }
        let e = (2.0 * half_width / h).ceil() as usize;
        let o = -(e as f64 * h * 0.5);
        Grid::new(n, &vec![o; n], h, &vec![e; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.h
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents[..self.n]
    }

    pub(crate) fn extents2(&self) -> [usize; 2] {
        self.extents
    }

    pub fn cell_count(&self) -> usize {
        self.extents[0] * self.extents[1]
    }

    /// `hⁿ`.
    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.n as i32)
    }

    /// Box midpoint; cell centers are computed relative to it so that grids
    /// symmetric about the origin have exactly mirrored centers.
    pub(crate) fn mid(&self) -> Point {
        let half = 0.5 * self.h;
        let mx = self.origin.x() + self.extents[0] as f64 * half;
        let my = if self.n == 1 {
            0.0
        } else {
            self.origin.y() + self.extents[1] as f64 * half
        };
        Point::new(mx, my)
    }

    /// Axis offset of cell `i` from the box midpoint.
    #[inline]
    pub(crate) fn axis_offset(&self, i: usize, axis: usize) -> f64 {
        (2.0 * i as f64 + 1.0 - self.extents[axis] as f64) * (0.5 * self.h)
    }

    pub fn cell_center_ij(&self, i: usize, j: usize) -> Point {
        let mid = self.mid();
        let x = mid.x() + self.axis_offset(i, 0);
        let y = if self.n == 1 { 0.0 } else { mid.y() + self.axis_offset(j, 1) };
        Point::new(x, y)
    }

    pub fn cell_center(&self, index: usize) -> Point {
        let (i, j) = self.cell_ij(index);
        self.cell_center_ij(i, j)
    }

    pub fn cell_ij(&self, index: usize) -> (usize, usize) {
        (index % self.extents[0], index / self.extents[0])
    }

    pub fn cell_index(&self, i: usize, j: usize) -> usize {
        i + j * self.extents[0]
    }

    pub fn centers(&self) -> Vec<Point> {
        (0..self.cell_count()).map(|k| self.cell_center(k)).collect()
    }

    /// Lower and upper corners of the box (second coordinate 0 when n = 1).
    pub fn bounds(&self) -> (Point, Point) {
        let lo = self.origin;
        let hi_x = lo.x() + self.extents[0] as f64 * self.h;
        if self.n == 1 {
            (Point::on_line(lo.x()), Point::on_line(hi_x))
        } else {
            (lo, Point::new(hi_x, lo.y() + self.extents[1] as f64 * self.h))
        }
    }

    /// Whether the axis-aligned box `[lo, hi]` lies inside the grid box.
    pub fn contains_box(&self, lo: Point, hi: Point) -> bool {
        let (glo, ghi) = self.bounds();
        (0..self.n).all(|a| glo.0[a] <= lo.0[a] && hi.0[a] <= ghi.0[a])
    }

    pub fn diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.dist(hi)
    }
}

/// Density presets, all centered at the origin.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldPreset {
    IndicatorBall { radius: f64 },
    /// Normalised isotropic Gaussian density.
    Gaussian { sigma: f64 },
    /// Indicators of two balls centered at `±separation/2 · e₁`.
    TwoBumps { radius: f64, separation: f64 },
}

/// Gaussian samples beyond this many standard deviations are negligible.
const GAUSSIAN_SUPPORT_SIGMAS: f64 = 5.0;

impl FieldPreset {
    pub fn describe(&self) -> String {
        match *self {
            FieldPreset::IndicatorBall { radius } => format!("indicator_ball({radius})"),
            FieldPreset::Gaussian { sigma } => format!("gaussian({sigma})"),
            FieldPreset::TwoBumps { radius, separation } => format!("two_bumps({radius}, {separation})"),
        }
    }

    fn check(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v > 0.0;
        let valid = match *self {
            FieldPreset::IndicatorBall { radius } => ok(radius),
            FieldPreset::Gaussian { sigma } => ok(sigma),
            FieldPreset::TwoBumps { radius, separation } => ok(radius) && ok(separation),
        };
        if !valid {
            return Err(config(format!("preset parameters must be positive: {self:?}")));
        }
        if let FieldPreset::TwoBumps { radius, separation } = *self {
            if separation <= 2.0 * radius {
                return Err(config(format!(
                    "two_bumps separation {separation} must exceed twice the radius {radius}"
                )));
            }
        }
        Ok(())
    }

    /// Half-extents of the box that must fit inside the grid.
    fn support_half_extents(&self) -> (f64, f64) {
        match *self {
            FieldPreset::IndicatorBall { radius } => (radius, radius),
            FieldPreset::Gaussian { sigma } => (GAUSSIAN_SUPPORT_SIGMAS * sigma, GAUSSIAN_SUPPORT_SIGMAS * sigma),
            FieldPreset::TwoBumps { radius, separation } => (0.5 * separation + radius, radius),
        }
    }

    fn density(&self, n: usize, p: Point) -> f64 {
        match *self {
            FieldPreset::IndicatorBall { radius } => {
                if p.norm() <= radius {
                    1.0
                } else {
                    0.0
                }
            }
            FieldPreset::Gaussian { sigma } => {
                let norm = (2.0 * PI * sigma * sigma).powf(-0.5 * n as f64);
                norm * (-p.dist_sq(Point::ORIGIN) / (2.0 * sigma * sigma)).exp()
            }
            FieldPreset::TwoBumps { radius, separation } => {
                let c = Point::on_line(0.5 * separation);
                if p.dist(c) <= radius || p.dist(Point::ORIGIN - c) <= radius {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    fn analytic_mass(&self, n: usize) -> f64 {
        match *self {
            FieldPreset::IndicatorBall { radius } => unit_ball_volume(n) * radius.powi(n as i32),
            FieldPreset::Gaussian { .. } => 1.0,
            FieldPreset::TwoBumps { radius, .. } => 2.0 * unit_ball_volume(n) * radius.powi(n as i32),
        }
    }
}

/// Nonnegative samples of `|f|` at cell centers.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Grid,
    samples: Vec<f64>,
    analytic_mass: Option<f64>,
}

impl ScalarField {
    pub fn new(grid: Grid, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != grid.cell_count() {
            return Err(config(format!(
                "{} samples for a grid of {} cells",
                samples.len(),
                grid.cell_count()
            )));
        }
        if let Some((k, v)) = samples.iter().enumerate().find(|(_, v)| !(v.is_finite() && **v >= 0.0)) {
            return Err(domain(format!("sample {k} is {v}; samples must be finite and nonnegative")));
        }
        Ok(ScalarField {
            grid,
            samples,
            analytic_mass: None,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        let samples = vec![0.0; grid.cell_count()];
        ScalarField {
            grid,
            samples,
            analytic_mass: None,
        }
    }

    pub fn from_preset(preset: FieldPreset, grid: Grid) -> Result<Self> {
        preset.check()?;
        let n = grid.dim();
        let (hx, hy) = preset.support_half_extents();
        let (lo, hi) = if n == 1 {
            (Point::on_line(-hx), Point::on_line(hx))
        } else {
            (Point::new(-hx, -hy), Point::new(hx, hy))
        };
        if !grid.contains_box(lo, hi) {
            return Err(config(format!(
                "support of {} exceeds the grid box {:?}",
                preset.describe(),
                grid.bounds()
            )));
        }
        let samples = (0..grid.cell_count())
            .map(|k| preset.density(n, grid.cell_center(k)))
            .collect();
        Ok(ScalarField {
            grid,
            samples,
            analytic_mass: Some(preset.analytic_mass(n)),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn analytic_mass(&self) -> Option<f64> {
        self.analytic_mass
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    /// `Σ samples · hⁿ`, summed in storage order.
    pub fn mass(&self) -> f64 {
        let vol = self.grid.cell_volume();
        self.samples.iter().fold(0.0, |acc, s| acc + s * vol)
    }

    /// Every sample multiplied by `a ≥ 0`.
    pub fn scaled(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(domain(format!("field scale must be finite and nonnegative, got {a}")));
        }
        Ok(ScalarField {
            grid: self.grid.clone(),
            samples: self.samples.iter().map(|s| s * a).collect(),
            analytic_mass: self.analytic_mass.map(|m| m * a),
        })
    }

    /// The field divided by its cell mass.
    pub fn normalized(&self) -> Result<Self> {
        let m = self.mass();
        if m <= 0.0 {
            return Err(domain("cannot normalise a field of zero mass"));
        }
        let mut out = self.scaled(1.0 / m)?;
        out.analytic_mass = self.analytic_mass.map(|a| a / m);
        Ok(out)
    }

    /// One atom per nonzero cell at its center, weight `sample · hⁿ`.
    pub fn to_measure(&self) -> Result<AtomicMeasure> {
        let vol = self.grid.cell_volume();
        let atoms: Vec<Atom> = self
            .samples
            .iter()
            .enumerate()
            .filter(|(_, s)| **s > 0.0)
            .map(|(k, s)| Atom {
                position: self.grid.cell_center(k),
                weight: s * vol,
            })
            .collect();
        if atoms.is_empty() {
            return Err(domain("field has zero mass"));
        }
        AtomicMeasure::new(self.dim(), atoms)
    }

    /// Relative gap between the cell mass and the analytic mass, when known.
    pub fn mass_discrepancy(&self) -> Option<f64> {
        self.analytic_mass.map(|a| (self.mass() - a).abs() / a)
    }

    /// CSV with columns `index, x[, y], value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let n = self.dim();
        let header: Vec<String> = std::iter::once("index")
            .chain(["x", "y"][..n].iter().copied())
            .chain(std::iter::once("value"))
            .map(String::from)
            .collect();
        csv::write_row(&mut w, &header)?;
        for (k, s) in self.samples.iter().enumerate() {
            let c = self.grid.cell_center(k);
            let mut row = vec![k.to_string()];
            row.extend(c.coords(n).iter().map(|v| csv::num(*v)));
            row.push(csv::num(*s));
            csv::write_row(&mut w, &row)?;
        }
        Ok(())
    }

    /// Reads the format written by [`ScalarField::write_csv`] onto `grid`.
    /// Cells absent from the file are zero; coordinates must match the grid.
    pub fn read_csv<R: BufRead>(grid: Grid, r: R) -> Result<Self> {
        let n = grid.dim();
        let mut samples = vec![0.0; grid.cell_count()];
        for rec in csv::records(r) {
            let (line, fields) = rec?;
            if fields.len() != n + 2 {
                return Err(Error::Csv {
                    line,
                    message: format!("expected {} columns, found {}", n + 2, fields.len()),
                });
            }
            let k: usize = fields[0].parse().map_err(|_| Error::Csv {
                line,
                message: format!("bad cell index {:?}", fields[0]),
            })?;
            if k >= samples.len() {
                return Err(Error::Csv {
                    line,
                    message: format!("cell index {k} outside the grid"),
                });
            }
            let c = grid.cell_center(k);
            for a in 0..n {
                let v = csv::parse_num(&fields[1 + a], line)?;
                if (v - c.0[a]).abs() > 1e-6 * grid.spacing() {
                    return Err(Error::Csv {
                        line,
                        message: format!("coordinate {v} does not match cell {k} center {}", c.0[a]),
                    });
                }
            }
            samples[k] = csv::parse_num(&fields[n + 1], line)?;
        }
        ScalarField::new(grid, samples)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub position: Point,
    pub weight: f64,
}

/// Finite nonnegative measure `Σ w_i δ_{x_i}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomicMeasure {
    n: usize,
    atoms: Vec<Atom>,
}

impl AtomicMeasure {
    pub fn new(n: usize, atoms: Vec<Atom>) -> Result<Self> {
        check_dim(n)?;
        for a in &atoms {
            if !(a.weight.is_finite() && a.weight >= 0.0) {
                return Err(domain(format!("atom weight must be finite and nonnegative, got {}", a.weight)));
            }
            if !a.position.is_finite() {
                return Err(domain("atom position must be finite"));
            }
            if n == 1 && a.position.y() != 0.0 {
                return Err(domain("one-dimensional atoms must have zero second coordinate"));
            }
        }
        Ok(AtomicMeasure { n, atoms })
    }

    /// Unit point mass at the origin.
    pub fn delta(n: usize) -> Result<Self> {
        AtomicMeasure::new(
            n,
            vec![Atom {
                position: Point::ORIGIN,
                weight: 1.0,
            }],
        )
    }

    /// Weight ½ at `±e₁`.
    pub fn two_atoms(n: usize) -> Result<Self> {
        AtomicMeasure::new(
            n,
            vec![
                Atom {
                    position: Point::on_line(-1.0),
                    weight: 0.5,
                },
                Atom {
                    position: Point::on_line(1.0),
                    weight: 0.5,
                },
            ],
        )
    }

    /// `count` atoms of weight `1/count` drawn from an isotropic Gaussian.
    pub fn gaussian_sample(n: usize, count: usize, sigma: f64, seed: u64) -> Result<Self> {
        if count == 0 || !(sigma.is_finite() && sigma > 0.0) {
            return Err(domain("gaussian sample needs count ≥ 1 and sigma > 0"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = 1.0 / count as f64;
        let atoms = (0..count)
            .map(|_| {
                let x: f64 = StandardNormal.sample(&mut rng);
                let y: f64 = if n == 2 { StandardNormal.sample(&mut rng) } else { 0.0 };
                Atom {
                    position: Point::new(sigma * x, sigma * y),
                    weight: w,
                }
            })
            .collect();
        AtomicMeasure::new(n, atoms)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.iter().all(|a| a.weight == 0.0)
    }

    /// `ν(ℝⁿ)`, summed in atom order.
    pub fn total_mass(&self) -> f64 {
        self.atoms.iter().fold(0.0, |acc, a| acc + a.weight)
    }

    /// `ν_t(E) = ν(E/t)`: every atom moves to `t·x`.
    pub fn scale(&self, t: f64) -> Result<Self> {
        if !(t.is_finite() && t > 0.0) {
            return Err(domain(format!("scale must be positive, got {t}")));
        }
        Ok(AtomicMeasure {
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .map(|a| Atom {
                    position: a.position * t,
                    weight: a.weight,
                })
                .collect(),
        })
    }

    /// Weights divided by the total mass.
    pub fn normalize(&self) -> Result<Self> {
        let m = self.total_mass();
        if m <= 0.0 {
            return Err(domain("cannot normalise a measure of zero mass"));
        }
        if m == 1.0 {
            return Ok(self.clone());
        }
        self.weighted(1.0 / m)
    }

    /// Every weight multiplied by `a ≥ 0`.
    pub fn weighted(&self, a: f64) -> Result<Self> {
        if !(a.is_finite() && a >= 0.0) {
            return Err(domain(format!("weight factor must be finite and nonnegative, got {a}")));
        }
        Ok(AtomicMeasure {
            n: self.n,
            atoms: self
                .atoms
                .iter()
                .map(|x| Atom {
                    position: x.position,
                    weight: x.weight * a,
                })
                .collect(),
        })
    }

    pub fn with_atom(&self, atom: Atom) -> Result<Self> {
        let mut atoms = self.atoms.clone();
        atoms.push(atom);
        AtomicMeasure::new(self.n, atoms)
    }

    /// `ν(B̄(center, r))` by enumeration.
    pub fn mass_in_closed_ball(&self, center: Point, r: f64) -> f64 {
        self.atoms
            .iter()
            .filter(|a| a.position.dist(center) <= r)
            .fold(0.0, |acc, a| acc + a.weight)
    }

    /// Mass-weighted mean position (origin for an empty measure).
    pub fn centroid(&self) -> Point {
        let m = self.total_mass();
        if m <= 0.0 {
            return Point::ORIGIN;
        }
        let s = self
            .atoms
            .iter()
            .fold(Point::ORIGIN, |acc, a| acc + a.position * a.weight);
        s * (1.0 / m)
    }

    pub fn describe(&self) -> String {
        format!("atoms(n={}, count={}, mass={})", self.n, self.atoms.len(), self.total_mass())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn indicator_mass_1d() {
        let g = Grid::centered(1, 2.0, 0.01).unwrap();
        let f = ScalarField::from_preset(FieldPreset::IndicatorBall { radius: 1.0 }, g).unwrap();
        assert!((f.mass() - 2.0).abs() <= 0.02);
        assert_eq!(f.analytic_mass(), Some(2.0));
    }

    #[test]
    fn indicator_mass_2d() {
        let g = Grid::centered(2, 1.5, 0.01).unwrap();
        let f = ScalarField::from_preset(FieldPreset::IndicatorBall { radius: 1.0 }, g).unwrap();
        assert!((f.mass() - PI).abs() <= 0.01 * PI);
    }

    #[test]
    fn gaussian_mass_2d() {
        let g = Grid::centered(2, 8.0, 0.05).unwrap();
        let f = ScalarField::from_preset(FieldPreset::Gaussian { sigma: 1.0 }, g).unwrap();
        assert!((f.mass() - 1.0).abs() <= 0.01);
    }

    #[test]
    fn two_bumps_mass() {
        let g = Grid::centered(2, 3.0, 0.01).unwrap();
        let f = ScalarField::from_preset(
            FieldPreset::TwoBumps {
                radius: 0.5,
                separation: 4.0,
            },
            g,
        )
        .unwrap();
        assert_eq!(f.analytic_mass(), Some(PI / 2.0));
        assert!((f.mass() - PI / 2.0).abs() <= 0.01 * PI / 2.0);
        assert!(f.mass_discrepancy().unwrap() < 0.02);
    }

    #[test]
    fn support_outside_grid_is_config_error() {
        let g = Grid::centered(1, 0.5, 0.01).unwrap();
        let e = ScalarField::from_preset(FieldPreset::IndicatorBall { radius: 1.0 }, g).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        let g = Grid::centered(2, 4.0, 0.1).unwrap();
        assert!(ScalarField::from_preset(FieldPreset::Gaussian { sigma: 1.0 }, g).is_err());
    }

    #[test]
    fn cell_budget_is_enforced() {
        assert!(Grid::with_budget(2, &[0.0, 0.0], 1.0, &[100, 100], 9_999).is_err());
        assert!(Grid::with_budget(2, &[0.0, 0.0], 1.0, &[100, 100], 10_000).is_ok());
        assert!(Grid::new(1, &[0.0], 0.0, &[10]).is_err());
        assert!(Grid::new(3, &[0.0; 3], 1.0, &[2; 3]).is_err());
    }

    #[test]
    fn zero_field_has_zero_mass() {
        let f = ScalarField::zeros(Grid::centered(2, 1.0, 0.1).unwrap());
        assert_eq!(f.mass(), 0.0);
        assert!(matches!(f.to_measure(), Err(Error::Domain(_))));
    }

    #[test]
    fn centered_presets_are_mirror_symmetric() {
        for preset in [FieldPreset::IndicatorBall { radius: 1.0 }, FieldPreset::Gaussian { sigma: 0.7 }] {
            let g = Grid::centered(2, 4.0, 0.13).unwrap();
            let f = ScalarField::from_preset(preset, g.clone()).unwrap();
            let [ex, ey] = g.extents2();
            for j in 0..ey {
                for i in 0..ex {
                    let a = f.samples()[g.cell_index(i, j)];
                    assert_eq!(a, f.samples()[g.cell_index(ex - 1 - i, j)]);
                    assert_eq!(a, f.samples()[g.cell_index(i, ey - 1 - j)]);
                }
            }
        }
    }

    #[test]
    fn field_to_measure_preserves_mass_exactly() {
        let g = Grid::centered(2, 8.0, 0.1).unwrap();
        let f = ScalarField::from_preset(FieldPreset::Gaussian { sigma: 1.0 }, g).unwrap();
        let nu = f.to_measure().unwrap();
        assert_eq!(nu.total_mass(), f.mass());
        let unit = nu.normalize().unwrap();
        assert!((unit.total_mass() - 1.0).abs() <= 1e-15);
    }

    #[test]
    fn single_cell_measure() {
        let g = Grid::centered(2, 1.0, 0.5).unwrap();
        let mut s = vec![0.0; g.cell_count()];
        s[5] = 3.0;
        let f = ScalarField::new(g.clone(), s).unwrap();
        let nu = f.to_measure().unwrap();
        assert_eq!(nu.atoms().len(), 1);
        assert_eq!(nu.atoms()[0].weight, 3.0 * 0.25);
        assert_eq!(nu.atoms()[0].position, g.cell_center(5));
    }

    #[test]
    fn indicator_measure_atom_count_1d() {
        let g = Grid::centered(1, 2.0, 0.01).unwrap();
        let f = ScalarField::from_preset(FieldPreset::IndicatorBall { radius: 1.0 }, g.clone()).unwrap();
        let inside = g.centers().iter().filter(|c| c.x().abs() <= 1.0).count();
        assert_eq!(f.to_measure().unwrap().atoms().len(), inside);
        assert_eq!(inside, 200);
    }

    #[test]
    fn delta_is_fixed_by_normalize_and_scale() {
        let d = AtomicMeasure::delta(2).unwrap();
        assert_eq!(d.atoms(), &[Atom { position: Point::ORIGIN, weight: 1.0 }]);
        assert_eq!(d.total_mass(), 1.0);
        assert_eq!(d.normalize().unwrap(), d);
        assert_eq!(d.scale(0.01).unwrap(), d);
    }

    #[test]
    fn scale_examples() {
        let nu = AtomicMeasure::two_atoms(1).unwrap();
        assert_eq!(nu.scale(1.0).unwrap(), nu);
        let half = nu.scale(0.5).unwrap();
        assert_eq!(half.atoms()[0].position, Point::on_line(-0.5));
        assert_eq!(half.atoms()[1].position, Point::on_line(0.5));
        assert_eq!(half.total_mass(), nu.total_mass());
        // ν_t(B(0, t·s)) = ν(B(0, s)).
        let (t, s) = (0.5, 1.5);
        assert_eq!(half.mass_in_closed_ball(Point::ORIGIN, t * s), 1.0);
        assert_eq!(nu.mass_in_closed_ball(Point::ORIGIN, s), 1.0);
        assert!(nu.scale(0.0).is_err());
        assert!(nu.scale(-1.0).is_err());
    }

    #[test]
    fn normalize_examples() {
        let nu = AtomicMeasure::new(
            1,
            vec![
                Atom { position: Point::on_line(0.0), weight: 2.0 },
                Atom { position: Point::on_line(1.0), weight: 2.0 },
            ],
        )
        .unwrap();
        let u = nu.normalize().unwrap();
        assert_eq!(u.atoms()[0].weight, 0.5);
        assert_eq!(u.atoms()[1].weight, 0.5);
        assert_eq!(u.normalize().unwrap(), u);
        let z = nu.weighted(0.0).unwrap();
        assert!(matches!(z.normalize(), Err(Error::Domain(_))));
    }

    #[test]
    fn invalid_atoms_rejected() {
        let bad = Atom { position: Point::ORIGIN, weight: -1.0 };
        assert!(AtomicMeasure::new(2, vec![bad]).is_err());
        let off_line = Atom { position: Point::new(0.0, 1.0), weight: 1.0 };
        assert!(AtomicMeasure::new(1, vec![off_line]).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let g = Grid::centered(2, 1.0, 0.25).unwrap();
        let f = ScalarField::from_preset(FieldPreset::Gaussian { sigma: 0.15 }, g.clone()).unwrap();
        let mut buf = Vec::new();
        f.write_csv(&mut buf).unwrap();
        let back = ScalarField::read_csv(g, buf.as_slice()).unwrap();
        assert_eq!(back.samples(), f.samples());
    }

    #[test]
    fn csv_rejects_mismatched_coordinates() {
        let g = Grid::centered(1, 1.0, 0.5).unwrap();
        let text = "index,x,value\n0,0.3,1.0\n";
        assert!(matches!(
            ScalarField::read_csv(g, text.as_bytes()),
            Err(Error::Csv { line: 2, .. })
        ));
    }
}
