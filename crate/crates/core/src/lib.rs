//! Numerical laboratory for capacitary maximal functions.
//!
//! The crate evaluates the centered capacitary maximal function
//! `M_C ν(x) = sup_r ν(B(x, r)) / c(r)` for radial capacities `c(r) = C(B(x, r))`,
//! exactly for finite atomic measures and through prefix-sum ball integrals
//! for grid-sampled densities. On top of that it extracts superlevel sets
//! `{M_C > λ}`, brackets their capacity using only monotonicity and
//! subadditivity, and assembles the weak-type curve `h(λ) = λ·C({M_C > λ})`
//! whose small-λ behaviour is the object of interest.
//!
//! Module map:
//!
//! * [`capacity`]: radial ball profiles and their scaling envelopes.
//! * [`sampling`]: grids, sampled densities and atomic measures.
//! * [`maximal`]: maximal-function evaluation (atomic, field, uncentered).
//! * [`setcap`]: superlevel sets, capacity bounds, greedy ball covering.
//! * [`weaktype`]: the weak-type curve and the checks built on it.

// `!(x > 0.0)` style guards are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod capacity;
pub mod error;
pub mod geom;
pub mod maximal;
pub mod sampling;
pub mod setcap;
pub mod weaktype;

mod csv;

pub use capacity::{validate_profile, ProfileReport, RadialProfile, ScalingEnvelope};
pub use error::{Error, Result};
pub use geom::{Ball, Point};
pub use maximal::{MaximalField, MaximalSource, RadiusPolicy};
pub use sampling::{Atom, AtomicMeasure, FieldPreset, Grid, ScalarField};
pub use setcap::{BallFamily, CapacityBounds, LevelSetApprox, LevelSetEngine, LevelSetOptions};
pub use weaktype::{LimitEstimate, WeakTypeCurve};
