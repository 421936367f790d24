//! Exact centered maximal function of finite atomic measures.
//!
//! `r ↦ ν(B̄(x, r))` is a right-continuous step function that only jumps at the
//! atom distances `d_i`, while `c` is continuous and increasing. The supremum of
//! their ratio is therefore attained at some `d_i`, with value `W_i / c(d_i)`.

use crate::capacity::RadialProfile;
use crate::geom::Point;
use crate::sampling::AtomicMeasure;

use super::Supremum;

/// Sorted `(distance, weight)` pairs of the positively weighted atoms.
pub(crate) fn sorted_distances(nu: &AtomicMeasure, center: Point) -> Vec<(f64, f64)> {
    let mut ds: Vec<(f64, f64)> = nu
        .atoms()
        .iter()
        .filter(|a| a.weight > 0.0)
        .map(|a| (center.dist(a.position), a.weight))
        .collect();
    ds.sort_by(|a, b| a.0.total_cmp(&b.0));
    ds
}

/// `sup_{r ≥ r_min} ν(B̄(center, r)) / c(r)` over the sorted distance list.
pub(crate) fn supremum_from(ds: &[(f64, f64)], profile: &RadialProfile, r_min: f64) -> Supremum {
    let mut best = Supremum::ZERO;
    let mut cum = 0.0;
    let mut k = 0;
    // Everything within r_min is captured by the smallest admissible ball.
    while k < ds.len() && ds[k].0 <= r_min {
        cum += ds[k].1;
        k += 1;
    }
    if cum > 0.0 {
        let value = if r_min == 0.0 { f64::INFINITY } else { cum / profile.value(r_min) };
        best = Supremum {
            value,
            radius: r_min,
            enclosed: cum,
        };
        if value.is_infinite() {
            return best;
        }
    }
    while k < ds.len() {
        cum += ds[k].1;
        let r = ds[k].0;
        k += 1;
        if k < ds.len() && ds[k].0 == r {
            continue;
        }
        let value = cum / profile.value(r);
        if value > best.value {
            best = Supremum {
                value,
                radius: r,
                enclosed: cum,
            };
        }
    }
    best
}

pub(crate) fn centered_supremum(nu: &AtomicMeasure, profile: &RadialProfile, x: Point) -> Supremum {
    supremum_from(&sorted_distances(nu, x), profile, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::Atom;

    #[test]
    fn delta_gives_reciprocal_capacity() {
        let d = AtomicMeasure::delta(2).unwrap();
        let p = RadialProfile::lebesgue(2).unwrap();
        let s = centered_supremum(&d, &p, Point::new(3.0, 4.0));
        assert_eq!(s.radius, 5.0);
        assert_eq!(s.value, 1.0 / p.value(5.0));
        assert_eq!(centered_supremum(&d, &p, Point::ORIGIN).value, f64::INFINITY);
    }

    #[test]
    fn tied_distances_are_grouped() {
        // Atoms at ±1 seen from 0 share the distance 1: ν(B̄(0,1)) = 1, not ½.
        let nu = AtomicMeasure::two_atoms(1).unwrap();
        let p = RadialProfile::power_law(1.0, 1.0).unwrap();
        let s = centered_supremum(&nu, &p, Point::ORIGIN);
        assert_eq!(s.value, 1.0);
        assert_eq!(s.enclosed, 1.0);
    }

    #[test]
    fn zero_weight_atoms_are_ignored() {
        let nu = AtomicMeasure::new(
            1,
            vec![
                Atom { position: Point::ORIGIN, weight: 0.0 },
                Atom { position: Point::on_line(2.0), weight: 1.0 },
            ],
        )
        .unwrap();
        let p = RadialProfile::lebesgue(1).unwrap();
        assert_eq!(centered_supremum(&nu, &p, Point::ORIGIN).value, 0.25);
    }

    #[test]
    fn admissible_floor_restricts_radii() {
        let ds = [(1.0, 1.0), (3.0, 1.0)];
        let p = RadialProfile::power_law(1.0, 1.0).unwrap();
        assert_eq!(supremum_from(&ds, &p, 0.0).value, 1.0);
        // r ≥ 2: either B̄(2) with mass 1 (0.5) or B̄(3) with mass 2 (2/3).
        let s = supremum_from(&ds, &p, 2.0);
        assert_eq!(s.value, 2.0 / 3.0);
        assert_eq!(s.radius, 3.0);
    }
}
