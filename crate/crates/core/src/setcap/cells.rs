//! Grid-cell level sets: distance transform, connected components and the
//! balls they support.

use std::collections::VecDeque;

use crate::geom::{min_enclosing_ball, Ball, Point};
use crate::sampling::Grid;

/// 1-D squared distance transform of a sampled function (Felzenszwalb and
/// Huttenlocher). `f[q]` is 0 on sites and +∞ elsewhere.
fn edt_1d(f: &[f64], out: &mut [f64]) {
    let sq = |p: usize| (p * p) as f64;
    let meet = |p: usize, q: usize| ((f[q] + sq(q)) - (f[p] + sq(p))) / (2.0 * (q as f64 - p as f64));
    // Lower envelope of parabolas: v[k] is the site, z[k] its left boundary.
    let mut v: Vec<usize> = Vec::new();
    let mut z: Vec<f64> = Vec::new();
    for q in 0..f.len() {
        if !f[q].is_finite() {
            continue;
        }
        while let (Some(&p), Some(&zl)) = (v.last(), z.last()) {
            if meet(p, q) <= zl {
                v.pop();
                z.pop();
            } else {
                break;
            }
        }
        z.push(v.last().map_or(f64::NEG_INFINITY, |&p| meet(p, q)));
        v.push(q);
    }
    if v.is_empty() {
        out.iter_mut().for_each(|o| *o = f64::INFINITY);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as f64 - v[k] as f64;
        *o = d * d + f[v[k]];
    }
}

/// Euclidean distance (in grid units) from every cell center to the nearest
/// cell center outside `inside`. Cells beyond the grid edge count as outside.
pub(crate) fn exterior_distance(grid: &Grid, inside: &[bool]) -> Vec<f64> {
    let [ex, ey] = grid.extents2();
    let two_d = grid.dim() == 2;
    // Padded by one exterior cell on each side of every active axis.
    let px = ex + 2;
    let py = if two_d { ey + 2 } else { 1 };
    let off_y = usize::from(two_d);
    let mut f = vec![0.0; px * py];
    for j in 0..ey {
        for i in 0..ex {
            if inside[grid.cell_index(i, j)] {
                f[(j + off_y) * px + i + 1] = f64::INFINITY;
            }
        }
    }
    let mut row_out = vec![0.0; px];
    for j in 0..py {
        edt_1d(&f[j * px..(j + 1) * px], &mut row_out);
        f[j * px..(j + 1) * px].copy_from_slice(&row_out);
    }
    if two_d {
        let mut col = vec![0.0; py];
        let mut col_out = vec![0.0; py];
        for i in 0..px {
            for j in 0..py {
                col[j] = f[j * px + i];
            }
            edt_1d(&col, &mut col_out);
            for j in 0..py {
                f[j * px + i] = col_out[j];
            }
        }
    }
    let mut d = vec![0.0; grid.cell_count()];
    for j in 0..ey {
        for i in 0..ex {
            d[grid.cell_index(i, j)] = f[(j + off_y) * px + i + 1].sqrt();
        }
    }
    d
}

/// Half the cell diagonal: every point of a cell lies this close to its center.
pub(crate) fn cell_circumradius(grid: &Grid) -> f64 {
    0.5 * grid.spacing() * (grid.dim() as f64).sqrt()
}

/// Largest ball inside the union of `inside` cells, centered either at the
/// deepest cell or at `hint`, whichever is larger. `None` for an empty set.
pub(crate) fn inscribed_ball(grid: &Grid, inside: &[bool], hint: Option<Point>) -> Option<Ball> {
    let dist = exterior_distance(grid, inside);
    let h = grid.spacing();
    let pad = cell_circumradius(grid);
    let (best_k, best_d) = dist
        .iter()
        .enumerate()
        .filter(|(k, _)| inside[*k])
        .fold((usize::MAX, -1.0), |acc, (k, &d)| if d > acc.1 { (k, d) } else { acc });
    if best_k == usize::MAX {
        return None;
    }
    let mut ball = Ball::new(grid.cell_center(best_k), (best_d * h - pad).max(0.0));
    if let Some(p) = hint {
        if let Some((i, j)) = locate(grid, p) {
            let k = grid.cell_index(i, j);
            if inside[k] {
                let r = dist[k] * h - pad - p.dist(grid.cell_center(k));
                if r > ball.radius {
                    ball = Ball::new(p, r);
                }
            }
        }
    }
    Some(ball)
}

/// Cell containing `p`, if any.
fn locate(grid: &Grid, p: Point) -> Option<(usize, usize)> {
    let h = grid.spacing();
    let o = grid.origin();
    let [ex, ey] = grid.extents2();
    let fi = ((p.x() - o.x()) / h).floor();
    let fj = if grid.dim() == 2 { ((p.y() - o.y()) / h).floor() } else { 0.0 };
    (fi >= 0.0 && fj >= 0.0 && (fi as usize) < ex && (fj as usize) < ey).then_some((fi as usize, fj as usize))
}

fn neighbours(grid: &Grid, i: usize, j: usize, diagonal: bool) -> impl Iterator<Item = Option<(usize, usize)>> + '_ {
    let [ex, ey] = grid.extents2();
    let dys: &[i64] = if grid.dim() == 2 { &[-1, 0, 1] } else { &[0] };
    let mut out = Vec::with_capacity(8);
    for &dy in dys {
        for dx in [-1i64, 0, 1] {
            if (dx == 0 && dy == 0) || (!diagonal && dx != 0 && dy != 0) {
                continue;
            }
            let ni = i as i64 + dx;
            let nj = j as i64 + dy;
            let ok = ni >= 0 && nj >= 0 && (ni as usize) < ex && (nj as usize) < ey;
            out.push(ok.then_some((ni as usize, nj as usize)));
        }
    }
    out.into_iter()
}

/// Set cells with an axis neighbour outside the set (or off the grid).
pub(crate) fn boundary_cells(grid: &Grid, inside: &[bool], cells: &[usize]) -> Vec<usize> {
    cells
        .iter()
        .copied()
        .filter(|&k| {
            let (i, j) = grid.cell_ij(k);
            neighbours(grid, i, j, false).any(|nb| nb.is_none_or(|(a, b)| !inside[grid.cell_index(a, b)]))
        })
        .collect()
}

/// Minimal ball enclosing every listed cell completely.
pub(crate) fn enclosing_ball(grid: &Grid, inside: &[bool], cells: &[usize]) -> Option<Ball> {
    let pts: Vec<Point> = boundary_cells(grid, inside, cells)
        .into_iter()
        .map(|k| grid.cell_center(k))
        .collect();
    min_enclosing_ball(&pts).map(|b| Ball::new(b.center, b.radius + cell_circumradius(grid)))
}

/// Connected components of the set (8-connectivity in the plane), each listed
/// in increasing cell order; components are ordered by their first cell.
pub(crate) fn components(grid: &Grid, inside: &[bool]) -> Vec<Vec<usize>> {
    let mut label = vec![usize::MAX; inside.len()];
    let mut comps = Vec::new();
    for start in 0..inside.len() {
        if !inside[start] || label[start] != usize::MAX {
            continue;
        }
        let id = comps.len();
        let mut comp = vec![start];
        label[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(k) = queue.pop_front() {
            let (i, j) = grid.cell_ij(k);
            for (a, b) in neighbours(grid, i, j, true).flatten() {
                let m = grid.cell_index(a, b);
                if inside[m] && label[m] == usize::MAX {
                    label[m] = id;
                    comp.push(m);
                    queue.push_back(m);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disk(grid: &Grid, c: Point, r: f64) -> Vec<bool> {
        (0..grid.cell_count()).map(|k| grid.cell_center(k).dist(c) < r).collect()
    }

    #[test]
    fn edt_matches_brute_force() {
        let g = Grid::new(2, &[0.0, 0.0], 1.0, &[23, 17]).unwrap();
        let inside: Vec<bool> = (0..g.cell_count())
            .map(|k| {
                let (i, j) = g.cell_ij(k);
                (i * 7 + j * 3) % 11 != 0 && i > 1
            })
            .collect();
        let d = exterior_distance(&g, &inside);
        for k in 0..g.cell_count() {
            let (i, j) = g.cell_ij(k);
            let mut best = f64::INFINITY;
            for b in -1i64..=17 {
                for a in -1i64..=23 {
                    let out = a < 0 || b < 0 || a >= 23 || b >= 17 || !inside[g.cell_index(a as usize, b as usize)];
                    if out {
                        best = best.min(((a - i as i64) as f64).hypot((b - j as i64) as f64));
                    }
                }
            }
            assert!((d[k] - best).abs() < 1e-12, "cell ({i},{j}): {} vs {best}", d[k]);
        }
    }

    #[test]
    fn edt_in_one_dimension_ignores_second_axis() {
        let g = Grid::new(1, &[0.0], 1.0, &[9]).unwrap();
        let inside = vec![true; 9];
        let d = exterior_distance(&g, &inside);
        assert_eq!(d, vec![1.0, 2.0, 3.0, 4.0, 5.0, 4.0, 3.0, 2.0, 1.0]);
    }

    #[test]
    fn disk_inscribed_and_enclosing_radii() {
        let g = Grid::centered(2, 3.0, 0.05).unwrap();
        let inside = disk(&g, Point::ORIGIN, 2.0);
        let cells: Vec<usize> = (0..inside.len()).filter(|&k| inside[k]).collect();
        let inner = inscribed_ball(&g, &inside, Some(Point::ORIGIN)).unwrap();
        let outer = enclosing_ball(&g, &inside, &cells).unwrap();
        assert!(inner.radius <= 2.0 && inner.radius >= 2.0 - 3.0 * 0.05, "{}", inner.radius);
        assert!(outer.radius >= 2.0 - 0.05 && outer.radius <= 2.0 + 3.0 * 0.05, "{}", outer.radius);
    }

    #[test]
    fn single_cell_enclosing_ball_is_its_circumcircle() {
        let g = Grid::new(2, &[0.0, 0.0], 0.5, &[4, 4]).unwrap();
        let mut inside = vec![false; 16];
        let k = g.cell_index(2, 1);
        inside[k] = true;
        let b = enclosing_ball(&g, &inside, &[k]).unwrap();
        assert_eq!(b.center, g.cell_center(k));
        assert!((b.radius - 0.25 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn components_split_separated_disks() {
        let g = Grid::centered(2, 4.0, 0.1).unwrap();
        let a = disk(&g, Point::new(-2.0, 0.0), 1.0);
        let b = disk(&g, Point::new(2.0, 0.0), 1.0);
        let inside: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x || *y).collect();
        let comps = components(&g, &inside);
        assert_eq!(comps.len(), 2);
        // Diagonal contact still joins.
        let mut diag = vec![false; g.cell_count()];
        diag[g.cell_index(10, 10)] = true;
        diag[g.cell_index(11, 11)] = true;
        assert_eq!(components(&g, &diag).len(), 1);
    }

    #[test]
    fn empty_set_has_no_balls() {
        let g = Grid::centered(2, 1.0, 0.1).unwrap();
        let inside = vec![false; g.cell_count()];
        assert!(inscribed_ball(&g, &inside, None).is_none());
        assert!(enclosing_ball(&g, &inside, &[]).is_none());
    }
}
