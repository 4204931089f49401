//! Region boundaries as point lists: interval endpoints in 1D, marching
//! squares contours of the 0/1 mask in 2D.

use std::collections::BTreeMap;
use std::fmt::Write;

use pwcr::domain::{DomainGrid, GridSet};

/// Maximal runs of the mask as `(lo, hi)` coordinates.
pub fn intervals(set: &GridSet) -> Vec<(f64, f64)> {
    let grid = set.grid();
    let mut out = Vec::new();
    let mut start = None;
    for k in 0..=grid.len() {
        let inside = k < grid.len() && set.contains(k);
        match (inside, start) {
            (true, None) => start = Some(k),
            (false, Some(s)) => {
                out.push((grid.axis_coord(0, s), grid.axis_coord(0, k - 1)));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Edge midpoint in doubled index units: `(2i + 1, 2j)` is halfway between
/// `(i, j)` and `(i + 1, j)`.
type Key = (usize, usize);

fn coord(grid: &DomainGrid, axis: usize, t: usize) -> f64 {
    if t % 2 == 0 {
        grid.axis_coord(axis, t / 2)
    } else {
        0.5 * (grid.axis_coord(axis, t / 2) + grid.axis_coord(axis, t / 2 + 1))
    }
}

/// Contour polylines of the mask boundary. Open curves end on the domain
/// edge; closed curves repeat their first point at the end.
pub fn contours(set: &GridSet) -> Vec<Vec<[f64; 2]>> {
    let grid = set.grid();
    let [nx, ny] = [grid.points_per_axis()[0], grid.points_per_axis()[1]];
    let at = |i: usize, j: usize| set.contains(grid.flat_index([i, j]));
    let mut segments: Vec<(Key, Key)> = Vec::new();
    for i in 0..nx.saturating_sub(1) {
        for j in 0..ny.saturating_sub(1) {
            // Corners a, b, c, d counter-clockwise from (i, j).
            let (a, b, c, d) = (at(i, j), at(i + 1, j), at(i + 1, j + 1), at(i, j + 1));
            let bottom = (2 * i + 1, 2 * j);
            let right = (2 * i + 2, 2 * j + 1);
            let top = (2 * i + 1, 2 * j + 2);
            let left = (2 * i, 2 * j + 1);
            let crossed: Vec<Key> = [
                (a != b, bottom),
                (b != c, right),
                (c != d, top),
                (d != a, left),
            ]
            .iter()
            .filter(|(x, _)| *x)
            .map(|&(_, k)| k)
            .collect();
            match crossed.len() {
                2 => segments.push((crossed[0], crossed[1])),
                // Saddle: the centre counts as inside, so the outside corners are cut off.
                4 if a => {
                    segments.push((bottom, right));
                    segments.push((top, left));
                }
                4 => {
                    segments.push((left, bottom));
                    segments.push((right, top));
                }
                _ => {}
            }
        }
    }

    let mut ends: BTreeMap<Key, Vec<usize>> = BTreeMap::new();
    for (s, &(p, q)) in segments.iter().enumerate() {
        ends.entry(p).or_default().push(s);
        ends.entry(q).or_default().push(s);
    }
    let mut used = vec![false; segments.len()];
    let mut lines = Vec::new();
    let walk = |from: Key, used: &mut Vec<bool>| {
        let mut line = vec![from];
        let mut here = from;
        while let Some(&s) = ends[&here].iter().find(|&&s| !used[s]) {
            used[s] = true;
            let (p, q) = segments[s];
            here = if p == here { q } else { p };
            line.push(here);
        }
        line
    };
    // Open curves start at degree-one endpoints, then the remaining cycles.
    let starts: Vec<Key> = ends
        .iter()
        .filter(|(_, v)| v.len() == 1)
        .map(|(k, _)| *k)
        .collect();
    for k in starts {
        if ends[&k].iter().any(|&s| !used[s]) {
            lines.push(walk(k, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            lines.push(walk(segments[s].0, &mut used));
        }
    }
    lines
        .into_iter()
        .map(|line| {
            line.into_iter()
                .map(|(x, y)| [coord(grid, 0, x), coord(grid, 1, y)])
                .collect()
        })
        .collect()
}

/// CSV of every named region's boundary.
pub fn boundaries_csv(regions: &[(&str, &GridSet)]) -> String {
    let mut out = String::new();
    let dim = regions.first().map_or(1, |(_, s)| s.grid().dim());
    if dim == 1 {
        out.push_str("region,interval,lo,hi\n");
        for (name, set) in regions {
            for (k, (lo, hi)) in intervals(set).iter().enumerate() {
                writeln!(out, "{name},{k},{lo},{hi}").unwrap();
            }
        }
    } else {
        out.push_str("region,contour,vertex,x,y\n");
        for (name, set) in regions {
            for (c, line) in contours(set).iter().enumerate() {
                for (v, [x, y]) in line.iter().enumerate() {
                    writeln!(out, "{name},{c},{v},{x},{y}").unwrap();
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::Arc;

    #[test]
    fn interval_runs() {
        let g = Arc::new(DomainGrid::line(0.0, 1.0, 11).unwrap());
        let s = GridSet::from_indices(&g, [0, 1, 2, 5, 9, 10]);
        let iv = intervals(&s);
        assert_eq!(iv.len(), 3);
        assert_eq!(iv[0], (0.0, 0.2));
        assert_eq!(iv[1].0, iv[1].1);
        assert_eq!(iv[2].1, 1.0);
        assert!(intervals(&GridSet::empty(&g)).is_empty());
    }

    #[test]
    fn square_gives_one_closed_contour() {
        let g = Arc::new(DomainGrid::rect((0.0, 4.0), (0.0, 4.0), 5, 5).unwrap());
        let s = GridSet::from_fn(&g, |p| {
            (1.0..=3.0).contains(&p[0]) && (1.0..=3.0).contains(&p[1])
        });
        let c = contours(&s);
        assert_eq!(c.len(), 1);
        let line = &c[0];
        assert_eq!(line.first(), line.last());
        // 3×3 block: three crossed edges per side.
        assert_eq!(line.len(), 13);
        for [x, y] in line {
            assert!((0.5..=3.5).contains(x) && (0.5..=3.5).contains(y));
        }
    }

    #[test]
    fn edge_touching_region_gives_open_contour() {
        let g = Arc::new(DomainGrid::rect((0.0, 1.0), (0.0, 1.0), 6, 6).unwrap());
        let s = GridSet::from_fn(&g, |p| p[0] < 0.5);
        let c = contours(&s);
        assert_eq!(c.len(), 1);
        assert_ne!(c[0].first(), c[0].last());
        assert!(c[0].iter().all(|p| (p[0] - 0.5).abs() < 1e-12));
    }

    #[test]
    fn saddle_splits_diagonal_pair() {
        let g = Arc::new(DomainGrid::rect((0.0, 1.0), (0.0, 1.0), 2, 2).unwrap());
        let s = GridSet::from_indices(&g, [g.flat_index([0, 0]), g.flat_index([1, 1])]);
        assert_eq!(contours(&s).len(), 2);
    }
}
