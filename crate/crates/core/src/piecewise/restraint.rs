//! Numeric checks of restrained bounds, completed-graph tubes, the sup
//! sandwich and the sum condition.
//!
//! Sequences `f_n` develop features of width `O(1/n)`, far below the grid
//! spacing at the top of an n-ladder. Every check therefore evaluates `f_n`
//! on the grid points and on a refined lattice inside each grid cell, with
//! roughly `REFINE * n * spacing` samples per cell and axis. A sample inside a
//! cell belongs to every piece that owns one of the cell's corners, and is
//! compared against the bound at those corners: on the grid, a point within
//! one cell of `s` is indistinguishable from `s`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    liminf_set, limsup_plus_set, FunctionFamily, Label, PiecewiseError, PiecewiseField, SetFamily,
};
use crate::domain::{check_same, grid_closure, sup_over, DomainGrid, ExtReal, GridSet};

const REFINE: f64 = 100.0;
const MAX_SAMPLES_1D: usize = 4096;
const MAX_SAMPLES_2D: usize = 32;

/// n-ladder and δ-ladder for the restraint check (δ in domain units).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_ladder: Vec<u64>,
    pub delta_ladder: Vec<f64>,
}

impl Schedule {
    /// n ∈ {2^4, …, 2^14}; δ ∈ {0.2, 0.1, 0.05, 0.025} × domain width.
    pub fn default_for(grid: &DomainGrid) -> Self {
        let width = grid
            .extents()
            .iter()
            .map(|(lo, hi)| hi - lo)
            .fold(0.0, f64::max);
        Self {
            n_ladder: (4..=14).map(|e| 1u64 << e).collect(),
            delta_ladder: [0.2, 0.1, 0.05, 0.025].iter().map(|d| d * width).collect(),
        }
    }

    pub fn top_n(&self) -> u64 {
        *self.n_ladder.last().expect("validated schedule")
    }

    pub fn validate(&self, grid: &DomainGrid) -> Result<(), PiecewiseError> {
        if self.n_ladder.is_empty() || self.delta_ladder.is_empty() {
            return Err(PiecewiseError::BadSchedule("empty ladder".into()));
        }
        if self.n_ladder[0] == 0 || self.n_ladder.windows(2).any(|w| w[1] <= w[0]) {
            return Err(PiecewiseError::BadSchedule(
                "n-ladder must be positive and strictly increasing".into(),
            ));
        }
        if self.delta_ladder.windows(2).any(|w| w[1] >= w[0]) {
            return Err(PiecewiseError::BadSchedule(
                "delta-ladder must be strictly decreasing".into(),
            ));
        }
        let delta = *self.delta_ladder.last().unwrap();
        let spacing = grid.max_spacing();
        if !(delta >= spacing) {
            return Err(PiecewiseError::ScheduleTooCoarse { delta, spacing });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Upper,
    Lower,
    Both,
}

/// Location of the worst excess found by [`check_restrained_bound`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub side: Side,
    pub label: Label,
    /// Grid point nearest to the offending sample.
    pub index: usize,
    pub point: Vec<f64>,
    /// The offending sample itself, possibly between grid points.
    pub sample: Vec<f64>,
    pub n: u64,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RestraintReport {
    pub passed: bool,
    pub worst_violation: f64,
    pub tolerance: f64,
    pub witness: Option<Witness>,
    pub schedule: Schedule,
    pub samples_per_cell: usize,
}

/// Samples per cell and axis used for a sequence index `n`.
pub(crate) fn samples_per_cell(grid: &DomainGrid, n: u64) -> usize {
    let k = (REFINE * n as f64 * grid.max_spacing()).ceil();
    let cap = if grid.dim() == 1 {
        MAX_SAMPLES_1D
    } else {
        MAX_SAMPLES_2D
    };
    (k as usize).clamp(1, cap)
}

/// Calls `f` on the refined lattice of cell `c`, excluding its corners.
///
/// In 2D the lattice covers the lower and left edges of the cell; the upper
/// and right edges belong to the neighbouring cells.
fn for_each_cell_sample(grid: &DomainGrid, c: usize, k: usize, mut f: impl FnMut(&[f64])) {
    let corners = grid.cell_corners(c);
    let lo = grid.coords(corners[0]);
    let hi = grid.coords(*corners.last().unwrap());
    if grid.dim() == 1 {
        for j in 1..k {
            let t = j as f64 / k as f64;
            f(&[lo[0] + (hi[0] - lo[0]) * t]);
        }
    } else {
        for a in 0..k {
            for b in 0..k {
                if a == 0 && b == 0 {
                    continue;
                }
                let (ta, tb) = (a as f64 / k as f64, b as f64 / k as f64);
                f(&[lo[0] + (hi[0] - lo[0]) * ta, lo[1] + (hi[1] - lo[1]) * tb]);
            }
        }
    }
}

#[derive(Clone, Copy, Debug)]
struct Candidate {
    excess: f64,
    label: Label,
    location: [f64; 2],
}

fn better(a: Option<Candidate>, b: Option<Candidate>) -> Option<Candidate> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(x), Some(y)) => Some(if y.excess > x.excess { y } else { x }),
    }
}

/// Per-label bound `max(f^i, f)` on the closure of each piece, times `sign`.
fn piece_bounds(f: &PiecewiseField, sign: f64) -> Vec<(Label, Vec<f64>)> {
    let base = f.base().values();
    f.labels()
        .map(|i| {
            let ext = f.extension(i).expect("label has extension");
            let b = (0..base.len())
                .map(|k| match ext.get(k) {
                    Some(e) => (sign * e).max(sign * base[k]),
                    None => f64::NAN,
                })
                .collect();
            (i, b)
        })
        .collect()
}

fn scan_side(
    family: &dyn FunctionFamily,
    f: &PiecewiseField,
    n: u64,
    sign: f64,
) -> Option<Candidate> {
    let grid = f.grid().clone();
    let d = grid.dim();
    let part = f.partition();
    let base = f.base().values();
    let bounds = piece_bounds(f, sign);
    let k = samples_per_cell(&grid, n);

    let mut best: Option<Candidate> = None;
    for t in 0..grid.len() {
        let c = grid.coords(t);
        let v = sign * family.eval(n, &c[..d]);
        let cand = Candidate {
            excess: v - sign * base[t],
            label: part.label(t),
            location: c,
        };
        best = better(best, Some(cand));
    }

    let per_cell: Vec<Option<Candidate>> = (0..grid.cell_count())
        .into_par_iter()
        .map(|c| {
            let mut vmax = f64::NEG_INFINITY;
            let mut at = [0.0; 2];
            for_each_cell_sample(&grid, c, k, |p| {
                let v = sign * family.eval(n, p);
                if v > vmax {
                    vmax = v;
                    at[..d].copy_from_slice(p);
                }
            });
            if vmax == f64::NEG_INFINITY {
                return None;
            }
            let corners = grid.cell_corners(c);
            let mut cell_best: Option<Candidate> = None;
            // Ties go to the piece of the highest corner: a cell interior is
            // attributed to its upper end, as with half-open cells.
            let mut order: Vec<Label> = Vec::with_capacity(corners.len());
            for &t in corners.iter().rev() {
                if !order.contains(&part.label(t)) {
                    order.push(part.label(t));
                }
            }
            for label in &order {
                let b = &bounds.iter().find(|(l, _)| l == label).unwrap().1;
                let r = corners
                    .iter()
                    .map(|&t| b[t])
                    .filter(|x| !x.is_nan())
                    .fold(f64::NEG_INFINITY, f64::max);
                cell_best = better(
                    cell_best,
                    Some(Candidate {
                        excess: vmax - r,
                        label: *label,
                        location: at,
                    }),
                );
            }
            cell_best
        })
        .collect();
    for cand in per_cell {
        best = better(best, cand);
    }
    best
}

/// Checks that `f` is an upper (and/or lower) restrained bound for `f_n`.
///
/// For each piece `i` and each `s` in the closure of `V_i`, the quantity
/// `lim_δ limsup_n sup_{B_δ(s) ∩ V_i} f_n − max(f^i(s), f(s))` is approximated
/// at the largest `n` of the ladder. Because the smallest δ is at least one
/// grid spacing, every sample lies inside some ball, so the worst excess over
/// all `(i, s)` is the worst excess over all samples. The lower side applies
/// the same test to `(-f_n, -f)`.
pub fn check_restrained_bound(
    family: &dyn FunctionFamily,
    f: &PiecewiseField,
    schedule: &Schedule,
    side: Side,
    tolerance: f64,
) -> Result<RestraintReport, PiecewiseError> {
    let grid = f.grid().clone();
    schedule.validate(&grid)?;
    let n = schedule.top_n();
    let delta = *schedule.delta_ladder.last().unwrap();

    let mut found: Vec<(Side, Candidate)> = Vec::new();
    if side != Side::Lower {
        if let Some(c) = scan_side(family, f, n, 1.0) {
            found.push((Side::Upper, c));
        }
    }
    if side != Side::Upper {
        if let Some(c) = scan_side(family, f, n, -1.0) {
            found.push((Side::Lower, c));
        }
    }
    let worst = found
        .into_iter()
        .fold(None::<(Side, Candidate)>, |acc, x| match acc {
            Some(a) if a.1.excess >= x.1.excess => Some(a),
            _ => Some(x),
        });

    let d = grid.dim();
    let (worst_violation, witness) = match worst {
        None => (0.0, None),
        Some((s, c)) => {
            let index = grid.nearest_point(&c.location[..d]);
            let witness = Witness {
                side: s,
                label: c.label,
                index,
                point: grid.coords(index)[..d].to_vec(),
                sample: c.location[..d].to_vec(),
                n,
                delta,
            };
            (c.excess.max(0.0), Some(witness))
        }
    };
    Ok(RestraintReport {
        passed: worst_violation <= tolerance,
        worst_violation,
        tolerance,
        witness,
        schedule: schedule.clone(),
        samples_per_cell: samples_per_cell(&grid, n),
    })
}

/// `1e-6 + 10 · spacing · L`, with `L` the largest finite-difference slope of
/// any extension `f^i` between axis neighbours.
pub fn default_tolerance(f: &PiecewiseField) -> f64 {
    let grid = f.grid();
    let pts = grid.points_per_axis();
    let mut lip: f64 = 0.0;
    for i in f.labels() {
        let ext = f.extension(i).unwrap();
        for k in 0..grid.len() {
            let Some(a) = ext.get(k) else { continue };
            let idx = grid.multi_index(k);
            for axis in 0..grid.dim() {
                if idx[axis] + 1 >= pts[axis] {
                    continue;
                }
                let mut j = idx;
                j[axis] += 1;
                if let Some(b) = ext.get(grid.flat_index(j)) {
                    lip = lip.max((a - b).abs() / grid.spacing()[axis]);
                }
            }
        }
    }
    1e-6 + 10.0 * grid.max_spacing() * lip
}

/// Whether the graph of `f_n` lies in the open ε-thickening of the completed
/// graph `Γ_f`.
///
/// At each grid point `t`, `Γ_f` is the vertical segment spanned by `f(t)` and
/// every `f^j(t)` with `t` in the closure of `V_j`. A sample `(p, v)` is inside
/// when some `(t, y)` on the grid graph lies within Euclidean distance ε.
pub fn within_graph_tube(
    family: &dyn FunctionFamily,
    f: &PiecewiseField,
    n: u64,
    eps: f64,
) -> bool {
    assert!(eps > 0.0, "eps must be positive");
    let grid = f.grid().clone();
    let d = grid.dim();
    let base = f.base().values();
    let mut lo = base.to_vec();
    let mut hi = base.to_vec();
    for i in f.labels() {
        let ext = f.extension(i).unwrap();
        for k in 0..grid.len() {
            if let Some(e) = ext.get(k) {
                lo[k] = lo[k].min(e);
                hi[k] = hi[k].max(e);
            }
        }
    }
    let tube = GraphTube {
        grid: &grid,
        lo,
        hi,
        eps,
    };
    let grid_ok = (0..grid.len()).all(|t| {
        let c = grid.coords(t);
        tube.contains(&c[..d], family.eval(n, &c[..d]))
    });
    if !grid_ok {
        return false;
    }
    let k = samples_per_cell(&grid, n);
    (0..grid.cell_count()).into_par_iter().all(|c| {
        let mut ok = true;
        for_each_cell_sample(&grid, c, k, |p| {
            if ok && !tube.contains(p, family.eval(n, p)) {
                ok = false;
            }
        });
        ok
    })
}

struct GraphTube<'a> {
    grid: &'a DomainGrid,
    lo: Vec<f64>,
    hi: Vec<f64>,
    eps: f64,
}

impl GraphTube<'_> {
    fn gap(&self, t: usize, v: f64) -> f64 {
        if v < self.lo[t] {
            self.lo[t] - v
        } else if v > self.hi[t] {
            v - self.hi[t]
        } else {
            0.0
        }
    }

    fn contains(&self, p: &[f64], v: f64) -> bool {
        let grid = self.grid;
        let eps2 = self.eps * self.eps;
        let near = grid.nearest_point(p);
        let dist2 = |t: usize| {
            let c = grid.coords(t);
            (0..grid.dim()).map(|a| (c[a] - p[a]).powi(2)).sum::<f64>()
        };
        if dist2(near) + self.gap(near, v).powi(2) < eps2 {
            return true;
        }
        let idx = grid.multi_index(near);
        let pts = grid.points_per_axis();
        let mut range = [(0usize, 0usize); 2];
        for axis in 0..grid.dim() {
            let r = (self.eps / grid.spacing()[axis]).ceil() as usize + 1;
            range[axis] = (
                idx[axis].saturating_sub(r),
                (idx[axis] + r).min(pts[axis] - 1),
            );
        }
        for i in range[0].0..=range[0].1 {
            for j in range[1].0..=range[1].1 {
                let t = grid.flat_index([i, j]);
                let dx2 = dist2(t);
                if dx2 < eps2 && dx2 + self.gap(t, v).powi(2) < eps2 {
                    return true;
                }
            }
        }
        false
    }
}

/// Outcome of [`verify_sup_sandwich`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SandwichReport {
    /// `sup` of `f` over `A⁻∞`.
    pub lower: ExtReal,
    /// `liminf_n sup_{A_n} f_n` over the ladder.
    pub middle_inf: ExtReal,
    /// `limsup_n sup_{A_n} f_n` over the ladder.
    pub middle_sup: ExtReal,
    /// `max_i sup` of `f^i` over `A^{i,+}∞`.
    pub upper: ExtReal,
    pub lower_ok: bool,
    pub upper_ok: bool,
    pub tolerance: f64,
}

impl SandwichReport {
    /// `(lower, middle, upper)` with the middle read as the liminf.
    pub fn values(&self) -> (f64, f64, f64) {
        (
            self.lower.to_f64(),
            self.middle_inf.to_f64(),
            self.upper.to_f64(),
        )
    }
}

/// Checks `sup_{A⁻∞} f ≤ liminf sup_{A_n} f_n` and
/// `limsup sup_{A_n} f_n ≤ max_i sup_{A^{i,+}∞} f^i`.
///
/// `sets[k]` is the grid realization of `A_n` for `n = ladder[k]`; the list is
/// read as a repeating tail pattern. When `membership` is given, the suprema
/// of `f_n` over `A_n` also use refined samples inside cells and boundary
/// points located by bisection between grid neighbours.
pub fn verify_sup_sandwich(
    family: &dyn FunctionFamily,
    f: &PiecewiseField,
    sets: &[GridSet],
    ladder: &[u64],
    membership: Option<&dyn SetFamily>,
    tolerance: f64,
) -> Result<SandwichReport, PiecewiseError> {
    if sets.len() != ladder.len() || sets.is_empty() {
        return Err(PiecewiseError::BadSchedule(
            "need one set per ladder entry".into(),
        ));
    }
    for a in sets {
        check_same(a.grid(), f.grid())?;
    }
    let lower = sup_over(f.base(), &liminf_set(sets)?)?;
    let mut upper = ExtReal::NegInf;
    for i in f.labels() {
        let plus = limsup_plus_set(sets, f.partition(), i)?;
        upper = upper.max(sup_over(f.extension(i).unwrap(), &plus)?);
    }
    let mut middle_inf = ExtReal::PosInf;
    let mut middle_sup = ExtReal::NegInf;
    for (a, &n) in sets.iter().zip(ladder) {
        let s = sup_of_family(family, n, a, membership);
        middle_inf = middle_inf.min(s);
        middle_sup = middle_sup.max(s);
    }
    let add = |x: ExtReal| match x {
        ExtReal::Finite(v) => ExtReal::Finite(v + tolerance),
        other => other,
    };
    Ok(SandwichReport {
        lower_ok: lower <= add(middle_inf),
        upper_ok: middle_sup <= add(upper),
        lower,
        middle_inf,
        middle_sup,
        upper,
        tolerance,
    })
}

/// `sup_{A_n} f_n` on grid points plus refined samples.
pub(crate) fn sup_of_family(
    family: &dyn FunctionFamily,
    n: u64,
    a: &GridSet,
    membership: Option<&dyn SetFamily>,
) -> ExtReal {
    let grid: Arc<DomainGrid> = a.grid().clone();
    let d = grid.dim();
    let mut best = ExtReal::NegInf;
    for t in a.indices() {
        best = best.max(ExtReal::Finite(family.eval(n, &grid.coords(t)[..d])));
    }
    let k = samples_per_cell(&grid, n);
    let per_cell: Vec<ExtReal> = (0..grid.cell_count())
        .into_par_iter()
        .map(|c| {
            let corners = grid.cell_corners(c);
            let inside = corners.iter().filter(|&&t| a.contains(t)).count();
            if inside == 0 {
                return ExtReal::NegInf;
            }
            let mut m = ExtReal::NegInf;
            for_each_cell_sample(&grid, c, k, |p| {
                let keep = match membership {
                    Some(fam) => fam.contains(n, p),
                    None => inside == corners.len(),
                };
                if keep {
                    m = m.max(ExtReal::Finite(family.eval(n, p)));
                }
            });
            m
        })
        .collect();
    for m in per_cell {
        best = best.max(m);
    }
    if let Some(fam) = membership {
        let pts = grid.points_per_axis();
        for t in 0..grid.len() {
            let idx = grid.multi_index(t);
            for axis in 0..d {
                if idx[axis] + 1 >= pts[axis] {
                    continue;
                }
                let mut j = idx;
                j[axis] += 1;
                let u = grid.flat_index(j);
                let (pt, pu) = (grid.coords(t), grid.coords(u));
                let (in_t, in_u) = (fam.contains(n, &pt[..d]), fam.contains(n, &pu[..d]));
                if in_t == in_u {
                    continue;
                }
                let (mut inside, mut outside) = if in_t { (pt, pu) } else { (pu, pt) };
                for _ in 0..64 {
                    let mut mid = [0.0; 2];
                    for ax in 0..d {
                        mid[ax] = 0.5 * (inside[ax] + outside[ax]);
                    }
                    if mid[..d] == inside[..d] || mid[..d] == outside[..d] {
                        break;
                    }
                    if fam.contains(n, &mid[..d]) {
                        inside = mid;
                    } else {
                        outside = mid;
                    }
                }
                best = best.max(ExtReal::Finite(family.eval(n, &inside[..d])));
            }
        }
    }
    best
}

/// One failure of the sum condition at grid point `point` for pieces `(i, j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumViolation {
    pub point: usize,
    pub i: Label,
    pub j: Label,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SumConditionReport {
    pub holds: bool,
    /// Grid realization of the set on which the condition is required.
    pub n_set: GridSet,
    pub violations: Vec<SumViolation>,
}

/// Evaluates `max(f^i + g, f + g^j) ≤ max(f^i + g^j, f + g)` on
/// `∪_{i,j} (cl U_i \ U_i) ∩ (cl W_j \ W_j) ∩ cl(U_i ∩ W_j)`, for every pair
/// of pieces whose closures contain the point.
pub fn check_sum_condition(
    f: &PiecewiseField,
    g: &PiecewiseField,
) -> Result<SumConditionReport, PiecewiseError> {
    check_same(f.grid(), g.grid())?;
    let grid = f.grid();
    let fl: Vec<(Label, GridSet, GridSet)> = f
        .labels()
        .map(|i| {
            let p = f.partition().piece(i);
            let c = grid_closure(&p);
            (i, p, c)
        })
        .collect();
    let gl: Vec<(Label, GridSet, GridSet)> = g
        .labels()
        .map(|j| {
            let p = g.partition().piece(j);
            let c = grid_closure(&p);
            (j, p, c)
        })
        .collect();

    let mut n_set = GridSet::empty(grid);
    for (_, u, cu) in &fl {
        let du = cu.difference(u);
        for (_, w, cw) in &gl {
            let dw = cw.difference(w);
            let both = du.intersection(&dw);
            if both.is_empty() {
                continue;
            }
            n_set = n_set.union(&both.intersection(&grid_closure(&u.intersection(w))));
        }
    }

    let (fb, gb) = (f.base().values(), g.base().values());
    let mut violations = Vec::new();
    for s in n_set.indices() {
        for (i, _, cu) in &fl {
            if !cu.contains(s) {
                continue;
            }
            let fi = f.extension(*i).unwrap().get(s).unwrap();
            for (j, _, cw) in &gl {
                if !cw.contains(s) {
                    continue;
                }
                let gj = g.extension(*j).unwrap().get(s).unwrap();
                let lhs = (fi + gb[s]).max(fb[s] + gj);
                let rhs = (fi + gj).max(fb[s] + gb[s]);
                if lhs > rhs + 1e-12 * (1.0 + lhs.abs() + rhs.abs()) {
                    violations.push(SumViolation {
                        point: s,
                        i: *i,
                        j: *j,
                        lhs,
                        rhs,
                    });
                }
            }
        }
    }
    Ok(SumConditionReport {
        holds: violations.is_empty(),
        n_set,
        violations,
    })
}
