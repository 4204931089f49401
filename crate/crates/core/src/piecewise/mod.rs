//! Piecewise continuous fields over finite partitions.
//!
//! A [`PiecewiseField`] carries a base field `f`, a labeling of grid points
//! into pieces `V_i`, and for each piece a continuous extension `f^i` defined
//! on the grid closure of `V_i`. The limit sets of set sequences and the
//! numeric restraint checks built on top live in [`restraint`].

pub mod fixtures;
pub mod restraint;

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::domain::{check_same, grid_closure, DomainError, DomainGrid, GridSet, ScalarField};

pub use restraint::{
    check_restrained_bound, check_sum_condition, default_tolerance, verify_sup_sandwich,
    within_graph_tube, RestraintReport, SandwichReport, Schedule, Side, SumConditionReport,
    SumViolation, Witness,
};

/// Piece index. Sign partitions use -1/0/1; other partitions use their own codes.
pub type Label = i32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PiecewiseError {
    #[error("piece {0} is empty")]
    EmptyPiece(Label),
    #[error("extension for piece {label} is invalid at point {point}")]
    InvalidExtension { label: Label, point: usize },
    #[error("delta ladder bottoms out at {delta}, below grid spacing {spacing}")]
    ScheduleTooCoarse { delta: f64, spacing: f64 },
    #[error("bad schedule: {0}")]
    BadSchedule(String),
    #[error("set sequence is empty")]
    EmptySequence,
    #[error("unknown fixture {0:?}")]
    UnknownFixture(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

/// Sequence `f_n` evaluated at arbitrary points of the domain.
pub trait FunctionFamily: Sync {
    fn eval(&self, n: u64, point: &[f64]) -> f64;
    fn description(&self) -> &str;
}

/// Sequence of sets `A_n` given by a membership rule.
pub trait SetFamily: Sync {
    fn contains(&self, n: u64, point: &[f64]) -> bool;

    fn grid_set(&self, grid: &Arc<DomainGrid>, n: u64) -> GridSet {
        GridSet::from_fn(grid, |p| self.contains(n, p))
    }
}

/// [`FunctionFamily`] backed by a closure.
pub struct FnFamily<F> {
    f: F,
    description: String,
}

impl<F: Fn(u64, &[f64]) -> f64 + Sync> FnFamily<F> {
    pub fn new(description: impl Into<String>, f: F) -> Self {
        Self {
            f,
            description: description.into(),
        }
    }
}

impl<F: Fn(u64, &[f64]) -> f64 + Sync> FunctionFamily for FnFamily<F> {
    fn eval(&self, n: u64, point: &[f64]) -> f64 {
        (self.f)(n, point)
    }
    fn description(&self) -> &str {
        &self.description
    }
}

/// [`SetFamily`] backed by a closure.
pub struct FnSetFamily<F>(pub F);

impl<F: Fn(u64, &[f64]) -> bool + Sync> SetFamily for FnSetFamily<F> {
    fn contains(&self, n: u64, point: &[f64]) -> bool {
        (self.0)(n, point)
    }
}

/// One label per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionLabeling {
    grid: Arc<DomainGrid>,
    labels: Vec<Label>,
}

impl PartitionLabeling {
    pub fn new(grid: Arc<DomainGrid>, labels: Vec<Label>) -> Result<Self, PiecewiseError> {
        if labels.len() != grid.len() {
            return Err(DomainError::LengthMismatch {
                expected: grid.len(),
                got: labels.len(),
            }
            .into());
        }
        Ok(Self { grid, labels })
    }

    pub fn uniform(grid: &Arc<DomainGrid>, label: Label) -> Self {
        Self {
            grid: grid.clone(),
            labels: vec![label; grid.len()],
        }
    }

    pub fn from_fn(grid: &Arc<DomainGrid>, mut f: impl FnMut(&[f64]) -> Label) -> Self {
        let d = grid.dim();
        let labels = (0..grid.len()).map(|k| f(&grid.coords(k)[..d])).collect();
        Self {
            grid: grid.clone(),
            labels,
        }
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, k: usize) -> Label {
        self.labels[k]
    }

    /// Distinct labels in increasing order.
    pub fn label_set(&self) -> Vec<Label> {
        let mut v = self.labels.clone();
        v.sort_unstable();
        v.dedup();
        v
    }

    /// The piece `V_i` as a mask (empty if the label is unused).
    pub fn piece(&self, i: Label) -> GridSet {
        GridSet::from_indices(
            &self.grid,
            self.labels
                .iter()
                .enumerate()
                .filter(|(_, &l)| l == i)
                .map(|(k, _)| k),
        )
    }
}

/// Nearest-point extension of `f` from `V_i` onto its grid closure.
///
/// On `V_i` the result equals `f`; at closure points outside `V_i` it takes
/// the value of `f` at the Euclidean-nearest point of `V_i` (ties go to the
/// lower enumeration index). Elsewhere the field is undefined.
pub fn extend_piece(
    f: &ScalarField,
    partition: &PartitionLabeling,
    i: Label,
) -> Result<ScalarField, PiecewiseError> {
    check_same(f.grid(), partition.grid())?;
    let grid = f.grid();
    let piece = partition.piece(i);
    if piece.is_empty() {
        return Err(PiecewiseError::EmptyPiece(i));
    }
    let closure = grid_closure(&piece);
    let mut values = vec![None; grid.len()];
    for k in closure.indices() {
        values[k] = if piece.contains(k) {
            Some(f.values()[k])
        } else {
            let src = nearest_in(grid, &piece, k);
            Some(f.values()[src])
        };
    }
    Ok(ScalarField::partial(grid.clone(), values)?)
}

/// Nearest point of `set` to grid point `k` by expanding Chebyshev rings.
fn nearest_in(grid: &DomainGrid, set: &GridSet, k: usize) -> usize {
    let idx = grid.multi_index(k);
    let pts = grid.points_per_axis();
    let h_min = grid.min_spacing();
    let max_r = pts.iter().cloned().max().unwrap_or(1);
    let mut best: Option<(f64, usize)> = None;
    for r in 1..=max_r {
        if let Some((d, _)) = best {
            // Every point on ring r is at least (r - 1) * h_min further out than ring 1.
            if (r as f64 - 1.0) * h_min > d {
                break;
            }
        }
        let mut visit = |j: usize| {
            if set.contains(j) {
                let d = grid.distance(k, j);
                let better = match best {
                    None => true,
                    Some((bd, bj)) => d < bd || (d == bd && j < bj),
                };
                if better {
                    best = Some((d, j));
                }
            }
        };
        if grid.dim() == 1 {
            if idx[0] >= r {
                visit(k - r);
            }
            if idx[0] + r < pts[0] {
                visit(k + r);
            }
        } else {
            let r = r as isize;
            let (x0, y0) = (idx[0] as isize, idx[1] as isize);
            for dx in -r..=r {
                for dy in -r..=r {
                    if dx.abs() != r && dy.abs() != r {
                        continue;
                    }
                    let (x, y) = (x0 + dx, y0 + dy);
                    if x >= 0 && y >= 0 && (x as usize) < pts[0] && (y as usize) < pts[1] {
                        visit(grid.flat_index([x as usize, y as usize]));
                    }
                }
            }
        }
    }
    best.map(|(_, j)| j).expect("nonempty piece")
}

/// Base field, partition and per-piece continuous extensions.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseField {
    base: ScalarField,
    partition: PartitionLabeling,
    extensions: BTreeMap<Label, ScalarField>,
}

impl PiecewiseField {
    /// Builds extensions with [`extend_piece`] for every label in use.
    pub fn nearest(
        base: ScalarField,
        partition: PartitionLabeling,
    ) -> Result<Self, PiecewiseError> {
        check_same(base.grid(), partition.grid())?;
        let mut extensions = BTreeMap::new();
        for i in partition.label_set() {
            extensions.insert(i, extend_piece(&base, &partition, i)?);
        }
        Ok(Self {
            base,
            partition,
            extensions,
        })
    }

    /// Uses caller-supplied extensions, checking that each one matches the
    /// base on its piece and is defined on the piece's grid closure.
    pub fn with_extensions(
        base: ScalarField,
        partition: PartitionLabeling,
        extensions: BTreeMap<Label, ScalarField>,
    ) -> Result<Self, PiecewiseError> {
        check_same(base.grid(), partition.grid())?;
        for i in partition.label_set() {
            let ext = extensions.get(&i).ok_or(PiecewiseError::EmptyPiece(i))?;
            check_same(base.grid(), ext.grid())?;
            let piece = partition.piece(i);
            for k in grid_closure(&piece).indices() {
                let ok = match ext.get(k) {
                    None => false,
                    Some(v) => !piece.contains(k) || v == base.values()[k],
                };
                if !ok {
                    return Err(PiecewiseError::InvalidExtension { label: i, point: k });
                }
            }
        }
        Ok(Self {
            base,
            partition,
            extensions,
        })
    }

    /// A continuous field viewed as a single piece with label 0.
    pub fn single(base: ScalarField) -> Self {
        let partition = PartitionLabeling::uniform(base.grid(), 0);
        let mut extensions = BTreeMap::new();
        extensions.insert(0, base.clone());
        Self {
            base,
            partition,
            extensions,
        }
    }

    pub fn base(&self) -> &ScalarField {
        &self.base
    }

    pub fn partition(&self) -> &PartitionLabeling {
        &self.partition
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        self.base.grid()
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        self.extensions.keys().copied()
    }

    pub fn extension(&self, i: Label) -> Option<&ScalarField> {
        self.extensions.get(&i)
    }

    /// `-f` with extensions `-f^i`.
    pub fn negated(&self) -> PiecewiseField {
        PiecewiseField {
            base: self.base.map(|v| -v),
            partition: self.partition.clone(),
            extensions: self
                .extensions
                .iter()
                .map(|(&i, e)| (i, e.map(|v| -v)))
                .collect(),
        }
    }
}

/// `A⁻∞` for a set list read as a repeating tail pattern: the points that lie
/// in every set of the list.
pub fn liminf_set(sequence: &[GridSet]) -> Result<GridSet, PiecewiseError> {
    let first = sequence.first().ok_or(PiecewiseError::EmptySequence)?;
    let mut acc = first.clone();
    for a in &sequence[1..] {
        check_same(first.grid(), a.grid())?;
        acc = acc.intersection(a);
    }
    Ok(acc)
}

/// `A^{i,+}∞ = ∩_k cl(V_i ∩ cl(∪_{n≥k} A_n))` for a repeating tail pattern.
///
/// Every tail of a periodic sequence has the same union, so the intersection
/// over `k` collapses to a single term.
pub fn limsup_plus_set(
    sequence: &[GridSet],
    partition: &PartitionLabeling,
    i: Label,
) -> Result<GridSet, PiecewiseError> {
    let first = sequence.first().ok_or(PiecewiseError::EmptySequence)?;
    check_same(first.grid(), partition.grid())?;
    let mut union = first.clone();
    for a in &sequence[1..] {
        check_same(first.grid(), a.grid())?;
        union = union.union(a);
    }
    Ok(grid_closure(
        &partition.piece(i).intersection(&grid_closure(&union)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(n: usize) -> Arc<DomainGrid> {
        Arc::new(DomainGrid::line(0.0, 1.0, n).unwrap())
    }

    fn at(grid: &DomainGrid, x: f64) -> usize {
        grid.nearest_point(&[x])
    }

    #[test]
    fn basic_extension_across_jump() {
        let g = line(101);
        let part = PartitionLabeling::from_fn(&g, |p| if p[0] <= 0.5 { 1 } else { 2 });
        let f = ScalarField::from_fn(&g, |p| if p[0] <= 0.5 { 1.0 } else { 0.0 });
        let f2 = extend_piece(&f, &part, 2).unwrap();
        assert_eq!(f2.get(at(&g, 0.5)), Some(0.0));
        assert_eq!(f2.get(at(&g, 0.4)), None);
    }

    #[test]
    fn mid_bdd_extension_is_one_at_half() {
        let g = line(101);
        let part = PartitionLabeling::from_fn(&g, |p| if p[0] < 0.5 { 1 } else { 2 });
        let f = ScalarField::from_fn(&g, |p| if p[0] < 0.5 { 1.0 } else { 0.0 });
        let pf = PiecewiseField::nearest(f, part).unwrap();
        assert_eq!(pf.extension(1).unwrap().get(at(&g, 0.5)), Some(1.0));
        assert_eq!(pf.base().values()[at(&g, 0.5)], 0.0);
    }

    #[test]
    fn constant_extends_to_constant() {
        let g = Arc::new(DomainGrid::rect((0.0, 1.0), (0.0, 2.0), 7, 9).unwrap());
        let part = PartitionLabeling::from_fn(&g, |p| if p[0] + p[1] < 1.3 { 0 } else { 5 });
        let f = ScalarField::constant(&g, 2.5);
        for i in [0, 5] {
            let e = extend_piece(&f, &part, i).unwrap();
            assert!(e.values().iter().filter(|v| !v.is_nan()).all(|&v| v == 2.5));
        }
        assert_eq!(
            extend_piece(&f, &part, 3),
            Err(PiecewiseError::EmptyPiece(3))
        );
    }

    #[test]
    fn nearest_tie_takes_lowest_index() {
        let g = line(5);
        // Point 2 sits between pieces {1} and {3} of label 7.
        let part = PartitionLabeling::new(g.clone(), vec![0, 7, 0, 7, 0]).unwrap();
        let f = ScalarField::new(g.clone(), vec![0.0, 10.0, 0.0, 30.0, 0.0]).unwrap();
        let e = extend_piece(&f, &part, 7).unwrap();
        assert_eq!(e.get(2), Some(10.0));
    }

    #[test]
    fn anisotropic_nearest_searches_beyond_first_ring() {
        // x spacing 0.01, y spacing 1: a point two columns away in x is nearer
        // than the diagonal neighbour.
        let g = Arc::new(DomainGrid::rect((0.0, 0.04), (0.0, 4.0), 5, 5).unwrap());
        let mut labels = vec![0; 25];
        labels[g.flat_index([3, 1])] = 1; // diagonal neighbour of (2,2)
        labels[g.flat_index([0, 2])] = 1; // two columns away along x
        let part = PartitionLabeling::new(g.clone(), labels).unwrap();
        let mut vals = vec![0.0; 25];
        vals[g.flat_index([3, 1])] = 1.0;
        vals[g.flat_index([0, 2])] = 2.0;
        let f = ScalarField::new(g.clone(), vals).unwrap();
        let e = extend_piece(&f, &part, 1).unwrap();
        assert_eq!(e.get(g.flat_index([2, 2])), Some(2.0));
    }

    #[test]
    fn with_extensions_validates() {
        let g = line(11);
        let part = PartitionLabeling::from_fn(&g, |p| if p[0] < 0.5 { 0 } else { 1 });
        let f = ScalarField::from_fn(&g, |p| p[0]);
        let mut ext = BTreeMap::new();
        ext.insert(0, f.clone());
        ext.insert(1, f.clone());
        assert!(PiecewiseField::with_extensions(f.clone(), part.clone(), ext.clone()).is_ok());
        ext.insert(1, f.map(|v| v + 1.0));
        assert!(matches!(
            PiecewiseField::with_extensions(f, part, ext),
            Err(PiecewiseError::InvalidExtension { label: 1, .. })
        ));
    }

    fn mid_bdd_sets(g: &Arc<DomainGrid>, ns: &[u64]) -> Vec<GridSet> {
        ns.iter()
            .map(|&n| GridSet::from_fn(g, |p| p[0] >= 0.5f64.powf(1.0 + 1.0 / n as f64)))
            .collect()
    }

    #[test]
    fn liminf_examples() {
        let g = line(4001);
        let ns: Vec<u64> = (1..=14).map(|e| 1u64 << e).collect();
        let lim = liminf_set(&mid_bdd_sets(&g, &ns)).unwrap();
        assert_eq!(lim, GridSet::from_fn(&g, |p| p[0] >= 0.5));

        let a = GridSet::from_fn(&g, |p| p[0] > 0.3 && p[0] < 0.6);
        assert_eq!(liminf_set(&[a.clone(), a.clone(), a.clone()]).unwrap(), a);
        let e = GridSet::empty(&g);
        assert!(liminf_set(&[a.clone(), e.clone(), a, e])
            .unwrap()
            .is_empty());
        assert_eq!(liminf_set(&[]), Err(PiecewiseError::EmptySequence));
    }

    #[test]
    fn limsup_plus_mid_bdd() {
        let g = line(4001);
        let h = g.spacing()[0];
        // Tail terms n >= 2^11 all snap to [0.5, 1] on this grid.
        let sets = mid_bdd_sets(&g, &[1 << 11, 1 << 12, 1 << 13, 1 << 14]);
        let part = PartitionLabeling::from_fn(&g, |p| if p[0] < 0.5 { 1 } else { 2 });
        let a1 = limsup_plus_set(&sets, &part, 1).unwrap();
        let xs: Vec<f64> = a1.indices().map(|k| g.coords(k)[0]).collect();
        assert!(xs.contains(&0.5));
        assert!(xs.iter().all(|&x| x >= 0.5 - 2.0 * h - 1e-12 && x <= 0.5));
        let a2 = limsup_plus_set(&sets, &part, 2).unwrap();
        let expect = GridSet::from_fn(&g, |p| p[0] >= 0.5 - h * 1.5);
        assert_eq!(a2, expect);
    }

    #[test]
    fn limsup_plus_constant_interior() {
        let g = line(101);
        let part = PartitionLabeling::from_fn(&g, |p| if p[0] < 0.5 { 1 } else { 2 });
        let a = GridSet::from_fn(&g, |p| p[0] > 0.2 && p[0] < 0.3);
        let got = limsup_plus_set(&[a.clone(), a.clone()], &part, 1).unwrap();
        // Two dilations: one for the inner closure, one for the outer.
        assert_eq!(got, a.closure().closure());
        assert!(limsup_plus_set(&[a], &part, 2).unwrap().is_empty());
    }
}
