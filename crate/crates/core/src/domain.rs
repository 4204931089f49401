//! Grids, masks and scalar fields.
//!
//! A [`DomainGrid`] discretizes a 1D interval or a 2D rectangle. Points are
//! enumerated row-major with the last axis varying fastest, and every mask
//! ([`GridSet`]) and field ([`ScalarField`]) indexes points the same way.
//! Topological closure is replaced by a one-cell Chebyshev dilation.

use std::cmp::Ordering;
use std::fmt;
use std::ops::Neg;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("axis {axis}: invalid extent [{lo}, {hi}]")]
    InvalidExtent { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis}: need at least 2 points, got {points}")]
    TooFewPoints { axis: usize, points: usize },
    #[error("grids support 1 or 2 axes, got {0}")]
    UnsupportedDimension(usize),
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at point {0}")]
    NonFinite(usize),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Real number extended with the two infinities.
///
/// Suprema over empty sets are [`ExtReal::NegInf`], never a large negative
/// float, so max/compare logic cannot confuse the convention with data.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ExtReal {
    NegInf,
    Finite(f64),
    PosInf,
}

impl ExtReal {
    pub fn is_finite(self) -> bool {
        matches!(self, ExtReal::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            ExtReal::Finite(v) => Some(v),
            _ => None,
        }
    }

    /// Maps to `f64`, sending the sentinels to the float infinities.
    pub fn to_f64(self) -> f64 {
        match self {
            ExtReal::NegInf => f64::NEG_INFINITY,
            ExtReal::Finite(v) => v,
            ExtReal::PosInf => f64::INFINITY,
        }
    }

    /// Inverse of [`ExtReal::to_f64`]. NaN maps to `NegInf`.
    pub fn from_f64(v: f64) -> Self {
        if v.is_nan() || v == f64::NEG_INFINITY {
            ExtReal::NegInf
        } else if v == f64::INFINITY {
            ExtReal::PosInf
        } else {
            ExtReal::Finite(v)
        }
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }

    pub fn min(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    pub fn abs(self) -> Self {
        match self {
            ExtReal::NegInf | ExtReal::PosInf => ExtReal::PosInf,
            ExtReal::Finite(v) => ExtReal::Finite(v.abs()),
        }
    }
}

impl PartialOrd for ExtReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        use ExtReal::*;
        match (self, other) {
            (NegInf, NegInf) | (PosInf, PosInf) => Some(Ordering::Equal),
            (NegInf, _) | (_, PosInf) => Some(Ordering::Less),
            (_, NegInf) | (PosInf, _) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl Neg for ExtReal {
    type Output = ExtReal;
    fn neg(self) -> ExtReal {
        match self {
            ExtReal::NegInf => ExtReal::PosInf,
            ExtReal::PosInf => ExtReal::NegInf,
            ExtReal::Finite(v) => ExtReal::Finite(-v),
        }
    }
}

impl From<f64> for ExtReal {
    fn from(v: f64) -> Self {
        ExtReal::from_f64(v)
    }
}

impl fmt::Display for ExtReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtReal::NegInf => write!(f, "-inf"),
            ExtReal::PosInf => write!(f, "inf"),
            ExtReal::Finite(v) => write!(f, "{v}"),
        }
    }
}

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            ExtReal::Finite(v) => s.serialize_f64(*v),
            ExtReal::NegInf => s.serialize_str("-inf"),
            ExtReal::PosInf => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Num(f64),
            Text(String),
        }
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(ExtReal::Finite(v)),
            Repr::Text(t) => match t.as_str() {
                "-inf" => Ok(ExtReal::NegInf),
                "inf" => Ok(ExtReal::PosInf),
                other => Err(serde::de::Error::custom(format!(
                    "bad extended real {other:?}"
                ))),
            },
        }
    }
}

/// Regular grid over a closed interval or rectangle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainGrid {
    extents: Vec<(f64, f64)>,
    points: Vec<usize>,
    spacing: Vec<f64>,
}

/// Builds a grid; see [`DomainGrid::new`].
pub fn build_grid(
    extents: &[(f64, f64)],
    points_per_axis: &[usize],
) -> Result<DomainGrid, DomainError> {
    DomainGrid::new(extents, points_per_axis)
}

impl DomainGrid {
    pub fn new(extents: &[(f64, f64)], points_per_axis: &[usize]) -> Result<Self, DomainError> {
        let dim = extents.len();
        if dim == 0 || dim > 2 {
            return Err(DomainError::UnsupportedDimension(dim));
        }
        if points_per_axis.len() != dim {
            return Err(DomainError::LengthMismatch {
                expected: dim,
                got: points_per_axis.len(),
            });
        }
        let mut spacing = Vec::with_capacity(dim);
        for (axis, (&(lo, hi), &pts)) in extents.iter().zip(points_per_axis).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && hi > lo) {
                return Err(DomainError::InvalidExtent { axis, lo, hi });
            }
            if pts < 2 {
                return Err(DomainError::TooFewPoints { axis, points: pts });
            }
            spacing.push((hi - lo) / (pts - 1) as f64);
        }
        Ok(Self {
            extents: extents.to_vec(),
            points: points_per_axis.to_vec(),
            spacing,
        })
    }

    pub fn line(lo: f64, hi: f64, points: usize) -> Result<Self, DomainError> {
        Self::new(&[(lo, hi)], &[points])
    }

    pub fn rect(x: (f64, f64), y: (f64, f64), nx: usize, ny: usize) -> Result<Self, DomainError> {
        Self::new(&[x, y], &[nx, ny])
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn len(&self) -> usize {
        self.points.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn extents(&self) -> &[(f64, f64)] {
        &self.extents
    }

    pub fn points_per_axis(&self) -> &[usize] {
        &self.points
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn max_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.spacing.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Coordinate of grid index `i` on `axis`.
    ///
    /// Computed as `lo + (hi - lo) * i / (points - 1)`, which equals
    /// `lo + i * spacing` in exact arithmetic and hits both endpoints exactly.
    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        let (lo, hi) = self.extents[axis];
        let last = self.points[axis] - 1;
        if i == last {
            hi
        } else {
            lo + (hi - lo) * (i as f64) / (last as f64)
        }
    }

    /// Per-axis indices of flat point `k`. Unused axes are zero.
    pub fn multi_index(&self, k: usize) -> [usize; 2] {
        if self.dim() == 1 {
            [k, 0]
        } else {
            [k / self.points[1], k % self.points[1]]
        }
    }

    pub fn flat_index(&self, idx: [usize; 2]) -> usize {
        if self.dim() == 1 {
            idx[0]
        } else {
            idx[0] * self.points[1] + idx[1]
        }
    }

    /// Coordinates of point `k`; only the first `dim()` entries are meaningful.
    pub fn coords(&self, k: usize) -> [f64; 2] {
        let idx = self.multi_index(k);
        let mut c = [0.0; 2];
        for (axis, slot) in c.iter_mut().enumerate().take(self.dim()) {
            *slot = self.axis_coord(axis, idx[axis]);
        }
        c
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ca, cb) = (self.coords(a), self.coords(b));
        let mut s = 0.0;
        for axis in 0..self.dim() {
            s += (ca[axis] - cb[axis]).powi(2);
        }
        s.sqrt()
    }

    /// Calls `f` on every Chebyshev neighbour of `k` (excluding `k`).
    pub fn for_each_neighbor(&self, k: usize, mut f: impl FnMut(usize)) {
        let idx = self.multi_index(k);
        if self.dim() == 1 {
            if idx[0] > 0 {
                f(k - 1);
            }
            if idx[0] + 1 < self.points[0] {
                f(k + 1);
            }
            return;
        }
        let (nx, ny) = (self.points[0] as isize, self.points[1] as isize);
        for dx in -1isize..=1 {
            for dy in -1isize..=1 {
                if dx == 0 && dy == 0 {
                    continue;
                }
                let (x, y) = (idx[0] as isize + dx, idx[1] as isize + dy);
                if x >= 0 && x < nx && y >= 0 && y < ny {
                    f((x * ny + y) as usize);
                }
            }
        }
    }

    /// Number of cells (hypercubes spanned by adjacent grid points).
    pub fn cell_count(&self) -> usize {
        self.points.iter().map(|p| p - 1).product()
    }

    /// Corner points of cell `c`, lowest corner first.
    pub fn cell_corners(&self, c: usize) -> Vec<usize> {
        if self.dim() == 1 {
            vec![c, c + 1]
        } else {
            let cy = self.points[1] - 1;
            let (i, j) = (c / cy, c % cy);
            let k = self.flat_index([i, j]);
            let ny = self.points[1];
            vec![k, k + 1, k + ny, k + ny + 1]
        }
    }

    /// Index of the grid point nearest to `p` (ties resolved toward lower indices).
    pub fn nearest_point(&self, p: &[f64]) -> usize {
        let mut idx = [0usize; 2];
        for axis in 0..self.dim() {
            let (lo, _) = self.extents[axis];
            let r = ((p[axis] - lo) / self.spacing[axis]).round();
            idx[axis] = r.clamp(0.0, (self.points[axis] - 1) as f64) as usize;
        }
        self.flat_index(idx)
    }
}

pub(crate) fn check_same(a: &Arc<DomainGrid>, b: &Arc<DomainGrid>) -> Result<(), DomainError> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(DomainError::GridMismatch)
    }
}

/// Boolean mask over the points of a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridSet {
    grid: Arc<DomainGrid>,
    mask: Vec<bool>,
}

impl GridSet {
    pub fn new(grid: Arc<DomainGrid>, mask: Vec<bool>) -> Result<Self, DomainError> {
        if mask.len() != grid.len() {
            return Err(DomainError::LengthMismatch {
                expected: grid.len(),
                got: mask.len(),
            });
        }
        Ok(Self { grid, mask })
    }

    pub fn empty(grid: &Arc<DomainGrid>) -> Self {
        Self {
            mask: vec![false; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn full(grid: &Arc<DomainGrid>) -> Self {
        Self {
            mask: vec![true; grid.len()],
            grid: grid.clone(),
        }
    }

    pub fn from_fn(grid: &Arc<DomainGrid>, mut f: impl FnMut(&[f64]) -> bool) -> Self {
        let d = grid.dim();
        let mask = (0..grid.len()).map(|k| f(&grid.coords(k)[..d])).collect();
        Self {
            grid: grid.clone(),
            mask,
        }
    }

    pub fn from_indices(grid: &Arc<DomainGrid>, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::empty(grid);
        for k in indices {
            s.mask[k] = true;
        }
        s
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn contains(&self, k: usize) -> bool {
        self.mask[k]
    }

    pub fn insert(&mut self, k: usize) {
        self.mask[k] = true;
    }

    pub fn count(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.iter().any(|&b| b)
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(|(k, _)| k)
    }

    fn zip(&self, other: &GridSet, op: impl Fn(bool, bool) -> bool) -> GridSet {
        assert!(
            check_same(&self.grid, &other.grid).is_ok(),
            "set algebra across different grids"
        );
        let mask = self
            .mask
            .iter()
            .zip(&other.mask)
            .map(|(&a, &b)| op(a, b))
            .collect();
        GridSet {
            grid: self.grid.clone(),
            mask,
        }
    }

    /// Pointwise union. Panics if the grids differ.
    pub fn union(&self, other: &GridSet) -> GridSet {
        self.zip(other, |a, b| a || b)
    }

    /// Pointwise intersection. Panics if the grids differ.
    pub fn intersection(&self, other: &GridSet) -> GridSet {
        self.zip(other, |a, b| a && b)
    }

    /// Points of `self` not in `other`. Panics if the grids differ.
    pub fn difference(&self, other: &GridSet) -> GridSet {
        self.zip(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> GridSet {
        GridSet {
            grid: self.grid.clone(),
            mask: self.mask.iter().map(|&b| !b).collect(),
        }
    }

    pub fn is_subset(&self, other: &GridSet) -> bool {
        self.mask.iter().zip(&other.mask).all(|(&a, &b)| !a || b)
    }

    /// One-cell Chebyshev dilation.
    pub fn closure(&self) -> GridSet {
        grid_closure(self)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.mask.len() * 2);
        for &b in &self.mask {
            out.push(if b { '1' } else { '0' });
            out.push('\n');
        }
        out
    }

    pub fn from_csv(grid: &Arc<DomainGrid>, text: &str) -> Result<Self, DomainError> {
        let mut mask = Vec::with_capacity(grid.len());
        for (line_no, line) in text.lines().enumerate() {
            match line.trim() {
                "" => continue,
                "0" => mask.push(false),
                "1" => mask.push(true),
                other => {
                    return Err(DomainError::Parse(format!(
                        "line {}: expected 0 or 1, got {other:?}",
                        line_no + 1
                    )))
                }
            }
        }
        Self::new(grid.clone(), mask)
    }

    /// Run lengths alternating false/true, starting with a (possibly empty) false run.
    pub fn run_lengths(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut current = false;
        let mut len = 0usize;
        for &b in &self.mask {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        runs
    }

    pub fn to_rle_json(&self) -> String {
        serde_json::json!({ "rle": self.run_lengths() }).to_string()
    }

    pub fn from_rle_json(grid: &Arc<DomainGrid>, text: &str) -> Result<Self, DomainError> {
        #[derive(Deserialize)]
        struct Rle {
            rle: Vec<usize>,
        }
        let rle: Rle = serde_json::from_str(text).map_err(|e| DomainError::Parse(e.to_string()))?;
        let mut mask = Vec::with_capacity(grid.len());
        for (r, &len) in rle.rle.iter().enumerate() {
            mask.extend(std::iter::repeat(r % 2 == 1).take(len));
        }
        Self::new(grid.clone(), mask)
    }
}

/// One-cell Chebyshev dilation of `a`.
///
/// Not idempotent: every call grows a nonempty, non-full set by one cell.
pub fn grid_closure(a: &GridSet) -> GridSet {
    let grid = &a.grid;
    let pts = grid.points_per_axis();
    let mut mask = dilate_axis(&a.mask, pts, 0, grid.dim());
    if grid.dim() == 2 {
        mask = dilate_axis(&mask, pts, 1, 2);
    }
    GridSet {
        grid: grid.clone(),
        mask,
    }
}

fn dilate_axis(mask: &[bool], pts: &[usize], axis: usize, dim: usize) -> Vec<bool> {
    let stride = if dim == 2 && axis == 0 { pts[1] } else { 1 };
    let n = pts[axis];
    let mut out = mask.to_vec();
    for (k, &b) in mask.iter().enumerate() {
        if !b {
            continue;
        }
        let i = (k / stride) % n;
        if i > 0 {
            out[k - stride] = true;
        }
        if i + 1 < n {
            out[k + stride] = true;
        }
    }
    out
}

/// Real values over grid points.
///
/// A *partial* field marks undefined points with NaN; this is how piece
/// extensions outside their closure are represented.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarField {
    grid: Arc<DomainGrid>,
    values: Vec<f64>,
    partial: bool,
}

impl ScalarField {
    pub fn new(grid: Arc<DomainGrid>, values: Vec<f64>) -> Result<Self, DomainError> {
        if values.len() != grid.len() {
            return Err(DomainError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(DomainError::NonFinite(k));
        }
        Ok(Self {
            grid,
            values,
            partial: false,
        })
    }

    pub fn partial(grid: Arc<DomainGrid>, values: Vec<Option<f64>>) -> Result<Self, DomainError> {
        if values.len() != grid.len() {
            return Err(DomainError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let values = values.into_iter().map(|v| v.unwrap_or(f64::NAN)).collect();
        Ok(Self {
            grid,
            values,
            partial: true,
        })
    }

    pub fn from_fn(grid: &Arc<DomainGrid>, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let d = grid.dim();
        let values = (0..grid.len()).map(|k| f(&grid.coords(k)[..d])).collect();
        Self {
            grid: grid.clone(),
            values,
            partial: false,
        }
    }

    pub fn constant(grid: &Arc<DomainGrid>, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![c; grid.len()],
            partial: false,
        }
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_partial(&self) -> bool {
        self.partial
    }

    /// Value at `k`, or `None` where a partial field is undefined.
    pub fn get(&self, k: usize) -> Option<f64> {
        let v = self.values[k];
        (!v.is_nan()).then_some(v)
    }

    /// Points where the field is defined.
    pub fn support(&self) -> GridSet {
        GridSet {
            grid: self.grid.clone(),
            mask: self.values.iter().map(|v| !v.is_nan()).collect(),
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .map(|&v| if v.is_nan() { v } else { f(v) })
                .collect(),
            partial: self.partial,
        }
    }

    /// Pointwise combination. Panics if the grids differ.
    pub fn zip_with(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> ScalarField {
        assert!(
            check_same(&self.grid, &other.grid).is_ok(),
            "fields on different grids"
        );
        ScalarField {
            grid: self.grid.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            partial: self.partial || other.partial,
        }
    }

    pub fn to_csv(&self) -> String {
        let d = self.grid.dim();
        let mut out = String::from(if d == 1 { "x,value\n" } else { "x,y,value\n" });
        for k in 0..self.values.len() {
            let c = self.grid.coords(k);
            let v = self.values[k];
            if d == 1 {
                out.push_str(&format!("{},{}\n", c[0], fmt_value(v)));
            } else {
                out.push_str(&format!("{},{},{}\n", c[0], c[1], fmt_value(v)));
            }
        }
        out
    }

    pub fn from_csv(grid: &Arc<DomainGrid>, text: &str) -> Result<Self, DomainError> {
        let d = grid.dim();
        let mut values = Vec::with_capacity(grid.len());
        for (line_no, line) in text.lines().enumerate().skip(1) {
            if line.trim().is_empty() {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != d + 1 {
                return Err(DomainError::Parse(format!(
                    "line {}: expected {} columns",
                    line_no + 1,
                    d + 1
                )));
            }
            let v = cols[d].trim();
            values.push(if v == "NA" {
                f64::NAN
            } else {
                v.parse::<f64>()
                    .map_err(|e| DomainError::Parse(format!("line {}: {e}", line_no + 1)))?
            });
        }
        if values.len() != grid.len() {
            return Err(DomainError::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        let partial = values.iter().any(|v| v.is_nan());
        Ok(Self {
            grid: grid.clone(),
            values,
            partial,
        })
    }
}

fn fmt_value(v: f64) -> String {
    if v.is_nan() {
        "NA".to_string()
    } else {
        format!("{v}")
    }
}

/// Maximum of `f` over `a`; `NegInf` when `a` (or its defined part) is empty.
pub fn sup_over(f: &ScalarField, a: &GridSet) -> Result<ExtReal, DomainError> {
    check_same(&f.grid, &a.grid)?;
    let mut best = ExtReal::NegInf;
    for k in a.indices() {
        let v = f.values[k];
        if !v.is_nan() {
            best = best.max(ExtReal::Finite(v));
        }
    }
    Ok(best)
}

/// Minimum of `f` over `a`; `PosInf` when `a` is empty.
pub fn inf_over(f: &ScalarField, a: &GridSet) -> Result<ExtReal, DomainError> {
    check_same(&f.grid, &a.grid)?;
    let mut best = ExtReal::PosInf;
    for k in a.indices() {
        let v = f.values[k];
        if !v.is_nan() {
            best = best.min(ExtReal::Finite(v));
        }
    }
    Ok(best)
}

/// Points with `lo <= f <= hi`. Either bound may be infinite.
pub fn tube_set(f: &ScalarField, lo: f64, hi: f64) -> Result<GridSet, DomainError> {
    if lo.is_nan() || hi.is_nan() || lo > hi {
        return Err(DomainError::InvalidInterval { lo, hi });
    }
    let mask = f
        .values
        .iter()
        .map(|&v| !v.is_nan() && lo <= v && v <= hi)
        .collect();
    Ok(GridSet {
        grid: f.grid.clone(),
        mask,
    })
}

/// `sin(2πs)` with exact zeros at half-integers.
///
/// The argument is reduced in units of whole turns before calling `sin`, so
/// grid points such as `s = 0.5` land on an exact zero rather than `1e-16`.
pub fn sin_two_pi(s: f64) -> f64 {
    let twice = 2.0 * s;
    if twice == twice.round() {
        return 0.0;
    }
    let r = s - s.floor();
    (2.0 * std::f64::consts::PI * r).sin()
}

/// Symmetric difference of two values: `max(min(-a, b), min(a, -b))`.
///
/// Positive exactly when one of `a`, `b` is positive and the other negative.
pub fn sym_diff(a: f64, b: f64) -> f64 {
    (-a).min(b).max(a.min(-b))
}
