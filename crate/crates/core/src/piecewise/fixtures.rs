//! Built-in sequences `f_n → f` on `[0, 1]` (and `[-2, 2]` for the spike).

use std::sync::Arc;

use super::{
    FnSetFamily, FunctionFamily, PartitionLabeling, PiecewiseError, PiecewiseField, SetFamily,
};
use crate::domain::{sym_diff, DomainGrid, ScalarField};

pub const FIXTURE_IDS: [&str; 7] = [
    "basic",
    "bad_converge",
    "all3_res_left",
    "all3_res_right",
    "bad_converge_weak",
    "mid_bdd",
    "symdiff4",
];

/// Standard bump: `exp(1 - 1/(1 - u²))` on `|u| < 1`, zero elsewhere.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - u * u)).exp()
    }
}

fn basic_fn(n: u64, s: f64) -> f64 {
    if s <= 0.5 {
        1.0
    } else {
        (2.0 - 2.0 * s).powf(n as f64)
    }
}

fn bad_converge_fn(n: u64, s: f64) -> f64 {
    if s <= 0.5 {
        return 1.0;
    }
    let n = n as f64;
    let bump_part = if s <= 0.5 + 1.0 / (5.0 * n) {
        bump(10.0 * n * s - 5.0 * n - 1.0)
    } else {
        0.0
    };
    (2.0 - 2.0 * s).powf(n) + bump_part
}

fn bad_converge_weak_fn(n: u64, s: f64) -> f64 {
    let n = n as f64;
    if s <= 0.5 - 1.0 / (4.0 * n) {
        1.0
    } else if s <= 0.5 {
        bump(4.0 * n * s - 2.0 * n + 1.0)
    } else if s <= 0.5 + 1.0 / (2.0 * n) {
        bump(4.0 * n * s - 2.0 * n - 1.0)
    } else {
        0.0
    }
}

fn mid_bdd_fn(n: u64, s: f64) -> f64 {
    if s < 0.5 {
        1.0 - (2.0 * s).powf(n as f64)
    } else {
        0.0
    }
}

/// `√n (γ̂¹_n Δ γ̂²_n − γ¹ Δ γ²)` with `γ¹ = 2|s|`, `γ² = s` and
/// `γ̂¹_n = γ¹ − 2/√n`.
pub fn symdiff4_h(n: u64, s: f64) -> f64 {
    let r = (n as f64).sqrt();
    let g1 = 2.0 * s.abs();
    r * (sym_diff(g1 - 2.0 / r, s) - sym_diff(g1, s))
}

/// Supremum of `|Ĥ_n|` over `[0, 2/√n]` on a uniform grid with `points` nodes.
pub fn symdiff4_sup(n: u64, points: usize) -> f64 {
    assert!(points >= 2);
    let hi = 2.0 / (n as f64).sqrt();
    (0..points)
        .map(|k| {
            let s = if k + 1 == points {
                hi
            } else {
                hi * k as f64 / (points - 1) as f64
            };
            symdiff4_h(n, s).abs()
        })
        .fold(0.0, f64::max)
}

/// Indicator family of `A_n = [2^{-1-1/n}, 1]` for the mid_bdd sandwich.
pub fn mid_bdd_membership() -> FnSetFamily<fn(u64, &[f64]) -> bool> {
    fn contains(n: u64, p: &[f64]) -> bool {
        p[0] >= 2f64.powf(-1.0 - 1.0 / n as f64)
    }
    FnSetFamily(contains as fn(u64, &[f64]) -> bool)
}

struct Family {
    description: &'static str,
    f: fn(u64, f64) -> f64,
}

impl FunctionFamily for Family {
    fn eval(&self, n: u64, point: &[f64]) -> f64 {
        (self.f)(n, point[0])
    }

    fn description(&self) -> &str {
        self.description
    }
}

/// A sequence, its pointwise limit with partition, and a ladder for the
/// sup sandwich.
pub struct Fixture {
    pub id: String,
    pub family: Box<dyn FunctionFamily>,
    pub limit: PiecewiseField,
    pub sandwich_ladder: Vec<u64>,
    /// `A_n` for the sandwich, if the fixture defines one.
    pub sets: Option<Box<dyn SetFamily>>,
}

impl Fixture {
    pub fn grid(&self) -> &Arc<DomainGrid> {
        self.limit.grid()
    }
}

/// Builds fixture `id` on a uniform grid with `points` nodes.
pub fn fixture(id: &str, points: usize) -> Result<Fixture, PiecewiseError> {
    let unit = || DomainGrid::line(0.0, 1.0, points).map(Arc::new);
    // Closed left piece [0, 1/2] or half-open [0, 1/2).
    let closed_left = |grid: &Arc<DomainGrid>| {
        let part = PartitionLabeling::from_fn(grid, |p| if p[0] <= 0.5 { 1 } else { 2 });
        let base = ScalarField::from_fn(grid, |p| if p[0] <= 0.5 { 1.0 } else { 0.0 });
        PiecewiseField::nearest(base, part)
    };
    let open_left = |grid: &Arc<DomainGrid>| {
        let part = PartitionLabeling::from_fn(grid, |p| if p[0] < 0.5 { 1 } else { 2 });
        let base = ScalarField::from_fn(grid, |p| if p[0] < 0.5 { 1.0 } else { 0.0 });
        PiecewiseField::nearest(base, part)
    };
    let ladder: Vec<u64> = (11..=14).map(|e| 1u64 << e).collect();

    let (description, f, limit, sets): (
        &'static str,
        fn(u64, f64) -> f64,
        _,
        Option<Box<dyn SetFamily>>,
    ) = match id {
        "basic" | "all3_res_left" => (
            "1 on [0,1/2], (2-2s)^n after",
            basic_fn,
            closed_left(&unit()?)?,
            None,
        ),
        "bad_converge" | "all3_res_right" => (
            "basic plus a bump of width 1/(5n) right of 1/2",
            bad_converge_fn,
            closed_left(&unit()?)?,
            None,
        ),
        "bad_converge_weak" => (
            "oscillating bumps of width 1/(2n) around 1/2",
            bad_converge_weak_fn,
            open_left(&unit()?)?,
            None,
        ),
        "mid_bdd" => (
            "1-(2s)^n on [0,1/2), 0 after",
            mid_bdd_fn,
            open_left(&unit()?)?,
            Some(Box::new(mid_bdd_membership())),
        ),
        "symdiff4" => {
            let grid = Arc::new(DomainGrid::line(-2.0, 2.0, points)?);
            let limit = PiecewiseField::single(ScalarField::constant(&grid, 0.0));
            (
                "spike of the symmetric difference near 0",
                symdiff4_h,
                limit,
                None,
            )
        }
        other => return Err(PiecewiseError::UnknownFixture(other.to_string())),
    };
    Ok(Fixture {
        id: id.to_string(),
        family: Box::new(Family { description, f }),
        limit,
        sandwich_ladder: ladder,
        sets,
    })
}
