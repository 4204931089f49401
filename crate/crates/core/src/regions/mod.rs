//! Confidence regions `L̂ = {μ̂/τ_n < −q}` and `Û = {μ̂/τ_n > q}` with `q`
//! calibrated by the multiplier bootstrap, for a generic piecewise limit and
//! for the absolute value, conjunction/disjunction and symmetric difference.

mod apps;
mod symdiff;

pub(crate) use apps::{combine_fields, extreme_expr, extreme_partition};
pub use apps::{cr_absolute, cr_conjunction, cr_generic, Combine};
pub use symdiff::{
    confinement_fields, confinement_from_estimates, cr_symmetric_difference, rho_label, rho_of,
    sym_diff_field, Confinement, SymdiffGeometry, SymdiffResult,
};

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{grid_closure, tube_set, DomainError, DomainGrid, GridSet, ScalarField};
use crate::piecewise::{Label, PartitionLabeling};
use crate::randfield::{
    bootstrap_sup_many, quantile, BootstrapConfig, EstimatorResult, FieldExpr, NamedMasks,
    RandFieldError, Statistic, SupSamples,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RegionsError {
    #[error("q must be non-negative, got {0}")]
    NegativeQ(f64),
    #[error("tau_n must be positive, got {0}")]
    BadTau(f64),
    #[error("alpha must lie in (0, 1), got {0}")]
    BadAlpha(f64),
    #[error("samples have different replicate counts")]
    UnequalN,
    #[error("need at least one sample")]
    NoSamples,
    #[error(transparent)]
    RandField(#[from] RandFieldError),
    #[error(transparent)]
    Domain(#[from] DomainError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfidenceRegions {
    pub lower: GridSet,
    pub upper: GridSet,
    pub q: f64,
    pub tau_n: f64,
    pub alpha: Option<f64>,
    pub statistic_id: String,
}

/// Strict thresholding of `μ̂/τ_n` at `±q`.
pub fn threshold_crs(
    mu_hat: &ScalarField,
    tau_n: f64,
    q: f64,
) -> Result<ConfidenceRegions, RegionsError> {
    if !(q >= 0.0) {
        return Err(RegionsError::NegativeQ(q));
    }
    if !(tau_n > 0.0) {
        return Err(RegionsError::BadTau(tau_n));
    }
    let grid = mu_hat.grid();
    let scaled: Vec<f64> = mu_hat.values().iter().map(|m| m / tau_n).collect();
    Ok(ConfidenceRegions {
        lower: GridSet::new(grid.clone(), scaled.iter().map(|&v| v < -q).collect())?,
        upper: GridSet::new(grid.clone(), scaled.iter().map(|&v| v > q).collect())?,
        q,
        tau_n,
        alpha: None,
        statistic_id: String::new(),
    })
}

/// `η_n = c · τ_n · max(1, ln n)` with `n = τ_n⁻²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaRule {
    pub c: f64,
}

impl Default for EtaRule {
    fn default() -> Self {
        Self { c: 1.0 }
    }
}

impl EtaRule {
    pub fn eta(&self, tau_n: f64) -> f64 {
        let ln_n = -2.0 * tau_n.ln();
        self.c * tau_n * ln_n.max(1.0)
    }
}

/// Grid estimates of `𝔲⁺_i(0)`, `𝔲⁻_i(0)` and the zero tube of `μ̂`.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryEstimate {
    pub eta_n: f64,
    pub u_plus: BTreeMap<Label, GridSet>,
    pub u_minus: BTreeMap<Label, GridSet>,
    pub tube: GridSet,
}

/// `𝔲̂⁺_i = cl(cl(μ̂⁻¹[0, η_n]) ∩ V̂_i)` and the mirror with `[−η_n, 0]`.
pub fn estimate_u_sets(
    mu_hat: &ScalarField,
    partition: &PartitionLabeling,
    tau_n: f64,
    eta_rule: EtaRule,
) -> Result<BoundaryEstimate, RegionsError> {
    let eta = eta_rule.eta(tau_n);
    u_sets_with_eta(mu_hat, partition, eta)
}

pub(crate) fn u_sets_with_eta(
    mu_hat: &ScalarField,
    partition: &PartitionLabeling,
    eta: f64,
) -> Result<BoundaryEstimate, RegionsError> {
    let plus = grid_closure(&tube_set(mu_hat, 0.0, eta)?);
    let minus = grid_closure(&tube_set(mu_hat, -eta, 0.0)?);
    let mut u_plus = BTreeMap::new();
    let mut u_minus = BTreeMap::new();
    for i in partition.label_set() {
        let v = partition.piece(i);
        u_plus.insert(i, grid_closure(&plus.intersection(&v)));
        u_minus.insert(i, grid_closure(&minus.intersection(&v)));
    }
    Ok(BoundaryEstimate {
        eta_n: eta,
        u_plus,
        u_minus,
        tube: tube_set(mu_hat, -eta, eta)?,
    })
}

fn sign(v: f64, tol: f64) -> i32 {
    if v > tol {
        1
    } else if v < -tol {
        -1
    } else {
        0
    }
}

/// Labels by sign (values within `tol` of zero count as 0). With two fields
/// the label encodes the pair of signs, see [`rho_label`].
pub fn sign_partition(
    fields: &[&ScalarField],
    tol: f64,
) -> Result<PartitionLabeling, RegionsError> {
    let grid: Arc<DomainGrid> = fields
        .first()
        .ok_or(RegionsError::NoSamples)?
        .grid()
        .clone();
    for f in fields {
        crate::domain::check_same(f.grid(), &grid)?;
    }
    let labels = (0..grid.len())
        .map(|k| match fields {
            [a] => sign(a.values()[k], tol),
            [a, b] => rho_label(sign(a.values()[k], tol), sign(b.values()[k], tol)),
            _ => panic!("sign_partition takes one or two fields"),
        })
        .collect();
    Ok(PartitionLabeling::new(grid, labels).expect("one label per point"))
}

/// Extra output of every constructor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub eta_n: f64,
    /// The chosen order statistic was −∞ and `q` fell back to 0.
    pub fallback: bool,
    /// Point counts of the masks entering the statistic.
    pub mask_sizes: BTreeMap<String, usize>,
}

pub(crate) fn check_alpha(alpha: f64) -> Result<(), RegionsError> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(RegionsError::BadAlpha(alpha))
    }
}

/// `max_i max(sup_{𝔲⁺_i} −H^i, sup_{𝔲⁻_i} H^i)` over labels with nonempty sets.
pub(crate) fn piecewise_statistic(
    bound: &BoundaryEstimate,
    expr: impl Fn(Label) -> FieldExpr,
) -> (Statistic, NamedMasks) {
    let mut terms = Vec::new();
    let mut masks = NamedMasks::new();
    for (&i, set) in &bound.u_plus {
        if !set.is_empty() {
            let name = format!("u+{i}");
            terms.push(Statistic::sup(expr(i).neg(), name.clone()));
            masks.insert(name, set.clone());
        }
    }
    for (&i, set) in &bound.u_minus {
        if !set.is_empty() {
            let name = format!("u-{i}");
            terms.push(Statistic::sup(expr(i), name.clone()));
            masks.insert(name, set.clone());
        }
    }
    (Statistic::Max(terms), masks)
}

/// Calibrates `q` for each statistic at level `1 − α`.
pub(crate) fn calibrate(
    components: &[&EstimatorResult],
    masks: &NamedMasks,
    statistics: &[Statistic],
    alpha: f64,
    boot: &BootstrapConfig,
) -> Result<Vec<(f64, bool, SupSamples)>, RegionsError> {
    let samples = bootstrap_sup_many(components, masks, statistics, boot)?;
    samples
        .into_iter()
        .map(|s| {
            let q = quantile(&s, 1.0 - alpha)?;
            Ok((q.value.max(0.0), q.fallback, s))
        })
        .collect()
}

/// Shared core of the generic and conjunction rules: partition, `𝔲` sets,
/// bootstrap of the per-piece limit, threshold.
pub(crate) fn piecewise_crs(
    mu_hat: &ScalarField,
    tau_n: f64,
    partition: &PartitionLabeling,
    expr: impl Fn(Label) -> FieldExpr,
    components: &[&EstimatorResult],
    alpha: f64,
    boot: &BootstrapConfig,
    eta_rule: EtaRule,
) -> Result<(ConfidenceRegions, Diagnostics), RegionsError> {
    check_alpha(alpha)?;
    let bound = estimate_u_sets(mu_hat, partition, tau_n, eta_rule)?;
    let (stat, masks) = piecewise_statistic(&bound, expr);
    let (q, fallback, samples) =
        calibrate(components, &masks, std::slice::from_ref(&stat), alpha, boot)?.remove(0);
    let mut crs = threshold_crs(mu_hat, tau_n, q)?;
    crs.alpha = Some(alpha);
    crs.statistic_id = samples.statistic_id;
    let diag = Diagnostics {
        eta_n: bound.eta_n,
        fallback,
        mask_sizes: masks.iter().map(|(k, v)| (k.clone(), v.count())).collect(),
    };
    Ok((crs, diag))
}
