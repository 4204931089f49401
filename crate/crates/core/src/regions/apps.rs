use serde::{Deserialize, Serialize};

use super::{
    calibrate, check_alpha, piecewise_crs, threshold_crs, ConfidenceRegions, Diagnostics, EtaRule,
    RegionsError,
};
use crate::domain::{tube_set, ScalarField};
use crate::piecewise::{Label, PartitionLabeling};
use crate::randfield::{
    estimate, BootstrapConfig, EstimatorResult, FieldExpr, FieldSample, NamedMasks, Statistic,
};

/// Single field whose error converges to one continuous limit `G`:
/// `μ̂ = γ̂`, one piece, statistic `max(sup_{𝔲⁺} −G, sup_{𝔲⁻} G)`.
pub fn cr_generic(
    sample: &FieldSample,
    alpha: f64,
    boot: &BootstrapConfig,
    eta_rule: EtaRule,
) -> Result<(ConfidenceRegions, Diagnostics), RegionsError> {
    let est = estimate(sample);
    let single = PartitionLabeling::uniform(est.mean_hat.grid(), 0);
    piecewise_crs(
        &est.mean_hat,
        est.tau_n,
        &single,
        |_| FieldExpr::c(0),
        &[&est],
        alpha,
        boot,
        eta_rule,
    )
}

/// Regions for `𝒰 = {|γ| > 0}` with `q` the `1 − α` quantile of
/// `sup |G*|` over the estimated zero tube `|γ̂| ≤ η_n`. `L̂` is always empty.
pub fn cr_absolute(
    sample: &FieldSample,
    alpha: f64,
    boot: &BootstrapConfig,
    eta_rule: EtaRule,
) -> Result<(ConfidenceRegions, Diagnostics), RegionsError> {
    check_alpha(alpha)?;
    let est = estimate(sample);
    let eta = eta_rule.eta(est.tau_n);
    let zero_tube = tube_set(&est.mean_hat, -eta, eta)?;
    let mut masks = NamedMasks::new();
    masks.insert("zero".into(), zero_tube.clone());
    let stat = Statistic::sup(FieldExpr::c(0).abs(), "zero");
    let (q, fallback, samples) = calibrate(&[&est], &masks, &[stat], alpha, boot)?.remove(0);
    let mu_hat = est.mean_hat.map(f64::abs);
    let mut crs = threshold_crs(&mu_hat, est.tau_n, q)?;
    crs.alpha = Some(alpha);
    crs.statistic_id = samples.statistic_id;
    let diag = Diagnostics {
        eta_n: eta,
        fallback,
        mask_sizes: [("zero".to_string(), zero_tube.count())].into(),
    };
    Ok((crs, diag))
}

/// `Min` targets intersections of excursion sets, `Max` unions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Combine {
    Min,
    Max,
}

/// Bitmask of the studies attaining the extreme within `tol` at each point.
pub(crate) fn extreme_partition(
    fields: &[&ScalarField],
    mode: Combine,
    tol: f64,
) -> PartitionLabeling {
    let grid = fields[0].grid();
    let labels = (0..grid.len())
        .map(|k| {
            let vals: Vec<f64> = fields.iter().map(|f| f.values()[k]).collect();
            let ext = match mode {
                Combine::Min => vals.iter().cloned().fold(f64::INFINITY, f64::min),
                Combine::Max => vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
            };
            vals.iter()
                .enumerate()
                .filter(|(_, &v)| match mode {
                    Combine::Min => v <= ext + tol,
                    Combine::Max => v >= ext - tol,
                })
                .fold(0, |acc, (j, _)| acc | (1 << j))
        })
        .collect();
    PartitionLabeling::new(grid.clone(), labels).expect("one label per point")
}

pub(crate) fn members(sigma: Label) -> Vec<usize> {
    (0..31).filter(|j| sigma & (1 << j) != 0).collect()
}

/// Regions for `{min_i γ^i > 0}` (or `max`), with `V̂_σ` the set where exactly
/// the studies in `σ` attain the extreme within `η_n`, and
/// `G^σ = min_{i∈σ} J^i` (or `max`) on each piece.
pub fn cr_conjunction(
    samples: &[FieldSample],
    alpha: f64,
    boot: &BootstrapConfig,
    eta_rule: EtaRule,
    mode: Combine,
) -> Result<(ConfidenceRegions, Diagnostics), RegionsError> {
    let first = samples.first().ok_or(RegionsError::NoSamples)?;
    for s in samples {
        crate::domain::check_same(&s.grid, &first.grid)?;
        if s.n != first.n {
            return Err(RegionsError::UnequalN);
        }
    }
    let ests: Vec<EstimatorResult> = samples.iter().map(estimate).collect();
    let refs: Vec<&EstimatorResult> = ests.iter().collect();
    let means: Vec<&ScalarField> = ests.iter().map(|e| &e.mean_hat).collect();
    let tau = ests[0].tau_n;
    let mu_hat = combine_fields(&means, mode);
    let partition = extreme_partition(&means, mode, eta_rule.eta(tau));
    piecewise_crs(
        &mu_hat,
        tau,
        &partition,
        |sigma| extreme_expr(mode, sigma),
        &refs,
        alpha,
        boot,
        eta_rule,
    )
}

/// `G^σ`: the minimum (or maximum) of the studies in `σ`.
pub(crate) fn extreme_expr(mode: Combine, sigma: Label) -> FieldExpr {
    let idx = members(sigma);
    match mode {
        Combine::Min => FieldExpr::min_of(&idx),
        Combine::Max => {
            let mut it = idx.into_iter().map(FieldExpr::c);
            let first = it.next().expect("nonempty piece");
            it.fold(first, FieldExpr::max)
        }
    }
}

pub(crate) fn combine_fields(fields: &[&ScalarField], mode: Combine) -> ScalarField {
    let mut out = fields[0].clone();
    for f in &fields[1..] {
        out = match mode {
            Combine::Min => out.zip_with(f, f64::min),
            Combine::Max => out.zip_with(f, f64::max),
        };
    }
    out
}
