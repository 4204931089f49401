use serde::{Deserialize, Serialize};

use super::scenario::{Application, Scenario};
use super::ExperimentError;
use crate::domain::{grid_closure, tube_set, GridSet, ScalarField};
use crate::piecewise::{Label, PartitionLabeling};
use crate::randfield::{
    bootstrap_sup, derive_seed, estimate, quantile, sample_fields, BootstrapConfig,
    EstimatorResult, FieldExpr, NamedMasks, Statistic,
};
use crate::regions::{
    combine_fields, confinement_from_estimates, estimate_u_sets, extreme_expr, extreme_partition,
    piecewise_statistic, sign_partition, Combine, EtaRule, SymdiffGeometry,
};

const MAX_WITNESSES: usize = 5;
const TIE_TOL: f64 = 1e-9;

/// Closure comparison for one piece.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabelCheck {
    pub label: Label,
    /// Size of `Z ∩ cl(Z ∩ V)`.
    pub lhs: usize,
    /// Size of `Z ∩ cl(V)`.
    pub rhs: usize,
    pub equal: bool,
    /// Points in one side only (at most five).
    pub witnesses: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtomCheck {
    pub q: f64,
    /// Bootstrap values other than the order statistic itself within 1e-9 of `q`.
    pub ties: usize,
    pub fallback: bool,
    pub atom_free: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionsReport {
    pub scenario: String,
    pub application: Application,
    /// "C1", "S1" or "none" for the absolute value, which needs no closure condition.
    pub condition: String,
    pub closure_holds: Option<bool>,
    pub labels: Vec<LabelCheck>,
    pub n_set_truth: Option<usize>,
    pub n_set_estimated: Option<usize>,
    /// Largest `max(U − Ĥ_n, Ĥ_n − L)` over `𝒩̂` for one draw; no verdict.
    pub confinement_gap: Option<f64>,
    pub atoms: AtomCheck,
}

/// Grid zero set: points where `|μ| ≤ tol` or a neighbour has the opposite strict sign.
pub fn grid_zero_set(mu: &ScalarField, tol: f64) -> GridSet {
    let grid = mu.grid();
    let v = mu.values();
    let sign = |x: f64| {
        if x > tol {
            1
        } else if x < -tol {
            -1
        } else {
            0
        }
    };
    let mut out = GridSet::empty(grid);
    for k in 0..grid.len() {
        let s = sign(v[k]);
        let mut hit = s == 0;
        if !hit {
            grid.for_each_neighbor(k, |j| hit |= sign(v[j]) == -s);
        }
        if hit {
            out.insert(k);
        }
    }
    out
}

/// Grid form of `cl(μ⁻¹(0) ∩ V_σ) = μ⁻¹(0) ∩ cl(V_σ)` with both sides kept
/// inside the grid zero set `Z`.
pub fn closure_condition(zero: &GridSet, partition: &PartitionLabeling) -> Vec<LabelCheck> {
    let grid = partition.grid();
    partition
        .label_set()
        .into_iter()
        .map(|label| {
            let v = partition.piece(label);
            let lhs = zero.intersection(&grid_closure(&zero.intersection(&v)));
            let rhs = zero.intersection(&grid_closure(&v));
            let diff = lhs.difference(&rhs).union(&rhs.difference(&lhs));
            LabelCheck {
                label,
                lhs: lhs.count(),
                rhs: rhs.count(),
                equal: diff.is_empty(),
                witnesses: diff
                    .indices()
                    .take(MAX_WITNESSES)
                    .map(|k| grid.coords(k)[..grid.dim()].to_vec())
                    .collect(),
            }
        })
        .collect()
}

fn scale_tol(fields: &[ScalarField]) -> f64 {
    let m = fields
        .iter()
        .flat_map(|f| f.values().iter().map(|v| v.abs()))
        .fold(0.0, f64::max);
    1e-12 * m.max(1.0)
}

fn atoms(
    comps: &[&EstimatorResult],
    masks: &NamedMasks,
    stat: &Statistic,
    alpha: f64,
    boot: &BootstrapConfig,
) -> Result<AtomCheck, ExperimentError> {
    let samples = bootstrap_sup(comps, masks, stat, boot)?;
    let q = quantile(&samples, 1.0 - alpha)?;
    let near = samples
        .values
        .iter()
        .filter(|v| (v.to_f64() - q.value).abs() <= TIE_TOL)
        .count();
    let ties = near.saturating_sub(1);
    Ok(AtomCheck {
        q: q.value,
        ties,
        fallback: q.fallback,
        atom_free: ties == 0 && !q.fallback,
    })
}

/// C1/S1 on the truth, plus the S2 and C2/S3 diagnostics from one draw.
pub fn check_conditions(
    scenario: &Scenario,
    alpha: f64,
    boot: &BootstrapConfig,
    eta_rule: EtaRule,
) -> Result<ConditionsReport, ExperimentError> {
    let tol = scale_tol(&scenario.truth);
    let zero = grid_zero_set(&scenario.target(), tol);
    let samples = sample_fields(&scenario.model, scenario.n, derive_seed(boot.seed, 0xc0, 0))?;
    let ests: Vec<EstimatorResult> = samples.iter().map(estimate).collect();
    let comps: Vec<&EstimatorResult> = ests.iter().collect();
    let tau = ests[0].tau_n;
    let eta = eta_rule.eta(tau);
    let mut report = ConditionsReport {
        scenario: scenario.id.clone(),
        application: scenario.application,
        condition: "none".into(),
        closure_holds: None,
        labels: vec![],
        n_set_truth: None,
        n_set_estimated: None,
        confinement_gap: None,
        atoms: AtomCheck {
            q: 0.0,
            ties: 0,
            fallback: false,
            atom_free: true,
        },
    };
    match scenario.application {
        Application::Absolute => {
            let mut masks = NamedMasks::new();
            masks.insert("zero".into(), tube_set(&ests[0].mean_hat, -eta, eta)?);
            report.atoms = atoms(
                &comps,
                &masks,
                &Statistic::sup(FieldExpr::c(0).abs(), "zero"),
                alpha,
                boot,
            )?;
        }
        Application::Conjunction | Application::Disjunction => {
            let mode = if scenario.application == Application::Conjunction {
                Combine::Min
            } else {
                Combine::Max
            };
            let truth: Vec<&ScalarField> = scenario.truth.iter().collect();
            report.condition = "C1".into();
            report.labels = closure_condition(&zero, &extreme_partition(&truth, mode, tol));
            let means: Vec<&ScalarField> = ests.iter().map(|e| &e.mean_hat).collect();
            let mu_hat = combine_fields(&means, mode);
            let part = extreme_partition(&means, mode, eta);
            let bound = estimate_u_sets(&mu_hat, &part, tau, eta_rule)?;
            let (stat, masks) = piecewise_statistic(&bound, |sigma| extreme_expr(mode, sigma));
            report.atoms = atoms(&comps, &masks, &stat, alpha, boot)?;
        }
        Application::Symdiff => {
            let (t1, t2) = (&scenario.truth[0], &scenario.truth[1]);
            report.condition = "S1".into();
            let d = t1.zip_with(t2, |a, b| 0.5 * (a - b));
            let m = t1.zip_with(t2, |a, b| 0.5 * (a + b));
            report.labels = closure_condition(&zero, &sign_partition(&[&d, &m], tol)?);
            report.n_set_truth = Some(SymdiffGeometry::build(t1, t2, tol)?.n_set.count());
            let geo = SymdiffGeometry::build(&ests[0].mean_hat, &ests[1].mean_hat, eta)?;
            report.n_set_estimated = Some(geo.n_set.count());
            let conf = confinement_from_estimates(&ests[0], &ests[1], [t1, t2], &geo)?;
            let gap = geo
                .n_set
                .indices()
                .map(|k| {
                    let h = conf.h.values()[k];
                    (conf.upper.values()[k] - h).max(h - conf.lower.values()[k])
                })
                .fold(0.0, f64::max);
            report.confinement_gap = Some(gap);
            let (stat, masks) = geo.upper_statistic();
            report.atoms = atoms(&comps, &masks, &stat, alpha, boot)?;
        }
    }
    if report.condition != "none" {
        report.closure_holds = Some(report.labels.iter().all(|l| l.equal));
    }
    Ok(report)
}
