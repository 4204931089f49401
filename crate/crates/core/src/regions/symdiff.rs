use std::collections::BTreeMap;

use super::{
    calibrate, check_alpha, sign_partition, threshold_crs, u_sets_with_eta, ConfidenceRegions,
    Diagnostics, EtaRule, RegionsError,
};
use crate::domain::{check_same, grid_closure, sym_diff, tube_set, GridSet, ScalarField};
use crate::piecewise::{Label, PartitionLabeling};
use crate::randfield::{
    estimate, BootstrapConfig, EstimatorResult, FieldExpr, FieldSample, NamedMasks, Statistic,
};

/// Label of the piece `V_ρ`, `ρ = (sgn d, sgn m)`.
pub fn rho_label(r1: i32, r2: i32) -> Label {
    3 * (r1 + 1) + (r2 + 1)
}

pub fn rho_of(label: Label) -> (i32, i32) {
    (label / 3 - 1, label % 3 - 1)
}

/// `γ¹ Δ γ²` pointwise.
pub fn sym_diff_field(a: &ScalarField, b: &ScalarField) -> ScalarField {
    a.zip_with(b, sym_diff)
}

/// Estimated partition and sets entering both symmetric-difference statistics.
#[derive(Clone, Debug, PartialEq)]
pub struct SymdiffGeometry {
    pub tol: f64,
    pub partition: PartitionLabeling,
    pub tube: GridSet,
    pub n_set: GridSet,
    /// Keyed by `(i, k)` with `i ∈ {1, 2}`, `k ∈ {−1, 1}`.
    pub t_sets: BTreeMap<(usize, i32), GridSet>,
    pub r_sets: [GridSet; 2],
    pub d: ScalarField,
    pub m: ScalarField,
}

impl SymdiffGeometry {
    /// Geometry of the pair `(γ¹, γ²)` with sign and tube tolerance `tol`.
    /// With the truth and `tol = 0` this is the population geometry.
    pub fn build(g1: &ScalarField, g2: &ScalarField, tol: f64) -> Result<Self, RegionsError> {
        check_same(g1.grid(), g2.grid())?;
        let d = g1.zip_with(g2, |a, b| 0.5 * (a - b));
        let m = g1.zip_with(g2, |a, b| 0.5 * (a + b));
        let partition = sign_partition(&[&d, &m], tol)?;
        let mu = sym_diff_field(g1, g2);
        let tube = tube_set(&mu, -tol, tol)?;

        let mut full_sign = GridSet::empty(g1.grid());
        for r1 in [-1, 1] {
            for r2 in [-1, 1] {
                full_sign = full_sign.union(&partition.piece(rho_label(r1, r2)));
            }
        }
        let n_set = partition
            .piece(rho_label(0, 0))
            .intersection(&grid_closure(&full_sign));

        let bound = u_sets_with_eta(&mu, &partition, tol)?;
        let empty = GridSet::empty(g1.grid());
        let u_minus = |r1: i32, r2: i32| {
            bound
                .u_minus
                .get(&rho_label(r1, r2))
                .unwrap_or(&empty)
                .clone()
        };
        let u_plus = |r1: i32, r2: i32| {
            bound
                .u_plus
                .get(&rho_label(r1, r2))
                .unwrap_or(&empty)
                .clone()
        };
        let mut t_sets = BTreeMap::new();
        for i in [1usize, 2] {
            let s = 2 * i as i32 - 3;
            for k in [-1, 1] {
                let t = u_minus(-s * k, -k)
                    .union(&u_plus(s * k, k))
                    .union(&u_minus(0, -k))
                    .union(&u_plus(-k, 0))
                    .union(&n_set);
                t_sets.insert((i, k), t);
            }
        }
        let piece = |r1, r2| partition.piece(rho_label(r1, r2));
        let r_sets = [
            tube.intersection(&piece(-1, 1).union(&piece(1, -1))),
            tube.intersection(&piece(1, 1).union(&piece(-1, -1))),
        ];
        Ok(Self {
            tol,
            partition,
            tube,
            n_set,
            t_sets,
            r_sets,
            d,
            m,
        })
    }

    pub fn v00(&self) -> GridSet {
        self.partition.piece(rho_label(0, 0))
    }

    /// Every named set, for export.
    pub fn named_sets(&self) -> NamedMasks {
        let mut out = NamedMasks::new();
        for (&(i, k), t) in &self.t_sets {
            out.insert(format!("T{i}{}", if k > 0 { "+" } else { "-" }), t.clone());
        }
        out.insert("R1".into(), self.r_sets[0].clone());
        out.insert("R2".into(), self.r_sets[1].clone());
        out.insert("N".into(), self.n_set.clone());
        out.insert("V00".into(), self.v00());
        out.insert("V00-N".into(), self.v00().difference(&self.n_set));
        out.insert("tube".into(), self.tube.clone());
        out
    }

    /// `max(max_{i,k} sup_{T_i^k} k·J^i, sup_{V00∖𝒩} |J¹ΔJ²|)`, with `J^i` component `i − 1`.
    pub fn lower_statistic(&self) -> (Statistic, NamedMasks) {
        let all = self.named_sets();
        let mut masks = NamedMasks::new();
        let mut terms = Vec::new();
        for (&(i, k), t) in &self.t_sets {
            if t.is_empty() {
                continue;
            }
            let name = format!("T{i}{}", if k > 0 { "+" } else { "-" });
            let j = FieldExpr::c(i - 1);
            terms.push(Statistic::sup(
                if k > 0 { j } else { j.neg() },
                name.clone(),
            ));
            masks.insert(name, t.clone());
        }
        let rest = &all["V00-N"];
        if !rest.is_empty() {
            terms.push(Statistic::sup(
                FieldExpr::c(0).sym_diff(FieldExpr::c(1)).abs(),
                "V00-N",
            ));
            masks.insert("V00-N".into(), rest.clone());
        }
        (Statistic::Max(terms), masks)
    }

    /// `max(max_i sup_{R_i} |J^i|, sup_{V00} |J¹ΔJ²|)`.
    pub fn upper_statistic(&self) -> (Statistic, NamedMasks) {
        let mut masks = NamedMasks::new();
        let mut terms = Vec::new();
        for (i, r) in self.r_sets.iter().enumerate() {
            if !r.is_empty() {
                let name = format!("R{}", i + 1);
                terms.push(Statistic::sup(FieldExpr::c(i).abs(), name.clone()));
                masks.insert(name, r.clone());
            }
        }
        let v00 = self.v00();
        if !v00.is_empty() {
            terms.push(Statistic::sup(
                FieldExpr::c(0).sym_diff(FieldExpr::c(1)).abs(),
                "V00",
            ));
            masks.insert("V00".into(), v00);
        }
        (Statistic::Max(terms), masks)
    }
}

#[derive(Clone, Debug)]
pub struct SymdiffResult {
    /// Thresholded at `q_lower`.
    pub crs: ConfidenceRegions,
    pub q_lower: f64,
    pub q_upper: f64,
    pub upper_fallback: bool,
    pub geometry: SymdiffGeometry,
    pub diagnostics: Diagnostics,
}

/// Regions for `{γ¹ Δ γ² > 0}`. Both statistics use the same multiplier draws.
pub fn cr_symmetric_difference(
    sample1: &FieldSample,
    sample2: &FieldSample,
    alpha: f64,
    boot: &BootstrapConfig,
    eta_rule: EtaRule,
) -> Result<SymdiffResult, RegionsError> {
    check_alpha(alpha)?;
    check_same(&sample1.grid, &sample2.grid)?;
    if sample1.n != sample2.n {
        return Err(RegionsError::UnequalN);
    }
    let (e1, e2) = (estimate(sample1), estimate(sample2));
    let tau = e1.tau_n;
    let eta = eta_rule.eta(tau);
    let geometry = SymdiffGeometry::build(&e1.mean_hat, &e2.mean_hat, eta)?;
    let (lower_stat, mut masks) = geometry.lower_statistic();
    let (upper_stat, upper_masks) = geometry.upper_statistic();
    masks.extend(upper_masks);
    let comps: [&EstimatorResult; 2] = [&e1, &e2];
    let mut qs = calibrate(&comps, &masks, &[lower_stat, upper_stat], alpha, boot)?.into_iter();
    let (q_lower, fallback, lower_samples) = qs.next().expect("two statistics");
    let (q_upper, upper_fallback, _) = qs.next().expect("two statistics");

    let mu_hat = sym_diff_field(&e1.mean_hat, &e2.mean_hat);
    let mut crs = threshold_crs(&mu_hat, tau, q_lower)?;
    crs.alpha = Some(alpha);
    crs.statistic_id = lower_samples.statistic_id;
    let diagnostics = Diagnostics {
        eta_n: eta,
        fallback,
        mask_sizes: masks.iter().map(|(k, v)| (k.clone(), v.count())).collect(),
    };
    Ok(SymdiffResult {
        crs,
        q_lower,
        q_upper,
        upper_fallback,
        geometry,
        diagnostics,
    })
}

/// `Ĥ_n = τ_n⁻¹(μ̂ − μ)` and its confinement: equal to `Ĥ_n` off `𝒩̂`,
/// `±max(|Ĵ¹|, |Ĵ²|)` on `𝒩̂`.
#[derive(Clone, Debug, PartialEq)]
pub struct Confinement {
    pub lower: ScalarField,
    pub upper: ScalarField,
    pub h: ScalarField,
}

impl Confinement {
    /// Largest violation of `lower ≤ h ≤ upper` (0 when ordered).
    pub fn ordering_violation(&self) -> f64 {
        let (l, h, u) = (self.lower.values(), self.h.values(), self.upper.values());
        (0..h.len())
            .map(|k| (l[k] - h[k]).max(h[k] - u[k]).max(0.0))
            .fold(0.0, f64::max)
    }
}

pub fn confinement_fields(
    estimates: [&ScalarField; 2],
    truth: [&ScalarField; 2],
    tau_n: f64,
    geometry: &SymdiffGeometry,
) -> Result<Confinement, RegionsError> {
    if !(tau_n > 0.0) {
        return Err(RegionsError::BadTau(tau_n));
    }
    for f in estimates.iter().chain(truth.iter()) {
        check_same(f.grid(), geometry.partition.grid())?;
    }
    let j1 = estimates[0].zip_with(truth[0], |a, b| (a - b) / tau_n);
    let j2 = estimates[1].zip_with(truth[1], |a, b| (a - b) / tau_n);
    let mu_hat = sym_diff_field(estimates[0], estimates[1]);
    let mu = sym_diff_field(truth[0], truth[1]);
    let h = mu_hat.zip_with(&mu, |a, b| (a - b) / tau_n);
    let bound = j1.zip_with(&j2, |a, b| a.abs().max(b.abs()));
    let patch = |sign: f64| {
        let vals = (0..h.values().len())
            .map(|k| {
                if geometry.n_set.contains(k) {
                    sign * bound.values()[k]
                } else {
                    h.values()[k]
                }
            })
            .collect();
        ScalarField::new(h.grid().clone(), vals).expect("same grid")
    };
    Ok(Confinement {
        lower: patch(-1.0),
        upper: patch(1.0),
        h,
    })
}

/// Convenience wrapper taking the estimator results.
pub fn confinement_from_estimates(
    e1: &EstimatorResult,
    e2: &EstimatorResult,
    truth: [&ScalarField; 2],
    geometry: &SymdiffGeometry,
) -> Result<Confinement, RegionsError> {
    confinement_fields([&e1.mean_hat, &e2.mean_hat], truth, e1.tau_n, geometry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainGrid;
    use crate::randfield::{sample_fields, Covariance, GaussianFieldModel};
    use std::sync::Arc;

    fn symdiff4(n: f64) -> (Arc<DomainGrid>, [ScalarField; 2], [ScalarField; 2]) {
        let g = Arc::new(DomainGrid::line(-2.0, 2.0, 401).unwrap());
        let g1 = ScalarField::from_fn(&g, |p| 2.0 * p[0].abs());
        let g2 = ScalarField::from_fn(&g, |p| p[0]);
        let h1 = g1.map(|v| v - 2.0 / n.sqrt());
        (g.clone(), [g1, g2.clone()], [h1, g2])
    }

    #[test]
    fn rho_labels_roundtrip() {
        let mut seen = Vec::new();
        for r1 in -1..=1 {
            for r2 in -1..=1 {
                assert_eq!(rho_of(rho_label(r1, r2)), (r1, r2));
                seen.push(rho_label(r1, r2));
            }
        }
        assert_eq!(seen, (0..9).collect::<Vec<_>>());
    }

    #[test]
    fn symdiff4_geometry_and_statistic() {
        let n = 100.0;
        let (g, truth, hat) = symdiff4(n);
        let geo = SymdiffGeometry::build(&truth[0], &truth[1], 0.0).unwrap();
        assert_eq!(geo.n_set, GridSet::from_indices(&g, [200]));
        assert!(geo.n_set.is_subset(&geo.v00()));
        assert!(geo.r_sets[0].is_empty());
        assert_eq!(geo.r_sets[1], GridSet::empty(&g));
        for (&(i, _), t) in &geo.t_sets {
            assert!(t.contains(200), "T{i} holds the patched point");
        }

        let tau = 1.0 / n.sqrt();
        let j: Vec<ScalarField> = (0..2)
            .map(|i| hat[i].zip_with(&truth[i], |a, b| (a - b) / tau))
            .collect();
        let (stat, masks) = geo.lower_statistic();
        let patched = stat.evaluate(&j, &masks).unwrap().to_f64();
        assert!((patched - 2.0).abs() < 1e-9);

        let conf =
            confinement_fields([&hat[0], &hat[1]], [&truth[0], &truth[1]], tau, &geo).unwrap();
        let naive = conf.h.values()[200].abs();
        assert!(naive < 1e-9);
        assert!(patched > naive);
        assert!((conf.upper.values()[200] - 2.0).abs() < 1e-9);
        assert!((conf.lower.values()[200] + 2.0).abs() < 1e-9);
        assert!(conf.ordering_violation() < 1e-9);
    }

    #[test]
    fn no_patch_means_fields_equal_h() {
        let g = Arc::new(DomainGrid::line(0.0, 1.0, 51).unwrap());
        let a = ScalarField::from_fn(&g, |p| p[0] - 0.3);
        let b = ScalarField::constant(&g, -5.0);
        let geo = SymdiffGeometry::build(&a, &b, 0.0).unwrap();
        assert!(geo.n_set.is_empty());
        let ah = a.map(|v| v + 0.01);
        let conf = confinement_fields([&ah, &b], [&a, &b], 0.1, &geo).unwrap();
        assert_eq!(conf.lower, conf.h);
        assert_eq!(conf.upper, conf.h);
    }

    fn pair(m1: ScalarField, m2: ScalarField, n: usize, seed: u64) -> Vec<FieldSample> {
        let model = GaussianFieldModel {
            means: vec![m1, m2],
            covariance: Covariance::se(0.2, 1.0),
            rho: 0.0,
        };
        sample_fields(&model, n, seed).unwrap()
    }

    #[test]
    fn far_negative_second_field_reduces_to_one_sided() {
        let g = Arc::new(DomainGrid::line(0.0, 1.0, 101).unwrap());
        let s = pair(
            ScalarField::from_fn(&g, |p| p[0] - 0.4),
            ScalarField::constant(&g, -20.0),
            50,
            5,
        );
        let boot = BootstrapConfig::new(300, 9);
        let res = cr_symmetric_difference(&s[0], &s[1], 0.1, &boot, EtaRule::default()).unwrap();
        let (generic, _) = super::super::cr_generic(&s[0], 0.1, &boot, EtaRule::default()).unwrap();
        assert_eq!(res.crs.upper, generic.upper);
        assert_eq!(res.crs.lower, generic.lower);
        assert_eq!(res.q_lower, generic.q);
        assert!(res.geometry.n_set.is_empty());
    }

    #[test]
    fn identical_fields_give_empty_upper() {
        let g = Arc::new(DomainGrid::line(0.0, 1.0, 81).unwrap());
        let s = pair(
            ScalarField::from_fn(&g, |p| p[0] - 0.5),
            ScalarField::constant(&g, 0.0),
            30,
            2,
        );
        let same = s[0].clone();
        let res = cr_symmetric_difference(
            &same,
            &same,
            0.1,
            &BootstrapConfig::new(200, 1),
            EtaRule::default(),
        )
        .unwrap();
        assert!(res.crs.upper.is_empty());
        assert!(res.q_lower >= 0.0 && res.q_upper >= 0.0);
    }

    #[test]
    fn confinement_ordering_on_random_draws() {
        let g = Arc::new(DomainGrid::line(-1.0, 1.0, 121).unwrap());
        let m1 = ScalarField::from_fn(&g, |p| p[0].abs() - 0.2);
        let m2 = ScalarField::from_fn(&g, |p| 0.5 * p[0]);
        for seed in 0..5 {
            let s = pair(m1.clone(), m2.clone(), 40, seed);
            let (e1, e2) = (estimate(&s[0]), estimate(&s[1]));
            let geo = SymdiffGeometry::build(
                &e1.mean_hat,
                &e2.mean_hat,
                EtaRule::default().eta(e1.tau_n),
            )
            .unwrap();
            let conf = confinement_from_estimates(&e1, &e2, [&m1, &m2], &geo).unwrap();
            assert!(conf.ordering_violation() < 1e-9);
        }
    }
}
