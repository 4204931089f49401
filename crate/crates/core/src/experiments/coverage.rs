use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scenario::{combine, Application, Scenario};
use super::ExperimentError;
use crate::randfield::{derive_seed, estimate, sample_with, BootstrapConfig, FieldSampler};
use crate::regions::{
    confinement_from_estimates, cr_absolute, cr_conjunction, cr_symmetric_difference,
    threshold_crs, Combine, EtaRule,
};

const SAMPLE_LABEL: u64 = 0x5a;
const BOOT_LABEL: u64 = 0xb0;
/// Two-sided 95% normal quantile.
const Z95: f64 = 1.959_963_984_540_054;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageOptions {
    pub alpha: f64,
    pub repetitions: usize,
    pub boot: BootstrapConfig,
    pub seed: u64,
    pub eta: EtaRule,
    /// Use this `q` instead of the bootstrap quantile (may be `+∞`).
    pub q_override: Option<f64>,
    /// Multiplies the calibrated `q`.
    pub q_scale: f64,
}

impl CoverageOptions {
    pub fn new(alpha: f64, repetitions: usize, replicates: usize, seed: u64) -> Self {
        Self {
            alpha,
            repetitions,
            boot: BootstrapConfig::new(replicates, seed),
            seed,
            eta: EtaRule::default(),
            q_override: None,
            q_scale: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub scenario: String,
    pub application: Application,
    pub alpha: f64,
    pub n: usize,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub hits: usize,
    pub coverage: f64,
    pub wilson_ci: [f64; 2],
    pub q_mean: f64,
    /// Mean of the part-(ii) quantile for the symmetric difference.
    pub q_upper_mean: Option<f64>,
    /// Repetitions whose quantile fell back to 0.
    pub fallbacks: usize,
    /// Largest violation of `L ≤ Ĥ_n ≤ U` seen (symmetric difference only).
    pub max_confinement_violation: Option<f64>,
    pub seed: u64,
    pub eta_c: f64,
    /// Wall time; not serialized so reports stay byte-identical across runs.
    #[serde(skip)]
    pub runtime_s: f64,
}

impl CoverageReport {
    pub const CSV_HEADER: &'static str = "scenario,alpha,n,B,R,coverage,ci_lo,ci_hi,q_mean,seed";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.alpha,
            self.n,
            self.b,
            self.r,
            self.coverage,
            self.wilson_ci[0],
            self.wilson_ci[1],
            self.q_mean,
            self.seed
        )
    }
}

/// Wilson score interval for `hits` successes in `r` trials.
pub fn wilson_interval(hits: usize, r: usize, z: f64) -> [f64; 2] {
    if r == 0 {
        return [0.0, 1.0];
    }
    let (n, p) = (r as f64, hits as f64 / r as f64);
    let denom = 1.0 + z * z / n;
    let centre = (p + z * z / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z * z / (4.0 * n * n)).sqrt() / denom;
    let lo = if hits == 0 {
        0.0
    } else {
        (centre - half).max(0.0)
    };
    let hi = if hits == r {
        1.0
    } else {
        (centre + half).min(1.0)
    };
    [lo, hi]
}

struct Outcome {
    hit: bool,
    q: f64,
    q_upper: Option<f64>,
    fallback: bool,
    confinement: Option<f64>,
}

fn one_repetition(
    scenario: &Scenario,
    sampler: &FieldSampler,
    truth: &(crate::domain::GridSet, crate::domain::GridSet),
    opts: &CoverageOptions,
    rep: u64,
) -> Result<Outcome, ExperimentError> {
    let samples = sample_with(
        sampler,
        &scenario.model,
        scenario.n,
        derive_seed(opts.seed, SAMPLE_LABEL, rep),
    )?;
    let boot = BootstrapConfig {
        seed: derive_seed(opts.seed, BOOT_LABEL, rep),
        ..opts.boot.clone()
    };
    let (mut q, mut q_upper, mut fallback, mut confinement) = (0.0, None, false, None);
    if opts.q_override.is_none() {
        match scenario.application {
            Application::Absolute => {
                let (cr, d) = cr_absolute(&samples[0], opts.alpha, &boot, opts.eta)?;
                (q, fallback) = (cr.q, d.fallback);
            }
            Application::Conjunction | Application::Disjunction => {
                let mode = if scenario.application == Application::Conjunction {
                    Combine::Min
                } else {
                    Combine::Max
                };
                let (cr, d) = cr_conjunction(&samples, opts.alpha, &boot, opts.eta, mode)?;
                (q, fallback) = (cr.q, d.fallback);
            }
            Application::Symdiff => {
                let res =
                    cr_symmetric_difference(&samples[0], &samples[1], opts.alpha, &boot, opts.eta)?;
                let (e1, e2) = (estimate(&samples[0]), estimate(&samples[1]));
                let conf = confinement_from_estimates(
                    &e1,
                    &e2,
                    [&scenario.truth[0], &scenario.truth[1]],
                    &res.geometry,
                )?;
                (q, q_upper, fallback) = (res.q_lower, Some(res.q_upper), res.diagnostics.fallback);
                confinement = Some(conf.ordering_violation());
            }
        }
    }
    let q_used = opts.q_override.unwrap_or(q * opts.q_scale);
    let ests: Vec<_> = samples.iter().map(estimate).collect();
    let means: Vec<_> = ests.iter().map(|e| &e.mean_hat).collect();
    let mu_hat = combine(scenario.application, &means);
    let crs = threshold_crs(&mu_hat, ests[0].tau_n, q_used)?;
    let hit = crs.lower.is_subset(&truth.0) && crs.upper.is_subset(&truth.1);
    Ok(Outcome {
        hit,
        q: q_used,
        q_upper,
        fallback,
        confinement,
    })
}

/// Repeats sample → regions → exact inclusion check against the truth masks.
pub fn run_coverage(
    scenario: &Scenario,
    opts: &CoverageOptions,
) -> Result<CoverageReport, ExperimentError> {
    if opts.repetitions == 0 {
        return Err(ExperimentError::BadR);
    }
    if !(opts.q_scale >= 0.0) || opts.q_override.is_some_and(|q| !(q >= 0.0)) {
        return Err(ExperimentError::Invalid(
            "q override and scale must be non-negative".into(),
        ));
    }
    let start = Instant::now();
    let sampler = FieldSampler::new(&scenario.model.covariance, &scenario.grid)?;
    let truth = scenario.truth_regions();
    let outcomes: Vec<Outcome> = (0..opts.repetitions as u64)
        .into_par_iter()
        .map(|rep| one_repetition(scenario, &sampler, &truth, opts, rep))
        .collect::<Result<_, _>>()?;

    let r = outcomes.len();
    let hits = outcomes.iter().filter(|o| o.hit).count();
    let mean = |v: Vec<f64>| {
        if v.is_empty() {
            None
        } else {
            Some(v.iter().sum::<f64>() / v.len() as f64)
        }
    };
    let q_mean = mean(
        outcomes
            .iter()
            .map(|o| o.q)
            .filter(|q| q.is_finite())
            .collect(),
    )
    .unwrap_or(f64::INFINITY);
    let q_upper_mean = mean(outcomes.iter().filter_map(|o| o.q_upper).collect());
    let max_confinement_violation = outcomes
        .iter()
        .filter_map(|o| o.confinement)
        .reduce(f64::max);
    Ok(CoverageReport {
        scenario: scenario.id.clone(),
        application: scenario.application,
        alpha: opts.alpha,
        n: scenario.n,
        b: opts.boot.replicates,
        r,
        hits,
        coverage: hits as f64 / r as f64,
        wilson_ci: wilson_interval(hits, r, Z95),
        q_mean,
        q_upper_mean,
        fallbacks: outcomes.iter().filter(|o| o.fallback).count(),
        max_confinement_violation,
        seed: opts.seed,
        eta_c: opts.eta.c,
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::ScenarioOverrides;

    fn small(id: &str) -> Scenario {
        let points = if id.ends_with("2d") {
            vec![15, 15]
        } else {
            vec![61]
        };
        Scenario::builtin(
            id,
            &ScenarioOverrides {
                n: Some(20),
                points: Some(points),
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn wilson_values() {
        // Reference values from the closed form with p = 0.9, n = 100.
        let [lo, hi] = wilson_interval(90, 100, Z95);
        assert!(
            (lo - 0.8256).abs() < 1e-4 && (hi - 0.9448).abs() < 1e-4,
            "{lo} {hi}"
        );
        assert_eq!(wilson_interval(0, 10, Z95)[0], 0.0);
        assert_eq!(wilson_interval(10, 10, Z95)[1], 1.0);
    }

    #[test]
    fn infinite_q_covers() {
        for id in ["abs_sine_1d", "conj_shift_1d", "symdiff_venn_2d"] {
            let mut opts = CoverageOptions::new(0.1, 5, 100, 1);
            opts.q_override = Some(f64::INFINITY);
            let rep = run_coverage(&small(id), &opts).unwrap();
            assert_eq!(rep.hits, 5);
            assert_eq!(rep.coverage, 1.0);
        }
    }

    #[test]
    fn zero_repetitions_rejected() {
        let opts = CoverageOptions::new(0.1, 0, 100, 1);
        assert!(matches!(
            run_coverage(&small("abs_sine_1d"), &opts),
            Err(ExperimentError::BadR)
        ));
    }

    #[test]
    fn report_is_deterministic_and_monotone_in_q() {
        let s = small("conj_shift_1d");
        let opts = CoverageOptions::new(0.3, 12, 100, 7);
        let mut a = run_coverage(&s, &opts).unwrap();
        let mut b = run_coverage(&s, &opts).unwrap();
        (a.runtime_s, b.runtime_s) = (0.0, 0.0);
        assert_eq!(a, b);
        let mut scaled = opts.clone();
        scaled.q_scale = 2.0;
        let c = run_coverage(&s, &scaled).unwrap();
        assert!(c.hits >= a.hits);
    }

    #[test]
    fn symdiff_reports_confinement() {
        let rep = run_coverage(
            &small("symdiff_spike_1d"),
            &CoverageOptions::new(0.1, 4, 100, 3),
        )
        .unwrap();
        assert!(rep.max_confinement_violation.unwrap() < 1e-9);
        assert!(rep.q_upper_mean.is_some());
    }

    #[test]
    fn csv_row_has_header_columns() {
        let rep =
            run_coverage(&small("abs_sine_1d"), &CoverageOptions::new(0.1, 3, 100, 1)).unwrap();
        assert_eq!(
            rep.csv_row().split(',').count(),
            CoverageReport::CSV_HEADER.split(',').count()
        );
        let json = serde_json::to_value(&rep).unwrap();
        assert_eq!(json["R"], 3);
        assert!(json.get("runtime_s").is_none());
    }
}
