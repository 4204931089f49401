//! Property suites shared by the `properties` test target and the acceptance
//! runner. Each suite returns `Err(message)` with the minimal failing input.

use std::sync::Arc;

use proptest::prelude::*;
use proptest::test_runner::{Config, TestCaseError, TestRunner};

use pwcr::domain::{grid_closure, inf_over, sup_over, DomainGrid, ExtReal, GridSet, ScalarField};
use pwcr::experiments::{run_coverage, CoverageOptions, Scenario, ScenarioOverrides};
use pwcr::piecewise::{liminf_set, limsup_plus_set, PartitionLabeling};
use pwcr::randfield::{
    bootstrap_sup, estimate, quantile, sample_fields, BootstrapConfig, Covariance, FieldExpr,
    GaussianFieldModel, NamedMasks, Statistic, SupSamples,
};
use pwcr::regions::threshold_crs;

pub type Suite = (&'static str, fn() -> Result<(), String>);

pub const SUITES: [Suite; 5] = [
    ("mask algebra laws", mask_algebra),
    ("sup over empty set is -inf", sup_conventions),
    ("regions monotone in q", cr_monotone_in_q),
    ("determinism across worker counts", worker_determinism),
    ("liminf/limsup of decreasing sequences", decreasing_limits),
];

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn report<T: std::fmt::Debug>(
    r: Result<(), proptest::test_runner::TestError<T>>,
) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// A 1D or 2D grid with a few to a few dozen points.
fn grid() -> impl Strategy<Value = Arc<DomainGrid>> {
    prop_oneof![
        (2usize..40).prop_map(|n| Arc::new(DomainGrid::line(0.0, 1.0, n).unwrap())),
        (2usize..8, 2usize..8)
            .prop_map(|(a, b)| Arc::new(DomainGrid::rect((0.0, 1.0), (-1.0, 1.0), a, b).unwrap())),
    ]
}

fn masks(k: usize) -> impl Strategy<Value = (Arc<DomainGrid>, Vec<GridSet>)> {
    grid()
        .prop_flat_map(move |g| {
            let len = g.len();
            (
                Just(g),
                prop::collection::vec(prop::collection::vec(any::<bool>(), len), k),
            )
        })
        .prop_map(|(g, raw)| {
            let sets = raw
                .into_iter()
                .map(|m| GridSet::new(g.clone(), m).unwrap())
                .collect();
            (g, sets)
        })
}

fn field_and_masks(k: usize) -> impl Strategy<Value = (ScalarField, Vec<GridSet>)> {
    masks(k)
        .prop_flat_map(|(g, sets)| {
            let len = g.len();
            (
                Just(g),
                Just(sets),
                prop::collection::vec(-5.0f64..5.0, len),
            )
        })
        .prop_map(|(g, sets, v)| (ScalarField::new(g, v).unwrap(), sets))
}

fn check(cond: bool, what: &str) -> Result<(), TestCaseError> {
    if cond {
        Ok(())
    } else {
        Err(TestCaseError::fail(what.to_string()))
    }
}

pub fn mask_algebra() -> Result<(), String> {
    report(runner(256).run(&masks(3), |(g, s)| {
        let (a, b, c) = (&s[0], &s[1], &s[2]);
        check(a.union(b) == b.union(a), "union commutes")?;
        check(
            a.intersection(&b.union(c)) == a.intersection(b).union(&a.intersection(c)),
            "distributive",
        )?;
        check(
            a.union(b).complement() == a.complement().intersection(&b.complement()),
            "De Morgan",
        )?;
        check(a.complement().complement() == *a, "double complement")?;
        check(
            a.difference(b) == a.intersection(&b.complement()),
            "difference",
        )?;
        check(a.is_subset(b) == (a.union(b) == *b), "subset via union")?;
        check(
            a.union(&GridSet::empty(&g)) == *a && a.intersection(&GridSet::full(&g)) == *a,
            "identities",
        )?;
        let cl = grid_closure(a);
        check(a.is_subset(&cl), "closure is extensive")?;
        check(
            a.intersection(b).closure().is_subset(&cl),
            "closure is monotone",
        )?;
        check(
            grid_closure(&a.union(b)) == cl.union(&grid_closure(b)),
            "closure distributes over union",
        )?;
        check(
            GridSet::from_csv(&g, &a.to_csv()).unwrap() == *a,
            "csv roundtrip",
        )?;
        check(
            GridSet::from_rle_json(&g, &a.to_rle_json()).unwrap() == *a,
            "rle roundtrip",
        )?;
        Ok(())
    }))
}

pub fn sup_conventions() -> Result<(), String> {
    report(runner(256).run(&field_and_masks(2), |(f, s)| {
        let g = f.grid().clone();
        let empty = GridSet::empty(&g);
        check(
            sup_over(&f, &empty).unwrap() == ExtReal::NegInf,
            "sup of empty set",
        )?;
        check(
            inf_over(&f, &empty).unwrap() == ExtReal::PosInf,
            "inf of empty set",
        )?;
        let (a, b) = (&s[0], &s[1]);
        let (sa, sb) = (sup_over(&f, a).unwrap(), sup_over(&f, b).unwrap());
        check(
            sup_over(&f, &a.union(b)).unwrap() == sa.max(sb),
            "sup over a union",
        )?;
        check(ExtReal::NegInf.max(sa) == sa, "-inf is the identity of max")?;
        check(
            a.indices().all(|k| ExtReal::Finite(f.values()[k]) <= sa),
            "sup bounds members",
        )?;

        let mut named = NamedMasks::new();
        named.insert("a".into(), a.clone());
        named.insert("none".into(), empty);
        let stat = Statistic::sup(FieldExpr::c(0), "a");
        check(
            stat.evaluate(std::slice::from_ref(&f), &named).unwrap() == sa,
            "statistic agrees with sup_over",
        )?;
        let none = Statistic::sup(FieldExpr::c(0).abs(), "none");
        check(
            none.evaluate(std::slice::from_ref(&f), &named).unwrap() == ExtReal::NegInf,
            "statistic over empty",
        )?;
        let both = Statistic::Max(vec![none, stat]);
        check(
            both.evaluate(std::slice::from_ref(&f), &named).unwrap() == sa,
            "empty term drops out of a max",
        )?;

        let samples = SupSamples {
            values: vec![ExtReal::NegInf; 100],
            b: 100,
            statistic_id: "none".into(),
            seed: 0,
            all_masks_empty: true,
        };
        let q = quantile(&samples, 0.9).unwrap();
        check(
            q.value == 0.0 && q.fallback,
            "quantile of -inf draws falls back to 0",
        )?;
        Ok(())
    }))
}

pub fn cr_monotone_in_q() -> Result<(), String> {
    let strat = (field_and_masks(0), 0.01f64..2.0, 0.0f64..5.0, 0.0f64..5.0);
    report(runner(256).run(&strat, |((f, _), tau, q1, q2)| {
        let (lo, hi) = (q1.min(q2), q1.max(q2));
        let a = threshold_crs(&f, tau, lo).unwrap();
        let b = threshold_crs(&f, tau, hi).unwrap();
        check(
            b.lower.is_subset(&a.lower) && b.upper.is_subset(&a.upper),
            "larger q shrinks both regions",
        )?;
        check(
            a.lower.intersection(&a.upper).is_empty(),
            "regions are disjoint",
        )?;
        let inf = threshold_crs(&f, tau, f64::INFINITY).unwrap();
        check(
            inf.lower.is_empty() && inf.upper.is_empty(),
            "infinite q gives empty regions",
        )?;
        Ok(())
    }))
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

pub fn worker_determinism() -> Result<(), String> {
    report(
        runner(6).run(&(any::<u64>(), 1usize..5), |(seed, threads)| {
            let g = Arc::new(DomainGrid::line(0.0, 1.0, 41).unwrap());
            let model = GaussianFieldModel::single(
                ScalarField::from_fn(&g, |s| s[0] - 0.5),
                Covariance::se(0.2, 1.0),
            );
            let boot = |t| {
                in_pool(t, || {
                    let sample = sample_fields(&model, 30, seed).unwrap();
                    let est = estimate(&sample[0]);
                    let mut named = NamedMasks::new();
                    named.insert("all".into(), GridSet::full(&g));
                    let stat = Statistic::sup(FieldExpr::c(0).abs(), "all");
                    bootstrap_sup(&[&est], &named, &stat, &BootstrapConfig::new(200, seed)).unwrap()
                })
            };
            check(
                boot(1) == boot(threads),
                "bootstrap draws depend on the worker count",
            )?;

            let over = ScenarioOverrides {
                n: Some(20),
                points: Some(vec![41]),
                ..Default::default()
            };
            let s = Scenario::builtin("conj_shift_1d", &over).unwrap();
            let opts = CoverageOptions::new(0.1, 4, 100, seed);
            let cov = |t| {
                let mut r = in_pool(t, || run_coverage(&s, &opts).unwrap());
                r.runtime_s = 0.0;
                r
            };
            check(
                cov(1) == cov(threads),
                "coverage report depends on the worker count",
            )?;
            Ok(())
        }),
    )
}

/// For decreasing `A_k` the tail limits collapse: the liminf is the
/// intersection, and the upper limit set is `∩_k cl(V ∩ cl A_k)`.
pub fn decreasing_limits() -> Result<(), String> {
    let strat = masks(6).prop_flat_map(|(g, s)| {
        let len = g.len();
        (Just(g), Just(s), prop::collection::vec(0i32..3, len))
    });
    report(runner(256).run(&strat, |(g, s, labels)| {
        let mut seq = vec![s[0].clone()];
        for m in &s[1..] {
            let next = seq.last().unwrap().intersection(m);
            seq.push(next);
        }
        let partition = PartitionLabeling::new(g.clone(), labels).unwrap();
        let last = seq.last().unwrap().clone();
        let inter = seq
            .iter()
            .fold(GridSet::full(&g), |acc, a| acc.intersection(a));
        check(
            inter == last,
            "decreasing sequence has its last set as intersection",
        )?;
        for k in 0..seq.len() {
            check(
                liminf_set(&seq[k..]).unwrap() == inter,
                "liminf of a decreasing tail",
            )?;
        }
        // Eventually constant at `last`, so the tail pattern is `[last]`.
        let tail = std::slice::from_ref(&last);
        check(
            liminf_set(tail).unwrap() == inter,
            "liminf of the constant tail",
        )?;
        for i in 0..3 {
            let v = partition.piece(i);
            let direct = seq.iter().fold(GridSet::full(&g), |acc, a| {
                acc.intersection(&grid_closure(&v.intersection(&grid_closure(a))))
            });
            let lim = limsup_plus_set(tail, &partition, i).unwrap();
            check(lim == direct, "limsup matches the direct intersection")?;
            check(
                inter.intersection(&v).is_subset(&lim),
                "liminf within the piece lies in the limsup",
            )?;
        }
        Ok(())
    }))
}
