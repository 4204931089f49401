use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::domain::GridSet;
use crate::piecewise::fixtures::{fixture, symdiff4_sup, FIXTURE_IDS};
use crate::piecewise::{
    check_restrained_bound, default_tolerance, verify_sup_sandwich, within_graph_tube, Schedule,
    SetFamily, Side,
};

/// Sizes used by [`reproduce_examples`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleOptions {
    /// Grid points for the restraint and tube checks.
    pub points: usize,
    /// Grid points for the sup sandwich.
    pub sandwich_points: usize,
    /// Sample sizes for the spike.
    pub spike_n: Vec<u64>,
    /// Points on `[0, 2/√n]` for the spike supremum.
    pub spike_points: usize,
    /// Graph-tube radius.
    pub tube_eps: f64,
}

impl Default for ExampleOptions {
    fn default() -> Self {
        Self {
            points: 1001,
            sandwich_points: 4001,
            spike_n: vec![25, 100, 400],
            spike_points: 2001,
            tube_eps: 0.1,
        }
    }
}

/// One check on one fixture.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExampleRow {
    pub fixture: String,
    pub check: String,
    pub values: Vec<f64>,
    pub expected: String,
    pub observed: String,
    /// Observed agrees with expected.
    pub pass: bool,
}

fn restraint_row(
    id: &str,
    points: usize,
    expect_pass: bool,
) -> Result<ExampleRow, ExperimentError> {
    let fx = fixture(id, points)?;
    let sched = Schedule::default_for(fx.grid());
    let tol = default_tolerance(&fx.limit);
    let r = check_restrained_bound(fx.family.as_ref(), &fx.limit, &sched, Side::Both, tol)?;
    let observed = match &r.witness {
        Some(w) if !r.passed => format!(
            "fail: {:?} side, piece {}, s = {}",
            w.side, w.label, w.point[0]
        ),
        _ => "pass".to_string(),
    };
    Ok(ExampleRow {
        fixture: id.into(),
        check: "restrained bound".into(),
        values: vec![r.worst_violation, r.tolerance],
        expected: if expect_pass { "pass" } else { "fail" }.into(),
        observed,
        pass: r.passed == expect_pass,
    })
}

/// Checks each fixture against its expected classification or value.
pub fn reproduce_examples(
    ids: &[&str],
    opts: &ExampleOptions,
) -> Result<Vec<ExampleRow>, ExperimentError> {
    let mut rows = Vec::new();
    for &id in ids {
        match id {
            "basic" => rows.push(restraint_row(id, opts.points, true)?),
            "bad_converge" | "bad_converge_weak" => {
                rows.push(restraint_row(id, opts.points, false)?)
            }
            "all3_res_left" | "all3_res_right" => {
                let fx = fixture(id, opts.points)?;
                let n = *Schedule::default_for(fx.grid()).n_ladder.last().unwrap();
                let inside = within_graph_tube(fx.family.as_ref(), &fx.limit, n, opts.tube_eps);
                let expect = id == "all3_res_left";
                rows.push(ExampleRow {
                    fixture: id.into(),
                    check: format!("graph tube eps={} at n={n}", opts.tube_eps),
                    values: vec![],
                    expected: if expect { "inside" } else { "outside" }.into(),
                    observed: if inside { "inside" } else { "outside" }.into(),
                    pass: inside == expect,
                });
            }
            "mid_bdd" => {
                let fx = fixture(id, opts.sandwich_points)?;
                let membership = fx.sets.as_deref().expect("mid_bdd defines A_n");
                let sets: Vec<GridSet> = fx
                    .sandwich_ladder
                    .iter()
                    .map(|&n| membership.grid_set(fx.grid(), n))
                    .collect();
                let r = verify_sup_sandwich(
                    fx.family.as_ref(),
                    &fx.limit,
                    &sets,
                    &fx.sandwich_ladder,
                    Some(membership as &dyn SetFamily),
                    default_tolerance(&fx.limit),
                )?;
                let (lo, mid, hi) = r.values();
                let close =
                    lo.abs() <= 1e-3 && (mid - 0.5).abs() <= 1e-3 && (hi - 1.0).abs() <= 1e-3;
                rows.push(ExampleRow {
                    fixture: id.into(),
                    check: "sup sandwich".into(),
                    values: vec![lo, mid, hi],
                    expected: "(0, 0.5, 1) within 1e-3".into(),
                    observed: format!("({lo:.6}, {mid:.6}, {hi:.6})"),
                    pass: close && r.lower_ok && r.upper_ok,
                });
            }
            "symdiff4" => {
                for &n in &opts.spike_n {
                    let sup = symdiff4_sup(n, opts.spike_points);
                    rows.push(ExampleRow {
                        fixture: id.into(),
                        check: format!("sup |H_n| on [0, 2/sqrt(n)], n={n}"),
                        values: vec![sup],
                        expected: "5/3 within 1e-2".into(),
                        observed: format!("{sup:.6}"),
                        pass: (sup - 5.0 / 3.0).abs() <= 1e-2,
                    });
                }
            }
            other => return Err(ExperimentError::UnknownFixture(other.to_string())),
        }
    }
    Ok(rows)
}

/// All built-in fixtures.
pub fn all_fixture_ids() -> Vec<&'static str> {
    FIXTURE_IDS.to_vec()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn classification_rows() {
        let opts = ExampleOptions {
            points: 401,
            ..Default::default()
        };
        let rows = reproduce_examples(
            &["basic", "bad_converge", "all3_res_left", "all3_res_right"],
            &opts,
        )
        .unwrap();
        assert!(rows.iter().all(|r| r.pass), "{rows:#?}");
        assert_eq!(rows[1].observed.starts_with("fail"), true);
    }

    #[test]
    fn spike_value_is_four_thirds() {
        // Closed form: with u = s√n, Ĥ_n = 2u for u ≤ 2/3 and 2 − u after.
        let opts = ExampleOptions {
            spike_n: vec![100],
            ..Default::default()
        };
        let rows = reproduce_examples(&["symdiff4"], &opts).unwrap();
        assert!((rows[0].values[0] - 4.0 / 3.0).abs() < 1e-3);
        assert!(!rows[0].pass);
    }

    #[test]
    fn unknown_fixture() {
        assert!(matches!(
            reproduce_examples(&["nope"], &ExampleOptions::default()),
            Err(ExperimentError::UnknownFixture(_))
        ));
    }
}
