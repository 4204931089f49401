use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::domain::{sin_two_pi, sym_diff, DomainGrid, GridSet, ScalarField};
use crate::randfield::{Covariance, GaussianFieldModel};

pub const SCENARIO_IDS: [&str; 6] = [
    "abs_sine_1d",
    "abs_circles_2d",
    "conj_shift_1d",
    "conj_shift_2d",
    "symdiff_venn_2d",
    "symdiff_spike_1d",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Application {
    Absolute,
    Conjunction,
    Disjunction,
    Symdiff,
}

/// Optional changes to a built-in scenario; `None` keeps the default.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioOverrides {
    pub n: Option<usize>,
    /// Points per axis.
    pub points: Option<Vec<usize>>,
    pub ell: Option<f64>,
    pub variance: Option<f64>,
    pub rho: Option<f64>,
    pub application: Option<Application>,
}

/// Closed-form truth, noise model and sample size.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub id: String,
    pub application: Application,
    pub n: usize,
    pub grid: Arc<DomainGrid>,
    pub truth: Vec<ScalarField>,
    pub model: GaussianFieldModel,
}

type Truth = fn(&[f64]) -> f64;

fn disc(c: [f64; 2], r: f64, p: &[f64]) -> f64 {
    4.0 * (r * r - (p[0] - c[0]).powi(2) - (p[1] - c[1]).powi(2))
}

impl Scenario {
    pub fn builtin(id: &str, over: &ScenarioOverrides) -> Result<Self, ExperimentError> {
        let square = ((-1.0, 1.0), (-1.0, 1.0));
        // (domain, default points, n, ell, application, truth fields)
        let (extent, points, n, ell, app, fields): (
            Vec<(f64, f64)>,
            Vec<usize>,
            usize,
            f64,
            Application,
            Vec<Truth>,
        ) = match id {
            "abs_sine_1d" => (
                vec![(0.0, 1.0)],
                vec![401],
                200,
                0.3,
                Application::Absolute,
                vec![|p| sin_two_pi(p[0])],
            ),
            "abs_circles_2d" => (
                vec![square.0, square.1],
                vec![41, 41],
                100,
                0.3,
                Application::Absolute,
                vec![|p| {
                    let r = p[0].hypot(p[1]);
                    5.0 * (r - 0.3) * (r - 0.7)
                }],
            ),
            "conj_shift_1d" => (
                vec![(0.0, 1.0)],
                vec![401],
                200,
                0.3,
                Application::Conjunction,
                vec![|p| sin_two_pi(p[0]), |p| sin_two_pi(p[0] - 0.1)],
            ),
            "conj_shift_2d" => (
                vec![square.0, square.1],
                vec![41, 41],
                100,
                0.3,
                Application::Conjunction,
                vec![|p| disc([-0.15, 0.0], 0.5, p), |p| {
                    disc([0.15, 0.0], 0.5, p)
                }],
            ),
            "symdiff_venn_2d" => (
                vec![square.0, square.1],
                vec![41, 41],
                100,
                0.3,
                Application::Symdiff,
                vec![|p| disc([-0.25, 0.0], 0.5, p), |p| {
                    disc([0.25, 0.0], 0.5, p)
                }],
            ),
            "symdiff_spike_1d" => (
                vec![(-2.0, 2.0)],
                vec![401],
                100,
                0.5,
                Application::Symdiff,
                vec![|p| 2.0 * p[0].abs(), |p| p[0]],
            ),
            other => return Err(ExperimentError::UnknownScenario(other.to_string())),
        };
        let points = over.points.clone().unwrap_or(points);
        if points.len() != extent.len() {
            return Err(ExperimentError::Invalid(format!(
                "scenario {id} is {}-dimensional but {} axis sizes were given",
                extent.len(),
                points.len()
            )));
        }
        let grid = Arc::new(DomainGrid::new(&extent, &points)?);
        let truth: Vec<ScalarField> = fields
            .iter()
            .map(|f| ScalarField::from_fn(&grid, f))
            .collect();
        let covariance = Covariance::se(over.ell.unwrap_or(ell), over.variance.unwrap_or(1.0));
        let model = GaussianFieldModel {
            means: truth.clone(),
            covariance,
            rho: over.rho.unwrap_or(0.0),
        };
        model.validate()?;
        let application = over.application.unwrap_or(app);
        let needed = if application == Application::Absolute {
            1
        } else {
            2
        };
        if (application == Application::Absolute) != (truth.len() == 1) || truth.len() < needed {
            return Err(ExperimentError::Invalid(format!(
                "scenario {id} does not support {application:?}"
            )));
        }
        let n = over.n.unwrap_or(n);
        if n < 2 {
            return Err(ExperimentError::Invalid(format!(
                "n must be at least 2, got {n}"
            )));
        }
        Ok(Self {
            id: id.to_string(),
            application,
            n,
            grid,
            truth,
            model,
        })
    }

    /// `μ` of the application: `|γ|`, `min_i γ^i`, `max_i γ^i` or `γ¹ Δ γ²`.
    pub fn target(&self) -> ScalarField {
        combine(self.application, &self.truth.iter().collect::<Vec<_>>())
    }

    /// `(L, 𝒰)` from the strict sign of the target on the grid.
    pub fn truth_regions(&self) -> (GridSet, GridSet) {
        let mu = self.target();
        let lower = GridSet::new(
            self.grid.clone(),
            mu.values().iter().map(|&v| v < 0.0).collect(),
        )
        .expect("grid");
        let upper = GridSet::new(
            self.grid.clone(),
            mu.values().iter().map(|&v| v > 0.0).collect(),
        )
        .expect("grid");
        (lower, upper)
    }
}

pub(crate) fn combine(app: Application, fields: &[&ScalarField]) -> ScalarField {
    match app {
        Application::Absolute => fields[0].map(f64::abs),
        Application::Conjunction => fields[1..]
            .iter()
            .fold(fields[0].clone(), |a, f| a.zip_with(f, f64::min)),
        Application::Disjunction => fields[1..]
            .iter()
            .fold(fields[0].clone(), |a, f| a.zip_with(f, f64::max)),
        Application::Symdiff => fields[0].zip_with(fields[1], sym_diff),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtins_build() {
        for id in SCENARIO_IDS {
            let s = Scenario::builtin(id, &ScenarioOverrides::default()).unwrap();
            let (l, u) = s.truth_regions();
            assert!(l.intersection(&u).is_empty());
            assert_eq!(s.model.means.len(), s.truth.len());
        }
        assert!(matches!(
            Scenario::builtin("nope", &ScenarioOverrides::default()),
            Err(ExperimentError::UnknownScenario(_))
        ));
    }

    #[test]
    fn abs_sine_zero_set_is_three_points() {
        let s = Scenario::builtin("abs_sine_1d", &ScenarioOverrides::default()).unwrap();
        let (l, u) = s.truth_regions();
        assert!(l.is_empty());
        assert_eq!(
            u.complement().indices().collect::<Vec<_>>(),
            vec![0, 200, 400]
        );
    }

    #[test]
    fn overrides_apply() {
        let over = ScenarioOverrides {
            n: Some(30),
            points: Some(vec![11, 13]),
            application: Some(Application::Disjunction),
            ..Default::default()
        };
        let s = Scenario::builtin("conj_shift_2d", &over).unwrap();
        assert_eq!(s.n, 30);
        assert_eq!(s.grid.points_per_axis(), &[11, 13]);
        let t = s.target();
        assert_eq!(
            t.values()[0],
            s.truth[0].values()[0].max(s.truth[1].values()[0])
        );
        let bad = ScenarioOverrides {
            points: Some(vec![11]),
            ..Default::default()
        };
        assert!(Scenario::builtin("conj_shift_2d", &bad).is_err());
        let bad = ScenarioOverrides {
            application: Some(Application::Absolute),
            ..Default::default()
        };
        assert!(Scenario::builtin("conj_shift_1d", &bad).is_err());
    }
}
