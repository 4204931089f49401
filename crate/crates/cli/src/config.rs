use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};

use pwcr::experiments::{Application, SCENARIO_IDS};
use pwcr::piecewise::fixtures::FIXTURE_IDS;

pub const OUT_DIR_ENV: &str = "PWCR_OUT_DIR";
pub const DEFAULT_OUT_DIR: &str = "pwcr-out";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Coverage,
    Regions,
    Examples,
    Conditions,
    Quantile,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
pub enum MaskFormat {
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "rle-json")]
    #[value(name = "rle-json")]
    RleJson,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum QuantileStat {
    /// `sup G*` over the mask.
    Sup,
    /// `sup |G*|` over the mask.
    SupAbs,
}

/// Grid for replicate files given through `inputs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub extents: Vec<[f64; 2]>,
    pub points: Vec<usize>,
}

/// One JSON document describing a run. Omitted fields take the defaults below.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub command: Option<Command>,
    pub scenario: Option<String>,
    /// Replicate files, one replicate per line, values in grid order.
    pub inputs: Vec<PathBuf>,
    pub grid: Option<GridSpec>,
    pub application: Option<Application>,
    pub alpha: f64,
    pub n: Option<usize>,
    #[serde(rename = "B")]
    pub b: usize,
    #[serde(rename = "R")]
    pub r: usize,
    pub points: Option<Vec<usize>>,
    pub ell: Option<f64>,
    pub eta_c: f64,
    pub seed: u64,
    pub studentize: bool,
    pub q_override: Option<f64>,
    pub q_scale: f64,
    pub fixtures: Option<Vec<String>>,
    /// Single grid index for the `quantile` mask; the full grid when absent.
    pub point: Option<usize>,
    pub stat: QuantileStat,
    pub out_dir: Option<PathBuf>,
    pub format: MaskFormat,
    pub workers: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            command: None,
            scenario: None,
            inputs: vec![],
            grid: None,
            application: None,
            alpha: 0.1,
            n: None,
            b: 1000,
            r: 100,
            points: None,
            ell: None,
            eta_c: 1.0,
            seed: 0,
            studentize: false,
            q_override: None,
            q_scale: 1.0,
            fixtures: None,
            point: None,
            stat: QuantileStat::SupAbs,
            out_dir: None,
            format: MaskFormat::Csv,
            workers: None,
        }
    }
}

/// Flags that replace top-level scalar fields of the config.
#[derive(Args, Debug, Default)]
pub struct Overrides {
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(short = 'B', long = "replicates")]
    pub b: Option<usize>,
    #[arg(short = 'R', long = "repetitions")]
    pub r: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub eta_c: Option<f64>,
    #[arg(long)]
    pub ell: Option<f64>,
    #[arg(long)]
    pub studentize: bool,
    #[arg(long)]
    pub q_override: Option<f64>,
    #[arg(long)]
    pub q_scale: Option<f64>,
    #[arg(long)]
    pub point: Option<usize>,
    #[arg(long, value_enum)]
    pub stat: Option<QuantileStat>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<MaskFormat>,
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, PartialEq)]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

fn invalid(field: &str, message: impl Into<String>) -> ValidationError {
    ValidationError {
        field: field.to_string(),
        message: message.into(),
    }
}

impl RunConfig {
    pub fn apply(&mut self, o: Overrides) {
        macro_rules! set {
            ($($f:ident => $g:ident),*) => { $(if let Some(v) = o.$f { self.$g = v; })* };
        }
        set!(alpha => alpha, b => b, r => r, seed => seed, eta_c => eta_c, q_scale => q_scale, stat => stat, format => format);
        if o.scenario.is_some() {
            self.scenario = o.scenario;
        }
        if o.n.is_some() {
            self.n = o.n;
        }
        if o.ell.is_some() {
            self.ell = o.ell;
        }
        if o.q_override.is_some() {
            self.q_override = o.q_override;
        }
        if o.point.is_some() {
            self.point = o.point;
        }
        if o.out_dir.is_some() {
            self.out_dir = o.out_dir;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        self.studentize |= o.studentize;
    }

    /// Fills the output directory from the environment and checks ranges.
    pub fn resolve(mut self, env_out: Option<String>) -> Result<Self, ValidationError> {
        let command = self
            .command
            .ok_or_else(|| invalid("command", "no command given"))?;
        if self.out_dir.is_none() {
            self.out_dir = Some(PathBuf::from(
                env_out.unwrap_or_else(|| DEFAULT_OUT_DIR.to_string()),
            ));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid(
                "alpha",
                format!("must lie in (0, 1), got {}", self.alpha),
            ));
        }
        if self.b < 100 {
            return Err(invalid(
                "B",
                format!("must be at least 100, got {}", self.b),
            ));
        }
        if self.r == 0 {
            return Err(invalid("R", "must be at least 1"));
        }
        if self.n.is_some_and(|n| n < 2) {
            return Err(invalid("n", "must be at least 2"));
        }
        if !(self.eta_c > 0.0 && self.eta_c.is_finite()) {
            return Err(invalid("eta_c", "must be positive"));
        }
        if self.ell.is_some_and(|e| !(e > 0.0 && e.is_finite())) {
            return Err(invalid("ell", "must be positive"));
        }
        if !(self.q_scale >= 0.0) {
            return Err(invalid("q_scale", "must be non-negative"));
        }
        if self.q_override.is_some_and(|q| !(q >= 0.0)) {
            return Err(invalid("q_override", "must be non-negative"));
        }
        if self.workers == Some(0) {
            return Err(invalid("workers", "must be at least 1"));
        }
        if let Some(s) = &self.scenario {
            if !SCENARIO_IDS.contains(&s.as_str()) {
                return Err(invalid(
                    "scenario",
                    format!("unknown scenario '{s}'; known: {}", SCENARIO_IDS.join(", ")),
                ));
            }
        }
        if let Some(f) = &self.fixtures {
            if let Some(bad) = f.iter().find(|id| !FIXTURE_IDS.contains(&id.as_str())) {
                return Err(invalid("fixtures", format!("unknown fixture '{bad}'")));
            }
        }
        match command {
            Command::Coverage | Command::Conditions => {
                if self.scenario.is_none() {
                    return Err(invalid("scenario", "required for this command"));
                }
            }
            Command::Regions | Command::Quantile => {
                if self.scenario.is_none() == self.inputs.is_empty() {
                    return Err(invalid(
                        "scenario",
                        "give exactly one of scenario or inputs",
                    ));
                }
                if !self.inputs.is_empty() {
                    let grid = self
                        .grid
                        .as_ref()
                        .ok_or_else(|| invalid("grid", "required with inputs"))?;
                    if grid.extents.len() != grid.points.len()
                        || !(1..=2).contains(&grid.points.len())
                    {
                        return Err(invalid(
                            "grid",
                            "extents and points must both have 1 or 2 entries",
                        ));
                    }
                    if command == Command::Regions && self.application.is_none() {
                        return Err(invalid("application", "required with inputs"));
                    }
                    let need = if self.application == Some(Application::Absolute)
                        || command == Command::Quantile
                    {
                        1
                    } else {
                        2
                    };
                    if self.inputs.len() < need
                        || (self.application == Some(Application::Symdiff)
                            && self.inputs.len() != 2)
                    {
                        return Err(invalid(
                            "inputs",
                            "wrong number of replicate files for the application",
                        ));
                    }
                }
            }
            Command::Examples => {}
        }
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> RunConfig {
        serde_json::from_str(json).unwrap()
    }

    #[test]
    fn defaults_and_validation() {
        let c = parse(r#"{"command":"coverage","scenario":"abs_sine_1d","alpha":0.1,"R":10}"#);
        assert_eq!(c.r, 10);
        assert_eq!(c.b, 1000);
        let c = c.resolve(None).unwrap();
        assert_eq!(
            c.out_dir.as_deref(),
            Some(std::path::Path::new(DEFAULT_OUT_DIR))
        );

        let err = parse(r#"{"command":"coverage","scenario":"abs_sine_1d","alpha":1.5}"#)
            .resolve(None)
            .unwrap_err();
        assert_eq!(err.field, "alpha");
        let err = parse(r#"{"command":"coverage"}"#)
            .resolve(None)
            .unwrap_err();
        assert_eq!(err.field, "scenario");
        let err = parse(r#"{"command":"coverage","scenario":"x"}"#)
            .resolve(None)
            .unwrap_err();
        assert_eq!(err.field, "scenario");
        assert!(serde_json::from_str::<RunConfig>(r#"{"alpah":0.1}"#).is_err());
    }

    #[test]
    fn env_and_flags() {
        let mut c = parse(r#"{"command":"examples","seed":3}"#);
        c.apply(Overrides {
            seed: Some(9),
            b: Some(200),
            ..Default::default()
        });
        assert_eq!((c.seed, c.b), (9, 200));
        let c = c.resolve(Some("/tmp/x".into())).unwrap();
        assert_eq!(c.out_dir.as_deref(), Some(std::path::Path::new("/tmp/x")));
    }
}
