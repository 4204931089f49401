use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use pwcr::domain::{DomainGrid, GridSet};
use pwcr::experiments::{
    all_fixture_ids, check_conditions, reproduce_examples, run_coverage, Application,
    CoverageOptions, CoverageReport, ExampleOptions, Scenario, ScenarioOverrides,
};
use pwcr::randfield::{
    bootstrap_sup, derive_seed, estimate, quantile, sample_fields, BootstrapConfig, FieldExpr,
    FieldSample, NamedMasks, Statistic,
};
use pwcr::regions::{
    cr_absolute, cr_conjunction, cr_symmetric_difference, Combine, ConfidenceRegions, EtaRule,
};

use crate::config::{Command, MaskFormat, QuantileStat, RunConfig};
use crate::plot::boundaries_csv;

/// Writes artifacts, each with a manifest echoing the resolved config.
pub struct Outputs<'a> {
    dir: PathBuf,
    config: &'a RunConfig,
    pub written: Vec<PathBuf>,
}

impl<'a> Outputs<'a> {
    pub fn new(config: &'a RunConfig) -> Result<Self> {
        let dir = config.out_dir.clone().expect("resolved config");
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self {
            dir,
            config,
            written: vec![],
        })
    }

    fn manifest(&self, name: &str) -> Result<()> {
        let m = json!({
            "file": name,
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "config": self.config,
        });
        let path = self.dir.join(format!("{name}.manifest.json"));
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")?;
        Ok(())
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
        self.manifest(name)?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, &(serde_json::to_string_pretty(value)? + "\n"))
    }

    /// Appends one row, writing the header first when the file is new.
    pub fn append_csv(&mut self, name: &str, header: &str, row: &str) -> Result<()> {
        let path = self.dir.join(name);
        let fresh = !path.exists();
        let mut f = fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)?;
        if fresh {
            writeln!(f, "{header}")?;
        }
        writeln!(f, "{row}")?;
        self.manifest(name)?;
        self.written.push(path);
        Ok(())
    }

    pub fn write_mask(&mut self, stem: &str, set: &GridSet) -> Result<()> {
        match self.config.format {
            MaskFormat::Csv => self.write(&format!("{stem}.csv"), &set.to_csv()),
            MaskFormat::RleJson => self.write(&format!("{stem}.json"), &(set.to_rle_json() + "\n")),
        }
    }
}

fn overrides(c: &RunConfig) -> ScenarioOverrides {
    ScenarioOverrides {
        n: c.n,
        points: c.points.clone(),
        ell: c.ell,
        application: c.application,
        ..Default::default()
    }
}

fn boot(c: &RunConfig, seed: u64) -> BootstrapConfig {
    BootstrapConfig {
        studentize: c.studentize,
        ..BootstrapConfig::new(c.b, seed)
    }
}

fn eta(c: &RunConfig) -> EtaRule {
    EtaRule { c: c.eta_c }
}

/// Replicate files, or one scenario draw under the config seed.
fn load_samples(c: &RunConfig) -> Result<(Vec<FieldSample>, Option<Scenario>, Application)> {
    if let Some(id) = &c.scenario {
        let s = Scenario::builtin(id, &overrides(c))?;
        let samples = sample_fields(&s.model, s.n, derive_seed(c.seed, 0x5a, 0))?;
        let app = s.application;
        return Ok((samples, Some(s), app));
    }
    let spec = c.grid.as_ref().expect("validated");
    let extents: Vec<(f64, f64)> = spec.extents.iter().map(|e| (e[0], e[1])).collect();
    let grid = Arc::new(DomainGrid::new(&extents, &spec.points)?);
    let mut samples = Vec::new();
    for path in &c.inputs {
        samples.push(read_replicates(path, &grid)?);
    }
    if samples.iter().any(|s| s.n != samples[0].n) {
        bail!("input files have different replicate counts");
    }
    Ok((
        samples,
        None,
        c.application.unwrap_or(Application::Absolute),
    ))
}

fn read_replicates(path: &Path, grid: &Arc<DomainGrid>) -> Result<FieldSample> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut data = Vec::new();
    let mut n = 0;
    for (line_no, line) in text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
    {
        let row: Vec<f64> = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{}:{}: not a number", path.display(), line_no + 1))?;
        if row.len() != grid.len() {
            bail!(
                "{}:{}: expected {} values, got {}",
                path.display(),
                line_no + 1,
                grid.len(),
                row.len()
            );
        }
        data.extend(row);
        n += 1;
    }
    if n < 2 {
        bail!("{}: need at least two replicates", path.display());
    }
    Ok(FieldSample {
        grid: grid.clone(),
        n,
        data,
        seed: 0,
    })
}

pub fn run(c: &RunConfig) -> Result<String> {
    let mut out = Outputs::new(c)?;
    let summary = match c.command.expect("resolved") {
        Command::Coverage => coverage(c, &mut out)?,
        Command::Regions => regions(c, &mut out)?,
        Command::Examples => examples(c, &mut out)?,
        Command::Conditions => conditions(c, &mut out)?,
        Command::Quantile => quantile_cmd(c, &mut out)?,
    };
    Ok(summary)
}

fn coverage(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let s = Scenario::builtin(c.scenario.as_deref().expect("validated"), &overrides(c))?;
    let mut opts = CoverageOptions::new(c.alpha, c.r, c.b, c.seed);
    opts.boot.studentize = c.studentize;
    opts.eta = eta(c);
    opts.q_override = c.q_override;
    opts.q_scale = c.q_scale;
    let rep = run_coverage(&s, &opts)?;
    out.write_json("coverage.json", &rep)?;
    out.append_csv("coverage.csv", CoverageReport::CSV_HEADER, &rep.csv_row())?;
    Ok(format!(
        "coverage {}: {:.4} ({}/{}), 95% CI [{:.4}, {:.4}], mean q {:.4}, {:.1} s",
        rep.scenario,
        rep.coverage,
        rep.hits,
        rep.r,
        rep.wilson_ci[0],
        rep.wilson_ci[1],
        rep.q_mean,
        rep.runtime_s
    ))
}

fn regions(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let (samples, scenario, app) = load_samples(c)?;
    let b = boot(c, derive_seed(c.seed, 0xb0, 0));
    let mut report = serde_json::Map::new();
    let (crs, eta_n, fallback): (ConfidenceRegions, f64, bool) = match app {
        Application::Absolute => {
            let (cr, d) = cr_absolute(&samples[0], c.alpha, &b, eta(c))?;
            (cr, d.eta_n, d.fallback)
        }
        Application::Conjunction | Application::Disjunction => {
            let mode = if app == Application::Conjunction {
                Combine::Min
            } else {
                Combine::Max
            };
            let (cr, d) = cr_conjunction(&samples, c.alpha, &b, eta(c), mode)?;
            (cr, d.eta_n, d.fallback)
        }
        Application::Symdiff => {
            let res = cr_symmetric_difference(&samples[0], &samples[1], c.alpha, &b, eta(c))?;
            report.insert("q_lower".into(), json!(res.q_lower));
            report.insert("q_upper".into(), json!(res.q_upper));
            for (name, set) in res.geometry.named_sets() {
                out.write_mask(&format!("geometry_{}", file_stem(&name)), &set)?;
            }
            (res.crs, res.diagnostics.eta_n, res.diagnostics.fallback)
        }
    };
    out.write_mask("lower", &crs.lower)?;
    out.write_mask("upper", &crs.upper)?;
    out.write(
        "boundaries.csv",
        &boundaries_csv(&[("lower", &crs.lower), ("upper", &crs.upper)]),
    )?;
    report.insert("application".into(), json!(app));
    report.insert("q".into(), json!(crs.q));
    report.insert("tau_n".into(), json!(crs.tau_n));
    report.insert("eta_n".into(), json!(eta_n));
    report.insert("alpha".into(), json!(c.alpha));
    report.insert("B".into(), json!(c.b));
    report.insert("seed".into(), json!(c.seed));
    report.insert("statistic_id".into(), json!(crs.statistic_id));
    report.insert("fallback".into(), json!(fallback));
    report.insert("lower_size".into(), json!(crs.lower.count()));
    report.insert("upper_size".into(), json!(crs.upper.count()));
    if let Some(s) = &scenario {
        let (l, u) = s.truth_regions();
        report.insert(
            "included".into(),
            json!(crs.lower.is_subset(&l) && crs.upper.is_subset(&u)),
        );
    }
    out.write_json("report.json", &Value::Object(report))?;
    Ok(format!(
        "regions ({app:?}): q = {:.4}, |lower| = {}, |upper| = {}",
        crs.q,
        crs.lower.count(),
        crs.upper.count()
    ))
}

fn file_stem(name: &str) -> String {
    match name.strip_suffix('+') {
        Some(base) => format!("{base}_pos"),
        None => match name.strip_suffix('-') {
            Some(base) => format!("{base}_neg"),
            None => name.replace('-', "_minus_"),
        },
    }
}

fn examples(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let ids: Vec<&str> = match &c.fixtures {
        Some(f) => f.iter().map(String::as_str).collect(),
        None => all_fixture_ids(),
    };
    let rows = reproduce_examples(&ids, &ExampleOptions::default())?;
    out.write_json("examples.json", &rows)?;
    let mut table = String::new();
    for r in &rows {
        table.push_str(&format!(
            "{:<18} {:<40} expected {:<26} observed {:<40} {}\n",
            r.fixture,
            r.check,
            r.expected,
            r.observed,
            if r.pass { "ok" } else { "MISMATCH" }
        ));
    }
    let ok = rows.iter().filter(|r| r.pass).count();
    Ok(format!("{table}examples: {ok}/{} checks match", rows.len()))
}

fn conditions(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let s = Scenario::builtin(c.scenario.as_deref().expect("validated"), &overrides(c))?;
    let report = check_conditions(&s, c.alpha, &boot(c, c.seed), eta(c))?;
    out.write_json("conditions.json", &report)?;
    let closure = match report.closure_holds {
        Some(true) => format!("{} holds", report.condition),
        Some(false) => format!("{} fails", report.condition),
        None => "no closure condition".into(),
    };
    Ok(format!(
        "conditions {}: {closure}; bootstrap statistic {} at q = {:.4}",
        s.id,
        if report.atoms.atom_free {
            "atom-free"
        } else {
            "has ties"
        },
        report.atoms.q
    ))
}

fn quantile_cmd(c: &RunConfig, out: &mut Outputs) -> Result<String> {
    let (samples, _, _) = load_samples(c)?;
    let est = estimate(&samples[0]);
    let grid = est.mean_hat.grid().clone();
    let mask = match c.point {
        Some(k) if k >= grid.len() => {
            bail!("point {k} is outside the grid of {} points", grid.len())
        }
        Some(k) => GridSet::from_indices(&grid, [k]),
        None => GridSet::full(&grid),
    };
    let mut masks = NamedMasks::new();
    masks.insert("mask".into(), mask);
    let field = match c.stat {
        QuantileStat::Sup => FieldExpr::c(0),
        QuantileStat::SupAbs => FieldExpr::c(0).abs(),
    };
    let stat = Statistic::sup(field, "mask");
    let sup = bootstrap_sup(
        &[&est],
        &masks,
        &stat,
        &boot(c, derive_seed(c.seed, 0xb0, 0)),
    )?;
    let q = quantile(&sup, 1.0 - c.alpha)?;
    out.write("sup_samples.csv", &sup.to_csv())?;
    out.write_json(
        "quantile.json",
        &json!({
            "q": q.value,
            "level": 1.0 - c.alpha,
            "fallback": q.fallback,
            "B": c.b,
            "seed": c.seed,
            "studentize": c.studentize,
            "statistic_id": sup.statistic_id,
        }),
    )?;
    Ok(format!(
        "quantile at level {}: {:.4} ({})",
        1.0 - c.alpha,
        q.value,
        sup.statistic_id
    ))
}
