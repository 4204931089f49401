use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{stream, EstimatorResult, RandFieldError, BOOT_DOMAIN};
use crate::domain::{sym_diff, ExtReal, GridSet, ScalarField};

/// Replicates per work unit; fixed so results do not depend on thread count.
const CHUNK: usize = 256;
const SD_FLOOR: f64 = 1e-3;

pub type NamedMasks = BTreeMap<String, GridSet>;

/// Pointwise expression over component fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldExpr {
    Component(usize),
    Neg(Box<FieldExpr>),
    Abs(Box<FieldExpr>),
    Min(Box<FieldExpr>, Box<FieldExpr>),
    Max(Box<FieldExpr>, Box<FieldExpr>),
    SymDiff(Box<FieldExpr>, Box<FieldExpr>),
}

impl FieldExpr {
    pub fn c(i: usize) -> Self {
        FieldExpr::Component(i)
    }

    pub fn neg(self) -> Self {
        FieldExpr::Neg(Box::new(self))
    }

    pub fn abs(self) -> Self {
        FieldExpr::Abs(Box::new(self))
    }

    pub fn min(self, other: Self) -> Self {
        FieldExpr::Min(Box::new(self), Box::new(other))
    }

    pub fn max(self, other: Self) -> Self {
        FieldExpr::Max(Box::new(self), Box::new(other))
    }

    pub fn sym_diff(self, other: Self) -> Self {
        FieldExpr::SymDiff(Box::new(self), Box::new(other))
    }

    /// Minimum over the listed components.
    pub fn min_of(components: &[usize]) -> Self {
        let mut it = components.iter().map(|&c| FieldExpr::c(c));
        let first = it.next().expect("at least one component");
        it.fold(first, FieldExpr::min)
    }

    pub fn eval(&self, value: &impl Fn(usize) -> f64) -> f64 {
        match self {
            FieldExpr::Component(c) => value(*c),
            FieldExpr::Neg(a) => -a.eval(value),
            FieldExpr::Abs(a) => a.eval(value).abs(),
            FieldExpr::Min(a, b) => a.eval(value).min(b.eval(value)),
            FieldExpr::Max(a, b) => a.eval(value).max(b.eval(value)),
            FieldExpr::SymDiff(a, b) => sym_diff(a.eval(value), b.eval(value)),
        }
    }

    fn max_component(&self) -> usize {
        match self {
            FieldExpr::Component(c) => *c,
            FieldExpr::Neg(a) | FieldExpr::Abs(a) => a.max_component(),
            FieldExpr::Min(a, b) | FieldExpr::Max(a, b) | FieldExpr::SymDiff(a, b) => {
                a.max_component().max(b.max_component())
            }
        }
    }
}

impl fmt::Display for FieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FieldExpr::Component(c) => write!(f, "G{c}"),
            FieldExpr::Neg(a) => write!(f, "-{a}"),
            FieldExpr::Abs(a) => write!(f, "|{a}|"),
            FieldExpr::Min(a, b) => write!(f, "min({a},{b})"),
            FieldExpr::Max(a, b) => write!(f, "max({a},{b})"),
            FieldExpr::SymDiff(a, b) => write!(f, "symdiff({a},{b})"),
        }
    }
}

/// Scalar statistic of the component fields over named masks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statistic {
    Sup { field: FieldExpr, mask: String },
    Inf { field: FieldExpr, mask: String },
    Max(Vec<Statistic>),
    Min(Vec<Statistic>),
    Neg(Box<Statistic>),
}

impl Statistic {
    pub fn sup(field: FieldExpr, mask: impl Into<String>) -> Self {
        Statistic::Sup {
            field,
            mask: mask.into(),
        }
    }

    pub fn inf(field: FieldExpr, mask: impl Into<String>) -> Self {
        Statistic::Inf {
            field,
            mask: mask.into(),
        }
    }

    pub fn id(&self) -> String {
        self.to_string()
    }

    fn mask_names<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Statistic::Sup { mask, .. } | Statistic::Inf { mask, .. } => {
                out.insert(mask);
            }
            Statistic::Max(v) | Statistic::Min(v) => v.iter().for_each(|s| s.mask_names(out)),
            Statistic::Neg(s) => s.mask_names(out),
        }
    }

    fn max_component(&self) -> Option<usize> {
        match self {
            Statistic::Sup { field, .. } | Statistic::Inf { field, .. } => {
                Some(field.max_component())
            }
            Statistic::Max(v) | Statistic::Min(v) => {
                v.iter().filter_map(|s| s.max_component()).max()
            }
            Statistic::Neg(s) => s.max_component(),
        }
    }

    /// Value on full fields; empty masks follow the `sup ∅ = −∞` convention.
    pub fn evaluate(
        &self,
        fields: &[ScalarField],
        masks: &NamedMasks,
    ) -> Result<ExtReal, RandFieldError> {
        if let Some(c) = self.max_component() {
            if c >= fields.len() {
                return Err(RandFieldError::UnknownComponent(c, fields.len()));
            }
        }
        Ok(match self {
            Statistic::Sup { field, mask } | Statistic::Inf { field, mask } => {
                let set = masks
                    .get(mask)
                    .ok_or_else(|| RandFieldError::UnknownMask(mask.clone()))?;
                let is_sup = matches!(self, Statistic::Sup { .. });
                let mut acc = if is_sup {
                    ExtReal::NegInf
                } else {
                    ExtReal::PosInf
                };
                for k in set.indices() {
                    let v = ExtReal::Finite(field.eval(&|c| fields[c].values()[k]));
                    acc = if is_sup { acc.max(v) } else { acc.min(v) };
                }
                acc
            }
            Statistic::Max(v) => {
                let mut acc = ExtReal::NegInf;
                for s in v {
                    acc = acc.max(s.evaluate(fields, masks)?);
                }
                acc
            }
            Statistic::Min(v) => {
                let mut acc = ExtReal::PosInf;
                for s in v {
                    acc = acc.min(s.evaluate(fields, masks)?);
                }
                acc
            }
            Statistic::Neg(s) => -s.evaluate(fields, masks)?,
        })
    }
}

impl fmt::Display for Statistic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let list = |f: &mut fmt::Formatter<'_>, name: &str, v: &[Statistic]| {
            write!(f, "{name}(")?;
            for (i, s) in v.iter().enumerate() {
                if i > 0 {
                    write!(f, ",")?;
                }
                write!(f, "{s}")?;
            }
            write!(f, ")")
        };
        match self {
            Statistic::Sup { field, mask } => write!(f, "sup[{mask}]{field}"),
            Statistic::Inf { field, mask } => write!(f, "inf[{mask}]{field}"),
            Statistic::Max(v) => list(f, "max", v),
            Statistic::Min(v) => list(f, "min", v),
            Statistic::Neg(s) => write!(f, "-{s}"),
        }
    }
}

/// Statistic with masks resolved to positions in the union of mask points.
enum Node<'a> {
    Sup(&'a FieldExpr, Vec<usize>),
    Inf(&'a FieldExpr, Vec<usize>),
    Max(Vec<Node<'a>>),
    Min(Vec<Node<'a>>),
    Neg(Box<Node<'a>>),
}

impl<'a> Node<'a> {
    fn compile(s: &'a Statistic, masks: &NamedMasks, pos: &BTreeMap<usize, usize>) -> Node<'a> {
        let resolve = |m: &str| masks[m].indices().map(|k| pos[&k]).collect::<Vec<_>>();
        match s {
            Statistic::Sup { field, mask } => Node::Sup(field, resolve(mask)),
            Statistic::Inf { field, mask } => Node::Inf(field, resolve(mask)),
            Statistic::Max(v) => {
                Node::Max(v.iter().map(|s| Node::compile(s, masks, pos)).collect())
            }
            Statistic::Min(v) => {
                Node::Min(v.iter().map(|s| Node::compile(s, masks, pos)).collect())
            }
            Statistic::Neg(s) => Node::Neg(Box::new(Node::compile(s, masks, pos))),
        }
    }

    /// `value(c, p)` is component `c` at union position `p`.
    fn eval(&self, value: &impl Fn(usize, usize) -> f64) -> ExtReal {
        match self {
            Node::Sup(field, ps) => ps
                .iter()
                .map(|&p| field.eval(&|c| value(c, p)))
                .fold(ExtReal::NegInf, |a, v| a.max(ExtReal::Finite(v))),
            Node::Inf(field, ps) => ps
                .iter()
                .map(|&p| field.eval(&|c| value(c, p)))
                .fold(ExtReal::PosInf, |a, v| a.min(ExtReal::Finite(v))),
            Node::Max(v) => v.iter().fold(ExtReal::NegInf, |a, n| a.max(n.eval(value))),
            Node::Min(v) => v.iter().fold(ExtReal::PosInf, |a, n| a.min(n.eval(value))),
            Node::Neg(n) => -n.eval(value),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapConfig {
    pub replicates: usize,
    pub seed: u64,
    /// Divide each bootstrap field by `sd_hat`, floored at 10⁻³ of its max.
    #[serde(default)]
    pub studentize: bool,
    /// One multiplier per replicate shared by all components (paired data).
    #[serde(default = "default_true")]
    pub shared_multipliers: bool,
}

fn default_true() -> bool {
    true
}

impl BootstrapConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self {
            replicates,
            seed,
            studentize: false,
            shared_multipliers: true,
        }
    }

    pub const MIN_REPLICATES: usize = 100;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupSamples {
    pub values: Vec<ExtReal>,
    pub b: usize,
    pub statistic_id: String,
    pub seed: u64,
    /// Every mask used by the statistic was empty.
    pub all_masks_empty: bool,
}

impl SupSamples {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("value\n");
        for v in &self.values {
            s.push_str(&v.to_string());
            s.push('\n');
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub value: f64,
    /// The selected order statistic was −∞, so `value` is the fallback 0.
    pub fallback: bool,
}

/// Order statistic at rank `ceil(B·level)` (1-indexed).
pub fn quantile(samples: &SupSamples, level: f64) -> Result<Quantile, RandFieldError> {
    if !(level > 0.0 && level < 1.0) {
        return Err(RandFieldError::BadLevel(level));
    }
    let b = samples.values.len();
    if b == 0 {
        return Err(RandFieldError::TooFewReplicates { min: 1, got: 0 });
    }
    let mut v = samples.values.clone();
    v.sort_by(|a, b| {
        a.partial_cmp(b)
            .expect("extended reals are totally ordered")
    });
    let rank = ((b as f64 * level) - 1e-9).ceil().clamp(1.0, b as f64) as usize;
    Ok(match v[rank - 1] {
        ExtReal::Finite(x) => Quantile {
            value: x,
            fallback: false,
        },
        ExtReal::NegInf => Quantile {
            value: 0.0,
            fallback: true,
        },
        ExtReal::PosInf => Quantile {
            value: f64::INFINITY,
            fallback: false,
        },
    })
}

fn check_components(components: &[&EstimatorResult]) -> Result<(), RandFieldError> {
    let first = components
        .first()
        .ok_or(RandFieldError::ComponentMismatch)?;
    for c in components {
        if c.residuals.grid != first.residuals.grid || c.residuals.len() != first.residuals.len() {
            return Err(RandFieldError::ComponentMismatch);
        }
        let mut a = c.residuals.ids.clone();
        let mut b = first.residuals.ids.clone();
        a.sort_unstable();
        b.sort_unstable();
        if a != b {
            return Err(RandFieldError::ComponentMismatch);
        }
    }
    Ok(())
}

/// Per-point divisor: `sd_hat` floored at `SD_FLOOR · max sd_hat`, or 1.
fn divisors(c: &EstimatorResult, studentize: bool) -> Result<Vec<f64>, RandFieldError> {
    let p = c.residuals.grid.len();
    if !studentize {
        return Ok(vec![1.0; p]);
    }
    if c.n() < 2 {
        return Err(RandFieldError::CannotStudentize);
    }
    let sd = c.sd_hat.values();
    let floor = SD_FLOOR * sd.iter().cloned().fold(0.0, f64::max);
    Ok(sd
        .iter()
        .map(|&s| {
            if s > floor {
                s
            } else if floor > 0.0 {
                floor
            } else {
                1.0
            }
        })
        .collect())
}

/// Multipliers for bootstrap replicate `b`, indexed by sorted replicate id.
fn multipliers(config: &BootstrapConfig, component: usize, b: usize, n: usize) -> Vec<f64> {
    let domain = if config.shared_multipliers {
        BOOT_DOMAIN
    } else {
        BOOT_DOMAIN + 1 + component as u64
    };
    let mut rng = stream(config.seed, domain, b as u64);
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// Row order of the residuals sorted by replicate id.
fn id_order(c: &EstimatorResult) -> Vec<usize> {
    let mut order: Vec<usize> = (0..c.n()).collect();
    order.sort_by_key(|&k| c.residuals.ids[k]);
    order
}

/// Full bootstrap fields `G*_b` of every component; the direct,
/// unoptimized counterpart of [`bootstrap_sup_many`].
pub fn bootstrap_field(
    components: &[&EstimatorResult],
    config: &BootstrapConfig,
    b: usize,
) -> Result<Vec<ScalarField>, RandFieldError> {
    check_components(components)?;
    let mut out = Vec::new();
    for (ci, c) in components.iter().enumerate() {
        let n = c.n();
        let g = multipliers(config, ci, b, n);
        let div = divisors(c, config.studentize)?;
        let p = c.residuals.grid.len();
        let mut field = vec![0.0; p];
        for (rank, &k) in id_order(c).iter().enumerate() {
            for (f, r) in field.iter_mut().zip(c.residuals.row(k)) {
                *f += g[rank] * r;
            }
        }
        let scale = 1.0 / (n as f64).sqrt();
        let values = field.iter().zip(&div).map(|(f, d)| f * scale / d).collect();
        out.push(ScalarField::new(c.residuals.grid.clone(), values)?);
    }
    Ok(out)
}

/// Multiplier bootstrap of one statistic; see [`bootstrap_sup_many`].
pub fn bootstrap_sup(
    components: &[&EstimatorResult],
    masks: &NamedMasks,
    statistic: &Statistic,
    config: &BootstrapConfig,
) -> Result<SupSamples, RandFieldError> {
    Ok(bootstrap_sup_many(components, masks, std::slice::from_ref(statistic), config)?.remove(0))
}

/// Multiplier bootstrap of several statistics from the same draws.
///
/// Replicate `b` forms `G*_b = n^{-1/2} Σ_k g_{b,k} r_k` for every component,
/// where `g_{b,k}` comes from stream `(seed, b)` in replicate-id order, so
/// reordering the stored residuals does not change any value. Fields are only
/// formed on the union of the statistic masks.
pub fn bootstrap_sup_many(
    components: &[&EstimatorResult],
    masks: &NamedMasks,
    statistics: &[Statistic],
    config: &BootstrapConfig,
) -> Result<Vec<SupSamples>, RandFieldError> {
    if config.replicates < BootstrapConfig::MIN_REPLICATES {
        return Err(RandFieldError::TooFewReplicates {
            min: BootstrapConfig::MIN_REPLICATES,
            got: config.replicates,
        });
    }
    check_components(components)?;
    let grid = components[0].residuals.grid.clone();
    let mut used = BTreeSet::new();
    for s in statistics {
        if let Some(c) = s.max_component() {
            if c >= components.len() {
                return Err(RandFieldError::UnknownComponent(c, components.len()));
            }
        }
        s.mask_names(&mut used);
    }
    let mut union = GridSet::empty(&grid);
    for name in &used {
        let m = masks
            .get(*name)
            .ok_or_else(|| RandFieldError::UnknownMask(name.to_string()))?;
        if m.grid() != &grid {
            return Err(RandFieldError::ComponentMismatch);
        }
        union = union.union(m);
    }
    let points: Vec<usize> = union.indices().collect();
    let pos: BTreeMap<usize, usize> = points.iter().enumerate().map(|(i, &k)| (k, i)).collect();
    let nodes: Vec<Node> = statistics
        .iter()
        .map(|s| Node::compile(s, masks, &pos))
        .collect();

    let n = components[0].n();
    let scale = 1.0 / (n as f64).sqrt();
    // Residuals restricted to the union points, rows in id order: n × P.
    let restricted: Vec<DMatrix<f64>> = components
        .iter()
        .map(|c| {
            let div = divisors(c, config.studentize)?;
            let order = id_order(c);
            Ok(DMatrix::from_fn(n, points.len(), |r, j| {
                let k = points[j];
                c.residuals.row(order[r])[k] * scale / div[k]
            }))
        })
        .collect::<Result<_, RandFieldError>>()?;

    let b_total = config.replicates;
    let chunks: Vec<usize> = (0..b_total.div_ceil(CHUNK)).collect();
    let per_chunk: Vec<Vec<Vec<ExtReal>>> = chunks
        .par_iter()
        .map(|&ch| {
            let start = ch * CHUNK;
            let rows = CHUNK.min(b_total - start);
            let fields: Vec<DMatrix<f64>> = restricted
                .iter()
                .enumerate()
                .map(|(ci, r)| {
                    let mut m = DMatrix::<f64>::zeros(rows, n);
                    for i in 0..rows {
                        let g = multipliers(config, ci, start + i, n);
                        for (k, v) in g.into_iter().enumerate() {
                            m[(i, k)] = v;
                        }
                    }
                    m * r
                })
                .collect();
            nodes
                .iter()
                .map(|node| {
                    (0..rows)
                        .map(|i| node.eval(&|c, p| fields[c][(i, p)]))
                        .collect()
                })
                .collect()
        })
        .collect();

    Ok(statistics
        .iter()
        .enumerate()
        .map(|(si, s)| SupSamples {
            values: per_chunk
                .iter()
                .flat_map(|c| c[si].iter().copied())
                .collect(),
            b: b_total,
            statistic_id: s.id(),
            seed: config.seed,
            all_masks_empty: points.is_empty(),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DomainGrid;
    use crate::randfield::{estimate, sample_fields, Covariance, GaussianFieldModel};
    use std::sync::Arc;

    fn setup(n: usize, seed: u64) -> (Arc<DomainGrid>, EstimatorResult) {
        let g = Arc::new(DomainGrid::line(0.0, 1.0, 51).unwrap());
        let model = GaussianFieldModel::single(
            ScalarField::from_fn(&g, |p| p[0]),
            Covariance::se(0.2, 1.0),
        );
        let est = estimate(&sample_fields(&model, n, seed).unwrap()[0]);
        (g, est)
    }

    fn masks(g: &Arc<DomainGrid>) -> NamedMasks {
        let mut m = NamedMasks::new();
        m.insert("a".into(), GridSet::from_fn(g, |p| p[0] < 0.3));
        m.insert("b".into(), GridSet::from_fn(g, |p| p[0] > 0.7));
        m.insert(
            "ab".into(),
            GridSet::from_fn(g, |p| p[0] < 0.3 || p[0] > 0.7),
        );
        m.insert("empty".into(), GridSet::empty(g));
        m.insert("one".into(), GridSet::from_indices(g, [25]));
        m
    }

    #[test]
    fn quantile_rank_rule() {
        let s = SupSamples {
            values: (1..=100).map(|v| ExtReal::Finite(v as f64)).collect(),
            b: 100,
            statistic_id: "t".into(),
            seed: 0,
            all_masks_empty: false,
        };
        assert_eq!(quantile(&s, 0.95).unwrap().value, 95.0);
        assert_eq!(quantile(&s, 0.001).unwrap().value, 1.0);
        assert!(matches!(
            quantile(&s, 1.0),
            Err(RandFieldError::BadLevel(_))
        ));
        let all_inf = SupSamples {
            values: vec![ExtReal::NegInf; 10],
            ..s.clone()
        };
        assert_eq!(
            quantile(&all_inf, 0.9).unwrap(),
            Quantile {
                value: 0.0,
                fallback: true
            }
        );
        let constant = SupSamples {
            values: vec![ExtReal::Finite(2.5); 10],
            ..s
        };
        assert_eq!(quantile(&constant, 0.3).unwrap().value, 2.5);
    }

    #[test]
    fn zero_residuals_give_zero() {
        let (g, mut est) = setup(20, 1);
        est.residuals.data.iter_mut().for_each(|r| *r = 0.0);
        let stat = Statistic::sup(FieldExpr::c(0).abs(), "ab");
        let s = bootstrap_sup(&[&est], &masks(&g), &stat, &BootstrapConfig::new(200, 3)).unwrap();
        assert!(s.values.iter().all(|v| *v == ExtReal::Finite(0.0)));
    }

    #[test]
    fn matches_direct_route() {
        let (g, est) = setup(30, 2);
        let m = masks(&g);
        let stat = Statistic::Max(vec![
            Statistic::sup(FieldExpr::c(0).neg(), "a"),
            Statistic::sup(FieldExpr::c(0), "b"),
            Statistic::Neg(Box::new(Statistic::inf(FieldExpr::c(0).abs(), "one"))),
        ]);
        for studentize in [false, true] {
            let cfg = BootstrapConfig {
                studentize,
                ..BootstrapConfig::new(300, 5)
            };
            let s = bootstrap_sup(&[&est], &m, &stat, &cfg).unwrap();
            for b in [0, 1, 255, 256, 299] {
                let fields = bootstrap_field(&[&est], &cfg, b).unwrap();
                let direct = stat.evaluate(&fields, &m).unwrap().to_f64();
                assert!((s.values[b].to_f64() - direct).abs() < 1e-12, "{b}");
            }
        }
    }

    #[test]
    fn empty_masks_flagged() {
        let (g, est) = setup(10, 3);
        let s = bootstrap_sup(
            &[&est],
            &masks(&g),
            &Statistic::sup(FieldExpr::c(0), "empty"),
            &BootstrapConfig::new(100, 1),
        )
        .unwrap();
        assert!(s.all_masks_empty);
        assert!(s.values.iter().all(|v| *v == ExtReal::NegInf));
        assert!(quantile(&s, 0.9).unwrap().fallback);
    }

    #[test]
    fn union_mask_dominates() {
        let (g, est) = setup(25, 4);
        let m = masks(&g);
        let stats = [
            Statistic::sup(FieldExpr::c(0).abs(), "a"),
            Statistic::sup(FieldExpr::c(0).abs(), "ab"),
        ];
        let out = bootstrap_sup_many(&[&est], &m, &stats, &BootstrapConfig::new(500, 9)).unwrap();
        for (a, ab) in out[0].values.iter().zip(&out[1].values) {
            assert!(ab >= a);
        }
    }

    #[test]
    fn invariant_to_replicate_storage_order() {
        let (g, est) = setup(40, 6);
        let perm: Vec<usize> = (0..40).rev().collect();
        let mut shuffled = est.clone();
        shuffled.residuals = est.residuals.permuted(&perm);
        let stat = Statistic::sup(FieldExpr::c(0), "ab");
        let cfg = BootstrapConfig::new(200, 2);
        let a = bootstrap_sup(&[&est], &masks(&g), &stat, &cfg).unwrap();
        let b = bootstrap_sup(&[&shuffled], &masks(&g), &stat, &cfg).unwrap();
        for (x, y) in a.values.iter().zip(&b.values) {
            assert!((x.to_f64() - y.to_f64()).abs() < 1e-12);
        }
    }

    #[test]
    fn errors() {
        let (g, est) = setup(10, 3);
        let m = masks(&g);
        let cfg = BootstrapConfig::new(100, 1);
        assert!(matches!(
            bootstrap_sup(&[&est], &m, &Statistic::sup(FieldExpr::c(0), "zzz"), &cfg),
            Err(RandFieldError::UnknownMask(_))
        ));
        assert!(matches!(
            bootstrap_sup(&[&est], &m, &Statistic::sup(FieldExpr::c(1), "a"), &cfg),
            Err(RandFieldError::UnknownComponent(1, 1))
        ));
        assert!(matches!(
            bootstrap_sup(
                &[&est],
                &m,
                &Statistic::sup(FieldExpr::c(0), "a"),
                &BootstrapConfig::new(10, 1)
            ),
            Err(RandFieldError::TooFewReplicates { .. })
        ));
    }

    #[test]
    fn statistic_ids_and_serde() {
        let s = Statistic::Max(vec![Statistic::sup(FieldExpr::min_of(&[0, 1]).neg(), "u+")]);
        assert_eq!(s.id(), "max(sup[u+]-min(G0,G1))");
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(serde_json::from_str::<Statistic>(&json).unwrap(), s);
    }
}
