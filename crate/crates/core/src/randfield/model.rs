use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{stream, RandFieldError, FIELD_DOMAIN};
use crate::domain::{DomainGrid, ScalarField};

/// Largest axis length factorized densely.
const DENSE_AXIS_LIMIT: usize = 4096;
const JITTER_LADDER: [f64; 7] = [1e-12, 1e-11, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Covariance {
    /// `var · exp(-|s - t|² / (2 ell²))`.
    #[serde(rename = "se")]
    SquaredExponential { ell: f64, var: f64 },
    /// White noise convolved with a Gaussian kernel of standard deviation
    /// `width`, rescaled to variance `var`.
    #[serde(rename = "smoothed-white")]
    SmoothedWhite { width: f64, var: f64 },
}

impl Covariance {
    pub fn se(ell: f64, var: f64) -> Self {
        Covariance::SquaredExponential { ell, var }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Covariance::SquaredExponential { var, .. } | Covariance::SmoothedWhite { var, .. } => {
                var
            }
        }
    }

    pub fn validate(&self) -> Result<(), RandFieldError> {
        let (scale, var) = match *self {
            Covariance::SquaredExponential { ell, var } => (ell, var),
            Covariance::SmoothedWhite { width, var } => (width, var),
        };
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(RandFieldError::InvalidModel(format!(
                "length scale must be positive, got {scale}"
            )));
        }
        if !(var > 0.0 && var.is_finite()) {
            return Err(RandFieldError::InvalidModel(format!(
                "variance must be positive, got {var}"
            )));
        }
        Ok(())
    }
}

/// Mean fields of one or more jointly Gaussian components sharing a
/// covariance, with correlation `rho` between each component and the first.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianFieldModel {
    pub means: Vec<ScalarField>,
    pub covariance: Covariance,
    pub rho: f64,
}

impl GaussianFieldModel {
    pub fn single(mean: ScalarField, covariance: Covariance) -> Self {
        Self {
            means: vec![mean],
            covariance,
            rho: 0.0,
        }
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        self.means[0].grid()
    }

    pub fn validate(&self) -> Result<(), RandFieldError> {
        self.covariance.validate()?;
        if self.means.is_empty() {
            return Err(RandFieldError::InvalidModel("no mean field".into()));
        }
        if self
            .means
            .iter()
            .any(|m| m.grid() != self.grid() || m.is_partial())
        {
            return Err(RandFieldError::InvalidModel(
                "means must be total fields on one grid".into(),
            ));
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(RandFieldError::InvalidModel(format!(
                "rho must lie in [-1, 1], got {}",
                self.rho
            )));
        }
        Ok(())
    }
}

enum Factor {
    /// Lower Cholesky factor of the unit-variance correlation along each axis.
    Dense(Vec<DMatrix<f64>>),
    /// Half-kernel per axis (index 0 is the centre).
    Smooth(Vec<Vec<f64>>),
}

/// Zero-mean field generator for one covariance on one grid.
pub struct FieldSampler {
    grid: Arc<DomainGrid>,
    factor: Factor,
    scale: f64,
    jitter: f64,
}

impl FieldSampler {
    /// Squared-exponential covariance separates over axes, so each axis is
    /// factorized on its own and draws are `L_x Z L_yᵀ`. Axes longer than the
    /// dense limit switch to smoothed white noise with width `ell/√2`, whose
    /// covariance is the same squared exponential up to kernel truncation.
    pub fn new(covariance: &Covariance, grid: &Arc<DomainGrid>) -> Result<Self, RandFieldError> {
        covariance.validate()?;
        let dense = grid
            .points_per_axis()
            .iter()
            .all(|&p| p <= DENSE_AXIS_LIMIT);
        match *covariance {
            Covariance::SquaredExponential { ell, var } if dense => {
                let mut factors = Vec::new();
                let mut jitter: f64 = 0.0;
                for axis in 0..grid.dim() {
                    let (l, j) = axis_cholesky(grid, axis, ell)?;
                    factors.push(l);
                    jitter = jitter.max(j);
                }
                Ok(Self {
                    grid: grid.clone(),
                    factor: Factor::Dense(factors),
                    scale: var.sqrt(),
                    jitter,
                })
            }
            Covariance::SquaredExponential { ell, var } => {
                Self::smooth(grid, ell / 2f64.sqrt(), var)
            }
            Covariance::SmoothedWhite { width, var } => Self::smooth(grid, width, var),
        }
    }

    fn smooth(grid: &Arc<DomainGrid>, width: f64, var: f64) -> Result<Self, RandFieldError> {
        let mut kernels = Vec::new();
        let mut energy = 1.0;
        for axis in 0..grid.dim() {
            let h = grid.spacing()[axis];
            let r = (4.0 * width / h).ceil() as usize;
            let k: Vec<f64> = (0..=r)
                .map(|j| (-(j as f64 * h).powi(2) / (2.0 * width * width)).exp())
                .collect();
            energy *= k[0] * k[0] + 2.0 * k[1..].iter().map(|x| x * x).sum::<f64>();
            kernels.push(k);
        }
        Ok(Self {
            grid: grid.clone(),
            factor: Factor::Smooth(kernels),
            scale: (var / energy).sqrt(),
            jitter: 0.0,
        })
    }

    pub fn grid(&self) -> &Arc<DomainGrid> {
        &self.grid
    }

    /// Diagonal jitter that made the factorization succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `count` zero-mean draws, replicate `k` using stream `(seed, domain, k)`;
    /// returned row-major as `count × points`.
    pub fn draw_batch(&self, seed: u64, domain: u64, count: usize) -> Vec<f64> {
        let p = self.grid.len();
        match &self.factor {
            Factor::Dense(l) if l.len() == 1 => {
                let mut z = DMatrix::<f64>::zeros(p, count);
                for k in 0..count {
                    let mut rng = stream(seed, domain, k as u64);
                    for v in z.column_mut(k).iter_mut() {
                        *v = rng.sample(StandardNormal);
                    }
                }
                let x = &l[0] * z;
                // Column-major: column k is replicate k, already contiguous.
                x.as_slice().iter().map(|v| v * self.scale).collect()
            }
            _ => {
                let mut out = Vec::with_capacity(p * count);
                for k in 0..count {
                    let mut rng = stream(seed, domain, k as u64);
                    out.extend(self.draw(&mut rng));
                }
                out
            }
        }
    }

    /// One zero-mean draw.
    pub fn draw(&self, rng: &mut impl Rng) -> Vec<f64> {
        let pts = self.grid.points_per_axis();
        match &self.factor {
            Factor::Dense(l) => {
                if l.len() == 1 {
                    let z =
                        DMatrix::from_fn(pts[0], 1, |_, _| rng.sample::<f64, _>(StandardNormal));
                    (&l[0] * z).iter().map(|v| v * self.scale).collect()
                } else {
                    let (nx, ny) = (pts[0], pts[1]);
                    let z = DMatrix::from_row_iterator(
                        nx,
                        ny,
                        (0..nx * ny).map(|_| rng.sample::<f64, _>(StandardNormal)),
                    );
                    let f = &l[0] * z * l[1].transpose();
                    let mut out = Vec::with_capacity(nx * ny);
                    for i in 0..nx {
                        for j in 0..ny {
                            out.push(f[(i, j)] * self.scale);
                        }
                    }
                    out
                }
            }
            Factor::Smooth(kernels) => {
                let dim = self.grid.dim();
                let padded: Vec<usize> = (0..dim)
                    .map(|a| pts[a] + 2 * (kernels[a].len() - 1))
                    .collect();
                let total: usize = padded.iter().product();
                let mut w: Vec<f64> = (0..total).map(|_| rng.sample(StandardNormal)).collect();
                if dim == 1 {
                    convolve_line(&w, &kernels[0], pts[0])
                        .into_iter()
                        .map(|v| v * self.scale)
                        .collect()
                } else {
                    // Rows along y first, then columns along x.
                    let (px, py) = (padded[0], padded[1]);
                    let ny = pts[1];
                    let mut rows = Vec::with_capacity(px * ny);
                    for i in 0..px {
                        rows.extend(convolve_line(&w[i * py..(i + 1) * py], &kernels[1], ny));
                    }
                    w.clear();
                    let mut out = vec![0.0; pts[0] * ny];
                    let mut col = vec![0.0; px];
                    for j in 0..ny {
                        for i in 0..px {
                            col[i] = rows[i * ny + j];
                        }
                        for (i, v) in convolve_line(&col, &kernels[0], pts[0])
                            .into_iter()
                            .enumerate()
                        {
                            out[i * ny + j] = v * self.scale;
                        }
                    }
                    out
                }
            }
        }
    }
}

/// Valid part of the convolution of `w` (length `n + 2r`) with a symmetric
/// kernel of half-width `r`.
fn convolve_line(w: &[f64], half: &[f64], n: usize) -> Vec<f64> {
    let r = half.len() - 1;
    (0..n)
        .map(|i| {
            let c = i + r;
            let mut s = half[0] * w[c];
            for j in 1..=r {
                s += half[j] * (w[c - j] + w[c + j]);
            }
            s
        })
        .collect()
}

fn axis_cholesky(
    grid: &DomainGrid,
    axis: usize,
    ell: f64,
) -> Result<(DMatrix<f64>, f64), RandFieldError> {
    let n = grid.points_per_axis()[axis];
    let x: Vec<f64> = (0..n).map(|i| grid.axis_coord(axis, i)).collect();
    let k = DMatrix::from_fn(n, n, |i, j| {
        (-(x[i] - x[j]).powi(2) / (2.0 * ell * ell)).exp()
    });
    for &jitter in &JITTER_LADDER {
        let mut kj = k.clone();
        for i in 0..n {
            kj[(i, i)] += jitter;
        }
        if let Some(ch) = kj.cholesky() {
            return Ok((ch.l(), jitter));
        }
    }
    Err(RandFieldError::CovarianceNotPsd {
        jitter: *JITTER_LADDER.last().unwrap(),
    })
}

/// `n` replicates of one component, row-major `n × points`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldSample {
    pub grid: Arc<DomainGrid>,
    pub n: usize,
    pub data: Vec<f64>,
    pub seed: u64,
}

impl FieldSample {
    pub fn replicate(&self, k: usize) -> &[f64] {
        let p = self.grid.len();
        &self.data[k * p..(k + 1) * p]
    }
}

/// Draws `n` replicates of every component of `model`.
///
/// Component 0 is `mean_0 + w_0`; component `c > 0` is
/// `mean_c + rho·w_0 + √(1 − rho²)·w_c` with independent `w_c`.
pub fn sample_fields(
    model: &GaussianFieldModel,
    n: usize,
    seed: u64,
) -> Result<Vec<FieldSample>, RandFieldError> {
    let sampler = FieldSampler::new(&model.covariance, model.grid())?;
    sample_with(&sampler, model, n, seed)
}

/// As [`sample_fields`] with a prepared sampler.
pub fn sample_with(
    sampler: &FieldSampler,
    model: &GaussianFieldModel,
    n: usize,
    seed: u64,
) -> Result<Vec<FieldSample>, RandFieldError> {
    model.validate()?;
    if n == 0 {
        return Err(RandFieldError::InvalidModel(
            "need at least one replicate".into(),
        ));
    }
    if sampler.grid() != model.grid() {
        return Err(RandFieldError::ComponentMismatch);
    }
    let p = model.grid().len();
    let w0 = sampler.draw_batch(seed, FIELD_DOMAIN, n);
    let c = (1.0 - model.rho * model.rho).max(0.0).sqrt();
    let mut out = Vec::with_capacity(model.means.len());
    for (comp, mean) in model.means.iter().enumerate() {
        let mu = mean.values();
        let data: Vec<f64> = if comp == 0 {
            w0.iter().enumerate().map(|(i, w)| mu[i % p] + w).collect()
        } else {
            let wc = sampler.draw_batch(seed, FIELD_DOMAIN + comp as u64, n);
            w0.iter()
                .zip(&wc)
                .enumerate()
                .map(|(i, (a, b))| mu[i % p] + model.rho * a + c * b)
                .collect()
        };
        out.push(FieldSample {
            grid: model.grid().clone(),
            n,
            data,
            seed,
        });
    }
    Ok(out)
}

/// Centred replicates tagged with the index they were generated under.
#[derive(Clone, Debug, PartialEq)]
pub struct Replicates {
    pub grid: Arc<DomainGrid>,
    pub ids: Vec<u64>,
    /// Row-major `ids.len() × points`.
    pub data: Vec<f64>,
}

impl Replicates {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let p = self.grid.len();
        &self.data[k * p..(k + 1) * p]
    }

    /// Storage reordered so that row `k` of the result is row `perm[k]`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len());
        let mut data = Vec::with_capacity(self.data.len());
        for &k in perm {
            data.extend_from_slice(self.row(k));
        }
        Self {
            grid: self.grid.clone(),
            ids: perm.iter().map(|&k| self.ids[k]).collect(),
            data,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EstimatorResult {
    pub mean_hat: ScalarField,
    pub tau_n: f64,
    /// Pointwise sample standard deviation; undefined when `n = 1`.
    pub sd_hat: ScalarField,
    pub residuals: Replicates,
}

impl EstimatorResult {
    pub fn n(&self) -> usize {
        self.residuals.len()
    }
}

pub fn estimate(sample: &FieldSample) -> EstimatorResult {
    let grid = sample.grid.clone();
    let p = grid.len();
    let n = sample.n;
    let mut mean = vec![0.0; p];
    for k in 0..n {
        for (m, x) in mean.iter_mut().zip(sample.replicate(k)) {
            *m += x;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut data = Vec::with_capacity(n * p);
    let mut ss = vec![0.0; p];
    for k in 0..n {
        for (i, x) in sample.replicate(k).iter().enumerate() {
            let r = x - mean[i];
            ss[i] += r * r;
            data.push(r);
        }
    }
    let sd_hat = if n >= 2 {
        ScalarField::new(
            grid.clone(),
            ss.iter().map(|s| (s / (n - 1) as f64).sqrt()).collect(),
        )
        .expect("finite sums")
    } else {
        ScalarField::partial(grid.clone(), vec![None; p]).expect("grid length")
    };
    EstimatorResult {
        mean_hat: ScalarField::new(grid.clone(), mean).expect("finite replicates"),
        tau_n: 1.0 / (n as f64).sqrt(),
        sd_hat,
        residuals: Replicates {
            grid,
            ids: (0..n as u64).collect(),
            data,
        },
    }
}
