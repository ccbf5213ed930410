//! Fréchet means, geodesic interpolation and tangent PCA for any [`MetricSpec`].
//!
//! Everything runs in the whitened chart of [`Frame`], where the tangent
//! mean is a plain weighted average and the metric is the base product.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, SpdError};
use crate::metric::{Frame, MetricSpec};
use crate::spd::{sym_eigen, SpdMatrix, SymMatrix};

const WEIGHT_TOL: f64 = 1e-12;
const MAX_HALVINGS: usize = 40;

/// Points sharing a dimension, with optional weights summing to one.
#[derive(Clone, Debug)]
pub struct SpdDataset {
    n: usize,
    points: Vec<SpdMatrix>,
    weights: Option<Vec<f64>>,
}

impl SpdDataset {
    pub fn new(points: Vec<SpdMatrix>) -> Result<Self> {
        let n = points
            .first()
            .map(|p| p.dim())
            .ok_or_else(|| SpdError::InvalidParameter("dataset is empty".into()))?;
        for p in &points {
            p.check_dim(n)?;
        }
        Ok(Self {
            n,
            points,
            weights: None,
        })
    }

    pub fn with_weights(points: Vec<SpdMatrix>, weights: Vec<f64>) -> Result<Self> {
        let mut data = Self::new(points)?;
        if weights.len() != data.points.len() {
            return Err(SpdError::DimensionMismatch {
                expected: data.points.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(SpdError::InvalidParameter("weights must be nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_TOL {
            return Err(SpdError::InvalidParameter(format!(
                "weights must sum to 1, got {total}"
            )));
        }
        data.weights = Some(weights);
        Ok(data)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[SpdMatrix] {
        &self.points
    }

    /// Explicit weights, or uniform ones.
    pub fn weights(&self) -> Vec<f64> {
        match &self.weights {
            Some(w) => w.clone(),
            None => vec![1.0 / self.points.len() as f64; self.points.len()],
        }
    }

    /// Applies `g` to every point, keeping the weights.
    pub fn map<G>(&self, g: G) -> Result<SpdDataset>
    where
        G: Fn(&SpdMatrix) -> Result<SpdMatrix> + Sync,
    {
        let points = self.points.par_iter().map(&g).collect::<Result<Vec<_>>>()?;
        Ok(SpdDataset {
            n: points[0].dim(),
            points,
            weights: self.weights.clone(),
        })
    }
}

#[derive(Clone, Debug)]
pub struct KarcherOutcome {
    pub mean: SpdMatrix,
    pub iterations: usize,
    pub grad_norm: f64,
}

fn lift(frame: &Frame<'_>, points: &[SpdMatrix]) -> Result<Vec<SymMatrix>> {
    points.par_iter().map(|p| frame.chart_log(p)).collect()
}

fn weighted_sum(vectors: &[SymMatrix], weights: &[f64]) -> SymMatrix {
    let n = vectors[0].dim();
    vectors
        .iter()
        .zip(weights)
        .fold(SymMatrix::zeros(n), |acc, (v, &w)| &acc + &(v * w))
}

fn objective(frame: &Frame<'_>, logs: &[SymMatrix], weights: &[f64]) -> f64 {
    logs.iter()
        .zip(weights)
        .map(|(l, w)| w * frame.inner(l, l))
        .sum()
}

/// Karcher flow `x ← Exp_x(Σ wᵢ Log_x(pᵢ))` with unit step, halved while
/// the weighted sum of squared distances increases. Stops when the metric
/// norm of the tangent mean drops below `tol`.
pub fn frechet_mean(metric: &MetricSpec, data: &SpdDataset, tol: f64, max_iter: usize) -> Result<KarcherOutcome> {
    let weights = data.weights();
    let mut x = data.points[0].clone();
    let mut grad_norm = f64::INFINITY;
    for iteration in 0..=max_iter {
        let frame = metric.frame(&x)?;
        let logs = lift(&frame, &data.points)?;
        let grad = weighted_sum(&logs, &weights);
        grad_norm = frame.inner(&grad, &grad).max(0.0).sqrt();
        if grad_norm < tol {
            return Ok(KarcherOutcome {
                mean: x,
                iterations: iteration,
                grad_norm,
            });
        }
        if iteration == max_iter {
            break;
        }
        let current = objective(&frame, &logs, &weights);
        let mut step = 1.0;
        let mut next = frame.chart_exp(&(&grad * step))?;
        for _ in 0..MAX_HALVINGS {
            let trial = metric.frame(&next)?;
            let value = objective(&trial, &lift(&trial, &data.points)?, &weights);
            if value <= current * (1.0 + 1e-12) {
                break;
            }
            step *= 0.5;
            next = frame.chart_exp(&(&grad * step))?;
        }
        x = next;
    }
    Err(SpdError::NonConvergence {
        iterations: max_iter,
        grad_norm,
        last: Box::new(x),
    })
}

/// Points `γ(t)` of the geodesic with `γ(0) = sigma`, `γ(1) = lambda`.
pub fn interpolate(metric: &MetricSpec, sigma: &SpdMatrix, lambda: &SpdMatrix, ts: &[f64]) -> Result<Vec<SpdMatrix>> {
    if let Some(t) = ts.iter().find(|t| !t.is_finite()) {
        return Err(SpdError::InvalidParameter(format!("non-finite time {t}")));
    }
    let frame = metric.frame(sigma)?;
    let w = frame.chart_log(lambda)?;
    ts.iter()
        .map(|&t| {
            if t == 0.0 {
                Ok(sigma.clone())
            } else {
                frame.chart_exp(&(&w * t))
            }
        })
        .collect()
}

/// Tangent PCA at the Fréchet mean.
///
/// `variances` holds the `min(N, n(n+1)/2)` leading eigenvalues of the
/// weighted Gram matrix of lifted data (descending, clamped at zero); they
/// sum to the weighted mean squared distance to the mean. `components[k]`
/// is a tangent vector at the mean, unit-norm under the metric, present for
/// every variance above `1e-12` times the largest.
#[derive(Clone, Debug)]
pub struct TangentPcaResult {
    pub mean: SpdMatrix,
    pub components: Vec<SymMatrix>,
    pub variances: Vec<f64>,
    pub iterations: usize,
}

pub fn tangent_pca(metric: &MetricSpec, data: &SpdDataset, tol: f64, max_iter: usize) -> Result<TangentPcaResult> {
    if data.len() < 2 {
        return Err(SpdError::InvalidParameter(
            "tangent PCA needs at least two points".into(),
        ));
    }
    let outcome = frechet_mean(metric, data, tol, max_iter)?;
    let frame = metric.frame(&outcome.mean)?;
    let weights = data.weights();
    let lifted: Vec<SymMatrix> = lift(&frame, &data.points)?
        .into_iter()
        .zip(&weights)
        .map(|(v, w)| &v * w.sqrt())
        .collect();

    let count = lifted.len();
    let gram = DMatrix::from_fn(count, count, |i, j| frame.inner(&lifted[i], &lifted[j]));
    let eig = sym_eigen(&SymMatrix::new(gram)?)?;

    let n = data.dim();
    let keep = count.min(n * (n + 1) / 2);
    let variances: Vec<f64> = eig.eigenvalues()[..keep].iter().map(|v| v.max(0.0)).collect();
    let top = variances.first().copied().unwrap_or(0.0);
    let q = eig.eigenvectors();
    let mut components = Vec::new();
    for (k, &var) in variances.iter().enumerate() {
        if !(var > 1e-12 * top) || top == 0.0 {
            break;
        }
        let chart = lifted
            .iter()
            .enumerate()
            .fold(SymMatrix::zeros(n), |acc, (i, v)| &acc + &(v * q[(i, k)]));
        components.push(frame.from_chart(&(&chart * (1.0 / var.sqrt())))?);
    }
    Ok(TangentPcaResult {
        mean: outcome.mean,
        components,
        variances,
        iterations: outcome.iterations,
    })
}
