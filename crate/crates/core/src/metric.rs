//! Riemannian metrics on SPD matrices obtained by deforming the
//! affine-invariant metric, plus the log-Euclidean metric.
//!
//! For a deformation `f` with `P = f(Σ)`, every operation is carried out in
//! the whitened chart at `P`: a tangent vector `V` at `Σ` is represented by
//! `W = P^{-1/2} T_Σf(V) P^{-1/2}`, where the metric is the base scalar
//! product `α tr(W₁W₂) + β tr(W₁)tr(W₂)`. Geodesics, logarithms, distances
//! and symmetries become the affine-invariant ones at `P` pulled back by `f`.
//! The public surface always takes and returns tangent vectors at `Σ`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::deformation::{parse_deformation, Deformation, IdentityDeformation, PowerDeformation};
use crate::error::{Result, SpdError};
use crate::spd::{gram_log, spd_exp, spd_log, sym_eigen, SpdMatrix, SymMatrix, PD_TOL};

/// `α tr(V W) + β tr(V) tr(W)`.
pub fn base_scalar_product(alpha: f64, beta: f64, v: &SymMatrix, w: &SymMatrix) -> f64 {
    alpha * v.dot(w) + beta * v.trace() * w.trace()
}

#[derive(Clone)]
pub enum MetricKind {
    /// Pullback of the affine-invariant metric by a deformation.
    Deformed(Arc<dyn Deformation>),
    /// Pullback of the base scalar product by the matrix logarithm.
    LogEuclidean,
}

impl fmt::Debug for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricKind::Deformed(d) => write!(f, "Deformed({})", d.name()),
            MetricKind::LogEuclidean => write!(f, "LogEuclidean"),
        }
    }
}

/// A metric of the continuum: kind, scalar-product parameters `(α, β)` and
/// a global scale multiplying the metric tensor.
///
/// `polar` is the `pow:2` pullback scaled by `1/4` and `power:θ` the `pow:θ`
/// pullback scaled by `1/θ²`, so that `pow_θ : (SPD, θ² g^θ) → (SPD, g¹)`
/// is an isometry.
#[derive(Clone, Debug)]
pub struct MetricSpec {
    kind: MetricKind,
    alpha: f64,
    beta: f64,
    scale: f64,
    label: String,
}

impl MetricSpec {
    fn with_kind(kind: MetricKind, scale: f64, label: String) -> Self {
        Self {
            kind,
            alpha: 1.0,
            beta: 0.0,
            scale,
            label,
        }
    }

    pub fn affine() -> Self {
        Self::with_kind(
            MetricKind::Deformed(Arc::new(IdentityDeformation)),
            1.0,
            "affine".into(),
        )
    }

    pub fn polar() -> Self {
        Self::with_kind(
            MetricKind::Deformed(Arc::new(PowerDeformation::new(2.0).expect("nonzero"))),
            0.25,
            "polar".into(),
        )
    }

    pub fn power(theta: f64) -> Result<Self> {
        let pow = PowerDeformation::new(theta)?;
        Ok(Self::with_kind(
            MetricKind::Deformed(Arc::new(pow)),
            1.0 / (theta * theta),
            format!("power:{theta}"),
        ))
    }

    pub fn log_euclidean() -> Self {
        Self::with_kind(MetricKind::LogEuclidean, 1.0, "logeuclidean".into())
    }

    pub fn deformed(f: Arc<dyn Deformation>) -> Self {
        let label = format!("deformed:{}", f.name());
        Self::with_kind(MetricKind::Deformed(f), 1.0, label)
    }

    /// Replaces `(α, β)`. Bounds are checked against the dimension by
    /// [`Self::validate`] and by every operation.
    pub fn with_params(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = alpha;
        self.beta = beta;
        self
    }

    pub fn kind(&self) -> &MetricKind {
        &self.kind
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Metric id without the `(α, β)` suffix.
    pub fn label(&self) -> &str {
        &self.label
    }

    /// Full id including `@alpha=..,beta=..`, parseable by [`parse_metric`].
    pub fn id(&self) -> String {
        format!("{}@alpha={},beta={}", self.label, self.alpha, self.beta)
    }

    pub fn deformation(&self) -> Option<&Arc<dyn Deformation>> {
        match &self.kind {
            MetricKind::Deformed(f) => Some(f),
            MetricKind::LogEuclidean => None,
        }
    }

    /// False when the deformation image is a proper subset of SPD.
    pub fn is_onto(&self) -> bool {
        self.deformation().map_or(true, |f| f.is_onto())
    }

    /// `α > 0` and `α + nβ > 0`.
    pub fn validate(&self, n: usize) -> Result<()> {
        validate_params(self.alpha, self.beta, n)
    }

    /// Precomputes everything the metric needs at `sigma`.
    pub fn frame(&self, sigma: &SpdMatrix) -> Result<Frame<'_>> {
        self.validate(sigma.dim())?;
        let repr = match &self.kind {
            MetricKind::Deformed(f) => {
                let image = f.apply(sigma)?;
                let root = f.apply_sqrt(sigma)?;
                let inv_sqrt = root.eigen()?.map(f64::recip)?.into_matrix();
                let sqrt = root.into_sym().into_matrix();
                FrameRepr::Deformed {
                    f: Arc::clone(f),
                    image,
                    sqrt,
                    inv_sqrt,
                }
            }
            MetricKind::LogEuclidean => FrameRepr::LogEuclidean {
                log: spd_log(sigma)?,
            },
        };
        Ok(Frame {
            metric: self,
            point: sigma.clone(),
            repr,
        })
    }

    /// `g_Σ(V, W)`.
    pub fn metric_eval(&self, sigma: &SpdMatrix, v: &SymMatrix, w: &SymMatrix) -> Result<f64> {
        let frame = self.frame(sigma)?;
        let vc = frame.to_chart(v)?;
        let wc = frame.to_chart(w)?;
        Ok(frame.inner(&vc, &wc))
    }

    /// `η^f_A(Σ) = f⁻¹(A f(Σ) Aᵀ)`. For the log-Euclidean metric, with the
    /// polar factor `U = (AAᵀ)^{-1/2} A`, the action is
    /// `exp(log(AAᵀ) + U log(Σ) Uᵀ)`.
    pub fn group_action(&self, a: &DMatrix<f64>, sigma: &SpdMatrix) -> Result<SpdMatrix> {
        check_invertible(a, sigma.dim())?;
        match &self.kind {
            MetricKind::Deformed(f) => f.inverse_apply_gram(&(a * f.apply_sqrt(sigma)?.matrix())),
            MetricKind::LogEuclidean => {
                let aat = SpdMatrix::new(a * a.transpose())?;
                let e = aat.eigen()?;
                let u = e.map(|x| 1.0 / x.sqrt())?.into_matrix() * a;
                let rotated = spd_log(sigma)?.congruence(&u);
                spd_exp(&(&e.map(f64::ln)? + &rotated))
            }
        }
    }

    pub fn exp(&self, sigma: &SpdMatrix, v: &SymMatrix) -> Result<SpdMatrix> {
        self.geodesic(sigma, v, 1.0)
    }

    /// `γ(t)` for the geodesic with `γ(0) = Σ`, `γ′(0) = V`.
    pub fn geodesic(&self, sigma: &SpdMatrix, v: &SymMatrix, t: f64) -> Result<SpdMatrix> {
        let frame = self.frame(sigma)?;
        let w = frame.to_chart(v)?;
        frame.chart_exp(&(&w * t))
    }

    /// Riemannian logarithm `Log_Σ(Λ)`, a tangent vector at `Σ`.
    pub fn log(&self, sigma: &SpdMatrix, lambda: &SpdMatrix) -> Result<SymMatrix> {
        let frame = self.frame(sigma)?;
        frame.from_chart(&frame.chart_log(lambda)?)
    }

    /// Geodesic distance `sqrt(s·(α Σ (log λ_k)² + β (Σ log λ_k)²))`, where
    /// `λ_k` are the eigenvalues of `f(Σ)^{-1/2} f(Λ) f(Σ)^{-1/2}` and `s`
    /// is the metric scale.
    pub fn distance(&self, sigma: &SpdMatrix, lambda: &SpdMatrix) -> Result<f64> {
        let frame = self.frame(sigma)?;
        let w = frame.chart_log(lambda)?;
        Ok(frame.inner(&w, &w).max(0.0).sqrt())
    }

    /// Geodesic symmetry `s_Σ(Λ) = f⁻¹(f(Σ) f(Λ)⁻¹ f(Σ))`.
    pub fn symmetry(&self, sigma: &SpdMatrix, lambda: &SpdMatrix) -> Result<SpdMatrix> {
        lambda.check_dim(sigma.dim())?;
        match &self.kind {
            MetricKind::Deformed(f) => {
                // f(Σ) f(Λ)⁻¹ f(Σ) = B Bᵀ with B = f(Σ) f(Λ)^{-1/2}
                let root = f.apply_sqrt(sigma)?;
                let q_inv_sqrt = f.apply_sqrt(lambda)?.eigen()?.map(f64::recip)?;
                f.inverse_apply_gram(&(root.matrix() * (root.matrix() * q_inv_sqrt.matrix())))
            }
            MetricKind::LogEuclidean => {
                let ls = spd_log(sigma)?;
                spd_exp(&(&(&ls * 2.0) - &spd_log(lambda)?))
            }
        }
    }

    /// `‖V‖_Σ`.
    pub fn norm(&self, sigma: &SpdMatrix, v: &SymMatrix) -> Result<f64> {
        Ok(self.metric_eval(sigma, v, v)?.max(0.0).sqrt())
    }
}

impl fmt::Display for MetricSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

pub(crate) fn validate_params(alpha: f64, beta: f64, n: usize) -> Result<()> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(SpdError::InvalidParameter(format!(
            "alpha must be > 0, got {alpha}"
        )));
    }
    if !beta.is_finite() || alpha + n as f64 * beta <= 0.0 {
        return Err(SpdError::InvalidParameter(format!(
            "beta must satisfy beta > -alpha/n = {} for n = {n}, got {beta}",
            -alpha / n as f64
        )));
    }
    Ok(())
}

fn check_invertible(a: &DMatrix<f64>, n: usize) -> Result<()> {
    if !a.is_square() {
        return Err(SpdError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if a.nrows() != n {
        return Err(SpdError::DimensionMismatch {
            expected: n,
            found: a.nrows(),
        });
    }
    let det = a.determinant();
    if !(det.abs() > PD_TOL) {
        return Err(SpdError::Singular { det });
    }
    Ok(())
}

enum FrameRepr {
    Deformed {
        f: Arc<dyn Deformation>,
        image: SpdMatrix,
        sqrt: DMatrix<f64>,
        inv_sqrt: DMatrix<f64>,
    },
    LogEuclidean {
        log: SymMatrix,
    },
}

/// A metric evaluated at a base point, with the whitened chart used by
/// geodesics, logarithms and statistics.
pub struct Frame<'a> {
    metric: &'a MetricSpec,
    point: SpdMatrix,
    repr: FrameRepr,
}

impl Frame<'_> {
    pub fn point(&self) -> &SpdMatrix {
        &self.point
    }

    pub fn metric(&self) -> &MetricSpec {
        self.metric
    }

    /// Metric inner product of two chart vectors.
    pub fn inner(&self, w1: &SymMatrix, w2: &SymMatrix) -> f64 {
        self.metric.scale * base_scalar_product(self.metric.alpha, self.metric.beta, w1, w2)
    }

    /// Tangent vector at the base point → chart vector.
    pub fn to_chart(&self, v: &SymMatrix) -> Result<SymMatrix> {
        v.check_dim(self.point.dim())?;
        match &self.repr {
            FrameRepr::Deformed { f, inv_sqrt, .. } => {
                Ok(f.differential(&self.point, v)?.congruence(inv_sqrt))
            }
            FrameRepr::LogEuclidean { .. } => self.point.eigen()?.dk_apply(f64::ln, f64::recip, v),
        }
    }

    /// Chart vector → tangent vector at the base point.
    pub fn from_chart(&self, w: &SymMatrix) -> Result<SymMatrix> {
        w.check_dim(self.point.dim())?;
        match &self.repr {
            FrameRepr::Deformed { f, sqrt, .. } => {
                f.inverse_differential(&self.point, &w.congruence(sqrt))
            }
            FrameRepr::LogEuclidean { .. } => self.point.eigen()?.dk_solve(f64::ln, f64::recip, w),
        }
    }

    /// Logarithm expressed in the chart: `log(P^{-1/2} f(Λ) P^{-1/2})`.
    pub fn chart_log(&self, lambda: &SpdMatrix) -> Result<SymMatrix> {
        lambda.check_dim(self.point.dim())?;
        match &self.repr {
            FrameRepr::Deformed { f, inv_sqrt, .. } => {
                gram_log(&(inv_sqrt * f.apply_sqrt(lambda)?.matrix()))
            }
            FrameRepr::LogEuclidean { log } => Ok(&spd_log(lambda)? - log),
        }
    }

    /// Exponential of a chart vector: `f⁻¹(P^{1/2} exp(W) P^{1/2})`.
    pub fn chart_exp(&self, w: &SymMatrix) -> Result<SpdMatrix> {
        w.check_dim(self.point.dim())?;
        match &self.repr {
            FrameRepr::Deformed { f, sqrt, .. } => {
                let half = spd_exp(&(w * 0.5))?;
                f.inverse_apply_gram(&(sqrt * half.matrix()))
            }
            FrameRepr::LogEuclidean { log } => spd_exp(&(log + w)),
        }
    }

    /// Deformed image `f(Σ)` of the base point (Σ itself for log-Euclidean).
    pub fn image(&self) -> &SpdMatrix {
        match &self.repr {
            FrameRepr::Deformed { image, .. } => image,
            FrameRepr::LogEuclidean { .. } => &self.point,
        }
    }
}

/// `g^θ` with `(α, β)`. Fails for `θ = 0`; use [`log_euclidean_eval`] there.
pub fn power_affine_eval(
    theta: f64,
    alpha: f64,
    beta: f64,
    sigma: &SpdMatrix,
    v: &SymMatrix,
    w: &SymMatrix,
) -> Result<f64> {
    MetricSpec::power(theta)?
        .with_params(alpha, beta)
        .metric_eval(sigma, v, w)
}

/// `α tr(∂_V log Σ ∂_W log Σ) + β tr(∂_V log Σ) tr(∂_W log Σ)`.
pub fn log_euclidean_eval(
    alpha: f64,
    beta: f64,
    sigma: &SpdMatrix,
    v: &SymMatrix,
    w: &SymMatrix,
) -> Result<f64> {
    validate_params(alpha, beta, sigma.dim())?;
    let e = sigma.eigen()?;
    let dv = e.dk_apply(f64::ln, f64::recip, v)?;
    let dw = e.dk_apply(f64::ln, f64::recip, w)?;
    Ok(base_scalar_product(alpha, beta, &dv, &dw))
}

/// Geodesic through `base` with initial velocity `velocity`.
#[derive(Clone, Debug)]
pub struct GeodesicSegment {
    pub base: SpdMatrix,
    pub velocity: SymMatrix,
    pub metric: MetricSpec,
}

impl GeodesicSegment {
    pub fn new(metric: MetricSpec, base: SpdMatrix, velocity: SymMatrix) -> Self {
        Self {
            base,
            velocity,
            metric,
        }
    }

    /// Geodesic from `sigma` reaching `lambda` at `t = 1`.
    pub fn between(metric: MetricSpec, sigma: &SpdMatrix, lambda: &SpdMatrix) -> Result<Self> {
        let velocity = metric.log(sigma, lambda)?;
        Ok(Self::new(metric, sigma.clone(), velocity))
    }

    pub fn at(&self, t: f64) -> Result<SpdMatrix> {
        if t == 0.0 {
            return Ok(self.base.clone());
        }
        self.metric.geodesic(&self.base, &self.velocity, t)
    }
}

/// Parses a metric id:
///
/// ```text
/// affine | polar | power:<θ> | logeuclidean | deformed:<deformation-id>
/// ```
///
/// optionally followed by `@alpha=<a>,beta=<b>` (either key may be omitted).
/// Parameter bounds depend on `n` and are checked by [`MetricSpec::validate`].
pub fn parse_metric(id: &str) -> Result<MetricSpec> {
    let id = id.trim();
    let (body, params) = match id.split_once('@') {
        Some((b, p)) => (b.trim(), Some(p)),
        None => (id, None),
    };
    let bad = |msg: String| SpdError::InvalidParameter(format!("metric '{id}': {msg}"));
    let mut spec = match body.split_once(':') {
        None => match body {
            "affine" => MetricSpec::affine(),
            "polar" => MetricSpec::polar(),
            "logeuclidean" => MetricSpec::log_euclidean(),
            _ => return Err(bad("unknown metric".into())),
        },
        Some(("power", t)) => {
            let theta: f64 = t
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid power '{t}'")))?;
            if theta == 0.0 {
                return Err(bad(
                    "power must be nonzero (use 'logeuclidean' for the limit)".into(),
                ));
            }
            MetricSpec::power(theta)?
        }
        Some(("deformed", d)) => MetricSpec::deformed(parse_deformation(d)?),
        Some(_) => return Err(bad("unknown metric".into())),
    };
    if let Some(params) = params {
        let (mut alpha, mut beta) = (spec.alpha, spec.beta);
        for kv in params.split(',') {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got '{kv}'")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| bad(format!("invalid number '{v}'")))?;
            match k.trim() {
                "alpha" => alpha = v,
                "beta" => beta = v,
                other => return Err(bad(format!("unknown parameter '{other}'"))),
            }
        }
        spec = spec.with_params(alpha, beta);
    }
    Ok(spec)
}

/// Metrics exercised by the property suites in dimension `n`: the named
/// presets plus the pullback by every registered deformation onto SPD(n).
/// Pullbacks by maps with a smaller image, such as the anisotropy map, are
/// left out: that map is not defined at repeated eigenvalues.
pub fn registered_metrics(n: usize) -> Vec<MetricSpec> {
    let mut metrics = vec![
        MetricSpec::affine(),
        MetricSpec::polar(),
        MetricSpec::power(0.5).expect("nonzero"),
        MetricSpec::power(-1.0).expect("nonzero"),
        MetricSpec::log_euclidean(),
    ];
    metrics.extend(
        crate::deformation::registered_deformations(n)
            .into_iter()
            .filter(|f| f.name() != "identity" && f.is_onto())
            .map(MetricSpec::deformed),
    );
    metrics
}

/// Eigenvalues of `f(Σ)^{-1/2} f(Λ) f(Σ)^{-1/2}` (descending); for the
/// log-Euclidean metric, the exponentials of the eigenvalues of `log Λ − log Σ`.
pub fn relative_spectrum(metric: &MetricSpec, sigma: &SpdMatrix, lambda: &SpdMatrix) -> Result<Vec<f64>> {
    let frame = metric.frame(sigma)?;
    let w = frame.chart_log(lambda)?;
    Ok(sym_eigen(&w)?.eigenvalues().iter().map(|x| x.exp()).collect())
}
