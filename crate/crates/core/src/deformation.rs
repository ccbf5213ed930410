//! Diffeomorphisms of the SPD cone used to deform the affine-invariant metric.
//!
//! A [`Deformation`] `f` exposes the map, its inverse, and the differential
//! `T_Σ f` together with its inverse. The pullback of the affine-invariant
//! metric by `f` is built in [`crate::metric`].
//!
//! Deformations are addressable by string id (see [`parse_deformation`]):
//!
//! ```text
//! identity | pow:<θ> | loglinear:<λ>,<μ> | adjugate | aniso:<a1>,...,<an>
//! univariate:quadratic | univariate:xsqrt | univariate:sqrt1pm1
//! univariate:expm1 | univariate:sinh
//! ```

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Result, SpdError};
use crate::sampling::{random_orthogonal, random_positive_diagonal};
use crate::spd::{
    gram_fun, gram_log, spd_exp, spd_log, spd_pow, spd_sqrt, sym_eigen, EigenDecomposition, SpdMatrix, SymMatrix,
};

/// Relative eigenvalue gap below which the sorted-spectral differential is refused.
pub const GAP_TOL: f64 = 1e-6;

/// Relative step for finite-difference differentials.
pub const FD_SCALE: f64 = 1e-5;

/// Relative slack when testing membership in the image of an anisotropy.
pub const IMAGE_TOL: f64 = 1e-9;

/// Tolerance used by the randomized subfamily checks.
pub const PROPERTY_TOL: f64 = 1e-8;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

pub trait Deformation: Send + Sync + fmt::Debug {
    /// Stable id, parseable by [`parse_deformation`] for registry members.
    fn name(&self) -> String;

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix>;

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix>;

    /// `T_s f (v)`.
    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix>;

    /// `(T_s f)⁻¹ (w)`, the inverse of the differential taken at `s`.
    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix>;

    /// False when the differential is computed by finite differences.
    fn has_analytic_differential(&self) -> bool {
        true
    }

    /// False when the image is a proper subset of SPD, so group actions,
    /// symmetries and geodesics of the pullback metric can leave it.
    fn is_onto(&self) -> bool {
        true
    }

    /// `f(s)^{1/2}`. Spectral maps override this to avoid forming `f(s)`,
    /// whose condition number can be a power of that of `s`.
    fn apply_sqrt(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        spd_sqrt(&self.apply(s)?)
    }

    /// `f⁻¹(B Bᵀ)` for invertible `B`. Spectral maps override this with
    /// [`gram_fun`] so that `B Bᵀ` is never formed.
    fn inverse_apply_gram(&self, b: &DMatrix<f64>) -> Result<SpdMatrix> {
        self.inverse_apply(&SpdMatrix::new(b * b.transpose())?)
    }
}

/// Fourth-order central difference
/// `(−g(s + 2hv) + 8g(s + hv) − 8g(s − hv) + g(s − 2hv)) / 12h`
/// with `h = FD_SCALE · ‖s‖ / ‖v‖`.
pub fn central_difference<G>(g: G, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix>
where
    G: Fn(&SpdMatrix) -> Result<SpdMatrix>,
{
    v.check_dim(s.dim())?;
    let vn = v.norm();
    if vn == 0.0 {
        return Ok(SymMatrix::zeros(s.dim()));
    }
    let h = FD_SCALE * s.norm() / vn;
    let at = |k: f64| -> Result<SymMatrix> {
        Ok(g(&SpdMatrix::from_sym(s.as_sym() + &(v * (k * h)))?)?.into_sym())
    };
    let near = &at(1.0)? - &at(-1.0)?;
    let far = &at(2.0)? - &at(-2.0)?;
    Ok(&(&(&near * 8.0) - &far) * (1.0 / (12.0 * h)))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct IdentityDeformation;

impl Deformation for IdentityDeformation {
    fn name(&self) -> String {
        "identity".into()
    }

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        Ok(s.clone())
    }

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        Ok(s.clone())
    }

    fn apply_sqrt(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        spd_sqrt(s)
    }

    fn inverse_apply_gram(&self, b: &DMatrix<f64>) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(gram_fun(b, |x| x * x)?)
    }

    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
        v.check_dim(s.dim())?;
        Ok(v.clone())
    }

    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix> {
        w.check_dim(s.dim())?;
        Ok(w.clone())
    }
}

/// `Σ ↦ Σ^θ`, θ ≠ 0.
#[derive(Debug, Clone, Copy)]
pub struct PowerDeformation {
    theta: f64,
}

impl PowerDeformation {
    pub fn new(theta: f64) -> Result<Self> {
        if theta == 0.0 || !theta.is_finite() {
            return Err(SpdError::InvalidParameter(format!(
                "power exponent must be finite and nonzero, got {theta}"
            )));
        }
        Ok(Self { theta })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    fn scalar(&self) -> (impl Fn(f64) -> f64, impl Fn(f64) -> f64) {
        let t = self.theta;
        (move |x: f64| x.powf(t), move |x: f64| t * x.powf(t - 1.0))
    }
}

impl Deformation for PowerDeformation {
    fn name(&self) -> String {
        format!("pow:{}", self.theta)
    }

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        spd_pow(s, self.theta)
    }

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        spd_pow(s, 1.0 / self.theta)
    }

    fn apply_sqrt(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        spd_pow(s, 0.5 * self.theta)
    }

    fn inverse_apply_gram(&self, b: &DMatrix<f64>) -> Result<SpdMatrix> {
        let exponent = 2.0 / self.theta;
        SpdMatrix::from_sym(gram_fun(b, |x| x.powf(exponent))?)
    }

    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
        let (f, fp) = self.scalar();
        s.eigen()?.dk_apply(f, fp, v)
    }

    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix> {
        let (f, fp) = self.scalar();
        s.eigen()?.dk_solve(f, fp, w)
    }
}

/// `f_{λ,μ}(Σ) = det(Σ)^{(λ−μ)/n} Σ^μ`, i.e. `exp ∘ F ∘ log` with
/// `F(V) = λ (tr V / n) I + μ (V − (tr V / n) I)`.
#[derive(Debug, Clone, Copy)]
pub struct LogLinearDeformation {
    lambda: f64,
    mu: f64,
}

impl LogLinearDeformation {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        if lambda == 0.0 || mu == 0.0 || !lambda.is_finite() || !mu.is_finite() {
            return Err(SpdError::InvalidParameter(format!(
                "log-linear parameters must be finite and nonzero, got λ={lambda}, μ={mu}"
            )));
        }
        Ok(Self { lambda, mu })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn inverse(&self) -> Self {
        Self {
            lambda: 1.0 / self.lambda,
            mu: 1.0 / self.mu,
        }
    }

    /// The linear map `F` acting on log-domain matrices.
    pub fn linear_part(&self, v: &SymMatrix) -> SymMatrix {
        let n = v.dim();
        let mean_trace = v.trace() / n as f64;
        let iso = &SymMatrix::identity(n) * ((self.lambda - self.mu) * mean_trace);
        &(v * self.mu) + &iso
    }

    fn log_image(&self, s: &SpdMatrix) -> Result<SymMatrix> {
        Ok(self.linear_part(&spd_log(s)?))
    }
}

impl Deformation for LogLinearDeformation {
    fn name(&self) -> String {
        format!("loglinear:{},{}", self.lambda, self.mu)
    }

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        spd_exp(&self.log_image(s)?)
    }

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        self.inverse().apply(s)
    }

    fn apply_sqrt(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        spd_exp(&(&self.log_image(s)? * 0.5))
    }

    fn inverse_apply_gram(&self, b: &DMatrix<f64>) -> Result<SpdMatrix> {
        spd_exp(&self.inverse().linear_part(&gram_log(b)?))
    }

    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
        let dlog = s.eigen()?.dk_apply(f64::ln, f64::recip, v)?;
        let image = sym_eigen(&self.log_image(s)?)?;
        image.dk_apply(f64::exp, f64::exp, &self.linear_part(&dlog))
    }

    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix> {
        let image = sym_eigen(&self.log_image(s)?)?;
        let u = image.dk_solve(f64::exp, f64::exp, w)?;
        let dlog = self.inverse().linear_part(&u);
        s.eigen()?.dk_solve(f64::ln, f64::recip, &dlog)
    }
}

/// `adj = f_{n−1,−1}` for a fixed dimension.
pub fn make_adjugate(n: usize) -> Result<LogLinearDeformation> {
    if n < 2 {
        return Err(SpdError::InvalidParameter(
            "adjugate deformation requires n >= 2".into(),
        ));
    }
    LogLinearDeformation::new((n - 1) as f64, -1.0)
}

/// `Σ ↦ det(Σ) Σ⁻¹`, resolving the dimension from its argument.
#[derive(Debug, Clone, Copy, Default)]
pub struct AdjugateDeformation;

impl AdjugateDeformation {
    fn at(&self, s: &SpdMatrix) -> Result<LogLinearDeformation> {
        make_adjugate(s.dim())
    }
}

impl Deformation for AdjugateDeformation {
    fn name(&self) -> String {
        "adjugate".into()
    }

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        self.at(s)?.apply(s)
    }

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        self.at(s)?.inverse_apply(s)
    }

    fn apply_sqrt(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        self.at(s)?.apply_sqrt(s)
    }

    fn inverse_apply_gram(&self, b: &DMatrix<f64>) -> Result<SpdMatrix> {
        make_adjugate(b.nrows())?.inverse_apply_gram(b)
    }

    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
        self.at(s)?.differential(s, v)
    }

    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix> {
        self.at(s)?.inverse_differential(s, w)
    }
}

/// Eigenvalue-wise deformation by a strictly increasing `f0 : (0,∞) → (0,∞)`.
#[derive(Clone)]
pub struct UnivariateDeformation {
    name: String,
    f0: ScalarFn,
    f0_prime: ScalarFn,
    inverse: UnivariateInverse,
}

#[derive(Clone)]
enum UnivariateInverse {
    Explicit(ScalarFn),
    Bisection,
}

impl fmt::Debug for UnivariateDeformation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("UnivariateDeformation")
            .field("name", &self.name)
            .field("bisection", &matches!(self.inverse, UnivariateInverse::Bisection))
            .finish()
    }
}

impl UnivariateDeformation {
    pub fn new(name: impl Into<String>, f0: ScalarFn, f0_prime: ScalarFn, f0_inverse: ScalarFn) -> Self {
        Self {
            name: name.into(),
            f0,
            f0_prime,
            inverse: UnivariateInverse::Explicit(f0_inverse),
        }
    }

    /// Inverts `f0` numerically by bracketed bisection.
    pub fn with_bisection_inverse(name: impl Into<String>, f0: ScalarFn, f0_prime: ScalarFn) -> Self {
        Self {
            name: name.into(),
            f0,
            f0_prime,
            inverse: UnivariateInverse::Bisection,
        }
    }

    /// `x ↦ c·x·(x − a)` with `c > 0`, `a ≤ 0`; closed-form inverse.
    pub fn quadratic(c: f64, a: f64) -> Result<Self> {
        if !(c > 0.0 && a <= 0.0 && c.is_finite() && a.is_finite()) {
            return Err(SpdError::InvalidParameter(format!(
                "quadratic deformation needs c > 0 and a <= 0, got c={c}, a={a}"
            )));
        }
        let name = if c == 2.0 && a == -1.0 {
            "univariate:quadratic".to_string()
        } else {
            format!("univariate:quadratic({c},{a})")
        };
        Ok(Self::new(
            name,
            Arc::new(move |x| c * x * (x - a)),
            Arc::new(move |x| c * (2.0 * x - a)),
            // positive root of c x² − c a x − y, in the form free of cancellation
            Arc::new(move |y| 2.0 * y / ((c * c * a * a + 4.0 * c * y).sqrt() - c * a)),
        ))
    }

    /// Polynomial `c·x·∏(x − a_i)` with `c > 0` and all `a_i ≤ 0`, inverted by bisection.
    pub fn polynomial(c: f64, roots: &[f64]) -> Result<Self> {
        if !(c > 0.0) || roots.iter().any(|&a| a > 0.0 || !a.is_finite()) {
            return Err(SpdError::InvalidParameter(
                "polynomial deformation needs c > 0 and non-positive roots".into(),
            ));
        }
        let roots: Arc<[f64]> = roots.into();
        let r1 = Arc::clone(&roots);
        let f0 = move |x: f64| c * x * r1.iter().map(|a| x - a).product::<f64>();
        let r2 = Arc::clone(&roots);
        let f0_prime = move |x: f64| {
            // product rule over the factors x, (x − a_1), ..., (x − a_k)
            let factors: Vec<f64> = std::iter::once(x).chain(r2.iter().map(|a| x - a)).collect();
            let mut total = 0.0;
            for skip in 0..factors.len() {
                total += factors
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != skip)
                    .map(|(_, v)| v)
                    .product::<f64>();
            }
            c * total
        };
        Ok(Self::with_bisection_inverse(
            format!("univariate:poly({c};{roots:?})"),
            Arc::new(f0),
            Arc::new(f0_prime),
        ))
    }

    pub fn expm1() -> Self {
        Self::new(
            "univariate:expm1",
            Arc::new(f64::exp_m1),
            Arc::new(f64::exp),
            Arc::new(f64::ln_1p),
        )
    }

    /// `x + √x`, inverted through the quadratic in `√x`.
    pub fn xsqrt() -> Self {
        Self::new(
            "univariate:xsqrt",
            Arc::new(|x| x + x.sqrt()),
            Arc::new(|x| 1.0 + 0.5 / x.sqrt()),
            Arc::new(|y| {
                let r = 2.0 * y / (1.0 + (1.0 + 4.0 * y).sqrt());
                r * r
            }),
        )
    }

    /// `√(1 + x) − 1`, written without cancellation near zero.
    pub fn sqrt1pm1() -> Self {
        Self::new(
            "univariate:sqrt1pm1",
            Arc::new(|x| x / ((1.0 + x).sqrt() + 1.0)),
            Arc::new(|x| 0.5 / (1.0 + x).sqrt()),
            Arc::new(|y| y * (y + 2.0)),
        )
    }

    pub fn sinh() -> Self {
        Self::new(
            "univariate:sinh",
            Arc::new(f64::sinh),
            Arc::new(f64::cosh),
            Arc::new(f64::asinh),
        )
    }

    pub fn f0(&self, x: f64) -> f64 {
        (self.f0)(x)
    }

    pub fn f0_inverse(&self, y: f64) -> f64 {
        match &self.inverse {
            UnivariateInverse::Explicit(g) => g(y),
            UnivariateInverse::Bisection => bisect_inverse(&*self.f0, y),
        }
    }
}

fn bisect_inverse(f: &dyn Fn(f64) -> f64, y: f64) -> f64 {
    if !(y > 0.0) || !y.is_finite() {
        return f64::NAN;
    }
    let mut hi = 1.0;
    while f(hi) < y {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::NAN;
        }
    }
    let mut lo = hi;
    while f(lo) > y {
        lo *= 0.5;
        if lo == 0.0 {
            return f64::NAN;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < y {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

impl Deformation for UnivariateDeformation {
    fn name(&self) -> String {
        self.name.clone()
    }

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(s.eigen()?.map(&*self.f0)?)
    }

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(s.eigen()?.map(|y| self.f0_inverse(y))?)
    }

    fn apply_sqrt(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(s.eigen()?.map(|x| (self.f0)(x).sqrt())?)
    }

    fn inverse_apply_gram(&self, b: &DMatrix<f64>) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(gram_fun(b, |x| self.f0_inverse(x * x))?)
    }

    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
        s.eigen()?.dk_apply(&*self.f0, &*self.f0_prime, v)
    }

    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix> {
        s.eigen()?.dk_solve(&*self.f0, &*self.f0_prime, w)
    }
}

/// Gains applied to the sorted spectrum: `U diag(λ_i) Uᵀ ↦ U diag(a_i λ_i) Uᵀ`
/// with `λ_1 ≥ … ≥ λ_n`. Gains must be positive and non-increasing so that the
/// image spectrum keeps its order and the map is invertible.
#[derive(Debug, Clone)]
pub struct SortedSpectralDeformation {
    gains: Vec<f64>,
}

impl SortedSpectralDeformation {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(SpdError::InvalidParameter("anisotropy needs at least one gain".into()));
        }
        if gains.iter().any(|g| !(*g > 0.0) || !g.is_finite()) {
            return Err(SpdError::InvalidParameter(format!(
                "anisotropy gains must be positive, got {gains:?}"
            )));
        }
        if gains.windows(2).any(|w| w[1] > w[0]) {
            return Err(SpdError::InvalidParameter(format!(
                "anisotropy gains must be non-increasing, got {gains:?}"
            )));
        }
        Ok(Self { gains })
    }

    /// Gains evaluated from scalar functions of an external parameter `r`.
    pub fn from_gain_functions(gains: &[ScalarFn], r: f64) -> Result<Self> {
        Self::new(gains.iter().map(|a| a(r)).collect())
    }

    /// `(1 + r, 1, 1/(1 + r))`, amplifying the anisotropy of a 3×3 tensor.
    pub fn anisotropy(r: f64) -> Result<Self> {
        if !(r >= 0.0) {
            return Err(SpdError::InvalidParameter(format!(
                "anisotropy parameter must be >= 0, got {r}"
            )));
        }
        let gains: [ScalarFn; 3] = [
            Arc::new(|r| 1.0 + r),
            Arc::new(|_| 1.0),
            Arc::new(|r| 1.0 / (1.0 + r)),
        ];
        Self::from_gain_functions(&gains, r)
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    fn eigen_checked(&self, s: &SpdMatrix) -> Result<EigenDecomposition> {
        s.check_dim(self.gains.len())?;
        s.eigen()
    }

    fn scaled(&self, s: &SpdMatrix, invert: bool) -> Result<SpdMatrix> {
        let e = self.eigen_checked(s)?;
        let values: Vec<f64> = e
            .eigenvalues()
            .iter()
            .zip(&self.gains)
            .map(|(d, a)| if invert { d / a } else { d * a })
            .collect();
        // the image holds the matrices whose quotients stay sorted
        if invert {
            if let Some(w) = values.windows(2).find(|w| w[1] > w[0] * (1.0 + IMAGE_TOL)) {
                return Err(SpdError::Domain { value: w[1] - w[0] });
            }
        }
        SpdMatrix::from_sym(e.compose(&values))
    }

    fn require_gaps(&self, s: &SpdMatrix) -> Result<()> {
        let e = self.eigen_checked(s)?;
        let d = e.eigenvalues();
        let gap = d
            .windows(2)
            .map(|w| (w[0] - w[1]) / d[0])
            .fold(f64::INFINITY, f64::min);
        if gap < GAP_TOL {
            return Err(SpdError::DegenerateSpectrum {
                gap,
                tolerance: GAP_TOL,
            });
        }
        Ok(())
    }
}

impl Deformation for SortedSpectralDeformation {
    fn name(&self) -> String {
        let parts: Vec<String> = self.gains.iter().map(|g| g.to_string()).collect();
        format!("aniso:{}", parts.join(","))
    }

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        self.scaled(s, false)
    }

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        self.scaled(s, true)
    }

    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
        self.require_gaps(s)?;
        central_difference(|x| self.apply(x), s, v)
    }

    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix> {
        let image = self.apply(s)?;
        self.require_gaps(&image)?;
        central_difference(|y| self.inverse_apply(y), &image, w)
    }

    fn has_analytic_differential(&self) -> bool {
        false
    }

    fn is_onto(&self) -> bool {
        self.gains.windows(2).all(|w| w[0] == w[1])
    }
}

/// `Σ ↦ A Σ Aᵀ` for a fixed invertible `A`. Not spectral unless `A` is
/// a multiple of an orthogonal matrix.
#[derive(Debug, Clone)]
pub struct CongruenceDeformation {
    a: DMatrix<f64>,
    a_inv: DMatrix<f64>,
}

impl CongruenceDeformation {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(SpdError::NotSquare {
                rows: a.nrows(),
                cols: a.ncols(),
            });
        }
        let det = a.determinant();
        let a_inv = a
            .clone()
            .try_inverse()
            .filter(|_| det.abs() > crate::spd::PD_TOL)
            .ok_or(SpdError::Singular { det })?;
        Ok(Self { a, a_inv })
    }
}

impl Deformation for CongruenceDeformation {
    fn name(&self) -> String {
        "congruence".into()
    }

    fn apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        s.check_dim(self.a.nrows())?;
        s.congruence(&self.a)
    }

    fn inverse_apply(&self, s: &SpdMatrix) -> Result<SpdMatrix> {
        s.check_dim(self.a.nrows())?;
        s.congruence(&self.a_inv)
    }

    fn differential(&self, s: &SpdMatrix, v: &SymMatrix) -> Result<SymMatrix> {
        s.check_dim(self.a.nrows())?;
        Ok(v.congruence(&self.a))
    }

    fn inverse_differential(&self, s: &SpdMatrix, w: &SymMatrix) -> Result<SymMatrix> {
        s.check_dim(self.a.nrows())?;
        Ok(w.congruence(&self.a_inv))
    }
}

/// Parses a deformation id.
pub fn parse_deformation(id: &str) -> Result<Arc<dyn Deformation>> {
    let id = id.trim();
    let bad = |msg: &str| SpdError::InvalidParameter(format!("deformation '{id}': {msg}"));
    let (head, args) = match id.split_once(':') {
        Some((h, a)) => (h, Some(a)),
        None => (id, None),
    };
    let numbers = |a: &str| -> Result<Vec<f64>> {
        a.split(',')
            .map(|x| x.trim().parse::<f64>().map_err(|_| bad("expected numeric arguments")))
            .collect()
    };
    match (head, args) {
        ("identity", None) => Ok(Arc::new(IdentityDeformation)),
        ("adjugate", None) => Ok(Arc::new(AdjugateDeformation)),
        ("pow", Some(a)) => match numbers(a)?.as_slice() {
            [theta] => Ok(Arc::new(PowerDeformation::new(*theta)?)),
            _ => Err(bad("expected pow:<θ>")),
        },
        ("loglinear", Some(a)) => match numbers(a)?.as_slice() {
            [l, m] => Ok(Arc::new(LogLinearDeformation::new(*l, *m)?)),
            _ => Err(bad("expected loglinear:<λ>,<μ>")),
        },
        ("aniso", Some(a)) => Ok(Arc::new(SortedSpectralDeformation::new(numbers(a)?)?)),
        ("univariate", Some("quadratic")) => Ok(Arc::new(UnivariateDeformation::quadratic(2.0, -1.0)?)),
        ("univariate", Some("expm1")) => Ok(Arc::new(UnivariateDeformation::expm1())),
        ("univariate", Some("sinh")) => Ok(Arc::new(UnivariateDeformation::sinh())),
        ("univariate", Some("xsqrt")) => Ok(Arc::new(UnivariateDeformation::xsqrt())),
        ("univariate", Some("sqrt1pm1")) => Ok(Arc::new(UnivariateDeformation::sqrt1pm1())),
        _ => Err(bad("unknown deformation")),
    }
}

/// The named deformations exercised by the property suites for dimension `n`.
/// The anisotropy map is included only for `n = 3`.
pub fn registered_deformations(n: usize) -> Vec<Arc<dyn Deformation>> {
    let mut ids = vec![
        "identity",
        "pow:2",
        "pow:0.5",
        "pow:-1",
        "loglinear:2,0.5",
        "univariate:quadratic",
        "univariate:xsqrt",
        "univariate:sqrt1pm1",
    ];
    if n >= 2 {
        ids.push("adjugate");
    }
    if n == 3 {
        ids.push("aniso:2,1,0.5");
    }
    ids.into_iter()
        .map(|id| parse_deformation(id).expect("registry ids parse"))
        .collect()
}

/// Outcome of a randomized property check.
#[derive(Debug, Clone)]
pub struct PropertyCheck {
    pub passed: bool,
    pub trials: usize,
    pub max_residual: f64,
    pub counterexample: Option<String>,
}

fn rel_residual(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Checks `f(U D Uᵀ) = U f(D) Uᵀ` on random orthogonal `U` and positive diagonal `D`.
pub fn is_spectral_check<R: Rng + ?Sized>(
    f: &dyn Deformation,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> PropertyCheck {
    let mut max_residual = 0.0_f64;
    for trial in 0..trials {
        let d = random_positive_diagonal(n, 1.0, rng);
        let u = random_orthogonal(n, rng);
        let outcome = d.congruence(&u).and_then(|s| {
            let lhs = f.apply(&s)?;
            let rhs = f.apply(&d)?.congruence(&u)?;
            Ok(rel_residual(&lhs, &rhs))
        });
        match outcome {
            Ok(r) if r <= PROPERTY_TOL => max_residual = max_residual.max(r),
            Ok(r) => {
                return PropertyCheck {
                    passed: false,
                    trials: trial + 1,
                    max_residual: max_residual.max(r),
                    counterexample: Some(format!(
                        "f(U D Uᵀ) ≠ U f(D) Uᵀ (relative residual {r:.3e}) at D = {:?}, U = {:?}",
                        d.to_row_major(),
                        u.transpose().as_slice()
                    )),
                }
            }
            Err(e) => {
                return PropertyCheck {
                    passed: false,
                    trials: trial + 1,
                    max_residual: f64::INFINITY,
                    counterexample: Some(format!("evaluation failed: {e}")),
                }
            }
        }
    }
    PropertyCheck {
        passed: true,
        trials,
        max_residual,
        counterexample: None,
    }
}

/// Checks that `f` maps positive diagonal matrices to diagonal matrices.
pub fn is_diag_stable_check<R: Rng + ?Sized>(
    f: &dyn Deformation,
    n: usize,
    trials: usize,
    rng: &mut R,
) -> PropertyCheck {
    let mut max_residual = 0.0_f64;
    for trial in 0..trials {
        let d = random_positive_diagonal(n, 1.0, rng);
        match f.apply(&d) {
            Ok(image) => {
                let m = image.matrix();
                let off = (0..n)
                    .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
                    .fold(0.0_f64, |acc, ij| acc.max(m[ij].abs()));
                let r = off / image.norm();
                max_residual = max_residual.max(r);
                if r > PROPERTY_TOL {
                    return PropertyCheck {
                        passed: false,
                        trials: trial + 1,
                        max_residual,
                        counterexample: Some(format!(
                            "f(D) has off-diagonal mass {r:.3e} at D = {:?}",
                            d.to_row_major()
                        )),
                    };
                }
            }
            Err(e) => {
                return PropertyCheck {
                    passed: false,
                    trials: trial + 1,
                    max_residual: f64::INFINITY,
                    counterexample: Some(format!("evaluation failed: {e}")),
                }
            }
        }
    }
    PropertyCheck {
        passed: true,
        trials,
        max_residual,
        counterexample: None,
    }
}
