//! Symmetric and SPD matrix types, the sorted symmetric eigendecomposition,
//! spectral matrix functions and their Daleckii–Kreĭn differentials.
//!
//! Every matrix function in the crate goes through [`EigenDecomposition`]:
//! for `S = U diag(d) Uᵀ`, `f(S) = U diag(f(d)) Uᵀ`, and the differential of
//! `f` at `S` in direction `V` is `U (K ⊙ Uᵀ V U) Uᵀ` where `K` holds the
//! first divided differences of `f` on the spectrum.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SpdError};

/// Relative positive-definiteness threshold, scaled by `max(max |entry|, 1)`.
pub const PD_TOL: f64 = 1e-12;

/// Relative eigenvalue gap below which a divided difference is replaced by
/// the derivative at the midpoint.
pub const DD_TOL: f64 = 1e-8;

const EIGEN_MAX_ITER: usize = 10_000;

/// Real symmetric `n×n` matrix. Symmetry is enforced on construction.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    m: DMatrix<f64>,
}

impl SymMatrix {
    /// Symmetrizes `(m + mᵀ)/2`. Rejects non-square or non-finite input.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(SpdError::NotSquare {
                rows: m.nrows(),
                cols: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(SpdError::InvalidParameter("dimension must be at least 1".into()));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(SpdError::NonFinite);
        }
        Ok(Self::symmetrize(m))
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(SpdError::DimensionMismatch {
                expected: n * n,
                found: entries.len(),
            });
        }
        Self::new(DMatrix::from_row_slice(n, n, entries))
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: DMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: DMatrix::identity(n, n),
        }
    }

    /// Internal constructor for results of exact-symmetric algebra. The
    /// average with the transpose removes accumulated rounding asymmetry.
    pub(crate) fn symmetrize(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self { m: (m + t) * 0.5 }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.m.norm()
    }

    /// `tr(self · other)`, the Frobenius inner product on symmetric matrices.
    pub fn dot(&self, other: &SymMatrix) -> f64 {
        self.m.dot(&other.m)
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
    }

    /// `A · self · Aᵀ`.
    pub fn congruence(&self, a: &DMatrix<f64>) -> SymMatrix {
        Self::symmetrize(a * &self.m * a.transpose())
    }

    /// Row-major entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.m[(i, j)])
            .collect()
    }

    pub(crate) fn check_dim(&self, n: usize) -> Result<()> {
        if self.dim() != n {
            return Err(SpdError::DimensionMismatch {
                expected: n,
                found: self.dim(),
            });
        }
        Ok(())
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SymMatrix{:?}", self.to_row_major())
    }
}

impl Add<&SymMatrix> for &SymMatrix {
    type Output = SymMatrix;
    fn add(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            m: &self.m + &rhs.m,
        }
    }
}

impl Sub<&SymMatrix> for &SymMatrix {
    type Output = SymMatrix;
    fn sub(self, rhs: &SymMatrix) -> SymMatrix {
        SymMatrix {
            m: &self.m - &rhs.m,
        }
    }
}

impl Mul<f64> for &SymMatrix {
    type Output = SymMatrix;
    fn mul(self, rhs: f64) -> SymMatrix {
        SymMatrix { m: &self.m * rhs }
    }
}

impl Neg for &SymMatrix {
    type Output = SymMatrix;
    fn neg(self) -> SymMatrix {
        SymMatrix { m: -&self.m }
    }
}

/// Symmetric positive-definite matrix: a point of the manifold.
#[derive(Clone, PartialEq)]
pub struct SpdMatrix {
    inner: SymMatrix,
}

impl SpdMatrix {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::from_sym(SymMatrix::new(m)?)
    }

    pub fn from_row_slice(n: usize, entries: &[f64]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_row_slice(n, entries)?)
    }

    pub fn from_diagonal(d: &[f64]) -> Result<Self> {
        Self::from_sym(SymMatrix::from_diagonal(d)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            inner: SymMatrix::identity(n),
        }
    }

    /// Checks the smallest eigenvalue against `PD_TOL · max(max |entry|, 1)`.
    pub fn from_sym(s: SymMatrix) -> Result<Self> {
        let eig = sym_eigen(&s)?;
        let tolerance = PD_TOL * s.max_abs().max(1.0);
        let min_eigenvalue = eig.min_eigenvalue();
        if min_eigenvalue <= tolerance {
            return Err(SpdError::NotPositiveDefinite {
                min_eigenvalue,
                tolerance,
            });
        }
        Ok(Self { inner: s })
    }

    pub fn as_sym(&self) -> &SymMatrix {
        &self.inner
    }

    pub fn into_sym(self) -> SymMatrix {
        self.inner
    }

    pub fn eigen(&self) -> Result<EigenDecomposition> {
        sym_eigen(&self.inner)
    }

    pub fn det(&self) -> Result<f64> {
        Ok(self.eigen()?.d.iter().product())
    }

    pub fn log_det(&self) -> Result<f64> {
        Ok(self.eigen()?.d.iter().map(|x| x.ln()).sum())
    }

    pub fn congruence(&self, a: &DMatrix<f64>) -> Result<SpdMatrix> {
        SpdMatrix::from_sym(self.inner.congruence(a))
    }
}

impl std::ops::Deref for SpdMatrix {
    type Target = SymMatrix;
    fn deref(&self) -> &SymMatrix {
        &self.inner
    }
}

impl fmt::Debug for SpdMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SpdMatrix{:?}", self.inner.to_row_major())
    }
}

/// `S = U diag(d) Uᵀ` with `d` sorted in descending order.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    u: DMatrix<f64>,
    d: DVector<f64>,
}

impl EigenDecomposition {
    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn eigenvalues(&self) -> &[f64] {
        self.d.as_slice()
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.d[0]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.d[self.d.len() - 1]
    }

    /// `U diag(values) Uᵀ`.
    pub fn compose(&self, values: &[f64]) -> SymMatrix {
        let mut ud = self.u.clone();
        for (j, &v) in values.iter().enumerate() {
            ud.column_mut(j).scale_mut(v);
        }
        SymMatrix::symmetrize(ud * self.u.transpose())
    }

    /// Applies `f` eigenvalue-wise; fails if `f` is not finite on the spectrum.
    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<SymMatrix> {
        let values = eval_on(self.d.iter().copied(), &f)?;
        Ok(self.compose(&values))
    }

    /// `Uᵀ V U`.
    pub fn to_eigenbasis(&self, v: &SymMatrix) -> DMatrix<f64> {
        self.u.transpose() * v.matrix() * &self.u
    }

    /// `U M Uᵀ`.
    pub fn from_eigenbasis(&self, m: DMatrix<f64>) -> SymMatrix {
        SymMatrix::symmetrize(&self.u * m * self.u.transpose())
    }

    /// First divided differences of `f` on the spectrum, falling back to
    /// `f′` at the midpoint when two eigenvalues are within `DD_TOL`.
    pub fn divided_differences<F, G>(&self, f: F, f_prime: G) -> Result<DMatrix<f64>>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        let n = self.d.len();
        let fd = eval_on(self.d.iter().copied(), &f)?;
        let scale = self.d.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let (di, dj) = (self.d[i], self.d[j]);
                let value = if (di - dj).abs() > DD_TOL * scale {
                    (fd[i] - fd[j]) / (di - dj)
                } else {
                    let mid = 0.5 * (di + dj);
                    let v = f_prime(mid);
                    if !v.is_finite() {
                        return Err(SpdError::Domain { value: mid });
                    }
                    v
                };
                k[(i, j)] = value;
                k[(j, i)] = value;
            }
        }
        Ok(k)
    }

    /// Daleckii–Kreĭn differential `U (K ⊙ Uᵀ V U) Uᵀ`.
    pub fn dk_apply<F, G>(&self, f: F, f_prime: G, v: &SymMatrix) -> Result<SymMatrix>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        v.check_dim(self.d.len())?;
        let k = self.divided_differences(f, f_prime)?;
        Ok(self.from_eigenbasis(k.component_mul(&self.to_eigenbasis(v))))
    }

    /// Inverts [`Self::dk_apply`] by entrywise division; requires every divided
    /// difference to be nonzero (strictly monotone `f`).
    pub fn dk_solve<F, G>(&self, f: F, f_prime: G, w: &SymMatrix) -> Result<SymMatrix>
    where
        F: Fn(f64) -> f64,
        G: Fn(f64) -> f64,
    {
        w.check_dim(self.d.len())?;
        let k = self.divided_differences(f, f_prime)?;
        if let Some(pos) = k.iter().position(|x| *x == 0.0) {
            let i = pos % k.nrows();
            return Err(SpdError::Domain { value: self.d[i] });
        }
        Ok(self.from_eigenbasis(self.to_eigenbasis(w).component_div(&k)))
    }
}

fn eval_on<I, F>(values: I, f: &F) -> Result<Vec<f64>>
where
    I: Iterator<Item = f64>,
    F: Fn(f64) -> f64,
{
    values
        .map(|x| {
            let y = f(x);
            if y.is_finite() {
                Ok(y)
            } else {
                Err(SpdError::Domain { value: x })
            }
        })
        .collect()
}

/// Sorted (descending) eigendecomposition of a symmetric matrix.
pub fn sym_eigen(m: &SymMatrix) -> Result<EigenDecomposition> {
    let eig = m
        .matrix()
        .clone()
        .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(SpdError::EigenFailure)?;
    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut u = DMatrix::zeros(n, n);
    let mut d = DVector::zeros(n);
    for (dst, &src) in order.iter().enumerate() {
        u.set_column(dst, &eig.eigenvectors.column(src));
        d[dst] = eig.eigenvalues[src];
    }
    Ok(EigenDecomposition { u, d })
}

/// `f(M)` for any symmetric `M`.
pub fn sym_fun<F: Fn(f64) -> f64>(m: &SymMatrix, f: F) -> Result<SymMatrix> {
    sym_eigen(m)?.map(f)
}

pub fn spd_fun<F: Fn(f64) -> f64>(s: &SpdMatrix, f: F) -> Result<SymMatrix> {
    sym_fun(s.as_sym(), f)
}

pub fn spd_log(s: &SpdMatrix) -> Result<SymMatrix> {
    spd_fun(s, f64::ln)
}

pub fn spd_exp(v: &SymMatrix) -> Result<SpdMatrix> {
    SpdMatrix::from_sym(sym_fun(v, f64::exp)?)
}

pub fn spd_sqrt(s: &SpdMatrix) -> Result<SpdMatrix> {
    SpdMatrix::from_sym(spd_fun(s, f64::sqrt)?)
}

pub fn spd_pow(s: &SpdMatrix, theta: f64) -> Result<SpdMatrix> {
    SpdMatrix::from_sym(spd_fun(s, |x| x.powf(theta))?)
}

pub fn spd_inverse(s: &SpdMatrix) -> Result<SpdMatrix> {
    SpdMatrix::from_sym(spd_fun(s, |x| 1.0 / x)?)
}

/// `U diag(g(s_i)) Uᵀ` for the SVD `B = U diag(s) Vᵀ` of an invertible `B`.
///
/// This is a spectral function of the Gram matrix `B Bᵀ`, whose eigenvalues
/// are `s_i²`, computed without forming `B Bᵀ`: small eigenvalues keep a
/// relative accuracy governed by the condition number of `B` rather than
/// its square.
pub fn gram_fun<F: Fn(f64) -> f64>(b: &DMatrix<f64>, g: F) -> Result<SymMatrix> {
    if !b.is_square() || b.is_empty() {
        return Err(SpdError::NotSquare {
            rows: b.nrows(),
            cols: b.ncols(),
        });
    }
    if b.iter().any(|x| !x.is_finite()) {
        return Err(SpdError::NonFinite);
    }
    let (u, singular) = jacobi_left_svd(b)?;
    let mut values = Vec::with_capacity(b.nrows());
    for &sv in singular.iter() {
        if !(sv > 0.0) {
            return Err(SpdError::Singular { det: 0.0 });
        }
        let y = g(sv);
        if !y.is_finite() {
            return Err(SpdError::Domain { value: sv * sv });
        }
        values.push(y);
    }
    let scaled = &u * DMatrix::from_diagonal(&DVector::from_vec(values));
    SymMatrix::new(scaled * u.transpose())
}

/// Left singular vectors and singular values of a square `B` by one-sided
/// Jacobi rotations on its columns.
fn jacobi_left_svd(b: &DMatrix<f64>) -> Result<(DMatrix<f64>, Vec<f64>)> {
    let n = b.ncols();
    let mut w = b.clone();
    let threshold = (n as f64).sqrt() * f64::EPSILON;
    for _ in 0..EIGEN_MAX_ITER {
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let alpha = w.column(p).norm_squared();
                let beta = w.column(q).norm_squared();
                let gamma = w.column(p).dot(&w.column(q));
                if gamma == 0.0 || gamma.abs() <= threshold * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..n {
                    let wp = w[(i, p)];
                    let wq = w[(i, q)];
                    w[(i, p)] = c * wp - s * wq;
                    w[(i, q)] = s * wp + c * wq;
                }
            }
        }
        if !rotated {
            let mut singular = Vec::with_capacity(n);
            for j in 0..n {
                let norm = w.column(j).norm();
                singular.push(norm);
                if norm > 0.0 {
                    w.column_mut(j).unscale_mut(norm);
                }
            }
            return Ok((w, singular));
        }
    }
    Err(SpdError::EigenFailure)
}

/// `log(B Bᵀ)` through [`gram_fun`].
pub fn gram_log(b: &DMatrix<f64>) -> Result<SymMatrix> {
    gram_fun(b, |s| 2.0 * s.ln())
}

/// Differential of the spectral function `f` at the symmetric point `s`,
/// applied to `v`.
pub fn dk_differential<F, G>(s: &SymMatrix, f: F, f_prime: G, v: &SymMatrix) -> Result<SymMatrix>
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    sym_eigen(s)?.dk_apply(f, f_prime, v)
}
