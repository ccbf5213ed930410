//! Random test inputs: symmetric, SPD, orthogonal and invertible matrices.

use nalgebra::DMatrix;
use rand::Rng;

use crate::spd::{spd_exp, SpdMatrix, SymMatrix};

/// Symmetric matrix with entries uniform in `[-1, 1]`.
pub fn random_sym<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SymMatrix {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let x = rng.random_range(-1.0..=1.0);
            m[(i, j)] = x;
            m[(j, i)] = x;
        }
    }
    SymMatrix::new(m).expect("finite entries")
}

/// `exp(S)` with `S` from [`random_sym`]: bounded condition number.
pub fn random_spd<R: Rng + ?Sized>(n: usize, rng: &mut R) -> SpdMatrix {
    spd_exp(&random_sym(n, rng)).expect("exp of a bounded symmetric matrix is SPD")
}

/// Orthogonal matrix from the QR factor of a uniform random matrix, with the
/// sign convention that makes the map from the random matrix unique.
pub fn random_orthogonal<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    loop {
        let a: DMatrix<f64> = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..=1.0));
        let qr = a.qr();
        let r = qr.r();
        if (0..n).any(|i| r[(i, i)].abs() < 1e-3) {
            continue;
        }
        let mut q = qr.q();
        for i in 0..n {
            if r[(i, i)] < 0.0 {
                q.column_mut(i).neg_mut();
            }
        }
        return q;
    }
}

/// `U diag(±e^{u_i}) Wᵀ` with `u_i ∈ [-1, 1]`: invertible, condition number ≤ e².
/// Negative determinants are produced half the time.
pub fn random_gl<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let u = random_orthogonal(n, rng);
    let w = random_orthogonal(n, rng);
    let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0_f64..=1.0).exp()).collect();
    if rng.random_bool(0.5) {
        d[0] = -d[0];
    }
    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(d));
    u * diag * w.transpose()
}

/// SPD matrix with a random orthogonal eigenbasis and log-eigenvalues
/// uniform in `[-radius, radius]`.
pub fn random_spd_with_log_spectrum<R: Rng + ?Sized>(
    n: usize,
    radius: f64,
    rng: &mut R,
) -> SpdMatrix {
    let u = random_orthogonal(n, rng);
    let d: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-radius..=radius).exp())
        .collect();
    SpdMatrix::from_diagonal(&d)
        .and_then(|s| s.congruence(&u))
        .expect("bounded spectrum")
}

/// Diagonal SPD matrix with log-eigenvalues uniform in `[-radius, radius]`.
pub fn random_positive_diagonal<R: Rng + ?Sized>(n: usize, radius: f64, rng: &mut R) -> SpdMatrix {
    let d: Vec<f64> = (0..n)
        .map(|_| rng.random_range(-radius..=radius).exp())
        .collect();
    SpdMatrix::from_diagonal(&d).expect("positive diagonal")
}
