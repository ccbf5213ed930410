//! Acceptance suite: one PASS/FAIL line per criterion, at the stated
//! tolerances, followed by detail lines for each sub-measurement.
//!
//! Runs as a plain binary (`harness = false`) so the report always reaches
//! stdout. Red criteria are reported, not hidden; set
//! `SPDGEOM_ACCEPTANCE_STRICT=1` to turn any FAIL into a nonzero exit.

use std::f64::consts::E;
use std::process::{Command, ExitCode};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use spdgeom::deformation::{
    is_diag_stable_check, is_spectral_check, make_adjugate, registered_deformations, AdjugateDeformation,
    CongruenceDeformation, Deformation, LogLinearDeformation, PowerDeformation, SortedSpectralDeformation,
    UnivariateDeformation,
};
use spdgeom::metric::{log_euclidean_eval, power_affine_eval, registered_metrics};
use spdgeom::sampling::{random_gl, random_orthogonal, random_spd, random_spd_with_log_spectrum, random_sym};
use spdgeom::spd::{gram_fun, spd_pow, sym_fun};
use spdgeom::stats::{frechet_mean, tangent_pca};
use spdgeom::{MetricSpec, Result, SpdDataset, SpdMatrix, SymMatrix};

const DIMS: [usize; 3] = [2, 3, 5];
const FLOOR: f64 = 1e-12;

fn rel(a: &SymMatrix, b: &SymMatrix) -> f64 {
    (a - b).norm() / b.norm().max(FLOOR)
}

fn rel_scalar(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(FLOOR)
}

/// Worst residual of one measured quantity, compared against `tol`.
struct Measure {
    name: String,
    tol: f64,
    trials: usize,
    max: f64,
    worst: Option<String>,
    error: Option<String>,
}

impl Measure {
    fn new(name: impl Into<String>, tol: f64) -> Self {
        Self {
            name: name.into(),
            tol,
            trials: 0,
            max: 0.0,
            worst: None,
            error: None,
        }
    }

    fn add(&mut self, label: &str, r: Result<f64>) {
        self.trials += 1;
        let value = match r {
            Ok(v) if v.is_nan() => f64::INFINITY,
            Ok(v) => v,
            Err(e) => {
                if self.error.is_none() {
                    self.error = Some(format!("{label}: {e}"));
                }
                f64::INFINITY
            }
        };
        if value > self.max || self.worst.is_none() {
            self.max = self.max.max(value);
            self.worst = Some(label.to_string());
        }
    }

    fn passed(&self) -> bool {
        self.trials > 0 && self.max <= self.tol
    }

    fn render(&self) -> String {
        let mut s = format!(
            "    {}  trials={}  max={:.3e}  tol={:.1e}  {}",
            self.name,
            self.trials,
            self.max,
            self.tol,
            if self.passed() { "ok" } else { "over" }
        );
        match (&self.error, &self.worst) {
            (Some(e), _) => s.push_str(&format!("  ({e})")),
            (None, Some(w)) if self.max > 0.0 => s.push_str(&format!("  (worst: {w})")),
            _ => {}
        }
        s
    }
}

struct Criterion {
    id: usize,
    title: &'static str,
    measures: Vec<Measure>,
    notes: Vec<String>,
    /// Overrides the measure-based verdict when a criterion is not a residual bound.
    verdict: Option<bool>,
}

impl Criterion {
    fn new(id: usize, title: &'static str) -> Self {
        Self {
            id,
            title,
            measures: Vec::new(),
            notes: Vec::new(),
            verdict: None,
        }
    }

    fn measure(&mut self, name: &str, tol: f64) -> &mut Measure {
        if let Some(i) = self.measures.iter().position(|m| m.name == name) {
            return &mut self.measures[i];
        }
        self.measures.push(Measure::new(name, tol));
        self.measures.last_mut().unwrap()
    }

    fn passed(&self) -> bool {
        self.verdict.unwrap_or(true) && self.measures.iter().all(Measure::passed)
    }

    fn render(&self) -> String {
        let mut out = format!(
            "criterion {:>2}  {:<44} {}\n",
            self.id,
            self.title,
            if self.passed() { "PASS" } else { "FAIL" }
        );
        for m in &self.measures {
            out.push_str(&m.render());
            out.push('\n');
        }
        for n in &self.notes {
            out.push_str(&format!("    {n}\n"));
        }
        out
    }
}

fn rng(criterion: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(20_240_601);
    r.set_stream(criterion);
    r
}

fn params(n: usize, k: usize) -> (f64, f64) {
    [(1.0, 0.0), (1.0, 1.0), (1.0, -1.0 / (2.0 * n as f64))][k % 3]
}

fn invariance() -> Criterion {
    let mut c = Criterion::new(1, "affine invariance of distances");
    let mut rng = rng(1);
    for k in 0..100 {
        let n = DIMS[k % 3];
        let (alpha, beta) = params(n, k);
        for m in registered_metrics(n) {
            let m = m.with_params(alpha, beta);
            let s = random_spd(n, &mut rng);
            let l = random_spd(n, &mut rng);
            let a = random_gl(n, &mut rng);
            let r = (|| {
                let d0 = m.distance(&s, &l)?;
                let d1 = m.distance(&m.group_action(&a, &s)?, &m.group_action(&a, &l)?)?;
                Ok(rel_scalar(d1, d0))
            })();
            c.measure("relative distance change", 1e-8).add(m.label(), r);
        }
    }
    c
}

fn square_isometry() -> Criterion {
    let mut c = Criterion::new(2, "square map is an isometry; PCA equivalence");
    let mut rng = rng(2);
    for k in 0..100 {
        let n = DIMS[k % 3];
        let (alpha, beta) = params(n, k);
        let s = random_spd(n, &mut rng);
        let l = random_spd(n, &mut rng);
        let r = (|| {
            let lhs = 2.0 * MetricSpec::polar().with_params(alpha, beta).distance(&s, &l)?;
            let rhs = MetricSpec::affine()
                .with_params(alpha, beta)
                .distance(&spd_pow(&s, 2.0)?, &spd_pow(&l, 2.0)?)?;
            Ok(rel_scalar(lhs, rhs))
        })();
        c.measure("2 d_polar(S, L) vs d_affine(S^2, L^2)", 1e-8).add(&format!("n={n}"), r);
    }
    for k in 0..12 {
        let n = DIMS[k % 3];
        let points: Vec<SpdMatrix> = (0..8).map(|_| random_spd(n, &mut rng)).collect();
        let r = (|| {
            let data = SpdDataset::new(points.clone())?;
            let polar = tangent_pca(&MetricSpec::polar(), &data, 1e-10, 50)?;
            let squares = data.map(|p| spd_pow(p, 2.0))?;
            let affine = tangent_pca(&MetricSpec::affine(), &squares, 1e-10, 50)?;
            let top = affine.variances[0].max(FLOOR);
            Ok(polar
                .variances
                .iter()
                .zip(&affine.variances)
                .map(|(p, a)| (4.0 * p - a).abs() / top)
                .fold(0.0, f64::max))
        })();
        c.measure("4 var_polar vs var_affine(squares)", 1e-7).add(&format!("n={n}"), r);
    }
    c
}

/// Printed affine symmetry `Σ Λ⁻¹ Σ`.
fn affine_formula(s: &SpdMatrix, l: &SpdMatrix) -> Result<SpdMatrix> {
    let linv = l.matrix().clone().lu().try_inverse().expect("SPD is invertible");
    SpdMatrix::new(s.matrix() * linv * s.matrix())
}

/// Printed polar symmetry `(Σ² Λ⁻² Σ²)^{1/2}`, evaluated as `(B Bᵀ)^{1/2}`
/// with `B = Σ² Λ⁻¹` so that `Λ⁻²` is never formed.
fn polar_formula(s: &SpdMatrix, l: &SpdMatrix) -> Result<SpdMatrix> {
    let linv = l.matrix().clone().lu().try_inverse().expect("SPD is invertible");
    let b = s.matrix() * s.matrix() * linv;
    SpdMatrix::from_sym(gram_fun(&b, |x| x)?)
}

fn symmetries() -> Criterion {
    type Sym = Box<dyn Fn(&SpdMatrix, &SpdMatrix) -> Result<SpdMatrix>>;
    let mut c = Criterion::new(3, "geodesic symmetries");
    let mut rng = rng(3);
    for n in DIMS {
        let mut forms: Vec<(String, Sym)> = vec![
            ("affine formula".into(), Box::new(affine_formula)),
            ("polar formula".into(), Box::new(polar_formula)),
        ];
        for m in registered_metrics(n) {
            let label = format!("pullback {}", m.label());
            forms.push((label, Box::new(move |s, l| m.symmetry(s, l))));
        }
        for (label, sym) in &forms {
            for _ in 0..12 {
                let s = random_spd(n, &mut rng);
                let l = random_spd(n, &mut rng);
                let x = random_spd(n, &mut rng);
                let v = random_sym(n, &mut rng);
                let metric = if label.starts_with("polar") { MetricSpec::polar() } else { MetricSpec::affine() };
                let metric = match label.strip_prefix("pullback ") {
                    Some(id) => registered_metrics(n).into_iter().find(|m| m.label() == id).unwrap(),
                    None => metric,
                };
                c.measure("fixes its center", 1e-8)
                    .add(label, sym(&s, &s).map(|y| rel(y.as_sym(), s.as_sym())));
                c.measure("involution", 1e-8)
                    .add(label, sym(&s, &l).and_then(|y| sym(&s, &y)).map(|y| rel(y.as_sym(), l.as_sym())));
                let iso = (|| {
                    let d0 = metric.distance(&l, &x)?;
                    let d1 = metric.distance(&sym(&s, &l)?, &sym(&s, &x)?)?;
                    Ok(rel_scalar(d1, d0))
                })();
                c.measure("isometry", 1e-8).add(label, iso);
                // nested symmetries multiply condition numbers; keep spectra in [1/e, e]
                let (cs, cl, cx) = (
                    random_spd_with_log_spectrum(n, 1.0, &mut rng),
                    random_spd_with_log_spectrum(n, 1.0, &mut rng),
                    random_spd_with_log_spectrum(n, 1.0, &mut rng),
                );
                let law = (|| {
                    let lhs = sym(&cs, &sym(&cl, &sym(&cs, &cx)?)?)?;
                    let rhs = sym(&sym(&cs, &cl)?, &cx)?;
                    Ok(rel(lhs.as_sym(), rhs.as_sym()))
                })();
                c.measure("composition law", 1e-7).add(label, law);
                let tangent = (|| {
                    let h = 1e-5 * s.norm() / v.norm();
                    let plus = sym(&s, &SpdMatrix::from_sym(s.as_sym() + &(&v * h))?)?;
                    let minus = sym(&s, &SpdMatrix::from_sym(s.as_sym() - &(&v * h))?)?;
                    let fd = &(plus.as_sym() - minus.as_sym()) * (0.5 / h);
                    Ok((&fd + &v).norm() / v.norm())
                })();
                c.measure("differential is -identity (FD)", 1e-5).add(label, tangent);
            }
        }
    }
    for _ in 0..30 {
        let n = DIMS[rng.random_range(0..3)];
        let s = random_spd(n, &mut rng);
        let l = random_spd(n, &mut rng);
        c.measure("affine metric symmetry = printed formula", 1e-10).add(
            "affine",
            (|| Ok(rel(MetricSpec::affine().symmetry(&s, &l)?.as_sym(), affine_formula(&s, &l)?.as_sym())))(),
        );
        c.measure("polar metric symmetry = printed formula", 1e-9).add(
            "polar",
            (|| Ok(rel(MetricSpec::polar().symmetry(&s, &l)?.as_sym(), polar_formula(&s, &l)?.as_sym())))(),
        );
    }
    c
}

fn log_euclidean_limit() -> Criterion {
    let mut c = Criterion::new(4, "power metrics tend linearly to log-Euclidean");
    let mut rng = rng(4);
    let thetas = [1e-1, 1e-2, 1e-3];
    let (mut lo, mut hi) = (f64::INFINITY, 0.0_f64);
    let mut in_window = true;
    let mut absolute = Measure::new("gap at 1e-3 minus (1e-2 |g_LE| + 1e-9)", 0.0);
    for k in 0..50 {
        let n = DIMS[k % 3];
        let s = random_spd(n, &mut rng);
        let v = random_sym(n, &mut rng);
        let w = random_sym(n, &mut rng);
        let r = (|| {
            let le = log_euclidean_eval(1.0, 0.0, &s, &v, &w)?;
            let gaps = thetas
                .iter()
                .map(|&t| Ok((power_affine_eval(t, 1.0, 0.0, &s, &v, &w)? - le).abs()))
                .collect::<Result<Vec<f64>>>()?;
            Ok((le, gaps))
        })();
        match r {
            Ok((le, gaps)) => {
                for pair in gaps.windows(2) {
                    let ratio = pair[0] / pair[1];
                    lo = lo.min(ratio);
                    hi = hi.max(ratio);
                    in_window &= (5.0..=20.0).contains(&ratio);
                }
                absolute.add(&format!("n={n}"), Ok((gaps[2] - (1e-2 * le.abs() + 1e-9)).max(0.0)));
            }
            Err(e) => {
                absolute.add(&format!("n={n}"), Err(e));
                in_window = false;
            }
        }
    }
    c.notes.push(format!(
        "decade ratios over 50 samples: min {lo:.3e}, max {hi:.3e} (required in [5, 20])"
    ));
    c.verdict = Some(in_window);
    c.measures.push(absolute);
    c
}

fn closed_forms() -> Criterion {
    let mut c = Criterion::new(5, "closed forms for every registered deformation");
    let mut rng = rng(5);
    for n in DIMS {
        for f in registered_deformations(n) {
            let m = MetricSpec::deformed(f.clone());
            let label = f.name();
            for _ in 0..15 {
                let s = random_spd(n, &mut rng);
                let l = random_spd(n, &mut rng);
                let t: f64 = rng.random_range(0.0..1.0);
                let raw = random_sym(n, &mut rng);
                let length: f64 = rng.random_range(0.1..1.0);
                let v = match m.norm(&s, &raw) {
                    Ok(len) if len > 0.0 => &raw * (length / len),
                    _ => raw,
                };
                c.measure("exp(log L) = L", 1e-8)
                    .add(&label, m.log(&s, &l).and_then(|u| m.exp(&s, &u)).map(|x| rel(x.as_sym(), l.as_sym())));
                c.measure("log(exp v) = v", 1e-8)
                    .add(&label, m.exp(&s, &v).and_then(|x| m.log(&s, &x)).map(|u| rel(&u, &v)));
                let pullback = (|| {
                    let d1 = MetricSpec::affine().distance(&f.apply(&s)?, &f.apply(&l)?)?;
                    Ok(rel_scalar(m.distance(&s, &l)?, d1))
                })();
                c.measure("d_f(S, L) = d_1(f(S), f(L))", 1e-9).add(&label, pullback);
                let between = (|| {
                    let u = m.log(&s, &l)?;
                    let full = m.distance(&s, &m.geodesic(&s, &u, 1.0)?)?;
                    let part = m.distance(&s, &m.geodesic(&s, &u, t)?)?;
                    Ok((part - t * full).abs() / full.max(FLOOR))
                })();
                c.measure("d(S, g(t)) = t d(S, g(1))", 1e-8).add(&label, between);
            }
        }
    }
    c
}

fn loglinear_identification() -> Criterion {
    let mut c = Criterion::new(6, "log-linear metrics are power-affine");
    let mut rng = rng(6);
    for k in 0..100 {
        let n = DIMS[k % 3];
        let nf = n as f64;
        let s = random_spd(n, &mut rng);
        let v = random_sym(n, &mut rng);
        let w = random_sym(n, &mut rng);
        for (lambda, mu) in [(1.0, 2.0), (3.0, -1.0), (nf - 1.0, -1.0)] {
            let r = (|| {
                let m = MetricSpec::deformed(Arc::new(LogLinearDeformation::new(lambda, mu)?));
                let got = m.metric_eval(&s, &v, &w)?;
                let beta = (lambda * lambda - mu * mu) / (nf * mu * mu);
                let expected = mu * mu * power_affine_eval(mu, 1.0, beta, &s, &v, &w)?;
                let scale = (m.metric_eval(&s, &v, &v)? * m.metric_eval(&s, &w, &w)?).sqrt();
                Ok((got - expected).abs() / scale)
            })();
            let name = if lambda == nf - 1.0 && mu == -1.0 {
                "g^f(n-1,-1) = g^theta=-1 (beta = ((n-1)^2-1)/n)".to_string()
            } else {
                format!("g^f({lambda},{mu}) = mu^2 g^theta=mu")
            };
            c.measure(&name, 1e-8).add(&format!("n={n}"), r);
        }
        let adj = (|| {
            let direct = s.matrix().clone().lu().try_inverse().expect("SPD") * s.matrix().determinant();
            let via = make_adjugate(n)?.apply(&s)?;
            let named = AdjugateDeformation.apply(&s)?;
            Ok(rel(via.as_sym(), &SymMatrix::new(direct)?).max(rel(named.as_sym(), via.as_sym())))
        })();
        c.measure("adj = f(n-1,-1) = det(S) S^-1", 1e-9).add(&format!("n={n}"), adj);
        let metric = (|| {
            let a = MetricSpec::deformed(Arc::new(AdjugateDeformation)).metric_eval(&s, &v, &w)?;
            let b = MetricSpec::deformed(Arc::new(make_adjugate(n)?)).metric_eval(&s, &v, &w)?;
            Ok(rel_scalar(a, b))
        })();
        c.measure("g^adj = g^f(n-1,-1)", 1e-8).add(&format!("n={n}"), metric);
    }
    c
}

fn subfamilies() -> Criterion {
    let mut c = Criterion::new(7, "subfamily membership");
    let mut rng = rng(7);
    let mut ok = true;
    let spectral: Vec<Box<dyn Deformation>> = vec![
        Box::new(PowerDeformation::new(2.0).unwrap()),
        Box::new(PowerDeformation::new(-1.0).unwrap()),
        Box::new(AdjugateDeformation),
        Box::new(LogLinearDeformation::new(2.0, 0.5).unwrap()),
        Box::new(SortedSpectralDeformation::anisotropy(1.0).unwrap()),
    ];
    let diag_stable: Vec<Box<dyn Deformation>> = vec![
        Box::new(PowerDeformation::new(0.5).unwrap()),
        Box::new(AdjugateDeformation),
        Box::new(SortedSpectralDeformation::anisotropy(1.0).unwrap()),
        Box::new(UnivariateDeformation::quadratic(2.0, -1.0).unwrap()),
        Box::new(UnivariateDeformation::xsqrt()),
        Box::new(UnivariateDeformation::sqrt1pm1()),
    ];
    let members = spectral.iter().map(|f| ("spectral", f)).chain(diag_stable.iter().map(|f| ("diag-stable", f)));
    for (what, f) in members {
        let dims = if f.name().starts_with("aniso") { vec![3] } else { DIMS.to_vec() };
        for n in dims {
            let out = if what == "spectral" {
                is_spectral_check(f.as_ref(), n, 40, &mut rng)
            } else {
                is_diag_stable_check(f.as_ref(), n, 40, &mut rng)
            };
            if !out.passed {
                ok = false;
                c.notes.push(format!("{what} {} n={n} rejected: {:?}", f.name(), out.counterexample));
            }
        }
    }
    let mut a = DMatrix::identity(3, 3);
    a[(0, 1)] = 0.7;
    let shear = CongruenceDeformation::new(a).unwrap();
    let out = is_spectral_check(&shear, 3, 40, &mut rng);
    match (&out.passed, &out.counterexample) {
        (false, Some(ce)) => c.notes.push(format!("shear congruence rejected after {} trial(s): {ce}", out.trials)),
        _ => {
            ok = false;
            c.notes.push("shear congruence was not rejected".into());
        }
    }
    c.notes.insert(
        0,
        format!("{} spectral and {} diagonally-stable memberships confirmed", spectral.len(), diag_stable.len()),
    );
    c.verdict = Some(ok);
    c
}

fn kernels() -> Criterion {
    let mut c = Criterion::new(8, "Daleckii-Krein differentials vs central FD");
    let mut rng = rng(8);
    type Scalar = (&'static str, fn(f64) -> f64, fn(f64) -> f64);
    let functions: [Scalar; 4] = [
        ("exp", f64::exp, f64::exp),
        ("log", f64::ln, f64::recip),
        ("sqrt", f64::sqrt, |x| 0.5 / x.sqrt()),
        ("x^0.7", |x| x.powf(0.7), |x| 0.7 * x.powf(-0.3)),
    ];
    for k in 0..200 {
        let n = [2, 3, 5, 10][k % 4];
        let near = k % 5 == 0;
        let s = if near {
            let u = random_orthogonal(n, &mut rng);
            let mut d: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0_f64..1.0).exp()).collect();
            d[1] = d[0] + 1e-9;
            SpdMatrix::from_diagonal(&d).unwrap().congruence(&u).unwrap()
        } else {
            random_spd(n, &mut rng)
        };
        let v = random_sym(n, &mut rng);
        let (name, f, fp) = functions[k % 4];
        let r = (|| {
            let dk = s.eigen()?.dk_apply(f, fp, &v)?;
            let h = 1e-5 * s.norm() / v.norm();
            let plus = sym_fun(&(s.as_sym() + &(&v * h)), f)?;
            let minus = sym_fun(&(s.as_sym() - &(&v * h)), f)?;
            let fd = &(&plus - &minus) * (0.5 / h);
            Ok(rel(&dk, &fd))
        })();
        let measure = if near { "relative error, eigenvalue gap 1e-9" } else { "relative error, generic spectra" };
        c.measure(measure, 1e-6).add(name, r);
    }
    c
}

fn statistics() -> Criterion {
    let mut c = Criterion::new(9, "Karcher means, midpoints, equivariance");
    let mut rng = rng(9);
    for n in DIMS {
        for m in registered_metrics(n) {
            let label = m.label().to_string();
            for _ in 0..4 {
                let points: Vec<SpdMatrix> = (0..8).map(|_| random_spd_with_log_spectrum(n, 2.0, &mut rng)).collect();
                let a = random_gl(n, &mut rng);
                let data = SpdDataset::new(points.clone()).unwrap();
                let mean = frechet_mean(&m, &data, 1e-10, 50);
                let converged = match &mean {
                    Ok(o) => Ok(if o.grad_norm < 1e-10 && o.iterations <= 50 { 0.0 } else { o.grad_norm }),
                    Err(e) => Err(spdgeom::SpdError::InvalidParameter(e.to_string())),
                };
                c.measure("Karcher flow converges (0 = converged)", 0.0).add(&label, converged);
                let midpoint = (|| {
                    let pair = SpdDataset::new(points[..2].to_vec())?;
                    let got = frechet_mean(&m, &pair, 1e-10, 50)?.mean;
                    let v = m.log(&points[0], &points[1])?;
                    Ok(rel(got.as_sym(), m.geodesic(&points[0], &v, 0.5)?.as_sym()))
                })();
                c.measure("two-point mean = geodesic midpoint", 1e-9).add(&label, midpoint);
                let equivariance = (|| {
                    let base = mean.as_ref().map_err(|e| spdgeom::SpdError::InvalidParameter(e.to_string()))?;
                    let moved = data.map(|p| m.group_action(&a, p))?;
                    let got = frechet_mean(&m, &moved, 1e-10, 50)?.mean;
                    Ok(rel(got.as_sym(), m.group_action(&a, &base.mean)?.as_sym()))
                })();
                c.measure("mean equivariance", 1e-7).add(&label, equivariance);
            }
        }
    }
    c
}

fn cli() -> Criterion {
    let mut c = Criterion::new(10, "CLI check exit code, determinism, worked distances");
    let bin = env!("CARGO_BIN_EXE_spdgeom");
    let check = || Command::new(bin).args(["check", "--seed", "42", "--trials", "100"]).output().unwrap();
    let (first, second) = (check(), check());
    let exit = first.status.code().unwrap_or(-1);
    let failing: Vec<String> = String::from_utf8_lossy(&first.stdout)
        .lines()
        .filter(|l| l.contains("  FAIL"))
        .map(|l| l.chars().take(160).collect())
        .collect();
    let identical = first.stdout == second.stdout && first.status.code() == second.status.code();
    c.notes.push(format!("check --seed 42 --trials 100 exit code {exit} (required 0)"));
    for line in &failing {
        c.notes.push(format!("  {line}"));
    }
    c.notes.push(format!("two consecutive runs byte-identical: {identical}"));

    let dir = tempfile::TempDir::new().unwrap();
    let path = dir.path().join("worked.json");
    std::fs::write(
        &path,
        format!(r#"{{"n": 2, "matrices": [[[1, 0], [0, 1]], [[{}, 0], [0, 1]], [[{E}, 0], [0, 1]]]}}"#, E * E),
    )
    .unwrap();
    let file = path.to_str().unwrap();
    let dist = |metric: &str, j: &str| {
        let out = Command::new(bin).args(["--metric", metric, "dist", file, "0", j]).output().unwrap();
        String::from_utf8_lossy(&out.stdout).trim().to_string()
    };
    let (affine, polar) = (dist("affine", "1"), dist("polar", "2"));
    let worked = affine == "2.00000000000" && polar == "1.00000000000";
    c.notes.push(format!("worked distances: affine {affine}, polar {polar} (12 significant digits)"));
    c.verdict = Some(exit == 0 && identical && worked);
    c
}

fn main() -> ExitCode {
    let criteria: [fn() -> Criterion; 10] = [
        invariance,
        square_isometry,
        symmetries,
        log_euclidean_limit,
        closed_forms,
        loglinear_identification,
        subfamilies,
        kernels,
        statistics,
        cli,
    ];
    let start = std::time::Instant::now();
    let mut failed = 0;
    for run in criteria {
        let c = run();
        if !c.passed() {
            failed += 1;
        }
        print!("{}", c.render());
    }
    println!(
        "acceptance: {}/{} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    let strict = std::env::var("SPDGEOM_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if strict && failed > 0 {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
