//! Loewner-order checks on finite matrices: form inequalities, fractional powers,
//! the generator-versus-position domination, operator monotonicity searches and
//! finite-scale boundedness curves.

use crate::error::{Error, Result};
use crate::lattice::{build_dilation_generator, BoxDomain, LatticeOperator};
use crate::polylog;
use crate::spectral::{dense_norm, eigendecompose, eigendecompose_matrix, min_eigenvalue};
use crate::weights::{bracket, iterated_log};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormInequalityReport {
    pub min_eigenvalue_of_difference: f64,
    pub violated: bool,
    pub tolerance: f64,
}

impl FormInequalityReport {
    fn new(min: f64, tol: f64) -> Self {
        FormInequalityReport { min_eigenvalue_of_difference: min, violated: min < -tol, tolerance: tol }
    }
}

/// Reports `min σ(Y − X)`, optionally compressed to the span of the columns of `subspace`.
pub fn form_report(x: &DMatrix<C64>, y: &DMatrix<C64>, subspace: Option<&DMatrix<C64>>, tol: f64) -> Result<FormInequalityReport> {
    if x.shape() != y.shape() {
        return Err(Error::DomainMismatch(format!("{:?} vs {:?}", x.shape(), y.shape())));
    }
    let diff = y - x;
    let diff = match subspace {
        Some(q) => q.adjoint() * diff * q,
        None => diff,
    };
    Ok(FormInequalityReport::new(min_eigenvalue(&diff), tol))
}

/// `X ≼ Y` as quadratic forms.
pub fn check_form_inequality(x: &LatticeOperator, y: &LatticeOperator, tol: f64) -> Result<FormInequalityReport> {
    if x.domain != y.domain {
        return Err(Error::DomainMismatch(format!("{:?} vs {:?}", x.domain, y.domain)));
    }
    form_report(&x.mat.to_dense(), &y.mat.to_dense(), None, tol)
}

/// Isometry onto the basis vectors listed in `idx`.
pub fn coordinate_subspace(n: usize, idx: &[usize]) -> DMatrix<C64> {
    let mut q = DMatrix::zeros(n, idx.len());
    for (j, &i) in idx.iter().enumerate() {
        q[(i, j)] = C64::new(1.0, 0.0);
    }
    q
}

/// `max(d³+d²+1, 4(d+1))`.
pub fn c_d(d: usize) -> f64 {
    let d = d as f64;
    (d * d * d + d * d + 1.0).max(4.0 * (d + 1.0))
}

/// `A²` as a form on vectors supported in the box: computed one site wider and compressed,
/// so no hop of `A` is lost at the boundary.
pub fn generator_square(domain: &BoxDomain) -> Result<DMatrix<C64>> {
    let big = BoxDomain::new(domain.dim(), domain.radius() + 1)?;
    let a = build_dilation_generator(&big).mat;
    let a2 = a.matmul(&a).to_dense();
    let emb = domain.embedding_into(&big)?;
    Ok(DMatrix::from_fn(emb.len(), emb.len(), |i, j| a2[(emb[i], emb[j])]))
}

/// `N² + 1 = Σ N_i² + 1` as a diagonal.
pub fn position_bracket_sq(domain: &BoxDomain) -> Vec<f64> {
    domain.sites().map(|s| 1.0 + s.iter().map(|&x| (x * x) as f64).sum::<f64>()).collect()
}

/// `(A²+1)^α ≼ c_d^α (N²+1)^α`, compressed to sites at depth ≥ 2.
pub fn verify_a_dominated_by_n(d: usize, radius: usize, alpha: f64) -> Result<FormInequalityReport> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::Domain(format!("α must lie in [0,1], got {alpha}")));
    }
    let domain = BoxDomain::new(d, radius)?;
    let n = domain.size();
    let mut lhs = generator_square(&domain)?;
    for i in 0..n {
        lhs[(i, i)] += 1.0;
    }
    let lhs = eigendecompose_matrix(&lhs)?.apply_function(|x| x.max(0.0).powf(alpha))?;
    let c = c_d(d).powf(alpha);
    let rhs = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        n,
        position_bracket_sq(&domain).into_iter().map(|v| C64::new(c * v.powf(alpha), 0.0)),
    ));
    let q = coordinate_subspace(n, &domain.interior(2));
    form_report(&lhs, &rhs, Some(&q), 1e-10)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeinzReport {
    pub worst_min_eigenvalue: f64,
    pub worst_alpha: f64,
    pub violated: bool,
}

fn fractional_power(m: &DMatrix<C64>, alpha: f64) -> Result<DMatrix<C64>> {
    eigendecompose_matrix(m)?.apply_function(|x| x.max(0.0).powf(alpha))
}

/// `0 ≼ X ≼ Y ⇒ X^α ≼ Y^α` on a grid of exponents.
pub fn verify_heinz(x: &DMatrix<C64>, y: &DMatrix<C64>, alphas: &[f64], tol: f64) -> Result<HeinzReport> {
    let base = form_report(x, y, None, tol)?;
    let pos = min_eigenvalue(x);
    if base.violated || pos < -tol {
        return Err(Error::Precondition(format!(
            "need 0 ≼ X ≼ Y: min σ(X) = {pos:e}, min σ(Y−X) = {:e}",
            base.min_eigenvalue_of_difference
        )));
    }
    let mut worst = HeinzReport { worst_min_eigenvalue: f64::INFINITY, worst_alpha: f64::NAN, violated: false };
    for &a in alphas {
        if !(0.0..=1.0).contains(&a) {
            return Err(Error::Domain(format!("exponent {a} outside [0,1]")));
        }
        let r = form_report(&fractional_power(x, a)?, &fractional_power(y, a)?, None, tol)?;
        if r.min_eigenvalue_of_difference < worst.worst_min_eigenvalue {
            worst = HeinzReport { worst_min_eigenvalue: r.min_eigenvalue_of_difference, worst_alpha: a, violated: r.violated };
        }
    }
    Ok(worst)
}

/// Scalar functions offered to the monotonicity search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    Identity,
    Sqrt,
    Log1p,
    /// `Φ_n(x)`.
    Polylog { n: u32 },
    /// `Φ_n(log_k(x))`.
    PolylogOfLog { n: u32, k: usize },
    /// `log^k(1+x)`.
    LogPower { k: u32 },
}

impl ScalarFn {
    pub fn id(&self) -> String {
        match self {
            ScalarFn::Identity => "identity".into(),
            ScalarFn::Sqrt => "sqrt".into(),
            ScalarFn::Log1p => "log1p".into(),
            ScalarFn::Polylog { n } => format!("phi{n}"),
            ScalarFn::PolylogOfLog { n, k } => format!("phi{n}_log{k}"),
            ScalarFn::LogPower { k } => format!("log1p^{k}"),
        }
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        Ok(match self {
            ScalarFn::Identity => x,
            ScalarFn::Sqrt => x.sqrt(),
            ScalarFn::Log1p => x.ln_1p(),
            ScalarFn::Polylog { n } => polylog::phi(*n, x)?,
            ScalarFn::PolylogOfLog { n, k } => polylog::phi(*n, iterated_log(*k, x))?,
            ScalarFn::LogPower { k } => x.ln_1p().powi(*k as i32),
        })
    }

    fn apply(&self, m: &DMatrix<C64>) -> Result<DMatrix<C64>> {
        if *self == ScalarFn::Identity {
            return Ok(m.clone());
        }
        let es = eigendecompose_matrix(m)?;
        let mut d = Vec::with_capacity(es.dim());
        for &l in &es.values {
            d.push(C64::new(self.eval(l)?, 0.0));
        }
        Ok(es.from_diagonal(&d))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub f_id: String,
    pub size: usize,
    /// Row-major `(re, im)` entries.
    pub a: Vec<(f64, f64)>,
    pub b: Vec<(f64, f64)>,
    pub violation: f64,
}

impl Counterexample {
    fn pack(m: &DMatrix<C64>) -> Vec<(f64, f64)> {
        let n = m.nrows();
        (0..n * n).map(|k| (m[(k / n, k % n)].re, m[(k / n, k % n)].im)).collect()
    }

    fn unpack(n: usize, v: &[(f64, f64)]) -> Result<DMatrix<C64>> {
        if v.len() != n * n {
            return Err(Error::Config(format!("expected {} entries, found {}", n * n, v.len())));
        }
        Ok(DMatrix::from_fn(n, n, |i, j| C64::new(v[i * n + j].0, v[i * n + j].1)))
    }

    pub fn matrices(&self) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
        Ok((Self::unpack(self.size, &self.a)?, Self::unpack(self.size, &self.b)?))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub f_id: String,
    pub trials_run: usize,
    pub worst_min_eigenvalue: f64,
    pub violated: bool,
    pub counterexample: Option<Counterexample>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteParams {
    pub a: f64,
    pub b: f64,
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    /// Stop at the first batch containing a violation.
    pub stop_on_violation: bool,
}

/// Deterministic per-trial seed, independent of scheduling.
pub fn trial_seed(seed: u64, size: usize, trial: usize) -> u64 {
    let mut z = seed ^ ((size as u64) << 48) ^ (trial as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<C64> {
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    g.qr().q()
}

/// Hermitian `A` with spectrum in `(a, b)` and `B = A + t·G*G` with `σ(B) ⊂ (a, b)`.
fn sample_pair(rng: &mut ChaCha8Rng, n: usize, a: f64, b: f64) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    // eigenvalues log-uniform between a bit above `a` and a random upper end
    let lo = a + 1e-3 * (1.0 + a.abs());
    let top = if b.is_finite() { b - 1e-3 * (1.0 + b.abs()) } else { lo + 10f64.powf(rng.random_range(0.0..3.0)) * (1.0 + lo.abs()) };
    let span = (top - lo).max(1e-12);
    let eig: Vec<f64> = (0..n).map(|_| lo + span * (rng.random::<f64>().powi(2))).collect();
    let u = random_unitary(rng, n);
    let d = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, eig.iter().map(|&v| C64::new(v, 0.0))));
    let am = &u * d * u.adjoint();
    let am = (&am + am.adjoint()).scale(0.5);
    let rank = rng.random_range(1..=n);
    let g = DMatrix::from_fn(rank, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    let pert = g.adjoint() * g;
    let pert = (&pert + pert.adjoint()).scale(0.5 / dense_norm(&pert).max(1e-300));
    let mut t = span * 10f64.powf(rng.random_range(-3.0..0.0));
    for _ in 0..60 {
        let bm = &am + pert.scale(t);
        let es = eigendecompose_matrix(&bm)?;
        if es.values[n - 1] < b && es.values[0] > a {
            return Ok((am, bm));
        }
        t *= 0.5;
    }
    Err(Error::Precondition("could not keep the perturbed spectrum inside the interval".into()))
}

struct Trial {
    index: usize,
    min_eig: f64,
    pair: (DMatrix<C64>, DMatrix<C64>),
}

fn run_trial(f: &ScalarFn, p: &SuiteParams, size: usize, trial: usize, index: usize) -> Result<Trial> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(p.seed, size, trial));
    let (am, bm) = sample_pair(&mut rng, size, p.a, p.b)?;
    let diff = f.apply(&bm)? - f.apply(&am)?;
    Ok(Trial { index, min_eig: min_eigenvalue(&diff), pair: (am, bm) })
}

/// Searches for `A ≼ B` with `f(A) ⋠ f(B)` over sizes `2..=n_max`, `trials` pairs per size.
pub fn matrix_monotone_suite(f: &ScalarFn, p: &SuiteParams) -> Result<MonotoneReport> {
    if p.n_max < 2 || !(p.a < p.b) {
        return Err(Error::Domain(format!("invalid suite parameters {p:?}")));
    }
    let tasks: Vec<(usize, usize)> = (0..p.trials).flat_map(|t| (2..=p.n_max).map(move |s| (s, t))).collect();
    let batch = if p.stop_on_violation { 512 } else { tasks.len().max(1) };
    let mut worst: Option<Trial> = None;
    let mut first_bad: Option<Trial> = None;
    let mut run = 0;
    for (chunk_no, chunk) in tasks.chunks(batch).enumerate() {
        let results: Vec<Result<Trial>> = chunk
            .par_iter()
            .enumerate()
            .map(|(k, &(s, t))| run_trial(f, p, s, t, chunk_no * batch + k))
            .collect();
        for r in results {
            let r = r?;
            run += 1;
            if r.min_eig < -p.tol && first_bad.as_ref().is_none_or(|b| r.index < b.index) {
                first_bad = Some(Trial { index: r.index, min_eig: r.min_eig, pair: r.pair.clone() });
            }
            if worst.as_ref().is_none_or(|w| r.min_eig < w.min_eig) {
                worst = Some(r);
            }
        }
        if p.stop_on_violation && first_bad.is_some() {
            break;
        }
    }
    let worst_min = worst.map(|w| w.min_eig).unwrap_or(f64::INFINITY);
    let counterexample = first_bad.map(|b| Counterexample {
        f_id: f.id(),
        size: b.pair.0.nrows(),
        a: Counterexample::pack(&b.pair.0),
        b: Counterexample::pack(&b.pair.1),
        violation: b.min_eig,
    });
    Ok(MonotoneReport {
        f_id: f.id(),
        trials_run: run,
        worst_min_eigenvalue: worst_min,
        violated: counterexample.is_some(),
        counterexample,
    })
}

/// Re-evaluates a stored counterexample: `min σ(f(B) − f(A))`.
pub fn replay_counterexample(f: &ScalarFn, c: &Counterexample) -> Result<f64> {
    let (a, b) = c.matrices()?;
    Ok(min_eigenvalue(&(f.apply(&b)? - f.apply(&a)?)))
}

/// Operator products whose boundedness is read off as a flat norm curve in the box radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundLemma {
    /// `Φ_3^{p/3}(⟨A⟩) Φ_3^{−p/3}(√c_d ⟨N⟩)`.
    PolylogBracket,
    /// `Φ_3^{p/3}(log(1+⟨A⟩)) Φ_3^{−p/3}(log(1+√c_d ⟨N⟩))`.
    PolylogLog,
    /// `log^p(1+⟨A⟩) log^{−p}(1+⟨N⟩)`.
    LogBracket,
    /// `log_2^p(⟨A⟩) log_2^{−p}(⟨N⟩)`.
    IteratedLog,
    /// `log_{m+1}^p(⟨A⟩) Π_{k≤m} log_k(⟨A⟩) · log_{m+1}^{−p}(⟨N⟩) Π_{k≤m} log_k^{−1}(⟨N⟩)`.
    IteratedLogProduct,
    /// `⟨A⟩^{1/2} log^p(1+⟨A⟩) · ⟨N⟩^{−1/2} log^{−p}(1+⟨N⟩)`.
    SqrtLogBracket,
    /// `⟨N⟩^{1/2} log^3(1+⟨N⟩) · ⟨A⟩^{−1/2} log^{−3}(1+⟨A⟩)`: grows with the box.
    Control,
}

impl BoundLemma {
    pub const ALL: [BoundLemma; 7] = [
        BoundLemma::PolylogBracket,
        BoundLemma::PolylogLog,
        BoundLemma::LogBracket,
        BoundLemma::IteratedLog,
        BoundLemma::IteratedLogProduct,
        BoundLemma::SqrtLogBracket,
        BoundLemma::Control,
    ];
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundednessCurve {
    pub lemma: BoundLemma,
    pub p: f64,
    pub box_radii: Vec<usize>,
    pub norms: Vec<f64>,
}

impl BoundednessCurve {
    /// `norm(r_last)/norm(r_mid)` with `r_mid` the radius at index `len/2`.
    pub fn flatness(&self) -> f64 {
        let n = self.norms.len();
        self.norms[n - 1] / self.norms[n / 2]
    }

    pub fn growth(&self) -> f64 {
        self.norms[self.norms.len() - 1] / self.norms[0]
    }
}

fn log_prod(m: usize, p: f64, sign: f64, x: f64) -> f64 {
    let y = bracket(x);
    let mut v = iterated_log(m + 1, y).powf(sign * p);
    for k in 0..=m {
        v *= iterated_log(k, y).powf(sign);
    }
    v
}

fn lemma_functions(lemma: BoundLemma, p: f64, m: usize, cd: f64) -> Result<(Box<dyn Fn(f64) -> Result<f64>>, Box<dyn Fn(f64) -> Result<f64>>)> {
    let s = cd.sqrt();
    type F = Box<dyn Fn(f64) -> Result<f64>>;
    let pair: (F, F) = match lemma {
        BoundLemma::PolylogBracket => (
            Box::new(move |x| Ok(polylog::phi(3, bracket(x))?.powf(p / 3.0))),
            Box::new(move |n| Ok(polylog::phi(3, s * bracket(n))?.powf(-p / 3.0))),
        ),
        BoundLemma::PolylogLog => (
            Box::new(move |x| Ok(polylog::phi(3, bracket(x).ln_1p())?.powf(p / 3.0))),
            Box::new(move |n| Ok(polylog::phi(3, (s * bracket(n)).ln_1p())?.powf(-p / 3.0))),
        ),
        BoundLemma::LogBracket => {
            (Box::new(move |x| Ok(bracket(x).ln_1p().powf(p))), Box::new(move |n| Ok(bracket(n).ln_1p().powf(-p))))
        }
        BoundLemma::IteratedLog => (
            Box::new(move |x| Ok(iterated_log(2, bracket(x)).powf(p))),
            Box::new(move |n| Ok(iterated_log(2, bracket(n)).powf(-p))),
        ),
        BoundLemma::IteratedLogProduct => {
            (Box::new(move |x| Ok(log_prod(m, p, 1.0, x))), Box::new(move |n| Ok(log_prod(m, p, -1.0, n))))
        }
        BoundLemma::SqrtLogBracket => (
            Box::new(move |x| Ok(bracket(x).sqrt() * bracket(x).ln_1p().powf(p))),
            Box::new(move |n| Ok(bracket(n).powf(-0.5) * bracket(n).ln_1p().powf(-p))),
        ),
        BoundLemma::Control => (
            Box::new(|x| Ok(bracket(x).powf(-0.5) * bracket(x).ln_1p().powi(-3))),
            Box::new(|n| Ok(bracket(n).sqrt() * bracket(n).ln_1p().powi(3))),
        ),
    };
    Ok(pair)
}

/// Norm of `f(A) g(|N|)` (or `g(|N|) f(A)` for the control) on each box.
pub fn boundedness_curve(lemma: BoundLemma, d: usize, radii: &[usize], p: f64, m: usize) -> Result<BoundednessCurve> {
    if radii.windows(2).any(|w| w[0] >= w[1]) || radii.is_empty() {
        return Err(Error::Domain("radii must be non-empty and ascending".into()));
    }
    let (fa, gn) = lemma_functions(lemma, p, m, c_d(d))?;
    let mut norms = Vec::with_capacity(radii.len());
    for &r in radii {
        let domain = BoxDomain::new(d, r)?;
        let es = eigendecompose(&build_dilation_generator(&domain))?;
        let mut dvals = Vec::with_capacity(es.dim());
        for &l in &es.values {
            dvals.push(C64::new(fa(l)?, 0.0));
        }
        let x = es.from_diagonal(&dvals);
        let mut nvals = Vec::with_capacity(domain.size());
        for s in domain.sites() {
            nvals.push(gn(crate::lattice::euclid(&s))?);
        }
        let prod = match lemma {
            BoundLemma::Control => {
                let mut y = x;
                for (i, nv) in nvals.iter().enumerate() {
                    y.row_mut(i).scale_mut(*nv);
                }
                y
            }
            _ => {
                let mut y = x;
                for (j, nv) in nvals.iter().enumerate() {
                    y.column_mut(j).scale_mut(*nv);
                }
                y
            }
        };
        norms.push(dense_norm(&prod));
    }
    Ok(BoundednessCurve { lemma, p, box_radii: radii.to_vec(), norms })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScalarBound {
    /// `f_s = (⟨t⟩/⟨x⟩)^{2s} y²/((t−x)²+y²)`, `0 ≤ s ≤ 1`.
    Power,
    /// `g_s = (log(1+⟨t⟩)/log(1+⟨x⟩))^{2p} f_s`, `0 < s < 1`.
    LogPower,
    /// `(w(t)/w(x))² f_s` with `w = log_2^p(⟨·⟩) log_1^p(⟨·⟩)`, `0 < s < 1`.
    IteratedLogPower,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarGrid {
    /// Points per axis.
    pub n: usize,
    pub x_max: f64,
    pub t_max: f64,
    /// `|y| ≤ c⟨x⟩`.
    pub c: f64,
}

impl ScalarGrid {
    pub fn refined(&self) -> ScalarGrid {
        ScalarGrid { n: 2 * self.n - 1, ..*self }
    }
}

/// The scalar function whose supremum bounds `‖F(A)(A − x − iy)^{−1}‖²·y²/F(x)²`.
pub fn scalar_bound_fn(kind: ScalarBound, s: f64, p: f64, x: f64, y: f64, t: f64) -> f64 {
    let bt = bracket(t);
    let bx = bracket(x);
    let base = (bt / bx).powf(2.0 * s) * y * y / ((t - x) * (t - x) + y * y);
    match kind {
        ScalarBound::Power => base,
        ScalarBound::LogPower => (bt.ln_1p() / bx.ln_1p()).powf(2.0 * p) * base,
        ScalarBound::IteratedLogPower => {
            let w = |b: f64| b.ln_1p().ln_1p().powf(p) * b.ln_1p().powf(p);
            (w(bt) / w(bx)).powi(2) * base
        }
    }
}

/// Supremum over a tensor grid: `x, t` sinh-spaced, `y = c⟨x⟩·v` with `v` log-spaced in `[1e−6, 1]`.
pub fn scalar_bound_check(kind: ScalarBound, s: f64, p: f64, grid: &ScalarGrid) -> Result<f64> {
    let ok = match kind {
        ScalarBound::Power => (0.0..=1.0).contains(&s),
        _ => s > 0.0 && s < 1.0,
    };
    if !ok || grid.n < 2 {
        return Err(Error::Domain(format!("s = {s} out of range for {kind:?}")));
    }
    let sinh_grid = |max: f64| -> Vec<f64> {
        let a = max.asinh();
        (0..grid.n).map(|k| (-a + 2.0 * a * k as f64 / (grid.n - 1) as f64).sinh()).collect()
    };
    let xs = sinh_grid(grid.x_max);
    let ts = sinh_grid(grid.t_max);
    let vs: Vec<f64> = (0..grid.n).map(|k| 10f64.powf(-6.0 + 6.0 * k as f64 / (grid.n - 1) as f64)).collect();
    let sup = xs
        .par_iter()
        .map(|&x| {
            let mut best = 0.0f64;
            for &v in &vs {
                let y = grid.c * bracket(x) * v;
                for &t in &ts {
                    best = best.max(scalar_bound_fn(kind, s, p, x, y, t));
                }
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    if !sup.is_finite() {
        return Err(Error::NonFinite(sup));
    }
    Ok(sup)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerOrderRow {
    pub n: u32,
    pub min_eigenvalue: f64,
}

/// Exploratory: `min σ(𝐍^n − 𝐀^n)` on the interior, with `𝐀 = ⟨A⟩`, `𝐍 = √c_d⟨N⟩`.
/// Nothing is asserted about the sign.
pub fn power_order_experiment(d: usize, radius: usize, powers: &[u32]) -> Result<Vec<PowerOrderRow>> {
    let domain = BoxDomain::new(d, radius)?;
    let n = domain.size();
    let mut a2 = generator_square(&domain)?;
    for i in 0..n {
        a2[(i, i)] += 1.0;
    }
    let es = eigendecompose_matrix(&a2)?;
    let nb: Vec<f64> = position_bracket_sq(&domain).into_iter().map(|v| (c_d(d) * v).sqrt()).collect();
    let q = coordinate_subspace(n, &domain.interior(2));
    powers
        .iter()
        .map(|&k| {
            let ak = es.apply_function(|x| x.max(0.0).powf(k as f64 / 2.0))?;
            let nk = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n, nb.iter().map(|v| C64::new(v.powi(k as i32), 0.0))));
            let r = form_report(&ak, &nk, Some(&q), 0.0)?;
            Ok(PowerOrderRow { n: k, min_eigenvalue: r.min_eigenvalue_of_difference })
        })
        .collect()
}

/// Position operator `|N|` as a Hermitian lattice operator, used by weight transfers.
pub fn abs_position(domain: &BoxDomain) -> Result<LatticeOperator> {
    let d: Vec<f64> = domain.sites().map(|s| crate::lattice::euclid(&s)).collect();
    LatticeOperator::new_hermitian(*domain, crate::sparse::CsrMatrix::diagonal(&d))
}
